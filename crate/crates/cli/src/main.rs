use clap::Parser;

use pseudospline_cli::commands::execute;
use pseudospline_cli::Cli;

fn main() {
    let cli = Cli::parse();
    let dump = cli.dump_config;
    let cfg = match cli.resolve() {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    };
    if dump {
        print!("{}", cfg.to_json());
        return;
    }
    std::process::exit(execute(&cfg));
}
