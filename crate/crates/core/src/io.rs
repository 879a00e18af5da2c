//! CSV and JSON shapes for symbols, profiles, banks and signals.
//!
//! CSV files always carry the header `<x>,re,im,abs` where `<x>` is `gamma`
//! for frequency data and `t` for time or index data. Numbers are written in
//! shortest round-trip form, so parsing a written file restores every value
//! bit for bit.

use serde::{Deserialize, Serialize};

use crate::cascade::{CascadeDiagnostics, FourierProfile, TimeProfile};
use crate::error::{Error, Result};
use crate::frames::FilterCoeffs;
use crate::special::ComplexScalar;
use crate::symbol::{OrderSpec, PseudoSplineOrder, SampledSymbol, TorusGrid};

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn complex_csv<I>(x_name: &str, rows: I) -> String
where
    I: IntoIterator<Item = (f64, ComplexScalar)>,
{
    let mut out = format!("{x_name},re,im,abs\n");
    for (x, v) in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(x),
            fmt_f64(v.re),
            fmt_f64(v.im),
            fmt_f64(v.norm())
        ));
    }
    out
}

/// Parses `<x>,re,im[,abs]` rows after a mandatory header line.
pub fn parse_complex_csv(text: &str) -> Result<Vec<(f64, ComplexScalar)>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty CSV".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() < 3 || cols[1] != "re" || cols[2] != "im" {
        return Err(Error::Parse(format!(
            "CSV header must be <x>,re,im,abs, got {header:?}"
        )));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() < 3 {
                return Err(Error::Parse(format!("line {}: expected at least 3 fields", i + 2)));
            }
            let num = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad number {s:?}", i + 2)))
            };
            Ok((num(fields[0])?, ComplexScalar::new(num(fields[1])?, num(fields[2])?)))
        })
        .collect()
}

fn pairs(values: &[ComplexScalar]) -> Vec<[f64; 2]> {
    values.iter().map(|v| [v.re, v.im]).collect()
}

fn unpairs(values: &[[f64; 2]]) -> Vec<ComplexScalar> {
    values.iter().map(|[re, im]| ComplexScalar::new(*re, *im)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolJson {
    pub order: OrderSpec,
    pub resolution: usize,
    pub values: Vec<[f64; 2]>,
}

impl SymbolJson {
    pub fn from_symbol(symbol: &SampledSymbol) -> Self {
        Self {
            order: symbol.order.spec(),
            resolution: symbol.grid.resolution(),
            values: pairs(&symbol.values),
        }
    }

    pub fn into_symbol(self) -> Result<SampledSymbol> {
        let grid = TorusGrid::new(self.resolution)?;
        if self.values.len() != self.resolution {
            return Err(Error::Parse(format!(
                "{} values for resolution {}",
                self.values.len(),
                self.resolution
            )));
        }
        Ok(SampledSymbol {
            order: PseudoSplineOrder::from_spec(&self.order)?,
            grid,
            values: unpairs(&self.values),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileMetadata<'a> {
    pub level_m: u32,
    pub window: f64,
    pub step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<&'a CascadeDiagnostics>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProfileJson<'a> {
    pub order: OrderSpec,
    pub resolution: usize,
    pub values: Vec<[f64; 2]>,
    pub metadata: ProfileMetadata<'a>,
}

impl<'a> ProfileJson<'a> {
    pub fn new(profile: &FourierProfile, diagnostics: Option<&'a CascadeDiagnostics>) -> Self {
        Self {
            order: profile.order().spec(),
            resolution: profile.len(),
            values: pairs(profile.values()),
            metadata: ProfileMetadata {
                level_m: profile.level(),
                window: profile.window(),
                step: profile.step(),
                diagnostics,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMetadata {
    pub half_width: f64,
    pub step: f64,
    pub tail_error_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeProfileJson {
    pub order: OrderSpec,
    pub resolution: usize,
    pub values: Vec<[f64; 2]>,
    pub metadata: TimeMetadata,
}

impl TimeProfileJson {
    pub fn new(profile: &TimeProfile) -> Self {
        Self {
            order: profile.order.spec(),
            resolution: profile.values.len(),
            values: pairs(&profile.values),
            metadata: TimeMetadata {
                half_width: profile.half_width,
                step: profile.step,
                tail_error_estimate: profile.tail_error_estimate,
            },
        }
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Error::Parse(e.to_string()))
}

pub fn bank_from_json(text: &str) -> Result<FilterCoeffs> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("bank JSON: {e}")))
}

pub fn symbol_from_json(text: &str) -> Result<SampledSymbol> {
    serde_json::from_str::<SymbolJson>(text)
        .map_err(|e| Error::Parse(format!("symbol JSON: {e}")))?
        .into_symbol()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::sample_h0;
    use proptest::prelude::*;

    #[test]
    fn symbol_round_trips() {
        let order = PseudoSplineOrder::new(ComplexScalar::new(3.2, 1.0), 2, 0.5).unwrap();
        let symbol = sample_h0(&order, TorusGrid::new(64).unwrap());
        let json = to_json_string(&SymbolJson::from_symbol(&symbol)).unwrap();
        assert_eq!(symbol_from_json(&json).unwrap(), symbol);

        let csv = complex_csv("gamma", symbol.rows());
        assert!(csv.starts_with("gamma,re,im,abs\n"));
        let rows = parse_complex_csv(&csv).unwrap();
        assert_eq!(rows.len(), 64);
        for ((g, v), (g2, v2)) in rows.iter().zip(symbol.rows()) {
            assert_eq!(g.to_bits(), g2.to_bits());
            assert_eq!(v.re.to_bits(), v2.re.to_bits());
            assert_eq!(v.im.to_bits(), v2.im.to_bits());
        }
    }

    #[test]
    fn bank_json_shape() {
        let order = PseudoSplineOrder::new(ComplexScalar::new(2.0, 0.0), 0, 0.0).unwrap();
        let bank = crate::frames::build_bank(&order, TorusGrid::new(64).unwrap()).unwrap();
        let json = to_json_string(&bank.filters).unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        for key in ["order", "resolution", "truncation_eps", "coeffs"] {
            assert!(value.get(key).is_some(), "{key}");
        }
        for n in ["0", "1", "2", "3"] {
            assert!(value["coeffs"][n]["offset"].is_i64());
            assert!(value["coeffs"][n]["values"][0].as_array().unwrap().len() == 2);
        }
        assert_eq!(bank_from_json(&json).unwrap(), bank.filters);
        let broken = json.replace("\"3\"", "\"7\"");
        assert!(bank_from_json(&broken).is_err());
    }

    #[test]
    fn csv_errors() {
        assert!(parse_complex_csv("").is_err());
        assert!(parse_complex_csv("a,b,c\n1,2,3\n").is_err());
        assert!(parse_complex_csv("t,re,im\n1,2\n").is_err());
        assert!(parse_complex_csv("t,re,im\n1,x,3\n").is_err());
    }

    proptest! {
        #[test]
        fn shortest_format_is_exact(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
