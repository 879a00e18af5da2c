//! The pseudo-spline refinement symbol `H0^{(z,l)}` and the polynomials it is
//! built from.
//!
//! Every evaluation goes through the pair `(sin^2 pi g, cos^2 pi g)` rather than
//! through `cos^{2z}`, so that complex powers are only ever taken of
//! nonnegative reals and no branch choice is involved.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{complex_binomial, pow_positive, real_pow_complex, ComplexScalar};

/// Parameters `(z, l, u)` of a (possibly shifted) pseudo-spline.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoSplineOrder {
    z: ComplexScalar,
    alpha: f64,
    ell: u32,
    shift_u: f64,
    extended: bool,
    /// binom(z + l, k), k = 0..=l
    def_coeffs: Vec<ComplexScalar>,
    /// binom(z - 1 + k, k), k = 0..=l
    taylor_coeffs: Vec<ComplexScalar>,
}

/// Plain-data form of an order, used for (de)serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderSpec {
    pub z_re: f64,
    pub z_im: f64,
    pub ell: u32,
    #[serde(default)]
    pub u: f64,
}

impl PseudoSplineOrder {
    /// Validates `Re z >= 1` and `0 <= l <= floor(Re z - 1/2)`.
    pub fn new(z: ComplexScalar, ell: u32, shift_u: f64) -> Result<Self> {
        Self::build(z, ell, shift_u, false)
    }

    /// Like [`PseudoSplineOrder::new`] but accepts `l > floor(Re z - 1/2)`.
    /// Outside that range the partition bound is not guaranteed and has to be
    /// checked numerically (the framelet bank does so and fails on violation).
    pub fn new_extended(z: ComplexScalar, ell: u32, shift_u: f64) -> Result<Self> {
        Self::build(z, ell, shift_u, true)
    }

    fn build(z: ComplexScalar, ell: u32, shift_u: f64, allow_extended: bool) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite() && shift_u.is_finite()) {
            return Err(Error::InvalidOrder("parameters must be finite".into()));
        }
        let alpha = z.re;
        if alpha < 1.0 {
            return Err(Error::InvalidOrder(format!(
                "Re z = {alpha} but Re z >= 1 is required"
            )));
        }
        let max_ell = Self::max_ell_for(alpha);
        let extended = ell > max_ell;
        if extended && !allow_extended {
            return Err(Error::InvalidOrder(format!(
                "ell = {ell} violates ell <= floor(alpha - 1/2) = {max_ell} (alpha = Re z = {alpha})"
            )));
        }
        let def_coeffs = (0..=ell)
            .map(|k| complex_binomial(z + ell as f64, k))
            .collect::<Result<Vec<_>>>()?;
        let taylor_coeffs = (0..=ell)
            .map(|k| complex_binomial(z - 1.0 + k as f64, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            z,
            alpha,
            ell,
            shift_u,
            extended,
            def_coeffs,
            taylor_coeffs,
        })
    }

    /// Real order `alpha`, unshifted.
    pub fn fractional(alpha: f64, ell: u32) -> Result<Self> {
        Self::new(ComplexScalar::new(alpha, 0.0), ell, 0.0)
    }

    /// Rebuilds a serialized order; the `l` range is not re-checked since the
    /// order was validated when it was first created.
    pub fn from_spec(spec: &OrderSpec) -> Result<Self> {
        Self::new_extended(ComplexScalar::new(spec.z_re, spec.z_im), spec.ell, spec.u)
    }

    pub fn spec(&self) -> OrderSpec {
        OrderSpec {
            z_re: self.z.re,
            z_im: self.z.im,
            ell: self.ell,
            u: self.shift_u,
        }
    }

    /// Largest admissible `l` for a given `alpha`, i.e. `floor(alpha - 1/2)`.
    pub fn max_ell_for(alpha: f64) -> u32 {
        (alpha - 0.5).floor().max(0.0) as u32
    }

    /// Same `(z, l)` with a different shift.
    pub fn with_shift(&self, shift_u: f64) -> Result<Self> {
        Self::build(self.z, self.ell, shift_u, self.extended)
    }

    /// Same `z` and shift, different `l`.
    pub fn with_ell(&self, ell: u32) -> Result<Self> {
        Self::build(self.z, ell, self.shift_u, self.extended)
    }

    /// `l` lies beyond `floor(Re z - 1/2)`.
    pub fn is_extended(&self) -> bool {
        self.extended
    }

    pub fn z(&self) -> ComplexScalar {
        self.z
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn shift_u(&self) -> f64 {
        self.shift_u
    }

    pub fn is_fractional(&self) -> bool {
        self.z.im == 0.0
    }

    /// `binom(z + l, k)` for `k = 0..=l`.
    pub fn definition_coeffs(&self) -> &[ComplexScalar] {
        &self.def_coeffs
    }

    /// `binom(z - 1 + k, k)` for `k = 0..=l`.
    pub fn taylor_coeffs(&self) -> &[ComplexScalar] {
        &self.taylor_coeffs
    }

    /// `p(x)` from the split `x = s`, `1 - x = c`.
    fn p_split(&self, s: f64, c: f64) -> ComplexScalar {
        let ell = self.ell as i32;
        self.def_coeffs
            .iter()
            .enumerate()
            .map(|(k, b)| b * (s.powi(k as i32) * c.powi(ell - k as i32)))
            .sum()
    }

    /// `q = c^z p` with `s + c = 1`, both nonnegative.
    pub(crate) fn q_split(&self, s: f64, c: f64) -> ComplexScalar {
        pow_positive(c, self.z) * self.p_split(s, c)
    }
}

impl std::fmt::Display for PseudoSplineOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "z={}", format_complex(self.z))?;
        write!(f, ", ell={}", self.ell)?;
        if self.shift_u != 0.0 {
            write!(f, ", u={}", self.shift_u)?;
        }
        Ok(())
    }
}

/// Formats `a+bi` / `a-bi`, the syntax accepted by [`parse_complex`].
pub fn format_complex(z: ComplexScalar) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// Parses `a`, `a+bi`, `a-bi`, `a+i`, `bi` (whitespace ignored).
pub fn parse_complex(text: &str) -> Result<ComplexScalar> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::Parse(format!("cannot parse complex number {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let Some(body) = s.strip_suffix('i').or_else(|| s.strip_suffix('j')) else {
        return s.parse::<f64>().map(|re| ComplexScalar::new(re, 0.0)).map_err(|_| bad());
    };
    // split at the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let mut split = None;
    for i in (1..bytes.len()).rev() {
        if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
            break;
        }
    }
    let parse_im = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => t.parse::<f64>().map_err(|_| bad()),
        }
    };
    let (re, im) = match split {
        Some(i) => (
            body[..i].parse::<f64>().map_err(|_| bad())?,
            parse_im(&body[i..])?,
        ),
        None => (0.0, parse_im(body)?),
    };
    if !(re.is_finite() && im.is_finite()) {
        return Err(bad());
    }
    Ok(ComplexScalar::new(re, im))
}

/// Which algebraic form of `p` to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PForm {
    /// `sum_k binom(z+l, k) x^k (1-x)^(l-k)`
    Definition,
    /// `sum_k binom(z-1+k, k) x^k`
    Taylor,
}

fn check_unit_interval(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("x = {x} is outside [0, 1]")))
    }
}

pub fn eval_p(order: &PseudoSplineOrder, x: f64, form: PForm) -> Result<ComplexScalar> {
    check_unit_interval(x)?;
    Ok(match form {
        PForm::Definition => order.p_split(x, 1.0 - x),
        PForm::Taylor => order
            .taylor_coeffs
            .iter()
            .rev()
            .fold(ComplexScalar::new(0.0, 0.0), |acc, b| acc * x + b),
    })
}

/// `q(x) = (1-x)^z p(x)`.
pub fn eval_q(order: &PseudoSplineOrder, x: f64) -> Result<ComplexScalar> {
    check_unit_interval(x)?;
    Ok(real_pow_complex(1.0 - x, order.z)? * order.p_split(x, 1.0 - x))
}

/// Closed form `q'(x) = -(z+l) binom(z-1+l, l) x^l (1-x)^(z-1)` on `[0, 1)`.
pub fn eval_q_prime(order: &PseudoSplineOrder, x: f64) -> Result<ComplexScalar> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} is outside [0, 1)")));
    }
    let ell = order.ell;
    let lead = (order.z + ell as f64) * order.taylor_coeffs[ell as usize];
    let factor = real_pow_complex(1.0 - x, order.z - 1.0)?;
    Ok(-lead * x.powi(ell as i32) * factor)
}

/// `1 - q(x) = (1-x)^z sum_{k>l} binom(z-1+k, k) x^k` on `[0, 1/2]`, free of
/// the cancellation in the direct difference for small `x`.
pub fn eval_one_minus_q(order: &PseudoSplineOrder, x: f64) -> Result<ComplexScalar> {
    if !(0.0..=0.5).contains(&x) {
        return Err(Error::Domain(format!("x = {x} is outside [0, 1/2]")));
    }
    let ell = order.ell;
    let mut coeff = order.taylor_coeffs[ell as usize];
    let mut power = x.powi(ell as i32);
    let mut sum = ComplexScalar::new(0.0, 0.0);
    for k in ell + 1..ell + 400 {
        coeff *= (order.z - 1.0 + k as f64) / k as f64;
        power *= x;
        let term = coeff * power;
        sum += term;
        if term.norm() <= 1e-17 * sum.norm() {
            break;
        }
    }
    Ok(real_pow_complex(1.0 - x, order.z)? * sum)
}

/// `1 - |H0(gamma)|^2 = 2 Re T - |T|^2` with `T = 1 - q(sin^2 pi gamma)`,
/// accurate near `gamma = 0` where `|H0| -> 1`. Requires `|gamma| <= 1/4`.
pub fn one_minus_h0_sq(order: &PseudoSplineOrder, gamma: f64) -> Result<f64> {
    if gamma.abs() > 0.25 {
        return Err(Error::Domain(format!("|gamma| = {} exceeds 1/4", gamma.abs())));
    }
    let t = eval_one_minus_q(order, (PI * gamma).sin().powi(2))?;
    Ok(2.0 * t.re - t.norm_sqr())
}

/// Reduces `gamma` to the representative in `[-1/2, 1/2)`.
pub fn reduce_to_torus(gamma: f64) -> f64 {
    let r = gamma - gamma.round();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// `H0^{(z,l,u)}(gamma) = e^{-2 pi i u g} H0^{(z,l)}(gamma)` with `g` the
/// torus representative of `gamma`.
pub fn eval_h0(order: &PseudoSplineOrder, gamma: f64) -> ComplexScalar {
    let g = reduce_to_torus(gamma);
    let (sin, cos) = (PI * g).sin_cos();
    let value = order.q_split(sin * sin, cos * cos);
    if order.shift_u == 0.0 {
        value
    } else {
        value * ComplexScalar::from_polar(1.0, -2.0 * PI * order.shift_u * g)
    }
}

/// Uniform grid `g_j = j/N - 1/2`, `j = 0..N`, on the torus `[-1/2, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TorusGrid {
    resolution: usize,
}

impl TorusGrid {
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 2 || !resolution.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "resolution {resolution} must be a power of two >= 2"
            )));
        }
        Ok(Self { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn gamma(&self, j: usize) -> f64 {
        j as f64 / self.resolution as f64 - 0.5
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.resolution).map(|j| self.gamma(j))
    }

    /// Index of `g_j + 1/2` (mod 1).
    pub fn half_shift(&self, j: usize) -> usize {
        (j + self.resolution / 2) % self.resolution
    }

    /// Index of `g = 0`.
    pub fn origin(&self) -> usize {
        self.resolution / 2
    }
}

/// Samples of a 1-periodic symbol on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSymbol {
    pub order: PseudoSplineOrder,
    pub grid: TorusGrid,
    pub values: Vec<ComplexScalar>,
}

impl SampledSymbol {
    /// Value at `g_j`, indices taken modulo the resolution.
    pub fn at(&self, j: usize) -> ComplexScalar {
        self.values[j % self.grid.resolution()]
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, ComplexScalar)> + '_ {
        self.grid.points().zip(self.values.iter().copied())
    }
}

pub fn sample_h0(order: &PseudoSplineOrder, grid: TorusGrid) -> SampledSymbol {
    let values = grid.points().map(|g| eval_h0(order, g)).collect();
    SampledSymbol {
        order: order.clone(),
        grid,
        values,
    }
}

/// Closed-form lower bound `theta = 2^{1-2 alpha-2l} |sum_k binom(z+l, k)|^2`,
/// the value of the partition function at `x = 1/2`.
pub fn theta_bound(order: &PseudoSplineOrder) -> f64 {
    let sum: ComplexScalar = order.def_coeffs.iter().sum();
    let exponent = 1.0 - 2.0 * order.alpha - 2.0 * order.ell as f64;
    exponent.exp2() * sum.norm_sqr()
}

/// Extrema of `|H0(g)|^2 + |H0(g + 1/2)|^2` over a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartitionExtrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

/// Partition function sampled on the grid, using index-exact half shifts.
pub fn partition_samples(symbol: &SampledSymbol) -> Vec<f64> {
    let grid = symbol.grid;
    (0..grid.resolution())
        .map(|j| symbol.values[j].norm_sqr() + symbol.values[grid.half_shift(j)].norm_sqr())
        .collect()
}

/// Ties are resolved in favour of the first grid index.
pub fn partition_extrema(order: &PseudoSplineOrder, grid: TorusGrid) -> Result<PartitionExtrema> {
    if grid.resolution() < 4 {
        return Err(Error::InvalidGrid("partition extrema need resolution >= 4".into()));
    }
    let symbol = sample_h0(order, grid);
    let samples = partition_samples(&symbol);
    let mut ext = PartitionExtrema {
        min: f64::INFINITY,
        argmin: 0.0,
        max: f64::NEG_INFINITY,
        argmax: 0.0,
    };
    for (j, &v) in samples.iter().enumerate() {
        if v < ext.min {
            ext.min = v;
            ext.argmin = grid.gamma(j);
        }
        if v > ext.max {
            ext.max = v;
            ext.argmax = grid.gamma(j);
        }
    }
    Ok(ext)
}

/// Empirical constant `C = max_g |H0(g) - 1| / |g|^eps` over the grid
/// (excluding `g = 0`), with `eps = 1` unshifted and `eps = 1/2` shifted.
pub fn lipschitz_check(order: &PseudoSplineOrder, grid: TorusGrid) -> f64 {
    let eps = if order.shift_u == 0.0 { 1.0 } else { 0.5 };
    grid.points()
        .filter(|g| *g != 0.0)
        .map(|g| (eval_h0(order, g) - 1.0).norm() / g.abs().powf(eps))
        .fold(0.0, f64::max)
}
