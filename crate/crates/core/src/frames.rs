//! Three-generator Parseval framelet bank from the unitary extension principle:
//!
//! ```text
//! eta(g) = 1 - |H0(g)|^2 - |H0(g + 1/2)|^2,   sigma = +sqrt(eta)
//! H1(g)  = e^{2 pi i g} conj(H0(g + 1/2))
//! H2(g)  = sigma(g) / sqrt(2)
//! H3(g)  = e^{2 pi i g} sigma(g) / sqrt(2)
//! ```
//!
//! plus Fourier-coefficient extraction and a periodic one-level (and
//! multi-level) analysis/synthesis pair that is exactly adjoint.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::cascade::{FourierProfile, TimeProfile};
use crate::error::{Error, Result};
use crate::special::ComplexScalar;
use crate::symbol::{eval_h0, sample_h0, OrderSpec, PseudoSplineOrder, SampledSymbol, TorusGrid};

/// Negative `eta` above this is rounding noise and is clamped to zero.
pub const ETA_CLAMP: f64 = 1e-9;

pub const DEFAULT_TRUNCATION_EPS: f64 = 1e-10;

fn clamp_eta(raw: f64) -> Result<f64> {
    if raw < -ETA_CLAMP {
        Err(Error::Consistency(format!(
            "eta = {raw:.3e} is negative, the partition bound |H0(g)|^2 + |H0(g+1/2)|^2 <= 1 fails"
        )))
    } else {
        Ok(raw.max(0.0))
    }
}

pub fn eval_eta(order: &PseudoSplineOrder, gamma: f64) -> Result<f64> {
    clamp_eta(1.0 - eval_h0(order, gamma).norm_sqr() - eval_h0(order, gamma + 0.5).norm_sqr())
}

/// Nonnegative square root of `eta`.
pub fn eval_sigma(order: &PseudoSplineOrder, gamma: f64) -> Result<f64> {
    eval_eta(order, gamma).map(f64::sqrt)
}

/// Closed-form `H_n(gamma)`, `n = 0..=3`.
pub fn eval_hn(order: &PseudoSplineOrder, n: usize, gamma: f64) -> Result<ComplexScalar> {
    let rot = ComplexScalar::from_polar(1.0, 2.0 * PI * gamma);
    Ok(match n {
        0 => eval_h0(order, gamma),
        1 => rot * eval_h0(order, gamma + 0.5).conj(),
        2 => ComplexScalar::new(eval_sigma(order, gamma)? * FRAC_1_SQRT_2, 0.0),
        3 => rot * (eval_sigma(order, gamma)? * FRAC_1_SQRT_2),
        _ => return Err(Error::Domain(format!("filter index {n} is not in 0..=3"))),
    })
}

/// Finite two-sided sequence `c_k`, `k = offset .. offset + len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffSeq {
    pub offset: i64,
    #[serde(with = "complex_pairs")]
    pub values: Vec<ComplexScalar>,
}

impl CoeffSeq {
    pub fn iter(&self) -> impl Iterator<Item = (i64, ComplexScalar)> + '_ {
        self.values.iter().enumerate().map(|(i, v)| (self.offset + i as i64, *v))
    }

    pub fn get(&self, k: i64) -> ComplexScalar {
        usize::try_from(k - self.offset)
            .ok()
            .and_then(|i| self.values.get(i).copied())
            .unwrap_or_default()
    }

    /// `sum_k c_k e^{2 pi i k g}`.
    pub fn eval(&self, gamma: f64) -> ComplexScalar {
        self.iter()
            .map(|(k, c)| c * ComplexScalar::from_polar(1.0, 2.0 * PI * k as f64 * gamma))
            .sum()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|c| c.norm()).sum()
    }
}

/// Extracted coefficients with their error bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedCoeffs {
    pub seq: CoeffSeq,
    /// l2 norm of the discarded coefficients.
    pub truncation_eps: f64,
    /// l2 norm of the coefficients with N/4 <= |k| < N/2, a proxy for the
    /// aliased mass beyond the Nyquist index.
    pub aliasing_estimate: f64,
}

/// Coefficients of the four filters, the data the periodic transform needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCoeffs {
    pub order: OrderSpec,
    pub resolution: usize,
    /// Largest per-filter truncation error.
    pub truncation_eps: f64,
    /// Written as an object keyed by the filter index `"0"`..`"3"`.
    #[serde(with = "coeff_map")]
    pub coeffs: [CoeffSeq; 4],
}

/// The four sampled symbols and their coefficient sequences.
#[derive(Debug, Clone)]
pub struct FrameletBank {
    pub order: PseudoSplineOrder,
    pub grid: TorusGrid,
    pub symbols: [SampledSymbol; 4],
    pub filters: FilterCoeffs,
    pub truncation_eps: [f64; 4],
    pub aliasing_estimate: [f64; 4],
}

fn sample_bank_symbols(order: &PseudoSplineOrder, grid: TorusGrid) -> Result<[SampledSymbol; 4]> {
    let h0 = sample_h0(order, grid);
    let n = grid.resolution();
    let mut h1 = Vec::with_capacity(n);
    let mut h2 = Vec::with_capacity(n);
    let mut h3 = Vec::with_capacity(n);
    for j in 0..n {
        let shifted = h0.values[grid.half_shift(j)];
        let rot = ComplexScalar::from_polar(1.0, 2.0 * PI * grid.gamma(j));
        let sigma = clamp_eta(1.0 - h0.values[j].norm_sqr() - shifted.norm_sqr())?.sqrt();
        h1.push(rot * shifted.conj());
        h2.push(ComplexScalar::new(sigma * FRAC_1_SQRT_2, 0.0));
        h3.push(rot * (sigma * FRAC_1_SQRT_2));
    }
    let wrap = |values| SampledSymbol {
        order: order.clone(),
        grid,
        values,
    };
    Ok([h0.clone(), wrap(h1), wrap(h2), wrap(h3)])
}

/// Bank with the default truncation `eps = 1e-10` and `max_k = N/2`.
pub fn build_bank(order: &PseudoSplineOrder, grid: TorusGrid) -> Result<FrameletBank> {
    build_bank_with(order, grid, grid.resolution() / 2, DEFAULT_TRUNCATION_EPS)
}

pub fn build_bank_with(
    order: &PseudoSplineOrder,
    grid: TorusGrid,
    max_k: usize,
    eps: f64,
) -> Result<FrameletBank> {
    if grid.resolution() < 64 {
        return Err(Error::InvalidGrid(format!(
            "framelet banks need a grid resolution >= 64, got {}",
            grid.resolution()
        )));
    }
    let symbols = sample_bank_symbols(order, grid)?;
    let mut extracted = Vec::with_capacity(4);
    for symbol in &symbols {
        extracted.push(extract_symbol_coeffs(symbol, max_k, eps)?);
    }
    let truncation_eps = [0, 1, 2, 3].map(|n| extracted[n].truncation_eps);
    let aliasing_estimate = [0, 1, 2, 3].map(|n| extracted[n].aliasing_estimate);
    let coeffs = [0, 1, 2, 3].map(|n| extracted[n].seq.clone());
    let filters = FilterCoeffs {
        order: order.spec(),
        resolution: grid.resolution(),
        truncation_eps: truncation_eps.iter().copied().fold(0.0, f64::max),
        coeffs,
    };
    Ok(FrameletBank {
        order: order.clone(),
        grid,
        symbols,
        filters,
        truncation_eps,
        aliasing_estimate,
    })
}

impl FrameletBank {
    /// `max_g |sum_n |H_n(g)|^2 - 1|` on the grid.
    pub fn diagonal_defect(&self) -> f64 {
        (0..self.grid.resolution())
            .map(|j| (self.symbols.iter().map(|s| s.values[j].norm_sqr()).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_g |sum_n H_n(g) conj(H_n(g + 1/2))|` on the grid.
    pub fn off_diagonal_defect(&self) -> f64 {
        (0..self.grid.resolution())
            .map(|j| {
                let k = self.grid.half_shift(j);
                self.symbols
                    .iter()
                    .map(|s| s.values[j] * s.values[k].conj())
                    .sum::<ComplexScalar>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `c_k = (1/N) sum_j H(g_j) e^{-2 pi i k g_j}` for `k` in `[-N/2, N/2)`.
fn dft_coeffs(symbol: &SampledSymbol) -> Vec<(i64, ComplexScalar)> {
    let n = symbol.grid.resolution();
    let mut buf = symbol.values.clone();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // g_j = j/N - 1/2 contributes the factor e^{i pi k} = (-1)^k
    let half = n as i64 / 2;
    (-half..half)
        .map(|k| {
            let v = buf[k.rem_euclid(n as i64) as usize] / n as f64;
            (k, if k % 2 == 0 { v } else { -v })
        })
        .collect()
}

fn extract_symbol_coeffs(symbol: &SampledSymbol, max_k: usize, eps: f64) -> Result<ExtractedCoeffs> {
    let n = symbol.grid.resolution();
    if 2 * max_k > n {
        return Err(Error::Resolution(format!(
            "max_k = {max_k} needs a grid of at least {} points, got {n}",
            2 * max_k
        )));
    }
    let all = dft_coeffs(symbol);
    let half = n as i64 / 2;
    let aliasing_estimate = all
        .iter()
        .filter(|(k, _)| k.abs() >= half / 2)
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    // tail[K] = sum over |k| > K of |c_k|^2, accumulated from the outside in
    let mut tail = vec![0.0; half as usize + 1];
    for kk in (0..half as usize).rev() {
        let outer = kk as i64 + 1;
        let mut mass = all[(half - outer) as usize].1.norm_sqr();
        if outer < half {
            mass += all[(half + outer) as usize].1.norm_sqr();
        }
        tail[kk] = tail[kk + 1] + mass;
    }
    let cap = max_k.min(half as usize);
    let Some(kmax) = (0..=cap).find(|&k| tail[k].sqrt() <= eps) else {
        return Err(Error::Tolerance(format!(
            "truncation error {:.3e} at max_k = {max_k} exceeds eps = {eps:.3e}",
            tail[cap].sqrt()
        )));
    };
    let kmax = kmax as i64;
    let hi = kmax.min(half - 1);
    let values = (-kmax..=hi).map(|k| all[(k + half) as usize].1).collect();
    Ok(ExtractedCoeffs {
        seq: CoeffSeq {
            offset: -kmax,
            values,
        },
        truncation_eps: tail[kmax as usize].sqrt(),
        aliasing_estimate,
    })
}

/// Fourier coefficients `c_{k,n}` of `H_n`, truncated to the smallest `|k| <= K`
/// whose discarded l2 tail is at most `eps`.
pub fn extract_coeffs(bank: &FrameletBank, n: usize, max_k: usize, eps: f64) -> Result<ExtractedCoeffs> {
    let symbol = bank
        .symbols
        .get(n)
        .ok_or_else(|| Error::Domain(format!("filter index {n} is not in 0..=3")))?;
    extract_symbol_coeffs(symbol, max_k, eps)
}

/// `psi_n(g) = H_n(g/2) phi(g/2)`, with `H_n` in closed form and `phi` by the
/// direct cascade product at the profile's level.
pub fn framelet_hat(
    bank: &FrameletBank,
    profile: &FourierProfile,
    n: usize,
    gamma: f64,
) -> Result<ComplexScalar> {
    if !(1..=3).contains(&n) {
        return Err(Error::Domain(format!("framelet index {n} is not in 1..=3")));
    }
    let half = gamma / 2.0;
    let phi = profile.eval_at(half)?;
    Ok(eval_hn(&bank.order, n, half)? * phi)
}

/// `psi_n` sampled on the profile grid restricted to `|g| <= window`.
pub fn framelet_hat_samples(
    bank: &FrameletBank,
    profile: &FourierProfile,
    n: usize,
) -> Result<Vec<(f64, ComplexScalar)>> {
    (0..profile.len())
        .map(|j| {
            let g = profile.gamma(j);
            framelet_hat(bank, profile, n, g).map(|v| (g, v))
        })
        .collect()
}

/// `psi_n(x) = 2 sum_k c_{k,n} phi(2x + k)` on the grid of `phi`.
///
/// The returned `tail_error_estimate` adds two terms: the propagated error of
/// the `phi` samples, `2 ||c||_1 err(phi)`, and the coefficient truncation,
/// bounded by Cauchy-Schwarz as `2 eps_n sup_x (sum_k |phi(2x+k)|^2)^{1/2}`.
pub fn framelet_time(bank: &FrameletBank, phi: &TimeProfile, n: usize) -> Result<TimeProfile> {
    if !(1..=3).contains(&n) {
        return Err(Error::Domain(format!("framelet index {n} is not in 1..=3")));
    }
    let per_half = 0.5 / phi.step;
    if (per_half - per_half.round()).abs() > 1e-9 || per_half.round() < 1.0 {
        return Err(Error::Resolution(format!(
            "time step {} must divide 1/2 so that 2x + k stays on the grid",
            phi.step
        )));
    }
    let per_unit = 2 * per_half.round() as i64;
    let coeffs = &bank.filters.coeffs[n];
    let half = phi.half_len() as i64;
    let mut values = Vec::with_capacity(phi.values.len());
    let mut energy_sup: f64 = 0.0;
    for i in -half..=half {
        let mut acc = ComplexScalar::new(0.0, 0.0);
        for (k, c) in coeffs.iter() {
            acc += c * phi.at_index(2 * i + k * per_unit);
        }
        values.push(2.0 * acc);
        // sum over all integer shifts of |phi(2x + k)|^2
        let base = (2 * i).rem_euclid(per_unit);
        let reach = half / per_unit + 1;
        let energy: f64 = (-reach..=reach)
            .map(|r| phi.at_index(base + r * per_unit).norm_sqr())
            .sum();
        energy_sup = energy_sup.max(energy);
    }
    let tail = 2.0 * coeffs.l1_norm() * phi.tail_error_estimate
        + 2.0 * bank.truncation_eps[n] * energy_sup.sqrt();
    Ok(TimeProfile {
        order: phi.order.clone(),
        half_width: phi.half_width,
        step: phi.step,
        values,
        tail_error_estimate: tail,
    })
}

/// A periodic signal of power-of-two length >= 4.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicSignal {
    samples: Vec<ComplexScalar>,
}

impl PeriodicSignal {
    pub fn new(samples: Vec<ComplexScalar>) -> Result<Self> {
        let n = samples.len();
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::Length(format!(
                "periodic signals need a power-of-two length >= 4, got {n}"
            )));
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[ComplexScalar] {
        &self.samples
    }

    pub fn energy(&self) -> f64 {
        energy(&self.samples)
    }
}

pub fn energy(values: &[ComplexScalar]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum()
}

/// Discrete filter `sqrt(2) c_k` wrapped onto `Z_len`, already transformed.
struct PeriodicFilter {
    spectrum: Vec<ComplexScalar>,
}

impl PeriodicFilter {
    fn new(seq: &CoeffSeq, len: usize, fft: &Arc<dyn Fft<f64>>) -> Self {
        let mut buf = vec![ComplexScalar::new(0.0, 0.0); len];
        for (k, c) in seq.iter() {
            buf[k.rem_euclid(len as i64) as usize] += c * std::f64::consts::SQRT_2;
        }
        fft.process(&mut buf);
        Self { spectrum: buf }
    }
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

/// One analysis level: `d_n[m] = sum_k conj(h_n[k]) f[2m + k]` (indices mod
/// `len`), keeping the even-indexed correlation samples.
pub fn analyze(filters: &FilterCoeffs, signal: &PeriodicSignal) -> Result<[Vec<ComplexScalar>; 4]> {
    let len = signal.len();
    let plans = Plans::new(len);
    let mut spectrum = signal.samples.clone();
    plans.forward.process(&mut spectrum);
    let scale = 1.0 / len as f64;
    let bands = filters.coeffs.each_ref().map(|seq| {
        let filter = PeriodicFilter::new(seq, len, &plans.forward);
        let mut buf: Vec<ComplexScalar> = spectrum
            .iter()
            .zip(&filter.spectrum)
            .map(|(f, h)| f * h.conj())
            .collect();
        plans.inverse.process(&mut buf);
        buf.iter().step_by(2).map(|v| v * scale).collect()
    });
    Ok(bands)
}

/// Adjoint of [`analyze`]: upsample by two (even phase), circular convolution
/// with `h_n`, sum over `n`.
pub fn synthesize(filters: &FilterCoeffs, bands: &[Vec<ComplexScalar>; 4]) -> Result<PeriodicSignal> {
    let half = bands[0].len();
    if bands.iter().any(|b| b.len() != half) {
        return Err(Error::Length("subbands must have equal lengths".into()));
    }
    let len = 2 * half;
    if len < 4 || !len.is_power_of_two() {
        return Err(Error::Length(format!(
            "subband length {half} does not correspond to a power-of-two signal length >= 4"
        )));
    }
    let plans = Plans::new(len);
    let mut acc = vec![ComplexScalar::new(0.0, 0.0); len];
    for (seq, band) in filters.coeffs.iter().zip(bands) {
        let filter = PeriodicFilter::new(seq, len, &plans.forward);
        let mut up = vec![ComplexScalar::new(0.0, 0.0); len];
        for (m, v) in band.iter().enumerate() {
            up[2 * m] = *v;
        }
        plans.forward.process(&mut up);
        for ((a, u), h) in acc.iter_mut().zip(&up).zip(&filter.spectrum) {
            *a += u * h;
        }
    }
    plans.inverse.process(&mut acc);
    let scale = 1.0 / len as f64;
    PeriodicSignal::new(acc.into_iter().map(|v| v * scale).collect())
}

/// Multi-level decomposition: the lowpass channel is split again `levels` times.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLevel {
    /// Highpass subbands (n = 1, 2, 3) per level, finest first.
    pub details: Vec<[Vec<ComplexScalar>; 3]>,
    pub lowpass: Vec<ComplexScalar>,
}

pub fn analyze_multilevel(
    filters: &FilterCoeffs,
    signal: &PeriodicSignal,
    levels: usize,
) -> Result<MultiLevel> {
    if levels == 0 || signal.len() >> levels < 2 {
        return Err(Error::Length(format!(
            "{levels} levels do not fit a signal of length {}",
            signal.len()
        )));
    }
    let mut details = Vec::with_capacity(levels);
    let mut current = signal.clone();
    for level in 0..levels {
        let [low, b1, b2, b3] = analyze(filters, &current)?;
        details.push([b1, b2, b3]);
        if level + 1 < levels {
            current = PeriodicSignal::new(low)?;
        } else {
            return Ok(MultiLevel {
                details,
                lowpass: low,
            });
        }
    }
    unreachable!("loop returns on the last level")
}

pub fn synthesize_multilevel(filters: &FilterCoeffs, decomposition: &MultiLevel) -> Result<PeriodicSignal> {
    let mut low = decomposition.lowpass.clone();
    for [b1, b2, b3] in decomposition.details.iter().rev() {
        let bands = [low, b1.clone(), b2.clone(), b3.clone()];
        low = synthesize(filters, &bands)?.samples;
    }
    PeriodicSignal::new(low)
}

mod complex_pairs {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(values: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = values.iter().map(|v| [v.re, v.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

mod coeff_map {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::CoeffSeq;

    pub fn serialize<S: Serializer>(coeffs: &[CoeffSeq; 4], s: S) -> Result<S::Ok, S::Error> {
        let map: BTreeMap<String, &CoeffSeq> =
            coeffs.iter().enumerate().map(|(n, c)| (n.to_string(), c)).collect();
        map.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[CoeffSeq; 4], D::Error> {
        let mut map = BTreeMap::<String, CoeffSeq>::deserialize(d)?;
        let mut take = |n: usize| {
            map.remove(&n.to_string())
                .ok_or_else(|| D::Error::custom(format!("missing coefficients for filter {n}")))
        };
        let coeffs = [take(0)?, take(1)?, take(2)?, take(3)?];
        if let Some(extra) = map.keys().next() {
            return Err(D::Error::custom(format!("unexpected filter key {extra:?}")));
        }
        Ok(coeffs)
    }
}
