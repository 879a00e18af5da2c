//! Closed-form exponents of fractional pseudo-splines and the empirical fits
//! that check them against cascade output.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cascade::{run_cascade, FourierProfile, DEFAULT_LEVELS, DEFAULT_STEP, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::symbol::{eval_h0, eval_p, one_minus_h0_sq, theta_bound, OrderSpec, PForm, PseudoSplineOrder};

/// Slack for the ordering `|phi^{(z,0)}| <= |phi^{(z,l)}|`.
pub const ORDERING_SLACK: f64 = 1e-9;

/// Values of `1 - |H0|^2` below this are dominated by cancellation.
pub const CANCELLATION_FLOOR: f64 = 1e-13;

pub const DEFAULT_ZERO_RANGE: [f64; 2] = [1e-4, 1e-2];
pub const DEFAULT_NEIGHBORHOOD: f64 = 0.25;

fn require_fractional(order: &PseudoSplineOrder) -> Result<()> {
    if order.is_fractional() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "regularity results are only available for real orders, got {order}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowpassVerdict {
    pub ok: bool,
    pub arctan_sum: f64,
}

/// `sum_{j=0}^l atan(y / (x + j)) in (-pi/2, pi/2)` for `z = x + iy`; the
/// case `l = 0` holds unconditionally and reports an empty sum.
pub fn lowpass_condition(order: &PseudoSplineOrder) -> LowpassVerdict {
    if order.ell() == 0 {
        return LowpassVerdict {
            ok: true,
            arctan_sum: 0.0,
        };
    }
    let z = order.z();
    let arctan_sum: f64 = (0..=order.ell()).map(|j| (z.im / (z.re + j as f64)).atan()).sum();
    LowpassVerdict {
        ok: arctan_sum.abs() < std::f64::consts::FRAC_PI_2,
        arctan_sum,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowpassFloor {
    /// `min |phi(g)|` over `|g| <= neighborhood`.
    pub floor: f64,
    /// `max (|phi^{(z,0)}| - |phi^{(z,l)}|)` when the B-spline profile was given.
    pub ordering_excess: Option<f64>,
}

/// Lower bound of `|phi|` near the origin, optionally checking it against the
/// `l = 0` profile of the same `z` sampled on the same grid.
pub fn lowpass_floor(
    profile: &FourierProfile,
    neighborhood: f64,
    b_spline: Option<&FourierProfile>,
) -> Result<LowpassFloor> {
    let verdict = lowpass_condition(profile.order());
    if !verdict.ok {
        return Err(Error::ConditionViolated(format!(
            "arctan sum {:.6} is outside (-pi/2, pi/2) for {}",
            verdict.arctan_sum,
            profile.order()
        )));
    }
    let floor = profile
        .rows()
        .filter(|(g, _)| g.abs() <= neighborhood)
        .map(|(_, v)| v.norm())
        .fold(f64::INFINITY, f64::min);
    if !(floor > 0.0) {
        return Err(Error::Consistency(format!(
            "|phi| vanishes within |g| <= {neighborhood}"
        )));
    }
    let ordering_excess = match b_spline {
        None => None,
        Some(base) => {
            if base.len() != profile.len() || base.step() != profile.step() {
                return Err(Error::Resolution("profiles must share a grid".into()));
            }
            let excess = profile
                .rows()
                .zip(base.values())
                .filter(|((g, _), _)| g.abs() <= neighborhood)
                .map(|((_, v), b)| b.norm() - v.norm())
                .fold(f64::NEG_INFINITY, f64::max);
            if excess > ORDERING_SLACK {
                return Err(Error::Consistency(format!(
                    "|phi^(z,0)| exceeds |phi^(z,l)| by {excess:.3e}"
                )));
            }
            Some(excess)
        }
    };
    Ok(LowpassFloor {
        floor,
        ordering_excess,
    })
}

/// `kappa = log2 p(3/4)`.
pub fn kappa(order: &PseudoSplineOrder) -> Result<f64> {
    require_fractional(order)?;
    Ok(eval_p(order, 0.75, PForm::Taylor)?.re.log2())
}

/// `s = 2 alpha - kappa - 1`.
pub fn holder_exponent(order: &PseudoSplineOrder) -> Result<f64> {
    Ok(2.0 * order.alpha() - kappa(order)? - 1.0)
}

/// `min(2 alpha, 2 (l + 1))`.
pub fn approximation_order(order: &PseudoSplineOrder) -> Result<f64> {
    require_fractional(order)?;
    Ok((2.0 * order.alpha()).min(2.0 * (order.ell() as f64 + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub rms_residual: f64,
    pub points: usize,
}

fn least_squares(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms_residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    LinearFit {
        slope,
        intercept,
        rms_residual,
        points: points.len(),
    }
}

/// Default decay-fit range `[16, min(512, 0.9 window)]`.
pub fn default_decay_range(window: f64) -> [f64; 2] {
    [16.0, (0.9 * window).min(512.0)]
}

/// Slope of `log |phi|` against `log(1 + g)` through the local maxima of
/// `|phi|` with `g` in `range` (the envelope, since `phi` vanishes at the
/// nonzero integers).
pub fn decay_fit(profile: &FourierProfile, range: [f64; 2]) -> Result<LinearFit> {
    require_fractional(profile.order())?;
    let [lo, hi] = range;
    if !(0.0 < lo && lo < hi) || hi > profile.window() || hi > profile.support() {
        return Err(Error::InsufficientRange(format!(
            "decay range [{lo}, {hi}] is not inside the profile window {} and support {}",
            profile.window(),
            profile.support()
        )));
    }
    let modulus: Vec<f64> = profile.values().iter().map(|v| v.norm()).collect();
    let points: Vec<(f64, f64)> = (1..modulus.len() - 1)
        .filter(|&j| {
            let g = profile.gamma(j);
            g >= lo && g <= hi && modulus[j] > modulus[j - 1] && modulus[j] >= modulus[j + 1]
        })
        .filter(|&j| modulus[j] > 0.0)
        .map(|j| ((1.0 + profile.gamma(j)).ln(), modulus[j].ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientRange(format!(
            "only {} envelope maxima in [{lo}, {hi}]",
            points.len()
        )));
    }
    Ok(least_squares(&points))
}

/// Checks `p(x) <= p(3/4)` on `[0, 3/4]` and `p(x) p(4x(1-x)) <= p(3/4)^2` on
/// `[3/4, 1]`, each on `samples` points, with absolute slack `1e-12`.
pub fn verify_l_conditions(order: &PseudoSplineOrder, samples: usize) -> Result<bool> {
    require_fractional(order)?;
    let p = |x: f64| eval_p(order, x.clamp(0.0, 1.0), PForm::Taylor).map(|v| v.re);
    let p34 = p(0.75)?;
    let slack = 1e-12;
    let last = (samples.max(2) - 1) as f64;
    for i in 0..samples.max(2) {
        let t = i as f64 / last;
        let xa = 0.75 * t;
        if p(xa)? > p34 + slack {
            return Ok(false);
        }
        let xb = 0.75 + 0.25 * t;
        if p(xb)? * p(4.0 * xb * (1.0 - xb))? > p34 * p34 + slack {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZeroOrderFit {
    pub fit: LinearFit,
    /// The direct difference `1 - |H0|^2` falls below [`CANCELLATION_FLOOR`]
    /// somewhere in the range, so it would be dominated by rounding there.
    /// The fit itself uses the cancellation-free tail form.
    pub cancellation_warning: bool,
}

/// Log-log slope of `1 - |H0(g)|^2` against `g` on 200 log-spaced points,
/// evaluated through the tail series of `1 - q`.
pub fn zero_order_fit(order: &PseudoSplineOrder, range: [f64; 2]) -> Result<ZeroOrderFit> {
    let [lo, hi] = range;
    if !(0.0 < lo && lo < hi && hi <= 1e-2) {
        return Err(Error::InsufficientRange(format!(
            "zero-order range [{lo}, {hi}] must satisfy 0 < lo < hi <= 1e-2"
        )));
    }
    let count = 200;
    let ratio = (hi / lo).ln();
    let mut cancellation_warning = false;
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let g = lo * (ratio * i as f64 / (count - 1) as f64).exp();
        if 1.0 - eval_h0(order, g).norm_sqr() < CANCELLATION_FLOOR {
            cancellation_warning = true;
        }
        let v = one_minus_h0_sq(order, g)?;
        if v > 0.0 && v.is_finite() {
            points.push((g.ln(), v.ln()));
        }
    }
    if points.len() < 3 {
        return Err(Error::InsufficientRange(format!(
            "1 - |H0|^2 is not positive on [{lo}, {hi}]"
        )));
    }
    Ok(ZeroOrderFit {
        fit: least_squares(&points),
        cancellation_warning,
    })
}

/// Parameters of [`full_report`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportParams {
    pub levels: u32,
    pub window: f64,
    pub step: f64,
    pub decay_range: Option<[f64; 2]>,
    pub zero_range: [f64; 2],
    pub neighborhood: f64,
}

impl Default for ReportParams {
    fn default() -> Self {
        Self {
            levels: DEFAULT_LEVELS,
            window: DEFAULT_WINDOW,
            step: DEFAULT_STEP,
            decay_range: None,
            zero_range: DEFAULT_ZERO_RANGE,
            neighborhood: DEFAULT_NEIGHBORHOOD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    Fitted,
    GridCheck,
}

/// Every quantity the analysis produces; `None` marks quantities that do not
/// apply to the order (complex `z`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub order: OrderSpec,
    pub theta: f64,
    pub lowpass_ok: bool,
    pub lowpass_arctan_sum: f64,
    pub kappa: Option<f64>,
    pub holder_s: Option<f64>,
    pub approx_order: Option<f64>,
    pub l_conditions: Option<bool>,
    pub fit_decay_exponent: Option<f64>,
    pub fit_decay_residual: Option<f64>,
    pub fit_decay_range: Option<[f64; 2]>,
    pub fit_zero_order: f64,
    pub fit_zero_residual: f64,
    pub fit_zero_cancellation_warning: bool,
    pub lowpass_floor_c: Option<f64>,
    pub provenance: BTreeMap<&'static str, Provenance>,
}

impl AnalysisReport {
    /// Same numbers, compared with relative tolerance `tol`; the order itself
    /// is ignored.
    pub fn numerically_equal(&self, other: &Self, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300);
        let close_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => close(a, b),
            (None, None) => true,
            _ => false,
        };
        close(self.theta, other.theta)
            && self.lowpass_ok == other.lowpass_ok
            && close(self.lowpass_arctan_sum, other.lowpass_arctan_sum)
            && close_opt(self.kappa, other.kappa)
            && close_opt(self.holder_s, other.holder_s)
            && close_opt(self.approx_order, other.approx_order)
            && self.l_conditions == other.l_conditions
            && close_opt(self.fit_decay_exponent, other.fit_decay_exponent)
            && close(self.fit_zero_order, other.fit_zero_order)
            && close_opt(self.lowpass_floor_c, other.lowpass_floor_c)
    }
}

pub fn full_report(order: &PseudoSplineOrder, params: &ReportParams) -> Result<AnalysisReport> {
    use Provenance::*;
    let mut provenance = BTreeMap::new();
    let theta = theta_bound(order);
    provenance.insert("theta", ClosedForm);
    let verdict = lowpass_condition(order);
    provenance.insert("lowpass_ok", ClosedForm);

    let (profile, _) = run_cascade(order, params.levels, params.window, params.step)?;

    let zero = zero_order_fit(order, params.zero_range)?;
    provenance.insert("fit_zero_order", Fitted);

    let lowpass_floor_c = if verdict.ok {
        provenance.insert("lowpass_floor_c", GridCheck);
        Some(lowpass_floor(&profile, params.neighborhood, None)?.floor)
    } else {
        None
    };

    let (mut kappa_v, mut holder_s, mut approx_order, mut l_conditions) = (None, None, None, None);
    let (mut fit_decay_exponent, mut fit_decay_residual, mut fit_decay_range) = (None, None, None);
    if order.is_fractional() {
        kappa_v = Some(kappa(order)?);
        holder_s = Some(holder_exponent(order)?);
        approx_order = Some(approximation_order(order)?);
        l_conditions = Some(verify_l_conditions(order, 4096)?);
        let range = params
            .decay_range
            .unwrap_or_else(|| default_decay_range(params.window));
        let fit = decay_fit(&profile, range)?;
        fit_decay_exponent = Some(fit.slope);
        fit_decay_residual = Some(fit.rms_residual);
        fit_decay_range = Some(range);
        for key in ["kappa", "holder_s", "approx_order"] {
            provenance.insert(key, ClosedForm);
        }
        provenance.insert("l_conditions", GridCheck);
        provenance.insert("fit_decay_exponent", Fitted);
    }

    Ok(AnalysisReport {
        order: order.spec(),
        theta,
        lowpass_ok: verdict.ok,
        lowpass_arctan_sum: verdict.arctan_sum,
        kappa: kappa_v,
        holder_s,
        approx_order,
        l_conditions,
        fit_decay_exponent,
        fit_decay_residual,
        fit_decay_range,
        fit_zero_order: zero.fit.slope,
        fit_zero_residual: zero.fit.rms_residual,
        fit_zero_cancellation_warning: zero.cancellation_warning,
        lowpass_floor_c,
        provenance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::ComplexScalar;
    use std::f64::consts::PI;

    fn order(re: f64, im: f64, ell: u32) -> PseudoSplineOrder {
        PseudoSplineOrder::new_extended(ComplexScalar::new(re, im), ell, 0.0).unwrap()
    }

    #[test]
    fn lowpass_examples() {
        let v = lowpass_condition(&order(4.2, 0.0, 3));
        assert!(v.ok);
        assert_eq!(v.arctan_sum, 0.0);
        let v = lowpass_condition(&order(3.2, 1.0, 3));
        let expected: f64 = [3.2f64, 4.2, 5.2, 6.2].iter().map(|x| (1.0 / x).atan()).sum();
        assert!(v.ok);
        assert!((v.arctan_sum - expected).abs() < 1e-15);
        assert!((v.arctan_sum - 0.8868).abs() < 5e-4);
        let v = lowpass_condition(&order(1.0, 50.0, 0));
        assert!(v.ok);
        assert_eq!(v.arctan_sum, 0.0);
        // large imaginary part with l >= 1 breaks the condition
        assert!(!lowpass_condition(&order(2.0, 20.0, 1)).ok);
    }

    #[test]
    fn kappa_and_exponents() {
        assert_eq!(kappa(&order(3.5, 0.0, 0)).unwrap(), 0.0);
        assert!((kappa(&order(2.0, 0.0, 1)).unwrap() - 2.5f64.log2()).abs() < 1e-15);
        assert!((kappa(&order(3.0, 0.0, 1)).unwrap() - 3.25f64.log2()).abs() < 1e-15);
        assert!(kappa(&order(3.2, 1.0, 1)).is_err());

        assert_eq!(holder_exponent(&order(1.0, 0.0, 0)).unwrap(), 1.0);
        assert_eq!(holder_exponent(&order(2.0, 0.0, 0)).unwrap(), 3.0);
        assert!((holder_exponent(&order(2.0, 0.0, 1)).unwrap() - 1.678).abs() < 1e-3);

        assert_eq!(approximation_order(&order(1.0, 0.0, 0)).unwrap(), 2.0);
        assert_eq!(approximation_order(&order(2.0, 0.0, 1)).unwrap(), 4.0);
        assert_eq!(approximation_order(&order(3.5, 0.0, 1)).unwrap(), 4.0);
        assert!(approximation_order(&order(3.2, 1.0, 1)).is_err());
    }

    #[test]
    fn l_conditions() {
        assert!(verify_l_conditions(&order(1.0, 0.0, 0), 4096).unwrap());
        assert!(verify_l_conditions(&order(2.0, 0.0, 1), 4096).unwrap());
        assert!(verify_l_conditions(&order(1.5, 0.0, 1), 4096).unwrap());
        assert!(verify_l_conditions(&order(3.2, 1.0, 1), 4096).is_err());
    }

    #[test]
    fn zero_order_examples() {
        let f = zero_order_fit(&order(1.0, 0.0, 0), DEFAULT_ZERO_RANGE).unwrap();
        assert!((f.fit.slope - 2.0).abs() < 0.02);
        let f = zero_order_fit(&order(2.0, 0.0, 1), DEFAULT_ZERO_RANGE).unwrap();
        assert!((f.fit.slope - 4.0).abs() < 0.05);
        let f = zero_order_fit(&order(3.4, 0.0, 2), DEFAULT_ZERO_RANGE).unwrap();
        assert!((f.fit.slope - 6.0).abs() < 0.05, "{:?}", f);
        assert!(f.cancellation_warning);
        assert!(zero_order_fit(&order(1.0, 0.0, 0), [1e-3, 0.1]).is_err());
        // the direct difference would vanish entirely here
        let f = zero_order_fit(&order(4.2, 0.0, 3), DEFAULT_ZERO_RANGE).unwrap();
        assert!((f.fit.slope - 8.0).abs() < 0.05, "{f:?}");
        assert!(f.cancellation_warning);
        let f = zero_order_fit(&order(3.5, 0.0, 3), [1e-8, 2e-8]).unwrap();
        assert!((f.fit.slope - 8.0).abs() < 0.05, "{f:?}");
    }

    #[test]
    fn decay_examples() {
        let (p, _) = run_cascade(&order(1.0, 0.0, 0), 24, 600.0, 1.0 / 64.0).unwrap();
        let fit = decay_fit(&p, [16.0, 512.0]).unwrap();
        assert!((fit.slope + 2.0).abs() < 0.1, "{fit:?}");
        let (p, _) = run_cascade(&order(2.0, 0.0, 0), 24, 64.0, 1.0 / 64.0).unwrap();
        let fit = decay_fit(&p, default_decay_range(64.0)).unwrap();
        // kappa = 0 for l = 0; fitting against log(1 + g) on a short range
        // biases the slope below -4
        assert!(fit.slope <= -4.0 + 0.2 && fit.slope > -4.3, "{fit:?}");
        assert!(decay_fit(&p, [16.0, 100.0]).is_err());
    }

    #[test]
    fn b_spline_floor() {
        let (p, _) = run_cascade(&order(1.0, 0.0, 0), 24, 8.0, 1.0 / 64.0).unwrap();
        let floor = lowpass_floor(&p, 0.25, None).unwrap();
        let expected = (2.0 * 2f64.sqrt() / PI).powi(2);
        assert!((floor.floor - expected).abs() < 1e-9);
    }

    #[test]
    fn floor_ordering() {
        let z = order(3.2, 1.0, 2);
        let (pl, _) = run_cascade(&z, 24, 8.0, 1.0 / 64.0).unwrap();
        let (p0, _) = run_cascade(&z.with_ell(0).unwrap(), 24, 8.0, 1.0 / 64.0).unwrap();
        let res = lowpass_floor(&pl, 0.25, Some(&p0)).unwrap();
        assert!(res.floor > 0.0);
        assert!(res.ordering_excess.unwrap() <= ORDERING_SLACK);

        let bad = order(2.0, 20.0, 1);
        let (pb, _) = run_cascade(&bad, 10, 4.0, 1.0 / 16.0).unwrap();
        assert!(matches!(lowpass_floor(&pb, 0.25, None), Err(Error::ConditionViolated(_))));
    }

    #[test]
    fn reports() {
        let r = full_report(&order(2.0, 0.0, 0), &ReportParams::default()).unwrap();
        assert!((r.theta - 0.125).abs() < 1e-15);
        assert_eq!(r.kappa, Some(0.0));
        assert_eq!(r.holder_s, Some(3.0));
        assert_eq!(r.approx_order, Some(2.0));
        assert!(r.lowpass_ok);

        let z = order(3.2, 1.0, 3);
        let r = full_report(&z, &ReportParams::default()).unwrap();
        assert_eq!(r.theta, theta_bound(&z));
        assert!(r.lowpass_ok);
        assert!(r.kappa.is_none() && r.holder_s.is_none() && r.approx_order.is_none());
        assert!(r.fit_decay_exponent.is_none());

        let r = full_report(&order(1.0, 0.0, 0), &ReportParams::default()).unwrap();
        assert!((r.fit_zero_order - 2.0).abs() < 0.02);
        assert!((r.fit_decay_exponent.unwrap() + 2.0).abs() < 0.1);
    }
}
