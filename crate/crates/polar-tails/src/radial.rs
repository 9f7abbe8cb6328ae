//! Radial tail models: survivor function, auxiliary scaling, and quantiles.
//!
//! A radial model describes a nonnegative radius `R` whose upper tail is light
//! enough that `(1 − F(u + x/w(u))) / (1 − F(u)) → e^{−x}` for an auxiliary
//! scaling function `w`. Exceedances above a high threshold `u` then live on
//! the scale `1/w(u)`, and `t(u) = u·w(u)` is the natural large parameter for
//! every tail expansion in this crate.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Shared closure type for user-supplied radial callbacks.
pub type DynFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Parameters of the Kotz-type tail `k · u^n · e^{−r u^κ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KotzParams<T> {
    pub k: T,
    pub n: T,
    pub r: T,
    pub kappa: T,
}

/// Supported radial families.
#[derive(Clone)]
pub enum RadialFamily<T> {
    /// Tail `k · u^n · e^{−r u^κ}` for large `u`, completed below as needed.
    Kotz(KotzParams<T>),
    /// Survivor `e^{−u²/2}`: the chi distribution with two degrees of freedom.
    Rayleigh,
    /// Arbitrary survivor and scaling callbacks, spot-checked at construction.
    Custom {
        survivor: DynFn<T>,
        scaling: DynFn<T>,
        label: String,
    },
}

/// How the survivor is continued from the tail formula down to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Completion<T> {
    /// Survivor is 1 on `[0, u0]` and the tail formula beyond.
    Plateau,
    /// Tail formula peaks at `u0` with value `peak < 1`; the survivor drops
    /// linearly from 1 at the origin to `peak` at `u0`.
    Ramp { peak: T },
}

/// A validated radial tail model.
#[derive(Clone)]
pub struct RadialModel<T> {
    family: RadialFamily<T>,
    u0: T,
    completion: Completion<T>,
}

impl<T: Real> RadialModel<T> {
    /// Kotz-type model. Requires `k > 0`, `r > 0`, `kappa > 0`; `n = 0` with
    /// `k < 1` is rejected because the survivor could not reach 1 continuously.
    pub fn kotz(params: KotzParams<T>) -> Result<Self> {
        let KotzParams { k, n, r, kappa } = params;
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::invalid(format!("kotz coefficient k must be positive, got {k}")));
        }
        if !(r > T::zero()) || !(kappa > T::zero()) || !r.is_finite() || !kappa.is_finite() {
            return Err(Error::invalid(format!(
                "kotz rate and exponent must be positive, got r={r}, kappa={kappa}"
            )));
        }
        if !n.is_finite() {
            return Err(Error::invalid(format!("kotz power must be finite, got {n}")));
        }
        let ln_g = move |u: T| k.ln() + n * u.ln() - r * u.powf(kappa);
        let ln_g_deriv = move |u: T| n / u - r * kappa * u.powf(kappa - T::one());
        let (u0, completion) = if n == T::zero() {
            if k < T::one() {
                return Err(Error::invalid(format!(
                    "kotz with n = 0 needs k >= 1 so the survivor reaches 1, got k = {k}"
                )));
            }
            // closed-form crossing of 1
            Ok::<_, Error>(((k.ln() / r).powf(kappa.recip()), Completion::Plateau))
        } else if n < T::zero() {
            // tail formula diverges at 0, single crossing of 1 on (0, ∞)
            let mut lo = T::one();
            while ln_g(lo) < T::zero() {
                lo *= T::of(0.25);
                if lo < T::min_positive_value() * T::of(1e10) {
                    return Err(Error::numeric(
                        "kotz completion point underflows".to_string(),
                    ));
                }
            }
            let u0 = decreasing_log_root(&ln_g, &ln_g_deriv, lo)?;
            Ok((u0, Completion::Plateau))
        } else {
            let u_peak = (n / (r * kappa)).powf(kappa.recip());
            let peak = ln_g(u_peak).exp();
            if peak >= T::one() {
                let u0 = decreasing_log_root(&ln_g, &ln_g_deriv, u_peak)?;
                Ok((u0, Completion::Plateau))
            } else {
                Ok((u_peak, Completion::Ramp { peak }))
            }
        }?;
        Ok(RadialModel { family: RadialFamily::Kotz(params), u0, completion })
    }

    /// Rayleigh radius, survivor `e^{−u²/2}`.
    pub fn rayleigh() -> Self {
        RadialModel {
            family: RadialFamily::Rayleigh,
            u0: T::zero(),
            completion: Completion::Plateau,
        }
    }

    /// User-supplied survivor and auxiliary scaling.
    ///
    /// Light sanity checks only: the survivor must start at 1, be nonincreasing
    /// and within [0, 1] on a coarse grid, and the scaling must be positive
    /// there. Deeper properties remain the caller's responsibility.
    pub fn custom(survivor: DynFn<T>, scaling: DynFn<T>, label: impl Into<String>) -> Result<Self> {
        let s0 = survivor(T::zero());
        if (s0 - T::one()).abs() > T::of(1e-9) {
            return Err(Error::invalid(format!("custom survivor must be 1 at 0, got {s0}")));
        }
        let mut prev = s0;
        for i in 1..=60 {
            let u = T::of(0.25) * T::of(i as f64);
            let s = survivor(u);
            if !(s >= T::zero() && s <= T::one() + T::of(1e-12)) || !s.is_finite() {
                return Err(Error::invalid(format!("custom survivor out of [0,1] at u={u}: {s}")));
            }
            if s > prev + T::of(1e-12) {
                return Err(Error::invalid(format!("custom survivor increases at u={u}")));
            }
            if s > T::zero() && !(scaling(u) > T::zero()) {
                return Err(Error::invalid(format!("custom scaling must be positive at u={u}")));
            }
            prev = s;
        }
        Ok(RadialModel {
            family: RadialFamily::Custom { survivor, scaling, label: label.into() },
            u0: T::zero(),
            completion: Completion::Plateau,
        })
    }

    /// End of the completion region: the survivor equals the tail formula for
    /// all `u ≥ plateau_end()`.
    pub fn plateau_end(&self) -> T {
        self.u0
    }

    /// `P(R > u)`. Equals 1 for `u ≤ 0`.
    pub fn survivor(&self, u: T) -> T {
        if u <= T::zero() {
            return T::one();
        }
        match &self.family {
            RadialFamily::Rayleigh => (-u * u * T::of(0.5)).exp(),
            RadialFamily::Custom { survivor, .. } => survivor(u),
            RadialFamily::Kotz(p) => {
                if u <= self.u0 {
                    match self.completion {
                        Completion::Plateau => T::one(),
                        Completion::Ramp { peak } => {
                            T::one() - (T::one() - peak) * u / self.u0
                        }
                    }
                } else {
                    let g = (p.k.ln() + p.n * u.ln() - p.r * u.powf(p.kappa)).exp();
                    g.min(T::one())
                }
            }
        }
    }

    /// Auxiliary scaling `w(u)`; requires `u > 0`.
    pub fn scaling(&self, u: T) -> T {
        match &self.family {
            RadialFamily::Rayleigh => u,
            RadialFamily::Custom { scaling, .. } => scaling(u),
            RadialFamily::Kotz(p) => p.r * p.kappa * u.powf(p.kappa - T::one()),
        }
    }

    /// The large parameter `t(u) = u · w(u)` of the tail expansions.
    pub fn t_scale(&self, u: T) -> T {
        u * self.scaling(u)
    }

    /// Exceedance ratio `P(R > u + x/w(u)) / P(R > u)`, the quantity that
    /// converges to `e^{−x}`. Requires `u > plateau_end()` and a nonnegative
    /// shifted argument.
    pub fn tail_ratio(&self, u: T, x: T) -> Result<T> {
        if !(u > self.u0) {
            return Err(Error::domain(format!(
                "tail_ratio requires u above the completion region ({}), got {u}",
                self.u0
            )));
        }
        let shifted = u + x / self.scaling(u);
        if shifted < T::zero() {
            return Err(Error::domain(format!(
                "tail_ratio shifted argument is negative: u={u}, x={x}"
            )));
        }
        // log-space keeps the ratio finite far beyond survivor underflow
        let ls_u = self.log_survivor(u)?;
        let ls_shifted = self.log_survivor(shifted)?;
        Ok((ls_shifted - ls_u).exp())
    }

    /// `ln P(R > u)`, analytic for the built-in families so deep tails do
    /// not underflow.
    fn log_survivor(&self, u: T) -> Result<T> {
        if u <= T::zero() {
            return Ok(T::zero());
        }
        match &self.family {
            RadialFamily::Rayleigh => Ok(-u * u * T::of(0.5)),
            RadialFamily::Kotz(p) if u > self.u0 => {
                Ok((p.k.ln() + p.n * u.ln() - p.r * u.powf(p.kappa)).min(T::zero()))
            }
            _ => {
                let s = self.survivor(u);
                if s > T::zero() {
                    Ok(s.ln())
                } else {
                    Err(Error::numeric(format!("survivor underflow at u={u}")))
                }
            }
        }
    }

    /// Envelope `A(u)·B(x)` bounding `|tail_ratio(u, x) − e^{−x}|` for the
    /// built-in families, with `A(u) = c/t(u)` and `B(x) = (1+x)e^{−x/2}`.
    /// `None` for custom models.
    pub fn second_order_bound(&self, u: T, x: T) -> Option<T> {
        let c = match &self.family {
            RadialFamily::Kotz(p) => p.n.abs() + (p.kappa - T::one()).abs() + T::of(0.5),
            RadialFamily::Rayleigh => T::of(1.5),
            RadialFamily::Custom { .. } => return None,
        };
        let a = c / self.t_scale(u);
        let b = (T::one() + x) * (-x * T::of(0.5)).exp();
        Some(a * b)
    }

    /// Quantile of the survivor: the `u` with `P(R > u) = p`, `p ∈ (0, 1)`.
    ///
    /// Closed form where available, otherwise a safeguarded Newton iteration
    /// on the log tail formula, accurate to relative `1e−12` (or the scalar's
    /// resolution if coarser).
    pub fn quantile(&self, p: T) -> Result<T> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::domain(format!("quantile requires p in (0,1), got {p}")));
        }
        match &self.family {
            RadialFamily::Rayleigh => Ok((-T::of(2.0) * p.ln()).sqrt()),
            RadialFamily::Custom { survivor, .. } => {
                let s = survivor.clone();
                invert_monotone(move |u| s(u), p, self.u0)
            }
            RadialFamily::Kotz(kp) => {
                if let Completion::Ramp { peak } = self.completion {
                    if p >= peak {
                        return Ok(self.u0 * (T::one() - p) / (T::one() - peak));
                    }
                }
                if kp.n == T::zero() {
                    return Ok(((kp.k.ln() - p.ln()) / kp.r).powf(kp.kappa.recip()));
                }
                let (k, n, r, kappa) = (kp.k, kp.n, kp.r, kp.kappa);
                let ln_p = p.ln();
                let phi = move |u: T| k.ln() + n * u.ln() - r * u.powf(kappa) - ln_p;
                let phi_d = move |u: T| n / u - r * kappa * u.powf(kappa - T::one());
                decreasing_log_root(&phi, &phi_d, self.u0.max(T::of(1e-8)))
            }
        }
    }

    /// Canonical description used in model hashes and reports.
    pub fn descriptor(&self) -> String {
        match &self.family {
            RadialFamily::Kotz(p) => format!(
                "kotz(k={:e},n={:e},r={:e},kappa={:e})",
                p.k.as_f64(),
                p.n.as_f64(),
                p.r.as_f64(),
                p.kappa.as_f64()
            ),
            RadialFamily::Rayleigh => "rayleigh".to_string(),
            RadialFamily::Custom { label, .. } => format!("custom({label})"),
        }
    }

    pub fn family(&self) -> &RadialFamily<T> {
        &self.family
    }
}

/// Root of a strictly decreasing function `phi` (given with its derivative) on
/// `[lo, ∞)`, assuming `phi(lo) ≥ 0`. Bisection bracket first, then Newton
/// polished, safeguarded against leaving the bracket.
fn decreasing_log_root<T: Real>(
    phi: &dyn Fn(T) -> T,
    phi_d: &dyn Fn(T) -> T,
    lo: T,
) -> Result<T> {
    let mut a = lo;
    if phi(a) < T::zero() {
        // decreasing branch starts below zero only through rounding at the peak
        return Ok(a);
    }
    let mut b = if a > T::one() { a * T::of(2.0) } else { T::one() };
    let mut grow = 0;
    while phi(b) > T::zero() {
        a = b;
        b *= T::of(2.0);
        grow += 1;
        if grow > 400 {
            return Err(Error::numeric("root bracket expansion failed".to_string()));
        }
    }
    let tol = T::of(1e-12).max(T::epsilon() * T::of(4.0));
    let mut x = (a + b) * T::of(0.5);
    for _ in 0..200 {
        let fx = phi(x);
        if fx > T::zero() {
            a = x;
        } else {
            b = x;
        }
        let d = phi_d(x);
        let step = fx / d;
        let newton = x - step;
        x = if newton > a && newton < b { newton } else { (a + b) * T::of(0.5) };
        if (b - a) <= tol * x.abs() {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Inverse of a nonincreasing survivor by pure bisection.
fn invert_monotone<T: Real>(survivor: impl Fn(T) -> T, p: T, lo_hint: T) -> Result<T> {
    let mut a = lo_hint.max(T::zero());
    let mut b = a.max(T::one());
    let mut grow = 0;
    while survivor(b) > p {
        a = b;
        b *= T::of(2.0);
        grow += 1;
        if grow > 2000 {
            return Err(Error::numeric("quantile bracket expansion failed".to_string()));
        }
    }
    let tol = T::of(1e-12).max(T::epsilon() * T::of(4.0));
    for _ in 0..500 {
        let mid = (a + b) * T::of(0.5);
        if survivor(mid) > p {
            a = mid;
        } else {
            b = mid;
        }
        if (b - a) <= tol * b.abs().max(T::one()) {
            break;
        }
    }
    Ok((a + b) * T::of(0.5))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kotz(k: f64, n: f64, r: f64, kappa: f64) -> RadialModel<f64> {
        RadialModel::kotz(KotzParams { k, n, r, kappa }).unwrap()
    }

    #[test]
    fn exponential_tail_is_exact() {
        let m = kotz(1.0, 0.0, 1.0, 1.0);
        assert_eq!(m.plateau_end(), 0.0);
        assert!((m.survivor(1.0) - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(m.survivor(0.0), 1.0);
        assert_eq!(m.scaling(5.0), 1.0);
        assert!((m.quantile((-2.0f64).exp()).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_closed_forms() {
        let m = RadialModel::<f64>::rayleigh();
        assert!((m.survivor(2.0) - (-2.0f64).exp()).abs() < 1e-16);
        assert_eq!(m.scaling(2.0), 2.0);
        assert_eq!(m.t_scale(3.0), 9.0);
        let p = 1e-6;
        let u = m.quantile(p).unwrap();
        assert!((m.survivor(u) - p).abs() < 1e-18);
    }

    #[test]
    fn ramp_completion_when_tail_formula_stays_below_one() {
        // peak value 2·(1/2)^{1/2}·e^{-1/2} ≈ 0.858 < 1 forces the ramp
        let m = kotz(2.0, 1.0, 1.0, 2.0);
        let u0 = m.plateau_end();
        assert!((u0 - 0.5f64.sqrt()).abs() < 1e-15);
        let peak = 0.857763884960706796480190;
        assert!((m.survivor(u0) - peak).abs() < 1e-14);
        assert_eq!(m.survivor(0.0), 1.0);
        // linear in between
        let mid = m.survivor(u0 / 2.0);
        assert!((mid - (1.0 + peak) / 2.0).abs() < 1e-14);
        // frozen reference quantile in the tail region
        let q = m.quantile(0.5).unwrap();
        assert!((q - 1.277044573336516076850979).abs() < 1e-12, "got {q}");
        // ramp region quantile inverts the ramp exactly
        let p = 0.95;
        let u = m.quantile(p).unwrap();
        assert!((m.survivor(u) - p).abs() < 1e-14);
    }

    #[test]
    fn plateau_crossing_for_large_coefficient() {
        let m = kotz(2.0, 0.0, 1.0, 1.0);
        let u0 = m.plateau_end();
        assert!((u0 - std::f64::consts::LN_2).abs() < 1e-14);
        assert_eq!(m.survivor(u0 * 0.5), 1.0);
        assert!((m.survivor(2.0 * u0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn negative_power_has_single_crossing() {
        let m = kotz(1.0, -1.0, 1.0, 1.0);
        let u0 = m.plateau_end();
        // crossing of e^{-u}/u = 1 is the omega constant
        assert!((u0 - 0.5671432904097838729999687).abs() < 1e-10, "got {u0}");
        assert_eq!(m.survivor(u0 * 0.9), 1.0);
        assert!(m.survivor(u0 * 1.1) < 1.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RadialModel::<f64>::kotz(KotzParams { k: 0.5, n: 0.0, r: 1.0, kappa: 1.0 }).is_err());
        assert!(RadialModel::<f64>::kotz(KotzParams { k: -1.0, n: 0.0, r: 1.0, kappa: 1.0 }).is_err());
        assert!(RadialModel::<f64>::kotz(KotzParams { k: 1.0, n: 0.0, r: 0.0, kappa: 1.0 }).is_err());
        assert!(RadialModel::<f64>::kotz(KotzParams { k: 1.0, n: 0.0, r: 1.0, kappa: -2.0 }).is_err());
    }

    #[test]
    fn quantile_survivor_roundtrip() {
        let models = [
            kotz(1.0, 0.0, 1.0, 1.0),
            kotz(1.0, 0.0, 0.5, 2.0),
            kotz(2.0, 1.0, 1.0, 2.0),
            kotz(1.0, -1.0, 1.0, 1.0),
            kotz(3.0, 2.0, 0.7, 0.8),
            RadialModel::rayleigh(),
        ];
        for m in &models {
            for &p in &[1e-12, 1e-6, 1e-3, 0.1, 0.5, 0.9, 0.99] {
                let u = m.quantile(p).unwrap();
                let back = m.survivor(u);
                assert!(
                    (back - p).abs() <= 1e-10 * p + 1e-15,
                    "{}: roundtrip p={p} gave {back}",
                    m.descriptor()
                );
            }
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        let m = RadialModel::<f64>::rayleigh();
        assert!(m.quantile(0.0).is_err());
        assert!(m.quantile(1.0).is_err());
        assert!(m.quantile(-0.2).is_err());
    }

    #[test]
    fn tail_ratio_approaches_exponential() {
        let m = RadialModel::<f64>::rayleigh();
        for &x in &[0.1, 1.0, 3.0] {
            let far = (m.tail_ratio(100.0, x).unwrap() - (-x).exp()).abs();
            let near = (m.tail_ratio(3.0, x).unwrap() - (-x).exp()).abs();
            assert!(far < near, "x={x}: {far} !< {near}");
            assert!(far < 1e-4);
            let bound = m.second_order_bound(100.0, x).unwrap();
            assert!((m.tail_ratio(100.0, x).unwrap() - (-x).exp()).abs() <= bound);
        }
        assert!(m.tail_ratio(0.0, 1.0).is_err());
        let exp = kotz(1.0, 0.0, 1.0, 1.0);
        assert!(exp.tail_ratio(5.0, -6.0).is_err());
    }

    #[test]
    fn scaling_is_self_neglecting() {
        let m = kotz(1.0, 0.0, 1.0, 0.5);
        for &u in &[1e2, 1e4, 1e6] {
            let x = 2.0;
            let drift = (m.scaling(u + x / m.scaling(u)) / m.scaling(u) - 1.0).abs();
            assert!(drift < 3.0 / m.t_scale(u), "u={u}: drift {drift}");
        }
    }

    #[test]
    fn custom_model_checks_and_inverts() {
        let survivor: DynFn<f64> = Arc::new(|u: f64| (-u.powi(3)).exp());
        let scaling: DynFn<f64> = Arc::new(|u: f64| 3.0 * u * u);
        let m = RadialModel::custom(survivor, scaling, "cubic").unwrap();
        let u = m.quantile(1e-4).unwrap();
        assert!((m.survivor(u) - 1e-4).abs() < 1e-13);

        // stays in [0, 1] but oscillates, so it is not a survivor
        let wavy: DynFn<f64> =
            Arc::new(|u: f64| 0.9 + 0.1 * (2.0 * std::f64::consts::PI * u).cos());
        let w: DynFn<f64> = Arc::new(|_| 1.0);
        assert!(RadialModel::custom(wavy, w, "bad").is_err());
    }
}
