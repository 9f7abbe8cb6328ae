//! Conditional limit laws and closed-form tail approximations.
//!
//! When the radius has a Gumbel-type tail and the angular density varies
//! regularly at the axis with index `2δ`, the exceedance-rescaled second
//! coordinate converges to the law with density `e^{−z²/2} ψ(z²/2) / N`,
//! where `ψ(s) = (2s)^δ` for the power profile and
//! `N = 2^{δ+1/2} Γ(δ+1/2)`. For `δ = 0` this is the standard normal law;
//! `δ > 0` spreads mass away from the origin and `δ < 0` piles it up there.
//!
//! The marginal tail approximations expand `P(X > u)` to first order in
//! `1/√t(u)`; the conditional approximations add the `O(1/√t)` skew term.

use crate::angular::AngularModel;
use crate::error::{Error, Result};
use crate::polar_exact::PolarModel;
use crate::quad::{self, QuadOptions};
use crate::radial::{DynFn, RadialModel};
use crate::scalar::Real;
use crate::special::{gamma_fn, reg_gamma_lower};

/// Limit law of the rescaled second coordinate given a large first coordinate.
#[derive(Clone)]
pub struct LimitLaw<T> {
    delta: T,
    profile: Option<DynFn<T>>,
    normalizer: T,
}

impl<T: Real> LimitLaw<T> {
    /// Law with the power profile `ψ(s) = (2s)^δ`, `δ > −1/2`.
    pub fn power(delta: T) -> Result<Self> {
        if !(delta > T::of(-0.5)) {
            return Err(Error::invalid(format!(
                "limit law index must exceed -1/2, got {delta}"
            )));
        }
        let half = T::of(0.5);
        let normalizer = T::of(2.0).powf(delta + half) * gamma_fn(delta + half)?;
        Ok(LimitLaw { delta, profile: None, normalizer })
    }

    /// Law with an arbitrary profile `ψ`, normalized by quadrature.
    ///
    /// `delta` must describe the behavior of `ψ` at 0 (`ψ(s) ≍ s^δ`) so that
    /// the integrable singularity is handled correctly.
    pub fn with_profile(psi: DynFn<T>, delta: T) -> Result<Self> {
        if !(delta > T::of(-0.5)) {
            return Err(Error::invalid(format!(
                "limit law index must exceed -1/2, got {delta}"
            )));
        }
        let p = psi.clone();
        let half_density = move |z: T| (-z * z * T::of(0.5)).exp() * p(z * z * T::of(0.5));
        let normalizer = T::of(2.0) * integrate_half_line(&half_density)?;
        if !(normalizer > T::zero()) || !normalizer.is_finite() {
            return Err(Error::numeric(format!(
                "limit law normalizer is not positive and finite: {}",
                normalizer.as_f64()
            )));
        }
        Ok(LimitLaw { delta, profile: Some(psi), normalizer })
    }

    /// The law induced by an angular model: its `δ` and, if the model carries
    /// a custom profile, that profile.
    pub fn from_angular(angular: &AngularModel<T>) -> Result<Self> {
        let delta = angular.delta();
        let power = LimitLaw::power(delta)?;
        // a custom profile differs from the power law exactly when psi(1/2) ≠ 1
        let probe = angular.psi(T::of(0.5));
        if (probe - T::one()).abs() > T::of(1e-12) {
            let angular = angular.clone();
            let psi: DynFn<T> = std::sync::Arc::new(move |s| angular.psi(s));
            LimitLaw::with_profile(psi, delta)
        } else {
            Ok(power)
        }
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// `∫ e^{−z²/2} ψ(z²/2) dz` over the whole line.
    pub fn normalizer(&self) -> T {
        self.normalizer
    }

    /// Profile value `ψ(s)`.
    pub fn profile(&self, s: T) -> T {
        match &self.profile {
            Some(psi) => psi(s),
            None => {
                if self.delta == T::zero() {
                    T::one()
                } else {
                    (s + s).powf(self.delta)
                }
            }
        }
    }

    /// Density of the law; may diverge at 0 when `δ < 0` (integrably).
    pub fn density(&self, z: T) -> T {
        (-z * z * T::of(0.5)).exp() * self.profile(z * z * T::of(0.5)) / self.normalizer
    }

    /// CDF. Closed form through the regularized incomplete gamma function for
    /// the power profile; quadrature otherwise.
    pub fn cdf(&self, z: T) -> T {
        match &self.profile {
            None => {
                let half = T::of(0.5);
                if z == T::zero() {
                    return half;
                }
                let p = reg_gamma_lower(self.delta + half, z * z * half)
                    .expect("arguments are positive by construction");
                if z > T::zero() {
                    half * (T::one() + p)
                } else {
                    half * (T::one() - p)
                }
            }
            Some(_) => self
                .cdf_numeric(z)
                .expect("profile integrable by the construction-time normalization"),
        }
    }

    /// CDF by direct quadrature of the density. Independent of the closed
    /// form, so the two routes can check each other.
    pub fn cdf_numeric(&self, z: T) -> Result<T> {
        let half = T::of(0.5);
        if z == T::zero() {
            return Ok(half);
        }
        let f = move |v: T| (-v * v * T::of(0.5)).exp() * self.profile(v * v * T::of(0.5));
        let mass = integrate_half_line_to(&f, z.abs())? / self.normalizer;
        Ok(if z > T::zero() { half + mass } else { half - mass })
    }

    /// `1 − cdf(z)`, computed as `cdf(−z)` to honor the law's symmetry.
    pub fn survivor(&self, z: T) -> T {
        self.cdf(-z)
    }
}

/// `∫_0^∞ f` for an even-density half-line integrand with possible integrable
/// singularity at 0 and Gaussian-type decay.
fn integrate_half_line<T: Real>(f: &dyn Fn(T) -> T) -> Result<T> {
    integrate_half_line_to(f, T::of(45.0))
}

/// `∫_0^b f` with the singular-at-0 cell under tanh-sinh.
fn integrate_half_line_to<T: Real>(f: &dyn Fn(T) -> T, b: T) -> Result<T> {
    let cap = b.min(T::of(45.0));
    let opts = QuadOptions::with_tols(
        T::min_positive_value() * T::of(1e6),
        T::of(1e-12).max(T::epsilon() * T::of(50.0)),
    );
    let cut = T::one().min(cap);
    let head = quad::tanh_sinh(f, T::zero(), cut, &opts)?;
    let tail = if cap > cut {
        quad::adaptive(f, cut, cap, &quad::endpoint_refinement_splits(cut, cap), &opts)?
            .value
    } else {
        T::zero()
    };
    Ok(head.value + tail)
}

/// Finite-threshold inputs shared by the marginal approximations:
/// the threshold, its tail scale `t = u·w(u)`, the angular weight at the
/// shrinking angle `1/√t`, and the pseudo-correlation.
#[derive(Debug, Clone, Copy)]
pub struct TailContext<T> {
    pub u: T,
    pub t: T,
    pub h_value: T,
    pub rho: T,
}

impl<T: Real> TailContext<T> {
    /// Literal angular weight `h(1/√t)`.
    pub fn from_model(model: &PolarModel<T>, u: T) -> Result<Self> {
        let t = model.radial.t_scale(u);
        if !(t > T::zero()) {
            return Err(Error::domain(format!("tail scale must be positive, got t={t} at u={u}")));
        }
        let h_value = model.angular.density(t.sqrt().recip());
        Ok(TailContext { u, t, h_value, rho: model.rho() })
    }

    /// Leading-order angular weight `c₀ · t^{−δ}` with `c₀` the local constant
    /// of the density at the axis.
    pub fn from_model_leading(model: &PolarModel<T>, u: T) -> Result<Self> {
        let t = model.radial.t_scale(u);
        if !(t > T::zero()) {
            return Err(Error::domain(format!("tail scale must be positive, got t={t} at u={u}")));
        }
        let delta = model.angular.delta();
        let h_value = model.angular.local_constant() * t.powf(-delta);
        Ok(TailContext { u, t, h_value, rho: model.rho() })
    }
}

/// First-order marginal tail approximation
/// `P(X > u) ≈ t^{−1/2} · h(1/√t) · P(R > u) · N(law)`.
pub fn marginal_tail_first_order<T: Real>(ctx: &TailContext<T>, survivor_u: T, law: &LimitLaw<T>) -> T {
    survivor_u * ctx.h_value * law.normalizer() / ctx.t.sqrt()
}

/// Which constant multiplies the power-profile marginal approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerConstantMode {
    /// `2^{δ+1/2} Γ(δ+1/2)`: consistent with the first-order form, ratio → 1.
    Default,
    /// `2^{δ+1/2} / Γ(δ+1/2)`: kept for comparison; off by `Γ(δ+1/2)²`.
    StrictPrinted,
}

/// Marginal tail approximation specialized to the power profile with the
/// constant chosen by `mode`.
pub fn marginal_tail_power_form<T: Real>(
    ctx: &TailContext<T>,
    survivor_u: T,
    delta: T,
    mode: PowerConstantMode,
) -> Result<T> {
    let half = T::of(0.5);
    let gamma = gamma_fn(delta + half)?;
    let base = T::of(2.0).powf(delta + half);
    let constant = match mode {
        PowerConstantMode::Default => base * gamma,
        PowerConstantMode::StrictPrinted => base / gamma,
    };
    Ok(survivor_u * ctx.h_value * constant / ctx.t.sqrt())
}

/// Limit of the doubly rescaled joint tail:
/// `P(exceedance ≤ x, standardized second coordinate ≤ y) →
/// (1 − e^{−x}) · Ψ(y / √(1−ρ²))`.
pub fn joint_exceedance_limit<T: Real>(x: T, y: T, rho: T, law: &LimitLaw<T>) -> T {
    let scaled = y / (T::one() - rho * rho).sqrt();
    (T::one() - (-x).exp()) * law.cdf(scaled)
}

/// Second-order conditional CDF at standardized coordinate `z`:
/// `Ψ(z) − t^{−1/2} · ρ/√(1−ρ²) · Ψ′(z)`, clipped to `[0, 1]`.
pub fn conditional_cdf_second_order<T: Real>(z: T, rho: T, t: T, law: &LimitLaw<T>) -> T {
    let base = law.cdf(z);
    if rho == T::zero() {
        return base;
    }
    let skew = rho / (T::one() - rho * rho).sqrt() * law.density(z) / t.sqrt();
    (base - skew).max(T::zero()).min(T::one())
}

/// Second-order conditional survivor `1 − Ψ(z) + t^{−1/2} ρ/√(1−ρ²) Ψ′(z)`,
/// clipped to `[0, 1]`.
pub fn conditional_survivor_second_order<T: Real>(z: T, rho: T, t: T, law: &LimitLaw<T>) -> T {
    let base = law.survivor(z);
    if rho == T::zero() {
        return base;
    }
    let skew = rho / (T::one() - rho * rho).sqrt() * law.density(z) / t.sqrt();
    (base + skew).max(T::zero()).min(T::one())
}

/// Factorized joint tail for exceedances of both coordinates:
/// `P(X > u + x/w(u), Y-part > y_std) ≈ e^{−x} (1 − Ψ(y_std)) P(X > u)`.
/// The caller supplies `y_std` already standardized by `√(1−ρ²)`.
pub fn joint_tail_factorization<T: Real>(survivor_u: T, x: T, y_std: T, law: &LimitLaw<T>) -> T {
    (-x).exp() * law.survivor(y_std) * survivor_u
}

/// Behavior of `P(X > u, Y > c·u)` relative to `P(X > u)` as `u → ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalRegime {
    /// `c < ρ`: the diagonal constraint is eventually free.
    EquivalentToMarginal,
    /// `c = ρ`: the ratio tends to a constant in `(0, 1)`.
    DegenerateHalf,
    /// `c > ρ`: the joint tail is exponentially negligible.
    NegligibleJoint,
}

/// Classify the diagonal ray `y = c·u`, `c ∈ (0, 1]`, against `ρ`.
pub fn diagonal_regime<T: Real>(rho: T, c: T) -> DiagonalRegime {
    let tol = T::of(1e-12);
    if (c - rho).abs() <= tol {
        DiagonalRegime::DegenerateHalf
    } else if c < rho {
        DiagonalRegime::EquivalentToMarginal
    } else {
        DiagonalRegime::NegligibleJoint
    }
}

/// Constants of the diagonal joint tail `P(X > u, Y > c·u)` for a uniform
/// angle and `c ∈ (ρ, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct DiagonalConstants<T> {
    /// Effective threshold multiplier: `α = √((1 − 2cρ + c²)/(1 − ρ²))`.
    pub alpha: T,
    /// The same constant with `c²` transcribed as `ρ²`; below 1 for `c = 1`,
    /// which contradicts its role as a threshold multiplier. Exposed so the
    /// two variants can be compared.
    pub alpha_printed: T,
    /// Prefactor `K = (1−ρ²)^{3/2} / ((1−cρ)(c−ρ))`.
    pub k_factor: T,
}

/// Compute the diagonal-ray constants; requires `ρ ∈ (−1,1)`, `c ∈ (ρ, 1]`.
pub fn diagonal_constants<T: Real>(rho: T, c: T) -> Result<DiagonalConstants<T>> {
    if !(rho > -T::one() && rho < T::one()) {
        return Err(Error::domain(format!("rho must lie in (-1,1), got {rho}")));
    }
    if !(c > rho && c <= T::one()) {
        return Err(Error::domain(format!(
            "diagonal slope must lie in (rho, 1], got c={c} with rho={rho}"
        )));
    }
    let one = T::one();
    let omr = one - rho * rho;
    let alpha = ((one - T::of(2.0) * c * rho + c * c) / omr).sqrt();
    let alpha_printed = ((one - T::of(2.0) * c * rho + rho * rho) / omr).sqrt();
    let k_factor = omr.powf(T::of(1.5)) / ((one - c * rho) * (c - rho));
    Ok(DiagonalConstants { alpha, alpha_printed, k_factor })
}

/// Closed-form diagonal joint tail for a uniform angle:
/// `α K / (2π) · S(α u) / (u · w(α u))`.
pub fn diagonal_tail_value<T: Real>(radial: &RadialModel<T>, alpha: T, k_factor: T, u: T) -> T {
    let au = alpha * u;
    alpha * k_factor / (T::PI() * T::of(2.0)) * radial.survivor(au) / (u * radial.scaling(au))
}

/// Tail of a `J` integral when the lower limit stays strictly above 1:
/// `ray_weight / (γ √(γ²−1)) · S(γu) / t · ∫_ξ^η e^{−x} ψ(x) dx`
/// with `t = u · w(γu)`.
pub fn j_tail_far_from_one<T: Real>(
    radial: &RadialModel<T>,
    law: &LimitLaw<T>,
    ray_weight: T,
    gamma: T,
    u: T,
    xi: T,
    eta: T,
) -> Result<T> {
    if !(gamma > T::one()) {
        return Err(Error::domain(format!("far-regime approximation needs gamma > 1, got {gamma}")));
    }
    let t = u * radial.scaling(gamma * u);
    let integral = exp_profile_integral(law, xi, eta)?;
    Ok(ray_weight / (gamma * (gamma * gamma - T::one()).sqrt()) * radial.survivor(gamma * u) / t
        * integral)
}

/// Tail of a `J` integral when the lower limit `γ` approaches 1 with
/// `t(γ−1) → τ`: `ray_weight · S(γu) / √t · ∫_ξ^η e^{−x} ψ(x) / √(2x+2τ) dx`.
#[allow(clippy::too_many_arguments)]
pub fn j_tail_near_one<T: Real>(
    radial: &RadialModel<T>,
    law: &LimitLaw<T>,
    ray_weight: T,
    gamma: T,
    u: T,
    tau: T,
    xi: T,
    eta: T,
) -> Result<T> {
    if tau < T::zero() || xi < T::zero() {
        return Err(Error::domain(format!(
            "near-regime approximation needs tau >= 0 and xi >= 0, got tau={tau}, xi={xi}"
        )));
    }
    let t = u * radial.scaling(gamma * u);
    let integral = exp_profile_sqrt_integral(law, tau, xi, eta)?;
    Ok(ray_weight * radial.survivor(gamma * u) / t.sqrt() * integral)
}

/// `∫_ξ^η e^{−x} ψ(x) dx`, truncated where the exponential factor underflows.
fn exp_profile_integral<T: Real>(law: &LimitLaw<T>, xi: T, eta: T) -> Result<T> {
    let cap = eta.min(T::of(700.0));
    if cap <= xi {
        return Ok(T::zero());
    }
    let opts = QuadOptions::with_tols(
        T::min_positive_value() * T::of(1e6),
        T::of(1e-12).max(T::epsilon() * T::of(50.0)),
    );
    let f = move |x: T| (-x).exp() * law.profile(x);
    if xi == T::zero() {
        // profile may be singular at 0
        let cut = T::one().min(cap);
        let head = quad::tanh_sinh(f, T::zero(), cut, &opts)?.value;
        let tail = if cap > cut {
            quad::adaptive(f, cut, cap, &quad::endpoint_refinement_splits(cut, cap), &opts)?.value
        } else {
            T::zero()
        };
        Ok(head + tail)
    } else {
        Ok(quad::adaptive(f, xi, cap, &quad::endpoint_refinement_splits(xi, cap), &opts)?.value)
    }
}

/// `∫_ξ^η e^{−x} ψ(x) / √(2x+2τ) dx`. For `τ = 0` the substitution `x = v²/2`
/// removes the square-root singularity exactly.
pub fn exp_profile_sqrt_integral<T: Real>(law: &LimitLaw<T>, tau: T, xi: T, eta: T) -> Result<T> {
    let opts = QuadOptions::with_tols(
        T::min_positive_value() * T::of(1e6),
        T::of(1e-12).max(T::epsilon() * T::of(50.0)),
    );
    if tau == T::zero() {
        let v_lo = (xi + xi).sqrt();
        let v_hi = (eta + eta).sqrt().min(T::of(42.0));
        if v_hi <= v_lo {
            return Ok(T::zero());
        }
        let f = move |v: T| (-v * v * T::of(0.5)).exp() * law.profile(v * v * T::of(0.5));
        if v_lo == T::zero() {
            let cut = T::one().min(v_hi);
            let head = quad::tanh_sinh(f, T::zero(), cut, &opts)?.value;
            let tail = if v_hi > cut {
                quad::adaptive(f, cut, v_hi, &quad::endpoint_refinement_splits(cut, v_hi), &opts)?
                    .value
            } else {
                T::zero()
            };
            return Ok(head + tail);
        }
        return Ok(quad::adaptive(f, v_lo, v_hi, &quad::endpoint_refinement_splits(v_lo, v_hi), &opts)?
            .value);
    }
    let cap = eta.min(T::of(700.0));
    if cap <= xi {
        return Ok(T::zero());
    }
    let f = move |x: T| (-x).exp() * law.profile(x) / (x + x + tau + tau).sqrt();
    if xi == T::zero() {
        let cut = T::one().min(cap);
        let head = quad::tanh_sinh(f, T::zero(), cut, &opts)?.value;
        let tail = if cap > cut {
            quad::adaptive(f, cut, cap, &quad::endpoint_refinement_splits(cut, cap), &opts)?.value
        } else {
            T::zero()
        };
        Ok(head + tail)
    } else {
        Ok(quad::adaptive(f, xi, cap, &quad::endpoint_refinement_splits(xi, cap), &opts)?.value)
    }
}

/// Largest gap on a `z` grid between the exact conditional CDF above `u` and
/// the limit law: `sup_z |P(Z_u ≤ z | X > u) − Ψ(z)|` over `n_points` values
/// of `z` equally spaced in `[−8, 8]`.
pub fn sup_distance_diagnostic<T: Real>(
    model: &PolarModel<T>,
    law: &LimitLaw<T>,
    u: T,
    n_points: usize,
) -> Result<T> {
    if n_points < 2 {
        return Err(Error::domain("sup distance needs at least 2 grid points".to_string()));
    }
    let mut worst = T::zero();
    for i in 0..n_points {
        let z = T::of(-8.0) + T::of(16.0) * T::of(i as f64) / T::of((n_points - 1) as f64);
        let y = model.conditional_threshold(u, z);
        let exact = model.conditional_cdf(u, y)?;
        let gap = (exact - law.cdf(z)).abs();
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}
