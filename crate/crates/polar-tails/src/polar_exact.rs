//! Exact marginal, joint, and conditional tail probabilities of a bivariate
//! polar model, computed by one-dimensional angular quadrature.
//!
//! The vector is `(X, Y) = (R cos Θ, R sin(Θ + arcsin ρ))`. Conditioning on
//! `Θ = θ` makes every probability a survivor evaluation, so tail events reduce
//! to integrals of `S(level / direction(θ)) · h(θ)` over angle ranges. Two
//! changes of variable put the two recurring weights into that form with the
//! `1/(t √(t²−1))` factor removed exactly:
//!
//! * `t = 1/cos θ` turns `∫ S(x t) h(arccos(1/t)) / (t √(t²−1)) dt` into
//!   `∫ S(x / cos θ) h(θ) dθ`,
//! * `t = 1/sin v` turns the `arcsin ρ`-shifted weight into
//!   `∫ S(y / sin v) h(v − arcsin ρ) dv`.
//!
//! All remaining integrands are bounded; the only quadrature hazards are knots
//! of `h` (handled by cell splits and tanh-sinh) and the sharp peak of the
//! survivor factor, whose width is of order `1/√(t(u))` (handled by geometric
//! presplits toward every cell endpoint).

use crate::angular::{AngularModel, Knot};
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions, QuadResult};
use crate::radial::RadialModel;
use crate::scalar::Real;

/// Which of the two integral weights a [`JSpec`] refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JWeight {
    /// Weight `h(arccos(1/t))`: rays measured against the x-axis.
    Tilde,
    /// Weight `h(arcsin(1/t) − arcsin ρ)`: rays measured against the rotated
    /// second coordinate.
    BarShifted,
}

/// Specification of the integral `J(a, b, x, weight) =
/// ∫_a^b (1 − F(x t)) weight(t) / (t √(t² − 1)) dt` with `1 ≤ a < b ≤ ∞`.
#[derive(Debug, Clone, Copy)]
pub struct JSpec<T> {
    pub lower: T,
    pub upper: T,
    pub level: T,
    pub weight: JWeight,
}

/// A bivariate polar model: radius, angle, and pseudo-correlation.
#[derive(Clone)]
pub struct PolarModel<T> {
    pub radial: RadialModel<T>,
    pub angular: AngularModel<T>,
    rho: T,
    asin_rho: T,
}

impl<T: Real> PolarModel<T> {
    /// Requires `ρ ∈ (−1, 1)`.
    pub fn new(radial: RadialModel<T>, angular: AngularModel<T>, rho: T) -> Result<Self> {
        if !(rho > -T::one() && rho < T::one()) {
            return Err(Error::invalid(format!(
                "pseudo-correlation must lie in (-1, 1), got {rho}"
            )));
        }
        Ok(PolarModel { radial, angular, rho, asin_rho: rho.asin() })
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    /// Angular offset `arcsin ρ` between the two coordinate rays.
    pub fn angle_shift(&self) -> T {
        self.asin_rho
    }

    /// Canonical description used in model hashes and manifests.
    pub fn descriptor(&self) -> String {
        format!(
            "polar[radial={},angular={},rho={:e}]",
            self.radial.descriptor(),
            self.angular.descriptor(),
            self.rho.as_f64()
        )
    }

    /// Lower integration limit induced by the joint event `{X > x, Y > y}` on
    /// the x-ray term: `α = √(1 + ((y/x − ρ)² / (1 − ρ²)))`. Requires `x > 0`.
    pub fn alpha(&self, x: T, y: T) -> Result<T> {
        if !(x > T::zero()) {
            return Err(Error::domain(format!("alpha requires x > 0, got {x}")));
        }
        let d = y / x - self.rho;
        Ok((T::one() + d * d / (T::one() - self.rho * self.rho)).sqrt())
    }

    /// Companion limit on the rotated-coordinate term: `α* = α · x / y`.
    /// Requires `x > 0` and `y > 0`.
    pub fn alpha_star(&self, x: T, y: T) -> Result<T> {
        if !(y > T::zero()) {
            return Err(Error::domain(format!("alpha_star requires y > 0, got {y}")));
        }
        Ok(self.alpha(x, y)? * x / y)
    }

    /// Evaluate a `J` integral through its angular substitution.
    pub fn j_integral(&self, spec: &JSpec<T>) -> Result<QuadResult<T>> {
        let JSpec { lower: a, upper: b, level: x, weight } = *spec;
        if !(a >= T::one()) || !(b > a) || !(x > T::zero()) || !a.is_finite() {
            return Err(Error::domain(format!(
                "j_integral needs 1 <= a < b and x > 0, got a={a}, b={b}, x={x}"
            )));
        }
        let half_pi = T::PI() * T::of(0.5);
        match weight {
            JWeight::Tilde => {
                let lo = (a.recip()).acos();
                let hi = if b.is_finite() { (b.recip()).acos() } else { half_pi };
                let radial = self.radial.clone();
                let angular = self.angular.clone();
                let f = move |th: T| {
                    let c = th.cos();
                    if c <= T::zero() {
                        return T::zero();
                    }
                    survivor_at(&radial, x / c) * angular.density(th)
                };
                let knots = self.angular.quadrature_knots();
                let scale = survivor_at(&self.radial, x * a);
                integrate_piecewise(&f, lo, hi, &knots, scale)
            }
            JWeight::BarShifted => {
                let lo = if b.is_finite() { (b.recip()).asin() } else { T::zero() };
                let hi = (a.recip()).asin();
                let shift = self.asin_rho;
                let radial = self.radial.clone();
                let angular = self.angular.clone();
                let f = move |v: T| {
                    let s = v.sin();
                    if s <= T::zero() {
                        return T::zero();
                    }
                    survivor_at(&radial, x / s) * angular.density(v - shift)
                };
                let knots: Vec<Knot<T>> = self
                    .angular
                    .quadrature_knots()
                    .into_iter()
                    .map(|k| Knot { at: k.at + shift, singular: k.singular })
                    .collect();
                let scale = survivor_at(&self.radial, x * a);
                integrate_piecewise(&f, lo, hi, &knots, scale)
            }
        }
    }

    /// `P(X > x)` for `x > 0`.
    ///
    /// Symmetric angular densities use the half-plane reduction
    /// `2 J(1, ∞, x, tilde)`; the general route integrates over the full
    /// half-circle where `cos θ > 0`.
    pub fn marginal_survivor(&self, x: T) -> Result<T> {
        if !(x > T::zero()) {
            return Err(Error::domain(format!(
                "marginal_survivor requires x > 0, got {x}"
            )));
        }
        if self.angular.is_symmetric() {
            let j = self.j_integral(&JSpec {
                lower: T::one(),
                upper: T::infinity(),
                level: x,
                weight: JWeight::Tilde,
            })?;
            Ok((j.value + j.value).min(T::one()))
        } else {
            let half_pi = T::PI() * T::of(0.5);
            let r = self.integrate_x_ray(x, -half_pi, half_pi)?;
            Ok(r.min(T::one()))
        }
    }

    /// `P(X > x, Y > y)` for `x > 0` and any real `y`.
    pub fn joint_survivor(&self, x: T, y: T) -> Result<T> {
        if !(x > T::zero()) {
            return Err(Error::domain(format!(
                "joint_survivor requires x > 0, got {x}"
            )));
        }
        if !y.is_finite() {
            return Err(Error::domain(format!("joint_survivor requires finite y, got {y}")));
        }
        let ratio = y / x;
        let use_j_form = self.angular.is_symmetric() && y > T::zero() && y <= x && ratio != self.rho;
        let v = if use_j_form && ratio > self.rho {
            let alpha = self.alpha(x, y)?;
            let alpha_star = self.alpha_star(x, y)?;
            let jt = self.j_integral(&JSpec {
                lower: alpha,
                upper: T::infinity(),
                level: x,
                weight: JWeight::Tilde,
            })?;
            let jb = self.j_integral(&JSpec {
                lower: alpha_star,
                upper: T::infinity(),
                level: y,
                weight: JWeight::BarShifted,
            })?;
            jt.value + jb.value
        } else if use_j_form && ratio < self.rho {
            // below the central ray the x-ray term flips to its complement
            let alpha = self.alpha(x, y)?;
            let alpha_star = self.alpha_star(x, y)?;
            let j1 = self.j_integral(&JSpec {
                lower: T::one(),
                upper: T::infinity(),
                level: x,
                weight: JWeight::Tilde,
            })?;
            let jt = self.j_integral(&JSpec {
                lower: alpha,
                upper: T::infinity(),
                level: x,
                weight: JWeight::Tilde,
            })?;
            let jb = self.j_integral(&JSpec {
                lower: alpha_star,
                upper: T::infinity(),
                level: y,
                weight: JWeight::BarShifted,
            })?;
            j1.value + j1.value - jt.value + jb.value
        } else {
            self.joint_survivor_by_angle(x, y)?
        };
        Ok(v.max(T::zero()).min(T::one()))
    }

    /// Joint survivor from the defining angular decomposition, valid for every
    /// `y` and for asymmetric angular densities.
    fn joint_survivor_by_angle(&self, x: T, y: T) -> Result<T> {
        let half_pi = T::PI() * T::of(0.5);
        let theta0 = -self.asin_rho;
        if y > T::zero() {
            // {Y > y} needs sin(θ + arcsin ρ) > 0; the binding constraint
            // switches from Y to X at the ray through (x, y)
            let theta_star = self.ray_angle(y / x);
            let i1 = self.integrate_x_ray(x, theta_star, half_pi)?;
            let i2 = self.integrate_y_ray(y, theta0, theta_star)?;
            Ok(i1 + i2)
        } else if y == T::zero() {
            self.integrate_x_ray(x, theta0, half_pi)
        } else {
            let theta_star = self.ray_angle(y / x);
            let i1 = self.integrate_x_ray(x, theta0, half_pi)?;
            let i2 = self.integrate_band(x, y, theta_star, theta0)?;
            Ok(i1 + i2)
        }
    }

    /// Conditional CDF `P(Y ≤ y | X > u)`.
    pub fn conditional_cdf(&self, u: T, y: T) -> Result<T> {
        let marginal = self.marginal_survivor(u)?;
        if !(marginal > T::zero()) {
            return Err(Error::numeric(format!(
                "marginal survivor underflows at u={u}; conditional law undefined"
            )));
        }
        let joint = self.joint_survivor(u, y)?;
        let cdf = T::one() - joint / marginal;
        Ok(cdf.max(T::zero()).min(T::one()))
    }

    /// Threshold `y` whose standardized exceedance coordinate is `z`:
    /// `y = ρu + z · u √(1−ρ²) / √t(u)`.
    pub fn conditional_threshold(&self, u: T, z: T) -> T {
        let t = self.radial.t_scale(u);
        self.rho * u + z * u * (T::one() - self.rho * self.rho).sqrt() / t.sqrt()
    }

    /// Inverse of [`conditional_threshold`]: the standardized coordinate of a
    /// raw threshold `y`.
    pub fn standardized_coordinate(&self, u: T, y: T) -> T {
        let t = self.radial.t_scale(u);
        (y - self.rho * u) * t.sqrt() / (u * (T::one() - self.rho * self.rho).sqrt())
    }

    /// Angle of the ray `y/x = ratio` in the rotated geometry: the unique
    /// `θ ∈ (−π/2, π/2)` with `sin(θ + arcsin ρ)/cos θ = ratio`.
    fn ray_angle(&self, ratio: T) -> T {
        ((ratio - self.rho) / (T::one() - self.rho * self.rho).sqrt()).atan()
    }

    /// `∫ S(x / cos θ) h(θ) dθ` over `[lo, hi]`.
    fn integrate_x_ray(&self, x: T, lo: T, hi: T) -> Result<T> {
        if lo >= hi {
            return Ok(T::zero());
        }
        let radial = self.radial.clone();
        let angular = self.angular.clone();
        let f = move |th: T| {
            let c = th.cos();
            if c <= T::zero() {
                return T::zero();
            }
            survivor_at(&radial, x / c) * angular.density(th)
        };
        // survivor factor peaks at the in-range angle closest to zero
        let peak = lo.max(T::zero()).min(hi);
        let mut knots = self.angular.quadrature_knots();
        knots.push(Knot { at: peak, singular: false });
        let scale = survivor_at(&self.radial, x / peak.cos());
        Ok(integrate_piecewise(&f, lo, hi, &knots, scale)?.value)
    }

    /// `∫ S(y / sin(θ + arcsin ρ)) h(θ) dθ` over `[lo, hi]`, for `y > 0`.
    fn integrate_y_ray(&self, y: T, lo: T, hi: T) -> Result<T> {
        if lo >= hi {
            return Ok(T::zero());
        }
        let shift = self.asin_rho;
        let radial = self.radial.clone();
        let angular = self.angular.clone();
        let f = move |th: T| {
            let s = (th + shift).sin();
            if s <= T::zero() {
                return T::zero();
            }
            survivor_at(&radial, y / s) * angular.density(th)
        };
        // sin(θ + arcsin ρ) is largest at θ = π/2 − arcsin ρ or at the nearest
        // endpoint
        let crest = T::PI() * T::of(0.5) - shift;
        let peak = crest.max(lo).min(hi);
        let mut knots = self.angular.quadrature_knots();
        knots.push(Knot { at: peak, singular: false });
        let scale = survivor_at(&self.radial, y / (peak + shift).sin());
        Ok(integrate_piecewise(&f, lo, hi, &knots, scale)?.value)
    }

    /// `∫ max(0, S(x / cos θ) − S(y / sin(θ + arcsin ρ))) h(θ) dθ` over
    /// `[lo, hi]`, the band where a negative-`y` constraint caps the radius
    /// from above (`sin(θ + arcsin ρ) < 0` there).
    fn integrate_band(&self, x: T, y: T, lo: T, hi: T) -> Result<T> {
        if lo >= hi {
            return Ok(T::zero());
        }
        let shift = self.asin_rho;
        let radial = self.radial.clone();
        let angular = self.angular.clone();
        let f = move |th: T| {
            let c = th.cos();
            if c <= T::zero() {
                return T::zero();
            }
            let s = (th + shift).sin();
            let upper = if s < T::zero() { survivor_at(&radial, y / s) } else { T::zero() };
            let v = survivor_at(&radial, x / c) - upper;
            v.max(T::zero()) * angular.density(th)
        };
        let peak = lo.max(T::zero()).min(hi);
        let mut knots = self.angular.quadrature_knots();
        knots.push(Knot { at: peak, singular: false });
        let scale = survivor_at(&self.radial, x / peak.cos());
        Ok(integrate_piecewise(&f, lo, hi, &knots, scale)?.value)
    }
}

/// Survivor with the argument guarded against the overflow of `level/direction`
/// ratios at range endpoints.
fn survivor_at<T: Real>(radial: &RadialModel<T>, u: T) -> T {
    if u.is_infinite() {
        T::zero()
    } else {
        radial.survivor(u)
    }
}

/// Integrate `f` over `[lo, hi]` with knot-aware cell handling: cells touching
/// a singular knot use tanh-sinh, the rest adaptive Gauss–Kronrod with
/// geometric presplits toward both cell ends. `scale` anchors the absolute
/// tolerance, `scale · 1e−13` spread over the cells.
fn integrate_piecewise<T: Real>(
    f: &(dyn Fn(T) -> T + Sync),
    lo: T,
    hi: T,
    knots: &[Knot<T>],
    scale: T,
) -> Result<QuadResult<T>> {
    let mut bounds = vec![lo, hi];
    for k in knots {
        if k.at > lo && k.at < hi {
            bounds.push(k.at);
        }
    }
    bounds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let near = (hi - lo).abs() * T::epsilon() * T::of(8.0);
    bounds.dedup_by(|a, b| (*a - *b).abs() <= near);
    let is_singular = |p: T| knots.iter().any(|k| k.singular && (k.at - p).abs() <= near);

    let ncells = bounds.len() - 1;
    let abs_tol = (scale.max(T::zero()) * T::of(1e-13) + T::min_positive_value() * T::of(1e4))
        / T::of(ncells as f64);
    let rel_tol = T::of(1e-9).max(T::epsilon() * T::of(100.0));
    let opts = QuadOptions { abs_tol, rel_tol, max_intervals: 3000 };

    let mut value = T::zero();
    let mut error = T::zero();
    let mut evals = 0usize;
    for w in bounds.windows(2) {
        let r = if is_singular(w[0]) || is_singular(w[1]) {
            quad::tanh_sinh(f, w[0], w[1], &opts)?
        } else {
            let splits = quad::endpoint_refinement_splits(w[0], w[1]);
            quad::adaptive(f, w[0], w[1], &splits, &opts)?
        };
        value += r.value;
        error += r.error;
        evals += r.evals;
    }
    Ok(QuadResult { value, error, evals })
}
