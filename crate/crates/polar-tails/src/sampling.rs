//! Exact simulation of polar pairs and empirical tail diagnostics.
//!
//! Sampling is inverse-transform in both coordinates: a radius from the
//! survivor quantile, an angle from the angular quantile, combined as
//! `(R cos Θ, R sin(Θ + arcsin ρ))`. The generator is a counter-based
//! 64-bit mixer, so the stream for a given `(seed, chunk)` key is fixed;
//! chunks of 8192 pairs are drawn in parallel and merged in chunk order,
//! which makes output independent of thread count.

use crate::error::{Error, Result};
use crate::polar_exact::PolarModel;
use crate::scalar::Real;
use rayon::prelude::*;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const CHUNK: usize = 8192;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based generator: state advances by a fixed odd stride and each
/// output is a bijective mix of the state.
#[derive(Debug, Clone)]
pub struct CounterRng {
    state: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { state: mix64(seed ^ GOLDEN) }
    }

    /// Stream keyed by `(seed, stream)`; distinct keys give statistically
    /// independent streams.
    pub fn keyed(seed: u64, stream: u64) -> Self {
        let base = mix64(seed ^ GOLDEN) ^ mix64(stream.wrapping_mul(0x5851_F42D_4C95_7F2D));
        CounterRng { state: base }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform draw strictly inside `(0, 1)`, with 53-bit resolution.
    #[inline]
    pub fn uniform<T: Real>(&mut self) -> T {
        let bits = self.next_u64() >> 11;
        T::of((bits as f64 + 0.5) / 9_007_199_254_740_992.0)
    }
}

/// Draw `n` pairs from the polar model. Deterministic in `(model, n, seed)`.
pub fn sample_polar<T: Real>(model: &PolarModel<T>, n: usize, seed: u64) -> Result<Vec<(T, T)>> {
    let shift = model.angle_shift();
    let n_chunks = n.div_ceil(CHUNK);
    let chunks: Vec<Result<Vec<(T, T)>>> = (0..n_chunks)
        .into_par_iter()
        .map(|k| {
            let lo = k * CHUNK;
            let hi = ((k + 1) * CHUNK).min(n);
            let mut rng = CounterRng::keyed(seed, k as u64);
            let mut out = Vec::with_capacity(hi - lo);
            for _ in lo..hi {
                let pr: T = rng.uniform();
                let pa: T = rng.uniform();
                let r = model.radial.quantile(pr)?;
                let theta = model.angular.quantile(pa)?;
                out.push((r * theta.cos(), r * (theta + shift).sin()));
            }
            Ok(out)
        })
        .collect();
    let mut data = Vec::with_capacity(n);
    for chunk in chunks {
        data.extend(chunk?);
    }
    Ok(data)
}

/// FNV-1a hash of a model descriptor, as 16 lowercase hex digits. Stamped
/// into output files so a table can be traced back to its model.
pub fn model_hash(descriptor: &str) -> String {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for byte in descriptor.as_bytes() {
        h ^= *byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    format!("{h:016x}")
}

/// Fraction of pairs with `x > x0` and `y > y0`.
pub fn empirical_joint_survivor<T: Real>(data: &[(T, T)], x0: T, y0: T) -> T {
    let hits = data.iter().filter(|(x, y)| *x > x0 && *y > y0).count();
    T::of(hits as f64) / T::of(data.len() as f64)
}

/// Fraction of pairs with `x > x0`.
pub fn empirical_marginal_survivor<T: Real>(data: &[(T, T)], x0: T) -> T {
    let hits = data.iter().filter(|(x, _)| *x > x0).count();
    T::of(hits as f64) / T::of(data.len() as f64)
}

/// Empirical `P(Y ≤ y | X > u)`. Needs at least 50 exceedances.
pub fn empirical_conditional_cdf<T: Real>(data: &[(T, T)], u: T, y: T) -> Result<T> {
    let mut n_exc = 0usize;
    let mut hits = 0usize;
    for (x, yv) in data {
        if *x > u {
            n_exc += 1;
            if *yv <= y {
                hits += 1;
            }
        }
    }
    if n_exc < 50 {
        return Err(Error::InsufficientData(format!(
            "conditional cdf needs at least 50 exceedances above u={}, found {n_exc}",
            u.as_f64()
        )));
    }
    Ok(T::of(hits as f64) / T::of(n_exc as f64))
}

/// Exceedance pairs above `u`, rescaled to the limit coordinates:
/// the first entry is `(x − u) · w(u)` and the second is the standardized
/// second coordinate `(y − ρu) √t / (u √(1−ρ²))`.
pub fn rescaled_exceedances<T: Real>(
    model: &PolarModel<T>,
    data: &[(T, T)],
    u: T,
) -> Result<Vec<(T, T)>> {
    let w = model.radial.scaling(u);
    if !(w > T::zero()) || !w.is_finite() {
        return Err(Error::domain(format!(
            "rescaling needs a positive finite scaling at u={}",
            u.as_f64()
        )));
    }
    let mut out = Vec::new();
    for (x, y) in data {
        if *x > u {
            out.push(((*x - u) * w, model.standardized_coordinate(u, *y)));
        }
    }
    Ok(out)
}

/// Two-sided Kolmogorov-Smirnov statistic of a sample against `cdf`.
pub fn ks_statistic<T: Real>(sample: &[T], cdf: impl Fn(T) -> T) -> T {
    let mut sorted: Vec<T> = sample.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("sample values must be comparable"));
    let n = T::of(sorted.len() as f64);
    let mut d = T::zero();
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        let lo = f - T::of(i as f64) / n;
        let hi = T::of((i + 1) as f64) / n - f;
        d = d.max(lo).max(hi);
    }
    d
}

/// Kolmogorov tail function `Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}`.
pub fn kolmogorov_tail<T: Real>(lambda: T) -> T {
    if lambda <= T::of(0.18) {
        return T::one();
    }
    let mut sum = T::zero();
    let mut sign = T::one();
    for k in 1..200u32 {
        let kk = T::of(k as f64);
        let term = (-T::of(2.0) * kk * kk * lambda * lambda).exp();
        sum += sign * term;
        if term < T::of(1e-18) {
            break;
        }
        sign = -sign;
    }
    (T::of(2.0) * sum).min(T::one()).max(T::zero())
}

/// Asymptotic KS p-value: `Q(√n · d)`.
pub fn ks_pvalue<T: Real>(d: T, n: usize) -> T {
    kolmogorov_tail(T::of(n as f64).sqrt() * d)
}
