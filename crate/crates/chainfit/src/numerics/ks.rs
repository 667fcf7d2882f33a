//! Two-sample Kolmogorov–Smirnov statistic with the asymptotic p-value.

use super::NumericsError;

/// Asymptotic Kolmogorov survival function
/// `Q(λ) = 2 Σ_{j≥1} (-1)^{j-1} exp(-2 j² λ²)`, clamped to `[0, 1]`.
///
/// For small λ the alternating series is evaluated through its
/// theta-function dual, which converges in a handful of terms.
pub fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // 1 - (√(2π)/λ) Σ_{j odd} exp(-j²π²/(8λ²))
        let factor = (2.0 * std::f64::consts::PI).sqrt() / lambda;
        let w = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        let mut j = 1.0f64;
        loop {
            let term = (-j * j * w).exp();
            sum += term;
            if term < 1e-12 {
                break;
            }
            j += 2.0;
        }
        1.0 - factor * sum
    } else {
        let mut sum = 0.0;
        let mut sign = 1.0;
        let mut j = 1.0f64;
        loop {
            let term = (-2.0 * j * j * lambda * lambda).exp();
            sum += sign * term;
            if term < 1e-12 {
                break;
            }
            sign = -sign;
            j += 1.0;
        }
        2.0 * sum
    };
    p.clamp(0.0, 1.0)
}

/// Two-sample KS test: `D = sup |ECDF_a - ECDF_b|` over the pooled sorted
/// support (right-continuous at each support point, exact for discrete
/// data), with the asymptotic p-value at
/// `λ = D √(n_a n_b / (n_a + n_b))`.
pub fn ks_two_sample(sample_a: &[f64], sample_b: &[f64]) -> Result<(f64, f64), NumericsError> {
    if sample_a.is_empty() || sample_b.is_empty() {
        return Err(NumericsError::EmptySample);
    }
    let mut a = sample_a.to_vec();
    let mut b = sample_b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).expect("NaN in KS sample"));
    b.sort_by(|x, y| x.partial_cmp(y).expect("NaN in KS sample"));
    let (na, nb) = (a.len() as f64, b.len() as f64);

    let mut d = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        let fa = i as f64 / na;
        let fb = j as f64 / nb;
        d = d.max((fa - fb).abs());
    }
    let lambda = d * (na * nb / (na + nb)).sqrt();
    Ok((d, kolmogorov_tail(lambda)))
}
