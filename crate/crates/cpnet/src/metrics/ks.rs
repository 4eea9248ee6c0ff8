//! One-sample Kolmogorov-Smirnov test against U[0,1].

use crate::error::{Error, Result};

/// KS statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KsResult {
    /// Sup distance between the empirical CDF and the uniform CDF.
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sided KS test of `values` against U[0,1].
///
/// The statistic is the exact sup over the ECDF step points. The p-value
/// uses the asymptotic Kolmogorov series
/// `Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2)` at
/// `lambda = (sqrt(n) + 0.12 + 0.11/sqrt(n)) * D`, truncated once terms
/// drop below 1e-10; adequate from a few hundred samples up.
pub fn ks_uniformity(values: &[f64]) -> Result<KsResult> {
    if values.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "KS test needs at least 5 samples, got {}",
            values.len()
        )));
    }
    if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidParameter(format!(
            "KS input {bad} outside [0,1]"
        )));
    }

    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len() as f64;
    let mut d = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        // ECDF jumps from i/n to (i+1)/n at x; uniform CDF is x itself
        let below = (x - i as f64 / n).abs();
        let above = ((i + 1) as f64 / n - x).abs();
        d = d.max(below).max(above);
    }

    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=1000 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-10 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_computed_three_point_sample() {
        // padded to 5 points to satisfy the size gate, using the midpoint
        // grid {1/(n+1) .. n/(n+1)} whose D is exactly 1/(n+1)
        let sample = [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0, 4.0 / 6.0, 5.0 / 6.0];
        let r = ks_uniformity(&sample).unwrap();
        assert!((r.statistic - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_half_three_quarter_statistic() {
        // {0.25, 0.5, 0.75} has D = 0.25; verified with the direct sup
        // below since the crate gate needs n >= 5
        let sorted = [0.25, 0.5, 0.75];
        let n = 3.0;
        let mut d = 0.0_f64;
        for (i, &x) in sorted.iter().enumerate() {
            d = d.max((x - i as f64 / n).abs()).max(((i + 1) as f64 / n - x).abs());
        }
        assert!((d - 0.25).abs() < 1e-15);
    }

    #[test]
    fn midpoint_grid_statistic_shrinks_with_n() {
        for n in [9usize, 99, 999] {
            let sample: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
            let r = ks_uniformity(&sample).unwrap();
            assert!(
                (r.statistic - 1.0 / (n + 1) as f64).abs() < 1e-12,
                "n={n}: {}",
                r.statistic
            );
        }
    }

    #[test]
    fn statistic_matches_brute_force_grid_sup() {
        // sample values snapped to the grid so the brute-force sup over
        // grid points is exact
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let grid_n = 10_000;
        let sample: Vec<f64> = (0..500)
            .map(|_| rng.gen_range(0..=grid_n) as f64 / grid_n as f64)
            .collect();
        let r = ks_uniformity(&sample).unwrap();

        let mut sorted = sample.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = sorted.len() as f64;
        let ecdf = |x: f64| sorted.partition_point(|&v| v <= x) as f64 / n;
        let ecdf_left = |x: f64| sorted.partition_point(|&v| v < x) as f64 / n;
        let mut brute = 0.0_f64;
        for g in 0..=grid_n {
            let x = g as f64 / grid_n as f64;
            brute = brute.max((ecdf(x) - x).abs()).max((ecdf_left(x) - x).abs());
        }
        assert!(
            (r.statistic - brute).abs() < 1e-9,
            "closed form {} vs brute {brute}",
            r.statistic
        );
    }

    #[test]
    fn uniform_draws_rarely_reject() {
        // under the null, p > 0.01 should hold about 99% of the time
        let mut accept = 0;
        let seeds = 40;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let sample: Vec<f64> = (0..10_000).map(|_| rng.gen_range(0.0..1.0)).collect();
            if ks_uniformity(&sample).unwrap().p_value > 0.01 {
                accept += 1;
            }
        }
        assert!(
            accept as f64 >= 0.95 * seeds as f64,
            "only {accept}/{seeds} accepted"
        );
    }

    #[test]
    fn non_uniform_sample_rejects() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sample: Vec<f64> = (0..5_000)
            .map(|_| rng.gen_range(0.0..1.0f64).powi(3))
            .collect();
        let r = ks_uniformity(&sample).unwrap();
        assert!(r.p_value < 1e-6);
        assert!(r.statistic > 0.2);
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        assert!(ks_uniformity(&[0.1, 0.2, 0.3, 0.4, 1.2]).is_err());
        assert!(ks_uniformity(&[0.1, 0.2]).is_err());
    }
}
