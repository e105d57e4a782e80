//! Closed-form moments of the Poisson arrival model and Monte-Carlo
//! validators for them.
//!
//! For a flow with rate `lambda` observed over `i` windows, with
//! `q = 1 - exp(-lambda)` the per-window presence probability:
//!
//! - frequency  f_i ~ sum of i Poisson(lambda):  E = i*lambda, VAR = i*lambda
//! - persistence p_i ~ Binomial(i, q):           E = i*q, VAR = i*q*(1-q)
//! - density    d_i = f_i / p_i:                 E -> lambda/q as i grows,
//!   and VAR[d_i] is bounded by lambda^2/q^2 + (lambda + lambda^2)/q.
//!
//! The density mean is exact for any conditioning on which windows are
//! present (given at least one), because packet counts in present windows
//! are iid zero-truncated Poisson draws with mean lambda/q. The ejection
//! experiment checks that consequence empirically.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model moments for one flow over a fixed horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryStats {
    pub lambda: f64,
    pub windows: u64,
    pub mean_frequency: f64,
    pub mean_persistence: f64,
    pub mean_density: f64,
    pub var_frequency: f64,
    pub var_persistence: f64,
    pub var_density_bound: f64,
}

/// Closed-form moments; errors on non-positive `lambda` or zero horizon.
pub fn theory_stats(lambda: f64, windows: u64) -> Result<TheoryStats> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::invalid("lambda", "must be finite and > 0"));
    }
    if windows == 0 {
        return Err(Error::invalid("windows", "must be >= 1"));
    }
    let i = windows as f64;
    let q = -(-lambda).exp_m1(); // 1 - e^{-lambda}, stable for small lambda
    Ok(TheoryStats {
        lambda,
        windows,
        mean_frequency: i * lambda,
        mean_persistence: i * q,
        mean_density: lambda / q,
        var_frequency: i * lambda,
        var_persistence: i * q * (1.0 - q),
        var_density_bound: (lambda / q).powi(2) + (lambda + lambda * lambda) / q,
    })
}

/// One rung of the convergence ladder: mean squared error of the empirical
/// density against the model mean at horizon `windows`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub windows: u64,
    pub mean_sq_error: f64,
    pub trials: u64,
    /// Trials redrawn because the flow never appeared (density undefined).
    pub redrawn: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub lambda: f64,
    pub mean_density: f64,
    pub points: Vec<ConvergencePoint>,
    /// MSE non-increasing along the ladder, with 20% slack for MC noise.
    pub decreasing: bool,
    pub final_mean_sq_error: f64,
}

fn sample_flow(
    rng: &mut ChaCha8Rng,
    sampler: &Poisson<f64>,
    windows: u64,
) -> (u64, u64) {
    let mut f = 0u64;
    let mut p = 0u64;
    for _ in 0..windows {
        let n = sampler.sample(rng) as u64;
        f += n;
        p += u64::from(n > 0);
    }
    (f, p)
}

/// Simulates flows at horizons 10, 100, ... up to `max_windows` and reports
/// how the squared error of the density estimator shrinks. Trials where the
/// flow never shows up (density undefined) are redrawn and counted.
pub fn validate_convergence(
    lambda: f64,
    max_windows: u64,
    trials: u64,
    seed: u64,
) -> Result<ConvergenceReport> {
    if trials == 0 {
        return Err(Error::invalid("trials", "must be >= 1"));
    }
    let stats = theory_stats(lambda, max_windows)?;
    let sampler =
        Poisson::new(lambda).map_err(|e| Error::invalid("lambda", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut ladder: Vec<u64> = Vec::new();
    let mut at = 10u64;
    while at < max_windows {
        ladder.push(at);
        at = at.saturating_mul(10);
    }
    ladder.push(max_windows);

    let mut points = Vec::with_capacity(ladder.len());
    for &windows in &ladder {
        let mut sum_sq = 0.0;
        let mut redrawn = 0u64;
        for _ in 0..trials {
            let (f, p) = loop {
                let (f, p) = sample_flow(&mut rng, &sampler, windows);
                if p > 0 {
                    break (f, p);
                }
                redrawn += 1;
            };
            let d = f as f64 / p as f64;
            sum_sq += (d - stats.mean_density).powi(2);
        }
        points.push(ConvergencePoint {
            windows,
            mean_sq_error: sum_sq / trials as f64,
            trials,
            redrawn,
        });
    }

    let decreasing = points
        .windows(2)
        .all(|pair| pair[1].mean_sq_error <= pair[0].mean_sq_error * 1.2);
    let final_mean_sq_error = points.last().expect("ladder nonempty").mean_sq_error;
    Ok(ConvergenceReport {
        lambda,
        mean_density: stats.mean_density,
        points,
        decreasing,
        final_mean_sq_error,
    })
}

/// Outcome of the random-ejection experiment: distribution of
/// `d_after - d_before` when a flow's history is truncated at a uniformly
/// random window. Under the model this difference has mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EjectionReport {
    pub lambda: f64,
    pub windows: u64,
    pub trials: u64,
    pub mean_diff: f64,
    pub std_error: f64,
    pub ci99_low: f64,
    pub ci99_high: f64,
    pub contains_zero: bool,
    /// Trials redrawn because the post-ejection suffix had no presence.
    pub redrawn: u64,
}

/// Simulates a flow over `windows` windows, picks an ejection point
/// uniformly, and compares the density computed from the surviving suffix
/// against the full-history density. Trials whose suffix has no presence are
/// redrawn (both densities must exist); the 99% confidence interval for the
/// mean difference should straddle zero.
pub fn ejection_experiment(
    lambda: f64,
    windows: u64,
    trials: u64,
    seed: u64,
) -> Result<EjectionReport> {
    if windows < 2 {
        return Err(Error::invalid("windows", "need >= 2 for an ejection point"));
    }
    if trials < 2 {
        return Err(Error::invalid("trials", "must be >= 2"));
    }
    theory_stats(lambda, windows)?;
    let sampler =
        Poisson::new(lambda).map_err(|e| Error::invalid("lambda", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut redrawn = 0u64;
    let mut counts = vec![0u64; windows as usize];
    for _ in 0..trials {
        let diff = loop {
            // Ejection at t: windows t.. survive; t >= 1 leaves a real cut.
            let t = rng.random_range(1..windows) as usize;
            for slot in counts.iter_mut() {
                *slot = sampler.sample(&mut rng) as u64;
            }
            let (mut f_full, mut p_full, mut f_tail, mut p_tail) = (0u64, 0u64, 0u64, 0u64);
            for (w, &n) in counts.iter().enumerate() {
                f_full += n;
                p_full += u64::from(n > 0);
                if w >= t {
                    f_tail += n;
                    p_tail += u64::from(n > 0);
                }
            }
            if p_tail == 0 {
                redrawn += 1;
                continue;
            }
            break f_tail as f64 / p_tail as f64 - f_full as f64 / p_full as f64;
        };
        sum += diff;
        sum_sq += diff * diff;
    }

    let n = trials as f64;
    let mean = sum / n;
    let var = (sum_sq - n * mean * mean) / (n - 1.0);
    let se = (var / n).sqrt();
    let half = 2.5758 * se; // z for 99% two-sided
    Ok(EjectionReport {
        lambda,
        windows,
        trials,
        mean_diff: mean,
        std_error: se,
        ci99_low: mean - half,
        ci99_high: mean + half,
        contains_zero: mean - half <= 0.0 && 0.0 <= mean + half,
        redrawn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_at_lambda_one() {
        let s = theory_stats(1.0, 100).unwrap();
        let q = 1.0 - (-1.0f64).exp();
        assert!((s.mean_frequency - 100.0).abs() < 1e-12);
        assert!((s.mean_persistence - 100.0 * q).abs() < 1e-12);
        assert!((s.mean_density - 1.0 / q).abs() < 1e-12);
        assert!((s.var_frequency - 100.0).abs() < 1e-12);
        assert!((s.var_persistence - 100.0 * q * (1.0 - q)).abs() < 1e-12);
        // lambda = 1: bound = 1/q^2 + (1 + 1)/q.
        assert!((s.var_density_bound - (1.0 / (q * q) + 2.0 / q)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(theory_stats(0.0, 10).is_err());
        assert!(theory_stats(-1.0, 10).is_err());
        assert!(theory_stats(f64::NAN, 10).is_err());
        assert!(theory_stats(1.0, 0).is_err());
        assert!(validate_convergence(1.0, 100, 0, 0).is_err());
        assert!(ejection_experiment(1.0, 1, 100, 0).is_err());
        assert!(ejection_experiment(1.0, 10, 1, 0).is_err());
    }

    #[test]
    fn small_lambda_is_numerically_stable() {
        let s = theory_stats(1e-9, 1000).unwrap();
        // q ~ lambda for tiny lambda, so density ~ 1.
        assert!((s.mean_density - 1.0).abs() < 1e-6);
        assert!(s.mean_persistence > 0.0);
    }

    #[test]
    fn convergence_mse_shrinks() {
        let report = validate_convergence(1.0, 1000, 2000, 9).unwrap();
        assert_eq!(report.points.len(), 3); // 10, 100, 1000
        assert!(report.decreasing, "points: {:?}", report.points);
        assert!(report.final_mean_sq_error < 1e-2);
        let first = report.points[0].mean_sq_error;
        assert!(first > report.final_mean_sq_error * 5.0);
    }

    #[test]
    fn convergence_is_deterministic() {
        let a = validate_convergence(0.5, 100, 500, 4).unwrap();
        let b = validate_convergence(0.5, 100, 500, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ejection_difference_centers_on_zero() {
        let report = ejection_experiment(1.0, 100, 20_000, 5).unwrap();
        assert!(
            report.contains_zero,
            "CI [{}, {}] excludes zero",
            report.ci99_low, report.ci99_high
        );
        assert!(report.std_error < 0.01);
    }

    #[test]
    fn ejection_redraws_only_rarely_at_moderate_rate() {
        let report = ejection_experiment(2.0, 50, 5_000, 6).unwrap();
        // Worst case (cut at the last window) still has presence prob 0.86.
        assert!(report.redrawn < report.trials / 4);
    }
}
