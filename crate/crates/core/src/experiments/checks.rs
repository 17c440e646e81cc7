//! Self-checks for the `validate` command: the shock transform against its
//! target correlation and the exhaustive optimum against brute force.

use std::sync::Arc;

use rand::{Rng, RngExt};
use serde::Serialize;

use crate::decisions::Decisions;
use crate::error::Result;
use crate::landscape::{beta_shape, correlated_value, InteractionPattern, Landscape, ShockSample};
use crate::rng::derive_stream;

pub const CORRELATION_TOLERANCE: f64 = 0.05;
pub const KS_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Pearson correlation of paired samples.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Draws `n` uniform values, shocks each one, and returns both columns.
pub fn shock_pairs<R: Rng + ?Sized>(rho: f64, n: usize, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = beta_shape(rho)?;
    let mut before = Vec::with_capacity(n);
    let mut after = Vec::with_capacity(n);
    for _ in 0..n {
        let f: f64 = rng.random();
        before.push(f);
        after.push(correlated_value(f, ShockSample::draw(a, rng)));
    }
    Ok((before, after))
}

/// One-sample Kolmogorov-Smirnov test against U(0,1). Returns the statistic
/// and its asymptotic p-value.
pub fn ks_uniform(values: &[f64]) -> (f64, f64) {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i as f64 + 1.0) / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max);
    (d, kolmogorov_sf((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d))
}

fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Random interaction pattern with each off-diagonal entry set with
/// probability `density`.
pub fn random_pattern<R: Rng + ?Sized>(n: usize, density: f64, rng: &mut R) -> InteractionPattern {
    let matrix: Vec<bool> = (0..n * n).map(|_| rng.random_bool(density)).collect();
    InteractionPattern::from_matrix(n, &matrix).expect("square matrix")
}

/// Maximum over all configurations, enumerated in plain binary order.
pub fn brute_force_max(landscape: &Landscape) -> Result<f64> {
    let n = landscape.n_tasks();
    let mut best = f64::NEG_INFINITY;
    for bits in 0..1u64 << n {
        best = best.max(landscape.performance(&Decisions::from_bits(bits, n), None)?);
    }
    Ok(best)
}

/// Number of random landscapes (N ≤ 10) where the exhaustive optimum
/// disagrees with brute force.
pub fn optimum_mismatches(count: usize, seed: u64) -> Result<usize> {
    let mut mismatches = 0;
    for i in 0..count {
        let mut rng = derive_stream(seed, "checks/optimum", i as u64);
        let n = rng.random_range(1..=10);
        let density = rng.random_range(0.0..0.6);
        let pattern = Arc::new(random_pattern(n, density, &mut rng));
        let landscape = Landscape::generate(pattern, &mut rng);
        let (max, argmax) = landscape.global_max()?;
        let brute = brute_force_max(&landscape)?;
        let at_argmax = landscape.performance(&argmax, None)?;
        if max != brute || at_argmax != max {
            mismatches += 1;
        }
    }
    Ok(mismatches)
}

/// Correlation checks at each `rho`, a uniformity check of the shocked
/// values at zero correlation, and the optimum oracle.
pub fn run_checks(rhos: &[f64], entries: usize, landscapes: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for (i, &rho) in rhos.iter().enumerate() {
        let mut rng = derive_stream(seed, "checks/correlation", i as u64);
        let (before, after) = shock_pairs(rho, entries, &mut rng)?;
        let r = pearson(&before, &after);
        out.push(CheckOutcome {
            name: format!("shock correlation rho={rho}"),
            passed: (r - rho).abs() <= CORRELATION_TOLERANCE,
            detail: format!("empirical {r:.4} over {entries} entries, tolerance ±{CORRELATION_TOLERANCE}"),
        });
    }

    let mut rng = derive_stream(seed, "checks/uniformity", 0);
    let (_, after) = shock_pairs(0.0, entries, &mut rng)?;
    let (d, p) = ks_uniform(&after);
    out.push(CheckOutcome {
        name: "shocked values uniform at rho=0".into(),
        passed: p > KS_ALPHA,
        detail: format!("KS D={d:.5}, p={p:.4}, alpha {KS_ALPHA}"),
    });

    let mismatches = optimum_mismatches(landscapes, seed)?;
    out.push(CheckOutcome {
        name: "exhaustive optimum equals brute force".into(),
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatches over {landscapes} random landscapes with N <= 10"),
    });
    Ok(out)
}
