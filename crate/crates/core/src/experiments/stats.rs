//! Two-sided Student t-tests.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TTest {
    pub t: f64,
    pub df: f64,
    /// Two-sided p-value.
    pub p: f64,
    /// Zero variance with a nonzero mean difference: `t` is infinite and `p`
    /// is 0 by convention.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceModel {
    /// Pooled variance, `df = n_a + n_b - 2`.
    #[default]
    Pooled,
    /// Welch-Satterthwaite.
    Welch,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

// Standard errors this small relative to the mean difference are rounding
// residue of identical differences.
const DEGENERATE_RATIO: f64 = 1e-12;

fn from_statistic(diff: f64, se: f64, df: f64) -> TTest {
    if se == 0.0 || se <= DEGENERATE_RATIO * diff.abs() {
        return if diff == 0.0 {
            TTest { t: 0.0, df, p: 1.0, degenerate: false }
        } else {
            TTest { t: diff.signum() * f64::INFINITY, df, p: 0.0, degenerate: true }
        };
    }
    let t = diff / se;
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    TTest { t, df, p, degenerate: false }
}

fn check_len(name: &str, xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return Err(Error::Config(format!(
            "t-test needs at least 2 values in {name}, got {}",
            xs.len()
        )));
    }
    Ok(())
}

/// Two-sample test of `mean(a) - mean(b)`.
pub fn t_test_independent(a: &[f64], b: &[f64], model: VarianceModel) -> Result<TTest> {
    check_len("the first sample", a)?;
    check_len("the second sample", b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ((ma, va), (mb, vb)) = (mean_var(a), mean_var(b));
    let (se, df) = match model {
        VarianceModel::Pooled => {
            let df = na + nb - 2.0;
            let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
        VarianceModel::Welch => {
            let (sa, sb) = (va / na, vb / nb);
            let se2 = sa + sb;
            let df = if se2 == 0.0 {
                na + nb - 2.0
            } else {
                se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0))
            };
            (se2.sqrt(), df)
        }
    };
    Ok(from_statistic(ma - mb, se, df))
}

/// Paired test of `after - before`, pairs matched by position.
pub fn t_test_paired(before: &[f64], after: &[f64]) -> Result<TTest> {
    if before.len() != after.len() {
        return Err(Error::Config(format!(
            "paired t-test needs equal lengths, got {} and {}",
            before.len(),
            after.len()
        )));
    }
    check_len("the paired sample", before)?;
    let diffs: Vec<f64> = before.iter().zip(after).map(|(b, a)| a - b).collect();
    let n = diffs.len() as f64;
    let (mean, var) = mean_var(&diffs);
    Ok(from_statistic(mean, (var / n).sqrt(), n - 1.0))
}

/// Significance marker: `**` for p <= 0.01, `*` for p <= 0.05, else `n.s.`.
pub fn stars(p: f64) -> &'static str {
    if p <= 0.01 {
        "**"
    } else if p <= 0.05 {
        "*"
    } else {
        "n.s."
    }
}
