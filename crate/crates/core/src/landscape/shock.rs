use rand::{Rng, RngExt};

use super::Landscape;
use crate::error::{Error, Result};

/// Beta(a, 1) shape that yields correlation `rho` between a contribution and
/// its shocked replacement: `a = (sqrt((49 + rho) / (1 + rho)) - 5) / 2`.
pub fn beta_shape(rho: f64) -> Result<f64> {
    if !(rho > -1.0 && rho < 1.0) {
        return Err(Error::RhoOutOfDomain(rho));
    }
    Ok(0.5 * (((49.0 + rho) / (1.0 + rho)).sqrt() - 5.0))
}

/// The two draws used to shock one table entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShockSample {
    /// Branch selector, U(0,1).
    pub v: f64,
    /// Beta(a, 1) draw.
    pub w: f64,
}

impl ShockSample {
    /// Draws `v` then `w`. Beta(a,1) has CDF `x^a`, so `w = u^(1/a)`.
    pub fn draw<R: Rng + ?Sized>(a: f64, rng: &mut R) -> Self {
        debug_assert!(a > 0.0);
        let v = rng.random::<f64>();
        let w = rng.random::<f64>().powf(1.0 / a);
        ShockSample { v, w }
    }
}

/// Correlated replacement for contribution `f`.
#[inline]
pub fn correlated_value(f: f64, sample: ShockSample) -> f64 {
    if sample.v < 0.5 {
        (sample.w - f).abs()
    } else {
        1.0 - (1.0 - sample.w - f).abs()
    }
}

/// Returns a shocked copy of `landscape`; every entry gets a fresh sample.
pub fn apply_shock<R: Rng + ?Sized>(landscape: &Landscape, rho: f64, rng: &mut R) -> Result<Landscape> {
    let a = beta_shape(rho)?;
    let tables = landscape
        .tables()
        .iter()
        .map(|table| {
            table
                .iter()
                .map(|&f| correlated_value(f, ShockSample::draw(a, rng)))
                .collect()
        })
        .collect();
    Ok(landscape.with_tables(tables))
}
