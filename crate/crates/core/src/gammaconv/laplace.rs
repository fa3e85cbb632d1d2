//! Laplace transforms of powers X^q of gamma convolutions,
//! φ(s) = E[exp(−s·X^q)] = ∫₀^∞ e^{−s x^q} f(x) dx.

use super::density::Density;
use super::{GammaConvolution, PowerLaw};
use crate::error::{Error, Result};
use crate::quadrature::{find_truncation, try_integrate_to, QuadratureConfig};

fn check_argument(s: f64) -> Result<()> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::domain(format!("transform argument must be finite and >= 0, got {s}")));
    }
    Ok(())
}

/// E[exp(−s·X^q)] for an unshifted convolution X, clamped to (0, 1].
///
/// Builds the density evaluator on every call; use [`PowerLaplace`] to
/// evaluate many arguments of one model.
pub fn laplace_power(gc: &GammaConvolution, p: PowerLaw, s: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_argument(s)?;
    gc.require_unshifted()?;
    let density = Density::new(gc, cfg)?;
    let q = p.q();
    let integrand = |x: f64| Ok((-s * x.powf(q)).exp() * density.density(x)?);
    // mass beyond the density's support end is below 1e-16
    let upper = find_truncation(&integrand, cfg)?.min(density.support_end());
    let value = try_integrate_to(integrand, upper, cfg)?.value;
    Ok(clamp_unit(value))
}

fn clamp_unit(v: f64) -> f64 {
    v.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Prepared evaluator of s ↦ E[exp(−s·X^q)] for one model and power.
///
/// All arguments share one truncation point, so density values at the
/// quadrature nodes are computed once and reused through the density memo.
/// The outer integral is controlled in relative terms only, which keeps the
/// relative accuracy uniform when φ(s) is small.
pub struct PowerLaplace {
    density: Density,
    power: PowerLaw,
    outer: QuadratureConfig,
}

impl PowerLaplace {
    pub fn new(gc: &GammaConvolution, power: PowerLaw, cfg: &QuadratureConfig) -> Result<Self> {
        gc.require_unshifted()?;
        let density = Density::new(gc, cfg)?;
        let outer = QuadratureConfig { abs_tol: f64::MIN_POSITIVE, ..*cfg };
        Ok(PowerLaplace { density, power, outer })
    }

    pub fn power(&self) -> PowerLaw {
        self.power
    }

    /// Relative accuracy targeted by [`PowerLaplace::eval`].
    pub fn rel_tol(&self) -> f64 {
        self.outer.rel_tol
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        check_argument(s)?;
        let q = self.power.q();
        let value = self.density.integrate_with(|x| (-s * x.powf(q)).exp(), &self.outer)?;
        Ok(clamp_unit(value))
    }
}
