//! Piecewise Chebyshev interpolation of a smooth function on [0, range].

use std::f64::consts::PI;

use crate::error::Result;

const DEGREE: usize = 32;
const TAIL_COEFFS: usize = 3;
const MAX_DEPTH: u32 = 16;

#[derive(Debug, Clone)]
struct Panel {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Panel {
    fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        // Clenshaw recurrence
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs[0]
    }
}

/// Chebyshev panels on [0, range], refined by bisection until the trailing
/// coefficients of every panel fall below an absolute tolerance.
#[derive(Debug, Clone)]
pub(crate) struct ChebyshevTable {
    panels: Vec<Panel>,
    range: f64,
}

impl ChebyshevTable {
    pub(crate) fn build<F>(f: F, range: f64, tol: f64) -> Result<Self>
    where
        F: Fn(f64) -> Result<f64>,
    {
        let mut breaks = vec![0.0];
        let mut edge = 1.0f64.min(range);
        while edge < range {
            breaks.push(edge);
            edge *= 2.0;
        }
        breaks.push(range);

        let mut panels = Vec::new();
        for pair in breaks.windows(2) {
            fit(&f, pair[0], pair[1], tol, 0, &mut panels)?;
        }
        Ok(ChebyshevTable { panels, range })
    }

    /// Interpolated value; arguments outside [0, range] are clamped to the ends.
    pub(crate) fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, self.range);
        let idx = self.panels.partition_point(|p| p.hi < x).min(self.panels.len() - 1);
        self.panels[idx].eval(x)
    }

    #[cfg(test)]
    pub(crate) fn panel_count(&self) -> usize {
        self.panels.len()
    }
}

fn fit<F>(f: &F, lo: f64, hi: f64, tol: f64, depth: u32, out: &mut Vec<Panel>) -> Result<()>
where
    F: Fn(f64) -> Result<f64>,
{
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut values = [0.0; DEGREE];
    for (k, v) in values.iter_mut().enumerate() {
        let t = (PI * (k as f64 + 0.5) / DEGREE as f64).cos();
        *v = f(mid + half * t)?;
    }
    let mut coeffs = vec![0.0; DEGREE];
    for (j, c) in coeffs.iter_mut().enumerate() {
        let s: f64 = values
            .iter()
            .enumerate()
            .map(|(k, v)| v * (PI * j as f64 * (k as f64 + 0.5) / DEGREE as f64).cos())
            .sum();
        *c = 2.0 * s / DEGREE as f64;
    }
    coeffs[0] *= 0.5;

    let tail = coeffs[DEGREE - TAIL_COEFFS..].iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if tail <= tol || depth >= MAX_DEPTH {
        out.push(Panel { lo, hi, coeffs });
        Ok(())
    } else {
        fit(f, lo, mid, tol, depth + 1, out)?;
        fit(f, mid, hi, tol, depth + 1, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_smooth_functions() {
        let f = |x: f64| -0.7 * x + (1.0 + x).ln() - 0.2 * (3.0 * x).sin();
        let table = ChebyshevTable::build(|x| Ok(f(x)), 50.0, 1e-13).unwrap();
        for i in 0..=1000 {
            let x = 0.05 * i as f64;
            assert!((table.eval(x) - f(x)).abs() < 1e-11, "x={x}");
        }
    }

    #[test]
    fn small_range_is_one_panel() {
        let table = ChebyshevTable::build(|x| Ok(x * x), 0.5, 1e-13).unwrap();
        assert_eq!(table.panel_count(), 1);
        assert!((table.eval(0.3) - 0.09).abs() < 1e-15);
    }

    #[test]
    fn bisects_where_needed() {
        // sharp feature near x = 3
        let f = |x: f64| (1.0 + 400.0 * (x - 3.0).powi(2)).ln();
        let table = ChebyshevTable::build(|x| Ok(f(x)), 8.0, 1e-12).unwrap();
        assert!(table.panel_count() > 4);
        for i in 0..=800 {
            let x = 0.01 * i as f64;
            assert!((table.eval(x) - f(x)).abs() < 1e-10, "x={x}");
        }
    }
}
