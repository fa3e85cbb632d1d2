//! Densities of finite gamma sums.
//!
//! Two independent routes are provided.
//!
//! The direct route integrates over the stick-breaking cube: writing
//! σ = β₁ + ⋯ + βₙ,
//!
//! f(y) = D_n · y^{σ−1} · ∫_{(0,1)^{n−1}} e^{−y·C_n(u)} B_n(u) du,
//!
//! with C_n from [`c_n`](super::c_n) and B_n from [`b_n`](super::b_n). It is
//! used while the cube dimension n−1 stays within `max_dim`.
//!
//! The iterated route convolves one component at a time. With the regular
//! part h_k(y) = f_{S_k}(y)·y^{1−σ_k}, which is smooth and positive on
//! [0, ∞), one step reads
//!
//! h_{k+1}(y) = b^β/Γ(β) ∫₀¹ h_k(yu) u^{σ_k−1} (1−u)^{β−1} e^{−b y (1−u)} du,
//!
//! and ln h_k is stored as a piecewise Chebyshev table between steps.

use std::collections::HashMap;
use std::sync::Mutex;

use super::table::ChebyshevTable;
use super::{
    d_n, ln_dirichlet_normalizer, ln_gamma_density, stick_exponents, GammaComponent, GammaConvolution,
};
use crate::error::{Error, Result};
use crate::quadrature::{try_integrate_to, try_integrate_unit, QuadratureConfig};

/// Tail probability the default table range leaves out.
const TAIL_PROBABILITY: f64 = 1e-16;

fn check_positive(y: f64, what: &str) -> Result<()> {
    if !(y.is_finite() && y > 0.0) {
        return Err(Error::domain(format!("{what} must be positive, got {y}")));
    }
    Ok(())
}

/// Density of the sum of two independent gamma variables.
pub fn density_pair(c1: GammaComponent, c2: GammaComponent, x: f64, cfg: &QuadratureConfig) -> Result<f64> {
    check_positive(x, "density argument")?;
    let (b1, b2) = (c1.rate(), c2.rate());
    let b_min = b1.min(b2);
    let (e1, e2) = (c1.shape() - 1.0, c2.shape() - 1.0);
    let integral = try_integrate_unit(
        |p| Ok((e2 * p.ln_u + e1 * p.ln_complement - x * ((b1 - b_min) * p.complement + (b2 - b_min) * p.u)).exp()),
        e2,
        e1,
        cfg,
    )?
    .value;
    let sigma = c1.shape() + c2.shape();
    let ln_prefactor = c1.ln_normalizer() + c2.ln_normalizer() + (sigma - 1.0) * x.ln() - b_min * x;
    Ok((ln_prefactor + integral.ln()).exp())
}

/// Density by direct integration over the (n−1)-cube.
///
/// Fails with [`Error::DimensionTooLarge`] when n − 1 exceeds `cfg.max_dim`.
pub fn density_direct(gc: &GammaConvolution, x: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let y = x - gc.shift();
    check_positive(y, "distance from the left extremity")?;
    let n = gc.len();
    if n == 1 {
        return Ok(ln_gamma_density(gc.components()[0], y).exp());
    }
    if n - 1 > cfg.max_dim {
        return Err(Error::DimensionTooLarge { dim: n - 1, max: cfg.max_dim });
    }
    let shapes = gc.shapes();
    let rates = gc.rates();
    let b_min = gc.min_rate();
    let excess: Vec<f64> = rates.iter().map(|b| b - b_min).collect();
    let exponents = stick_exponents(&shapes);

    let integral = stick_integral(&Stick { exponents: &exponents, excess: &excess, y, cfg }, 0, 1.0, 0.0, 0.0)?;

    let sigma = gc.total_shape();
    let ln_prefactor =
        d_n(&shapes, &rates)? + ln_dirichlet_normalizer(&shapes) + (sigma - 1.0) * y.ln() - b_min * y;
    Ok((ln_prefactor + integral.ln()).exp())
}

struct Stick<'a> {
    exponents: &'a [(f64, f64)],
    excess: &'a [f64],
    y: f64,
    cfg: &'a QuadratureConfig,
}

/// Nested integral over the stick-breaking cube, axis by axis. The running
/// remainder, the partial value of C_n − b_min and the log weight are carried
/// down so each axis only adds its own term.
///
/// C_n − b_min = Σ (bᵢ − b_min)·wᵢ with stick weights wᵢ summing to one.
fn stick_integral(stick: &Stick, axis: usize, prefix: f64, shifted_rate: f64, ln_weight: f64) -> Result<f64> {
    let (a, c) = stick.exponents[axis];
    let here = stick.excess[axis];
    if axis + 1 == stick.exponents.len() {
        let last = stick.excess[axis + 1];
        let y = stick.y;
        return try_integrate_unit(
            |p| {
                let rate = shifted_rate + prefix * (here * p.complement + last * p.u);
                Ok((ln_weight + a * p.ln_u + c * p.ln_complement - y * rate).exp())
            },
            a,
            c,
            stick.cfg,
        )
        .map(|e| e.value);
    }
    try_integrate_unit(
        |p| {
            stick_integral(
                stick,
                axis + 1,
                prefix * p.u,
                shifted_rate + here * prefix * p.complement,
                ln_weight + a * p.ln_u + c * p.ln_complement,
            )
        },
        a,
        c,
        stick.cfg,
    )
    .map(|e| e.value)
}

/// Density of a gamma convolution at `x`, choosing the direct cube route for
/// n ≤ max_dim + 1 and the iterated route otherwise.
///
/// For Σβ < 1 the density diverges like (x − shift)^{Σβ−1} at the left
/// extremity; the finite formula value is returned.
pub fn density_sum(gc: &GammaConvolution, x: f64, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let y = x - gc.shift();
    check_positive(y, "distance from the left extremity")?;
    if gc.len() - 1 <= cfg.max_dim {
        density_direct(gc, x, cfg)
    } else {
        IteratedDensity::with_range(gc, tail_range(gc).max(y), cfg)?.density(x)
    }
}

/// Length of an interval [0, R] beyond which the unshifted sum has
/// probability below 1e-16, from a Chernoff bound, with 50% margin.
pub fn tail_range(gc: &GammaConvolution) -> f64 {
    let b_min = gc.min_rate();
    let ln_eps = TAIL_PROBABILITY.ln();
    let best = [0.5, 0.7, 0.8, 0.9, 0.95, 0.98, 0.99]
        .iter()
        .map(|frac| {
            let theta = frac * b_min;
            let ln_mgf: f64 = gc
                .components()
                .iter()
                .map(|c| -c.shape() * (-theta / c.rate()).ln_1p())
                .sum();
            (ln_mgf - ln_eps) / theta
        })
        .fold(f64::INFINITY, f64::min);
    1.5 * best + 1.0
}

enum Level {
    Exact(GammaComponent),
    Table(ChebyshevTable),
}

impl Level {
    /// ln h_k at y.
    fn ln_regular(&self, y: f64) -> f64 {
        match self {
            Level::Exact(c) => c.ln_normalizer() - c.rate() * y,
            Level::Table(t) => t.eval(y),
        }
    }
}

/// Iterated one-component-at-a-time convolution with tabulated
/// intermediate densities. The tables cover [0, range] in the unshifted
/// variable; evaluation beyond that rebuilds the tables on a longer range.
pub struct IteratedDensity {
    gc: GammaConvolution,
    cfg: QuadratureConfig,
    levels: Vec<Level>,
    partial_shapes: Vec<f64>,
    reference_rate: f64,
    range: f64,
}

impl IteratedDensity {
    pub fn new(gc: &GammaConvolution, cfg: &QuadratureConfig) -> Result<Self> {
        IteratedDensity::with_range(gc, tail_range(gc), cfg)
    }

    pub fn with_range(gc: &GammaConvolution, range: f64, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        check_positive(range, "table range")?;
        let components = gc.components();
        let partial_shapes: Vec<f64> = components
            .iter()
            .scan(0.0, |acc, c| {
                *acc += c.shape();
                Some(*acc)
            })
            .collect();
        let mut density = IteratedDensity {
            gc: gc.clone(),
            cfg: *cfg,
            levels: vec![Level::Exact(components[0])],
            partial_shapes,
            reference_rate: gc.min_rate(),
            range,
        };
        let table_tol = 10.0 * cfg.rel_tol;
        for k in 1..components.len().saturating_sub(1) {
            let table = ChebyshevTable::build(|y| density.step(k, y), range, table_tol)?;
            density.levels.push(Level::Table(table));
        }
        Ok(density)
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    /// ln h_{k+1}(y) from the stored level k (0-based indices).
    fn step(&self, k: usize, y: f64) -> Result<f64> {
        let previous = &self.levels[k - 1];
        let c = self.gc.components()[k];
        let (b, beta) = (c.rate(), c.shape());
        let sigma = self.partial_shapes[k - 1];
        let b_ref = self.reference_rate;
        let integral = try_integrate_unit(
            |p| {
                let ln = (sigma - 1.0) * p.ln_u + (beta - 1.0) * p.ln_complement + previous.ln_regular(y * p.u)
                    + b_ref * y
                    - b * y * p.complement;
                Ok(ln.exp())
            },
            sigma - 1.0,
            beta - 1.0,
            &self.cfg,
        )?
        .value;
        Ok(c.ln_normalizer() - b_ref * y + integral.ln())
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        let y = x - self.gc.shift();
        check_positive(y, "distance from the left extremity")?;
        if y > self.range {
            return IteratedDensity::with_range(&self.gc, y, &self.cfg)?.density(x);
        }
        let n = self.gc.len();
        let ln_regular = if n == 1 { self.levels[0].ln_regular(y) } else { self.step(n - 1, y)? };
        Ok((ln_regular + (self.gc.total_shape() - 1.0) * y.ln()).exp())
    }
}

enum Route {
    Gamma(GammaComponent),
    Direct,
    Iterated(IteratedDensity),
}

/// Reusable density evaluator with a per-instance memo of computed values.
///
/// Routes exactly like [`density_sum`]; intended for integrals against the
/// density, where the same nodes recur across many transforms.
pub struct Density {
    gc: GammaConvolution,
    cfg: QuadratureConfig,
    route: Route,
    range: f64,
    memo: Mutex<HashMap<u64, f64>>,
}

impl Density {
    pub fn new(gc: &GammaConvolution, cfg: &QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        let range = tail_range(gc);
        let route = if gc.len() == 1 {
            Route::Gamma(gc.components()[0])
        } else if gc.len() - 1 <= cfg.max_dim {
            Route::Direct
        } else {
            Route::Iterated(IteratedDensity::with_range(gc, range, cfg)?)
        };
        Ok(Density { gc: gc.clone(), cfg: *cfg, route, range, memo: Mutex::new(HashMap::new()) })
    }

    pub fn convolution(&self) -> &GammaConvolution {
        &self.gc
    }

    pub fn is_direct(&self) -> bool {
        !matches!(self.route, Route::Iterated(_))
    }

    /// Right end of the effective support used by [`Density::integrate`].
    pub fn support_end(&self) -> f64 {
        self.gc.shift() + self.range
    }

    pub fn density(&self, x: f64) -> Result<f64> {
        let key = x.to_bits();
        if let Some(&v) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(v);
        }
        let value = match &self.route {
            Route::Gamma(c) => {
                let y = x - self.gc.shift();
                check_positive(y, "distance from the left extremity")?;
                ln_gamma_density(*c, y).exp()
            }
            Route::Iterated(it) => it.density(x)?,
            Route::Direct => density_direct(&self.gc, x, &self.cfg)?,
        };
        self.memo.lock().expect("memo lock").insert(key, value);
        Ok(value)
    }

    /// ∫ g(x) f(x) dx over the support, truncated where the tail mass drops
    /// below 1e-16.
    pub fn integrate<G>(&self, g: G) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        self.integrate_with(g, &self.cfg)
    }

    pub fn integrate_with<G>(&self, g: G, cfg: &QuadratureConfig) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        let shift = self.gc.shift();
        try_integrate_to(
            |y| {
                let x = shift + y;
                Ok(g(x) * self.density(x)?)
            },
            self.range,
            cfg,
        )
        .map(|e| e.value)
    }
}
