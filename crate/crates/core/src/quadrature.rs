//! Deterministic quadrature on (0,1), (0,∞) and low-dimensional unit cubes.
//!
//! All rules share one engine: the double-exponential substitution
//! u = (1 + tanh(π/2·sinh t)) / 2 followed by the trapezoidal rule in t with
//! successive step halving. The substitution makes algebraic endpoint
//! behaviour u^p (1−u)^q, p, q > −1, decay double-exponentially in t, so the
//! weights u^{β−1}(1−u)^{β−1} of the gamma-sum densities need no caller-side
//! substitution.
//!
//! Integrands receive a [`UnitPoint`] carrying both u and 1−u (and their
//! logarithms) computed directly from t. Near u = 1 the complement cannot be
//! recovered from u in floating point, and a factor (1−u)^{β−1} with β < 1
//! would otherwise lose most of its mass to rounding.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and budgets shared by every integral in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Budget on the number of trapezoid nodes one 1-D rule may use.
    pub max_subdivisions: usize,
    /// Largest cube dimension integrated directly.
    pub max_dim: usize,
    /// Half-line truncation: stop where |f| drops below this fraction of its peak.
    pub tail_cut_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
            max_dim: 3,
            tail_cut_tol: 1e-16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.rel_tol) || !positive(self.abs_tol) || !positive(self.tail_cut_tol) {
            return Err(Error::InvalidConfig("quadrature tolerances must be positive".into()));
        }
        if self.max_dim < 1 || self.max_dim > MAX_CUBE_DIM {
            return Err(Error::InvalidConfig(format!(
                "max_dim must lie in 1..={MAX_CUBE_DIM}, got {}",
                self.max_dim
            )));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::InvalidConfig("max_subdivisions must be at least 1".into()));
        }
        Ok(())
    }

    /// Same budgets with a different relative tolerance.
    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        QuadratureConfig { rel_tol, ..self }
    }
}

/// A quadrature node in (0,1) with its complement and their logarithms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub u: f64,
    /// 1 − u, accurate even where u rounds to 1.
    pub complement: f64,
    pub ln_u: f64,
    pub ln_complement: f64,
}

impl UnitPoint {
    pub fn new(u: f64) -> Self {
        UnitPoint { u, complement: 1.0 - u, ln_u: u.ln(), ln_complement: (-u).ln_1p() }
    }
}

/// Integral value with the engine's error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

pub const MAX_CUBE_DIM: usize = 8;

const LEVELS: u32 = 10;
const H_MIN: f64 = 1.0 / (1u32 << LEVELS) as f64;
/// Largest |t|; u there is about 1e-275, still a normal number.
const T_MAX: f64 = 6.0;
/// Coarsest level whose result may be accepted (step 1/8).
const MIN_ACCEPT_LEVEL: u32 = 3;
/// Mass allowed beyond the truncated t-range, relative to the integrand scale.
const TAIL_MASS: f64 = 1e-18;
/// From this level on, the t-range shrinks to the nodes whose contributions
/// exceed `PRUNE_REL` times the largest one seen.
const PRUNE_LEVEL: u32 = 2;
const PRUNE_REL: f64 = 1e-22;

#[derive(Debug, Clone, Copy)]
struct Node {
    point: UnitPoint,
    weight: f64,
}

struct NodeTable {
    half: usize,
    nodes: Vec<Node>,
}

impl NodeTable {
    fn build() -> Self {
        let half = (T_MAX / H_MIN).floor() as usize;
        let nodes = (0..=2 * half)
            .map(|i| de_node((i as f64 - half as f64) * H_MIN))
            .collect();
        NodeTable { half, nodes }
    }

    fn get(&self, j: i64) -> &Node {
        &self.nodes[(j + self.half as i64) as usize]
    }
}

fn de_node(t: f64) -> Node {
    let s = 0.5 * PI * t.sinh();
    let e = (-2.0 * s.abs()).exp();
    let log1pe = e.ln_1p();
    let (u, complement, ln_u, ln_complement) = if s >= 0.0 {
        (1.0 / (1.0 + e), e / (1.0 + e), -log1pe, -2.0 * s - log1pe)
    } else {
        (e / (1.0 + e), 1.0 / (1.0 + e), 2.0 * s - log1pe, -log1pe)
    };
    Node {
        point: UnitPoint { u, complement, ln_u, ln_complement },
        weight: PI * t.cosh() * u * complement,
    }
}

fn node_table() -> &'static NodeTable {
    static TABLE: OnceLock<NodeTable> = OnceLock::new();
    TABLE.get_or_init(NodeTable::build)
}

/// Extent of the t-range needed at an endpoint with behaviour u^p.
fn t_extent(exponent: f64) -> f64 {
    let power = (exponent + 1.0).min(1.0);
    let ln_u_min = (TAIL_MASS.ln() + power.ln()) / power;
    ((-ln_u_min) / PI).asinh().min(T_MAX)
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p <= -1.0 {
        return Err(Error::domain(format!("endpoint exponent must exceed -1, got {p}")));
    }
    Ok(())
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// The 1-D double-exponential rule over t ∈ [−left, right].
fn de_rule<F>(mut f: F, left: f64, right: f64, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: FnMut(&UnitPoint) -> Result<f64>,
{
    let table = node_table();
    let mut j_left = (left / H_MIN).floor() as i64;
    let mut j_right = (right / H_MIN).floor() as i64;
    let mut seen: Vec<(i64, f64)> = Vec::new();

    let mut sum = CompensatedSum::default();
    let mut magnitude = 0.0;
    let mut evaluations = 0usize;
    let mut previous: Option<f64> = None;
    let mut previous_diff = f64::INFINITY;
    let mut last_diff = f64::INFINITY;

    for level in 0..=LEVELS {
        let stride = 1i64 << (LEVELS - level);
        let nodes_at_level = (j_left / stride + j_right / stride + 1) as usize;
        if level > 0 && nodes_at_level > cfg.max_subdivisions {
            break;
        }
        // level 0 takes every multiple of the stride, later levels the odd ones
        let step = if level == 0 { stride } else { 2 * stride };
        let mut m = (-j_left).div_euclid(stride) + i64::from((-j_left).rem_euclid(stride) != 0);
        if level > 0 && m.rem_euclid(2) == 0 {
            m += 1;
        }
        let mut j = m * stride;
        while j <= j_right {
            let node = table.get(j);
            let value = f(&node.point)?;
            if !value.is_finite() {
                return Err(Error::NonFinite { at: node.point.u, value });
            }
            let contribution = node.weight * value;
            seen.push((j, contribution.abs()));
            sum.add(contribution);
            magnitude += contribution.abs();
            evaluations += 1;
            j += step;
        }

        let h = stride as f64 * H_MIN;
        let value = h * sum.value();
        let roundoff = 16.0 * f64::EPSILON * h * magnitude;
        let tolerance = cfg.abs_tol.max(cfg.rel_tol * value.abs()).max(roundoff);
        if let Some(prev) = previous {
            let diff = (value - prev).abs();
            // Two coarse levels can agree by accident while both miss a narrow
            // feature, so the level before must already show the quadratic
            // regime: its difference at most the square root of the tolerance.
            let settled = previous_diff <= (tolerance * value.abs()).sqrt().max(tolerance);
            if level >= MIN_ACCEPT_LEVEL && diff <= tolerance && settled {
                return Ok(Estimate { value, error: diff.max(roundoff), evaluations });
            }
            previous_diff = diff;
            last_diff = diff;
        }
        previous = Some(value);

        if level >= PRUNE_LEVEL {
            let peak = seen.iter().fold(0.0f64, |m, &(_, c)| m.max(c));
            let threshold = PRUNE_REL * peak;
            let significant = seen.iter().filter(|&&(_, c)| c > threshold).map(|&(j, _)| j);
            if let (Some(lo), Some(hi)) = (significant.clone().min(), significant.max()) {
                j_left = j_left.min(2 * stride - lo);
                j_right = j_right.min(hi + 2 * stride);
            }
        }
    }

    Err(Error::NonConvergence {
        estimate: last_diff,
        tolerance: cfg.rel_tol * previous.unwrap_or(0.0).abs(),
        evaluations,
    })
}

/// ∫₀¹ f(u) du where f may blow up like u^{left_exponent} at 0 and
/// (1−u)^{right_exponent} at 1.
pub fn integrate_unit<F>(f: F, left_exponent: f64, right_exponent: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(UnitPoint) -> f64,
{
    try_integrate_unit(|p| Ok(f(p)), left_exponent, right_exponent, cfg).map(|e| e.value)
}

/// Fallible-integrand form of [`integrate_unit`], returning the error estimate too.
pub fn try_integrate_unit<F>(f: F, left_exponent: f64, right_exponent: f64, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(UnitPoint) -> Result<f64>,
{
    cfg.validate()?;
    check_exponent(left_exponent)?;
    check_exponent(right_exponent)?;
    de_rule(|p| f(*p), t_extent(left_exponent), t_extent(right_exponent), cfg)
}

/// ∫ over (0,1)^d, d = `exponents.len()`, by nested double-exponential rules.
///
/// Each axis is integrated to `cfg.rel_tol`, so the total relative error is
/// bounded by roughly d·rel_tol. Dimensions above `cfg.max_dim` are refused;
/// callers are expected to fall back to iterated one-dimensional work.
pub fn integrate_cube<F>(f: F, exponents: &[(f64, f64)], cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(&[UnitPoint]) -> f64,
{
    try_integrate_cube(|p| Ok(f(p)), exponents, cfg).map(|e| e.value)
}

pub fn try_integrate_cube<F>(f: F, exponents: &[(f64, f64)], cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(&[UnitPoint]) -> Result<f64>,
{
    cfg.validate()?;
    let dim = exponents.len();
    if dim == 0 {
        return Err(Error::domain("cube dimension must be at least 1"));
    }
    if dim > cfg.max_dim {
        return Err(Error::DimensionTooLarge { dim, max: cfg.max_dim });
    }
    let mut extents = Vec::with_capacity(dim);
    for &(left, right) in exponents {
        check_exponent(left)?;
        check_exponent(right)?;
        extents.push((t_extent(left), t_extent(right)));
    }
    let mut buffer = [UnitPoint::new(0.5); MAX_CUBE_DIM];
    let mut evaluations = 0;
    let estimate = cube_axis(&f, 0, &extents, &mut buffer, &mut evaluations, cfg)?;
    Ok(Estimate { evaluations, ..estimate })
}

fn cube_axis<F>(
    f: &F,
    axis: usize,
    extents: &[(f64, f64)],
    buffer: &mut [UnitPoint; MAX_CUBE_DIM],
    evaluations: &mut usize,
    cfg: &QuadratureConfig,
) -> Result<Estimate>
where
    F: Fn(&[UnitPoint]) -> Result<f64>,
{
    let dim = extents.len();
    let (left, right) = extents[axis];
    de_rule(
        |p| {
            buffer[axis] = *p;
            if axis + 1 == dim {
                *evaluations += 1;
                f(&buffer[..dim])
            } else {
                cube_axis(f, axis + 1, extents, buffer, evaluations, cfg).map(|e| e.value)
            }
        },
        left,
        right,
        cfg,
    )
}

/// ∫₀^∞ f(x) dx for an integrand with (at least) exponential decay.
///
/// The range is truncated at the first power of two beyond the integrand's
/// peak where |f| falls below `tail_cut_tol` times that peak, then mapped onto
/// (0,1). An integrable singularity at x = 0 is allowed.
pub fn integrate_halfline<F>(f: F, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    try_integrate_halfline(|x| Ok(f(x)), cfg).map(|e| e.value)
}

pub fn try_integrate_halfline<F>(f: F, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    let upper = find_truncation(&f, cfg)?;
    try_integrate_to(f, upper, cfg)
}

/// ∫₀^upper f(x) dx with a caller-supplied truncation point.
pub fn try_integrate_to<F>(f: F, upper: f64, cfg: &QuadratureConfig) -> Result<Estimate>
where
    F: Fn(f64) -> Result<f64>,
{
    cfg.validate()?;
    if !upper.is_finite() || upper <= 0.0 {
        return Err(Error::domain(format!("truncation point must be positive, got {upper}")));
    }
    let estimate = de_rule(|p| Ok(upper * f(upper * p.u)?), T_MAX, t_extent(0.0), cfg)?;
    Ok(estimate)
}

/// Doubling search for a truncation point of a decaying integrand.
pub fn find_truncation<F>(f: &F, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut peak = 0.0f64;
    let mut peak_at = 0.0;
    for k in -20..=60 {
        let x = 2f64.powi(k);
        let value = f(x)?.abs();
        if value.is_nan() {
            return Err(Error::NonFinite { at: x, value });
        }
        if value.is_finite() && value > peak {
            peak = value;
            peak_at = x;
        }
        if peak > 0.0 && x > peak_at && value <= cfg.tail_cut_tol * peak {
            return Ok(x);
        }
    }
    Err(Error::TruncationNotFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn unit_interval_examples() {
        let c = cfg();
        assert_relative_eq!(integrate_unit(|_| 1.0, 0.0, 0.0, &c).unwrap(), 1.0, max_relative = 1e-14);
        let v = integrate_unit(|p| (-0.5 * p.ln_u).exp(), -0.5, 0.0, &c).unwrap();
        assert_relative_eq!(v, 2.0, max_relative = 1e-12);
        let v = integrate_unit(|p| (-0.5 * (p.ln_u + p.ln_complement)).exp(), -0.5, -0.5, &c).unwrap();
        assert_relative_eq!(v, PI, max_relative = 1e-12);
    }

    #[test]
    fn strong_endpoint_singularities() {
        // Beta(0.1, 0.2) = Γ(0.1)Γ(0.2)/Γ(0.3)
        let want = (crate::specfun::ln_gamma(0.1) + crate::specfun::ln_gamma(0.2)
            - crate::specfun::ln_gamma(0.3))
        .exp();
        let got = integrate_unit(|p| (-0.9 * p.ln_u - 0.8 * p.ln_complement).exp(), -0.9, -0.8, &cfg()).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-10);
    }

    #[test]
    fn complement_is_accurate_near_one() {
        let table = node_table();
        for j in [-6000i64, -100, 0, 100, 3000, 6000] {
            let p = table.get(j).point;
            assert!((p.u + p.complement - 1.0).abs() < 1e-15);
            if p.complement > 0.0 {
                assert_relative_eq!(p.ln_complement, p.complement.ln(), max_relative = 1e-12);
            }
            if p.u > 0.0 {
                assert_relative_eq!(p.ln_u, p.u.ln(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn exponent_validation() {
        assert!(matches!(integrate_unit(|_| 1.0, -1.0, 0.0, &cfg()), Err(Error::Domain(_))));
        assert!(matches!(integrate_unit(|_| 1.0, 0.0, f64::NAN, &cfg()), Err(Error::Domain(_))));
    }

    #[test]
    fn nonconvergence_reported_when_budget_exhausted() {
        let tight = QuadratureConfig { max_subdivisions: 20, ..cfg() };
        let res = integrate_unit(|p| (40.0 * (p.u - 0.37)).cos() * (-(p.u - 0.5).powi(2) * 900.0).exp(), 0.0, 0.0, &tight);
        assert!(matches!(res, Err(Error::NonConvergence { .. })), "{res:?}");
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let res = integrate_unit(|p| if p.u > 0.4 && p.u < 0.6 { f64::NAN } else { 1.0 }, 0.0, 0.0, &cfg());
        assert!(matches!(res, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn halfline_examples() {
        let c = cfg();
        assert_relative_eq!(integrate_halfline(|x| (-x).exp(), &c).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(integrate_halfline(|x| x * (-x).exp(), &c).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(
            integrate_halfline(|x| (-x * x).exp(), &c).unwrap(),
            0.886_226_925_452_758,
            max_relative = 1e-12
        );
    }

    #[test]
    fn halfline_with_singularity_at_origin() {
        // ∫ x^{-3/4} e^{-x} dx = Γ(1/4)
        let want = crate::specfun::ln_gamma(0.25).exp();
        let got = integrate_halfline(|x| x.powf(-0.75) * (-x).exp(), &cfg()).unwrap();
        assert_relative_eq!(got, want, max_relative = 1e-10);
    }

    #[test]
    fn halfline_slow_and_sharp_scales() {
        let c = cfg();
        let got = integrate_halfline(|x| (-x / 40.0).exp(), &c).unwrap();
        assert_relative_eq!(got, 40.0, max_relative = 1e-10);
        let got = integrate_halfline(|x| (-1200.0 * x.powf(1.5)).exp(), &c).unwrap();
        // Γ(1 + 2/3) / 1200^{2/3}
        let want = crate::specfun::ln_gamma(5.0 / 3.0).exp() / 1200f64.powf(2.0 / 3.0);
        assert_relative_eq!(got, want, max_relative = 1e-10);
    }

    #[test]
    fn truncation_not_found_for_non_decaying_integrand() {
        let res = integrate_halfline(|_| 1.0, &cfg());
        assert_eq!(res, Err(Error::TruncationNotFound));
    }

    #[test]
    fn cube_examples() {
        let c = cfg();
        assert_relative_eq!(integrate_cube(|_| 1.0, &[(0.0, 0.0); 2], &c).unwrap(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(
            integrate_cube(|p| p[0].u * p[1].u, &[(0.0, 0.0); 2], &c).unwrap(),
            0.25,
            max_relative = 1e-12
        );
        let v = integrate_cube(|p| (-0.5 * (p[0].ln_u + p[1].ln_u)).exp(), &[(-0.5, 0.0); 2], &c).unwrap();
        assert_relative_eq!(v, 4.0, max_relative = 1e-10);
    }

    #[test]
    fn cube_three_dimensions() {
        let v = integrate_cube(
            |p| (-(p[0].u + 2.0 * p[1].u * p[2].complement)).exp(),
            &[(0.0, 0.0); 3],
            &cfg(),
        )
        .unwrap();
        // ∫ e^{-a} da · ∫∫ e^{-2 b c} db dc, second factor by a fine 1-D rule
        let inner = integrate_unit(|p| (1.0 - (-2.0 * p.u).exp()) / (2.0 * p.u), 0.0, 0.0, &cfg()).unwrap();
        assert_relative_eq!(v, (1.0 - (-1.0f64).exp()) * inner, max_relative = 1e-9);
    }

    #[test]
    fn cube_dimension_cap() {
        let res = integrate_cube(|_| 1.0, &[(0.0, 0.0); 4], &cfg());
        assert_eq!(res, Err(Error::DimensionTooLarge { dim: 4, max: 3 }));
        assert!(integrate_cube(|_| 1.0, &[], &cfg()).is_err());
    }

    #[test]
    fn cube_of_dimension_one_matches_unit_rule() {
        let f = |u: f64, v: f64| u.powf(-0.3) * v.powf(0.7) * (3.0 * u).cos();
        let a = integrate_unit(|p| f(p.u, p.complement), -0.3, 0.7, &cfg()).unwrap();
        let b = integrate_cube(|p| f(p[0].u, p[0].complement), &[(-0.3, 0.7)], &cfg()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn tightening_tolerance_stays_within_previous_estimate() {
        let f = |p: UnitPoint| (-7.0 * p.u).exp() * (-0.4 * p.ln_u).exp() * (1.0 + p.complement.sqrt());
        let mut prev: Option<Estimate> = None;
        for k in 4..=12 {
            let c = cfg().with_rel_tol(10f64.powi(-k));
            let e = try_integrate_unit(|p| Ok(f(p)), -0.4, 0.0, &c).unwrap();
            if let Some(p) = prev {
                assert!((e.value - p.value).abs() <= p.error.max(1e-15), "rel_tol=1e-{k}: moved {} > {}", (e.value - p.value).abs(), p.error);
            }
            prev = Some(e);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn linearity(a in -3.0f64..3.0, b in -3.0f64..3.0, k in 0.1f64..6.0, m in 0.0f64..4.0) {
            let c = cfg();
            let f = move |u: f64| (-k * u).exp() * (1.0 + u * u);
            let g = move |u: f64| (m * u).sin() + u.sqrt();
            let lhs = integrate_unit(|p| a * f(p.u) + b * g(p.u), 0.0, 0.0, &c).unwrap();
            let rhs = a * integrate_unit(|p| f(p.u), 0.0, 0.0, &c).unwrap()
                + b * integrate_unit(|p| g(p.u), 0.0, 0.0, &c).unwrap();
            let scale = a.abs() + b.abs() + 1e-300;
            prop_assert!((lhs - rhs).abs() <= 10.0 * c.rel_tol * scale * 4.0);
        }
    }
}
