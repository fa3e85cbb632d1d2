//! Finite gamma convolutions: model types, densities and Laplace transforms.
//!
//! A [`GammaConvolution`] is the law of a + X₁ + ⋯ + Xₙ with independent
//! Xᵢ ~ Gamma(βᵢ, bᵢ). Its Laplace transform is known in closed form; its
//! density is an (n−1)-fold integral over the unit cube (see [`density`]).

mod density;
mod laplace;
mod table;

pub use density::{density_direct, density_pair, density_sum, tail_range, Density, IteratedDensity};
pub use laplace::{laplace_power, PowerLaplace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::ln_gamma;

/// One gamma factor with shape β and rate b.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComponentDoc")]
pub struct GammaComponent {
    shape: f64,
    rate: f64,
}

#[derive(Deserialize)]
struct ComponentDoc {
    shape: f64,
    rate: f64,
}

impl TryFrom<ComponentDoc> for GammaComponent {
    type Error = Error;

    fn try_from(doc: ComponentDoc) -> Result<Self> {
        GammaComponent::new(doc.shape, doc.rate)
    }
}

impl GammaComponent {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && shape > 0.0) {
            return Err(Error::InvalidModel(format!("shape must be positive and finite, got {shape}")));
        }
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::InvalidModel(format!("rate must be positive and finite, got {rate}")));
        }
        Ok(GammaComponent { shape, rate })
    }

    /// Exponential law with the given rate.
    pub fn exponential(rate: f64) -> Result<Self> {
        GammaComponent::new(1.0, rate)
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// ln of b^β / Γ(β).
    pub(crate) fn ln_normalizer(&self) -> f64 {
        self.shape * self.rate.ln() - ln_gamma(self.shape)
    }
}

/// Law of shift + X₁ + ⋯ + Xₙ for independent gamma components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConvolutionDoc")]
pub struct GammaConvolution {
    components: Vec<GammaComponent>,
    shift: f64,
}

#[derive(Deserialize)]
struct ConvolutionDoc {
    components: Vec<GammaComponent>,
    #[serde(default)]
    shift: f64,
}

impl TryFrom<ConvolutionDoc> for GammaConvolution {
    type Error = Error;

    fn try_from(doc: ConvolutionDoc) -> Result<Self> {
        GammaConvolution::new(doc.components, doc.shift)
    }
}

impl GammaConvolution {
    pub fn new(components: Vec<GammaComponent>, shift: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidModel("a convolution needs at least one component".into()));
        }
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::InvalidModel(format!("shift must be finite and nonnegative, got {shift}")));
        }
        Ok(GammaConvolution { components, shift })
    }

    /// Unshifted convolution of (shape, rate) pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let components = pairs
            .iter()
            .map(|&(shape, rate)| GammaComponent::new(shape, rate))
            .collect::<Result<Vec<_>>>()?;
        GammaConvolution::new(components, 0.0)
    }

    pub fn single(component: GammaComponent) -> Self {
        GammaConvolution { components: vec![component], shift: 0.0 }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("convolution serializes")
    }

    pub fn components(&self) -> &[GammaComponent] {
        &self.components
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn with_shift(&self, shift: f64) -> Result<Self> {
        GammaConvolution::new(self.components.clone(), shift)
    }

    /// Same components in a different order; `order` must be a permutation.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        let mut components = Vec::with_capacity(self.len());
        for &i in order {
            if i >= self.len() || seen[i] {
                return Err(Error::domain("order is not a permutation of the components"));
            }
            seen[i] = true;
            components.push(self.components[i]);
        }
        if components.len() != self.len() {
            return Err(Error::domain("order is not a permutation of the components"));
        }
        GammaConvolution::new(components, self.shift)
    }

    pub fn shapes(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.shape).collect()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.rate).collect()
    }

    /// σ = β₁ + ⋯ + βₙ.
    pub fn total_shape(&self) -> f64 {
        self.components.iter().map(|c| c.shape).sum()
    }

    pub fn min_rate(&self) -> f64 {
        self.components.iter().map(|c| c.rate).fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.shift + self.components.iter().map(|c| c.shape / c.rate).sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        self.components.iter().map(|c| c.shape / (c.rate * c.rate)).sum()
    }

    pub(crate) fn require_unshifted(&self) -> Result<()> {
        if self.shift != 0.0 {
            return Err(Error::UnsupportedShift(self.shift));
        }
        Ok(())
    }
}

/// One atom of a discrete Thorin measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThorinAtom {
    pub location: f64,
    pub mass: f64,
}

/// Discrete Thorin measure with left extremity; the Laplace transform is
/// exp(−a·s + Σ massᵢ·ln(tᵢ/(tᵢ+s))).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ThorinDoc")]
pub struct ThorinMeasure {
    atoms: Vec<ThorinAtom>,
    shift: f64,
}

#[derive(Deserialize)]
struct ThorinDoc {
    atoms: Vec<ThorinAtom>,
    #[serde(default)]
    shift: f64,
}

impl TryFrom<ThorinDoc> for ThorinMeasure {
    type Error = Error;

    fn try_from(doc: ThorinDoc) -> Result<Self> {
        ThorinMeasure::new(doc.atoms, doc.shift)
    }
}

impl ThorinMeasure {
    pub fn new(atoms: Vec<ThorinAtom>, shift: f64) -> Result<Self> {
        for atom in &atoms {
            if !(atom.location.is_finite() && atom.location > 0.0) {
                return Err(Error::InvalidModel(format!("atom location must be positive, got {}", atom.location)));
            }
            if !(atom.mass.is_finite() && atom.mass > 0.0) {
                return Err(Error::InvalidModel(format!("atom mass must be positive, got {}", atom.mass)));
            }
        }
        if atoms.windows(2).any(|w| w[0].location >= w[1].location) {
            return Err(Error::InvalidModel("atom locations must be strictly increasing".into()));
        }
        if !(shift.is_finite() && shift >= 0.0) {
            return Err(Error::InvalidModel(format!("shift must be finite and nonnegative, got {shift}")));
        }
        Ok(ThorinMeasure { atoms, shift })
    }

    pub fn atoms(&self) -> &[ThorinAtom] {
        &self.atoms
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }
}

/// The power q ≥ 1 applied to a GGC variable, with α = 1/q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PowerDoc")]
pub struct PowerLaw {
    q: f64,
    alpha: f64,
}

#[derive(Deserialize)]
struct PowerDoc {
    q: f64,
}

impl TryFrom<PowerDoc> for PowerLaw {
    type Error = Error;

    fn try_from(doc: PowerDoc) -> Result<Self> {
        PowerLaw::new(doc.q)
    }
}

impl PowerLaw {
    pub fn new(q: f64) -> Result<Self> {
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::domain(format!("power exponent must satisfy q >= 1, got {q}")));
        }
        Ok(PowerLaw { q, alpha: 1.0 / q })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Gamma(β, b) density b^β Γ(β)⁻¹ x^{β−1} e^{−bx}.
pub fn gamma_density(c: GammaComponent, x: f64) -> Result<f64> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::domain(format!("density argument must be positive, got {x}")));
    }
    Ok(ln_gamma_density(c, x).exp())
}

pub(crate) fn ln_gamma_density(c: GammaComponent, x: f64) -> f64 {
    c.ln_normalizer() + (c.shape - 1.0) * x.ln() - c.rate * x
}

fn check_unit_vector(u: &[f64]) -> Result<()> {
    match u.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
        Some(v) => Err(Error::domain(format!("cube coordinates must lie in (0,1), got {v}"))),
        None => Ok(()),
    }
}

/// C_n(u) = b₁(1−u₁) + b₂u₁(1−u₂) + ⋯ + bₙu₁⋯u_{n−1}.
pub fn c_n(u: &[f64], rates: &[f64]) -> Result<f64> {
    if rates.len() != u.len() + 1 {
        return Err(Error::domain(format!("c_n needs {} rates for {} coordinates", u.len() + 1, u.len())));
    }
    check_unit_vector(u)?;
    let mut prefix = 1.0;
    let mut total = 0.0;
    for (uj, bj) in u.iter().zip(rates) {
        total += bj * prefix * (1.0 - uj);
        prefix *= uj;
    }
    Ok(total + rates[u.len()] * prefix)
}

/// ln B_n(u), the Dirichlet(β₁,…,βₙ) density in the stick-breaking
/// coordinates that pair with [`c_n`]:
/// Γ(σ)/∏Γ(βᵢ) · ∏ⱼ uⱼ^{β_{j+1}+⋯+βₙ−1} (1−uⱼ)^{βⱼ−1}.
pub fn b_n(u: &[f64], shapes: &[f64]) -> Result<f64> {
    if shapes.len() != u.len() + 1 {
        return Err(Error::domain(format!("b_n needs {} shapes for {} coordinates", u.len() + 1, u.len())));
    }
    check_unit_vector(u)?;
    if shapes.iter().any(|&b| !(b > 0.0 && b.is_finite())) {
        return Err(Error::domain("shapes must be positive"));
    }
    let exponents = stick_exponents(shapes);
    let weight: f64 = u
        .iter()
        .zip(&exponents)
        .map(|(&uj, &(a, c))| a * uj.ln() + c * (-uj).ln_1p())
        .sum();
    Ok(ln_dirichlet_normalizer(shapes) + weight)
}

/// ln D_n = Σ βᵢ ln bᵢ − ln Γ(σ).
pub fn d_n(shapes: &[f64], rates: &[f64]) -> Result<f64> {
    if shapes.len() != rates.len() || shapes.is_empty() {
        return Err(Error::domain("d_n needs equally long, nonempty shape and rate lists"));
    }
    if shapes.iter().chain(rates).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::domain("shapes and rates must be positive"));
    }
    let sigma: f64 = shapes.iter().sum();
    Ok(shapes.iter().zip(rates).map(|(b, r)| b * r.ln()).sum::<f64>() - ln_gamma(sigma))
}

/// Per-axis (u-exponent, (1−u)-exponent) pairs of B_n.
pub(crate) fn stick_exponents(shapes: &[f64]) -> Vec<(f64, f64)> {
    let n = shapes.len();
    (0..n - 1)
        .map(|j| (shapes[j + 1..].iter().sum::<f64>() - 1.0, shapes[j] - 1.0))
        .collect()
}

pub(crate) fn ln_dirichlet_normalizer(shapes: &[f64]) -> f64 {
    ln_gamma(shapes.iter().sum()) - shapes.iter().map(|&b| ln_gamma(b)).sum::<f64>()
}

fn check_transform_arg(s: f64) -> Result<()> {
    if !(s.is_finite() && s >= 0.0) {
        return Err(Error::domain(format!("transform argument must be finite and >= 0, got {s}")));
    }
    Ok(())
}

/// E[e^{−sX}] = e^{−as} ∏ (bᵢ/(bᵢ+s))^{βᵢ}.
pub fn laplace_exact(gc: &GammaConvolution, s: f64) -> Result<f64> {
    check_transform_arg(s)?;
    let exponent: f64 = gc.components.iter().map(|c| c.shape * (s / c.rate).ln_1p()).sum();
    Ok((-gc.shift * s - exponent).exp())
}

/// Thorin measure with one atom (bᵢ, βᵢ) per component, equal rates merged.
pub fn to_thorin(gc: &GammaConvolution) -> ThorinMeasure {
    let mut sorted = gc.components.clone();
    sorted.sort_by(|a, b| a.rate.total_cmp(&b.rate));
    let mut atoms: Vec<ThorinAtom> = Vec::with_capacity(sorted.len());
    for c in sorted {
        match atoms.last_mut() {
            Some(last) if last.location == c.rate => last.mass += c.shape,
            _ => atoms.push(ThorinAtom { location: c.rate, mass: c.shape }),
        }
    }
    ThorinMeasure { atoms, shift: gc.shift }
}

/// exp(−a·s + Σ uᵢ ln(tᵢ/(tᵢ+s))).
pub fn thorin_laplace(tm: &ThorinMeasure, s: f64) -> Result<f64> {
    check_transform_arg(s)?;
    let exponent: f64 = tm.atoms.iter().map(|a| a.mass * (s / a.location).ln_1p()).sum();
    Ok((-tm.shift * s - exponent).exp())
}
