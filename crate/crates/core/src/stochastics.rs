//! Seeded samplers for gamma convolutions and their transforms, with
//! Kolmogorov–Smirnov distances for comparing empirical laws.
//!
//! Every sampler draws from a ChaCha8 stream seeded by [`Seed`]; output is
//! bit-identical for identical inputs. Gamma variates are drawn with unit
//! rate and divided by the rate, so rescaling all rates rescales a sample
//! exactly.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gammaconv::{GammaComponent, GammaConvolution, PowerLaw};
use crate::output::format_g17;

/// Default sample size for desk-scale checks.
pub const DEFAULT_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

/// Draws together with a description of the law that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    values: Vec<f64>,
    provenance: String,
}

impl Sample {
    pub fn new(values: Vec<f64>, provenance: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::domain("a sample needs at least one value"));
        }
        Ok(Sample { values, provenance: provenance.into() })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64
    }

    pub fn mean_standard_error(&self) -> f64 {
        (self.variance() / self.len() as f64).sqrt()
    }

    /// Large-sample standard error of [`Sample::variance`], √((m₄ − m₂²)/n)
    /// with central moments m₂, m₄.
    pub fn variance_standard_error(&self) -> f64 {
        let n = self.len() as f64;
        let m = self.mean();
        let (m2, m4) = self.values.iter().fold((0.0, 0.0), |(a, b), v| {
            let d2 = (v - m).powi(2);
            (a + d2, b + d2 * d2)
        });
        let (m2, m4) = (m2 / n, m4 / n);
        ((m4 - m2 * m2).max(0.0) / n).sqrt()
    }

    /// CSV with the provenance as header and one value per line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.provenance.replace(['\n', ','], " "))?;
        for &v in &self.values {
            writeln!(out, "{}", format_g17(v))?;
        }
        Ok(())
    }
}

fn check_count(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::domain("sample size must be at least 1"));
    }
    Ok(())
}

/// Unit-rate gamma laws for each component, paired with their rates.
struct ConvolutionSampler {
    laws: Vec<(Gamma<f64>, f64)>,
    shift: f64,
}

impl ConvolutionSampler {
    fn new(gc: &GammaConvolution) -> Self {
        let laws = gc.components().iter().map(|c| (unit_gamma(*c), c.rate())).collect();
        ConvolutionSampler { laws, shift: gc.shift() }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        self.shift + self.laws.iter().map(|(law, rate)| law.sample(rng) / rate).sum::<f64>()
    }
}

fn unit_gamma(c: GammaComponent) -> Gamma<f64> {
    Gamma::new(c.shape(), 1.0).expect("validated component shape")
}

/// `n` independent Gamma(β, b) draws.
pub fn sample_gamma(c: GammaComponent, n: usize, seed: Seed) -> Result<Sample> {
    check_count(n)?;
    let law = unit_gamma(c);
    let mut rng = seed.rng();
    let values = (0..n).map(|_| law.sample(&mut rng) / c.rate()).collect();
    Sample::new(values, format!("gamma shape={} rate={} seed={}", c.shape(), c.rate(), seed.0))
}

/// `n` draws of shift + Σ Xᵢ with independent Xᵢ ~ Gamma(βᵢ, bᵢ).
pub fn sample_ggc(gc: &GammaConvolution, n: usize, seed: Seed) -> Result<Sample> {
    check_count(n)?;
    let sampler = ConvolutionSampler::new(gc);
    let mut rng = seed.rng();
    let values = (0..n).map(|_| sampler.draw(&mut rng)).collect();
    Sample::new(values, format!("ggc {} seed={}", gc.to_json(), seed.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Sum,
    Product,
}

/// `n` draws of Σ Xᵢ^{qᵢ} or ∏ Xᵢ^{qᵢ} for independent unshifted Xᵢ.
pub fn sample_power_product(
    gcs: &[GammaConvolution],
    powers: &[PowerLaw],
    mode: Combine,
    n: usize,
    seed: Seed,
) -> Result<Sample> {
    check_count(n)?;
    if gcs.is_empty() || gcs.len() != powers.len() {
        return Err(Error::domain(format!(
            "need equally many models and powers, got {} and {}",
            gcs.len(),
            powers.len()
        )));
    }
    for gc in gcs {
        gc.require_unshifted()?;
    }
    let samplers: Vec<ConvolutionSampler> = gcs.iter().map(ConvolutionSampler::new).collect();
    let mut rng = seed.rng();
    let values = (0..n)
        .map(|_| {
            let terms = samplers.iter().zip(powers).map(|(s, p)| s.draw(&mut rng).powf(p.q()));
            match mode {
                Combine::Sum => terms.sum(),
                Combine::Product => terms.product(),
            }
        })
        .collect();
    let qs: Vec<String> = powers.iter().map(|p| p.q().to_string()).collect();
    Sample::new(values, format!("power {mode:?} q=[{}] seed={}", qs.join(" "), seed.0).to_lowercase())
}

/// `n` draws of Y^{1/α}·Z with Y from the unshifted model and Z standard normal.
pub fn sample_sym_eggc(gc: &GammaConvolution, alpha: f64, n: usize, seed: Seed) -> Result<Sample> {
    check_count(n)?;
    gc.require_unshifted()?;
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain(format!("alpha must lie in (0, 2], got {alpha}")));
    }
    let sampler = ConvolutionSampler::new(gc);
    let mut rng = seed.rng();
    let values = (0..n)
        .map(|_| {
            let y = sampler.draw(&mut rng);
            let z: f64 = StandardNormal.sample(&mut rng);
            y.powf(1.0 / alpha) * z
        })
        .collect();
    Sample::new(values, format!("symeggc alpha={alpha} {} seed={}", gc.to_json(), seed.0))
}

/// Coupled draws of e^a·((1 + r(X − a))^{1/r} − 1) and e^X − e^a from one X
/// per index, where a is the model's shift.
pub fn exp_limit_pair(gc: &GammaConvolution, r: f64, n: usize, seed: Seed) -> Result<(Sample, Sample)> {
    check_count(n)?;
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("r must lie in (0, 1), got {r}")));
    }
    let sampler = ConvolutionSampler::new(gc);
    let a = gc.shift();
    let scale = a.exp();
    let mut rng = seed.rng();
    let (mut power, mut exponential) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let excess = sampler.draw(&mut rng) - a;
        power.push(scale * power_limit_term(excess, r));
        exponential.push(scale * excess.exp_m1());
    }
    let tag = format!("r={r} {} seed={}", gc.to_json(), seed.0);
    Ok((Sample::new(power, format!("power-limit {tag}"))?, Sample::new(exponential, format!("exp {tag}"))?))
}

/// (1 + r·y)^{1/r} − 1, accurate for small r·y.
fn power_limit_term(y: f64, r: f64) -> f64 {
    ((r * y).ln_1p() / r).exp_m1()
}

/// Two-sample Kolmogorov–Smirnov statistic sup |F₁ − F₂| of the empirical CDFs.
pub fn ks_distance(s1: &Sample, s2: &Sample) -> f64 {
    let a = sorted(s1.values());
    let b = sorted(s2.values());
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut worst = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        worst = worst.max((i as f64 / na - j as f64 / nb).abs());
    }
    worst
}

/// One-sample Kolmogorov–Smirnov statistic against a continuous CDF.
pub fn ks_distance_cdf<F: Fn(f64) -> f64>(sample: &Sample, cdf: F) -> f64 {
    let xs = sorted(sample.values());
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |worst, (i, &x)| {
        let f = cdf(x);
        worst.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n)
    })
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}
