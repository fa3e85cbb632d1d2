use approx::assert_relative_eq;
use ggc_core::gammaconv::{laplace_exact, laplace_power, thorin_laplace, to_thorin, Density, GammaConvolution, PowerLaplace, PowerLaw};
use ggc_core::QuadratureConfig;
use statrs::function::erf::erfc;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

#[test]
fn numerical_transform_matches_closed_form() {
    let gc = GammaConvolution::from_pairs(&[(0.4, 0.9), (1.7, 2.6), (2.2, 4.1)]).unwrap();
    let density = Density::new(&gc, &cfg()).unwrap();
    assert_relative_eq!(density.integrate(|_| 1.0).unwrap(), 1.0, max_relative = 1e-10);
    for s in [0.2, 1.0, 5.0] {
        let got = density.integrate(|x| (-s * x).exp()).unwrap();
        assert_relative_eq!(got, laplace_exact(&gc, s).unwrap(), max_relative = 1e-10);
    }
}

#[test]
fn thorin_representation_reproduces_the_transform() {
    let gc = GammaConvolution::from_pairs(&[(0.5, 1.0), (1.5, 3.0), (0.25, 1.0)]).unwrap().with_shift(0.3).unwrap();
    let tm = to_thorin(&gc);
    assert_eq!(tm.atoms().len(), 2);
    for s in [0.0, 0.5, 2.0, 20.0] {
        assert_relative_eq!(thorin_laplace(&tm, s).unwrap(), laplace_exact(&gc, s).unwrap(), max_relative = 1e-13);
    }
}

#[test]
fn squared_exponential_matches_erfc_formula() {
    // E[exp(−s X²)] for X ~ Exp(1) is ½√(π/s)·e^{1/(4s)}·erfc(1/(2√s))
    let gc = GammaConvolution::from_pairs(&[(1.0, 1.0)]).unwrap();
    let p = PowerLaw::new(2.0).unwrap();
    let prepared = PowerLaplace::new(&gc, p, &cfg()).unwrap();
    for s in [0.05, 0.3, 1.0, 4.0, 25.0] {
        let want = 0.5 * (std::f64::consts::PI / s).sqrt() * (0.25 / s).exp() * erfc(0.5 / s.sqrt());
        assert_relative_eq!(prepared.eval(s).unwrap(), want, max_relative = 1e-9);
        assert_relative_eq!(laplace_power(&gc, p, s, &cfg()).unwrap(), want, max_relative = 1e-9);
    }
}

#[test]
fn power_transform_moments() {
    // −φ'(0) = E[X^q]; for X ~ Gamma(2,1) and q = 1.5, E[X^1.5] = Γ(3.5)/Γ(2)
    let gc = GammaConvolution::from_pairs(&[(2.0, 1.0)]).unwrap();
    let prepared = PowerLaplace::new(&gc, PowerLaw::new(1.5).unwrap(), &cfg()).unwrap();
    let h = 1e-5;
    let slope = (prepared.eval(h).unwrap() - prepared.eval(3.0 * h).unwrap()) / (2.0 * h);
    let second = (prepared.eval(h).unwrap() - 2.0 * prepared.eval(2.0 * h).unwrap() + prepared.eval(3.0 * h).unwrap()) / (h * h);
    let moment = slope + 2.0 * h * second;
    assert_relative_eq!(moment, statrs::function::gamma::gamma(3.5), max_relative = 1e-4);
}
