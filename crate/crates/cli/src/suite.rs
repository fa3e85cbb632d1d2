//! The power suite: HCM checks of E[exp(−s·X^q)] over a corpus of models and
//! powers, followed by moment and limit checks of the samplers.

use serde::Serialize;

use ggc_core::gammaconv::{Density, GammaComponent, GammaConvolution};
use ggc_core::monotone::{hcm_check, Verdict};
use ggc_core::output::format_g17;
use ggc_core::stochastics::{sample_power_product, sample_sym_eggc, Combine, Seed};

use crate::{
    emit, hcm_config, limit_check, model_label, parse_grid, power, quadrature, read_text, Builtin, CliError, Status,
    SuiteArgs, Transform,
};

/// Shapes used by the built-in corpus.
pub const CORPUS_SHAPES: [f64; 3] = [0.5, 1.0, 1.5];
/// Rate of the k-th component in every built-in corpus model.
pub const CORPUS_RATES: [f64; 3] = [1.0, 2.0, 3.5];

/// All models with one to three components whose shapes are drawn, with
/// repetition and in nondecreasing order, from [`CORPUS_SHAPES`]; component k
/// gets rate `CORPUS_RATES[k]`.
pub fn default_corpus() -> Vec<GammaConvolution> {
    let k = CORPUS_SHAPES.len();
    let mut combos: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
    for i in 0..k {
        for j in i..k {
            combos.push(vec![i, j]);
        }
    }
    for i in 0..k {
        for j in i..k {
            for l in j..k {
                combos.push(vec![i, j, l]);
            }
        }
    }
    combos
        .iter()
        .map(|c| {
            let components = c
                .iter()
                .zip(CORPUS_RATES)
                .map(|(&i, rate)| GammaComponent::new(CORPUS_SHAPES[i], rate).expect("valid constants"))
                .collect();
            GammaConvolution::new(components, 0.0).expect("nonempty")
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteRow {
    pub check: String,
    pub model: String,
    pub q: Option<f64>,
    pub verdict: Verdict,
    /// Worst margin for HCM rows, |z| for moment rows, the last KS distance for limit rows.
    pub statistic: f64,
}

/// One HCM row: the power transform of `gc` under `q`.
pub fn hcm_row(gc: &GammaConvolution, q: f64, args: &SuiteArgs) -> Result<SuiteRow, CliError> {
    let (transform, _) = Transform::for_model(gc.clone(), Some(q), args.tol)?;
    let cfg = hcm_config(args.max_order, args.check_tol, transform.eval_rel_error());
    let report = hcm_check(|s| transform.eval(s), &cfg)?;
    Ok(SuiteRow {
        check: "hcm".into(),
        model: model_label(gc),
        q: Some(q),
        verdict: report.verdict,
        statistic: report.worst_margin,
    })
}

fn uniform_row(args: &SuiteArgs) -> Result<SuiteRow, CliError> {
    let transform = Transform::Builtin(Builtin::Uniform);
    let cfg = hcm_config(args.max_order, args.check_tol, 0.0);
    let report = hcm_check(|s| transform.eval(s), &cfg)?;
    Ok(SuiteRow {
        check: "hcm".into(),
        model: "uniform".into(),
        q: None,
        verdict: report.verdict,
        statistic: report.worst_margin,
    })
}

fn moment_row(check: &str, model: String, q: Option<f64>, got: f64, want: f64, se: f64) -> SuiteRow {
    let z = if se > 0.0 { (got - want).abs() / se } else if got == want { 0.0 } else { f64::INFINITY };
    let verdict = if z <= 4.0 { Verdict::Pass } else { Verdict::Fail };
    SuiteRow { check: check.into(), model, q, verdict, statistic: z }
}

fn sampler_rows(corpus: &[GammaConvolution], args: &SuiteArgs) -> Result<Vec<SuiteRow>, CliError> {
    let seed = Seed(args.seed);
    let exp1 = GammaConvolution::from_pairs(&[(1.0, 1.0)])?;
    let mut rows = Vec::new();

    let s = sample_power_product(std::slice::from_ref(&exp1), &[power(2.0)?], Combine::Sum, args.n, seed)?;
    rows.push(moment_row("sum-power-mean", model_label(&exp1), Some(2.0), s.mean(), 2.0, s.mean_standard_error()));

    let s = sample_power_product(&[exp1.clone(), exp1.clone()], &[power(1.0)?, power(1.0)?], Combine::Product, args.n, seed)?;
    let label = format!("{0}*{0}", model_label(&exp1));
    rows.push(moment_row("product-mean", label, Some(1.0), s.mean(), 1.0, s.mean_standard_error()));

    if let Some(gc) = corpus.iter().find(|gc| gc.shift() == 0.0) {
        let density = Density::new(gc, &quadrature(args.tol)?)?;
        for alpha in [1.0, 2.0] {
            let moment = density.integrate(|y| y.powf(2.0 / alpha))?;
            let s = sample_sym_eggc(gc, alpha, args.n, seed)?;
            let check = format!("sym-eggc-variance alpha={alpha}");
            rows.push(moment_row(&check, model_label(gc), None, s.variance(), moment, s.variance_standard_error()));
        }
    }

    let report = limit_check(&exp1, &[0.3, 0.1, 0.03, 0.01], args.n, args.seed, 0.01)?;
    rows.push(SuiteRow {
        check: "exp-limit".into(),
        model: model_label(&exp1),
        q: None,
        verdict: report.verdict,
        statistic: report.ks[report.ks.len() - 1],
    });
    Ok(rows)
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    command: &'static str,
    models: usize,
    qs: &'a [f64],
    seed: u64,
    n: usize,
    rows: &'a [SuiteRow],
    passed: usize,
    failed: usize,
    inconclusive: usize,
    verdict: Verdict,
}

/// Fail if any row fails, else inconclusive if any is, else pass.
pub fn overall(rows: &[SuiteRow]) -> Verdict {
    if rows.iter().any(|r| r.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if rows.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

pub(crate) fn cmd_power_suite(args: &SuiteArgs) -> Result<Status, CliError> {
    let corpus = match &args.corpus {
        Some(path) => serde_json::from_str::<Vec<GammaConvolution>>(&read_text(path)?)
            .map_err(|e| CliError::Validation(format!("invalid corpus {}: {e}", path.display())))?,
        None => default_corpus(),
    };
    let qs = parse_grid(&args.qs)?;
    for &q in &qs {
        power(q)?;
    }
    let mut rows = Vec::new();
    for gc in &corpus {
        for &q in &qs {
            rows.push(hcm_row(gc, q, args)?);
        }
    }
    if args.inject_uniform {
        rows.push(uniform_row(args)?);
    }
    if !args.hcm_only {
        rows.extend(sampler_rows(&corpus, args)?);
    }

    let mut csv = String::from("check,model,q,verdict,statistic\n");
    for r in &rows {
        let q = r.q.map(format_g17).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{},{}\n", r.check, r.model, q, r.verdict, format_g17(r.statistic)));
    }
    let count = |v: Verdict| rows.iter().filter(|r| r.verdict == v).count();
    let verdict = overall(&rows);
    let report = SuiteReport {
        command: "power-suite",
        models: corpus.len(),
        qs: &qs,
        seed: args.seed,
        n: args.n,
        rows: &rows,
        passed: count(Verdict::Pass),
        failed: count(Verdict::Fail),
        inconclusive: count(Verdict::Inconclusive),
        verdict,
    };
    emit(&args.output, csv.as_bytes(), &report)?;
    Ok(Status::Checked(verdict))
}
