//! Acceptance run: one pass/fail line per criterion, nonzero exit if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ggc_cli::suite::default_corpus;
use ggc_cli::{hcm_config, limit_check, Transform};
use ggc_core::gammaconv::{density_sum, laplace_exact, Density, GammaConvolution, IteratedDensity};
use ggc_core::monotone::{
    cm_check, cm_in_hyperbolic_variable, hcm_check, lemma2_integral, ratio_spread, remark3_row, uniform_transform,
    HyperbolicCmOptions, Lemma2Params, Remark3Normalization, Verdict,
};
use ggc_core::stochastics::{sample_sym_eggc, Seed};
use ggc_core::QuadratureConfig;

const CORPUS_SEED: u64 = 0x5eed_2024;

type Check = Result<String, String>;

fn cfg() -> QuadratureConfig {
    QuadratureConfig::default()
}

/// 20 convolutions with n ∈ {2,3,4}, shapes in [0.25, 3] and rates in
/// [0.5, 5] at least 0.1 apart.
fn random_corpus() -> Vec<GammaConvolution> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    (0..20)
        .map(|_| {
            let n = rng.random_range(2..=4usize);
            let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
            while pairs.len() < n {
                let rate = rng.random_range(0.5..=5.0);
                if pairs.iter().all(|&(_, b)| (b - rate).abs() >= 0.1) {
                    pairs.push((rng.random_range(0.25..=3.0), rate));
                }
            }
            GammaConvolution::from_pairs(&pairs).expect("valid parameters")
        })
        .collect()
}

/// Ten points spread over the bulk and the right tail of the law.
fn x_points(gc: &GammaConvolution) -> Vec<f64> {
    let m = gc.mean();
    [0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0].iter().map(|f| f * m).collect()
}

fn criterion_1() -> Check {
    let mut worst = 0.0f64;
    let mut points = 0;
    for gc in random_corpus() {
        let iterated = IteratedDensity::new(&gc, &cfg()).map_err(|e| e.to_string())?;
        for x in x_points(&gc) {
            let direct = density_sum(&gc, x, &cfg()).map_err(|e| e.to_string())?;
            let reference = iterated.density(x).map_err(|e| e.to_string())?;
            worst = worst.max((direct - reference).abs() / reference.abs());
            points += 1;
        }
    }
    let msg = format!("direct vs iterated, worst relative difference {worst:.2e} over {points} points");
    if worst <= 1e-6 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_2() -> Check {
    let (mut worst_norm, mut worst_transform) = (0.0f64, 0.0f64);
    for gc in random_corpus() {
        let density = Density::new(&gc, &cfg()).map_err(|e| e.to_string())?;
        let norm = density.integrate(|_| 1.0).map_err(|e| e.to_string())?;
        worst_norm = worst_norm.max((norm - 1.0).abs());
        for s in [0.2, 1.0, 5.0] {
            let got = density.integrate(|x| (-s * x).exp()).map_err(|e| e.to_string())?;
            let want = laplace_exact(&gc, s).map_err(|e| e.to_string())?;
            worst_transform = worst_transform.max((got - want).abs());
        }
    }
    let msg = format!("|mass - 1| <= {worst_norm:.2e}, |transform - exact| <= {worst_transform:.2e}");
    if worst_norm <= 1e-7 && worst_transform <= 1e-7 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_3() -> Check {
    let gc = GammaConvolution::from_pairs(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).expect("valid");
    let mut worst = 0.0f64;
    for x in [0.5f64, 1.0, 2.0] {
        let want = 3.0 * ((-x).exp() - 2.0 * (-2.0 * x).exp() + (-3.0 * x).exp());
        let got = density_sum(&gc, x, &cfg()).map_err(|e| e.to_string())?;
        worst = worst.max((got - want).abs());
    }
    let msg = format!("worst absolute difference {worst:.2e} at x in {{0.5, 1, 2}}");
    if worst <= 1e-8 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_4() -> Check {
    let window = (0.1, 10.0);
    let mut notes = Vec::new();
    let cm_cases: [(&str, Box<dyn Fn(f64) -> f64>); 3] = [
        ("exp(-s)", Box::new(|s: f64| (-s).exp())),
        ("(1+s)^-0.5", Box::new(|s: f64| (1.0 + s).powf(-0.5))),
        ("(1+s)^-2", Box::new(|s: f64| (1.0 + s).powf(-2.0))),
    ];
    for (name, f) in &cm_cases {
        let r = cm_check(|s| Ok(f(s)), window, 8, 1e-9).map_err(|e| e.to_string())?;
        if r.verdict != Verdict::Pass || r.worst_margin < -1e-9 {
            return Err(format!("{name}: {} with worst margin {:.2e}", r.verdict, r.worst_margin));
        }
        notes.push(format!("{name} pass ({:.1e})", r.worst_margin));
    }
    let gauss = |s: f64| (-s * s).exp();
    let r = cm_check(|s| Ok(gauss(s)), window, 2, 1e-9).map_err(|e| e.to_string())?;
    if r.verdict != Verdict::Fail {
        return Err(format!("exp(-s^2) at order 2 gave {}", r.verdict));
    }
    // the violation must show at every step of the ladder, recomputed here
    let x = r.worst_location.point;
    for div in [8.0, 16.0, 32.0] {
        let h = x / div;
        let second = gauss(x) - 2.0 * gauss(x + h) + gauss(x + 2.0 * h);
        if second >= 0.0 {
            return Err(format!("exp(-s^2): second difference at x={x}, h=x/{div} is {second:.2e}, not negative"));
        }
    }
    notes.push(format!("exp(-s^2) fails at order {} x={:.3} on all steps", r.worst_location.order, x));
    Ok(notes.join("; "))
}

fn criterion_5() -> Check {
    let corpus = default_corpus();
    let qs = [1.5, 2.0, 3.0];
    let tol = cfg().rel_tol;
    let mut failures = Vec::new();
    let mut worst = f64::INFINITY;
    for gc in &corpus {
        for q in qs {
            let (transform, label) = Transform::for_model(gc.clone(), Some(q), tol).map_err(|e| e.to_string())?;
            let hcm = hcm_config(8, 1e-6, transform.eval_rel_error());
            let r = hcm_check(|s| transform.eval(s), &hcm).map_err(|e| e.to_string())?;
            worst = worst.min(r.worst_margin);
            if r.verdict != Verdict::Pass {
                failures.push(format!("{label}: {}", r.verdict));
            }
        }
    }
    let control = hcm_check(uniform_transform, &hcm_config(8, 1e-6, 0.0)).map_err(|e| e.to_string())?;
    let msg = format!(
        "{} models x {} powers, worst margin {worst:.2e}; uniform control {} ({:.2e})",
        corpus.len(),
        qs.len(),
        control.verdict,
        control.worst_margin
    );
    if failures.is_empty() && control.verdict == Verdict::Fail {
        Ok(msg)
    } else {
        Err(format!("{msg}; failing rows: {}", failures.join(", ")))
    }
}

fn criterion_6() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED + 6);
    let alphas = [1.0 / 3.0, 0.5, 2.0 / 3.0];
    let q = cfg();
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for _ in 0..10 {
        let params = Lemma2Params {
            b1: rng.random_range(0.5..=4.0),
            b2: rng.random_range(0.5..=4.0),
            beta1: rng.random_range(0.5..=2.0),
            beta2: rng.random_range(0.5..=2.0),
            a: rng.random_range(0.5..=2.0),
            b: rng.random_range(0.5..=2.0),
            alpha: alphas[rng.random_range(0..alphas.len())],
        };
        let mut opts = HyperbolicCmOptions::new(params.a, params.b, params.alpha, 6, 1e-6);
        opts.eval_rel_error = q.rel_tol;
        let r = cm_in_hyperbolic_variable(|y| lemma2_integral(&params, y, &q), &opts).map_err(|e| e.to_string())?;
        worst = worst.min(r.worst_margin);
        if r.verdict != Verdict::Pass {
            failures.push(format!("{params:?}: {} ({:.2e})", r.verdict, r.worst_margin));
        }
    }

    let analytic = Lemma2Params { b1: 2.0, b2: 2.0, beta1: 0.7, beta2: 1.6, a: 1.3, b: 0.8, alpha: 0.5 };
    let beta_sq = statrs::function::beta::beta(analytic.beta1, analytic.beta2).powi(2);
    let mut analytic_err = 0.0f64;
    for y in [0.4, 1.0, 2.5] {
        let want = (-analytic.b1 * analytic.sigma(y)).exp() * beta_sq;
        let got = lemma2_integral(&analytic, y, &q).map_err(|e| e.to_string())?;
        analytic_err = analytic_err.max((got - want).abs() / want);
    }
    let msg = format!("10 tuples at order 6, worst margin {worst:.2e}; equal-rate case relative error {analytic_err:.2e}");
    if failures.is_empty() && analytic_err <= 1e-8 {
        Ok(msg)
    } else {
        Err(format!("{msg}; failing: {}", failures.join("; ")))
    }
}

fn criterion_7() -> Check {
    let grid: Vec<f64> = (0..16).map(|i| 0.5 + 1.5 * i as f64 / 15.0).collect();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut calibrated = f64::NAN;
    for beta in [1.0, 0.5, 2.0] {
        let rows = grid
            .iter()
            .map(|&y| remark3_row(beta, y, Remark3Normalization::HalfShift, &cfg()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        let spread = ratio_spread(&rows);
        let mean = rows.iter().map(|r| r.ratio).sum::<f64>() / rows.len() as f64;
        if beta == 1.0 {
            calibrated = mean;
        }
        ok &= spread <= 1e-5;
        notes.push(format!("beta={beta}: ratio {mean:.12} spread {spread:.1e}"));
    }
    let msg = format!("calibrated constant at beta=1: {calibrated:.15}; {}", notes.join(", "));
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_8() -> Check {
    let models = [
        ("Exp(1)", GammaConvolution::from_pairs(&[(1.0, 1.0)]).expect("valid")),
        ("Gamma(0.5,1)+Exp(2)", GammaConvolution::from_pairs(&[(0.5, 1.0), (1.0, 2.0)]).expect("valid")),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, gc) in &models {
        let report = limit_check(gc, &[0.3, 0.1, 0.03, 0.01], 100_000, 8, 0.01).map_err(|e| e.to_string())?;
        ok &= report.verdict == Verdict::Pass;
        let ks: Vec<String> = report.ks.iter().map(|d| format!("{d:.4}")).collect();
        notes.push(format!("{name}: KS [{}]", ks.join(", ")));
    }
    let msg = notes.join("; ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn criterion_9() -> Check {
    let corpus = default_corpus();
    let picks = [&corpus[4], &corpus[18]];
    let mut notes = Vec::new();
    let mut ok = true;
    for gc in picks {
        let density = Density::new(gc, &cfg()).map_err(|e| e.to_string())?;
        for alpha in [1.0, 2.0] {
            let moment = density.integrate(|y| y.powf(2.0 / alpha)).map_err(|e| e.to_string())?;
            let mut hits = 0;
            for seed in 0..20 {
                let s = sample_sym_eggc(gc, alpha, 100_000, Seed(900 + seed)).map_err(|e| e.to_string())?;
                if (s.variance() - moment).abs() <= 4.0 * s.variance_standard_error() {
                    hits += 1;
                }
            }
            ok &= hits >= 19;
            notes.push(format!("{} alpha={alpha}: {hits}/20", ggc_cli::model_label(gc)));
        }
    }
    let msg = notes.join(", ");
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn run_ggc(dir: &Path, args: &[&str]) -> (Option<i32>, Vec<u8>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_ggc")).current_dir(dir).args(args).output().expect("ggc runs");
    (out.status.code(), out.stdout, out.stderr)
}

fn criterion_10() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let dir = tmp.path();
    let write = |name: &str, text: &str| fs::write(dir.join(name), text).map_err(|e| e.to_string());
    write("exp1.json", r#"{"components":[{"shape":1,"rate":1}]}"#)?;
    write("pair.json", r#"{"components":[{"shape":0.5,"rate":1},{"shape":1,"rate":2}]}"#)?;
    write("trio.json", r#"{"components":[{"shape":1,"rate":1},{"shape":1,"rate":2},{"shape":1,"rate":3}]}"#)?;
    write("shifted.json", r#"{"components":[{"shape":0.5,"rate":1}],"shift":0.5}"#)?;
    write("corpus.json", r#"[{"components":[{"shape":1,"rate":1}]},{"components":[{"shape":0.5,"rate":1},{"shape":1.5,"rate":2}]}]"#)?;

    let commands: Vec<Vec<&str>> = vec![
        vec!["density", "--model", "trio.json", "--grid", "0.25:4:8", "--out", "density.csv"],
        vec!["density", "--model", "pair.json", "--grid", "0.5,1,2"],
        vec!["laplace", "--model", "shifted.json", "--grid", "0:5:6", "--out", "laplace.csv"],
        vec!["laplace", "--model", "pair.json", "--grid", "0:5:6", "--q", "2", "--out", "laplace_q.csv"],
        vec!["cm-test", "--model", "pair.json", "--q", "1.5", "--out", "cm.json"],
        vec!["cm-test", "--builtin", "gaussian", "--max-order", "2"],
        vec!["hcm-test", "--model", "exp1.json", "--q", "2", "--out", "hcm.json"],
        vec!["hcm-test", "--builtin", "uniform"],
        vec!["remark3", "--beta", "1", "--grid", "0.5:2:6", "--out", "remark3.csv"],
        vec!["sample", "--model", "pair.json", "--n", "2000", "--seed", "7", "--out", "sample.csv"],
        vec!["sample", "--model", "pair.json", "--kind", "sym-eggc", "--alpha", "1", "--n", "2000", "--seed", "7"],
        vec!["limit-check", "--model", "exp1.json", "--n", "20000", "--seed", "3", "--out", "limit.csv"],
        vec![
            "power-suite", "--corpus", "corpus.json", "--qs", "2", "--n", "20000", "--inject-uniform", "--out",
            "suite.csv",
        ],
    ];

    let files = |args: &[&str]| -> Vec<String> {
        args.iter()
            .position(|a| *a == "--out")
            .map(|i| {
                let out = args[i + 1].to_string();
                let json = Path::new(&out).with_extension("json").display().to_string();
                if json == out {
                    vec![out]
                } else {
                    vec![out, json]
                }
            })
            .unwrap_or_default()
    };

    let mut compared = 0;
    for args in &commands {
        let first = run_ggc(dir, args);
        let first_files: Vec<Vec<u8>> = files(args).iter().map(|f| fs::read(dir.join(f)).unwrap_or_default()).collect();
        let second = run_ggc(dir, args);
        let second_files: Vec<Vec<u8>> = files(args).iter().map(|f| fs::read(dir.join(f)).unwrap_or_default()).collect();
        let line = args.join(" ");
        if first.0.is_none() || !matches!(first.0, Some(0 | 4 | 5)) {
            return Err(format!("`ggc {line}` exited with {:?}: {}", first.0, String::from_utf8_lossy(&first.2)));
        }
        if first != second || first_files != second_files {
            return Err(format!("`ggc {line}` differs between runs"));
        }
        if first_files.iter().any(|f| f.is_empty()) {
            return Err(format!("`ggc {line}` produced an empty output file"));
        }
        compared += 1;
    }
    Ok(format!("{compared} invocations over all 8 subcommands byte-identical across two runs"))
}

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Check,
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, title: "direct and iterated densities agree", budget: secs(60), run: criterion_1 },
        Criterion { id: 2, title: "normalization and transform consistency", budget: secs(60), run: criterion_2 },
        Criterion { id: 3, title: "hypoexponential closed form", budget: secs(5), run: criterion_3 },
        Criterion { id: 4, title: "CM engine calibration", budget: secs(10), run: criterion_4 },
        Criterion { id: 5, title: "HCM of power transforms over the corpus", budget: secs(900), run: criterion_5 },
        Criterion { id: 6, title: "two-gamma integral CM in the hyperbolic variable", budget: secs(120), run: criterion_6 },
        Criterion { id: 7, title: "Bessel product ratio constant in y", budget: secs(60), run: criterion_7 },
        Criterion { id: 8, title: "power approximation of the exponential", budget: secs(30), run: criterion_8 },
        Criterion { id: 9, title: "symmetric mixture variance", budget: secs(60), run: criterion_9 },
        Criterion { id: 10, title: "CLI determinism", budget: None, run: criterion_10 },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = c.budget.is_none_or(|b| elapsed <= b);
        let (passed, detail) = match outcome {
            Ok(d) => (in_budget, d),
            Err(d) => (false, d),
        };
        let budget = c.budget.map(|b| format!(" / {} s", b.as_secs())).unwrap_or_default();
        println!(
            "criterion {:>2} {}: {} | {} [{:.1} s{}]",
            c.id,
            if passed { "PASS" } else { "FAIL" },
            c.title,
            detail,
            elapsed.as_secs_f64(),
            budget
        );
        if !passed {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
