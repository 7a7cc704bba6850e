//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run with `cargo test -p covadj-validation --test acceptance --release`.

use std::path::Path;
use std::time::Instant;

use clap::Parser;
use covadj_cli::args::Cli;
use covadj_cli::commands;

use covadj_core::dataset::{build_design, Arm, Covariate, CovariateKind, Dataset, ModelSpec};
use covadj_core::theory::{
    add_covariate_ratios, breakeven, expected_vif_from_dof, f_moments, historical_score_ratios,
    vif_moments, BreakEvenRule,
};
use covadj_core::vif::{
    contingency, marginal_decomposition, rao_bridge, vif_from_chi_square, vif_quadratic,
    vif_regression,
};
use covadj_core::Exact;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIM_SEED: &str = "1";
const REPS: usize = 1000;
const COVARIATES: &str = "sex:binary=M|F,age,baseline,height,weight";

struct Outcome {
    pass: bool,
    detail: String,
}

/// Runs a command in-process, exactly as the binary would.
fn covadj(args: &[&str]) -> Vec<u8> {
    let cli = Cli::try_parse_from(std::iter::once("covadj").chain(args.iter().copied()))
        .unwrap_or_else(|e| panic!("bad arguments {args:?}: {e}"));
    let mut out = Vec::new();
    commands::execute(&cli, &mut out).unwrap_or_else(|e| panic!("covadj {args:?} failed: {e}"));
    out
}

fn simulate(data: &Path, out: &Path, threads: Option<&str>) {
    let mut args = vec![
        "simulate",
        "--data",
        data.to_str().unwrap(),
        "--covariates",
        COVARIATES,
        "--reps",
        "1000",
        "--seed",
        SIM_SEED,
        "--out",
        out.to_str().unwrap(),
    ];
    if let Some(t) = threads {
        args.extend(["--threads", t]);
    }
    covadj(&args);
}

struct Row {
    label: String,
    k: usize,
    mean: f64,
    var: f64,
    theory_mean: f64,
    theory_var: f64,
}

fn read_results(dir: &Path) -> Vec<Row> {
    let text = std::fs::read_to_string(dir.join("results.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            let num = |name: &str| f[col(name)].parse::<f64>().unwrap();
            Row {
                label: format!("{}/{}", f[col("scheme")], f[col("model")]),
                k: f[col("k")].parse().unwrap(),
                mean: num("mean_lambda"),
                var: num("var_lambda"),
                theory_mean: num("theory_mean"),
                theory_var: num("theory_var"),
            }
        })
        .collect()
}

fn criterion_1(rows: &[Row]) -> Outcome {
    let mut worst = (0.0f64, String::new());
    let mut failures = Vec::new();
    for r in rows {
        let band = (3.0 * (r.theory_var / REPS as f64).sqrt()).max(0.005);
        let dev = (r.mean - r.theory_mean).abs();
        if dev / band > worst.0 {
            worst = (dev / band, r.label.clone());
        }
        if dev > band {
            failures.push(format!("{} |Δ|={dev:.5} band={band:.5}", r.label));
        }
    }
    // the k = 5 anchor: E = 43/38, 3-SE band ≈ 0.0086
    let k5 = rows.iter().find(|r| r.k == 5).unwrap();
    let anchor = (k5.theory_mean - 1.131579).abs() < 1e-6
        && (3.0 * (k5.theory_var / 1000.0).sqrt() - 0.0086).abs() < 1e-4;
    Outcome {
        pass: rows.len() == 96 && failures.is_empty() && anchor,
        detail: format!(
            "{} cells, {} outside band, worst {:.2} of band ({}){}",
            rows.len(),
            failures.len(),
            worst.0,
            worst.1,
            if failures.is_empty() {
                String::new()
            } else {
                format!(": {}", failures.join("; "))
            }
        ),
    }
}

fn criterion_2(rows: &[Row]) -> Outcome {
    let scale = (2.0 / REPS as f64).sqrt();
    let mut outside5 = Vec::new();
    let mut inside3 = 0;
    for r in rows {
        let rel = scale * r.theory_var;
        let dev = (r.var - r.theory_var).abs();
        if dev <= 3.0 * rel {
            inside3 += 1;
        }
        if dev > 5.0 * rel {
            outside5.push(format!(
                "{} ({:+.2})",
                r.label,
                (r.var - r.theory_var) / rel
            ));
        }
    }
    Outcome {
        pass: rows.len() == 96 && outside5.is_empty() && inside3 >= 90,
        detail: format!(
            "{inside3}/96 inside ±3 (need 90), {} outside ±5{}",
            outside5.len(),
            if outside5.is_empty() {
                String::new()
            } else {
                format!(": {}", outside5.join(", "))
            }
        ),
    }
}

fn labels() -> [String; 2] {
    ["A".into(), "B".into()]
}

/// Random small dataset whose design has exactly `k` columns; `None` when
/// an arm came out empty.
fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    k: usize,
    single_categorical: bool,
) -> Option<(Dataset, ModelSpec)> {
    let arms: Vec<Arm> = (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                Arm::Second
            } else {
                Arm::First
            }
        })
        .collect();
    let mut covs = Vec::new();
    if single_categorical {
        let labels: Vec<String> = (0..=k).map(|j| format!("c{j}")).collect();
        let kind = if k == 1 {
            CovariateKind::binary("c0", "c1").unwrap()
        } else {
            CovariateKind::categorical(labels).unwrap()
        };
        covs.push(Covariate::levels(
            "g",
            kind,
            (0..n).map(|_| rng.random_range(0..=k)).collect(),
        ));
    } else {
        let mut width = 0;
        while width < k {
            let name = format!("x{}", covs.len());
            let choice = rng.random_range(0..3);
            if choice == 2 && k - width >= 2 {
                let kind = CovariateKind::categorical(["a", "b", "c"]).unwrap();
                covs.push(Covariate::levels(
                    name,
                    kind,
                    (0..n).map(|_| rng.random_range(0..3)).collect(),
                ));
                width += 2;
            } else if choice == 1 {
                let kind = CovariateKind::binary("no", "yes").unwrap();
                covs.push(Covariate::levels(
                    name,
                    kind,
                    (0..n).map(|_| usize::from(rng.random_bool(0.4))).collect(),
                ));
                width += 1;
            } else {
                let shift = rng.random_range(-50.0..50.0);
                let scale = rng.random_range(0.1..20.0);
                let vals = (0..n)
                    .map(|_| shift + scale * (rng.random::<f64>() - 0.5))
                    .collect();
                covs.push(Covariate::continuous(name, vals));
                width += 1;
            }
        }
    }
    let names: Vec<String> = covs.iter().map(|c| c.name.clone()).collect();
    let d = Dataset::new(labels(), arms, covs, None).ok()?;
    Some((d, ModelSpec::new(names)))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut done, mut redrawn, mut chi_checked) = (0, 0, 0);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    while done < 200 {
        let k = rng.random_range(1..=5);
        let n = rng.random_range((k + 2).max(6)..=60);
        let single = rng.random_bool(0.25);
        let Some((d, model)) = random_instance(&mut rng, n, k, single) else {
            redrawn += 1;
            continue;
        };
        let design = match build_design::<f64>(&d, &model) {
            Ok(x) if x.is_full_rank() && x.k == k => x,
            _ => {
                redrawn += 1;
                continue;
            }
        };
        let reg = match vif_regression(&design, d.arms()) {
            Ok(v) => v.lambda,
            Err(_) => {
                redrawn += 1;
                continue;
            }
        };
        let quad = vif_quadratic(&design, d.arms()).map(|v| v.lambda);
        let rao = rao_bridge(&design, d.arms()).map(|b| b.lambda);
        let mut values = vec![("quadratic", quad), ("rao", rao)];
        if single {
            let chi = contingency(&d, "g")
                .and_then(|t| vif_from_chi_square::<f64>(&t))
                .map(|v| v.lambda);
            values.push(("chi-square", chi));
            chi_checked += 1;
        }
        for (name, v) in values {
            match v {
                Ok(l) => {
                    let gap = (l - reg).abs();
                    worst = worst.max(gap);
                    if gap > 1e-10 {
                        failures.push(format!("N={n} k={k} {name} gap {gap:e} (λ={reg})"));
                    }
                }
                Err(e) => failures.push(format!("N={n} k={k} {name}: {e}")),
            }
        }
        done += 1;
    }
    Outcome {
        pass: failures.is_empty() && chi_checked > 0,
        detail: format!(
            "200 instances ({chi_checked} single categorical, {redrawn} degenerate draws replaced), max |Δλ| {worst:e}{}",
            if failures.is_empty() { String::new() } else { format!(": {}", failures.join("; ")) }
        ),
    }
}

fn criterion_4() -> Outcome {
    let (mut cells, mut worst) = (0, 0.0f64);
    let mut failures = Vec::new();
    for n in 10..=500usize {
        for k in 1..=8usize {
            let m = vif_moments::<f64>(n, k);
            let omega = n - k - 1;
            let f = f_moments::<f64>(k, omega).unwrap();
            let scale = k as f64 / omega as f64;
            if let (Some(e), Some(fm)) = (m.expected_vif, f.mean) {
                cells += 1;
                let via_f = 1.0 + scale * fm;
                worst = worst.max((e - via_f).abs());
                if (e - via_f).abs() > 1e-12 {
                    failures.push(format!("E N={n} k={k}"));
                }
                let exact_eq = vif_moments::<Exact>(n, k).expected_vif
                    == expected_vif_from_dof::<Exact>(n - 2, k).ok();
                let float_eq = expected_vif_from_dof::<f64>(n - 2, k).ok() == Some(e);
                if !exact_eq || !float_eq {
                    failures.push(format!("from_dof N={n} k={k}"));
                }
            }
            if let (Some(v), Some(fv)) = (m.vif_variance, f.variance) {
                let via_f = scale * scale * fv;
                worst = worst.max((v - via_f).abs());
                if (v - via_f).abs() > 1e-12 {
                    failures.push(format!("Var N={n} k={k}"));
                }
            }
            if m.expected_vif.is_some() != f.mean.is_some()
                || m.vif_variance.is_some() != f.variance.is_some()
            {
                failures.push(format!("domain N={n} k={k}"));
            }
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: format!(
            "{cells} valid cells, max |Δ| {worst:e}, from_dof exact{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!(": {}", failures.join("; "))
            }
        ),
    }
}

fn criterion_5() -> Outcome {
    let s12: f64 = breakeven(BreakEvenRule::Simple, 12).unwrap();
    let anchor = (s12 - 0.301511).abs() <= 1e-6;
    let mut worst = 0.0f64;
    for nu in 3..=200usize {
        let (r_lambda, fisher_ratio) = add_covariate_ratios::<f64>(nu).unwrap();
        let s: f64 = breakeven(BreakEvenRule::Simple, nu).unwrap();
        let f: f64 = breakeven(BreakEvenRule::Fisher, nu).unwrap();
        worst = worst.max((r_lambda * (1.0 - s * s) - 1.0).abs());
        worst = worst.max((r_lambda * (1.0 - f * f) * fisher_ratio - 1.0).abs());
    }
    Outcome {
        pass: anchor && worst <= 1e-12,
        detail: format!("simple(12) = {s12:.9}, max root residual over ν∈[3,200] {worst:e}"),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut count = 0;
    while count < 100 {
        let n = rng.random_range(6..=60);
        let z: Vec<f64> = (0..n)
            .map(|_| f64::from(u8::from(rng.random_bool(0.5))))
            .collect();
        if z.iter().all(|&v| v == z[0]) {
            continue;
        }
        let (a, b, c) = (
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
            rng.random_range(-3.0..3.0),
        );
        let x: Vec<f64> = z
            .iter()
            .map(|&zi| a * zi + rng.random_range(-5.0..5.0) + 10.0)
            .collect();
        let y: Vec<f64> = z
            .iter()
            .zip(&x)
            .map(|(&zi, &xi)| b * zi + c * xi + rng.random_range(-2.0..2.0))
            .collect();
        let s = match marginal_decomposition(&y, &z, &x) {
            Ok(s) => s,
            Err(_) => continue,
        };
        worst = worst.max(s.identity_residual().abs());
        count += 1;
    }
    Outcome {
        pass: worst <= 1e-10,
        detail: format!("100 instances, max residual {worst:e}"),
    }
}

fn criterion_7() -> Outcome {
    let half = Exact::new(1, 2);
    let mut ok = true;
    for n in 5..=500usize {
        let q = historical_score_ratios::<Exact>(n, 1, half, half).unwrap();
        let f = historical_score_ratios::<f64>(n, 1, 0.5, 0.5).unwrap();
        ok &= q.vif_ratio == Exact::from_integer(1) && f.vif_ratio == 1.0;
    }
    let r = historical_score_ratios::<f64>(46, 5, 0.5, 0.5)
        .unwrap()
        .vif_ratio;
    let gap = (r - 42.0 / 38.0).abs();
    Outcome {
        pass: ok && gap <= 1e-12,
        detail: format!(
            "vif_ratio(N,1) = 1 for N∈[5,500]: {ok}; |vif_ratio(46,5) − 42/38| = {gap:e}"
        ),
    }
}

fn manifest_without_run_details(dir: &Path) -> serde_json::Value {
    let mut m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap();
    let obj = m.as_object_mut().unwrap();
    obj.remove("command_line");
    obj.remove("timestamp");
    m
}

fn criterion_8(data: &Path, first: &Path, root: &Path) -> Outcome {
    let again = root.join("again");
    let single = root.join("threads1");
    let many = root.join("threads8");
    simulate(data, &again, None);
    simulate(data, &single, Some("1"));
    simulate(data, &many, Some("8"));
    let mut diffs = Vec::new();
    for dir in [&again, &single, &many] {
        for file in ["results.csv", "summary.json"] {
            if std::fs::read(first.join(file)).unwrap() != std::fs::read(dir.join(file)).unwrap() {
                diffs.push(format!(
                    "{}/{file}",
                    dir.file_name().unwrap().to_string_lossy()
                ));
            }
        }
        if manifest_without_run_details(first) != manifest_without_run_details(dir) {
            diffs.push(format!(
                "{}/manifest.json",
                dir.file_name().unwrap().to_string_lossy()
            ));
        }
    }
    Outcome {
        pass: diffs.is_empty(),
        detail: if diffs.is_empty() {
            "repeat run, 1 thread and 8 threads byte-identical (results.csv, summary.json; manifest up to command line and timestamp)".into()
        } else {
            format!("differs: {}", diffs.join(", "))
        },
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let data = tmp.path().join("synthetic.csv");
    covadj(&["gen-data", "--out", data.to_str().unwrap()]);
    let first = tmp.path().join("run");
    let started = Instant::now();
    simulate(&data, &first, None);
    let elapsed = started.elapsed();
    let rows = read_results(&first);

    let results = [
        ("1", "simulated mean λ vs E[λ]", criterion_1(&rows)),
        ("2", "simulated Var λ vs Var[λ]", criterion_2(&rows)),
        ("3", "route equivalence", criterion_3()),
        ("4", "moment algebra", criterion_4()),
        ("5", "break-even anchors", criterion_5()),
        ("6", "marginalisation identity", criterion_6()),
        ("7", "score trade-off anchors", criterion_7()),
        ("8", "determinism", criterion_8(&data, &first, tmp.path())),
    ];
    println!(
        "simulation of 96 cells x {REPS} replicates took {:.1}s",
        elapsed.as_secs_f64()
    );
    let mut failed = 0;
    for (id, name, o) in &results {
        println!(
            "criterion {id} ({name}): {} - {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        failed += usize::from(!o.pass);
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
