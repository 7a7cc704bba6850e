use covadj_core::dataset::{enumerate_models, sample_moments, Arm, CovariateKind, ModelSpec};
use covadj_core::rng::RngStream;
use covadj_core::sim::{
    self, check_drop_budget, draw_bootstrap, draw_fixed_margin_permutation, draw_mvn_covariates,
    draw_permutation, Scheme, SimConfig,
};
use covadj_core::synthetic;
use covadj_core::Error;

#[test]
fn permutation_assigns_half_on_average() {
    let mut second = 0usize;
    let mut total = 0usize;
    for r in 0..400 {
        let arms = draw_permutation(RngStream::new(11, 0, 0, r), 100);
        second += arms.iter().filter(|&&a| a == Arm::Second).count();
        total += arms.len();
    }
    let rate = second as f64 / total as f64;
    assert!((0.48..=0.52).contains(&rate), "rate {rate}");
}

#[test]
fn fixed_margin_permutation_keeps_counts() {
    let d = synthetic::generate(synthetic::DEFAULT_SEED).unwrap();
    for r in 0..50 {
        let arms = draw_fixed_margin_permutation(RngStream::new(3, 0, 0, r), d.arms());
        assert_eq!(covadj_core::dataset::arm_counts(&arms), d.arm_counts());
    }
}

#[test]
fn bootstrap_rows_are_uniform() {
    let n = 20;
    let mut counts = vec![0usize; n];
    let reps = 2000;
    for r in 0..reps {
        for i in draw_bootstrap(RngStream::new(5, 2, 0, r), n).unwrap() {
            counts[i] += 1;
        }
    }
    // each row is drawn Binomial(n·reps, 1/n); expected 2000, sd ≈ 43.6
    for c in counts {
        assert!((c as f64 - 2000.0).abs() < 5.0 * 43.6, "count {c}");
    }
    assert!(draw_bootstrap(RngStream::root(1), 1).is_err());
}

#[test]
fn mvn_draws_recover_moments() {
    let d = synthetic::generate(synthetic::DEFAULT_SEED).unwrap();
    let spec = ModelSpec::new(["age", "baseline"]);
    let moments = sample_moments(&d, &spec).unwrap();
    let kinds = vec![CovariateKind::Continuous; 2];
    let n = 200_000;
    let cols = draw_mvn_covariates(RngStream::new(9, 1, 0, 0), &moments, &kinds, n).unwrap();
    let vals: Vec<Vec<f64>> = cols.iter().map(|c| c.numeric_codes().unwrap()).collect();
    let mean: Vec<f64> = vals
        .iter()
        .map(|v| v.iter().sum::<f64>() / n as f64)
        .collect();
    for j in 0..2 {
        let sd = moments.covariance.get(j, j).sqrt();
        assert!((mean[j] - moments.mean[j]).abs() < 5.0 * sd / (n as f64).sqrt());
        for l in 0..2 {
            let c: f64 = vals[j]
                .iter()
                .zip(&vals[l])
                .map(|(a, b)| (a - mean[j]) * (b - mean[l]))
                .sum::<f64>()
                / (n - 1) as f64;
            let target = moments.covariance.get(j, l);
            let scale = (moments.covariance.get(j, j) * moments.covariance.get(l, l)).sqrt();
            assert!(
                (c - target).abs() < 0.02 * scale,
                "cov[{j}][{l}] {c} vs {target}"
            );
        }
    }
}

fn small_config(seed: u64) -> (covadj_core::dataset::Dataset, SimConfig) {
    let d = synthetic::generate(synthetic::DEFAULT_SEED).unwrap();
    let models = enumerate_models(&d.covariate_names()).unwrap();
    (d, SimConfig::new(Scheme::ALL.to_vec(), models, 40, seed))
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (d, cfg) = small_config(77);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sim::run_simulation(&d, &cfg).unwrap())
    };
    let one = run(1);
    let many = run(6);
    assert_eq!(one.len(), 96);
    for (a, b) in one.iter().zip(&many) {
        assert_eq!(
            a.mean_lambda.map(f64::to_bits),
            b.mean_lambda.map(f64::to_bits)
        );
        assert_eq!(
            a.var_lambda.map(f64::to_bits),
            b.var_lambda.map(f64::to_bits)
        );
        assert_eq!(a.redraw_count, b.redraw_count);
    }
    let other = sim::run_simulation(
        &d,
        &SimConfig {
            seed: 78,
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_ne!(one[40].mean_lambda, other[40].mean_lambda);
}

#[test]
fn empty_model_is_exactly_one() {
    let (d, cfg) = small_config(1);
    let cells = sim::run_simulation(&d, &cfg).unwrap();
    for c in cells.iter().filter(|c| c.k == 0) {
        assert_eq!(c.mean_lambda, Some(1.0));
        assert_eq!(c.var_lambda, Some(0.0));
        assert_eq!(c.theory_mean, Some(1.0));
    }
    for c in &cells {
        assert!(c.supported);
        assert_eq!(c.m_effective + c.dropped, c.m);
        assert!(c.mean_lambda.unwrap() >= 1.0);
    }
}

#[test]
fn single_replicate_has_no_variance() {
    let (d, mut cfg) = small_config(2);
    cfg.replicates = 1;
    let cells = sim::run_simulation(&d, &cfg).unwrap();
    for c in &cells {
        assert!(c.var_lambda.is_none());
        assert!(c.mc_se_mean.is_none());
        assert!(c.mean_lambda.is_some());
    }
    cfg.replicates = 0;
    assert!(matches!(
        sim::run_simulation(&d, &cfg),
        Err(Error::DomainError(_))
    ));
}

#[test]
fn drop_budget_reports_offending_cell() {
    let (d, cfg) = small_config(3);
    let mut cells = sim::simulate_cells(
        &d,
        &SimConfig {
            replicates: 10,
            ..cfg
        },
    )
    .unwrap();
    assert!(check_drop_budget(&cells).is_ok());
    cells[5].dropped = 1;
    cells[5].m_effective -= 1;
    match check_drop_budget(&cells) {
        Err(Error::TooManyRedraws { cell, dropped, m }) => {
            assert_eq!(cell, cells[5].label());
            assert_eq!((dropped, m), (1, 10));
        }
        other => panic!("unexpected {other:?}"),
    }
}

/// Mean and Monte Carlo SE of each cell of the full study.
fn full_study() -> Vec<covadj_core::sim::SimCell> {
    let d = synthetic::generate(synthetic::DEFAULT_SEED).unwrap();
    let models = enumerate_models(&d.covariate_names()).unwrap();
    sim::run_simulation(&d, &SimConfig::new(Scheme::ALL.to_vec(), models, 1000, 1)).unwrap()
}

fn pooled_gap(a: &covadj_core::sim::SimCell, b: &covadj_core::sim::SimCell) -> f64 {
    let se = a.mc_se_mean.unwrap().hypot(b.mc_se_mean.unwrap());
    (a.mean_lambda.unwrap() - b.mean_lambda.unwrap()).abs() / se
}

#[test]
fn schemes_agree_and_only_k_matters() {
    let cells = full_study();
    let fitted: Vec<_> = cells.iter().filter(|c| c.k > 0).collect();
    // same model, different schemes: within 6 pooled SEs
    for a in &fitted {
        for b in fitted
            .iter()
            .filter(|b| b.model == a.model && b.scheme != a.scheme)
        {
            assert!(pooled_gap(a, b) < 6.0, "{} vs {}", a.label(), b.label());
        }
    }
    // same scheme and k, different covariates (with or without the binary
    // one): within 4 pooled SEs
    for a in &fitted {
        for b in fitted
            .iter()
            .filter(|b| b.scheme == a.scheme && b.k == a.k && b.model != a.model)
        {
            assert!(pooled_gap(a, b) < 4.0, "{} vs {}", a.label(), b.label());
        }
    }
}
