//! Monte Carlo study of the observed VIF.
//!
//! Three data-generating schemes are supported:
//!
//! * `Permutation`: covariates stay fixed; each subject's arm is redrawn
//!   as Bernoulli(½) (or, optionally, by shuffling the observed labels).
//! * `MultivariateNormal`: treatment stays fixed; covariates are drawn from
//!   a normal with the sample mean and covariance of the numerically coded
//!   covariates, binary columns being dichotomized at 0 on their ±½ scale.
//! * `Bootstrap`: treatment stays fixed; each subject receives a whole
//!   covariate row sampled with replacement.
//!
//! Each (scheme, model) cell runs `m` replicates. A replicate that yields
//! an empty arm, a rank-deficient design or complete confounding is redrawn
//! from a fresh stream up to `max_redraws` times and otherwise dropped.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::{
    build_design, Arm, Covariate, CovariateKind, Dataset, ModelSpec, MomentSummary,
};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::rng::RngStream;
use crate::scalar::pairwise_sum;
use crate::theory;
use crate::vif;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Scheme {
    Permutation,
    MultivariateNormal,
    Bootstrap,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::Permutation,
        Scheme::MultivariateNormal,
        Scheme::Bootstrap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Permutation => "permutation",
            Scheme::MultivariateNormal => "mvn",
            Scheme::Bootstrap => "bootstrap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "permutation" | "perm" | "a" => Some(Scheme::Permutation),
            "mvn" | "normal" | "multivariate-normal" | "b" => Some(Scheme::MultivariateNormal),
            "bootstrap" | "boot" | "c" => Some(Scheme::Bootstrap),
            _ => None,
        }
    }

    /// Stable index used in stream addresses.
    fn index(self) -> u32 {
        match self {
            Scheme::Permutation => 0,
            Scheme::MultivariateNormal => 1,
            Scheme::Bootstrap => 2,
        }
    }
}

/// How the permutation scheme reassigns treatment.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub enum PermutationMode {
    /// Independent Bernoulli(½) per subject.
    #[default]
    Bernoulli,
    /// Shuffle the observed labels, keeping n1 and n2.
    FixedMargins,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimConfig {
    pub schemes: Vec<Scheme>,
    pub models: Vec<ModelSpec>,
    pub replicates: usize,
    pub seed: u64,
    pub max_redraws: usize,
    pub permutation: PermutationMode,
}

impl SimConfig {
    pub fn new(schemes: Vec<Scheme>, models: Vec<ModelSpec>, replicates: usize, seed: u64) -> Self {
        Self {
            schemes,
            models,
            replicates,
            seed,
            max_redraws: 100,
            permutation: PermutationMode::Bernoulli,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::DomainError(
                "at least one replicate is needed".into(),
            ));
        }
        if self.models.is_empty() || self.schemes.is_empty() {
            return Err(Error::DomainError(
                "simulation needs at least one model and one scheme".into(),
            ));
        }
        if u32::try_from(self.replicates).is_err() || u32::try_from(self.models.len()).is_err() {
            return Err(Error::DomainError("study too large".into()));
        }
        Ok(())
    }
}

/// Aggregated replicates of one (scheme, model) pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimCell {
    pub scheme: Scheme,
    pub model: ModelSpec,
    /// Design columns.
    pub k: usize,
    /// False when the scheme cannot generate the model's covariates.
    pub supported: bool,
    pub m: usize,
    pub m_effective: usize,
    pub dropped: usize,
    pub redraw_count: usize,
    pub mean_lambda: Option<f64>,
    /// Denominator m_effective − 1; `None` with fewer than two replicates.
    pub var_lambda: Option<f64>,
    pub mc_se_mean: Option<f64>,
    pub theory_mean: Option<f64>,
    pub theory_var: Option<f64>,
}

impl SimCell {
    pub fn label(&self) -> String {
        format!("{}/{}", self.scheme.name(), self.model.label())
    }

    /// Drops above 1% of requested replicates.
    pub fn exceeds_drop_budget(&self) -> bool {
        self.dropped * 100 > self.m
    }
}

/// Bernoulli(½) arm per subject.
pub fn draw_permutation(stream: RngStream, n: usize) -> Vec<Arm> {
    let mut rng = stream.rng();
    (0..n)
        .map(|_| {
            if rng.random::<bool>() {
                Arm::Second
            } else {
                Arm::First
            }
        })
        .collect()
}

/// Uniform shuffle of an existing assignment.
pub fn draw_fixed_margin_permutation(stream: RngStream, arms: &[Arm]) -> Vec<Arm> {
    use rand::seq::SliceRandom;
    let mut out = arms.to_vec();
    out.shuffle(&mut stream.rng());
    out
}

/// Source row for each subject position, uniform with replacement.
pub fn draw_bootstrap(stream: RngStream, n: usize) -> Result<Vec<usize>> {
    if n < 2 {
        return Err(Error::DomainError("bootstrap needs N ≥ 2".into()));
    }
    let mut rng = stream.rng();
    Ok((0..n).map(|_| rng.random_range(0..n)).collect())
}

/// Multivariate normal generator for numerically coded covariates.
#[derive(Clone, Debug)]
pub struct MvnSampler {
    names: Vec<String>,
    kinds: Vec<CovariateKind>,
    mean: Vec<f64>,
    /// Lower factor; `None` for an all-zero covariance.
    factor: Option<Matrix<f64>>,
}

impl MvnSampler {
    pub fn new(moments: &MomentSummary, kinds: &[CovariateKind]) -> Result<Self> {
        if kinds.len() != moments.mean.len() {
            return Err(Error::DimensionMismatch(
                "one kind per moment column".into(),
            ));
        }
        if let Some((i, _)) = kinds.iter().enumerate().find(|(_, k)| !k.is_numeric()) {
            return Err(Error::CategoricalUnsupported(moments.names[i].clone()));
        }
        let cov = &moments.covariance;
        let factor = if cov.max_abs() == 0.0 {
            None
        } else {
            Some(factorize_covariance(cov)?)
        };
        Ok(Self {
            names: moments.names.clone(),
            kinds: kinds.to_vec(),
            mean: moments.mean.clone(),
            factor,
        })
    }

    pub fn draw<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<Covariate> {
        let k = self.mean.len();
        let mut cols = vec![Vec::with_capacity(n); k];
        let mut z = vec![0.0; k];
        for _ in 0..n {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(rng);
            }
            for (j, col) in cols.iter_mut().enumerate() {
                let shift = match &self.factor {
                    Some(l) => (0..=j).map(|p| l.get(j, p) * z[p]).sum(),
                    None => 0.0,
                };
                col.push(self.mean[j] + shift);
            }
        }
        self.names
            .iter()
            .zip(&self.kinds)
            .zip(cols)
            .map(|((name, kind), col)| match kind {
                CovariateKind::Continuous => Covariate::continuous(name.clone(), col),
                _ => Covariate::levels(
                    name.clone(),
                    kind.clone(),
                    col.iter().map(|&v| usize::from(v > 0.0)).collect(),
                ),
            })
            .collect()
    }
}

/// Cholesky factor of a covariance matrix: strict first, then with a
/// diagonal jitter of 1e-10 times the largest variance, then allowing
/// exactly singular directions.
fn factorize_covariance(cov: &Matrix<f64>) -> Result<Matrix<f64>> {
    if let Ok(l) = linalg::cholesky(cov) {
        return Ok(l);
    }
    let max_diag = (0..cov.rows()).fold(0.0f64, |m, i| m.max(cov.get(i, i)));
    let jittered = cov.with_diagonal_shift(1e-10 * max_diag);
    if let Ok(l) = linalg::cholesky(&jittered) {
        return Ok(l);
    }
    semidefinite_cholesky(cov, 1e-10 * max_diag)
}

fn semidefinite_cholesky(a: &Matrix<f64>, floor: f64) -> Result<Matrix<f64>> {
    let n = a.rows();
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let d = a.get(j, j) - (0..j).map(|p| l[j * n + p] * l[j * n + p]).sum::<f64>();
        if d < -floor {
            return Err(Error::NotPositiveSemiDefinite);
        }
        if d <= floor {
            continue;
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let s = a.get(i, j) - (0..j).map(|p| l[i * n + p] * l[j * n + p]).sum::<f64>();
            l[i * n + j] = s / djj;
        }
    }
    Matrix::new(n, n, l)
}

/// `n` draws from the normal with the given moments, returned as covariate
/// columns. Binary columns are dichotomized at 0.
pub fn draw_mvn_covariates(
    stream: RngStream,
    moments: &MomentSummary,
    kinds: &[CovariateKind],
    n: usize,
) -> Result<Vec<Covariate>> {
    let sampler = MvnSampler::new(moments, kinds)?;
    Ok(sampler.draw(&mut stream.rng(), n))
}

/// Per-scheme state shared by all replicates.
enum Generator {
    Permutation(PermutationMode),
    Normal(Option<MvnSampler>),
    Bootstrap,
}

impl Generator {
    fn new(scheme: Scheme, d: &Dataset, mode: PermutationMode) -> Result<Self> {
        Ok(match scheme {
            Scheme::Permutation => Generator::Permutation(mode),
            Scheme::Bootstrap => Generator::Bootstrap,
            Scheme::MultivariateNormal => {
                let numeric: Vec<&Covariate> = d
                    .covariates()
                    .iter()
                    .filter(|c| c.kind.is_numeric())
                    .collect();
                if numeric.is_empty() {
                    Generator::Normal(None)
                } else {
                    let spec = ModelSpec::new(numeric.iter().map(|c| c.name.clone()));
                    let moments = crate::dataset::sample_moments(d, &spec)?;
                    let kinds: Vec<CovariateKind> =
                        numeric.iter().map(|c| c.kind.clone()).collect();
                    Generator::Normal(Some(MvnSampler::new(&moments, &kinds)?))
                }
            }
        })
    }

    fn supports(&self, d: &Dataset, model: &ModelSpec) -> bool {
        match self {
            Generator::Normal(_) => model
                .covariate_names
                .iter()
                .all(|n| d.covariate(n).map(|c| c.kind.is_numeric()).unwrap_or(false)),
            _ => true,
        }
    }

    /// One draw; `None` marks a degenerate replicate.
    fn replicate(&self, d: &Dataset, model: &ModelSpec, stream: RngStream) -> Result<Option<f64>> {
        let n = d.n();
        let drawn = match self {
            Generator::Permutation(mode) => {
                let arms = match mode {
                    PermutationMode::Bernoulli => draw_permutation(stream, n),
                    PermutationMode::FixedMargins => {
                        draw_fixed_margin_permutation(stream, d.arms())
                    }
                };
                let (n1, n2) = crate::dataset::arm_counts(&arms);
                if n1 == 0 || n2 == 0 {
                    return Ok(None);
                }
                d.with_arms(arms)?
            }
            Generator::Bootstrap => d.with_covariate_rows(&draw_bootstrap(stream, n)?)?,
            Generator::Normal(sampler) => match sampler {
                Some(s) => d.with_covariates(s.draw(&mut stream.rng(), n))?,
                None => d.with_covariates(Vec::new())?,
            },
        };
        let design = match build_design::<f64>(&drawn, model) {
            Ok(design) => design,
            Err(Error::ConstantColumn(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if !design.is_full_rank() {
            return Ok(None);
        }
        match vif::vif_regression(&design, drawn.arms()) {
            Ok(v) => Ok(Some(v.lambda)),
            Err(Error::CompleteConfounding { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

struct ReplicateOutcome {
    lambda: Option<f64>,
    redraws: usize,
}

/// Runs every (scheme, model) cell without judging drop rates.
pub fn simulate_cells(d: &Dataset, cfg: &SimConfig) -> Result<Vec<SimCell>> {
    cfg.validate()?;
    let mut widths = Vec::with_capacity(cfg.models.len());
    for model in &cfg.models {
        model.validate(d)?;
        build_design::<f64>(d, model)?;
        widths.push(model.width(d)?);
    }
    let generators: Vec<Generator> = cfg
        .schemes
        .iter()
        .map(|&s| Generator::new(s, d, cfg.permutation))
        .collect::<Result<_>>()?;

    let m = cfg.replicates;
    let cells: Vec<(usize, usize)> = (0..cfg.schemes.len())
        .flat_map(|s| (0..cfg.models.len()).map(move |mi| (s, mi)))
        .collect();
    let supported: Vec<bool> = cells
        .iter()
        .map(|&(s, mi)| generators[s].supports(d, &cfg.models[mi]))
        .collect();

    let work: Vec<(usize, usize)> = cells
        .iter()
        .enumerate()
        .filter(|(c, _)| supported[*c])
        .flat_map(|(c, _)| (0..m).map(move |r| (c, r)))
        .collect();
    let outcomes: Vec<ReplicateOutcome> = work
        .par_iter()
        .map(|&(c, r)| {
            let (s, mi) = cells[c];
            let base = RngStream::new(cfg.seed, cfg.schemes[s].index(), mi as u32, r as u32);
            for attempt in 0..=cfg.max_redraws {
                let stream = base.with_attempt(attempt as u32);
                if let Some(lambda) = generators[s].replicate(d, &cfg.models[mi], stream)? {
                    return Ok(ReplicateOutcome {
                        lambda: Some(lambda),
                        redraws: attempt,
                    });
                }
            }
            Ok(ReplicateOutcome {
                lambda: None,
                redraws: cfg.max_redraws,
            })
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(cells.len());
    let mut chunks = outcomes.chunks(m);
    for (c, &(s, mi)) in cells.iter().enumerate() {
        let k = widths[mi];
        let moments = theory::vif_moments::<f64>(d.n(), k);
        let mut cell = SimCell {
            scheme: cfg.schemes[s],
            model: cfg.models[mi].clone(),
            k,
            supported: supported[c],
            m,
            m_effective: 0,
            dropped: 0,
            redraw_count: 0,
            mean_lambda: None,
            var_lambda: None,
            mc_se_mean: None,
            theory_mean: moments.expected_vif,
            theory_var: moments.vif_variance,
        };
        if supported[c] {
            let chunk = chunks.next().expect("one chunk per supported cell");
            let lambdas: Vec<f64> = chunk.iter().filter_map(|o| o.lambda).collect();
            cell.redraw_count = chunk.iter().map(|o| o.redraws).sum();
            cell.m_effective = lambdas.len();
            cell.dropped = m - lambdas.len();
            aggregate(&mut cell, &lambdas);
        }
        out.push(cell);
    }
    Ok(out)
}

fn aggregate(cell: &mut SimCell, lambdas: &[f64]) {
    let me = lambdas.len();
    if me == 0 {
        return;
    }
    let mean = pairwise_sum(lambdas) / me as f64;
    cell.mean_lambda = Some(mean);
    if me >= 2 {
        let dev: Vec<f64> = lambdas.iter().map(|l| (l - mean) * (l - mean)).collect();
        let var = pairwise_sum(&dev) / (me - 1) as f64;
        cell.var_lambda = Some(var);
        cell.mc_se_mean = Some(theory::mc_standard_error(var, me));
    }
}

/// Fails with `TooManyRedraws` for the first cell that dropped more than 1%
/// of its replicates.
pub fn check_drop_budget(cells: &[SimCell]) -> Result<()> {
    match cells.iter().find(|c| c.exceeds_drop_budget()) {
        Some(c) => Err(Error::TooManyRedraws {
            cell: c.label(),
            dropped: c.dropped,
            m: c.m,
        }),
        None => Ok(()),
    }
}

/// Runs the study and enforces the drop budget.
pub fn run_simulation(d: &Dataset, cfg: &SimConfig) -> Result<Vec<SimCell>> {
    let cells = simulate_cells(d, cfg)?;
    check_drop_budget(&cells)?;
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{sample_moments, ColumnValues};

    #[test]
    fn permutation_is_deterministic() {
        let s = RngStream::new(11, 0, 3, 9);
        assert_eq!(draw_permutation(s, 46), draw_permutation(s, 46));
        assert_ne!(
            draw_permutation(s, 46),
            draw_permutation(s.with_attempt(1), 46)
        );
    }

    #[test]
    fn permutation_support_for_two_subjects() {
        let mut seen = std::collections::HashSet::new();
        for r in 0..1000 {
            seen.insert(draw_permutation(RngStream::new(5, 0, 0, r), 2));
        }
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn fixed_margins_keep_arm_sizes() {
        let arms: Vec<Arm> = (0..10)
            .map(|i| if i < 3 { Arm::First } else { Arm::Second })
            .collect();
        let shuffled = draw_fixed_margin_permutation(RngStream::root(3), &arms);
        assert_eq!(crate::dataset::arm_counts(&shuffled), (3, 7));
    }

    #[test]
    fn bootstrap_indices_in_range() {
        let idx = draw_bootstrap(RngStream::root(1), 46).unwrap();
        assert_eq!(idx.len(), 46);
        assert!(idx.iter().all(|&i| i < 46));
        assert_eq!(idx, draw_bootstrap(RngStream::root(1), 46).unwrap());
        assert!(draw_bootstrap(RngStream::root(1), 1).is_err());
    }

    fn two_column_data() -> Dataset {
        let arms: Vec<Arm> = (0..6)
            .map(|i| if i % 2 == 0 { Arm::First } else { Arm::Second })
            .collect();
        Dataset::new(
            ["a".into(), "b".into()],
            arms,
            vec![
                Covariate::continuous("c", vec![3.0, 3.0, 3.0, 3.0, 3.0, 3.0]),
                Covariate::levels(
                    "s",
                    CovariateKind::binary("m", "f").unwrap(),
                    vec![1, 1, 1, 1, 1, 1],
                ),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn zero_covariance_draws_the_mean() {
        let d = two_column_data();
        let moments = sample_moments(&d, &ModelSpec::new(["c", "s"])).unwrap();
        let kinds = [
            CovariateKind::Continuous,
            CovariateKind::binary("m", "f").unwrap(),
        ];
        let cols = draw_mvn_covariates(RngStream::root(2), &moments, &kinds, 50).unwrap();
        assert_eq!(cols[0].values, ColumnValues::Numeric(vec![3.0; 50]));
        assert_eq!(cols[1].values, ColumnValues::Levels(vec![1; 50]));
    }

    #[test]
    fn semidefinite_covariance_is_sampled() {
        // two perfectly correlated columns
        let cov = Matrix::new(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let moments = MomentSummary {
            names: vec!["u".into(), "v".into()],
            mean: vec![0.0, 0.0],
            covariance: cov,
            constant: vec![false, false],
        };
        let kinds = [CovariateKind::Continuous, CovariateKind::Continuous];
        let cols = draw_mvn_covariates(RngStream::root(4), &moments, &kinds, 20).unwrap();
        let (ColumnValues::Numeric(u), ColumnValues::Numeric(v)) =
            (&cols[0].values, &cols[1].values)
        else {
            panic!("continuous columns expected");
        };
        for (a, b) in u.iter().zip(v) {
            assert!((a - b).abs() < 1e-4);
        }

        let bad = MomentSummary {
            covariance: Matrix::new(2, 2, vec![1.0, 2.0, 2.0, 1.0]).unwrap(),
            ..moments
        };
        assert_eq!(
            draw_mvn_covariates(RngStream::root(4), &bad, &kinds, 20).unwrap_err(),
            Error::NotPositiveSemiDefinite
        );
    }

    #[test]
    fn mvn_rejects_categorical() {
        let moments = MomentSummary {
            names: vec!["g".into()],
            mean: vec![0.0],
            covariance: Matrix::new(1, 1, vec![1.0]).unwrap(),
            constant: vec![false],
        };
        let kinds = [CovariateKind::categorical(["a", "b", "c"]).unwrap()];
        assert!(matches!(
            draw_mvn_covariates(RngStream::root(1), &moments, &kinds, 5),
            Err(Error::CategoricalUnsupported(_))
        ));
    }

    #[test]
    fn config_validation() {
        let d = two_column_data();
        let cfg = SimConfig::new(vec![Scheme::Permutation], vec![ModelSpec::empty()], 0, 1);
        assert!(simulate_cells(&d, &cfg).is_err());
        let cfg = SimConfig::new(vec![Scheme::Permutation], vec![], 10, 1);
        assert!(simulate_cells(&d, &cfg).is_err());
        let cfg = SimConfig::new(
            vec![Scheme::Permutation],
            vec![ModelSpec::new(["c"])],
            10,
            1,
        );
        assert_eq!(
            simulate_cells(&d, &cfg).unwrap_err(),
            Error::ConstantColumn("c".into())
        );
    }

    #[test]
    fn drop_budget() {
        let mut cell = SimCell {
            scheme: Scheme::Bootstrap,
            model: ModelSpec::empty(),
            k: 0,
            supported: true,
            m: 1000,
            m_effective: 990,
            dropped: 10,
            redraw_count: 0,
            mean_lambda: None,
            var_lambda: None,
            mc_se_mean: None,
            theory_mean: None,
            theory_var: None,
        };
        assert!(check_drop_budget(std::slice::from_ref(&cell)).is_ok());
        cell.dropped = 11;
        assert!(matches!(
            check_drop_budget(&[cell]),
            Err(Error::TooManyRedraws { dropped: 11, .. })
        ));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(Scheme::parse(s.name()), Some(s));
        }
        assert_eq!(Scheme::parse("nope"), None);
    }
}
