//! Observed variance inflation factor.
//!
//! The inflation of the treatment-contrast variance caused by fitting
//! covariates is `λ = 1/(1 − R²_Z)`, where `R²_Z` comes from regressing the
//! treatment indicator on the covariates. Three routes compute it:
//!
//! * [`vif_regression`]: the regression itself, via pivoted QR.
//! * [`vif_quadratic`]: `1/λ = 1 − (n1·n2/N)·Dᵀ(XᵀX)⁻¹D` with `D` the
//!   between-arm mean difference of the centered design `X`.
//! * [`vif_from_chi_square`]: for one categorical covariate,
//!   `R²_Z = χ²/N` from the arm-by-category contingency table.
//!
//! [`rao_bridge`] links λ to the two-sample Mahalanobis distance and
//! Rao's F, and [`marginal_decomposition`] checks the marginalisation
//! identity for a single covariate.

use serde::Serialize;

use crate::dataset::{arm_counts, Arm, ColumnValues, CovariateKind, Dataset, DesignMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Real;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Route {
    Regression,
    QuadraticForm,
    ChiSquare,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VifResult<T> {
    pub lambda: T,
    pub r_squared_z: T,
    pub n1: usize,
    pub n2: usize,
    pub k: usize,
    pub route: Route,
}

impl<T: Real> VifResult<T> {
    fn from_r_squared(r2: T, n1: usize, n2: usize, k: usize, route: Route) -> Result<Self> {
        let slack = T::one() - r2;
        if slack <= T::tolerance() {
            return Err(Error::CompleteConfounding {
                r_squared: r2.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            lambda: T::one() / slack,
            r_squared_z: r2,
            n1,
            n2,
            k,
            route,
        })
    }
}

fn check_arms<T>(design: &DesignMatrix<T>, arms: &[Arm]) -> Result<(usize, usize)>
where
    T: Real,
{
    if arms.len() != design.matrix.rows() {
        return Err(Error::DimensionMismatch(format!(
            "{} assignments for {} subjects",
            arms.len(),
            design.matrix.rows()
        )));
    }
    let (n1, n2) = arm_counts(arms);
    if n1 == 0 || n2 == 0 {
        return Err(Error::NotTwoArms(1));
    }
    Ok((n1, n2))
}

/// λ from the coefficient of determination of the treatment indicator
/// regressed (with intercept) on the design.
pub fn vif_regression<T: Real>(design: &DesignMatrix<T>, arms: &[Arm]) -> Result<VifResult<T>> {
    let (n1, n2) = check_arms(design, arms)?;
    if design.k == 0 {
        return VifResult::from_r_squared(T::zero(), n1, n2, 0, Route::Regression);
    }
    let z: Vec<T> = arms.iter().map(|a| T::lit(a.indicator())).collect();
    let fit = linalg::least_squares(&design.matrix, &z, true)?;
    VifResult::from_r_squared(fit.r_squared, n1, n2, design.k, Route::Regression)
}

/// Between-arm mean difference (second minus first) of each column.
pub fn mean_difference<T: Real>(x: &Matrix<T>, arms: &[Arm]) -> Vec<T> {
    let (n1, n2) = arm_counts(arms);
    let mut d = vec![T::zero(); x.cols()];
    for (i, arm) in arms.iter().enumerate() {
        let (w, sign) = match arm {
            Arm::First => (T::from_count(n1), -T::one()),
            Arm::Second => (T::from_count(n2), T::one()),
        };
        for (j, dj) in d.iter_mut().enumerate() {
            *dj = *dj + sign * x.get(i, j) / w;
        }
    }
    d
}

/// λ from the quadratic form in the between-arm mean differences.
pub fn vif_quadratic<T: Real>(design: &DesignMatrix<T>, arms: &[Arm]) -> Result<VifResult<T>> {
    let (n1, n2) = check_arms(design, arms)?;
    if design.k == 0 || !design.is_full_rank() {
        return Err(Error::RankDeficient {
            rank: design.rank,
            k: design.k,
        });
    }
    let d = mean_difference(&design.matrix, arms);
    let gram = design.matrix.gram();
    let solved = linalg::solve_spd(&gram, &d).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::RankDeficient {
            rank: design.rank,
            k: design.k,
        },
        other => other,
    })?;
    let quad = d
        .iter()
        .zip(&solved)
        .fold(T::zero(), |s, (&a, &b)| s + a * b);
    let weight = T::from_count(n1) * T::from_count(n2) / T::from_count(n1 + n2);
    VifResult::from_r_squared(weight * quad, n1, n2, design.k, Route::QuadraticForm)
}

/// Arm-by-category counts for one binary or categorical covariate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContingencyTable {
    pub labels: Vec<String>,
    /// Row 0 is the first arm, row 1 the second.
    pub counts: [Vec<u64>; 2],
    /// Declared levels with no subjects, removed from the table.
    pub dropped_levels: Vec<String>,
}

impl ContingencyTable {
    /// Builds a table from counts; every row and column total must be
    /// positive.
    pub fn new(labels: Vec<String>, first: Vec<u64>, second: Vec<u64>) -> Result<Self> {
        if first.len() != second.len() || labels.len() != first.len() {
            return Err(Error::DimensionMismatch(
                "contingency rows differ in length".into(),
            ));
        }
        let table = Self {
            labels,
            counts: [first, second],
            dropped_levels: Vec::new(),
        };
        if table.counts[0].is_empty()
            || table.row_totals().contains(&0)
            || table.column_totals().contains(&0)
        {
            return Err(Error::EmptyMargin);
        }
        Ok(table)
    }

    /// Unlabelled table, columns named by position.
    pub fn from_counts(first: Vec<u64>, second: Vec<u64>) -> Result<Self> {
        let labels = (1..=first.len()).map(|j| j.to_string()).collect();
        Self::new(labels, first, second)
    }

    pub fn categories(&self) -> usize {
        self.counts[0].len()
    }

    pub fn row_totals(&self) -> [u64; 2] {
        [self.counts[0].iter().sum(), self.counts[1].iter().sum()]
    }

    pub fn column_totals(&self) -> Vec<u64> {
        self.counts[0]
            .iter()
            .zip(&self.counts[1])
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.row_totals().iter().sum()
    }

    /// Subject-level expansion: the reference-coded dummy design and the
    /// matching arm vector, in column-major cell order.
    pub fn expand<T: Real>(&self) -> Result<(DesignMatrix<T>, Vec<Arm>)> {
        let mut arms = Vec::new();
        let mut level = Vec::new();
        for (r, arm) in [Arm::First, Arm::Second].into_iter().enumerate() {
            for (j, &c) in self.counts[r].iter().enumerate() {
                for _ in 0..c {
                    arms.push(arm);
                    level.push(j);
                }
            }
        }
        let n = arms.len();
        let columns: Vec<Vec<T>> = (1..self.categories())
            .map(|j| {
                level
                    .iter()
                    .map(|&l| if l == j { T::one() } else { T::zero() })
                    .collect()
            })
            .collect();
        let names = self.labels.iter().skip(1).cloned().collect();
        Ok((DesignMatrix::from_columns(names, columns, n)?, arms))
    }
}

/// Cross-classifies a binary or categorical covariate by arm.
pub fn contingency(d: &Dataset, covariate: &str) -> Result<ContingencyTable> {
    let cov = d.covariate(covariate)?;
    let (labels, values) = match (&cov.kind, &cov.values) {
        (CovariateKind::Binary(l), ColumnValues::Levels(v)) => (l.to_vec(), v),
        (CovariateKind::Categorical(l), ColumnValues::Levels(v)) => (l.clone(), v),
        _ => return Err(Error::NotCategorical(covariate.to_string())),
    };
    let mut counts = [vec![0u64; labels.len()], vec![0u64; labels.len()]];
    for (&arm, &level) in d.arms().iter().zip(values) {
        counts[usize::from(arm == Arm::Second)][level] += 1;
    }
    let mut kept = ContingencyTable {
        labels: Vec::new(),
        counts: [Vec::new(), Vec::new()],
        dropped_levels: Vec::new(),
    };
    for (j, label) in labels.into_iter().enumerate() {
        if counts[0][j] + counts[1][j] == 0 {
            kept.dropped_levels.push(label);
        } else {
            kept.labels.push(label);
            kept.counts[0].push(counts[0][j]);
            kept.counts[1].push(counts[1][j]);
        }
    }
    let dropped = std::mem::take(&mut kept.dropped_levels);
    let mut table =
        ContingencyTable::new(kept.labels, kept.counts[0].clone(), kept.counts[1].clone())?;
    table.dropped_levels = dropped;
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiSquareResult<T> {
    pub chi2: T,
    /// Contribution of each category.
    pub per_category: Vec<T>,
    pub r_squared: T,
}

/// Pearson chi-square with per-category contributions
/// `(f1j·n2 − f2j·n1)² / (n1·n2·Fj)`.
pub fn chi_square<T: Real>(t: &ContingencyTable) -> Result<ChiSquareResult<T>> {
    let [n1, n2] = t.row_totals();
    let totals = t.column_totals();
    if n1 == 0 || n2 == 0 || totals.contains(&0) {
        return Err(Error::EmptyMargin);
    }
    let n = T::from_count((n1 + n2) as usize);
    let (a, b) = (T::from_count(n1 as usize), T::from_count(n2 as usize));
    let per_category: Vec<T> = (0..t.categories())
        .map(|j| {
            let f1 = T::from_count(t.counts[0][j] as usize);
            let f2 = T::from_count(t.counts[1][j] as usize);
            let diff = f1 * b - f2 * a;
            diff * diff / (a * b * T::from_count(totals[j] as usize))
        })
        .collect();
    let chi2 = per_category.iter().fold(T::zero(), |s, &c| s + c);
    Ok(ChiSquareResult {
        chi2,
        r_squared: chi2 / n,
        per_category,
    })
}

/// λ from the chi-square statistic of association.
pub fn vif_from_chi_square<T: Real>(t: &ContingencyTable) -> Result<VifResult<T>> {
    let chi = chi_square::<T>(t)?;
    let [n1, n2] = t.row_totals();
    VifResult::from_r_squared(
        chi.r_squared,
        n1 as usize,
        n2 as usize,
        t.categories() - 1,
        Route::ChiSquare,
    )
}

/// Two-sample multivariate distance and Rao's F.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RaoBridge<T> {
    /// Squared Mahalanobis distance between arm means, pooled covariance.
    pub d2_mv: T,
    pub f_rao: T,
    /// `1 + k·F/(N−k−1)`.
    pub lambda: T,
}

/// Squared Mahalanobis distance between the arm means using the pooled
/// within-arm covariance (denominator N−2).
pub fn pooled_mahalanobis<T: Real>(design: &DesignMatrix<T>, arms: &[Arm]) -> Result<T> {
    let (n1, n2) = check_arms(design, arms)?;
    let n = n1 + n2;
    if n < 3 {
        return Err(Error::DomainError("pooled covariance needs N > 2".into()));
    }
    if design.k == 0 || !design.is_full_rank() {
        return Err(Error::RankDeficient {
            rank: design.rank,
            k: design.k,
        });
    }
    let x = &design.matrix;
    let k = design.k;
    let mut means = [vec![T::zero(); k], vec![T::zero(); k]];
    for (i, &arm) in arms.iter().enumerate() {
        let (r, w) = if arm == Arm::First { (0, n1) } else { (1, n2) };
        for (j, m) in means[r].iter_mut().enumerate() {
            *m = *m + x.get(i, j) / T::from_count(w);
        }
    }
    let mut within = vec![T::zero(); k * k];
    for (i, &arm) in arms.iter().enumerate() {
        let mu = &means[usize::from(arm == Arm::Second)];
        for a in 0..k {
            let da = x.get(i, a) - mu[a];
            for b in 0..k {
                within[a * k + b] = within[a * k + b] + da * (x.get(i, b) - mu[b]);
            }
        }
    }
    let scale = T::from_count(n - 2);
    let pooled = Matrix::new(k, k, within.into_iter().map(|v| v / scale).collect())?;
    let diff: Vec<T> = means[1]
        .iter()
        .zip(&means[0])
        .map(|(&b, &a)| b - a)
        .collect();
    let solved = linalg::solve_spd(&pooled, &diff).map_err(|e| match e {
        // XᵀX is full rank, so a singular within-arm matrix means the arms
        // separate the covariates completely.
        Error::NotPositiveDefinite { .. } => Error::CompleteConfounding { r_squared: 1.0 },
        other => other,
    })?;
    Ok(diff
        .iter()
        .zip(&solved)
        .fold(T::zero(), |s, (&a, &b)| s + a * b))
}

/// `R²_Z` implied by a squared Mahalanobis distance.
pub fn r_squared_from_distance<T: Real>(d2_mv: T, n1: usize, n2: usize) -> T {
    let n = n1 + n2;
    let w = T::from_count(n1) * T::from_count(n2) * d2_mv;
    w / (T::from_count(n) * T::from_count(n - 2) + w)
}

/// Squared Mahalanobis distance implied by `R²_Z`.
pub fn distance_from_r_squared<T: Real>(r_squared: T, n1: usize, n2: usize) -> T {
    let n = n1 + n2;
    r_squared * T::from_count(n) * T::from_count(n - 2)
        / (T::from_count(n1) * T::from_count(n2) * (T::one() - r_squared))
}

/// Mahalanobis distance, Rao's F and the λ they imply.
pub fn rao_bridge<T: Real>(design: &DesignMatrix<T>, arms: &[Arm]) -> Result<RaoBridge<T>> {
    let (n1, n2) = check_arms(design, arms)?;
    let (n, k) = (n1 + n2, design.k);
    if n <= k + 1 {
        return Err(Error::DomainError(format!(
            "Rao's F needs N > k + 1 (N = {n}, k = {k})"
        )));
    }
    let d2_mv = pooled_mahalanobis(design, arms)?;
    let omega = T::from_count(n - k - 1);
    let kk = T::from_count(k);
    let f_rao = omega / (T::from_count(n - 2) * kk) * T::from_count(n1) * T::from_count(n2)
        / T::from_count(n)
        * d2_mv;
    Ok(RaoBridge {
        d2_mv,
        f_rao,
        lambda: T::one() + kk * f_rao / omega,
    })
}

/// Slopes entering the marginalisation identity
/// `β_YZ = β_YZ|X + β_YX|Z · β_XZ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalSlopes<T> {
    pub beta_yz: T,
    pub beta_yz_given_x: T,
    pub beta_yx_given_z: T,
    pub beta_xz: T,
}

impl<T: Real> MarginalSlopes<T> {
    /// `β_YZ − (β_YZ|X + β_YX|Z·β_XZ)`.
    pub fn identity_residual(&self) -> T {
        self.beta_yz - (self.beta_yz_given_x + self.beta_yx_given_z * self.beta_xz)
    }
}

pub fn marginal_decomposition<T: Real>(y: &[T], z: &[T], x: &[T]) -> Result<MarginalSlopes<T>> {
    let n = y.len();
    if n < 3 || z.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch(
            "need three equally long vectors of length ≥ 3".into(),
        ));
    }
    let mut levels: Vec<T> = Vec::new();
    for &v in z {
        if !levels.contains(&v) {
            levels.push(v);
        }
    }
    if levels.len() != 2 {
        return Err(Error::DomainError(format!(
            "treatment indicator takes {} values",
            levels.len()
        )));
    }
    let zm = Matrix::from_columns(n, &[z.to_vec()])?;
    let zx = Matrix::from_columns(n, &[z.to_vec(), x.to_vec()])?;
    let simple = linalg::least_squares(&zm, y, true)?;
    let joint = linalg::least_squares(&zx, y, true)?;
    if joint.rank < 2 {
        return Err(Error::DegenerateResponse);
    }
    let x_on_z = linalg::least_squares(&zm, x, true)?;
    Ok(MarginalSlopes {
        beta_yz: simple.coefficients[0],
        beta_yz_given_x: joint.coefficients[0],
        beta_yx_given_z: joint.coefficients[1],
        beta_xz: x_on_z.coefficients[0],
    })
}
