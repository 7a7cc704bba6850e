//! Subject-level trial data.
//!
//! A [`Dataset`] holds one treatment label per subject, typed covariate
//! columns and an optional outcome. Designs are built by centering every
//! column about its overall mean: continuous covariates enter as they are,
//! binary covariates are coded −½/+½, and a categorical covariate with L
//! levels expands into L−1 dummies against its first declared level.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};
use crate::scalar::Real;

/// How a covariate column is typed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum CovariateKind {
    Continuous,
    /// Two labels; the first is coded −½ and the second +½.
    Binary([String; 2]),
    /// Ordered labels; the first is the reference level.
    Categorical(Vec<String>),
}

impl CovariateKind {
    pub fn binary(a: impl Into<String>, b: impl Into<String>) -> Result<Self> {
        let kind = CovariateKind::Binary([a.into(), b.into()]);
        kind.validate()?;
        Ok(kind)
    }

    pub fn categorical<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let kind = CovariateKind::Categorical(labels.into_iter().map(Into::into).collect());
        kind.validate()?;
        Ok(kind)
    }

    pub fn labels(&self) -> Option<&[String]> {
        match self {
            CovariateKind::Continuous => None,
            CovariateKind::Binary(l) => Some(l),
            CovariateKind::Categorical(l) => Some(l),
        }
    }

    /// True for continuous and binary covariates, which have a single
    /// numeric code per subject.
    pub fn is_numeric(&self) -> bool {
        !matches!(self, CovariateKind::Categorical(l) if l.len() > 2)
    }

    /// Number of design columns this covariate expands into.
    pub fn design_width(&self) -> usize {
        match self {
            CovariateKind::Categorical(l) => l.len() - 1,
            _ => 1,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Some(labels) = self.labels() {
            let distinct: BTreeSet<&String> = labels.iter().collect();
            if labels.len() < 2
                || distinct.len() != labels.len()
                || labels.iter().any(|l| l.is_empty())
            {
                return Err(Error::SchemaMismatch(format!(
                    "level labels must be at least two distinct non-empty strings, got {labels:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-subject values of one covariate.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnValues {
    Numeric(Vec<f64>),
    /// Index into the kind's level labels.
    Levels(Vec<usize>),
}

impl ColumnValues {
    pub fn len(&self) -> usize {
        match self {
            ColumnValues::Numeric(v) => v.len(),
            ColumnValues::Levels(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Self {
        match self {
            ColumnValues::Numeric(v) => ColumnValues::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnValues::Levels(v) => ColumnValues::Levels(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Covariate {
    pub name: String,
    pub kind: CovariateKind,
    pub values: ColumnValues,
}

impl Covariate {
    pub fn continuous(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind: CovariateKind::Continuous,
            values: ColumnValues::Numeric(values),
        }
    }

    pub fn levels(name: impl Into<String>, kind: CovariateKind, values: Vec<usize>) -> Self {
        Self {
            name: name.into(),
            kind,
            values: ColumnValues::Levels(values),
        }
    }

    /// Single numeric code per subject: the raw value for continuous
    /// covariates, −½/+½ for binary ones.
    pub fn numeric_codes(&self) -> Result<Vec<f64>> {
        match (&self.kind, &self.values) {
            (CovariateKind::Continuous, ColumnValues::Numeric(v)) => Ok(v.clone()),
            (kind, ColumnValues::Levels(v)) if kind.is_numeric() => {
                Ok(v.iter().map(|&l| if l == 0 { -0.5 } else { 0.5 }).collect())
            }
            _ => Err(Error::CategoricalUnsupported(self.name.clone())),
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        self.kind.validate()?;
        if self.values.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "covariate `{}` has {} values for {n} subjects",
                self.name,
                self.values.len()
            )));
        }
        match (&self.kind, &self.values) {
            (CovariateKind::Continuous, ColumnValues::Numeric(v)) => {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("covariate"));
                }
            }
            (kind, ColumnValues::Levels(v)) if kind.labels().is_some() => {
                let levels = kind.labels().map_or(0, <[String]>::len);
                if v.iter().any(|&l| l >= levels) {
                    return Err(Error::SchemaMismatch(format!(
                        "level out of range in `{}`",
                        self.name
                    )));
                }
            }
            _ => {
                return Err(Error::SchemaMismatch(format!(
                    "values of `{}` do not match its kind",
                    self.name
                )))
            }
        }
        Ok(())
    }
}

/// Treatment arm of a subject.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Arm {
    First,
    Second,
}

impl Arm {
    /// 0 for the first arm, 1 for the second.
    pub fn indicator(self) -> f64 {
        match self {
            Arm::First => 0.0,
            Arm::Second => 1.0,
        }
    }
}

/// Arm sizes `(n1, n2)`.
pub fn arm_counts(arms: &[Arm]) -> (usize, usize) {
    let n2 = arms.iter().filter(|&&a| a == Arm::Second).count();
    (arms.len() - n2, n2)
}

/// Subject-level data for a two-arm trial.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    treatment_labels: [String; 2],
    arms: Vec<Arm>,
    covariates: Vec<Covariate>,
    outcome: Option<(String, Vec<f64>)>,
}

impl Dataset {
    pub fn new(
        treatment_labels: [String; 2],
        arms: Vec<Arm>,
        covariates: Vec<Covariate>,
        outcome: Option<(String, Vec<f64>)>,
    ) -> Result<Self> {
        let n = arms.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let (n1, n2) = arm_counts(&arms);
        if n1 == 0 || n2 == 0 {
            return Err(Error::NotTwoArms(1));
        }
        let mut names = BTreeSet::new();
        for c in &covariates {
            if !names.insert(c.name.as_str()) {
                return Err(Error::SchemaMismatch(format!(
                    "duplicate covariate `{}`",
                    c.name
                )));
            }
            c.validate(n)?;
        }
        if let Some((_, y)) = &outcome {
            if y.len() != n {
                return Err(Error::DimensionMismatch("outcome length".into()));
            }
        }
        Ok(Self {
            treatment_labels,
            arms,
            covariates,
            outcome,
        })
    }

    pub fn n(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[Arm] {
        &self.arms
    }

    pub fn arm_counts(&self) -> (usize, usize) {
        arm_counts(&self.arms)
    }

    pub fn treatment_labels(&self) -> &[String; 2] {
        &self.treatment_labels
    }

    /// 0/1 treatment indicator.
    pub fn treatment_indicator(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.indicator()).collect()
    }

    pub fn covariates(&self) -> &[Covariate] {
        &self.covariates
    }

    pub fn covariate_names(&self) -> Vec<String> {
        self.covariates.iter().map(|c| c.name.clone()).collect()
    }

    pub fn covariate(&self, name: &str) -> Result<&Covariate> {
        self.covariates
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| Error::InvalidModel(format!("no covariate named `{name}`")))
    }

    pub fn outcome(&self) -> Option<&[f64]> {
        self.outcome.as_ref().map(|(_, y)| y.as_slice())
    }

    pub fn outcome_name(&self) -> Option<&str> {
        self.outcome.as_ref().map(|(n, _)| n.as_str())
    }

    /// Same covariates with a different treatment assignment.
    pub fn with_arms(&self, arms: Vec<Arm>) -> Result<Self> {
        if arms.len() != self.n() {
            return Err(Error::DimensionMismatch("assignment length".into()));
        }
        Self::new(
            self.treatment_labels.clone(),
            arms,
            self.covariates.clone(),
            self.outcome.clone(),
        )
    }

    /// Same treatment assignment with replacement covariate columns.
    pub fn with_covariates(&self, covariates: Vec<Covariate>) -> Result<Self> {
        Self::new(
            self.treatment_labels.clone(),
            self.arms.clone(),
            covariates,
            None,
        )
    }

    /// Subject `i` receives the covariate row `rows[i]`; treatment stays put.
    pub fn with_covariate_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.len() != self.n() || rows.iter().any(|&r| r >= self.n()) {
            return Err(Error::DimensionMismatch("row selection".into()));
        }
        let covariates = self
            .covariates
            .iter()
            .map(|c| Covariate {
                name: c.name.clone(),
                kind: c.kind.clone(),
                values: c.values.select(rows),
            })
            .collect();
        self.with_covariates(covariates)
    }
}

/// An ordered subset of covariate names.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ModelSpec {
    pub covariate_names: Vec<String>,
}

impl ModelSpec {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self {
            covariate_names: names.into_iter().map(Into::into).collect(),
        }
    }

    pub fn empty() -> Self {
        Self {
            covariate_names: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.covariate_names.is_empty()
    }

    /// `+`-joined names, or `(none)` for the empty model.
    pub fn label(&self) -> String {
        if self.is_empty() {
            "(none)".to_string()
        } else {
            self.covariate_names.join("+")
        }
    }

    pub fn validate(&self, d: &Dataset) -> Result<()> {
        let mut seen = BTreeSet::new();
        for name in &self.covariate_names {
            if !seen.insert(name) {
                return Err(Error::InvalidModel(format!("`{name}` listed twice")));
            }
            d.covariate(name)?;
        }
        Ok(())
    }

    /// Number of design columns the model expands into.
    pub fn width(&self, d: &Dataset) -> Result<usize> {
        self.covariate_names
            .iter()
            .map(|n| Ok(d.covariate(n)?.kind.design_width()))
            .sum()
    }
}

/// Centered covariate matrix for one model.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix<T> {
    pub matrix: Matrix<T>,
    pub column_names: Vec<String>,
    pub k: usize,
    pub rank: usize,
}

impl<T: Real> DesignMatrix<T> {
    pub fn is_full_rank(&self) -> bool {
        self.rank == self.k
    }

    /// Wraps an arbitrary matrix, centering its columns.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<T>>, n: usize) -> Result<Self> {
        let centered: Vec<Vec<T>> = columns.into_iter().map(center).collect();
        let matrix = Matrix::from_columns(n, &centered)?;
        let rank = linalg::rank(&matrix);
        Ok(Self {
            k: matrix.cols(),
            matrix,
            column_names: names,
            rank,
        })
    }
}

fn center<T: Real>(col: Vec<T>) -> Vec<T> {
    let mean = col.iter().copied().sum::<T>() / T::from_count(col.len());
    col.into_iter().map(|v| v - mean).collect()
}

/// Expands the model's covariates into a centered design matrix.
pub fn build_design<T: Real>(d: &Dataset, m: &ModelSpec) -> Result<DesignMatrix<T>> {
    m.validate(d)?;
    let n = d.n();
    let mut names = Vec::new();
    let mut columns: Vec<Vec<T>> = Vec::new();
    for name in &m.covariate_names {
        let cov = d.covariate(name)?;
        let constant = match &cov.values {
            ColumnValues::Numeric(v) => v.iter().all(|&x| x == v[0]),
            ColumnValues::Levels(v) => v.iter().all(|&x| x == v[0]),
        };
        if constant {
            return Err(Error::ConstantColumn(name.clone()));
        }
        match (&cov.kind, &cov.values) {
            (CovariateKind::Categorical(labels), ColumnValues::Levels(v)) if labels.len() > 2 => {
                for (level, label) in labels.iter().enumerate().skip(1) {
                    names.push(format!("{name}[{label}]"));
                    columns.push(
                        v.iter()
                            .map(|&l| if l == level { T::one() } else { T::zero() })
                            .collect(),
                    );
                }
            }
            _ => {
                names.push(name.clone());
                columns.push(cov.numeric_codes()?.into_iter().map(T::lit).collect());
            }
        }
    }
    DesignMatrix::from_columns(names, columns, n)
}

/// Every subset of `names`, smallest first and in positional order within
/// a size.
pub fn enumerate_models(names: &[String]) -> Result<Vec<ModelSpec>> {
    const LIMIT: usize = 20;
    let k = names.len();
    if k > LIMIT {
        return Err(Error::TooManyCovariates(k));
    }
    let mut out = Vec::with_capacity(1 << k);
    for size in 0..=k {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(ModelSpec::new(idx.iter().map(|&i| names[i].clone())));
            // advance to the next combination
            let mut i = size;
            while i > 0 && idx[i - 1] == k - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(out)
}

/// Sample means and covariance of numerically coded covariates.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSummary {
    pub names: Vec<String>,
    pub mean: Vec<f64>,
    /// Denominator N−1.
    pub covariance: Matrix<f64>,
    /// Columns with zero sample variance.
    pub constant: Vec<bool>,
}

pub fn sample_moments(d: &Dataset, m: &ModelSpec) -> Result<MomentSummary> {
    m.validate(d)?;
    if m.is_empty() {
        return Err(Error::InvalidModel("moments of an empty model".into()));
    }
    let cols: Vec<Vec<f64>> = m
        .covariate_names
        .iter()
        .map(|n| d.covariate(n)?.numeric_codes())
        .collect::<Result<_>>()?;
    let n = d.n();
    if n < 2 {
        return Err(Error::EmptyDataset);
    }
    let mean: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();
    let k = cols.len();
    let mut cov = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let s: f64 = cols[i]
                .iter()
                .zip(&cols[j])
                .map(|(a, b)| (a - mean[i]) * (b - mean[j]))
                .sum();
            cov[i * k + j] = s / (n - 1) as f64;
            cov[j * k + i] = cov[i * k + j];
        }
    }
    let constant = (0..k).map(|i| cov[i * k + i] == 0.0).collect();
    Ok(MomentSummary {
        names: m.covariate_names.clone(),
        mean,
        covariance: Matrix::new(k, k, cov)?,
        constant,
    })
}

/// One row of a correlation report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub covariate: String,
    pub outcome_ordinary: f64,
    pub outcome_partial: f64,
    pub treatment_ordinary: f64,
    pub treatment_partial: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    pub rows: Vec<CorrelationRow>,
}

impl fmt::Display for CorrelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<16}{:>12}{:>12}{:>12}{:>12}",
            "covariate", "Y ord", "Y partial", "Z ord", "Z partial"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<16}{:>12.4}{:>12.4}{:>12.4}{:>12.4}",
                r.covariate,
                r.outcome_ordinary,
                r.outcome_partial,
                r.treatment_ordinary,
                r.treatment_partial
            )?;
        }
        Ok(())
    }
}

/// Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::DegenerateResponse);
    }
    Ok(sab / (saa * sbb).sqrt())
}

fn residualize(target: &[f64], others: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = target.len();
    let x = Matrix::from_columns(n, others)?;
    let fit = linalg::least_squares(&x, target, true)?;
    Ok(fit.residuals(target).collect())
}

/// Ordinary and partial correlations of each covariate with the outcome
/// and with the treatment indicator. The partial correlation removes the
/// remaining covariates from both sides by least squares.
pub fn correlation_report(d: &Dataset) -> Result<CorrelationReport> {
    let y = d.outcome().ok_or_else(|| {
        Error::SchemaMismatch("correlation report needs an outcome column".into())
    })?;
    let z = d.treatment_indicator();
    let codes: Vec<Vec<f64>> = d
        .covariates()
        .iter()
        .map(Covariate::numeric_codes)
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(codes.len());
    for (i, cov) in d.covariates().iter().enumerate() {
        let others: Vec<Vec<f64>> = codes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, c)| c.clone())
            .collect();
        let x_res = residualize(&codes[i], &others)?;
        let y_res = residualize(y, &others)?;
        let z_res = residualize(&z, &others)?;
        rows.push(CorrelationRow {
            covariate: cov.name.clone(),
            outcome_ordinary: pearson(&codes[i], y)?,
            outcome_partial: pearson(&x_res, &y_res)?,
            treatment_ordinary: pearson(&codes[i], &z)?,
            treatment_partial: pearson(&x_res, &z_res)?,
        });
    }
    Ok(CorrelationReport { rows })
}

/// Declared schema for one covariate column.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: CovariateKind,
}

impl ColumnSchema {
    pub fn new(name: impl Into<String>, kind: CovariateKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// A row skipped at load because a field was missing.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DroppedRow {
    /// 1-based data row (header excluded).
    pub row: usize,
    pub column: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LoadReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped: Vec<DroppedRow>,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows_read: {}", self.rows_read)?;
        writeln!(f, "rows_kept: {}", self.rows_kept)?;
        writeln!(f, "rows_dropped: {}", self.dropped.len())?;
        for d in &self.dropped {
            writeln!(f, "  - row: {} missing: {}", d.row, d.column)?;
        }
        Ok(())
    }
}

fn is_missing(field: &str) -> bool {
    matches!(field.trim(), "" | "NA" | "na" | "NaN" | ".")
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::SchemaMismatch(format!("no column `{name}` in header")))
}

/// Distinct non-missing values of a column, sorted.
pub fn distinct_values<R: Read>(input: R, column: &str) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let idx = header_index(rdr.headers()?, column)?;
    let mut seen = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let v = rec.get(idx).unwrap_or("").trim();
        if !is_missing(v) {
            seen.insert(v.to_string());
        }
    }
    Ok(seen.into_iter().collect())
}

/// Reads a comma-separated table with a header row.
///
/// Columns not named in the schema are ignored. Any row with a missing
/// field in a used column is dropped and listed in the report. The two
/// treatment labels are sorted lexicographically; the first is arm 1.
pub fn load_csv<R: Read>(
    input: R,
    schema: &[ColumnSchema],
    treatment_column: &str,
    outcome_column: Option<&str>,
) -> Result<(Dataset, LoadReport)> {
    for s in schema {
        s.kind.validate()?;
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let t_idx = header_index(&headers, treatment_column)?;
    let y_idx = outcome_column
        .map(|c| header_index(&headers, c))
        .transpose()?;
    let c_idx: Vec<usize> = schema
        .iter()
        .map(|s| header_index(&headers, &s.name))
        .collect::<Result<_>>()?;

    let mut labels: Vec<String> = Vec::new();
    let mut arm_idx: Vec<usize> = Vec::new();
    let mut outcome = Vec::new();
    let mut num: Vec<Vec<f64>> = vec![Vec::new(); schema.len()];
    let mut lev: Vec<Vec<usize>> = vec![Vec::new(); schema.len()];
    let mut dropped = Vec::new();
    let mut rows_read = 0;

    for (r, rec) in rdr.records().enumerate() {
        let rec = rec?;
        rows_read += 1;
        let row = r + 1;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let mut used = vec![(treatment_column, t_idx)];
        if let (Some(name), Some(i)) = (outcome_column, y_idx) {
            used.push((name, i));
        }
        used.extend(
            schema
                .iter()
                .map(|s| s.name.as_str())
                .zip(c_idx.iter().copied()),
        );
        if let Some((name, _)) = used.iter().find(|(_, i)| is_missing(field(*i))) {
            dropped.push(DroppedRow {
                row,
                column: name.to_string(),
            });
            continue;
        }

        let t = field(t_idx).to_string();
        let a = match labels.iter().position(|l| *l == t) {
            Some(a) => a,
            None => {
                labels.push(t);
                labels.len() - 1
            }
        };
        arm_idx.push(a);
        if let Some(i) = y_idx {
            outcome.push(parse_number(
                field(i),
                outcome_column.unwrap_or_default(),
                row,
            )?);
        }
        for (s, (&i, (nv, lv))) in schema
            .iter()
            .zip(c_idx.iter().zip(num.iter_mut().zip(lev.iter_mut())))
        {
            let raw = field(i);
            match &s.kind {
                CovariateKind::Continuous => nv.push(parse_number(raw, &s.name, row)?),
                kind => {
                    let level = kind
                        .labels()
                        .and_then(|l| l.iter().position(|x| x == raw))
                        .ok_or_else(|| {
                            Error::SchemaMismatch(format!(
                                "row {row}: `{raw}` is not a declared level of `{}`",
                                s.name
                            ))
                        })?;
                    lv.push(level);
                }
            }
        }
    }

    if arm_idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != 2 {
        return Err(Error::NotTwoArms(labels.len()));
    }
    let second_first = labels[1] < labels[0];
    if second_first {
        labels.swap(0, 1);
    }
    let arms = arm_idx
        .iter()
        .map(|&a| {
            if (a == 0) != second_first {
                Arm::First
            } else {
                Arm::Second
            }
        })
        .collect();
    let covariates = schema
        .iter()
        .zip(num.into_iter().zip(lev))
        .map(|(s, (nv, lv))| match s.kind {
            CovariateKind::Continuous => Covariate::continuous(s.name.clone(), nv),
            _ => Covariate::levels(s.name.clone(), s.kind.clone(), lv),
        })
        .collect();
    let outcome = outcome_column.map(|name| (name.to_string(), outcome));
    let [a, b]: [String; 2] = labels.try_into().expect("two labels");
    let d = Dataset::new([a, b], arms, covariates, outcome)?;
    let report = LoadReport {
        rows_read,
        rows_kept: d.n(),
        dropped,
    };
    Ok((d, report))
}

fn parse_number(raw: &str, column: &str, row: usize) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| {
            Error::SchemaMismatch(format!("row {row}: `{raw}` in `{column}` is not a number"))
        })
}
