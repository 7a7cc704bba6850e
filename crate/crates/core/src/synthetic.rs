//! Seeded stand-in for a small two-arm respiratory trial.
//!
//! 46 subjects, 23 per arm, with sex (binary), age, height, weight and a
//! log-scale baseline lung-function measure as covariates and a log-scale
//! outcome. Values are rounded the way such data are usually recorded.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Arm, ColumnSchema, Covariate, CovariateKind, Dataset};
use crate::error::Result;

pub const SUBJECTS: usize = 46;
pub const DEFAULT_SEED: u64 = 20_240_046;

/// Column schema of the generated table.
pub fn schema() -> Vec<ColumnSchema> {
    vec![
        ColumnSchema::new("sex", CovariateKind::Binary(["M".into(), "F".into()])),
        ColumnSchema::new("age", CovariateKind::Continuous),
        ColumnSchema::new("baseline", CovariateKind::Continuous),
        ColumnSchema::new("height", CovariateKind::Continuous),
        ColumnSchema::new("weight", CovariateKind::Continuous),
    ]
}

fn round(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

fn normal(mean: f64, sd: f64) -> Normal<f64> {
    Normal::new(mean, sd).expect("positive standard deviation")
}

pub fn generate(seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut arms: Vec<Arm> = (0..SUBJECTS)
        .map(|i| {
            if i < SUBJECTS / 2 {
                Arm::First
            } else {
                Arm::Second
            }
        })
        .collect();
    arms.shuffle(&mut rng);

    let (mut sex, mut age, mut baseline, mut height, mut weight, mut outcome) = (
        Vec::new(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
        Vec::new(),
    );
    for arm in &arms {
        let female = rng.random_bool(0.35);
        let a = normal(42.0, 12.0)
            .sample(&mut rng)
            .clamp(18.0, 75.0)
            .round();
        let h = round(
            176.0 - 13.0 * f64::from(u8::from(female)) + normal(0.0, 6.5).sample(&mut rng),
            1,
        );
        let w = round(
            -58.0 + 0.8 * h + 0.1 * a + normal(0.0, 9.0).sample(&mut rng),
            1,
        );
        let b = round(
            0.55 + 0.02 * (h - 170.0) - 0.008 * (a - 42.0) + normal(0.0, 0.15).sample(&mut rng),
            3,
        );
        let effect = if *arm == Arm::Second { 0.12 } else { 0.0 };
        let y = round(
            0.1 + 0.85 * b + effect + normal(0.0, 0.09).sample(&mut rng),
            3,
        );
        sex.push(usize::from(female));
        age.push(a);
        height.push(h);
        weight.push(w);
        baseline.push(b);
        outcome.push(y);
    }
    Dataset::new(
        ["A".into(), "B".into()],
        arms,
        vec![
            Covariate::levels("sex", CovariateKind::Binary(["M".into(), "F".into()]), sex),
            Covariate::continuous("age", age),
            Covariate::continuous("baseline", baseline),
            Covariate::continuous("height", height),
            Covariate::continuous("weight", weight),
        ],
        Some(("outcome".into(), outcome)),
    )
}

/// The generated table as CSV text with columns
/// `id,treatment,sex,age,baseline,height,weight,outcome`.
pub fn to_csv(d: &Dataset) -> String {
    use crate::dataset::ColumnValues;
    let mut out = String::from("id,treatment");
    for c in d.covariates() {
        out.push(',');
        out.push_str(&c.name);
    }
    if let Some(name) = d.outcome_name() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for i in 0..d.n() {
        let arm = match d.arms()[i] {
            Arm::First => &d.treatment_labels()[0],
            Arm::Second => &d.treatment_labels()[1],
        };
        out.push_str(&format!("{},{}", i + 1, arm));
        for c in d.covariates() {
            match &c.values {
                ColumnValues::Numeric(v) => out.push_str(&format!(",{}", v[i])),
                ColumnValues::Levels(v) => {
                    let labels = c.kind.labels().expect("levelled covariate");
                    out.push_str(&format!(",{}", labels[v[i]]));
                }
            }
        }
        if let Some(y) = d.outcome() {
            out.push_str(&format!(",{}", y[i]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::load_csv;

    #[test]
    fn shape_and_balance() {
        let d = generate(DEFAULT_SEED).unwrap();
        assert_eq!(d.n(), 46);
        assert_eq!(d.arm_counts(), (23, 23));
        assert_eq!(d.covariates().len(), 5);
        assert_eq!(generate(DEFAULT_SEED).unwrap(), d);
        assert_ne!(generate(DEFAULT_SEED + 1).unwrap(), d);
    }

    #[test]
    fn csv_round_trip() {
        let d = generate(DEFAULT_SEED).unwrap();
        let text = to_csv(&d);
        let (back, report) =
            load_csv(text.as_bytes(), &schema(), "treatment", Some("outcome")).unwrap();
        assert!(report.dropped.is_empty());
        assert_eq!(back, d);
    }
}
