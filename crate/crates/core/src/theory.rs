//! Closed-form planning quantities.
//!
//! Most of these are rational functions of sample size and covariate
//! count, so they are generic over [`Field`] and evaluate exactly over
//! rationals. The break-even thresholds and Monte Carlo standard errors
//! need square roots and are generic over [`Real`].
//!
//! Throughout, `n` is the total sample size N, `k` the number of fitted
//! covariate columns and `nu` a residual degrees-of-freedom count.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{Field, Real};

fn domain(msg: String) -> Error {
    Error::DomainError(msg)
}

/// `(1/n1 + 1/n2)·σ²`.
pub fn contrast_variance<F: Field>(n1: usize, n2: usize, sigma2: F) -> Result<F> {
    if n1 == 0 || n2 == 0 {
        return Err(domain(format!(
            "arm sizes must be positive, got ({n1}, {n2})"
        )));
    }
    if sigma2 <= F::zero() {
        return Err(domain("sigma² must be positive".into()));
    }
    Ok((F::one() / F::from_count(n1) + F::one() / F::from_count(n2)) * sigma2)
}

/// Mean and variance of λ for multivariate normal covariates. A moment
/// outside its domain is `None`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryMoments<F> {
    pub n: usize,
    pub k: usize,
    /// `(N−3)/(N−k−3)`, defined for N > k+3.
    pub expected_vif: Option<F>,
    /// `2k(N−3)/((N−k−3)²(N−k−5))`, defined for N > k+5.
    pub vif_variance: Option<F>,
}

impl<F: Field> TheoryMoments<F> {
    pub fn mean_defined(&self) -> bool {
        self.expected_vif.is_some()
    }

    pub fn variance_defined(&self) -> bool {
        self.vif_variance.is_some()
    }
}

pub fn vif_moments<F: Field>(n: usize, k: usize) -> TheoryMoments<F> {
    if k == 0 {
        return TheoryMoments {
            n,
            k,
            expected_vif: Some(F::one()),
            vif_variance: Some(F::zero()),
        };
    }
    let expected_vif = (n > k + 3).then(|| F::from_count(n - 3) / F::from_count(n - k - 3));
    let vif_variance = (n > k + 5).then(|| {
        let a = F::from_count(n - k - 3);
        F::from_count(2 * k) * F::from_count(n - 3) / (a.clone() * a * F::from_count(n - k - 5))
    });
    TheoryMoments {
        n,
        k,
        expected_vif,
        vif_variance,
    }
}

/// `(ν−1)/(ν−k−1)` with ν the residual degrees of freedom of the model
/// without covariates. Pass `ν = N − c − 2` to account for `c` extra
/// parameters such as centre effects.
pub fn expected_vif_from_dof<F: Field>(nu: usize, k: usize) -> Result<F> {
    if nu <= k + 1 {
        return Err(domain(format!(
            "expected VIF needs nu > k + 1 (nu = {nu}, k = {k})"
        )));
    }
    Ok(F::from_count(nu - 1) / F::from_count(nu - k - 1))
}

/// Residual degrees of freedom `N − c − 2` of the model with treatment and
/// `c` extra nuisance parameters but no covariates.
pub fn centre_adjusted_dof(n: usize, extra: usize) -> Result<usize> {
    n.checked_sub(extra + 2)
        .filter(|&nu| nu > 0)
        .ok_or_else(|| {
            domain(format!(
                "N = {n} leaves no residual degrees of freedom after {extra} extra"
            ))
        })
}

/// Variance of Student's t on `N−2−k` degrees of freedom.
pub fn t_variance<F: Field>(n: usize, k: usize) -> Result<F> {
    if n <= k + 4 {
        return Err(domain(format!(
            "t variance needs N − k − 4 > 0 (N = {n}, k = {k})"
        )));
    }
    Ok(F::from_count(n - 2 - k) / F::from_count(n - 4 - k))
}

/// `(ν+3)/(ν+1)`, the reciprocal fiducial precision factor.
pub fn fisher_precision_factor<F: Field>(nu: usize) -> Result<F> {
    if nu == 0 {
        return Err(domain("Fisher factor needs nu ≥ 1".into()));
    }
    Ok(F::from_count(nu + 3) / F::from_count(nu + 1))
}

/// Expected VIF, RMSE ratio and second-order precision as a product.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeFactorBudget<F> {
    pub expected_vif: F,
    pub rmse_ratio: F,
    /// Fisher factor of the adjusted model over that of the unadjusted one.
    pub second_order_ratio: F,
    pub combined: F,
}

pub fn three_factor_budget<F: Field>(
    n: usize,
    k: usize,
    rmse_ratio: F,
) -> Result<ThreeFactorBudget<F>> {
    if rmse_ratio <= F::zero() || rmse_ratio > F::one() {
        return Err(domain("RMSE ratio must lie in (0, 1]".into()));
    }
    if n < k + 3 {
        return Err(domain(format!(
            "N − 2 − k must be at least 1 (N = {n}, k = {k})"
        )));
    }
    let expected_vif = vif_moments::<F>(n, k)
        .expected_vif
        .ok_or_else(|| domain(format!("expected VIF undefined for N = {n}, k = {k}")))?;
    let second_order_ratio =
        fisher_precision_factor::<F>(n - 2 - k)? / fisher_precision_factor::<F>(n - 2)?;
    let combined = expected_vif.clone() * rmse_ratio.clone() * second_order_ratio.clone();
    Ok(ThreeFactorBudget {
        expected_vif,
        rmse_ratio,
        second_order_ratio,
        combined,
    })
}

/// Effect of adding one covariate to a model with ν residual degrees of
/// freedom: the expected-VIF ratio `(ν−1)/(ν−2)` and the Fisher-factor
/// ratio `(ν+2)(ν+1)/(ν(ν+3))`.
pub fn add_covariate_ratios<F: Field>(nu: usize) -> Result<(F, F)> {
    if nu <= 2 {
        return Err(domain(format!("adding a covariate needs nu ≥ 3, got {nu}")));
    }
    let r_lambda = F::from_count(nu - 1) / F::from_count(nu - 2);
    let fisher = F::from_count((nu + 2) * (nu + 1)) / F::from_count(nu * (nu + 3));
    Ok((r_lambda, fisher))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum BreakEvenRule {
    /// `1/√(ν−1)`: expected VIF against RMSE only.
    Simple,
    /// `1/√(ν−2)`: one degree of freedom held back for variance estimation.
    RuleOfThumb,
    /// Includes the Fisher precision factor.
    Fisher,
}

impl BreakEvenRule {
    pub const ALL: [BreakEvenRule; 3] = [
        BreakEvenRule::Simple,
        BreakEvenRule::RuleOfThumb,
        BreakEvenRule::Fisher,
    ];
}

/// Absolute partial correlation above which an extra covariate pays off.
pub fn breakeven<T: Real>(rule: BreakEvenRule, nu: usize) -> Result<T> {
    let v = T::from_count(nu);
    match rule {
        BreakEvenRule::Simple if nu >= 2 => Ok(T::one() / (v - T::one()).sqrt()),
        BreakEvenRule::RuleOfThumb if nu >= 3 => Ok(T::one() / (v - T::lit(2.0)).sqrt()),
        // The defining VIF ratio (ν−1)/(ν−2) needs ν ≥ 3.
        BreakEvenRule::Fisher if nu >= 3 => {
            let num = v * v + T::lit(5.0) * v - T::lit(2.0);
            let den = (v - T::one()) * (v + T::one()) * (v + T::lit(2.0));
            let radicand = num / den;
            if radicand <= T::zero() || radicand > T::one() {
                return Err(domain(format!("Fisher break-even undefined at nu = {nu}")));
            }
            Ok(radicand.sqrt())
        }
        _ => Err(domain(format!(
            "{rule:?} break-even undefined at nu = {nu}"
        ))),
    }
}

/// Fitting a historical score (one column) against refitting its `k`
/// constituents.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreTradeoff<F> {
    /// Expected VIF of the full set over that of the score: `(N−4)/(N−k−3)`.
    pub vif_ratio: F,
    /// `(1−ρc²)/(1−ρh²)`.
    pub rmse_ratio: F,
}

impl<F: Field> ScoreTradeoff<F> {
    /// Variance of the refitted model relative to the score model; above
    /// one favors the historical score.
    pub fn product(&self) -> F {
        self.vif_ratio.clone() * self.rmse_ratio.clone()
    }
}

pub fn historical_score_ratios<F: Field>(
    n: usize,
    k: usize,
    rho_current: F,
    rho_historical: F,
) -> Result<ScoreTradeoff<F>> {
    if n <= k + 3 || k == 0 {
        return Err(domain(format!(
            "score trade-off needs k ≥ 1 and N > k + 3 (N = {n}, k = {k})"
        )));
    }
    let one = F::one();
    let in_range = |r: &F| r.clone() * r.clone() < one;
    if !in_range(&rho_current) || !in_range(&rho_historical) {
        return Err(domain(
            "correlations must lie strictly between −1 and 1".into(),
        ));
    }
    Ok(ScoreTradeoff {
        vif_ratio: F::from_count(n - 4) / F::from_count(n - k - 3),
        rmse_ratio: (one.clone() - rho_current.clone() * rho_current)
            / (one - rho_historical.clone() * rho_historical),
    })
}

/// Mean and variance of an F(ν, ω) variable, `None` outside their domains.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FMoments<F> {
    pub mean: Option<F>,
    pub variance: Option<F>,
}

pub fn f_moments<F: Field>(nu: usize, omega: usize) -> Result<FMoments<F>> {
    if nu == 0 || omega == 0 {
        return Err(domain("F degrees of freedom must be positive".into()));
    }
    let w = F::from_count(omega);
    let mean = (omega > 2).then(|| w.clone() / F::from_count(omega - 2));
    let variance = (omega > 4).then(|| {
        let wm2 = F::from_count(omega - 2);
        F::from_count(2) * w.clone() * w * F::from_count(nu + omega - 2)
            / (F::from_count(nu) * wm2.clone() * wm2 * F::from_count(omega - 4))
    });
    Ok(FMoments { mean, variance })
}

/// `√(variance/m)`.
pub fn mc_standard_error<T: Real>(variance: T, m: usize) -> T {
    (variance / T::from_count(m.max(1))).sqrt()
}
