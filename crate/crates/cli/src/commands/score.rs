use std::cmp::Ordering;
use std::io::Write;

use covadj_core::theory::historical_score_ratios;

use crate::args::ScoreArgs;
use crate::format::sig17;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

pub fn run(a: &ScoreArgs, out: &mut dyn Write) -> CliResult<RunManifest> {
    let s = historical_score_ratios::<f64>(a.n, a.k, a.rho_current, a.rho_historical)?;
    let product = s.product();
    // The product is the variance of the refitted model relative to the
    // score model.
    let verdict = match product.partial_cmp(&1.0) {
        Some(Ordering::Less) => "fit the covariates anew (product < 1)",
        Some(Ordering::Greater) => "fit the historical score (product > 1)",
        _ => "no difference (product = 1)",
    };
    let text = format!(
        "n: {}\nk: {}\nvif_ratio: {} ({}/{})\nrmse_ratio: {}\nproduct: {}\nverdict: {verdict}\n",
        a.n,
        a.k,
        sig17(s.vif_ratio),
        a.n - 4,
        a.n - a.k - 3,
        sig17(s.rmse_ratio),
        sig17(product),
    );
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    let mut m = RunManifest::new(
        "score",
        serde_json::json!({ "n": a.n, "k": a.k, "rho_current": a.rho_current, "rho_historical": a.rho_historical }),
    );
    m.record_output("stdout", text.as_bytes());
    Ok(m)
}
