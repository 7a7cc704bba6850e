use std::io::Write;

use covadj_core::theory::{fisher_precision_factor, t_variance, three_factor_budget, vif_moments};
use covadj_core::Exact;

use crate::args::{PlanArgs, TableFormat};
use crate::format::{opt, short, table, UNDEF};
use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

struct Row {
    k: usize,
    nu: Option<usize>,
    expected_exact: Option<Exact>,
    expected: Option<f64>,
    variance: Option<f64>,
    t_var: Option<f64>,
    fisher: Option<f64>,
    budget: Option<f64>,
}

fn row(n_eff: usize, k: usize, rmse: Option<f64>) -> Row {
    let moments = vif_moments::<f64>(n_eff, k);
    let nu = n_eff.checked_sub(2 + k).filter(|&v| v > 0);
    Row {
        k,
        nu,
        expected_exact: vif_moments::<Exact>(n_eff, k).expected_vif,
        expected: moments.expected_vif,
        variance: moments.vif_variance,
        t_var: t_variance::<f64>(n_eff, k).ok(),
        fisher: nu.and_then(|v| fisher_precision_factor::<f64>(v).ok()),
        budget: rmse
            .and_then(|r| three_factor_budget::<f64>(n_eff, k, r).ok())
            .map(|b| b.combined),
    }
}

pub fn run(a: &PlanArgs, out: &mut dyn Write) -> CliResult<RunManifest> {
    if a.n < 2 {
        return Err(CliError::Usage(format!(
            "N must be at least 2, got {}",
            a.n
        )));
    }
    if a.k_from > a.k_to {
        return Err(CliError::Usage(format!(
            "--k-from {} exceeds --k-to {}",
            a.k_from, a.k_to
        )));
    }
    if let Some(r) = a.rmse_ratio {
        if !(r > 0.0 && r <= 1.0) {
            return Err(CliError::Usage(format!(
                "--rmse-ratio must lie in (0, 1], got {r}"
            )));
        }
    }
    // Extra parameters act as a smaller trial: ν = N − c − 2.
    let n_eff =
        a.n.checked_sub(a.extra_dof)
            .filter(|&v| v >= 2)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "{} extra parameters leave fewer than 2 subjects",
                    a.extra_dof
                ))
            })?;
    let rows: Vec<Row> = (a.k_from..=a.k_to)
        .map(|k| row(n_eff, k, a.rmse_ratio))
        .collect();

    let mut header = vec![
        "k",
        "nu",
        "expected_vif",
        "expected_vif_ratio",
        "vif_variance",
        "vif_sd",
        "t_variance",
        "fisher_factor",
    ];
    if a.rmse_ratio.is_some() {
        header.push("budget");
    }
    let render = |r: &Row, num: &dyn Fn(Option<f64>) -> String| {
        let mut cells = vec![
            r.k.to_string(),
            r.nu.map_or_else(|| UNDEF.to_string(), |v| v.to_string()),
            num(r.expected),
            r.expected_exact
                .map_or_else(|| UNDEF.to_string(), |q| q.to_string()),
            num(r.variance),
            num(r.variance.map(f64::sqrt)),
            num(r.t_var),
            num(r.fisher),
        ];
        if a.rmse_ratio.is_some() {
            cells.push(num(r.budget));
        }
        cells
    };
    let text = match a.format {
        TableFormat::Table => {
            let body: Vec<Vec<String>> = rows.iter().map(|r| render(r, &short)).collect();
            let mut t = format!("N = {}, extra parameters = {}\n", a.n, a.extra_dof);
            t.push_str(&table(&header, &body));
            t
        }
        TableFormat::Csv => {
            let mut t = header.join(",") + "\n";
            for r in &rows {
                t.push_str(&render(r, &opt).join(","));
                t.push('\n');
            }
            t
        }
    };
    super::emit(a.out.as_deref(), &text, out)?;
    let mut m = RunManifest::new(
        "plan",
        serde_json::json!({
            "n": a.n, "k_from": a.k_from, "k_to": a.k_to,
            "extra_dof": a.extra_dof, "rmse_ratio": a.rmse_ratio,
        }),
    );
    m.record_output("plan", text.as_bytes());
    Ok(m)
}
