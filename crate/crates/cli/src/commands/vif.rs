use std::io::Write;

use covadj_core::dataset::{build_design, CovariateKind, ModelSpec};
use covadj_core::vif::{
    chi_square, contingency, rao_bridge, vif_from_chi_square, vif_quadratic, vif_regression,
};

use crate::args::{RouteArg, VifArgs};
use crate::format::{sig17, table};
use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

/// Largest tolerated spread of λ across routes.
const DISCREPANCY_LIMIT: f64 = 1e-8;

struct RouteLine {
    name: &'static str,
    lambda: f64,
    r_squared: f64,
}

pub fn run(a: &VifArgs, out: &mut dyn Write) -> CliResult<RunManifest> {
    let loaded = super::load(&a.data)?;
    let d = &loaded.dataset;
    let model = match &a.model {
        Some(list) => ModelSpec::new(list.split(',').map(str::trim).filter(|s| !s.is_empty())),
        None => ModelSpec::new(d.covariate_names()),
    };
    let design = build_design::<f64>(d, &model)?;
    let (n1, n2) = d.arm_counts();
    let wants = |r: RouteArg| a.route.contains(&RouteArg::All) || a.route.contains(&r);
    let single_levels = match model.covariate_names.as_slice() {
        [name] => !matches!(d.covariate(name)?.kind, CovariateKind::Continuous),
        _ => false,
    };

    let mut lines = Vec::new();
    let mut notes = Vec::new();
    if wants(RouteArg::Regression) {
        let v = vif_regression(&design, d.arms())?;
        lines.push(RouteLine {
            name: "regression",
            lambda: v.lambda,
            r_squared: v.r_squared_z,
        });
    }
    let optional =
        |requested: RouteArg, e: covadj_core::Error, notes: &mut Vec<String>, name: &str| {
            if a.route.contains(&requested) {
                Err(CliError::from(e))
            } else {
                notes.push(format!("{name}: skipped ({e})"));
                Ok(())
            }
        };
    if wants(RouteArg::Quadratic) {
        match vif_quadratic(&design, d.arms()) {
            Ok(v) => lines.push(RouteLine {
                name: "quadratic",
                lambda: v.lambda,
                r_squared: v.r_squared_z,
            }),
            Err(e) => optional(RouteArg::Quadratic, e, &mut notes, "quadratic")?,
        }
    }
    let mut rao = None;
    if wants(RouteArg::Rao) {
        match rao_bridge(&design, d.arms()) {
            Ok(b) => {
                lines.push(RouteLine {
                    name: "rao",
                    lambda: b.lambda,
                    r_squared: 1.0 - 1.0 / b.lambda,
                });
                rao = Some(b);
            }
            Err(e) => optional(RouteArg::Rao, e, &mut notes, "rao")?,
        }
    }
    let mut chi = None;
    if wants(RouteArg::ChiSquare) {
        if single_levels {
            let t = contingency(d, &model.covariate_names[0])?;
            let v = vif_from_chi_square::<f64>(&t)?;
            lines.push(RouteLine {
                name: "chi-square",
                lambda: v.lambda,
                r_squared: v.r_squared_z,
            });
            chi = Some((chi_square::<f64>(&t)?, t));
        } else if a.route.contains(&RouteArg::ChiSquare) {
            return Err(CliError::Usage(
                "the chi-square route needs a single binary or categorical covariate".into(),
            ));
        }
    }
    if let Some(delta) = a.perturb {
        let at = lines
            .iter()
            .position(|l| l.name == "quadratic")
            .or(lines.len().checked_sub(1));
        if let Some(i) = at {
            lines[i].lambda += delta;
        }
    }

    let mut text = format!(
        "model: {}\nN: {}  n1: {} ({})  n2: {} ({})  k: {}\n\n",
        model.label(),
        d.n(),
        n1,
        d.treatment_labels()[0],
        n2,
        d.treatment_labels()[1],
        design.k,
    );
    let rows: Vec<Vec<String>> = lines
        .iter()
        .map(|l| {
            vec![
                l.name.into(),
                sig17(l.lambda),
                sig17(l.r_squared),
                n1.to_string(),
                n2.to_string(),
                design.k.to_string(),
            ]
        })
        .collect();
    text.push_str(&table(
        &["route", "lambda", "r_squared_z", "n1", "n2", "k"],
        &rows,
    ));
    for n in &notes {
        text.push_str(n);
        text.push('\n');
    }
    let spread = lines
        .iter()
        .map(|l| l.lambda)
        .fold(f64::NEG_INFINITY, f64::max)
        - lines.iter().map(|l| l.lambda).fold(f64::INFINITY, f64::min);
    let spread = if lines.len() > 1 { spread } else { 0.0 };
    text.push_str(&format!("max_discrepancy: {spread:e}\n"));
    if let Some(b) = &rao {
        text.push_str(&format!(
            "mahalanobis_d2: {}\nrao_f: {}  (df {}, {})\n",
            sig17(b.d2_mv),
            sig17(b.f_rao),
            design.k,
            d.n() - design.k - 1
        ));
    }
    if let Some((c, t)) = &chi {
        text.push('\n');
        let mut header: Vec<&str> = vec!["arm"];
        header.extend(t.labels.iter().map(String::as_str));
        header.push("total");
        let [r1, r2] = t.row_totals();
        let mut body = Vec::new();
        for (r, total) in [(0, r1), (1, r2)] {
            let mut row = vec![d.treatment_labels()[r].clone()];
            row.extend(t.counts[r].iter().map(u64::to_string));
            row.push(total.to_string());
            body.push(row);
        }
        let mut totals = vec!["total".to_string()];
        totals.extend(t.column_totals().iter().map(u64::to_string));
        totals.push(t.total().to_string());
        body.push(totals);
        let mut contrib = vec!["chi2".to_string()];
        contrib.extend(c.per_category.iter().map(|&v| sig17(v)));
        contrib.push(sig17(c.chi2));
        body.push(contrib);
        text.push_str(&table(&header, &body));
        if !t.dropped_levels.is_empty() {
            text.push_str(&format!(
                "empty levels dropped: {}\n",
                t.dropped_levels.join(", ")
            ));
        }
        text.push_str(&format!(
            "chi2: {}  df: {}\n",
            sig17(c.chi2),
            t.categories() - 1
        ));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    if spread > DISCREPANCY_LIMIT {
        return Err(CliError::Discrepancy(spread));
    }

    let mut config = super::data_config(&a.data, &loaded.schema);
    config["model"] = serde_json::json!(model.covariate_names);
    let mut m = RunManifest::new("vif", config);
    m.dataset_digest = Some(loaded.digest);
    m.record_output("stdout", text.as_bytes());
    Ok(m)
}
