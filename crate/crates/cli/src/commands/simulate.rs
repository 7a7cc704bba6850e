use std::io::Write;

use covadj_core::dataset::enumerate_models;
use covadj_core::sim::{
    check_drop_budget, simulate_cells, PermutationMode, Scheme, SimCell, SimConfig,
};
use serde::Serialize;

use crate::args::SimulateArgs;
use crate::format::opt;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub const RESULTS_HEADER: [&str; 11] = [
    "scheme",
    "model",
    "k",
    "mean_lambda",
    "var_lambda",
    "mc_se",
    "theory_mean",
    "theory_var",
    "redraws",
    "m_effective",
    "dropped",
];

fn parse_schemes(list: &str) -> CliResult<Vec<Scheme>> {
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let s = Scheme::parse(name)
            .ok_or_else(|| CliError::Usage(format!("unknown scheme `{name}`")))?;
        if !out.contains(&s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        return Err(CliError::Usage("no schemes given".into()));
    }
    Ok(out)
}

pub fn results_csv(cells: &[SimCell]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| CliError::Usage(format!("writing results: {e}"));
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for c in cells {
        w.write_record([
            c.scheme.name().to_string(),
            c.model.label(),
            c.k.to_string(),
            opt(c.mean_lambda),
            opt(c.var_lambda),
            opt(c.mc_se_mean),
            opt(c.theory_mean),
            opt(c.theory_var),
            c.redraw_count.to_string(),
            c.m_effective.to_string(),
            c.dropped.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Usage(format!("writing results: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields"))
}

#[derive(Serialize)]
struct CellSummary {
    scheme: &'static str,
    model: String,
    k: usize,
    supported: bool,
    m_effective: usize,
    mean_lambda: Option<f64>,
    var_lambda: Option<f64>,
    theory_mean: Option<f64>,
    theory_var: Option<f64>,
    /// (mean − theory) / Monte Carlo SE of the mean.
    z_mean: Option<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    n: usize,
    n1: usize,
    n2: usize,
    treatment_labels: &'a [String; 2],
    covariates: Vec<String>,
    rows_dropped_at_load: usize,
    seed: u64,
    replicates: usize,
    schemes: Vec<&'static str>,
    permutation: PermutationMode,
    max_redraws: usize,
    models: usize,
    cells: usize,
    unsupported_cells: usize,
    total_redraws: usize,
    total_dropped: usize,
    over_drop_budget: Vec<String>,
    status: &'static str,
    max_abs_z_mean: Option<f64>,
    per_cell: Vec<CellSummary>,
}

fn write_file(dir: &std::path::Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
}

pub fn run(a: &SimulateArgs, out: &mut dyn Write) -> CliResult<RunManifest> {
    let loaded = super::load(&a.data)?;
    let d = &loaded.dataset;
    let schemes = parse_schemes(&a.schemes)?;
    let models = enumerate_models(&d.covariate_names())?;
    let mut cfg = SimConfig::new(schemes, models, a.reps, a.seed);
    cfg.max_redraws = a.max_redraws;
    if a.fixed_margins {
        cfg.permutation = PermutationMode::FixedMargins;
    }

    let cells = match a.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(|| simulate_cells(d, &cfg))?,
        None => simulate_cells(d, &cfg)?,
    };
    let budget = check_drop_budget(&cells);

    let csv_text = results_csv(&cells)?;
    let (n1, n2) = d.arm_counts();
    let per_cell: Vec<CellSummary> = cells
        .iter()
        .map(|c| CellSummary {
            scheme: c.scheme.name(),
            model: c.model.label(),
            k: c.k,
            supported: c.supported,
            m_effective: c.m_effective,
            mean_lambda: c.mean_lambda,
            var_lambda: c.var_lambda,
            theory_mean: c.theory_mean,
            theory_var: c.theory_var,
            z_mean: match (c.mean_lambda, c.theory_mean, c.mc_se_mean) {
                (Some(m), Some(t), Some(se)) if se > 0.0 => Some((m - t) / se),
                _ => None,
            },
        })
        .collect();
    let summary = Summary {
        n: d.n(),
        n1,
        n2,
        treatment_labels: d.treatment_labels(),
        covariates: d.covariate_names(),
        rows_dropped_at_load: loaded.report.dropped.len(),
        seed: cfg.seed,
        replicates: cfg.replicates,
        schemes: cfg.schemes.iter().map(|s| s.name()).collect(),
        permutation: cfg.permutation,
        max_redraws: cfg.max_redraws,
        models: cfg.models.len(),
        cells: cells.len(),
        unsupported_cells: cells.iter().filter(|c| !c.supported).count(),
        total_redraws: cells.iter().map(|c| c.redraw_count).sum(),
        total_dropped: cells.iter().map(|c| c.dropped).sum(),
        over_drop_budget: cells
            .iter()
            .filter(|c| c.exceeds_drop_budget())
            .map(SimCell::label)
            .collect(),
        status: if budget.is_ok() {
            "ok"
        } else {
            "too_many_redraws"
        },
        max_abs_z_mean: per_cell
            .iter()
            .filter_map(|c| c.z_mean)
            .map(f64::abs)
            .reduce(f64::max),
        per_cell,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');

    std::fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    write_file(&a.out, RESULTS_FILE, csv_text.as_bytes())?;
    write_file(&a.out, SUMMARY_FILE, json.as_bytes())?;

    let mut config = super::data_config(&a.data, &loaded.schema);
    config["schemes"] = serde_json::json!(summary.schemes);
    config["replicates"] = serde_json::json!(cfg.replicates);
    config["seed"] = serde_json::json!(cfg.seed);
    config["max_redraws"] = serde_json::json!(cfg.max_redraws);
    config["permutation"] = serde_json::json!(cfg.permutation);
    let mut m = RunManifest::new("simulate", config);
    m.seed = Some(cfg.seed);
    m.dataset_digest = Some(loaded.digest.clone());
    m.record_output(RESULTS_FILE, csv_text.as_bytes());
    m.record_output(SUMMARY_FILE, json.as_bytes());
    m.write(&a.out.join(MANIFEST_FILE))?;

    let line = format!(
        "{} cells ({} supported), {} replicates each, seed {}: {}\nmax |z| of mean vs theory: {}\nwrote {}\n",
        summary.cells,
        summary.cells - summary.unsupported_cells,
        cfg.replicates,
        cfg.seed,
        summary.status,
        summary.max_abs_z_mean.map_or_else(|| "undef".into(), |z| format!("{z:.3}")),
        a.out.display(),
    );
    out.write_all(line.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))?;
    budget?;
    Ok(m)
}
