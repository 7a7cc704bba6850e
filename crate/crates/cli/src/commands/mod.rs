//! One module per subcommand. Each writes its report to `out` and
//! returns the manifest describing the run.

mod breakeven;
mod gen_data;
mod plan;
mod score;
mod simulate;
mod vif;

use std::io::Write;
use std::path::Path;

use covadj_core::dataset::{load_csv, ColumnSchema, Dataset, LoadReport};

use crate::args::{Cli, Command, DataArgs};
use crate::manifest::sha256_hex;
use crate::{covspec, CliError, CliResult};

pub use simulate::{MANIFEST_FILE, RESULTS_FILE, SUMMARY_FILE};

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult<()> {
    let manifest = match &cli.command {
        Command::Vif(a) => vif::run(a, out)?,
        Command::Plan(a) => plan::run(a, out)?,
        Command::Breakeven(a) => breakeven::run(a, out)?,
        Command::Score(a) => score::run(a, out)?,
        Command::Simulate(a) => simulate::run(a, out)?,
        Command::GenData(a) => gen_data::run(a, out)?,
    };
    if let Some(path) = &cli.manifest {
        manifest.write(path)?;
    }
    Ok(())
}

pub(crate) struct Loaded {
    pub dataset: Dataset,
    pub report: LoadReport,
    pub schema: Vec<ColumnSchema>,
    pub digest: String,
}

pub(crate) fn load(args: &DataArgs) -> CliResult<Loaded> {
    let bytes = std::fs::read(&args.data).map_err(|e| CliError::io(&args.data, e))?;
    let decls = covspec::parse(&args.covariates)?;
    let schema = covspec::resolve(&decls, &bytes)?;
    let (dataset, report) = load_csv(
        bytes.as_slice(),
        &schema,
        &args.treatment,
        args.outcome.as_deref(),
    )?;
    if !report.dropped.is_empty() {
        eprint!("{report}");
    }
    Ok(Loaded {
        dataset,
        report,
        schema,
        digest: sha256_hex(&bytes),
    })
}

/// Schema and column choices as manifest configuration.
pub(crate) fn data_config(args: &DataArgs, schema: &[ColumnSchema]) -> serde_json::Value {
    let covariates: Vec<serde_json::Value> = schema
        .iter()
        .map(|s| serde_json::json!({ "name": s.name, "labels": s.kind.labels() }))
        .collect();
    serde_json::json!({
        "treatment": args.treatment,
        "outcome": args.outcome,
        "covariates": covariates,
    })
}

pub(crate) fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}
