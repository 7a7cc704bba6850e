use std::io::Write;

use covadj_core::synthetic;

use crate::args::GenDataArgs;
use crate::manifest::RunManifest;
use crate::CliResult;

pub fn run(a: &GenDataArgs, out: &mut dyn Write) -> CliResult<RunManifest> {
    let text = synthetic::to_csv(&synthetic::generate(a.seed)?);
    super::emit(a.out.as_deref(), &text, out)?;
    let mut m = RunManifest::new("gen-data", serde_json::json!({ "seed": a.seed }));
    m.seed = Some(a.seed);
    m.record_output("data.csv", text.as_bytes());
    Ok(m)
}
