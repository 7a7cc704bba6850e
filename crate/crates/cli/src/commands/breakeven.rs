use std::io::Write;

use covadj_core::theory::{breakeven, BreakEvenRule};

use crate::args::BreakevenArgs;
use crate::format::opt;
use crate::manifest::RunManifest;
use crate::{CliError, CliResult};

pub fn run(a: &BreakevenArgs, out: &mut dyn Write) -> CliResult<RunManifest> {
    if a.nu_from > a.nu_to {
        return Err(CliError::Usage(format!(
            "--nu-from {} exceeds --nu-to {}",
            a.nu_from, a.nu_to
        )));
    }
    let mut text = String::from("nu,simple,rule_of_thumb,fisher\n");
    for nu in a.nu_from..=a.nu_to {
        text.push_str(&nu.to_string());
        for rule in BreakEvenRule::ALL {
            text.push(',');
            text.push_str(&opt(breakeven::<f64>(rule, nu).ok()));
        }
        text.push('\n');
    }
    super::emit(a.out.as_deref(), &text, out)?;
    let mut m = RunManifest::new(
        "breakeven",
        serde_json::json!({ "nu_from": a.nu_from, "nu_to": a.nu_to }),
    );
    m.record_output("breakeven.csv", text.as_bytes());
    Ok(m)
}
