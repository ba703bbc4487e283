//! Markdown summary over finished runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::Value;

use crate::config::{merge_parameters, ConfigFile, ReportParams};
use crate::output::{write_atomic, RunManifest, SUMMARY};
use crate::{CliError, ReportArgs};

pub fn run(args: &ReportArgs) -> Result<(), CliError> {
    let file = match &args.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut params: ReportParams = merge_parameters(&file.parameters, Value::Null)?;
    params.runs.extend(args.runs.iter().cloned());
    let text = summarize(&params.runs.iter().map(|p| p.as_path()).collect::<Vec<_>>())?;
    match args.out.as_ref().or(file.output_dir.as_ref()) {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
            write_atomic(&dir.join("summary.md"), text.as_bytes())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// One section per command, in command order; every line names the file
/// it comes from.
pub fn summarize(runs: &[&Path]) -> Result<String, CliError> {
    let mut by_command: BTreeMap<String, Vec<(&Path, RunManifest)>> = BTreeMap::new();
    for dir in runs {
        let m = RunManifest::load(dir)?;
        by_command.entry(m.command.clone()).or_default().push((dir, m));
    }
    let mut out = String::new();
    if by_command.is_empty() {
        return Ok(out);
    }
    out.push_str("# khintchine-lab report\n");
    for (command, list) in &by_command {
        let _ = write!(out, "\n## {command}\n");
        for (dir, m) in list {
            let source = dir.join(SUMMARY);
            let _ = writeln!(out, "\n### {}\n", dir.display());
            let _ = writeln!(out, "- seed {}, version {}, finished {}", m.config["seed"], m.version, m.finished);
            if command == "excursions" {
                let v = &m.verdicts["growth_bound_violations"];
                let _ = writeln!(out, "- growth-bound violations: {v} (`{}`)", dir.join("excursions.csv").display());
            }
            flatten("", &m.verdicts, &mut |key, value| {
                let _ = writeln!(out, "- {key}: {value} (`{}`)", source.display());
            });
            for f in &m.outputs {
                let _ = writeln!(out, "- output `{}` sha256 {}", dir.join(&f.file).display(), f.sha256);
            }
        }
    }
    Ok(out)
}

fn flatten(prefix: &str, v: &Value, emit: &mut dyn FnMut(&str, String)) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, emit);
            }
        }
        Value::Array(items) if items.iter().all(Value::is_object) && !items.is_empty() => {
            for (i, child) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), child, emit);
            }
        }
        other => emit(prefix, other.to_string()),
    }
}
