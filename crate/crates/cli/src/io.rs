//! Input resolution and guarded output writing.

use std::fs;
use std::path::{Path, PathBuf};

use lfic_core::presets::{self, Preset};
use lfic_core::quantum::QuantumRealization;
use lfic_core::{schema, BellFunctional, Behavior};

use crate::CliError;

/// Writes `content` to `path`, refusing to replace an existing file unless
/// `force` is set.
pub fn write_output(path: &Path, content: &str, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} already exists (pass --force to overwrite)",
            path.display()
        )));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Domain(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, content).map_err(|e| CliError::Domain(format!("{}: {e}", path.display())))
}

/// Checks every target before anything is written, so a refused overwrite
/// leaves no partial output behind.
pub fn check_outputs(paths: &[PathBuf], force: bool) -> Result<(), CliError> {
    match paths.iter().find(|p| p.exists()) {
        Some(p) if !force => Err(CliError::Usage(format!(
            "{} already exists (pass --force to overwrite)",
            p.display()
        ))),
        _ => Ok(()),
    }
}

fn preset_name(spec: &str) -> Option<&str> {
    match spec.strip_prefix("presets:").or_else(|| spec.strip_prefix("preset:")) {
        Some(n) => Some(n),
        None if !spec.contains('/') && !spec.contains('.') => Some(spec),
        None => None,
    }
}

fn read(path: &str) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {path}: {e}")))
}

fn preset(name: &str) -> Result<Preset, CliError> {
    presets::preset(name).map_err(|e| CliError::Usage(e.to_string()))
}

/// `presets:NAME`, a bare preset name, or a behaviour JSON file.
pub fn behavior(spec: &str) -> Result<Behavior, CliError> {
    match preset_name(spec) {
        Some(name) => preset(name)?
            .behavior()
            .ok_or_else(|| CliError::Usage(format!("preset {name} is not a behaviour"))),
        None => schema::deserialize_behavior(&read(spec)?).map_err(CliError::from_core),
    }
}

pub fn functional(spec: &str) -> Result<BellFunctional, CliError> {
    match preset_name(spec) {
        Some(name) => match preset(name)? {
            Preset::Functional(f) => Ok(f),
            _ => Err(CliError::Usage(format!("preset {name} is not a functional"))),
        },
        None => schema::deserialize_functional(&read(spec)?).map_err(CliError::from_core),
    }
}

pub fn realization(spec: &str) -> Result<QuantumRealization, CliError> {
    let name = preset_name(spec).unwrap_or(spec);
    if name.eq_ignore_ascii_case("Q1-4") {
        return Ok(presets::q1_four_outcome());
    }
    match preset(name)? {
        Preset::Realization(r) => Ok(r),
        _ => Err(CliError::Usage(format!("preset {name} has no quantum realization"))),
    }
}

/// `# key: value` header lines shared by every output file.
pub fn header(command: &str, settings: &[(&str, String)]) -> Vec<String> {
    let mut h = vec![format!("lfic {command} (lfic-core {})", env!("CARGO_PKG_VERSION"))];
    h.extend(settings.iter().map(|(k, v)| format!("{k}: {v}")));
    h
}
