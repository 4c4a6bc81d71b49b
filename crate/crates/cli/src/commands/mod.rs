pub mod check;
pub mod equilibrium;
pub mod fixtures;
pub mod oracle;
pub mod simulate;

use larva_core::ScenarioConfig;

use crate::manifest::RunManifest;
use crate::Precision;

pub(crate) fn manifest_for(path: &std::path::Path, cfg: &ScenarioConfig, subcommand: &'static str) -> RunManifest {
    let mut m = RunManifest::new(path, &cfg.name, subcommand);
    m.notes = cfg.description.clone();
    m.notes.extend(cfg.warnings.iter().map(|w| format!("warning: {w}")));
    m
}

pub(crate) fn precision_name(p: Precision) -> &'static str {
    match p {
        Precision::F64 => "f64",
        Precision::F32 => "f32",
    }
}
