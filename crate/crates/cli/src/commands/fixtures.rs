use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use larva_core::config::ScenarioFile;
use larva_core::{scenarios, ControllerKind};

use crate::table::write_file;
use crate::{
    CliError, CliResult, EquilibriumArgs, FixturesArgs, OracleArgs, Precision, RunOptions, SimulateArgs, TrackArgs,
};

pub fn run(args: &FixturesArgs) -> CliResult<()> {
    let files = scenarios::all();
    let mut paths = Vec::with_capacity(files.len());
    for f in &files {
        let path = args.dir.join(format!("{}.json", f.name));
        let mut text = serde_json::to_string_pretty(f).map_err(|e| CliError::Usage(e.to_string()))?;
        text.push('\n');
        write_file(&path, text.as_bytes())?;
        println!("wrote {}", path.display());
        paths.push(path);
    }
    if !args.run {
        return Ok(());
    }
    if args.jobs == 0 {
        return Err(CliError::Usage("--jobs must be at least 1".into()));
    }
    let next = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..args.jobs.min(files.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some((file, path)) = files.get(i).zip(paths.get(i)) else {
                    break;
                };
                if let Err(e) = run_fixture(file, path) {
                    failures.lock().expect("no poisoned lock").push((i, format!("{}: {e}", file.name), e));
                }
            });
        }
    });
    let mut failures = failures.into_inner().expect("no poisoned lock");
    failures.sort_by_key(|f| f.0);
    for (_, msg, _) in &failures {
        eprintln!("larvactl: fixture {msg}");
    }
    match failures.into_iter().next() {
        Some((_, _, e)) => Err(e),
        None => Ok(()),
    }
}

fn sibling(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn run_fixture(file: &ScenarioFile, path: &Path) -> CliResult<()> {
    let csv = Some(sibling(path, "csv"));
    let svg = Some(sibling(path, "svg"));
    let options = |svg: Option<PathBuf>| RunOptions {
        scenario: path.to_path_buf(),
        out: csv.clone(),
        svg,
        diag: true,
        horizon: None,
        intervals: None,
        precision: Precision::F64,
    };
    match (file.name.as_str(), file.control.variant) {
        ("paper8", _) => crate::commands::equilibrium::run(&EquilibriumArgs {
            scenario: path.to_path_buf(),
            out: csv,
            intervals: None,
            precision: Precision::F64,
        }),
        ("oracle-perturbed", kind) => crate::commands::oracle::run(&OracleArgs {
            scenario: path.to_path_buf(),
            controller: Some(kind),
            out: csv,
            horizon: None,
            intervals: None,
        }),
        (_, ControllerKind::Tracking) => crate::commands::simulate::run_track(&TrackArgs { run: options(svg) }),
        (_, kind) => crate::commands::simulate::run_simulate(&SimulateArgs {
            run: options(svg),
            controller: Some(kind),
        }),
    }
}
