//! Run scheduling: one solver run per mesh resolution, parallel across
//! resolutions, each writing a manifest and its checkpoints into its own
//! directory. Re-running an identical configuration is detected through the
//! config digest and skipped unless forced.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use vfv_core::experiments::{draw_kh_params, make_initial_state, KhParams};
use vfv_core::grid::Mesh;
use vfv_core::scheme::{run, RunOptions};

use crate::config::Config;
use crate::error::{CliError, Result};
use crate::fields_io::write_state;
use crate::manifest::RunManifest;

pub const FINAL_STATE_FILE: &str = "state_final.field";

#[derive(Debug)]
pub enum RunOutcome {
    Completed(PathBuf),
    Skipped(PathBuf),
    Failed { k: usize, message: String },
}

pub fn run_dir_for(output: &Path, k: usize) -> PathBuf {
    output.join(format!("k{k:05}"))
}

/// Worker count: VFV_THREADS, else the machine parallelism, capped by jobs.
fn worker_count(jobs: usize) -> usize {
    let hw = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cap = std::env::var("VFV_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(hw);
    cap.min(jobs).max(1)
}

fn kh_from_config(cfg: &Config) -> KhParams {
    let mut kh = draw_kh_params(cfg.experiment.seed);
    kh.eps_perturb = cfg.kh_eps;
    kh
}

fn execute_one(cfg: &Config, kh: &KhParams, k: usize, dir: &Path) -> Result<()> {
    let mesh = Mesh::square(k).map_err(CliError::solver)?;
    let state = make_initial_state(kh, mesh, cfg.experiment.projection_subsamples)
        .map_err(CliError::solver)?;
    let mut save_times = cfg.experiment.save_times.clone();
    if save_times.is_empty() {
        save_times.push(cfg.experiment.t_final);
    }
    let options = RunOptions {
        save_times: save_times.clone(),
        save_every_steps: cfg.experiment.save_every_steps,
        ..RunOptions::default()
    };
    let trajectory = run(&state, &cfg.scheme, cfg.experiment.t_final, &options)
        .map_err(CliError::solver)?;

    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut checkpoint_index = Vec::new();
    for cp in &trajectory.checkpoints {
        let name = if (cp.time - cfg.experiment.t_final).abs() <= 1e-12 * cfg.experiment.t_final {
            FINAL_STATE_FILE.to_string()
        } else {
            format!("state_step{:06}.field", cp.step)
        };
        write_state(&dir.join(&name), &cp.state)?;
        checkpoint_index.push((cp.time, name));
    }
    // the final state is always available, whether or not it was requested
    if !checkpoint_index.iter().any(|(_, n)| n == FINAL_STATE_FILE) {
        write_state(&dir.join(FINAL_STATE_FILE), &trajectory.final_state)?;
        checkpoint_index.push((trajectory.final_state.time(), FINAL_STATE_FILE.into()));
    }
    let manifest = RunManifest::from_trajectory(
        &cfg.hash(),
        k,
        mesh.dim(),
        kh,
        &trajectory,
        &cfg.scheme.warnings(mesh.dim()),
        checkpoint_index,
    );
    manifest.write(dir)
}

/// Runs the solver for every k in the config, in parallel across k. Failures
/// are collected per resolution without aborting sibling runs.
pub fn cmd_run(cfg: &Config, force: bool) -> Result<Vec<RunOutcome>> {
    cfg.scheme.validate().map_err(CliError::solver)?;
    cfg.experiment.validate().map_err(CliError::solver)?;
    for warning in cfg.scheme.warnings(2) {
        eprintln!("warning: {warning}");
    }
    let kh = kh_from_config(cfg);
    let output = PathBuf::from(&cfg.experiment.output_dir);
    let config_hash = cfg.hash();

    // partition into skipped and pending before spawning workers
    let mut outcomes: Vec<Option<RunOutcome>> = Vec::new();
    let mut pending: Vec<(usize, usize)> = Vec::new(); // (slot, k)
    for (slot, &k) in cfg.experiment.mesh_ks.iter().enumerate() {
        let dir = run_dir_for(&output, k);
        if !force {
            if let Ok(manifest) = RunManifest::read(&dir) {
                if manifest.config_hash == config_hash {
                    println!("k={k}: up to date, skipping (use --force to rerun)");
                    outcomes.push(Some(RunOutcome::Skipped(dir)));
                    continue;
                }
            }
        }
        outcomes.push(None);
        pending.push((slot, k));
    }

    let workers = worker_count(pending.len().max(1));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, RunOutcome)>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(slot, k)) = pending.get(idx) else {
                    break;
                };
                let dir = run_dir_for(&output, k);
                let outcome = match execute_one(cfg, &kh, k, &dir) {
                    Ok(()) => {
                        println!("k={k}: done -> {}", dir.display());
                        RunOutcome::Completed(dir)
                    }
                    Err(e) => {
                        eprintln!("k={k}: FAILED: {e}");
                        RunOutcome::Failed {
                            k,
                            message: e.to_string(),
                        }
                    }
                };
                results.lock().unwrap().push((slot, outcome));
            });
        }
    });
    for (slot, outcome) in results.into_inner().unwrap() {
        outcomes[slot] = Some(outcome);
    }
    Ok(outcomes.into_iter().map(|o| o.unwrap()).collect())
}

/// Nonzero when any run failed.
pub fn failures(outcomes: &[RunOutcome]) -> Vec<String> {
    outcomes
        .iter()
        .filter_map(|o| match o {
            RunOutcome::Failed { k, message } => Some(format!("k={k}: {message}")),
            _ => None,
        })
        .collect()
}
