use std::time::Instant;
use vfv_core::experiments::{draw_kh_params, make_initial_state};
use vfv_core::grid::Mesh;
use vfv_core::scheme::{run, RunOptions, SchemeParams};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let k: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(32);
    let t_final: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(0.5);
    let params = SchemeParams { a: 2.5, ..SchemeParams::default() };
    let kh = draw_kh_params(42);
    let mesh = Mesh::square(k).unwrap();
    let state = make_initial_state(&kh, mesh, 8).unwrap();
    let start = Instant::now();
    let traj = run(&state, &params, t_final, &RunOptions::default()).unwrap();
    let dt = start.elapsed();
    let total_picard: usize = traj.reports.iter().map(|r| r.picard_iterations).sum();
    println!(
        "k={k} T={t_final}: {} steps, {:.1} avg picard, mass drift {:.2e}, min rho {:.4}, max energy residual {:.2e}, wall {:.2?}",
        traj.steps(),
        total_picard as f64 / traj.steps() as f64,
        traj.mass_drift_rel(),
        traj.min_density(),
        traj.max_energy_residual(),
        dt
    );
}
