//! Built-in invariant suite: operator identities, conservation, summation
//! regularity and optimal-transport oracles, printed one pass/fail line per
//! property. A deliberate flux-sign mutation hook exists so the suite itself
//! can be shown to catch a broken scheme.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vfv_core::grid::{overlap_integrate_l1, project, restrict_to, Mesh, ScalarField, VectorField};
use vfv_core::measure::{w1_general, w1_scalar, EmpiricalMeasure, DEFAULT_ATOM_CAP};
use vfv_core::ops::{div_h, div_upwind, grad_h, upwind_flux_with_diffusion, FaceTrace, FluxParams};
use vfv_core::scheme::{run, RunOptions, SchemeParams, State, TimeMode};
use vfv_core::summation::{summation_row, WeightFunction};

type Check = std::result::Result<(), String>;

/// Mutation hook for exercising the suite's own sensitivity.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    None,
    /// Corrupt the sign with which each face flux enters its outward cell.
    FlipOutwardSign,
}

fn rand_field(mesh: Mesh, rng: &mut ChaCha8Rng) -> ScalarField {
    ScalarField::from_values(
        mesh,
        (0..mesh.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn rand_vector(mesh: Mesh, rng: &mut ChaCha8Rng) -> VectorField {
    let mut v = VectorField::zeros(mesh);
    for axis in 0..mesh.dim() {
        let f = rand_field(mesh, rng);
        v.component_mut(axis).copy_from_slice(f.values());
    }
    v
}

/// Σ_K |K| div_up(r, u)_K over random fields; the telescoping identity.
/// The mutated flux breaks the pairwise cancellation scale.
pub fn telescoping_upwind_check(mutation: Mutation) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mesh = Mesh::square(16).unwrap();
    let fp = FluxParams::new(0.5, mesh.h()).unwrap();
    for _ in 0..20 {
        let r = rand_field(mesh, &mut rng);
        let u = rand_vector(mesh, &mut rng);
        // assemble the divergence from per-face fluxes so the mutation hook
        // can tamper with the flux itself
        let mut div = vec![0.0f64; mesh.cell_count()];
        let mut scale = 0.0f64;
        for face in mesh.faces() {
            let trace = FaceTrace {
                inward: r.values()[face.inward],
                outward: r.values()[face.outward],
            };
            let a = 0.5
                * (u.component(face.axis)[face.inward] + u.component(face.axis)[face.outward]);
            let f = upwind_flux_with_diffusion(trace, a, fp.diffusion()) / mesh.h();
            div[face.inward] += f;
            match mutation {
                Mutation::None => div[face.outward] -= f,
                Mutation::FlipOutwardSign => div[face.outward] += f,
            }
            scale += f.abs();
        }
        let total: f64 = div.iter().sum::<f64>() * mesh.cell_volume();
        if total.abs() > 1e-13 * (scale * mesh.cell_volume() + 1.0) {
            return Err(format!("upwind divergence total {total:.3e} exceeds tolerance"));
        }
    }
    Ok(())
}

fn duality_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mesh = Mesh::square(12).unwrap();
    let vol = mesh.cell_volume();
    for _ in 0..100 {
        let r = rand_field(mesh, &mut rng);
        let v = rand_vector(mesh, &mut rng);
        let d = div_h(&v);
        let g = grad_h(&r);
        let mut pairing = 0.0;
        let mut scale = 0.0;
        for cell in 0..mesh.cell_count() {
            let mut gv = 0.0;
            for axis in 0..mesh.dim() {
                gv += g.component(axis)[cell] * v.component(axis)[cell];
            }
            pairing += vol * (r.values()[cell] * d.values()[cell] + gv);
            scale += vol * (r.values()[cell] * d.values()[cell]).abs();
        }
        if pairing.abs() > 1e-12 * (scale + 1.0) {
            return Err(format!("grad/div duality defect {pairing:.3e}"));
        }
    }
    Ok(())
}

fn telescoping_div_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mesh = Mesh::square(16).unwrap();
    for _ in 0..100 {
        let r = rand_field(mesh, &mut rng);
        let u = rand_vector(mesh, &mut rng);
        let fp = FluxParams::new(0.5, mesh.h()).unwrap();
        let total: f64 =
            div_upwind(&r, &u, &fp).values().iter().sum::<f64>() * mesh.cell_volume();
        let central: f64 = div_h(&u).values().iter().sum::<f64>() * mesh.cell_volume();
        if total.abs() > 1e-12 || central.abs() > 1e-12 {
            return Err(format!("divergence totals {total:.3e} / {central:.3e}"));
        }
    }
    Ok(())
}

fn gradient_consistency_check() -> Check {
    let pi = std::f64::consts::PI;
    let mut errors = Vec::new();
    let ks = [16usize, 32, 64, 128];
    for &k in &ks {
        let mesh = Mesh::square(k).unwrap();
        let r = project(|x: &[f64]| (2.0 * pi * x[0]).sin(), mesh, 1).unwrap();
        let g = grad_h(&r);
        let mut err = 0.0;
        for cell in 0..mesh.cell_count() {
            let x = mesh.cell_center(cell);
            err += mesh.cell_volume()
                * (g.component(0)[cell] - 2.0 * pi * (2.0 * pi * x[0]).cos()).abs();
        }
        errors.push(err);
    }
    for i in 1..errors.len() {
        let order = (errors[i - 1] / errors[i]).ln() / ((ks[i] as f64 / ks[i - 1] as f64)).ln();
        if order < 1.9 {
            return Err(format!(
                "gradient order {order:.3} below 1.9 between k={} and k={}",
                ks[i - 1],
                ks[i]
            ));
        }
    }
    Ok(())
}

fn conservation_check() -> Check {
    let mesh = Mesh::square(12).unwrap();
    let pi = std::f64::consts::PI;
    let rho = project(|x: &[f64]| 1.0 + 0.2 * (2.0 * pi * x[0]).sin(), mesh, 2).unwrap();
    let mut mom = VectorField::zeros(mesh);
    for i in 0..mesh.cell_count() {
        mom.component_mut(0)[i] = 0.1 * rho.values()[i];
    }
    let state = State::new(rho, mom, 0.0).unwrap();
    for mode in [TimeMode::Implicit, TimeMode::Explicit] {
        let params = SchemeParams {
            mode,
            ..SchemeParams::default()
        };
        let traj = run(&state, &params, 0.05, &RunOptions::default())
            .map_err(|e| format!("run failed: {e}"))?;
        if traj.mass_drift_rel() > 1e-12 {
            return Err(format!("mass drift {:.3e}", traj.mass_drift_rel()));
        }
        if traj.min_density() <= 0.0 {
            return Err("density lost positivity".into());
        }
    }
    Ok(())
}

fn energy_check() -> Check {
    let mesh = Mesh::square(12).unwrap();
    let pi = std::f64::consts::PI;
    let rho = project(|x: &[f64]| 1.0 + 0.2 * (2.0 * pi * x[1]).cos(), mesh, 2).unwrap();
    let mut mom = VectorField::zeros(mesh);
    for i in 0..mesh.cell_count() {
        mom.component_mut(1)[i] = -0.15 * rho.values()[i];
    }
    let state = State::new(rho, mom, 0.0).unwrap();
    let params = SchemeParams::default();
    let traj = run(&state, &params, 0.05, &RunOptions::default())
        .map_err(|e| format!("run failed: {e}"))?;
    for r in &traj.reports {
        let tol = 10.0 * params.picard_tol * (1.0 + r.energy);
        if r.energy_residual > tol {
            return Err(format!(
                "energy residual {:.3e} above {tol:.3e}",
                r.energy_residual
            ));
        }
    }
    Ok(())
}

fn summation_check() -> Check {
    for omega in WeightFunction::named() {
        for n in 1..=256usize {
            let row = summation_row(&omega, n).map_err(|e| e.to_string())?;
            let sum: f64 = row.weights().iter().sum();
            if (sum - n as f64).abs() > 1e-9 {
                return Err(format!("{} row sum {sum} at N={n}", omega.name()));
            }
            if row.weights().iter().any(|&s| !(0.0..=6.0).contains(&s)) {
                return Err(format!("{} entry out of [0, 6] at N={n}", omega.name()));
            }
        }
    }
    let fallback = summation_row(&WeightFunction::Exp, 1).map_err(|e| e.to_string())?;
    if fallback.weights() != [1.0] {
        return Err("exp weight fallback did not trigger at N=1".into());
    }
    Ok(())
}

fn w1_oracle_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let n = rng.gen_range(1..=10);
        let m = rng.gen_range(1..=10);
        let mk = |count: usize, rng: &mut ChaCha8Rng| {
            let values: Vec<f64> = (0..count).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            EmpiricalMeasure::new_scalar(values, raw.iter().map(|w| w / total).collect())
                .unwrap()
        };
        let mu = mk(n, &mut rng);
        let nu = mk(m, &mut rng);
        let cdf = w1_scalar(&mu, &nu).map_err(|e| e.to_string())?;
        let ot = w1_general(&mu, &nu, DEFAULT_ATOM_CAP).map_err(|e| e.to_string())?;
        if (cdf - ot).abs() > 1e-10 * (1.0 + cdf) {
            return Err(format!("transport {ot} vs cdf {cdf}"));
        }
    }
    Ok(())
}

fn overlap_metric_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    for _ in 0..20 {
        let ka = *[2usize, 3, 4, 6].get(rng.gen_range(0..4)).unwrap();
        let kb = *[2usize, 3, 5, 8].get(rng.gen_range(0..4)).unwrap();
        let a = rand_field(Mesh::square(ka).unwrap(), &mut rng);
        let b = rand_field(Mesh::square(kb).unwrap(), &mut rng);
        let ab = overlap_integrate_l1(&a, &b).map_err(|e| e.to_string())?;
        let ba = overlap_integrate_l1(&b, &a).map_err(|e| e.to_string())?;
        if (ab - ba).abs() > 1e-13 {
            return Err(format!("asymmetry {ab} vs {ba}"));
        }
        let c = rand_field(Mesh::square(4).unwrap(), &mut rng);
        let ac = overlap_integrate_l1(&a, &c).map_err(|e| e.to_string())?;
        let cb = overlap_integrate_l1(&c, &b).map_err(|e| e.to_string())?;
        if ab > ac + cb + 1e-12 {
            return Err(format!("triangle violation {ab} > {ac} + {cb}"));
        }
    }
    Ok(())
}

fn restrict_conservation_check() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..20 {
        let f = rand_field(Mesh::square(12).unwrap(), &mut rng);
        for kt in [5usize, 7, 24] {
            let r = restrict_to(&f, Mesh::square(kt).unwrap());
            let drift = (r.integral() - f.integral()).abs();
            if drift > 1e-12 * (1.0 + f.integral().abs()) {
                return Err(format!("integral drift {drift:.3e} restricting to k={kt}"));
            }
        }
    }
    Ok(())
}

/// Runs every embedded invariant, printing one line per property.
/// Returns the number of failures.
pub fn cmd_selftest() -> usize {
    let checks: Vec<(&str, Box<dyn Fn() -> Check>)> = vec![
        ("grid.overlap_symmetry_triangle", Box::new(overlap_metric_check)),
        ("grid.restrict_preserves_integral", Box::new(restrict_conservation_check)),
        ("ops.telescoping_central_and_upwind", Box::new(telescoping_div_check)),
        (
            "ops.telescoping_face_assembly",
            Box::new(|| telescoping_upwind_check(Mutation::None)),
        ),
        ("ops.grad_div_duality", Box::new(duality_check)),
        ("ops.gradient_consistency_order", Box::new(gradient_consistency_check)),
        ("scheme.mass_conservation", Box::new(conservation_check)),
        ("scheme.energy_inequality", Box::new(energy_check)),
        ("summation.regularity_axioms", Box::new(summation_check)),
        ("measure.w1_transport_vs_cdf", Box::new(w1_oracle_check)),
    ];
    let mut failures = 0;
    for (name, check) in checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(msg) => {
                println!("FAIL {name}: {msg}");
                failures += 1;
            }
        }
    }
    failures
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mutated_flux_breaks_telescoping() {
        assert!(telescoping_upwind_check(Mutation::None).is_ok());
        assert!(telescoping_upwind_check(Mutation::FlipOutwardSign).is_err());
    }
}
