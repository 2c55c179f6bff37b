//! The viscosity finite volume time stepper for the barotropic Euler system
//! with vanishing artificial viscosity,
//!
//!   D_t ϱ + div_up(ϱ, u) = 0
//!   D_t (ϱu) + div_up(ϱu, u) + grad_h p = μ(h) laplace_h u + ν(h) grad_h div_h u
//!
//! with pressure p = a ϱ^γ, shear viscosity μ(h) = c_μ h^α, and bulk
//! viscosity ν(h) = μ(h)/3 (zero extra bulk part, the Stokes relation).
//!
//! Time discretization is backward Euler with Δt = c_Δ h. The implicit system
//! is solved by Picard iteration: the advecting velocity and the viscosity
//! arguments are frozen at the previous iterate, which makes the mass update
//! and then the momentum update linear transport systems sharing one matrix;
//! these are solved by Gauss-Seidel sweeps (the matrix is strictly diagonally
//! dominant for the step sizes used here). The accepted state is written in
//! flux form, so the cell sums telescope and mass is conserved to rounding,
//! not merely to the nonlinear tolerance. The iteration stops when the
//! max-norm residual of both discrete equations falls below `picard_tol`.
//!
//! An explicit forward-Euler mode is provided for speed. Mass conservation
//! holds in both modes; positivity and the discrete energy inequality are
//! guaranteed properties of the implicit mode only and are merely monitored
//! in explicit mode.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::grid::{for_each_cell_neighbors, Mesh, ScalarField, VectorField};
use crate::math;
use crate::ops::{self, FluxParams};

/// Time level at which the spatial terms are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeMode {
    /// Backward Euler, solved by Picard iteration. Default.
    Implicit,
    /// Forward Euler under a CFL restriction.
    Explicit,
}

/// Physical and numerical parameters of the scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeParams {
    /// Adiabatic exponent γ > 1.
    pub gamma: f64,
    /// Pressure coefficient a in p = a ϱ^γ.
    pub a: f64,
    /// Viscosity exponent α in μ(h) = c_μ h^α.
    pub alpha: f64,
    /// Flux-diffusion exponent ε > −1.
    pub eps: f64,
    /// Shear-viscosity prefactor c_μ.
    pub c_mu: f64,
    /// Courant number for the explicit mode.
    pub cfl: f64,
    /// Time-step ratio c_Δ in Δt = c_Δ h.
    pub dt_ratio: f64,
    pub mode: TimeMode,
    /// Max-norm residual at which the Picard iteration stops.
    pub picard_tol: f64,
    /// Iteration cap for the Picard loop.
    pub picard_max: usize,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            gamma: 1.4,
            a: 1.0,
            alpha: 0.9,
            eps: 0.5,
            c_mu: 1.0,
            cfl: 0.4,
            dt_ratio: 0.1,
            mode: TimeMode::Implicit,
            picard_tol: 1e-10,
            picard_max: 200,
        }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<(), CoreError> {
        let bad = |msg: &str| Err(CoreError::InvalidParameter(msg.into()));
        if !(self.gamma > 1.0) {
            return bad("gamma must exceed 1");
        }
        if !(self.a > 0.0) {
            return bad("pressure coefficient must be positive");
        }
        if !(self.alpha > 0.0) {
            return bad("viscosity exponent must be positive");
        }
        if !(self.eps > -1.0) {
            return bad("flux exponent must exceed -1");
        }
        if !(self.c_mu > 0.0) {
            return bad("viscosity prefactor must be positive");
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("Courant number must lie in (0,1]");
        }
        if !(self.dt_ratio > 0.0) {
            return bad("time-step ratio must be positive");
        }
        if !(self.picard_tol > 0.0) {
            return bad("Picard tolerance must be positive");
        }
        if self.picard_max == 0 {
            return bad("Picard iteration cap must be at least 1");
        }
        Ok(())
    }

    /// Largest viscosity exponent for which the vanishing-viscosity limit
    /// theory applies in dimension `dim`.
    pub fn euler_limit_alpha_bound(&self, dim: usize) -> f64 {
        let d = dim as f64;
        if self.gamma >= 2.0 {
            2.0 - d / self.gamma
        } else {
            2.0 - (d / 3.0 + 1.0 + self.eps) / self.gamma
        }
    }

    /// Non-fatal parameter warnings (the Euler-limit exponent constraint is a
    /// warning, not an error).
    pub fn warnings(&self, dim: usize) -> Vec<String> {
        let mut out = Vec::new();
        let bound = self.euler_limit_alpha_bound(dim);
        if self.alpha >= bound {
            out.push(alloc::format!(
                "viscosity exponent alpha = {} is outside the vanishing-viscosity range (0, {:.4}) for gamma = {}, d = {dim}, eps = {}",
                self.alpha, bound, self.gamma, self.eps
            ));
        }
        out
    }
}

/// Artificial viscosity pair (μ, ν) at mesh width h: μ = c_μ h^α, ν = μ/3.
pub fn viscosity(h: f64, params: &SchemeParams) -> (f64, f64) {
    let mu = params.c_mu * math::powf(h, params.alpha);
    (mu, mu / 3.0)
}

/// Discrete pressure p = a ϱ^γ. Density must be positive cellwise.
pub fn pressure(rho: &ScalarField, params: &SchemeParams) -> Result<ScalarField, CoreError> {
    let mut out = vec![0.0f64; rho.mesh().cell_count()];
    for (cell, (&r, o)) in rho.values().iter().zip(&mut out).enumerate() {
        if !(r > 0.0) {
            return Err(CoreError::NonPositiveDensity { cell, value: r });
        }
        *o = params.a * math::powf(r, params.gamma);
    }
    Ok(ScalarField::from_values_unchecked(rho.mesh(), out))
}

/// Density and momentum at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    rho: ScalarField,
    mom: VectorField,
    time: f64,
}

impl State {
    /// Checks positivity of the density and finiteness of both fields.
    pub fn new(rho: ScalarField, mom: VectorField, time: f64) -> Result<Self, CoreError> {
        if rho.mesh() != mom.mesh() {
            return Err(CoreError::MeshMismatch {
                expected_k: rho.mesh().k(),
                got_k: mom.mesh().k(),
            });
        }
        for (cell, &r) in rho.values().iter().enumerate() {
            if !(r > 0.0) {
                return Err(CoreError::NonPositiveDensity { cell, value: r });
            }
        }
        if !mom.all_finite() {
            return Err(CoreError::InvalidParameter("momentum must be finite".into()));
        }
        Ok(State { rho, mom, time })
    }

    pub fn mesh(&self) -> Mesh {
        self.rho.mesh()
    }

    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    pub fn momentum(&self) -> &VectorField {
        &self.mom
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Velocity u = m/ϱ.
    pub fn velocity(&self) -> VectorField {
        let mesh = self.mesh();
        let mut u = VectorField::zeros(mesh);
        for axis in 0..mesh.dim() {
            let m = self.mom.component(axis);
            let comp = u.component_mut(axis);
            for (i, c) in comp.iter_mut().enumerate() {
                *c = m[i] / self.rho.values()[i];
            }
        }
        u
    }

    /// Total mass ∫ ϱ.
    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }

    pub fn min_density(&self) -> f64 {
        self.rho.min()
    }
}

/// Discrete total energy Σ_K |K| ( ½|m|²/ϱ + a ϱ^γ/(γ−1) ).
pub fn total_energy(state: &State, params: &SchemeParams) -> f64 {
    let mesh = state.mesh();
    let vol = mesh.cell_volume();
    let pot = params.a / (params.gamma - 1.0);
    let rho = state.rho().values();
    let mut sum = 0.0;
    for cell in 0..mesh.cell_count() {
        let mut m2 = 0.0;
        for axis in 0..mesh.dim() {
            let m = state.momentum().component(axis)[cell];
            m2 += m * m;
        }
        sum += 0.5 * m2 / rho[cell] + pot * math::powf(rho[cell], params.gamma);
    }
    sum * vol
}

/// Per-step accounting of the structure-preserving quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// ∫ ϱ after the step.
    pub mass: f64,
    /// Total energy after the step.
    pub energy: f64,
    /// μ‖grad_faces u‖² + ν‖div_h u‖² at the new state.
    pub dissipation: f64,
    /// (E_new − E_old)/Δt + dissipation; nonpositive up to solver tolerance
    /// in implicit mode.
    pub energy_residual: f64,
    pub dt: f64,
    pub picard_iterations: usize,
    /// Final max-norm residual of the discrete equations (implicit mode).
    pub max_residual: f64,
    pub min_density: f64,
}

impl StepReport {
    pub fn all_finite(&self) -> bool {
        [
            self.mass,
            self.energy,
            self.dissipation,
            self.energy_residual,
            self.dt,
            self.max_residual,
            self.min_density,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Shear-viscosity block of the momentum solve: coefficient μ/h² and the
/// reciprocal density turning momentum into velocity, so the operator stays
/// linear in the momentum once the new density is known.
#[derive(Clone, Copy)]
struct ViscousPart<'a> {
    mu_h2: f64,
    inv_rho: &'a [f64],
}

/// Frozen-velocity upwind transport operator: the matrix applied to a scalar
/// field by the implicit mass and momentum updates within one Picard sweep.
/// For momentum solves it carries the −μ laplace_h(·/ϱ) block as well; the
/// much smaller bulk term ν grad_h div_h u stays at the previous iterate.
struct TransportOperator {
    mesh: Mesh,
    /// per axis, per in-cell: face velocity ⟨u⟩·n
    face_a: Vec<Vec<f64>>,
    /// per axis, per in-cell: total face diffusion h^ε + ½|⟨u⟩·n|
    face_d: Vec<Vec<f64>>,
}

impl TransportOperator {
    fn assemble(u: &VectorField, fp: &FluxParams) -> Self {
        let mesh = u.mesh();
        let n = mesh.cell_count();
        let diff = fp.diffusion();
        let mut face_a = Vec::with_capacity(mesh.dim());
        let mut face_d = Vec::with_capacity(mesh.dim());
        for axis in 0..mesh.dim() {
            let uc = u.component(axis);
            let mut a = vec![0.0f64; n];
            let mut d = vec![0.0f64; n];
            for_each_cell_neighbors(&mesh, |cell, nbrs| {
                let (_, plus) = nbrs[axis];
                let av = 0.5 * (uc[cell] + uc[plus]);
                a[cell] = av;
                d[cell] = diff + 0.5 * math::abs(av);
            });
            face_a.push(a);
            face_d.push(d);
        }
        TransportOperator { mesh, face_a, face_d }
    }

    /// out += scale · M r where M = A (upwind divergence) plus, if present,
    /// −μ laplace_h(r/ϱ). Both parts are accumulated per face so cell sums
    /// telescope exactly.
    fn accumulate_apply(&self, r: &[f64], scale: f64, visc: Option<ViscousPart>, out: &mut [f64]) {
        let inv_h = scale / self.mesh.h();
        for axis in 0..self.mesh.dim() {
            let a = &self.face_a[axis];
            let d = &self.face_d[axis];
            for_each_cell_neighbors(&self.mesh, |cell, nbrs| {
                let (_, plus) = nbrs[axis];
                let f = (0.5 * (r[cell] + r[plus]) * a[cell] - d[cell] * (r[plus] - r[cell]))
                    * inv_h;
                out[cell] += f;
                out[plus] -= f;
            });
        }
        if let Some(v) = visc {
            let c = scale * v.mu_h2;
            for axis in 0..self.mesh.dim() {
                for_each_cell_neighbors(&self.mesh, |cell, nbrs| {
                    let (_, plus) = nbrs[axis];
                    let jump = r[plus] * v.inv_rho[plus] - r[cell] * v.inv_rho[cell];
                    // −μ Δ contributes −jump to the cell, +jump to the neighbor
                    out[cell] -= c * jump;
                    out[plus] += c * jump;
                });
            }
        }
    }

    /// Diagonal of I/Δt + M; strictly positive since the face diffusion
    /// dominates half the face velocity and the viscous block is an M-matrix.
    fn diagonal(&self, dt: f64, visc: Option<ViscousPart>) -> Vec<f64> {
        let mesh = self.mesh;
        let inv_h = 1.0 / mesh.h();
        let mut diag = vec![1.0 / dt; mesh.cell_count()];
        for axis in 0..mesh.dim() {
            let a = &self.face_a[axis];
            let d = &self.face_d[axis];
            for_each_cell_neighbors(&mesh, |cell, nbrs| {
                let (minus, _) = nbrs[axis];
                // own plus-face: coefficient of r_K in +F_plus is a/2 + d
                diag[cell] += (0.5 * a[cell] + d[cell]) * inv_h;
                // own minus-face: coefficient of r_K in −F_minus is d − a/2
                diag[cell] += (d[minus] - 0.5 * a[minus]) * inv_h;
            });
        }
        if let Some(v) = visc {
            let two_d = 2.0 * mesh.dim() as f64;
            for (cell, dg) in diag.iter_mut().enumerate() {
                *dg += v.mu_h2 * two_d * v.inv_rho[cell];
            }
        }
        diag
    }

    /// Gauss-Seidel sweeps for (I/Δt + M) x = rhs, warm-started from `x`.
    /// Errors out when the residual has not reached `tol` within the budget.
    fn gauss_seidel(
        &self,
        dt: f64,
        rhs: &[f64],
        x: &mut [f64],
        diag: &[f64],
        visc: Option<ViscousPart>,
        tol: f64,
        max_sweeps: usize,
    ) -> Result<usize, CoreError> {
        let mesh = self.mesh;
        let inv_h = 1.0 / mesh.h();
        let inv_dt = 1.0 / dt;
        let dim = mesh.dim();
        for sweep in 1..=max_sweeps {
            let mut max_res = 0.0f64;
            for_each_cell_neighbors(&mesh, |cell, nbrs| {
                // (I/dt + M) x at this cell with current neighbor values
                let mut ax = x[cell] * inv_dt;
                for axis in 0..dim {
                    let (minus, plus) = nbrs[axis];
                    let f_plus = 0.5 * (x[cell] + x[plus]) * self.face_a[axis][cell]
                        - self.face_d[axis][cell] * (x[plus] - x[cell]);
                    let f_minus = 0.5 * (x[minus] + x[cell]) * self.face_a[axis][minus]
                        - self.face_d[axis][minus] * (x[cell] - x[minus]);
                    ax += (f_plus - f_minus) * inv_h;
                }
                if let Some(v) = visc {
                    let own = x[cell] * v.inv_rho[cell];
                    let mut lap = 0.0;
                    for axis in 0..dim {
                        let (minus, plus) = nbrs[axis];
                        lap += x[minus] * v.inv_rho[minus] + x[plus] * v.inv_rho[plus]
                            - 2.0 * own;
                    }
                    ax -= v.mu_h2 * lap;
                }
                let res = rhs[cell] - ax;
                max_res = max_res.max(math::abs(res));
                x[cell] += res / diag[cell];
            });
            if max_res <= tol {
                return Ok(sweep);
            }
            if sweep == max_sweeps {
                return Err(CoreError::LinearSolveDiverged {
                    residual: max_res,
                    sweeps: sweep,
                });
            }
        }
        unreachable!()
    }
}

/// Spatial right-hand sides at a given state: mass rate −div_up(ϱ, u) and
/// momentum rate −div_up(m, u) − grad_h p + μ laplace_h u + ν grad_h div_h u.
fn rates(
    rho: &ScalarField,
    mom: &VectorField,
    u: &VectorField,
    params: &SchemeParams,
    fp: &FluxParams,
    mu: f64,
    nu: f64,
) -> Result<(Vec<f64>, Vec<Vec<f64>>), CoreError> {
    let mesh = rho.mesh();
    let n = mesh.cell_count();
    let mut mass_rate = vec![0.0f64; n];
    ops::accumulate_div_upwind(rho.values(), u, fp, -1.0, &mut mass_rate);

    let p = pressure(rho, params)?;
    let grad_p = ops::grad_h(&p);
    let div_u = ops::div_h(u);
    let grad_div_u = ops::grad_h(&div_u);

    let mut mom_rate = Vec::with_capacity(mesh.dim());
    for axis in 0..mesh.dim() {
        let mut rate = vec![0.0f64; n];
        ops::accumulate_div_upwind(mom.component(axis), u, fp, -1.0, &mut rate);
        let lap = ops::laplace_h(&u.component_field(axis));
        let gp = grad_p.component(axis);
        let gd = grad_div_u.component(axis);
        for cell in 0..n {
            rate[cell] += -gp[cell] + mu * lap.values()[cell] + nu * gd[cell];
        }
        mom_rate.push(rate);
    }
    Ok((mass_rate, mom_rate))
}

/// μ‖grad_faces u‖² + ν‖div_h u‖² at the given velocity.
fn dissipation(u: &VectorField, mu: f64, nu: f64) -> f64 {
    mu * ops::grad_faces_norm_sq(u) + nu * ops::div_norm_sq(u)
}

/// Sound-speed-based wave speed estimate max(‖u‖) + sqrt(γ a ϱ_max^{γ−1}).
pub fn wave_speed(state: &State, params: &SchemeParams) -> f64 {
    let mesh = state.mesh();
    let mut max_u: f64 = 0.0;
    for cell in 0..mesh.cell_count() {
        let mut sq = 0.0;
        for axis in 0..mesh.dim() {
            let ui = state.momentum().component(axis)[cell] / state.rho().values()[cell];
            sq += ui * ui;
        }
        max_u = max_u.max(sq);
    }
    let rho_max = state.rho().max();
    let c = math::sqrt(params.gamma * params.a * math::powf(rho_max, params.gamma - 1.0));
    math::sqrt(max_u) + c
}

/// Time step the scheme would take from this state: Δt = c_Δ h, reduced in
/// explicit mode to satisfy the CFL bound Δt (max|u| + c)/h ≤ cfl.
pub fn stable_dt(state: &State, params: &SchemeParams) -> f64 {
    let h = state.mesh().h();
    let dt = params.dt_ratio * h;
    match params.mode {
        TimeMode::Implicit => dt,
        TimeMode::Explicit => {
            let speed = wave_speed(state, params);
            if speed > 0.0 {
                dt.min(params.cfl * h / speed)
            } else {
                dt
            }
        }
    }
}

/// One step of size `stable_dt`.
pub fn step(state: &State, params: &SchemeParams) -> Result<(State, StepReport), CoreError> {
    step_dt(state, params, stable_dt(state, params))
}

/// One step of prescribed size.
pub fn step_dt(
    state: &State,
    params: &SchemeParams,
    dt: f64,
) -> Result<(State, StepReport), CoreError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CoreError::InvalidParameter("time step must be positive".into()));
    }
    let mesh = state.mesh();
    let h = mesh.h();
    let (mu, nu) = viscosity(h, params);
    let fp = FluxParams::new(params.eps, h)?;
    let energy_old = total_energy(state, params);

    let (new_state, iterations, max_residual) = match params.mode {
        TimeMode::Explicit => (explicit_update(state, params, &fp, mu, nu, dt)?, 0, 0.0),
        TimeMode::Implicit => implicit_update(state, params, &fp, mu, nu, dt)?,
    };

    let min_density = new_state.min_density();
    if !(min_density > 0.0) {
        let cell = new_state
            .rho()
            .values()
            .iter()
            .position(|&r| !(r > 0.0))
            .unwrap_or(0);
        return Err(CoreError::NonPositiveDensity {
            cell,
            value: new_state.rho().values()[cell],
        });
    }
    if !new_state.rho.all_finite() || !new_state.mom.all_finite() {
        return Err(CoreError::InvalidParameter(
            "state became non-finite during the step".into(),
        ));
    }

    let u_new = new_state.velocity();
    let diss = dissipation(&u_new, mu, nu);
    let energy = total_energy(&new_state, params);
    let report = StepReport {
        mass: new_state.mass(),
        energy,
        dissipation: diss,
        energy_residual: (energy - energy_old) / dt + diss,
        dt,
        picard_iterations: iterations,
        max_residual,
        min_density,
    };
    Ok((new_state, report))
}

fn explicit_update(
    state: &State,
    params: &SchemeParams,
    fp: &FluxParams,
    mu: f64,
    nu: f64,
    dt: f64,
) -> Result<State, CoreError> {
    let mesh = state.mesh();
    let u = state.velocity();
    let (mass_rate, mom_rate) = rates(&state.rho, &state.mom, &u, params, fp, mu, nu)?;
    let mut rho = state.rho.clone();
    for (r, rate) in rho.values_mut().iter_mut().zip(&mass_rate) {
        *r += dt * rate;
    }
    let mut mom = state.mom.clone();
    for axis in 0..mesh.dim() {
        for (m, rate) in mom.component_mut(axis).iter_mut().zip(&mom_rate[axis]) {
            *m += dt * rate;
        }
    }
    Ok(State {
        rho,
        mom,
        time: state.time + dt,
    })
}

fn implicit_update(
    state: &State,
    params: &SchemeParams,
    fp: &FluxParams,
    mu: f64,
    nu: f64,
    dt: f64,
) -> Result<(State, usize, f64), CoreError> {
    let mesh = state.mesh();
    let n = mesh.cell_count();
    let dim = mesh.dim();
    let inv_dt = 1.0 / dt;
    let lin_tol = 0.05 * params.picard_tol;
    const MAX_SWEEPS: usize = 2000;

    let rho_old = state.rho.values();
    let mut rho_iter = state.rho.clone();
    let mut mom_iter = state.mom.clone();

    let mass_rhs: Vec<f64> = rho_old.iter().map(|r| r * inv_dt).collect();

    let mut last_residual = f64::INFINITY;
    for iteration in 1..=params.picard_max {
        // velocity of the previous iterate drives advection and viscosity
        if rho_iter.min() <= 0.0 {
            let cell = rho_iter.values().iter().position(|&r| !(r > 0.0)).unwrap_or(0);
            return Err(CoreError::NonPositiveDensity {
                cell,
                value: rho_iter.values()[cell],
            });
        }
        let mut u_frozen = VectorField::zeros(mesh);
        for axis in 0..dim {
            let m = mom_iter.component(axis);
            let comp = u_frozen.component_mut(axis);
            for i in 0..n {
                comp[i] = m[i] / rho_iter.values()[i];
            }
        }
        let op = TransportOperator::assemble(&u_frozen, fp);
        let diag = op.diagonal(dt, None);

        // linear mass update, then flux-form synchronization so that the
        // accepted density telescopes exactly
        let mut rho_solved = rho_iter.values().to_vec();
        op.gauss_seidel(dt, &mass_rhs, &mut rho_solved, &diag, None, lin_tol, MAX_SWEEPS)?;
        let mut rho_next = rho_old.to_vec();
        op.accumulate_apply(&rho_solved, -dt, None, &mut rho_next);
        let rho_next = ScalarField::from_values_unchecked(mesh, rho_next);
        if rho_next.min() <= 0.0 {
            let cell = rho_next.values().iter().position(|&r| !(r > 0.0)).unwrap_or(0);
            return Err(CoreError::NonPositiveDensity {
                cell,
                value: rho_next.values()[cell],
            });
        }

        // momentum: frozen advection matrix, pressure at the new density,
        // shear viscosity implicit through the viscous block, bulk term at
        // the frozen velocity
        let inv_rho: Vec<f64> = rho_next.values().iter().map(|r| 1.0 / r).collect();
        let visc = ViscousPart {
            mu_h2: mu / (mesh.h() * mesh.h()),
            inv_rho: &inv_rho,
        };
        let diag_mom = op.diagonal(dt, Some(visc));
        let p = pressure(&rho_next, params)?;
        let grad_p = ops::grad_h(&p);
        let div_u = ops::div_h(&u_frozen);
        let grad_div_u = ops::grad_h(&div_u);
        let mut mom_next = VectorField::zeros(mesh);
        for axis in 0..dim {
            let m_old = state.mom.component(axis);
            let gp = grad_p.component(axis);
            let gd = grad_div_u.component(axis);
            let mut rhs = vec![0.0f64; n];
            for i in 0..n {
                rhs[i] = m_old[i] * inv_dt - gp[i] + nu * gd[i];
            }
            let mut m_solved = mom_iter.component(axis).to_vec();
            op.gauss_seidel(
                dt,
                &rhs,
                &mut m_solved,
                &diag_mom,
                Some(visc),
                lin_tol,
                MAX_SWEEPS,
            )?;
            // flux-form synchronization of the momentum component
            let comp = mom_next.component_mut(axis);
            for i in 0..n {
                comp[i] = m_old[i] + dt * (-gp[i] + nu * gd[i]);
            }
            op.accumulate_apply(&m_solved, -dt, Some(visc), comp);
        }

        // full nonlinear residual at the synchronized iterate
        let mut u_next = VectorField::zeros(mesh);
        for axis in 0..dim {
            let m = mom_next.component(axis);
            let comp = u_next.component_mut(axis);
            for i in 0..n {
                comp[i] = m[i] / rho_next.values()[i];
            }
        }
        let (mass_rate, mom_rate) = rates(&rho_next, &mom_next, &u_next, params, fp, mu, nu)?;
        let mut res = 0.0f64;
        for i in 0..n {
            res = res.max(math::abs((rho_next.values()[i] - rho_old[i]) * inv_dt - mass_rate[i]));
        }
        for axis in 0..dim {
            let m_old = state.mom.component(axis);
            let m_new = mom_next.component(axis);
            for i in 0..n {
                res = res.max(math::abs((m_new[i] - m_old[i]) * inv_dt - mom_rate[axis][i]));
            }
        }

        rho_iter = rho_next;
        mom_iter = mom_next;
        last_residual = res;
        if res <= params.picard_tol {
            return Ok((
                State {
                    rho: rho_iter,
                    mom: mom_iter,
                    time: state.time + dt,
                },
                iteration,
                res,
            ));
        }
    }
    Err(CoreError::PicardDiverged {
        residual: last_residual,
        iterations: params.picard_max,
    })
}

/// Saved state snapshot.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub time: f64,
    pub step: usize,
    pub state: State,
}

/// What a run records beyond the final state.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Times at which to snapshot the trajectory (piecewise-constant in time:
    /// the snapshot at `t` is the last computed state whose interval covers
    /// `t`).
    pub save_times: Vec<f64>,
    /// Additionally snapshot every n-th step (0 disables).
    pub save_every_steps: usize,
    /// Keep the density field of every time interval; memory heavy, needed
    /// only for post-hoc concentration queries at arbitrary thresholds.
    pub store_density_history: bool,
    /// Thresholds for which concentration volumes are accumulated while the
    /// run streams, O(1) memory each.
    pub density_thresholds: Vec<f64>,
}

/// Result of advancing a state to a final time.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub initial_mass: f64,
    pub initial_energy: f64,
    pub final_state: State,
    pub reports: Vec<StepReport>,
    pub checkpoints: Vec<Checkpoint>,
    t_final: f64,
    /// (dt, density at interval start) per time interval
    history: Option<Vec<(f64, ScalarField)>>,
    /// per tracked threshold: (threshold, space-time cell count, volume)
    threshold_counts: Vec<(f64, u64, f64)>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.reports.len()
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    /// Total mass drift over the run relative to the initial mass.
    pub fn mass_drift_rel(&self) -> f64 {
        let m0 = self.initial_mass;
        self.reports
            .iter()
            .fold(0.0f64, |acc, r| acc.max(math::abs(r.mass - m0)))
            / math::abs(m0)
    }

    pub fn min_density(&self) -> f64 {
        self.reports
            .iter()
            .fold(f64::INFINITY, |acc, r| acc.min(r.min_density))
    }

    /// Largest per-step violation of the energy inequality.
    pub fn max_energy_residual(&self) -> f64 {
        self.reports
            .iter()
            .fold(f64::NEG_INFINITY, |acc, r| acc.max(r.energy_residual))
    }
}

/// Advances `initial` to time `t_final`; the last step is clipped to land on
/// `t_final` exactly.
pub fn run(
    initial: &State,
    params: &SchemeParams,
    t_final: f64,
    options: &RunOptions,
) -> Result<Trajectory, CoreError> {
    run_with(initial, params, t_final, options, |_, _| {})
}

/// As [`run`], invoking `on_step` after every accepted step.
pub fn run_with<F>(
    initial: &State,
    params: &SchemeParams,
    t_final: f64,
    options: &RunOptions,
    mut on_step: F,
) -> Result<Trajectory, CoreError>
where
    F: FnMut(&State, &StepReport),
{
    params.validate()?;
    if !(t_final > initial.time) {
        return Err(CoreError::InvalidParameter(
            "final time must exceed the initial time".into(),
        ));
    }
    let mesh = initial.mesh();
    let cell_vol = mesh.cell_volume();
    let mut state = initial.clone();
    let mut reports = Vec::new();
    let mut checkpoints = Vec::new();
    let mut history = options.store_density_history.then(Vec::new);
    let mut threshold_counts: Vec<(f64, u64, f64)> = options
        .density_thresholds
        .iter()
        .map(|&t| (t, 0u64, 0.0))
        .collect();

    let initial_mass = state.mass();
    let initial_energy = total_energy(&state, params);
    let budget = ((t_final - initial.time) / (params.dt_ratio * mesh.h()) * 20.0) as usize + 1000;
    let time_tol = 1e-12 * t_final.max(1.0);

    let mut step_idx = 0usize;
    let mut save_iter = {
        let mut times = options.save_times.clone();
        times.sort_by(f64::total_cmp);
        times
    };
    save_iter.dedup();
    let mut next_save = 0usize;

    while state.time < t_final - time_tol {
        let dt = stable_dt(&state, params).min(t_final - state.time);
        // the interval (time, time+dt] carries the pre-step state
        for entry in &mut threshold_counts {
            let count = state
                .rho()
                .values()
                .iter()
                .filter(|&&r| r >= entry.0)
                .count() as u64;
            entry.1 += count;
            entry.2 += count as f64 * cell_vol * dt;
        }
        if let Some(h) = &mut history {
            h.push((dt, state.rho().clone()));
        }
        let (next, report) = step_dt(&state, params, dt)?;
        if !report.all_finite() {
            return Err(CoreError::InvalidParameter(
                "step report became non-finite".into(),
            ));
        }
        state = next;
        step_idx += 1;
        if state.time >= t_final - time_tol {
            state.time = t_final;
        }
        on_step(&state, &report);
        reports.push(report);

        while next_save < save_iter.len() && save_iter[next_save] <= state.time + time_tol {
            checkpoints.push(Checkpoint {
                time: save_iter[next_save],
                step: step_idx,
                state: state.clone(),
            });
            next_save += 1;
        }
        if options.save_every_steps != 0 && step_idx % options.save_every_steps == 0 {
            checkpoints.push(Checkpoint {
                time: state.time,
                step: step_idx,
                state: state.clone(),
            });
        }
        if step_idx > budget {
            return Err(CoreError::InvalidParameter(
                "step budget exceeded; time step collapsed".into(),
            ));
        }
    }

    Ok(Trajectory {
        initial_mass,
        initial_energy,
        final_state: state,
        reports,
        checkpoints,
        t_final,
        history,
        threshold_counts,
    })
}

/// Concentration diagnostic for a density threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConcentrationReport {
    /// Number of space-time cells with ϱ ≥ threshold.
    pub count: u64,
    /// count · h^{d+1}, the mesh-scaled quantity whose decay signals absence
    /// of concentrations.
    pub count_scaled: f64,
    /// Exact space-time volume Σ Δt h^d · count per interval.
    pub spacetime_volume: f64,
    /// Volume divided by the total space-time volume T·1.
    pub fraction: f64,
}

/// Fraction of space-time volume on which the density reaches `rho_bar`.
/// Uses the streamed counters when `rho_bar` was registered up front, the
/// stored density history otherwise.
pub fn concentration_fraction(
    trajectory: &Trajectory,
    rho_bar: f64,
) -> Result<ConcentrationReport, CoreError> {
    assert!(rho_bar > 0.0, "threshold must be positive");
    let mesh = trajectory.final_state.mesh();
    let cell_vol = mesh.cell_volume();
    let h = mesh.h();
    let total_time = trajectory.t_final;
    if let Some(&(_, count, volume)) = trajectory
        .threshold_counts
        .iter()
        .find(|(t, _, _)| *t == rho_bar)
    {
        return Ok(ConcentrationReport {
            count,
            count_scaled: count as f64 * cell_vol * h,
            spacetime_volume: volume,
            fraction: volume / total_time,
        });
    }
    let Some(history) = &trajectory.history else {
        return Err(CoreError::NoDensityHistory);
    };
    let mut count = 0u64;
    let mut volume = 0.0;
    for (dt, rho) in history {
        let c = rho.values().iter().filter(|&&r| r >= rho_bar).count() as u64;
        count += c;
        volume += c as f64 * cell_vol * dt;
    }
    Ok(ConcentrationReport {
        count,
        count_scaled: count as f64 * cell_vol * h,
        spacetime_volume: volume,
        fraction: volume / total_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::project;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn uniform_state(mesh: Mesh, rho0: f64, u0: &[f64]) -> State {
        let rho = ScalarField::constant(mesh, rho0);
        let mom: Vec<f64> = u0.iter().map(|&u| rho0 * u).collect();
        State::new(rho, VectorField::constant(mesh, &mom), 0.0).unwrap()
    }

    fn smooth_state(mesh: Mesh, seed: u64) -> State {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let modes: Vec<(f64, f64, f64)> = (0..3)
            .map(|_| {
                (
                    rng.gen_range(0.05..0.2),
                    rng.gen_range(0.0..2.0 * PI),
                    rng.gen_range(1.0..3.0) as usize as f64,
                )
            })
            .collect();
        let rho = project(
            |x: &[f64]| {
                1.0 + modes
                    .iter()
                    .map(|(a, b, n)| a * math::sin(2.0 * PI * n * x[0] + b) * math::cos(2.0 * PI * x[1]))
                    .sum::<f64>()
            },
            mesh,
            2,
        )
        .unwrap();
        let ux = project(|x: &[f64]| 0.2 * math::sin(2.0 * PI * x[1]), mesh, 2).unwrap();
        let uy = project(|x: &[f64]| -0.1 * math::cos(2.0 * PI * x[0]), mesh, 2).unwrap();
        let mut mom = VectorField::zeros(mesh);
        for (i, (r, (vx, vy))) in rho
            .values()
            .iter()
            .zip(ux.values().iter().zip(uy.values()))
            .enumerate()
        {
            mom.component_mut(0)[i] = r * vx;
            mom.component_mut(1)[i] = r * vy;
        }
        State::new(rho, mom, 0.0).unwrap()
    }

    #[test]
    fn pressure_examples() {
        let mesh = Mesh::square(2).unwrap();
        let p1 = pressure(
            &ScalarField::constant(mesh, 1.0),
            &SchemeParams {
                gamma: 1.4,
                a: 1.0,
                ..SchemeParams::default()
            },
        )
        .unwrap();
        assert!(p1.values().iter().all(|&v| v == 1.0));
        let p2 = pressure(
            &ScalarField::constant(mesh, 2.0),
            &SchemeParams {
                gamma: 2.0,
                a: 1.0,
                ..SchemeParams::default()
            },
        )
        .unwrap();
        assert!(p2.values().iter().all(|&v| v == 4.0));
        let p0 = pressure(
            &ScalarField::constant(mesh, 3.0),
            &SchemeParams {
                a: 0.0,
                ..SchemeParams::default()
            },
        )
        .unwrap();
        assert!(p0.values().iter().all(|&v| v == 0.0));

        let mut vals = vec![1.0; 4];
        vals[2] = -0.5;
        let bad = ScalarField::from_values(mesh, vals).unwrap();
        match pressure(&bad, &SchemeParams::default()) {
            Err(CoreError::NonPositiveDensity { cell: 2, .. }) => {}
            other => panic!("expected positivity error, got {other:?}"),
        }
    }

    #[test]
    fn energy_examples() {
        let mesh = Mesh::square(4).unwrap();
        let params = SchemeParams {
            gamma: 2.0,
            a: 1.0,
            ..SchemeParams::default()
        };
        let rest = uniform_state(mesh, 1.0, &[0.0, 0.0]);
        assert_relative_eq!(total_energy(&rest, &params), 1.0, max_relative = 1e-13);
        let dense = uniform_state(mesh, 2.0, &[0.0, 0.0]);
        assert_relative_eq!(total_energy(&dense, &params), 4.0, max_relative = 1e-13);
        assert!(total_energy(&smooth_state(mesh, 1), &params) >= 0.0);
    }

    #[test]
    fn viscosity_power_law() {
        let params = SchemeParams {
            c_mu: 1.0,
            alpha: 0.9,
            ..SchemeParams::default()
        };
        let (mu, nu) = viscosity(0.01, &params);
        assert_relative_eq!(mu, math::powf(10.0, -1.8), max_relative = 1e-13);
        assert_relative_eq!(nu / mu, 1.0 / 3.0, max_relative = 1e-15);
        let flat = SchemeParams {
            alpha: 1e-15,
            ..params
        };
        let (mu0, _) = viscosity(0.37, &flat);
        assert_relative_eq!(mu0, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn alpha_warning_matches_regime() {
        let params = SchemeParams::default(); // gamma = 1.4, eps = 0.5, alpha = 0.9
        let bound = params.euler_limit_alpha_bound(2);
        assert_relative_eq!(bound, 2.0 - (2.0 / 3.0 + 1.5) / 1.4, max_relative = 1e-13);
        assert_eq!(params.warnings(2).len(), 1);
        let gentle = SchemeParams {
            alpha: 0.3,
            ..params
        };
        assert!(gentle.warnings(2).is_empty());
    }

    #[test]
    fn uniform_states_are_steady_in_both_modes() {
        let mesh = Mesh::square(8).unwrap();
        for mode in [TimeMode::Implicit, TimeMode::Explicit] {
            let params = SchemeParams {
                mode,
                ..SchemeParams::default()
            };
            for state in [
                uniform_state(mesh, 1.5, &[0.0, 0.0]),
                uniform_state(mesh, 1.5, &[0.7, 0.0]),
            ] {
                let (next, report) = step(&state, &params).unwrap();
                assert_eq!(next.rho().values(), state.rho().values());
                for axis in 0..2 {
                    assert_eq!(
                        next.momentum().component(axis),
                        state.momentum().component(axis)
                    );
                }
                assert_eq!(report.dissipation, 0.0);
            }
        }
    }

    #[test]
    fn explicit_step_matches_brute_force_oracle() {
        // independent term-by-term evaluation on a hand-specified 4x4 state
        let mesh = Mesh::square(4).unwrap();
        let k = 4usize;
        let h = mesh.h();
        let params = SchemeParams {
            mode: TimeMode::Explicit,
            gamma: 1.4,
            a: 1.0,
            alpha: 0.9,
            eps: 0.5,
            c_mu: 1.0,
            ..SchemeParams::default()
        };
        let rho_vals: Vec<f64> = (0..16).map(|i| 1.0 + 0.05 * (i as f64)).collect();
        let mx: Vec<f64> = (0..16).map(|i| 0.3 * ((i % 5) as f64) - 0.6).collect();
        let my: Vec<f64> = (0..16).map(|i| 0.1 * ((i % 7) as f64) - 0.2).collect();
        let rho = ScalarField::from_values(mesh, rho_vals.clone()).unwrap();
        let mut mom = VectorField::zeros(mesh);
        mom.component_mut(0).copy_from_slice(&mx);
        mom.component_mut(1).copy_from_slice(&my);
        let state = State::new(rho, mom, 0.0).unwrap();
        let dt = 0.004;
        let (next, _) = step_dt(&state, &params, dt).unwrap();

        // oracle with its own index arithmetic
        let idx = |i: usize, j: usize| (i % k) * k + (j % k);
        let u = |c: usize, comp: &Vec<f64>| comp[c] / rho_vals[c];
        let (mu, nu) = viscosity(h, &params);
        let heps = h.powf(0.5);
        let flux = |rin: f64, rout: f64, a: f64| {
            0.5 * (rin + rout) * a - (heps + 0.5 * a.abs()) * (rout - rin)
        };
        for i in 0..k {
            for j in 0..k {
                let c = idx(i, j);
                let east = idx(i + 1, j);
                let west = idx(i + k - 1, j);
                let north = idx(i, j + 1);
                let south = idx(i, j + k - 1);
                // face velocities
                let a_e = 0.5 * (u(c, &mx) + u(east, &mx));
                let a_w = 0.5 * (u(west, &mx) + u(c, &mx));
                let a_n = 0.5 * (u(c, &my) + u(north, &my));
                let a_s = 0.5 * (u(south, &my) + u(c, &my));
                // mass
                let div_up = (flux(rho_vals[c], rho_vals[east], a_e)
                    - flux(rho_vals[west], rho_vals[c], a_w)
                    + flux(rho_vals[c], rho_vals[north], a_n)
                    - flux(rho_vals[south], rho_vals[c], a_s))
                    / h;
                let rho_expect = rho_vals[c] - dt * div_up;
                assert_relative_eq!(next.rho().values()[c], rho_expect, epsilon = 1e-13);
                // momentum components
                for (comp, other) in [(&mx, 0usize), (&my, 1usize)] {
                    let div_up_m = (flux(comp[c], comp[east], a_e)
                        - flux(comp[west], comp[c], a_w)
                        + flux(comp[c], comp[north], a_n)
                        - flux(comp[south], comp[c], a_s))
                        / h;
                    let p = |cc: usize| rho_vals[cc].powf(1.4);
                    let grad_p = match other {
                        0 => (p(east) - p(west)) / (2.0 * h),
                        _ => (p(north) - p(south)) / (2.0 * h),
                    };
                    let uc = |cc: usize| comp[cc] / rho_vals[cc];
                    let lap = (uc(east) + uc(west) + uc(north) + uc(south) - 4.0 * uc(c))
                        / (h * h);
                    let divu = |cc: usize| {
                        let (ci, cj) = (cc / k, cc % k);
                        (u(idx(ci + 1, cj), &mx) - u(idx(ci + k - 1, cj), &mx)
                            + u(idx(ci, cj + 1), &my)
                            - u(idx(ci, cj + k - 1), &my))
                            / (2.0 * h)
                    };
                    let grad_divu = match other {
                        0 => (divu(east) - divu(west)) / (2.0 * h),
                        _ => (divu(north) - divu(south)) / (2.0 * h),
                    };
                    let m_expect =
                        comp[c] + dt * (-div_up_m - grad_p + mu * lap + nu * grad_divu);
                    assert_relative_eq!(
                        next.momentum().component(other)[c],
                        m_expect,
                        epsilon = 1e-13
                    );
                }
            }
        }
    }

    #[test]
    fn implicit_step_satisfies_discrete_equations() {
        let mesh = Mesh::square(8).unwrap();
        let params = SchemeParams::default();
        let state = smooth_state(mesh, 5);
        let (next, report) = step(&state, &params).unwrap();
        assert!(report.max_residual <= params.picard_tol);
        assert!(report.picard_iterations >= 1);
        // residual recomputed independently through the explicit-rate path
        let fp = FluxParams::new(params.eps, mesh.h()).unwrap();
        let (mu, nu) = viscosity(mesh.h(), &params);
        let u = next.velocity();
        let (mass_rate, mom_rate) =
            rates(next.rho(), next.momentum(), &u, &params, &fp, mu, nu).unwrap();
        let mut res = 0.0f64;
        for i in 0..mesh.cell_count() {
            let lhs = (next.rho().values()[i] - state.rho().values()[i]) / report.dt;
            res = res.max((lhs - mass_rate[i]).abs());
        }
        for axis in 0..2 {
            for i in 0..mesh.cell_count() {
                let lhs = (next.momentum().component(axis)[i]
                    - state.momentum().component(axis)[i])
                    / report.dt;
                res = res.max((lhs - mom_rate[axis][i]).abs());
            }
        }
        assert!(res <= params.picard_tol * 1.0001, "residual {res}");
    }

    #[test]
    fn runs_conserve_mass_to_rounding() {
        let mesh = Mesh::square(12).unwrap();
        for mode in [TimeMode::Implicit, TimeMode::Explicit] {
            let params = SchemeParams {
                mode,
                ..SchemeParams::default()
            };
            let state = smooth_state(mesh, 9);
            let traj = run(&state, &params, 0.05, &RunOptions::default()).unwrap();
            assert!(traj.mass_drift_rel() <= 1e-12, "{}", traj.mass_drift_rel());
            assert!(traj.min_density() > 0.0);
        }
    }

    #[test]
    fn implicit_energy_inequality_holds() {
        let mesh = Mesh::square(12).unwrap();
        let params = SchemeParams::default();
        let state = smooth_state(mesh, 21);
        let traj = run(&state, &params, 0.05, &RunOptions::default()).unwrap();
        for r in &traj.reports {
            assert!(
                r.energy_residual <= 10.0 * params.picard_tol * (1.0 + r.energy),
                "energy residual {} at dt {}",
                r.energy_residual,
                r.dt
            );
        }
    }

    #[test]
    fn short_final_time_takes_one_clipped_step() {
        let mesh = Mesh::square(8).unwrap();
        let params = SchemeParams::default();
        let state = uniform_state(mesh, 1.0, &[0.3, 0.0]);
        let t = 0.25 * params.dt_ratio * mesh.h();
        let traj = run(&state, &params, t, &RunOptions::default()).unwrap();
        assert_eq!(traj.steps(), 1);
        assert_eq!(traj.final_state.time(), t);
        // uniform translation stays uniform for any horizon
        let traj = run(&state, &params, 2.0, &RunOptions::default()).unwrap();
        assert_eq!(traj.final_state.rho().values(), state.rho().values());
    }

    #[test]
    fn runs_are_deterministic() {
        let mesh = Mesh::square(10).unwrap();
        let params = SchemeParams::default();
        let state = smooth_state(mesh, 33);
        let a = run(&state, &params, 0.03, &RunOptions::default()).unwrap();
        let b = run(&state, &params, 0.03, &RunOptions::default()).unwrap();
        assert_eq!(a.final_state.rho().values(), b.final_state.rho().values());
        for axis in 0..2 {
            assert_eq!(
                a.final_state.momentum().component(axis),
                b.final_state.momentum().component(axis)
            );
        }
        assert_eq!(a.reports, b.reports);
    }

    #[test]
    fn concentration_trivial_and_half_cases() {
        let mesh = Mesh::square(8).unwrap();
        let params = SchemeParams::default();
        // half the cells at 2, half at 1, zero velocity
        let rho = ScalarField::from_values(
            mesh,
            (0..64).map(|c| if c < 32 { 2.0 } else { 1.0 }).collect(),
        )
        .unwrap();
        let state = State::new(rho, VectorField::zeros(mesh), 0.0).unwrap();
        let t = 3.0 * params.dt_ratio * mesh.h();
        let opts = RunOptions {
            store_density_history: true,
            density_thresholds: vec![1.5],
            ..RunOptions::default()
        };
        let traj = run(&state, &params, t, &opts).unwrap();
        // all densities stay near 1 or 2 over this horizon
        let low = concentration_fraction(&traj, 0.5).unwrap();
        assert_relative_eq!(low.fraction, 1.0, max_relative = 1e-12);
        assert_relative_eq!(low.spacetime_volume, t, max_relative = 1e-12);
        let high = concentration_fraction(&traj, 10.0).unwrap();
        assert_eq!(high.count, 0);
        assert_eq!(high.fraction, 0.0);
        let half = concentration_fraction(&traj, 1.5).unwrap();
        assert_relative_eq!(half.fraction, 0.5, max_relative = 1e-12);
        // streamed counter agrees with the history-based query
        let streamed = traj.threshold_counts[0];
        assert_eq!(streamed.1, half.count);
    }

    #[test]
    fn missing_history_is_reported() {
        let mesh = Mesh::square(4).unwrap();
        let params = SchemeParams::default();
        let state = uniform_state(mesh, 1.0, &[0.0, 0.0]);
        let traj = run(&state, &params, 0.01, &RunOptions::default()).unwrap();
        assert!(matches!(
            concentration_fraction(&traj, 1.5),
            Err(CoreError::NoDensityHistory)
        ));
    }
}
