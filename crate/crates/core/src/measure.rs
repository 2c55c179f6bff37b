//! Finite atomic probability measures on ℝ^m, the 1-Wasserstein metric, and
//! per-cell measure fields built from run ensembles.
//!
//! In one dimension the 1-Wasserstein distance is the area between the two
//! cumulative distribution functions; in general it is the optimal-transport
//! cost with Euclidean ground metric, solved exactly by the transportation
//! simplex (no entropic regularization). Density and momentum carry different
//! physical units, so componentwise (m = 1) analyses are the recommended way
//! to metricize states; the joint multi-component distance is available but
//! mixes units.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::grid::{restrict_to, Mesh, ScalarField};
use crate::math;
use crate::scheme::State;
use crate::summation::SummationRow;
use crate::transport::transport_cost;

/// Default cap on the combined atom count of one transport solve.
pub const DEFAULT_ATOM_CAP: usize = 2048;

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Finite weighted atomic probability measure on ℝ^m; atoms are stored
/// flattened, `dim` coordinates per atom.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Measure from atom points and weights; weights must be nonnegative and
    /// sum to one within 1e-12.
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self, CoreError> {
        assert_eq!(atoms.len(), weights.len(), "one weight per atom");
        assert!(!atoms.is_empty(), "a probability measure needs atoms");
        let dim = atoms[0].len();
        for a in &atoms {
            if a.len() != dim {
                return Err(CoreError::AtomDimensionMismatch { a: dim, b: a.len() });
            }
        }
        let mut flat = Vec::with_capacity(atoms.len() * dim);
        for a in &atoms {
            flat.extend_from_slice(a);
        }
        Self::from_flat(dim, flat, weights)
    }

    /// Scalar (m = 1) measure.
    pub fn new_scalar(values: Vec<f64>, weights: Vec<f64>) -> Result<Self, CoreError> {
        assert_eq!(values.len(), weights.len(), "one weight per atom");
        Self::from_flat(1, values, weights)
    }

    pub(crate) fn from_flat(dim: usize, atoms: Vec<f64>, weights: Vec<f64>) -> Result<Self, CoreError> {
        let mut total = 0.0;
        for &w in &weights {
            if w < 0.0 || !w.is_finite() {
                return Err(CoreError::UnnormalizedMeasure { total: w });
            }
            total += w;
        }
        if math::abs(total - 1.0) > WEIGHT_SUM_TOL {
            return Err(CoreError::UnnormalizedMeasure { total });
        }
        Ok(EmpiricalMeasure { dim, atoms, weights })
    }

    /// Unit mass at one point.
    pub fn dirac(point: Vec<f64>) -> Self {
        let dim = point.len();
        EmpiricalMeasure {
            dim,
            atoms: point,
            weights: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn atom(&self, i: usize) -> &[f64] {
        &self.atoms[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Expectation ⟨μ; b⟩ of a test function.
    pub fn expect<F>(&self, b: F) -> f64
    where
        F: Fn(&[f64]) -> f64,
    {
        let mut acc = 0.0;
        for i in 0..self.len() {
            acc += self.weights[i] * b(self.atom(i));
        }
        acc
    }

    fn positive_part(&self) -> (Vec<usize>, Vec<f64>) {
        let mut idx = Vec::new();
        let mut w = Vec::new();
        for (i, &wi) in self.weights.iter().enumerate() {
            if wi > 0.0 {
                idx.push(i);
                w.push(wi);
            }
        }
        (idx, w)
    }
}

/// Exact 1-Wasserstein distance of scalar measures via the CDF formula
/// ∫ |F_μ − F_ν| over the merged sorted support.
pub fn w1_scalar(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64, CoreError> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(CoreError::AtomDimensionMismatch {
            a: mu.dim(),
            b: nu.dim(),
        });
    }
    // merge (value, mu-weight, -nu-weight) events sorted by value
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(mu.len() + nu.len());
    for i in 0..mu.len() {
        events.push((mu.atoms[i], mu.weights[i]));
    }
    for j in 0..nu.len() {
        events.push((nu.atoms[j], -nu.weights[j]));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut dist = 0.0;
    let mut cdf_diff = 0.0;
    for w in 0..events.len() {
        if w > 0 {
            dist += math::abs(cdf_diff) * (events[w].0 - events[w - 1].0);
        }
        cdf_diff += events[w].1;
    }
    Ok(dist)
}

/// Exact 1-Wasserstein distance with Euclidean ground metric, any atom
/// dimension, solved as a finite transportation problem. The combined atom
/// count must stay below `atom_cap` (use [`DEFAULT_ATOM_CAP`]).
pub fn w1_general(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    atom_cap: usize,
) -> Result<f64, CoreError> {
    if mu.dim() != nu.dim() {
        return Err(CoreError::AtomDimensionMismatch {
            a: mu.dim(),
            b: nu.dim(),
        });
    }
    let (mi, mw) = mu.positive_part();
    let (ni, nw) = nu.positive_part();
    if mi.len() + ni.len() > atom_cap {
        return Err(CoreError::AtomCapExceeded {
            atoms: mi.len() + ni.len(),
            cap: atom_cap,
        });
    }
    let dim = mu.dim();
    transport_cost(&mw, &nw, |i, j| {
        let a = mu.atom(mi[i]);
        let b = nu.atom(ni[j]);
        let mut sq = 0.0;
        for c in 0..dim {
            let d = a[c] - b[c];
            sq += d * d;
        }
        math::sqrt(sq)
    })
}

/// Bounded test functions for the dual metric; each must satisfy |b| ≤ 1.
pub type TestFunction = Box<dyn Fn(&[f64]) -> f64>;

/// Default test family: tensor Gaussians times cosines,
/// b_k(x) = cos(k Σ_i x_i) · exp(−‖x‖²), k = 1..k_max. For m = 1 this is
/// cos(kx)·exp(−x²). The family is dense enough for diagnostics but finite,
/// so the truncated dual metric is a pseudo-metric.
pub fn default_test_family(k_max: usize) -> Vec<TestFunction> {
    (1..=k_max)
        .map(|k| {
            let kf = k as f64;
            Box::new(move |x: &[f64]| {
                let mut s = 0.0;
                let mut sq = 0.0;
                for &c in x {
                    s += c;
                    sq += c * c;
                }
                math::cos(kf * s) * math::exp(-sq)
            }) as TestFunction
        })
        .collect()
}

/// Truncated dual metric Σ_k 2^{−k} |⟨μ; b_k⟩ − ⟨ν; b_k⟩| over the given
/// family. Bounded by 2 for any family with ‖b_k‖∞ ≤ 1.
pub fn dual_metric(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, family: &[TestFunction]) -> f64 {
    let mut acc = 0.0;
    let mut scale = 0.5;
    for b in family {
        acc += scale * math::abs(mu.expect(b) - nu.expect(b));
        scale *= 0.5;
    }
    acc
}

/// Observable used to turn a solver state into per-cell sample values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    /// Mass density (the quantity the reference tables use).
    Density,
    /// One momentum component.
    Momentum(usize),
    /// The full (density, momentum) tuple as a joint ℝ^{d+1} atom.
    Joint,
}

/// Per-cell empirical measures on a common analysis mesh.
#[derive(Debug, Clone)]
pub struct MeasureField {
    mesh: Mesh,
    dim: usize,
    /// per cell: flattened atoms, `dim` coordinates each
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl MeasureField {
    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    /// Atom dimension m shared by all cells.
    pub fn atom_dim(&self) -> usize {
        self.dim
    }

    /// Atoms per cell (the ensemble size).
    pub fn atom_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_measure(&self, cell: usize) -> Result<EmpiricalMeasure, CoreError> {
        EmpiricalMeasure::from_flat(self.dim, self.atoms[cell].clone(), self.weights.clone())
    }
}

/// Assembles the weighted measure field (1/N) Σ s_{n,N} δ_{U_n(x)} at one
/// time from an ensemble of states: per analysis cell, one atom per run with
/// weight s_{n,N}/N. States on other meshes are restricted conservatively.
pub fn measure_field_from_runs(
    states: &[State],
    observable: Observable,
    row: &SummationRow,
    analysis: Mesh,
) -> Result<MeasureField, CoreError> {
    if row.len() != states.len() {
        return Err(CoreError::RowLengthMismatch {
            row: row.len(),
            items: states.len(),
        });
    }
    assert!(!states.is_empty(), "need at least one run");
    let n = states.len();
    let dim = match observable {
        Observable::Density | Observable::Momentum(_) => 1,
        Observable::Joint => analysis.dim() + 1,
    };
    let cells = analysis.cell_count();
    let mut atoms = vec![Vec::with_capacity(n * dim); cells];
    for state in states {
        if state.rho().mesh().dim() != analysis.dim() {
            return Err(CoreError::DimensionMismatch {
                a: state.rho().mesh().dim(),
                b: analysis.dim(),
            });
        }
        let mut comps: Vec<ScalarField> = Vec::new();
        match observable {
            Observable::Density => comps.push(restrict_to(state.rho(), analysis)),
            Observable::Momentum(axis) => {
                comps.push(restrict_to(&state.momentum().component_field(axis), analysis))
            }
            Observable::Joint => {
                comps.push(restrict_to(state.rho(), analysis));
                for axis in 0..analysis.dim() {
                    comps.push(restrict_to(
                        &state.momentum().component_field(axis),
                        analysis,
                    ));
                }
            }
        }
        for cell in 0..cells {
            for comp in &comps {
                atoms[cell].push(comp.values()[cell]);
            }
        }
    }
    let inv_n = 1.0 / n as f64;
    let weights: Vec<f64> = row.weights().iter().map(|&s| s * inv_n).collect();
    Ok(MeasureField {
        mesh: analysis,
        dim,
        atoms,
        weights,
    })
}

/// Histogram over a pooled subdomain: bin edges and bin probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub probabilities: Vec<f64>,
}

/// Axis-aligned box on the torus given by per-axis (lo, hi) intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subdomain {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Subdomain {
    pub fn rect(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Subdomain {
            lo: [x0, y0, 0.0],
            hi: [x1, y1, 1.0],
        }
    }

    fn contains(&self, x: &[f64; 3], dim: usize) -> bool {
        (0..dim).all(|a| x[a] > self.lo[a] && x[a] < self.hi[a])
    }
}

/// Pools the atoms of all cells whose centers lie in `rect` (scalar fields
/// only), renormalizes the weights, and bins the values into `bins` equal
/// bins spanning the pooled atom range.
pub fn subdomain_histogram(
    mf: &MeasureField,
    rect: &Subdomain,
    bins: usize,
) -> Result<Histogram, CoreError> {
    assert!(bins >= 1, "need at least one bin");
    assert_eq!(mf.atom_dim(), 1, "histograms pool scalar observables");
    let mesh = mf.mesh();
    let mut values = Vec::new();
    let mut weights = Vec::new();
    for cell in 0..mesh.cell_count() {
        let center = mesh.cell_center(cell);
        if !rect.contains(&center, mesh.dim()) {
            continue;
        }
        for (i, &w) in mf.weights.iter().enumerate() {
            values.push(mf.atoms[cell][i]);
            weights.push(w);
        }
    }
    if values.is_empty() {
        return Err(CoreError::EmptyRegion);
    }
    let total: f64 = weights.iter().sum();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in &values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi <= lo {
        // degenerate support: center one unit-wide range on the single value
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut edges = Vec::with_capacity(bins + 1);
    for b in 0..=bins {
        edges.push(lo + b as f64 * width);
    }
    let mut probabilities = vec![0.0; bins];
    for (v, w) in values.iter().zip(&weights) {
        let mut b = ((v - lo) / width) as usize;
        if b >= bins {
            b = bins - 1;
        }
        probabilities[b] += w / total;
    }
    Ok(Histogram { edges, probabilities })
}

/// Spatially integrated Wasserstein distance Σ_cells |K| · w1(μ_cell, ν_cell)
/// of two measure fields on the same mesh; the scalar CDF shortcut applies
/// when m = 1.
pub fn w1_field_l1(a: &MeasureField, b: &MeasureField, atom_cap: usize) -> Result<f64, CoreError> {
    if a.mesh() != b.mesh() {
        return Err(CoreError::MeshMismatch {
            expected_k: a.mesh().k(),
            got_k: b.mesh().k(),
        });
    }
    if a.atom_dim() != b.atom_dim() {
        return Err(CoreError::AtomDimensionMismatch {
            a: a.atom_dim(),
            b: b.atom_dim(),
        });
    }
    let vol = a.mesh().cell_volume();
    let mut acc = 0.0;
    for cell in 0..a.mesh().cell_count() {
        let mu = a.cell_measure(cell)?;
        let nu = b.cell_measure(cell)?;
        let d = if a.atom_dim() == 1 {
            w1_scalar(&mu, &nu)?
        } else {
            w1_general(&mu, &nu, atom_cap)?
        };
        acc += vol * d;
    }
    Ok(acc)
}
