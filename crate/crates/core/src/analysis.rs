//! Convergence-study pipeline: experimental orders of convergence, error
//! tables for weighted ensemble averages, subsequence comparison curves, and
//! the pairwise correlation diagnostic.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::grid::{overlap_integrate_l1, restrict_to, Mesh, ScalarField};
use crate::math;
use crate::summation::{summation_row, weighted_average, WeightFunction};

/// Experimental order of convergence ln(e1/e2)/ln(k2/k1) between two mesh
/// resolutions. Returns `None` when either error vanishes.
pub fn eoc(e1: f64, e2: f64, k1: usize, k2: usize) -> Option<f64> {
    assert!(k2 > k1, "resolutions must increase");
    if !(e1 > 0.0 && e2 > 0.0) {
        return None;
    }
    Some(math::ln(e1 / e2) / math::ln(k2 as f64 / k1 as f64))
}

/// One row of a convergence table: cutoff resolution, error, and the order
/// against the previous row (`None` in the first row or at zero error).
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub k: usize,
    pub error: f64,
    pub order: Option<f64>,
}

/// Error/order table for weighted averages over increasing cutoffs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub rows: Vec<TableRow>,
    /// Human-readable description of the reference choice.
    pub reference: String,
}

impl ConvergenceTable {
    /// Orders recomputed from successive error pairs.
    pub fn orders(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.order).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.error).collect()
    }
}

/// How the reference solution of a convergence table is chosen.
#[derive(Debug, Clone)]
pub enum ReferencePolicy {
    /// Weighted average over all supplied runs with the table's own weight.
    PerColumn,
    /// Plain Cesàro average over a (typically larger) superset of runs.
    CesaroSuperset(Vec<(usize, ScalarField)>),
    /// Fixed external reference field.
    Field(ScalarField),
}

/// Builds the error table of weighted density averages against a reference.
/// `runs` are (k, field-at-final-time) pairs, ascending in k; for each cutoff
/// in `cutoffs` the average uses the runs with k ≤ cutoff and the weight row
/// of that ensemble size. Errors are exact overlap integrals on the analysis
/// mesh.
pub fn average_convergence_table(
    runs: &[(usize, ScalarField)],
    omega: &WeightFunction,
    reference: &ReferencePolicy,
    cutoffs: &[usize],
    analysis: Mesh,
) -> Result<ConvergenceTable, CoreError> {
    if runs.len() < 2 {
        return Err(CoreError::MissingRun(
            "a convergence table needs at least two runs".into(),
        ));
    }
    for w in runs.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(CoreError::MissingRun(format!(
                "runs must be sorted by strictly increasing k (saw {} then {})",
                w[0].0, w[1].0
            )));
        }
    }
    let restricted: Vec<ScalarField> = runs
        .iter()
        .map(|(_, f)| restrict_to(f, analysis))
        .collect();

    let (ref_field, ref_desc) = match reference {
        ReferencePolicy::PerColumn => {
            let row = summation_row(omega, runs.len())?;
            (
                weighted_average(&restricted, &row, analysis)?,
                format!("per-column {} average over {} runs", omega.name(), runs.len()),
            )
        }
        ReferencePolicy::CesaroSuperset(superset) => {
            let fields: Vec<ScalarField> = superset
                .iter()
                .map(|(_, f)| restrict_to(f, analysis))
                .collect();
            let row = summation_row(&WeightFunction::Equal, fields.len())?;
            (
                weighted_average(&fields, &row, analysis)?,
                format!("cesaro average over {} superset runs", fields.len()),
            )
        }
        ReferencePolicy::Field(f) => (restrict_to(f, analysis), "external field".into()),
    };

    let mut rows: Vec<TableRow> = Vec::with_capacity(cutoffs.len());
    for &cutoff in cutoffs {
        let count = runs.iter().take_while(|(k, _)| *k <= cutoff).count();
        if count == 0 {
            return Err(CoreError::MissingRun(format!(
                "no runs at or below cutoff k={cutoff}"
            )));
        }
        let row = summation_row(omega, count)?;
        let avg = weighted_average(&restricted[..count], &row, analysis)?;
        let error = overlap_integrate_l1(&avg, &ref_field)?;
        let order = rows
            .last()
            .and_then(|prev| eoc(prev.error, error, prev.k, cutoff));
        rows.push(TableRow {
            k: cutoff,
            error,
            order,
        });
    }
    Ok(ConvergenceTable {
        rows,
        reference: ref_desc,
    })
}

/// L1 distances between the Cesàro average over runs k = 32·1..32·3ℓ and the
/// averages over the three arithmetic subsequences 32(3m−2), 32(3m−1), 32(3m),
/// for ℓ = 1..ℓ_max. Runs must cover every multiple 32m, m ≤ 3ℓ_max.
pub fn subsequence_errors(
    runs: &[(usize, ScalarField)],
    l_max: usize,
    analysis: Mesh,
) -> Result<[Vec<f64>; 3], CoreError> {
    assert!(l_max >= 1);
    let need = 3 * l_max;
    let mut by_index: Vec<Option<&ScalarField>> = vec![None; need + 1];
    for (k, f) in runs {
        if k % 32 == 0 {
            let m = k / 32;
            if (1..=need).contains(&m) {
                by_index[m] = Some(f);
            }
        }
    }
    let mut fields = Vec::with_capacity(need);
    for m in 1..=need {
        match by_index[m] {
            Some(f) => fields.push(restrict_to(f, analysis)),
            None => {
                return Err(CoreError::MissingRun(format!(
                    "subsequence comparison needs the k={} run",
                    32 * m
                )))
            }
        }
    }

    let cesaro = |indices: &[usize]| -> ScalarField {
        let mut acc = vec![0.0f64; analysis.cell_count()];
        for &m in indices {
            for (a, v) in acc.iter_mut().zip(fields[m - 1].values()) {
                *a += v;
            }
        }
        let inv = 1.0 / indices.len() as f64;
        for a in &mut acc {
            *a *= inv;
        }
        ScalarField::from_values_unchecked(analysis, acc)
    };

    let mut curves: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for l in 1..=l_max {
        let full: Vec<usize> = (1..=3 * l).collect();
        let full_avg = cesaro(&full);
        for (offset, curve) in curves.iter_mut().enumerate() {
            // offsets 0,1,2 select 3m-2, 3m-1, 3m
            let sub: Vec<usize> = (1..=l).map(|m| 3 * m - 2 + offset).collect();
            let sub_avg = cesaro(&sub);
            curve.push(overlap_integrate_l1(&full_avg, &sub_avg)?);
        }
    }
    Ok(curves)
}

/// Pairwise integrals ∫ (V_n − V)(V_m − V) with a common reference V, plus
/// the fraction of pairs below each requested magnitude threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub size: usize,
    /// Row-major symmetric matrix.
    pub entries: Vec<f64>,
    /// (ε, fraction of pairs with |entry| < ε).
    pub significant_fractions: Vec<(f64, f64)>,
}

impl CorrelationMatrix {
    pub fn entry(&self, n: usize, m: usize) -> f64 {
        self.entries[n * self.size + m]
    }
}

/// Correlations of an ensemble against a reference field on a common mesh.
pub fn correlation_matrix(
    fields: &[ScalarField],
    reference: &ScalarField,
    epsilons: &[f64],
) -> Result<CorrelationMatrix, CoreError> {
    let mesh = reference.mesh();
    for f in fields {
        if f.mesh() != mesh {
            return Err(CoreError::MeshMismatch {
                expected_k: mesh.k(),
                got_k: f.mesh().k(),
            });
        }
    }
    let n = fields.len();
    let vol = mesh.cell_volume();
    let deviations: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| {
            f.values()
                .iter()
                .zip(reference.values())
                .map(|(v, r)| v - r)
                .collect()
        })
        .collect();
    let mut entries = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for (a, b) in deviations[i].iter().zip(&deviations[j]) {
                acc += a * b;
            }
            let value = acc * vol;
            entries[i * n + j] = value;
            entries[j * n + i] = value;
        }
    }
    let pairs = (n * n) as f64;
    let significant_fractions = epsilons
        .iter()
        .map(|&eps| {
            let count = entries.iter().filter(|e| math::abs(**e) < eps).count();
            (eps, count as f64 / pairs)
        })
        .collect();
    Ok(CorrelationMatrix {
        size: n,
        entries,
        significant_fractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::project;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn eoc_closed_forms() {
        // first pair of the reference data set
        let order = eoc(1.46e-1, 1.18e-1, 64, 96).unwrap();
        assert!((order - 0.53).abs() <= 0.005, "{order}");
        assert_eq!(eoc(0.5, 0.5, 10, 20).unwrap(), 0.0);
        assert_relative_eq!(eoc(0.4, 0.2, 16, 32).unwrap(), 1.0, max_relative = 1e-13);
        assert_eq!(eoc(0.0, 0.1, 8, 16), None);
    }

    #[test]
    fn eoc_composes_log_weighted() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let e1 = rng.gen_range(0.01..1.0);
            let e2 = rng.gen_range(0.01..1.0);
            let e3 = rng.gen_range(0.01..1.0);
            let (k1, k2, k3) = (16usize, 40usize, 96usize);
            let o12 = eoc(e1, e2, k1, k2).unwrap();
            let o23 = eoc(e2, e3, k2, k3).unwrap();
            let o13 = eoc(e1, e3, k1, k3).unwrap();
            let combined = (o12 * math::ln(k2 as f64 / k1 as f64)
                + o23 * math::ln(k3 as f64 / k2 as f64))
                / math::ln(k3 as f64 / k1 as f64);
            assert_relative_eq!(o13, combined, max_relative = 1e-12);
        }
    }

    #[test]
    fn identical_runs_give_zero_errors() {
        let mesh = Mesh::square(8).unwrap();
        let f = project(|x| x[0], mesh, 2).unwrap();
        let runs: Vec<(usize, ScalarField)> =
            [32, 64, 96].iter().map(|&k| (k, f.clone())).collect();
        let table = average_convergence_table(
            &runs,
            &WeightFunction::Equal,
            &ReferencePolicy::PerColumn,
            &[32, 64, 96],
            mesh,
        )
        .unwrap();
        for row in &table.rows {
            assert_eq!(row.error, 0.0);
            assert_eq!(row.order, None);
        }
    }

    #[test]
    fn last_error_vanishes_for_per_column_reference() {
        let mesh = Mesh::square(4).unwrap();
        let runs: Vec<(usize, ScalarField)> = [32usize, 64, 96]
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, ScalarField::constant(mesh, i as f64)))
            .collect();
        let table = average_convergence_table(
            &runs,
            &WeightFunction::Equal,
            &ReferencePolicy::PerColumn,
            &[32, 64, 96],
            mesh,
        )
        .unwrap();
        assert!(table.rows[2].error <= 1e-15);
        assert!(table.rows[0].error > 0.0);
    }

    #[test]
    fn synthetic_harmonic_tail_matches_closed_form() {
        // constant run fields c_m = 1/m: averages and errors are scalars,
        // so the whole table has a closed form computed right here
        let mesh = Mesh::square(4).unwrap();
        let ks = [32usize, 64, 96, 128, 160];
        let runs: Vec<(usize, ScalarField)> = ks
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, ScalarField::constant(mesh, 1.0 / (i + 1) as f64)))
            .collect();
        let n = ks.len();
        let mean_upto = |j: usize| (1..=j).map(|m| 1.0 / m as f64).sum::<f64>() / j as f64;
        let reference = mean_upto(n);
        let table = average_convergence_table(
            &runs,
            &WeightFunction::Equal,
            &ReferencePolicy::PerColumn,
            &ks,
            mesh,
        )
        .unwrap();
        let mut prev: Option<(usize, f64)> = None;
        for (j, row) in table.rows.iter().enumerate() {
            let expect = (mean_upto(j + 1) - reference).abs();
            assert_relative_eq!(row.error, expect, max_relative = 1e-12);
            match prev {
                None => assert_eq!(row.order, None),
                Some((pk, pe)) => {
                    let oracle = eoc(pe, expect, pk, row.k);
                    match (row.order, oracle) {
                        (Some(a), Some(b)) => assert_relative_eq!(a, b, max_relative = 1e-12),
                        (a, b) => assert_eq!(a.is_none(), b.is_none()),
                    }
                }
            }
            prev = Some((row.k, expect));
        }
    }

    #[test]
    fn cesaro_superset_reference_is_weight_independent() {
        let mesh = Mesh::square(4).unwrap();
        let runs: Vec<(usize, ScalarField)> = [32usize, 64]
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, ScalarField::constant(mesh, i as f64 + 1.0)))
            .collect();
        let superset: Vec<(usize, ScalarField)> = [32usize, 64, 96, 128]
            .iter()
            .enumerate()
            .map(|(i, &k)| (k, ScalarField::constant(mesh, i as f64 + 1.0)))
            .collect();
        // superset cesaro mean = 2.5
        let table = average_convergence_table(
            &runs,
            &WeightFunction::Equal,
            &ReferencePolicy::CesaroSuperset(superset),
            &[32, 64],
            mesh,
        )
        .unwrap();
        assert_relative_eq!(table.rows[0].error, 1.5, max_relative = 1e-12);
        assert_relative_eq!(table.rows[1].error, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn errors_are_shift_invariant() {
        let mesh = Mesh::square(6).unwrap();
        let base = project(|x| math::sin(2.0 * PI * x[0]), mesh, 1).unwrap();
        let mk = |shift: f64, scale: f64| {
            ScalarField::from_values(
                mesh,
                base.values().iter().map(|v| shift + scale * v).collect(),
            )
            .unwrap()
        };
        let runs_a: Vec<(usize, ScalarField)> =
            vec![(32, mk(0.0, 1.0)), (64, mk(0.0, 0.5)), (96, mk(0.0, 0.25))];
        let runs_b: Vec<(usize, ScalarField)> =
            vec![(32, mk(7.0, 1.0)), (64, mk(7.0, 0.5)), (96, mk(7.0, 0.25))];
        for omega in [WeightFunction::Equal, WeightFunction::Sin2] {
            let ta = average_convergence_table(
                &runs_a,
                &omega,
                &ReferencePolicy::PerColumn,
                &[32, 64],
                mesh,
            )
            .unwrap();
            let tb = average_convergence_table(
                &runs_b,
                &omega,
                &ReferencePolicy::PerColumn,
                &[32, 64],
                mesh,
            )
            .unwrap();
            for (ra, rb) in ta.rows.iter().zip(&tb.rows) {
                assert_relative_eq!(ra.error, rb.error, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn subsequence_curves_for_constants() {
        let mesh = Mesh::square(4).unwrap();
        // constants c_m = m for run k = 32m
        let runs: Vec<(usize, ScalarField)> = (1..=6)
            .map(|m| (32 * m, ScalarField::constant(mesh, m as f64)))
            .collect();
        let curves = subsequence_errors(&runs, 2, mesh).unwrap();
        // l = 1: full mean over {1,2,3} = 2; submeans 1, 2, 3
        assert_relative_eq!(curves[0][0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(curves[1][0], 0.0, epsilon = 1e-13);
        assert_relative_eq!(curves[2][0], 1.0, max_relative = 1e-12);
        // l = 2: full mean over 1..6 = 3.5; submeans {1,4}=2.5, {2,5}=3.5, {3,6}=4.5
        assert_relative_eq!(curves[0][1], 1.0, max_relative = 1e-12);
        assert_relative_eq!(curves[1][1], 0.0, epsilon = 1e-13);
        assert_relative_eq!(curves[2][1], 1.0, max_relative = 1e-12);

        // identical runs: all three curves vanish
        let same: Vec<(usize, ScalarField)> = (1..=6)
            .map(|m| (32 * m, ScalarField::constant(mesh, 2.0)))
            .collect();
        let curves = subsequence_errors(&same, 2, mesh).unwrap();
        for c in &curves {
            assert!(c.iter().all(|&v| v.abs() < 1e-13));
        }
    }

    #[test]
    fn subsequence_requires_full_index_range() {
        let mesh = Mesh::square(4).unwrap();
        let runs: Vec<(usize, ScalarField)> = (1..=4)
            .map(|m| (32 * m, ScalarField::constant(mesh, 1.0)))
            .collect();
        assert!(matches!(
            subsequence_errors(&runs, 2, mesh),
            Err(CoreError::MissingRun(_))
        ));
    }

    #[test]
    fn correlation_of_identical_fields_vanishes() {
        let mesh = Mesh::square(6).unwrap();
        let v = project(|x| x[0] + x[1], mesh, 1).unwrap();
        let fields = vec![v.clone(), v.clone(), v.clone()];
        let c = correlation_matrix(&fields, &v, &[1e-9]).unwrap();
        assert!(c.entries.iter().all(|&e| e == 0.0));
        assert_eq!(c.significant_fractions[0], (1e-9, 1.0));
    }

    #[test]
    fn fourier_modes_are_orthogonal() {
        let mesh = Mesh::square(64).unwrap();
        let fields: Vec<ScalarField> = (1..=4)
            .map(|n| project(|x: &[f64]| math::sin(2.0 * PI * n as f64 * x[0]), mesh, 1).unwrap())
            .collect();
        let zero = ScalarField::constant(mesh, 0.0);
        let c = correlation_matrix(&fields, &zero, &[]).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert_relative_eq!(c.entry(i, j), expect, epsilon = 1e-12);
                assert_eq!(c.entry(i, j), c.entry(j, i));
            }
        }
    }
}
