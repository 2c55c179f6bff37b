//! Regular summation methods built from weight functions, and the weighted
//! ensemble statistics they induce.
//!
//! A lower-triangular weight array {s_{n,N}} is regular when 0 ≤ s_{n,N} ≤ s̄,
//! s_{n,N} = 0 for n > N, and Σ_{n≤N} s_{n,N} = N. Sampling a nonnegative
//! weight ω on [0,1] generates one:
//!
//!   s_{n,N} = N ω(n/N) / Σ_m ω(m/N),   falling back to s ≡ 1 when the
//!   sampled weight sum vanishes.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::grid::{restrict_to, Mesh, ScalarField};
use crate::math;

/// Weight function on [0,1] used to generate summation rows.
#[derive(Debug, Clone)]
pub enum WeightFunction {
    /// ω(t) = 1 (plain Cesàro averaging).
    Equal,
    /// ω(t) = t(1−t).
    Quad,
    /// ω(t) = sin²(πt).
    Sin2,
    /// ω(t) = exp(−1/(t(1−t))) on (0,1), zero at the endpoints.
    Exp,
    /// Tabulated (t, ω) pairs with linear interpolation; t must be ascending.
    Custom(Vec<(f64, f64)>),
}

impl WeightFunction {
    /// The four named weights in canonical order.
    pub fn named() -> [WeightFunction; 4] {
        [
            WeightFunction::Equal,
            WeightFunction::Quad,
            WeightFunction::Sin2,
            WeightFunction::Exp,
        ]
    }

    pub fn by_name(name: &str) -> Option<WeightFunction> {
        match name {
            "equal" => Some(WeightFunction::Equal),
            "quad" => Some(WeightFunction::Quad),
            "sin2" => Some(WeightFunction::Sin2),
            "exp" => Some(WeightFunction::Exp),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightFunction::Equal => "equal",
            WeightFunction::Quad => "quad",
            WeightFunction::Sin2 => "sin2",
            WeightFunction::Exp => "exp",
            WeightFunction::Custom(_) => "custom",
        }
    }

    /// Evaluate ω(t) for t in [0,1].
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            WeightFunction::Equal => 1.0,
            WeightFunction::Quad => t * (1.0 - t),
            WeightFunction::Sin2 => {
                let s = math::sin(core::f64::consts::PI * t);
                s * s
            }
            WeightFunction::Exp => {
                // indicator of (0,1) keeps the exponent finite
                if t <= 0.0 || t >= 1.0 {
                    0.0
                } else {
                    math::exp(-1.0 / (t * (1.0 - t)))
                }
            }
            WeightFunction::Custom(table) => {
                if table.is_empty() {
                    return 0.0;
                }
                if t <= table[0].0 {
                    return table[0].1;
                }
                for w in table.windows(2) {
                    let ((t0, v0), (t1, v1)) = (w[0], w[1]);
                    if t <= t1 {
                        if t1 == t0 {
                            return v1;
                        }
                        return v0 + (v1 - v0) * (t - t0) / (t1 - t0);
                    }
                }
                table[table.len() - 1].1
            }
        }
    }
}

/// One row (s_{1,N}, …, s_{N,N}) of a regular summation method.
#[derive(Debug, Clone, PartialEq)]
pub struct SummationRow {
    weights: Vec<f64>,
}

impl SummationRow {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Row sum; equals N for a regular method.
    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Row of length N generated from a weight function. The all-ones fallback is
/// taken exactly when the sampled weight sum is zero.
pub fn summation_row(omega: &WeightFunction, n: usize) -> Result<SummationRow, CoreError> {
    assert!(n >= 1, "row length must be at least 1");
    let mut samples = Vec::with_capacity(n);
    let mut total = 0.0;
    for i in 1..=n {
        let t = i as f64 / n as f64;
        let w = omega.eval(t);
        if w < 0.0 {
            return Err(CoreError::NegativeWeight { t, value: w });
        }
        total += w;
        samples.push(w);
    }
    if total == 0.0 {
        return Ok(SummationRow {
            weights: vec![1.0; n],
        });
    }
    let scale = n as f64 / total;
    for w in &mut samples {
        *w *= scale;
    }
    Ok(SummationRow { weights: samples })
}

fn checked_restrict(
    items: &[ScalarField],
    row: &SummationRow,
    analysis: Mesh,
) -> Result<Vec<ScalarField>, CoreError> {
    if row.len() != items.len() {
        return Err(CoreError::RowLengthMismatch {
            row: row.len(),
            items: items.len(),
        });
    }
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        if item.mesh().dim() != analysis.dim() {
            return Err(CoreError::DimensionMismatch {
                a: item.mesh().dim(),
                b: analysis.dim(),
            });
        }
        out.push(restrict_to(item, analysis));
    }
    Ok(out)
}

/// Weighted ensemble mean (1/N) Σ s_{n,N} · item_n on the analysis mesh.
/// Items on other meshes are first restricted conservatively.
pub fn weighted_average(
    items: &[ScalarField],
    row: &SummationRow,
    analysis: Mesh,
) -> Result<ScalarField, CoreError> {
    let restricted = checked_restrict(items, row, analysis)?;
    let n = items.len() as f64;
    let mut acc = vec![0.0f64; analysis.cell_count()];
    for (item, &s) in restricted.iter().zip(row.weights()) {
        for (a, &v) in acc.iter_mut().zip(item.values()) {
            *a += s * v;
        }
    }
    for a in &mut acc {
        *a /= n;
    }
    Ok(ScalarField::from_values_unchecked(analysis, acc))
}

/// Pointwise weighted mean absolute deviation from the weighted average,
/// (1/N) Σ s_{n,N} |item_n − mean|.
pub fn first_variance(
    items: &[ScalarField],
    row: &SummationRow,
    analysis: Mesh,
) -> Result<ScalarField, CoreError> {
    let restricted = checked_restrict(items, row, analysis)?;
    let mean = weighted_average(items, row, analysis)?;
    let n = items.len() as f64;
    let mut acc = vec![0.0f64; analysis.cell_count()];
    for (item, &s) in restricted.iter().zip(row.weights()) {
        for ((a, &v), &m) in acc.iter_mut().zip(item.values()).zip(mean.values()) {
            *a += s * math::abs(v - m);
        }
    }
    for a in &mut acc {
        *a /= n;
    }
    Ok(ScalarField::from_values_unchecked(analysis, acc))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn equal_weight_rows_are_ones() {
        let row = summation_row(&WeightFunction::Equal, 3).unwrap();
        assert_eq!(row.weights(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn quad_row_of_three() {
        // ω(1/3) = ω(2/3) = 2/9, ω(1) = 0
        let row = summation_row(&WeightFunction::Quad, 3).unwrap();
        assert_relative_eq!(row.weights()[0], 1.5, epsilon = 1e-12);
        assert_relative_eq!(row.weights()[1], 1.5, epsilon = 1e-12);
        assert_eq!(row.weights()[2], 0.0);
    }

    #[test]
    fn exp_weight_single_run_takes_fallback() {
        // ω_exp(1) = 0, so the sampled sum vanishes and the row falls back to 1
        let row = summation_row(&WeightFunction::Exp, 1).unwrap();
        assert_eq!(row.weights(), &[1.0]);
    }

    #[test]
    fn rows_satisfy_regularity_axioms() {
        for omega in WeightFunction::named() {
            for n in [1usize, 2, 3, 5, 17, 64, 257] {
                let row = summation_row(&omega, n).unwrap();
                assert_eq!(row.len(), n);
                assert!((row.sum() - n as f64).abs() <= 1e-9, "{} N={n}", omega.name());
                assert!(row.weights().iter().all(|&s| (0.0..=6.0).contains(&s)));
            }
        }
    }

    #[test]
    fn negative_weight_is_rejected() {
        let omega = WeightFunction::Custom(vec![(0.0, 1.0), (1.0, -1.0)]);
        assert!(matches!(
            summation_row(&omega, 4),
            Err(CoreError::NegativeWeight { .. })
        ));
    }

    #[test]
    fn custom_weight_interpolates() {
        let omega = WeightFunction::Custom(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]);
        assert_relative_eq!(omega.eval(0.25), 0.5);
        assert_relative_eq!(omega.eval(0.75), 0.5);
        assert_relative_eq!(omega.eval(1.0), 0.0);
    }

    #[test]
    fn average_of_identical_items_is_that_item() {
        let mesh = Mesh::square(4).unwrap();
        let f = ScalarField::from_values(mesh, (0..16).map(|i| i as f64).collect()).unwrap();
        let items = vec![f.clone(), f.clone(), f.clone()];
        for omega in WeightFunction::named() {
            let row = summation_row(&omega, 3).unwrap();
            let avg = weighted_average(&items, &row, mesh).unwrap();
            for (a, b) in avg.values().iter().zip(f.values()) {
                assert_relative_eq!(a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn equal_weight_average_is_cesaro_bit_exact() {
        let mesh = Mesh::square(3).unwrap();
        let items: Vec<ScalarField> = (0..5)
            .map(|s| {
                ScalarField::from_values(
                    mesh,
                    (0..9).map(|i| ((i + s) as f64).sin()).collect(),
                )
                .unwrap()
            })
            .collect();
        let row = summation_row(&WeightFunction::Equal, 5).unwrap();
        let avg = weighted_average(&items, &row, mesh).unwrap();
        for cell in 0..9 {
            let mut acc = 0.0;
            for item in &items {
                acc += item.values()[cell];
            }
            let cesaro = acc / 5.0;
            assert_eq!(avg.values()[cell], cesaro);
        }
    }

    #[test]
    fn average_of_two_constants() {
        let mesh = Mesh::square(2).unwrap();
        let items = vec![
            ScalarField::constant(mesh, 0.0),
            ScalarField::constant(mesh, 2.0),
        ];
        let row = summation_row(&WeightFunction::Equal, 2).unwrap();
        let avg = weighted_average(&items, &row, mesh).unwrap();
        assert!(avg.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn quad_row_drops_last_item() {
        let mesh = Mesh::square(2).unwrap();
        let items = vec![
            ScalarField::constant(mesh, 1.0),
            ScalarField::constant(mesh, 3.0),
            ScalarField::constant(mesh, 100.0),
        ];
        let row = summation_row(&WeightFunction::Quad, 3).unwrap();
        let avg = weighted_average(&items, &row, mesh).unwrap();
        for &v in avg.values() {
            assert_relative_eq!(v, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn variance_examples() {
        let mesh = Mesh::square(2).unwrap();
        let row = summation_row(&WeightFunction::Equal, 2).unwrap();
        let same = vec![
            ScalarField::constant(mesh, 5.0),
            ScalarField::constant(mesh, 5.0),
        ];
        let v = first_variance(&same, &row, mesh).unwrap();
        assert!(v.values().iter().all(|&x| x == 0.0));

        let items = vec![
            ScalarField::constant(mesh, 0.0),
            ScalarField::constant(mesh, 2.0),
        ];
        let v = first_variance(&items, &row, mesh).unwrap();
        assert!(v.values().iter().all(|&x| x == 1.0));

        // translation invariance
        let shifted = vec![
            ScalarField::constant(mesh, 10.0),
            ScalarField::constant(mesh, 12.0),
        ];
        let vs = first_variance(&shifted, &row, mesh).unwrap();
        for (a, b) in v.values().iter().zip(vs.values()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn row_length_mismatch_is_an_error() {
        let mesh = Mesh::square(2).unwrap();
        let items = vec![ScalarField::constant(mesh, 1.0)];
        let row = summation_row(&WeightFunction::Equal, 2).unwrap();
        assert!(matches!(
            weighted_average(&items, &row, mesh),
            Err(CoreError::RowLengthMismatch { .. })
        ));
    }
}
