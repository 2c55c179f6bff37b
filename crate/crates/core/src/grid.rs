//! Uniform periodic Cartesian mesh of the unit torus and piecewise-constant
//! cell fields.
//!
//! Cells are indexed row-major over the d-tuple of axis indices (last axis
//! fastest). Faces are enumerated axis by axis; the face with id
//! `axis * n + cell` sits between `cell` and its +axis neighbor and carries
//! the +axis unit normal. Iterating all faces visits each geometric face
//! exactly once.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::math;

/// Uniform k×k (×k) mesh of the unit torus, cell width h = 1/k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    k: usize,
    dim: usize,
}

impl Mesh {
    /// Mesh with `k` cells per axis in dimension `dim` (2 or 3).
    pub fn new(k: usize, dim: usize) -> Result<Self, CoreError> {
        if k == 0 {
            return Err(CoreError::InvalidParameter("k must be positive".into()));
        }
        if dim != 2 && dim != 3 {
            return Err(CoreError::InvalidParameter("dimension must be 2 or 3".into()));
        }
        Ok(Mesh { k, dim })
    }

    /// 2D k×k mesh.
    pub fn square(k: usize) -> Result<Self, CoreError> {
        Mesh::new(k, 2)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cell width h = 1/k.
    pub fn h(&self) -> f64 {
        1.0 / self.k as f64
    }

    /// Number of cells k^d.
    pub fn cell_count(&self) -> usize {
        self.k.pow(self.dim as u32)
    }

    /// Number of faces d·k^d.
    pub fn face_count(&self) -> usize {
        self.dim * self.cell_count()
    }

    /// Cell volume h^d, exact.
    pub fn cell_volume(&self) -> f64 {
        let h = self.h();
        let mut v = 1.0;
        for _ in 0..self.dim {
            v *= h;
        }
        v
    }

    /// Face area h^(d-1), exact.
    pub fn face_area(&self) -> f64 {
        let h = self.h();
        let mut v = 1.0;
        for _ in 0..self.dim - 1 {
            v *= h;
        }
        v
    }

    /// Row-major stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        self.k.pow((self.dim - 1 - axis) as u32)
    }

    /// Flat index of the cell with the given axis indices.
    pub fn cell_index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        let mut idx = 0;
        for &c in coords {
            debug_assert!(c < self.k);
            idx = idx * self.k + c;
        }
        idx
    }

    /// Axis indices of a flat cell index.
    pub fn cell_coords(&self, mut idx: usize) -> [usize; 3] {
        let mut coords = [0usize; 3];
        for axis in (0..self.dim).rev() {
            coords[axis] = idx % self.k;
            idx /= self.k;
        }
        coords
    }

    /// Center of a cell; entries beyond `dim` are zero.
    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let coords = self.cell_coords(idx);
        let h = self.h();
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = (coords[axis] as f64 + 0.5) * h;
        }
        x
    }

    /// Periodic neighbor of `cell` one step along `axis` (`dir` = ±1).
    pub fn neighbor(&self, cell: usize, axis: usize, dir: isize) -> usize {
        let coords = self.cell_coords(cell);
        let c = coords[axis];
        let stride = self.stride(axis);
        match dir {
            1 => {
                if c + 1 == self.k {
                    cell + stride - stride * self.k
                } else {
                    cell + stride
                }
            }
            -1 => {
                if c == 0 {
                    cell + stride * self.k - stride
                } else {
                    cell - stride
                }
            }
            _ => panic!("dir must be +1 or -1"),
        }
    }

    /// All faces, axis-major then row-major over the inward cell.
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        let n = self.cell_count();
        (0..self.dim).flat_map(move |axis| {
            (0..n).map(move |cell| Face {
                axis,
                inward: cell,
                outward: self.neighbor(cell, axis, 1),
            })
        })
    }

    /// The 2d faces of one cell with their outward orientation (+1 when the
    /// stored +axis normal points out of the cell).
    pub fn cell_faces(&self, cell: usize) -> Vec<(Face, f64)> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for axis in 0..self.dim {
            let minus = self.neighbor(cell, axis, -1);
            out.push((
                Face {
                    axis,
                    inward: minus,
                    outward: cell,
                },
                -1.0,
            ));
            out.push((
                Face {
                    axis,
                    inward: cell,
                    outward: self.neighbor(cell, axis, 1),
                },
                1.0,
            ));
        }
        out
    }
}

/// One mesh face: `inward` and `outward` cells with respect to the +axis
/// unit normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    pub inward: usize,
    pub outward: usize,
}

/// Visits every cell in row-major order, handing the callback the flat cell
/// index and, per axis, the periodic (minus, plus) neighbor indices. Index
/// arithmetic is incremental; no divisions in the loop body.
pub(crate) fn for_each_cell_neighbors<F>(mesh: &Mesh, mut f: F)
where
    F: FnMut(usize, &[(usize, usize); 3]),
{
    let k = mesh.k;
    let dim = mesh.dim;
    let n = mesh.cell_count();
    let mut coords = [0usize; 3];
    let mut nbrs = [(0usize, 0usize); 3];
    let mut strides = [0usize; 3];
    for axis in 0..dim {
        strides[axis] = mesh.stride(axis);
    }
    for cell in 0..n {
        for axis in 0..dim {
            let c = coords[axis];
            let s = strides[axis];
            let minus = if c == 0 { cell + s * k - s } else { cell - s };
            let plus = if c + 1 == k { cell + s - s * k } else { cell + s };
            nbrs[axis] = (minus, plus);
        }
        f(cell, &nbrs);
        // odometer increment, last axis fastest
        for axis in (0..dim).rev() {
            coords[axis] += 1;
            if coords[axis] < k {
                break;
            }
            coords[axis] = 0;
        }
    }
}

/// Piecewise-constant scalar cell data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    mesh: Mesh,
    values: Vec<f64>,
}

impl ScalarField {
    /// Field that is `value` in every cell.
    pub fn constant(mesh: Mesh, value: f64) -> Self {
        ScalarField {
            mesh,
            values: vec![value; mesh.cell_count()],
        }
    }

    /// Wrap existing cell values; checks length and finiteness.
    pub fn from_values(mesh: Mesh, values: Vec<f64>) -> Result<Self, CoreError> {
        if values.len() != mesh.cell_count() {
            return Err(CoreError::FieldLength {
                expected: mesh.cell_count(),
                got: values.len(),
            });
        }
        for (cell, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(CoreError::NonFiniteSample {
                    cell,
                    coords: mesh.cell_coords(cell),
                });
            }
        }
        Ok(ScalarField { mesh, values })
    }

    pub(crate) fn from_values_unchecked(mesh: Mesh, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), mesh.cell_count());
        ScalarField { mesh, values }
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Exact integral over the torus, Σ |K| v_K in fixed cell order.
    pub fn integral(&self) -> f64 {
        let vol = self.mesh.cell_volume();
        let mut sum = 0.0;
        for &v in &self.values {
            sum += v;
        }
        sum * vol
    }

    /// True when every cell value is finite.
    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Piecewise-constant vector cell data, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    mesh: Mesh,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(mesh: Mesh) -> Self {
        VectorField {
            mesh,
            comps: vec![vec![0.0; mesh.cell_count()]; mesh.dim()],
        }
    }

    pub fn constant(mesh: Mesh, value: &[f64]) -> Self {
        assert_eq!(value.len(), mesh.dim());
        VectorField {
            mesh,
            comps: value
                .iter()
                .map(|&v| vec![v; mesh.cell_count()])
                .collect(),
        }
    }

    pub fn from_components(mesh: Mesh, comps: Vec<ScalarField>) -> Result<Self, CoreError> {
        if comps.len() != mesh.dim() {
            return Err(CoreError::DimensionMismatch {
                a: mesh.dim(),
                b: comps.len(),
            });
        }
        let mut out = Vec::with_capacity(comps.len());
        for c in comps {
            if c.mesh() != mesh {
                return Err(CoreError::MeshMismatch {
                    expected_k: mesh.k(),
                    got_k: c.mesh().k(),
                });
            }
            out.push(c.values);
        }
        Ok(VectorField { mesh, comps: out })
    }

    pub fn mesh(&self) -> Mesh {
        self.mesh
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn component_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    /// Component as a standalone scalar field (copies).
    pub fn component_field(&self, axis: usize) -> ScalarField {
        ScalarField {
            mesh: self.mesh,
            values: self.comps[axis].clone(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.comps
            .iter()
            .all(|c| c.iter().all(|v| v.is_finite()))
    }
}

/// Projection onto piecewise constants: each cell takes the average of `f`
/// over a q×q (×q) midpoint subgrid of the cell. For q → ∞ this approaches
/// the exact cell mean; q = 1 samples cell centers.
pub fn project<F>(f: F, mesh: Mesh, q: usize) -> Result<ScalarField, CoreError>
where
    F: Fn(&[f64]) -> f64,
{
    assert!(q >= 1, "at least one subsample per axis");
    let n = mesh.cell_count();
    let dim = mesh.dim();
    let h = mesh.h();
    let sub = h / q as f64;
    let samples = q.pow(dim as u32) as f64;
    let mut values = Vec::with_capacity(n);
    let mut x = [0.0f64; 3];
    for cell in 0..n {
        let coords = mesh.cell_coords(cell);
        let mut acc = 0.0;
        let mut s = [0usize; 3];
        loop {
            for axis in 0..dim {
                x[axis] = coords[axis] as f64 * h + (s[axis] as f64 + 0.5) * sub;
            }
            let v = f(&x[..dim]);
            if !v.is_finite() {
                return Err(CoreError::NonFiniteSample {
                    cell,
                    coords,
                });
            }
            acc += v;
            let mut done = true;
            for axis in (0..dim).rev() {
                s[axis] += 1;
                if s[axis] < q {
                    done = false;
                    break;
                }
                s[axis] = 0;
            }
            if done {
                break;
            }
        }
        values.push(acc / samples);
    }
    Ok(ScalarField { mesh, values })
}

/// 1D overlap segments of two uniform partitions of [0,1]: consecutive
/// breakpoints from {i/ka} ∪ {j/kb} with the containing cell index on each
/// side.
fn axis_segments(ka: usize, kb: usize) -> Vec<(f64, usize, usize)> {
    let mut points: Vec<f64> = Vec::with_capacity(ka + kb + 1);
    for i in 0..=ka {
        points.push(i as f64 / ka as f64);
    }
    for j in 1..kb {
        points.push(j as f64 / kb as f64);
    }
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut segs = Vec::with_capacity(points.len() - 1);
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= 0.0 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let ia = ((mid * ka as f64) as usize).min(ka - 1);
        let ib = ((mid * kb as f64) as usize).min(kb - 1);
        segs.push((hi - lo, ia, ib));
    }
    segs
}

/// Exact ∫ |a − b| over the torus for fields on possibly different meshes,
/// computed on the merged rectangle overlap grid. Symmetric in its arguments.
pub fn overlap_integrate_l1(a: &ScalarField, b: &ScalarField) -> Result<f64, CoreError> {
    let (ma, mb) = (a.mesh(), b.mesh());
    if ma.dim() != mb.dim() {
        return Err(CoreError::DimensionMismatch {
            a: ma.dim(),
            b: mb.dim(),
        });
    }
    if ma.k() == mb.k() {
        let vol = ma.cell_volume();
        let mut sum = 0.0;
        for (x, y) in a.values().iter().zip(b.values()) {
            sum += math::abs(x - y);
        }
        return Ok(sum * vol);
    }
    let segs = axis_segments(ma.k(), mb.k());
    let dim = ma.dim();
    let (ka, kb) = (ma.k(), mb.k());
    let av = a.values();
    let bv = b.values();
    let mut sum = 0.0;
    match dim {
        2 => {
            for &(l0, a0, b0) in &segs {
                for &(l1, a1, b1) in &segs {
                    let va = av[a0 * ka + a1];
                    let vb = bv[b0 * kb + b1];
                    sum += l0 * l1 * math::abs(va - vb);
                }
            }
        }
        3 => {
            for &(l0, a0, b0) in &segs {
                for &(l1, a1, b1) in &segs {
                    for &(l2, a2, b2) in &segs {
                        let va = av[(a0 * ka + a1) * ka + a2];
                        let vb = bv[(b0 * kb + b1) * kb + b2];
                        sum += l0 * l1 * l2 * math::abs(va - vb);
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(sum)
}

/// Conservative projection onto `target`: each target cell takes the exact
/// area-weighted mean of `a` over that cell. Preserves the total integral.
pub fn restrict_to(a: &ScalarField, target: Mesh) -> ScalarField {
    let source = a.mesh();
    assert_eq!(source.dim(), target.dim(), "dimension mismatch");
    if source.k() == target.k() {
        return a.clone();
    }
    let segs = axis_segments(target.k(), source.k());
    let dim = target.dim();
    let (kt, ks) = (target.k(), source.k());
    let av = a.values();
    let mut out = vec![0.0f64; target.cell_count()];
    match dim {
        2 => {
            for &(l0, t0, s0) in &segs {
                for &(l1, t1, s1) in &segs {
                    out[t0 * kt + t1] += l0 * l1 * av[s0 * ks + s1];
                }
            }
        }
        3 => {
            for &(l0, t0, s0) in &segs {
                for &(l1, t1, s1) in &segs {
                    for &(l2, t2, s2) in &segs {
                        out[(t0 * kt + t1) * kt + t2] += l0 * l1 * l2 * av[(s0 * ks + s1) * ks + s2];
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    let inv_vol = 1.0 / target.cell_volume();
    for v in &mut out {
        *v *= inv_vol;
    }
    ScalarField {
        mesh: target,
        values: out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn geometry_is_exact() {
        let mesh = Mesh::square(4).unwrap();
        assert_eq!(mesh.h(), 0.25);
        assert_eq!(mesh.cell_volume(), 0.0625);
        assert_eq!(mesh.face_area(), 0.25);
        assert_eq!(mesh.cell_count(), 16);
        assert_eq!(mesh.face_count(), 32);
    }

    #[test]
    fn faces_visit_each_once_and_cells_have_2d() {
        let mesh = Mesh::square(3).unwrap();
        let faces: Vec<Face> = mesh.faces().collect();
        assert_eq!(faces.len(), mesh.face_count());
        // each (axis, unordered pair) occurs exactly once
        for (i, f) in faces.iter().enumerate() {
            for g in &faces[i + 1..] {
                assert!(!(f.axis == g.axis && f.inward == g.inward));
            }
        }
        for cell in 0..mesh.cell_count() {
            let cf = mesh.cell_faces(cell);
            assert_eq!(cf.len(), 4);
            // outward-oriented normals of a closed cell cancel
            let mut sum = [0.0f64; 2];
            for (face, orient) in cf {
                sum[face.axis] += orient * mesh.face_area();
            }
            assert_eq!(sum, [0.0, 0.0]);
        }
    }

    #[test]
    fn neighbor_wraps_periodically() {
        let mesh = Mesh::square(3).unwrap();
        let c = mesh.cell_index(&[0, 2]);
        assert_eq!(mesh.neighbor(c, 1, 1), mesh.cell_index(&[0, 0]));
        assert_eq!(mesh.neighbor(c, 0, -1), mesh.cell_index(&[2, 2]));
        for cell in 0..mesh.cell_count() {
            for axis in 0..2 {
                let p = mesh.neighbor(cell, axis, 1);
                assert_eq!(mesh.neighbor(p, axis, -1), cell);
            }
        }
    }

    #[test]
    fn neighbor_helper_matches_naive() {
        for mesh in [Mesh::square(5).unwrap(), Mesh::new(3, 3).unwrap()] {
            let mut seen = 0;
            for_each_cell_neighbors(&mesh, |cell, nbrs| {
                for axis in 0..mesh.dim() {
                    assert_eq!(nbrs[axis].0, mesh.neighbor(cell, axis, -1));
                    assert_eq!(nbrs[axis].1, mesh.neighbor(cell, axis, 1));
                }
                assert_eq!(cell, seen);
                seen += 1;
            });
            assert_eq!(seen, mesh.cell_count());
        }
    }

    #[test]
    fn project_constant_is_constant() {
        let mesh = Mesh::square(5).unwrap();
        for q in [1, 3, 8] {
            let f = project(|_| 2.5, mesh, q).unwrap();
            assert!(f.values().iter().all(|&v| v == 2.5));
        }
    }

    #[test]
    fn project_coordinate_midpoints() {
        // f(x) = x1 on k=2, q=1: cell centers at 0.25 and 0.75 per column
        let mesh = Mesh::square(2).unwrap();
        let f = project(|x| x[0], mesh, 1).unwrap();
        assert_eq!(f.values(), &[0.25, 0.25, 0.75, 0.75]);
    }

    #[test]
    fn project_linear_equals_exact_cell_mean() {
        // midpoint rule with q=1 is exact for degree-1 polynomials
        let mesh = Mesh::square(7).unwrap();
        let f = |x: &[f64]| 1.0 + 2.0 * x[0] - 0.5 * x[1];
        let p1 = project(f, mesh, 1).unwrap();
        for cell in 0..mesh.cell_count() {
            let c = mesh.cell_center(cell);
            assert_relative_eq!(p1.values()[cell], f(&c[..2]), max_relative = 1e-14);
        }
    }

    #[test]
    fn project_reports_bad_sample() {
        let mesh = Mesh::square(2).unwrap();
        let err = project(|x| 1.0 / (x[0] - 0.25), mesh, 1).unwrap_err();
        match err {
            CoreError::NonFiniteSample { cell, .. } => assert_eq!(cell, 0),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn overlap_same_mesh_and_constants() {
        let a = ScalarField::constant(Mesh::square(64).unwrap(), 1.0);
        let b = ScalarField::constant(Mesh::square(96).unwrap(), 2.0);
        assert_eq!(overlap_integrate_l1(&a, &a).unwrap(), 0.0);
        assert_relative_eq!(overlap_integrate_l1(&a, &b).unwrap(), 1.0, max_relative = 1e-13);
        assert_relative_eq!(overlap_integrate_l1(&b, &a).unwrap(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn overlap_matches_supersampling_oracle() {
        // indicator-like field on k=2 against a constant on k=3
        let ma = Mesh::square(2).unwrap();
        let mb = Mesh::square(3).unwrap();
        let a = ScalarField::from_values(ma, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = ScalarField::constant(mb, 0.5);
        let exact = overlap_integrate_l1(&a, &b).unwrap();

        // supersampling oracle: evaluate both fields at 3072^2 midpoints
        let s = 3072usize;
        let mut acc = 0.0;
        for i in 0..s {
            let x0 = (i as f64 + 0.5) / s as f64;
            let a0 = ((x0 * 2.0) as usize).min(1);
            let b0 = ((x0 * 3.0) as usize).min(2);
            for j in 0..s {
                let x1 = (j as f64 + 0.5) / s as f64;
                let a1 = ((x1 * 2.0) as usize).min(1);
                let b1 = ((x1 * 3.0) as usize).min(2);
                acc += (a.values()[a0 * 2 + a1] - b.values()[b0 * 3 + b1]).abs();
            }
        }
        let oracle = acc / (s * s) as f64;
        assert!((exact - oracle).abs() < 1e-12, "{exact} vs {oracle}");
    }

    #[test]
    fn restrict_identity_and_constants() {
        let mesh = Mesh::square(4).unwrap();
        let f = project(|x| x[0] * x[1], mesh, 2).unwrap();
        assert_eq!(restrict_to(&f, mesh), f);
        let c = ScalarField::constant(Mesh::square(6).unwrap(), 3.25);
        let r = restrict_to(&c, Mesh::square(5).unwrap());
        for &v in r.values() {
            assert_relative_eq!(v, 3.25, max_relative = 1e-14);
        }
    }

    #[test]
    fn restrict_to_coarse_averages() {
        let mesh = Mesh::square(2).unwrap();
        let f = ScalarField::from_values(mesh, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let coarse = restrict_to(&f, Mesh::square(1).unwrap());
        assert_relative_eq!(coarse.values()[0], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn restrict_preserves_integral() {
        let mesh = Mesh::square(12).unwrap();
        let f = project(|x| math::sin(6.28 * x[0]) + x[1] * x[1], mesh, 3).unwrap();
        for kt in [5, 8, 17] {
            let r = restrict_to(&f, Mesh::square(kt).unwrap());
            assert_relative_eq!(r.integral(), f.integral(), max_relative = 1e-12);
        }
    }
}
