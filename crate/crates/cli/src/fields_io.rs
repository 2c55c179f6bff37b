//! On-disk formats for cell fields and measure fields.
//!
//! Field dump: one ASCII header line `VFV-FIELD v1 d=<d> k=<k> comps=<c>`
//! followed by c·k^d little-endian f64 values, component-major, cells in
//! row-major order. States are stored with comps = 1+d (density first, then
//! momentum components).
//!
//! Measure-field dump: header `VFV-MEASURE v1 d=<d> k=<k> m=<m>` followed by
//! one length-prefixed record per cell: a little-endian u32 atom count, then
//! per atom m coordinates and one weight, all little-endian f64.
//!
//! A plain-text CSV variant (`x1,x2,value`) is provided for inspection.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use vfv_core::grid::{Mesh, ScalarField, VectorField};
use vfv_core::measure::MeasureField;
use vfv_core::scheme::State;

use crate::error::{CliError, Result};

fn write_header(w: &mut impl Write, mesh: Mesh, comps: usize, path: &Path) -> Result<()> {
    writeln!(
        w,
        "VFV-FIELD v1 d={} k={} comps={}",
        mesh.dim(),
        mesh.k(),
        comps
    )
    .map_err(|e| CliError::io(path, e))
}

fn write_component(w: &mut impl Write, values: &[f64], path: &Path) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes()).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}

/// Scalar field dump (comps = 1).
pub fn write_scalar_field(path: &Path, field: &ScalarField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    write_header(&mut w, field.mesh(), 1, path)?;
    write_component(&mut w, field.values(), path)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

/// State dump (comps = 1 + d: density, then momentum components).
pub fn write_state(path: &Path, state: &State) -> Result<()> {
    let mesh = state.mesh();
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    write_header(&mut w, mesh, 1 + mesh.dim(), path)?;
    write_component(&mut w, state.rho().values(), path)?;
    for axis in 0..mesh.dim() {
        write_component(&mut w, state.momentum().component(axis), path)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn read_line(r: &mut impl Read, path: &Path) -> Result<String> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let n = r.read(&mut byte).map_err(|e| CliError::io(path, e))?;
        if n == 0 || byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
        if line.len() > 256 {
            return Err(CliError::Analysis(format!(
                "{}: header line too long",
                path.display()
            )));
        }
    }
    String::from_utf8(line)
        .map_err(|_| CliError::Analysis(format!("{}: header is not UTF-8", path.display())))
}

fn parse_header(line: &str, magic: &str, path: &Path) -> Result<Vec<(String, usize)>> {
    let mut parts = line.split_whitespace();
    let (m0, m1) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    let expected: Vec<&str> = magic.split_whitespace().collect();
    if [m0, m1] != [expected[0], expected[1]] {
        return Err(CliError::Analysis(format!(
            "{}: expected {magic} header, found {m0} {m1}",
            path.display()
        )));
    }
    let mut fields = Vec::new();
    for part in parts {
        let Some((key, value)) = part.split_once('=') else {
            return Err(CliError::Analysis(format!(
                "{}: malformed header field {part:?}",
                path.display()
            )));
        };
        let value = value.parse::<usize>().map_err(|_| {
            CliError::Analysis(format!("{}: bad header value {part:?}", path.display()))
        })?;
        fields.push((key.to_string(), value));
    }
    Ok(fields)
}

fn header_get(fields: &[(String, usize)], key: &str, path: &Path) -> Result<usize> {
    fields
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| CliError::Analysis(format!("{}: header misses {key}=", path.display())))
}

fn read_f64s(r: &mut impl Read, count: usize, path: &Path) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; count * 8];
    r.read_exact(&mut buf).map_err(|e| CliError::io(path, e))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Any field dump: mesh plus raw components.
pub fn read_field(path: &Path) -> Result<(Mesh, Vec<Vec<f64>>)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?);
    let header = read_line(&mut r, path)?;
    let fields = parse_header(&header, "VFV-FIELD v1", path)?;
    let d = header_get(&fields, "d", path)?;
    let k = header_get(&fields, "k", path)?;
    let comps = header_get(&fields, "comps", path)?;
    let mesh = Mesh::new(k, d).map_err(CliError::analysis)?;
    let mut out = Vec::with_capacity(comps);
    for _ in 0..comps {
        out.push(read_f64s(&mut r, mesh.cell_count(), path)?);
    }
    Ok((mesh, out))
}

pub fn read_scalar_field(path: &Path) -> Result<ScalarField> {
    let (mesh, mut comps) = read_field(path)?;
    if comps.len() != 1 {
        return Err(CliError::Analysis(format!(
            "{}: expected a scalar dump, found {} components",
            path.display(),
            comps.len()
        )));
    }
    ScalarField::from_values(mesh, comps.remove(0)).map_err(CliError::analysis)
}

pub fn read_state(path: &Path, time: f64) -> Result<State> {
    let (mesh, comps) = read_field(path)?;
    if comps.len() != 1 + mesh.dim() {
        return Err(CliError::Analysis(format!(
            "{}: expected a state dump with {} components, found {}",
            path.display(),
            1 + mesh.dim(),
            comps.len()
        )));
    }
    let mut comps = comps.into_iter();
    let rho =
        ScalarField::from_values(mesh, comps.next().unwrap()).map_err(CliError::analysis)?;
    let mut mom = VectorField::zeros(mesh);
    for axis in 0..mesh.dim() {
        mom.component_mut(axis).copy_from_slice(&comps.next().unwrap());
    }
    State::new(rho, mom, time).map_err(CliError::analysis)
}

/// CSV variant with cell centers: `x1,x2[,x3],value[,value2,...]`.
pub fn write_field_csv(path: &Path, mesh: Mesh, comps: &[&[f64]]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    let io = |e| CliError::io(path, e);
    let mut header: Vec<String> = (1..=mesh.dim()).map(|a| format!("x{a}")).collect();
    if comps.len() == 1 {
        header.push("value".into());
    } else {
        header.extend((1..=comps.len()).map(|c| format!("value{c}")));
    }
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for cell in 0..mesh.cell_count() {
        let x = mesh.cell_center(cell);
        let mut row: Vec<String> = (0..mesh.dim()).map(|a| format!("{}", x[a])).collect();
        row.extend(comps.iter().map(|c| format!("{}", c[cell])));
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Measure-field dump with per-cell length-prefixed atom/weight records.
pub fn write_measure_field(path: &Path, mf: &MeasureField) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    let mesh = mf.mesh();
    writeln!(
        w,
        "VFV-MEASURE v1 d={} k={} m={}",
        mesh.dim(),
        mesh.k(),
        mf.atom_dim()
    )
    .map_err(|e| CliError::io(path, e))?;
    for cell in 0..mesh.cell_count() {
        let measure = mf.cell_measure(cell).map_err(CliError::analysis)?;
        let count = measure.len() as u32;
        w.write_all(&count.to_le_bytes()).map_err(|e| CliError::io(path, e))?;
        for i in 0..measure.len() {
            for c in measure.atom(i) {
                w.write_all(&c.to_le_bytes()).map_err(|e| CliError::io(path, e))?;
            }
            w.write_all(&measure.weights()[i].to_le_bytes())
                .map_err(|e| CliError::io(path, e))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Reads a measure-field dump back as per-cell (atoms, weights) lists.
#[allow(clippy::type_complexity)]
pub fn read_measure_field(path: &Path) -> Result<(Mesh, usize, Vec<(Vec<f64>, Vec<f64>)>)> {
    let mut r = BufReader::new(File::open(path).map_err(|e| CliError::io(path, e))?);
    let header = read_line(&mut r, path)?;
    let fields = parse_header(&header, "VFV-MEASURE v1", path)?;
    let d = header_get(&fields, "d", path)?;
    let k = header_get(&fields, "k", path)?;
    let m = header_get(&fields, "m", path)?;
    let mesh = Mesh::new(k, d).map_err(CliError::analysis)?;
    let mut cells = Vec::with_capacity(mesh.cell_count());
    for _ in 0..mesh.cell_count() {
        let mut len_buf = [0u8; 4];
        r.read_exact(&mut len_buf).map_err(|e| CliError::io(path, e))?;
        let count = u32::from_le_bytes(len_buf) as usize;
        let raw = read_f64s(&mut r, count * (m + 1), path)?;
        let mut atoms = Vec::with_capacity(count * m);
        let mut weights = Vec::with_capacity(count);
        for chunk in raw.chunks_exact(m + 1) {
            atoms.extend_from_slice(&chunk[..m]);
            weights.push(chunk[m]);
        }
        cells.push((atoms, weights));
    }
    Ok((mesh, m, cells))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vfv_core::grid::project;
    use vfv_core::measure::{measure_field_from_runs, Observable};
    use vfv_core::summation::{summation_row, WeightFunction};

    #[test]
    fn scalar_field_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.field");
        let mesh = Mesh::square(5).unwrap();
        let f = project(|x| (x[0] * 7.3).sin() + x[1], mesh, 2).unwrap();
        write_scalar_field(&path, &f).unwrap();
        let back = read_scalar_field(&path).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.mesh(), mesh);
    }

    #[test]
    fn state_roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.field");
        let mesh = Mesh::square(4).unwrap();
        let rho = project(|x| 1.0 + 0.3 * x[0], mesh, 1).unwrap();
        let mut mom = VectorField::zeros(mesh);
        for i in 0..16 {
            mom.component_mut(0)[i] = i as f64 * 0.1;
            mom.component_mut(1)[i] = -(i as f64) * 0.05;
        }
        let state = State::new(rho, mom, 1.5).unwrap();
        write_state(&path, &state).unwrap();
        let back = read_state(&path, 1.5).unwrap();
        assert_eq!(back.rho().values(), state.rho().values());
        assert_eq!(back.momentum().component(0), state.momentum().component(0));
        assert_eq!(back.momentum().component(1), state.momentum().component(1));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let mesh = Mesh::square(2).unwrap();
        let f = ScalarField::constant(mesh, 1.25);
        write_field_csv(&path, mesh, &[f.values()]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with("0.25,0.25,"));
    }

    #[test]
    fn measure_field_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mfield");
        let mesh = Mesh::square(3).unwrap();
        let states: Vec<State> = [1.0, 2.0]
            .iter()
            .map(|&c| {
                State::new(
                    ScalarField::constant(mesh, c),
                    VectorField::zeros(mesh),
                    2.0,
                )
                .unwrap()
            })
            .collect();
        let row = summation_row(&WeightFunction::Equal, 2).unwrap();
        let mf = measure_field_from_runs(&states, Observable::Density, &row, mesh).unwrap();
        write_measure_field(&path, &mf).unwrap();
        let (mesh_back, m, cells) = read_measure_field(&path).unwrap();
        assert_eq!(mesh_back, mesh);
        assert_eq!(m, 1);
        assert_eq!(cells.len(), 9);
        for (atoms, weights) in cells {
            assert_eq!(atoms, vec![1.0, 2.0]);
            assert_eq!(weights, vec![0.5, 0.5]);
        }
    }
}
