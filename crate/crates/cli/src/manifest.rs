//! Per-run manifest: config digest, exact shear-layer coefficients, step
//! summary and checkpoint index, as a deterministic key = value text file.

use std::collections::BTreeMap;
use std::path::Path;

use vfv_core::experiments::KhParams;
use vfv_core::scheme::Trajectory;

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub code_version: String,
    pub config_hash: String,
    pub k: usize,
    pub dim: usize,
    pub t_final: f64,
    pub steps: usize,
    pub mass_initial: f64,
    pub mass_final: f64,
    pub mass_drift_rel: f64,
    pub min_density: f64,
    pub max_energy_residual: f64,
    pub picard_total: usize,
    pub kh: KhParams,
    pub warnings: Vec<String>,
    /// (time, file name) pairs.
    pub checkpoints: Vec<(f64, String)>,
}

fn join_f64(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn split_f64(text: &str) -> std::result::Result<Vec<f64>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("{s:?} is not a number"))
        })
        .collect()
}

impl RunManifest {
    pub fn from_trajectory(
        config_hash: &str,
        k: usize,
        dim: usize,
        kh: &KhParams,
        trajectory: &Trajectory,
        warnings: &[String],
        checkpoints: Vec<(f64, String)>,
    ) -> Self {
        RunManifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: config_hash.to_string(),
            k,
            dim,
            t_final: trajectory.t_final(),
            steps: trajectory.steps(),
            mass_initial: trajectory.initial_mass,
            mass_final: trajectory.final_state.mass(),
            mass_drift_rel: trajectory.mass_drift_rel(),
            min_density: trajectory.min_density(),
            max_energy_residual: trajectory.max_energy_residual(),
            picard_total: trajectory.reports.iter().map(|r| r.picard_iterations).sum(),
            kh: kh.clone(),
            warnings: warnings.to_vec(),
            checkpoints,
        }
    }

    /// Serialized form; float values use the shortest round-trip decimals,
    /// so the exact coefficients can be recovered.
    pub fn render(&self) -> String {
        let mut out = String::from("VFV-MANIFEST v1\n");
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("code_version", self.code_version.clone());
        push("config_hash", self.config_hash.clone());
        push("k", self.k.to_string());
        push("dim", self.dim.to_string());
        push("t_final", format!("{}", self.t_final));
        push("steps", self.steps.to_string());
        push("mass_initial", format!("{}", self.mass_initial));
        push("mass_final", format!("{}", self.mass_final));
        push("mass_drift_rel", format!("{:e}", self.mass_drift_rel));
        push("min_density", format!("{}", self.min_density));
        push(
            "max_energy_residual",
            format!("{:e}", self.max_energy_residual),
        );
        push("picard_total", self.picard_total.to_string());
        push("kh_seed", self.kh.seed.to_string());
        push("kh_eps", format!("{}", self.kh.eps_perturb));
        push("kh_j", format!("{},{}", self.kh.j1, self.kh.j2));
        push("kh_a1", join_f64(&self.kh.a1));
        push("kh_b1", join_f64(&self.kh.b1));
        push("kh_a2", join_f64(&self.kh.a2));
        push("kh_b2", join_f64(&self.kh.b2));
        push(
            "kh_inner",
            format!("{},{},{}", self.kh.rho_inner, self.kh.u_inner[0], self.kh.u_inner[1]),
        );
        push(
            "kh_outer",
            format!("{},{},{}", self.kh.rho_outer, self.kh.u_outer[0], self.kh.u_outer[1]),
        );
        for w in &self.warnings {
            push("warning", w.clone());
        }
        for (t, file) in &self.checkpoints {
            push("checkpoint", format!("t={t} file={file}"));
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.render()).map_err(|e| CliError::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<RunManifest> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        Self::parse(&text).map_err(|message| CliError::Analysis(format!(
            "{}: {message}",
            path.display()
        )))
    }

    fn parse(text: &str) -> std::result::Result<RunManifest, String> {
        let mut lines = text.lines();
        if lines.next() != Some("VFV-MANIFEST v1") {
            return Err("missing VFV-MANIFEST v1 magic".into());
        }
        let mut map: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("malformed line {line:?}"))?;
            map.entry(k.trim()).or_default().push(v.trim());
        }
        let one = |key: &str| -> std::result::Result<&str, String> {
            map.get(key)
                .and_then(|v| v.first())
                .copied()
                .ok_or_else(|| format!("missing key {key}"))
        };
        let parse_f = |key: &str| -> std::result::Result<f64, String> {
            one(key)?.parse::<f64>().map_err(|_| format!("bad float for {key}"))
        };
        let parse_u = |key: &str| -> std::result::Result<usize, String> {
            one(key)?.parse::<usize>().map_err(|_| format!("bad integer for {key}"))
        };

        let inner = split_f64(one("kh_inner")?)?;
        let outer = split_f64(one("kh_outer")?)?;
        let jj = split_f64(one("kh_j")?)?;
        if inner.len() != 3 || outer.len() != 3 || jj.len() != 2 {
            return Err("malformed kh state lines".into());
        }
        let kh = KhParams {
            j1: jj[0],
            j2: jj[1],
            eps_perturb: parse_f("kh_eps")?,
            a1: split_f64(one("kh_a1")?)?,
            b1: split_f64(one("kh_b1")?)?,
            a2: split_f64(one("kh_a2")?)?,
            b2: split_f64(one("kh_b2")?)?,
            rho_inner: inner[0],
            u_inner: [inner[1], inner[2]],
            rho_outer: outer[0],
            u_outer: [outer[1], outer[2]],
            seed: one("kh_seed")?
                .parse::<u64>()
                .map_err(|_| "bad integer for kh_seed".to_string())?,
        };
        let mut checkpoints = Vec::new();
        for spec in map.get("checkpoint").map(|v| v.as_slice()).unwrap_or(&[]) {
            let mut time = None;
            let mut file = None;
            for part in spec.split_whitespace() {
                if let Some(t) = part.strip_prefix("t=") {
                    time = t.parse::<f64>().ok();
                } else if let Some(f) = part.strip_prefix("file=") {
                    file = Some(f.to_string());
                }
            }
            match (time, file) {
                (Some(t), Some(f)) => checkpoints.push((t, f)),
                _ => return Err(format!("malformed checkpoint line {spec:?}")),
            }
        }
        Ok(RunManifest {
            code_version: one("code_version")?.to_string(),
            config_hash: one("config_hash")?.to_string(),
            k: parse_u("k")?,
            dim: parse_u("dim")?,
            t_final: parse_f("t_final")?,
            steps: parse_u("steps")?,
            mass_initial: parse_f("mass_initial")?,
            mass_final: parse_f("mass_final")?,
            mass_drift_rel: parse_f("mass_drift_rel")?,
            min_density: parse_f("min_density")?,
            max_energy_residual: parse_f("max_energy_residual")?,
            picard_total: parse_u("picard_total")?,
            kh,
            warnings: map
                .get("warning")
                .map(|v| v.iter().map(|s| s.to_string()).collect())
                .unwrap_or_default(),
            checkpoints,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use vfv_core::experiments::draw_kh_params;

    #[test]
    fn manifest_roundtrips_exact_coefficients() {
        let kh = draw_kh_params(123);
        let manifest = RunManifest {
            code_version: "0.1.0".into(),
            config_hash: "abc".into(),
            k: 32,
            dim: 2,
            t_final: 2.0,
            steps: 640,
            mass_initial: 1.5000000000000002,
            mass_final: 1.5,
            mass_drift_rel: 1.3e-16,
            min_density: 0.99,
            max_energy_residual: -1.2e-3,
            picard_total: 4480,
            kh: kh.clone(),
            warnings: vec!["alpha outside range".into()],
            checkpoints: vec![(2.0, "state_final.field".into())],
        };
        let parsed = RunManifest::parse(&manifest.render()).unwrap();
        assert_eq!(parsed, manifest);
        // shortest round-trip decimals reproduce every coefficient bit
        assert_eq!(parsed.kh.b1, kh.b1);
    }
}
