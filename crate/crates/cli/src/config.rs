//! Flat key-value run configuration.
//!
//! Grammar: `#` starts a comment, blank lines are ignored, `[section]` opens
//! a section, and `key = value` assigns within it. Sections are `scheme`,
//! `experiment` and `analysis`. Lists use commas (`k = 32,64,96`); subdomain
//! boxes use four comma-separated numbers and are separated by semicolons.
//! Unknown sections or keys are errors, so typos cannot silently fall back
//! to defaults. See the README for the full key table.

use std::collections::BTreeMap;
use std::path::Path;

use sha2::{Digest, Sha256};
use vfv_core::experiments::ExperimentConfig;
use vfv_core::scheme::{SchemeParams, TimeMode};

use crate::error::{CliError, Result};

/// Parsed and validated configuration of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scheme: SchemeParams,
    pub experiment: ExperimentConfig,
    /// Interface perturbation amplitude for the shear-layer data.
    pub kh_eps: f64,
    pub analysis: AnalysisDefaults,
}

/// Optional `[analysis]` section; `vfv analyze` flags override these.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisDefaults {
    pub bins: usize,
    pub reference: String,
}

impl Default for AnalysisDefaults {
    fn default() -> Self {
        AnalysisDefaults {
            bins: 20,
            reference: "per-column".into(),
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Config {
            scheme: SchemeParams {
                a: 2.5,
                ..SchemeParams::default()
            },
            experiment: ExperimentConfig {
                mesh_ks: vec![32, 64, 96],
                t_final: 2.0,
                seed: 42,
                projection_subsamples: 8,
                weights: vec!["equal".into(), "quad".into(), "sin2".into(), "exp".into()],
                subdomains: vec![],
                save_times: vec![],
                save_every_steps: 0,
                output_dir: "runs".into(),
            },
            kh_eps: 0.01,
            analysis: AnalysisDefaults::default(),
        }
    }
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Config::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, path: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut section = String::new();
        let err = |line: usize, message: String| CliError::Config {
            path: path.into(),
            line,
            message,
        };
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !["scheme", "experiment", "analysis"].contains(&name) {
                    return Err(err(line_no, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(line_no, format!("expected key = value, got {line:?}")));
            };
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(err(line_no, format!("key {key:?} before any [section]")));
            }
            cfg.assign(&section, key, value)
                .map_err(|message| err(line_no, message))?;
        }
        cfg.validate(path)?;
        Ok(cfg)
    }

    fn assign(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| format!("field {key:?}: {v:?} is not a number"))
        };
        let parse_usize = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| format!("field {key:?}: {v:?} is not a nonnegative integer"))
        };
        match (section, key) {
            ("scheme", "gamma") => self.scheme.gamma = parse_f64(value)?,
            ("scheme", "a") => self.scheme.a = parse_f64(value)?,
            ("scheme", "alpha") => self.scheme.alpha = parse_f64(value)?,
            ("scheme", "eps") => self.scheme.eps = parse_f64(value)?,
            ("scheme", "c_mu") => self.scheme.c_mu = parse_f64(value)?,
            ("scheme", "cfl") => self.scheme.cfl = parse_f64(value)?,
            ("scheme", "dt_ratio") => self.scheme.dt_ratio = parse_f64(value)?,
            ("scheme", "picard_tol") => self.scheme.picard_tol = parse_f64(value)?,
            ("scheme", "picard_max") => self.scheme.picard_max = parse_usize(value)?,
            ("scheme", "mode") => {
                self.scheme.mode = match value {
                    "implicit" => TimeMode::Implicit,
                    "explicit" => TimeMode::Explicit,
                    other => {
                        return Err(format!(
                            "field \"mode\": expected implicit or explicit, got {other:?}"
                        ))
                    }
                }
            }
            ("experiment", "k") => {
                let mut ks = Vec::new();
                for item in value.split(',') {
                    ks.push(
                        item.trim()
                            .parse::<usize>()
                            .map_err(|_| format!("field \"k\": {item:?} is not an integer"))?,
                    );
                }
                self.experiment.mesh_ks = ks;
            }
            ("experiment", "t_final") => self.experiment.t_final = parse_f64(value)?,
            ("experiment", "seed") => {
                self.experiment.seed = value
                    .parse::<u64>()
                    .map_err(|_| format!("field \"seed\": {value:?} is not an integer"))?
            }
            ("experiment", "kh_eps") => self.kh_eps = parse_f64(value)?,
            ("experiment", "projection_subsamples") => {
                self.experiment.projection_subsamples = parse_usize(value)?
            }
            ("experiment", "save_times") => {
                let mut times = Vec::new();
                for item in value.split(',').filter(|s| !s.trim().is_empty()) {
                    times.push(parse_f64(item.trim())?);
                }
                self.experiment.save_times = times;
            }
            ("experiment", "save_every_steps") => {
                self.experiment.save_every_steps = parse_usize(value)?
            }
            ("experiment", "output") => self.experiment.output_dir = value.to_string(),
            ("analysis", "weights") => {
                let mut weights = Vec::new();
                for item in value.split(',').filter(|s| !s.trim().is_empty()) {
                    let name = item.trim();
                    if vfv_core::summation::WeightFunction::by_name(name).is_none() {
                        return Err(format!("field \"weights\": unknown weight {name:?}"));
                    }
                    weights.push(name.to_string());
                }
                self.experiment.weights = weights;
            }
            ("analysis", "subdomains") => {
                let mut boxes = Vec::new();
                for spec in value.split(';').filter(|s| !s.trim().is_empty()) {
                    boxes.push(parse_subdomain(spec).map_err(|m| format!("field \"subdomains\": {m}"))?);
                }
                self.experiment.subdomains = boxes;
            }
            ("analysis", "bins") => self.analysis.bins = parse_usize(value)?,
            ("analysis", "reference") => self.analysis.reference = value.to_string(),
            _ => return Err(format!("unknown key {key:?} in section [{section}]")),
        }
        Ok(())
    }

    fn validate(&self, path: &str) -> Result<()> {
        let err = |message: String| CliError::Config {
            path: path.into(),
            line: 0,
            message,
        };
        self.scheme.validate().map_err(|e| err(e.to_string()))?;
        self.experiment.validate().map_err(|e| err(e.to_string()))?;
        if !(self.kh_eps >= 0.0) {
            return Err(err("kh_eps must be nonnegative".into()));
        }
        Ok(())
    }

    /// Canonical `section.key = value` lines with defaults filled in; equal
    /// configs canonicalize identically regardless of formatting.
    pub fn canonical(&self) -> String {
        let mut map = BTreeMap::new();
        let s = &self.scheme;
        map.insert("scheme.gamma", format!("{}", s.gamma));
        map.insert("scheme.a", format!("{}", s.a));
        map.insert("scheme.alpha", format!("{}", s.alpha));
        map.insert("scheme.eps", format!("{}", s.eps));
        map.insert("scheme.c_mu", format!("{}", s.c_mu));
        map.insert("scheme.cfl", format!("{}", s.cfl));
        map.insert("scheme.dt_ratio", format!("{}", s.dt_ratio));
        map.insert("scheme.picard_tol", format!("{}", s.picard_tol));
        map.insert("scheme.picard_max", format!("{}", s.picard_max));
        map.insert(
            "scheme.mode",
            match s.mode {
                TimeMode::Implicit => "implicit".into(),
                TimeMode::Explicit => "explicit".into(),
            },
        );
        let e = &self.experiment;
        map.insert("experiment.k", join(&e.mesh_ks));
        map.insert("experiment.t_final", format!("{}", e.t_final));
        map.insert("experiment.seed", format!("{}", e.seed));
        map.insert("experiment.kh_eps", format!("{}", self.kh_eps));
        map.insert(
            "experiment.projection_subsamples",
            format!("{}", e.projection_subsamples),
        );
        map.insert("experiment.save_times", join(&e.save_times));
        map.insert(
            "experiment.save_every_steps",
            format!("{}", e.save_every_steps),
        );
        map.insert("experiment.output", e.output_dir.clone());
        map.insert("analysis.weights", e.weights.join(","));
        map.insert(
            "analysis.subdomains",
            e.subdomains
                .iter()
                .map(|b| join(&b[..]))
                .collect::<Vec<_>>()
                .join(";"),
        );
        map.insert("analysis.bins", format!("{}", self.analysis.bins));
        map.insert("analysis.reference", self.analysis.reference.clone());
        let mut out = String::new();
        for (k, v) in map {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Content digest of the canonicalized config.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        hex(&hasher.finalize())
    }
}

/// `x0,x1,y0,y1` box specification.
pub fn parse_subdomain(spec: &str) -> std::result::Result<[f64; 4], String> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected x0,x1,y0,y1; got {spec:?}"));
    }
    let mut out = [0.0f64; 4];
    for (slot, part) in out.iter_mut().zip(&parts) {
        *slot = part
            .parse::<f64>()
            .map_err(|_| format!("{part:?} is not a number"))?;
    }
    if !(out[0] < out[1] && out[2] < out[3]) {
        return Err(format!("degenerate box {spec:?}"));
    }
    Ok(out)
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}
