//! Analysis over a set of completed runs: error/order tables for weighted
//! density averages and for cellwise Wasserstein distances, ensemble average
//! and first-variance field dumps per cutoff, and pooled histograms over
//! subdomains.

use std::path::{Path, PathBuf};

use vfv_core::analysis::{average_convergence_table, eoc, ReferencePolicy, TableRow};
use vfv_core::grid::{overlap_integrate_l1, restrict_to, Mesh, ScalarField};
use vfv_core::measure::{
    measure_field_from_runs, subdomain_histogram, w1_field_l1, MeasureField, Observable,
    Subdomain, DEFAULT_ATOM_CAP,
};
use vfv_core::scheme::State;
use vfv_core::summation::{first_variance, summation_row, weighted_average, WeightFunction};

use crate::error::{CliError, Result};
use crate::fields_io::{read_scalar_field, read_state, write_scalar_field};
use crate::manifest::RunManifest;
use crate::runs::FINAL_STATE_FILE;

pub struct AnalyzeArgs {
    pub run_dirs: Vec<PathBuf>,
    pub weights: Vec<String>,
    pub reference: String,
    pub subdomains: Vec<[f64; 4]>,
    pub bins: usize,
    pub out: PathBuf,
    pub cutoff_max: Option<usize>,
}

struct LoadedRun {
    k: usize,
    state: State,
}

fn load_runs(dirs: &[PathBuf]) -> Result<Vec<LoadedRun>> {
    if dirs.is_empty() {
        return Err(CliError::Usage("analyze needs at least one run directory".into()));
    }
    let mut runs = Vec::new();
    let mut missing = Vec::new();
    let mut t_final: Option<f64> = None;
    for dir in dirs {
        let manifest = match RunManifest::read(dir) {
            Ok(m) => m,
            Err(e) => {
                missing.push(format!("{}: {e}", dir.display()));
                continue;
            }
        };
        match t_final {
            None => t_final = Some(manifest.t_final),
            Some(t) if t == manifest.t_final => {}
            Some(t) => {
                return Err(CliError::Analysis(format!(
                    "runs disagree on the final time: {t} vs {} in {}",
                    manifest.t_final,
                    dir.display()
                )))
            }
        }
        let state_path = dir.join(FINAL_STATE_FILE);
        if !state_path.exists() {
            missing.push(format!("{}: no {FINAL_STATE_FILE}", dir.display()));
            continue;
        }
        let state = read_state(&state_path, manifest.t_final)?;
        runs.push(LoadedRun {
            k: manifest.k,
            state,
        });
    }
    if !missing.is_empty() {
        return Err(CliError::Analysis(format!(
            "missing runs:\n  {}",
            missing.join("\n  ")
        )));
    }
    runs.sort_by_key(|r| r.k);
    for w in runs.windows(2) {
        if w[0].k == w[1].k {
            return Err(CliError::Analysis(format!(
                "duplicate run resolution k={}",
                w[0].k
            )));
        }
    }
    Ok(runs)
}

/// Scientific notation with three significant digits and a signed two-digit
/// exponent (`1.46e-01`).
pub fn sci3(x: f64) -> String {
    if x == 0.0 {
        return "0.00e+00".into();
    }
    let s = format!("{:.2e}", x);
    let (mantissa, exp) = s.split_once('e').expect("exponent in {:.2e}");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}e{exp:+03}")
}

fn order_str(order: Option<f64>) -> String {
    match order {
        Some(o) => format!("{o:.2}"),
        None => "-".into(),
    }
}

fn write_table(path: &Path, rows: &[TableRow]) -> Result<()> {
    let mut text = String::from("k,error,order\n");
    for row in rows {
        text.push_str(&format!(
            "{},{},{}\n",
            row.k,
            sci3(row.error),
            order_str(row.order)
        ));
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn parse_reference(
    spec: &str,
    runs: &[(usize, ScalarField)],
) -> Result<ReferencePolicy> {
    match spec {
        "per-column" => Ok(ReferencePolicy::PerColumn),
        "cesaro-superset" => Ok(ReferencePolicy::CesaroSuperset(runs.to_vec())),
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                let field = read_scalar_field(Path::new(path))?;
                Ok(ReferencePolicy::Field(field))
            } else {
                Err(CliError::Usage(format!(
                    "unknown reference policy {other:?}; use per-column, cesaro-superset or file:<path>"
                )))
            }
        }
    }
}

fn reference_measure_field(
    spec: &str,
    states: &[State],
    omega: &WeightFunction,
    analysis: Mesh,
) -> Result<MeasureField> {
    let row = match spec {
        "per-column" => summation_row(omega, states.len()),
        "cesaro-superset" => summation_row(&WeightFunction::Equal, states.len()),
        other => {
            let Some(path) = other.strip_prefix("file:") else {
                return Err(CliError::Usage(format!("unknown reference policy {other:?}")));
            };
            let field = read_scalar_field(Path::new(path))?;
            let field = restrict_to(&field, analysis);
            // a stored field acts as a cellwise point mass
            let state = State::new(
                field,
                vfv_core::grid::VectorField::zeros(analysis),
                0.0,
            )
            .map_err(CliError::analysis)?;
            let row = summation_row(&WeightFunction::Equal, 1).map_err(CliError::analysis)?;
            return measure_field_from_runs(&[state], Observable::Density, &row, analysis)
                .map_err(CliError::analysis);
        }
    }
    .map_err(CliError::analysis)?;
    measure_field_from_runs(states, Observable::Density, &row, analysis)
        .map_err(CliError::analysis)
}

fn subdomain_name(b: &[f64; 4]) -> String {
    format!("x{}-{}_y{}-{}", b[0], b[1], b[2], b[3])
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<Vec<PathBuf>> {
    let runs = load_runs(&args.run_dirs)?;
    let analysis_mesh = runs.last().map(|r| r.state.mesh()).unwrap();
    let density_runs: Vec<(usize, ScalarField)> = runs
        .iter()
        .map(|r| (r.k, r.state.rho().clone()))
        .collect();
    let states: Vec<State> = runs.iter().map(|r| r.state.clone()).collect();
    let ks: Vec<usize> = runs.iter().map(|r| r.k).collect();
    let cutoffs: Vec<usize> = match args.cutoff_max {
        Some(max) => ks.iter().copied().filter(|&k| k <= max).collect(),
        None => ks.clone(),
    };
    if cutoffs.is_empty() {
        return Err(CliError::Analysis("cutoff filter removed every run".into()));
    }

    std::fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let mut written = Vec::new();
    let single_weight = args.weights.len() == 1;

    for weight_name in &args.weights {
        let Some(omega) = WeightFunction::by_name(weight_name) else {
            return Err(CliError::Usage(format!("unknown weight {weight_name:?}")));
        };
        let field_dir = if single_weight {
            args.out.clone()
        } else {
            let d = args.out.join(weight_name);
            std::fs::create_dir_all(&d).map_err(|e| CliError::io(&d, e))?;
            d
        };

        // error/order table of weighted averages
        let policy = parse_reference(&args.reference, &density_runs)?;
        let avg_rows: Vec<TableRow> = if density_runs.len() == 1 {
            let reference = match &policy {
                ReferencePolicy::Field(f) => restrict_to(f, analysis_mesh),
                _ => restrict_to(&density_runs[0].1, analysis_mesh),
            };
            let own = restrict_to(&density_runs[0].1, analysis_mesh);
            let error = overlap_integrate_l1(&own, &reference).map_err(CliError::analysis)?;
            vec![TableRow {
                k: density_runs[0].0,
                error,
                order: None,
            }]
        } else {
            average_convergence_table(&density_runs, &omega, &policy, &cutoffs, analysis_mesh)
                .map_err(CliError::analysis)?
                .rows
        };
        let table_path = args.out.join(format!("table_avg_{weight_name}.csv"));
        write_table(&table_path, &avg_rows)?;
        written.push(table_path);

        // Wasserstein table of the cellwise ensemble measures
        let ref_mf = reference_measure_field(&args.reference, &states, &omega, analysis_mesh)?;
        let mut wass_rows: Vec<TableRow> = Vec::new();
        for &cutoff in &cutoffs {
            let count = ks.iter().take_while(|&&k| k <= cutoff).count();
            let row = summation_row(&omega, count).map_err(CliError::analysis)?;
            let mf = measure_field_from_runs(
                &states[..count],
                Observable::Density,
                &row,
                analysis_mesh,
            )
            .map_err(CliError::analysis)?;
            let error =
                w1_field_l1(&mf, &ref_mf, DEFAULT_ATOM_CAP).map_err(CliError::analysis)?;
            let order = wass_rows
                .last()
                .and_then(|prev: &TableRow| eoc(prev.error, error, prev.k, cutoff));
            wass_rows.push(TableRow {
                k: cutoff,
                error,
                order,
            });
        }
        let wass_path = args.out.join(format!("table_wass_{weight_name}.csv"));
        write_table(&wass_path, &wass_rows)?;
        written.push(wass_path);

        // average and first-variance fields per cutoff
        for &cutoff in &cutoffs {
            let count = ks.iter().take_while(|&&k| k <= cutoff).count();
            let fields: Vec<ScalarField> = density_runs[..count]
                .iter()
                .map(|(_, f)| f.clone())
                .collect();
            let row = summation_row(&omega, count).map_err(CliError::analysis)?;
            let avg =
                weighted_average(&fields, &row, analysis_mesh).map_err(CliError::analysis)?;
            let var =
                first_variance(&fields, &row, analysis_mesh).map_err(CliError::analysis)?;
            let avg_path = field_dir.join(format!("avg_upto_{cutoff}.field"));
            let var_path = field_dir.join(format!("var_upto_{cutoff}.field"));
            write_scalar_field(&avg_path, &avg)?;
            write_scalar_field(&var_path, &var)?;
            written.push(avg_path);
            written.push(var_path);
        }

        // pooled histograms over the requested subdomains
        if !args.subdomains.is_empty() {
            let row = summation_row(&omega, states.len()).map_err(CliError::analysis)?;
            let mf = measure_field_from_runs(&states, Observable::Density, &row, analysis_mesh)
                .map_err(CliError::analysis)?;
            for b in &args.subdomains {
                let rect = Subdomain::rect(b[0], b[1], b[2], b[3]);
                let hist = subdomain_histogram(&mf, &rect, args.bins)
                    .map_err(CliError::analysis)?;
                let mut text = String::from("bin_lo,bin_hi,prob\n");
                for (i, p) in hist.probabilities.iter().enumerate() {
                    text.push_str(&format!(
                        "{},{},{}\n",
                        hist.edges[i],
                        hist.edges[i + 1],
                        p
                    ));
                }
                let path = field_dir.join(format!("hist_{}.csv", subdomain_name(b)));
                std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
