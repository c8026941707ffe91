//! Experiment orchestration: one config in, CSV tables plus JSON summary and
//! manifest out.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::chain::ChainSpec;
use crate::config::{ConfigError, Experiment, ExperimentConfig, Format, OUTPUT_ENV};
use crate::control::{ControlSetup, Termination};
use crate::dynamics::{free_evolution_amplitude, run_transfer, Integration, TerminatedBy};
use crate::output::{self, Cell, CsvTable};
use crate::robustness::{disorder_sweep, dynamic_disorder_ensemble, static_coupling_draws, RNG_ALGORITHM};
use crate::spectral::{eigendecompose, occupation_scan, spectrum_report_from, SpectralDecomposition};
use crate::C64;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numeric failure: {0}")]
    Numeric(#[from] crate::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) => 3,
            RunError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares; `None` with fewer than two points or no spread
/// in `x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r_squared })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityRow {
    pub m: usize,
    /// First time the fidelity reached the target; `None` if it never did
    /// before `t_max`.
    pub time_to_target: Option<f64>,
    pub final_fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalabilityTable {
    pub rows: Vec<ScalabilityRow>,
    /// Fit of time against M over the rows that reached the target.
    pub fit: Option<LinearFit>,
}

/// Time to reach `fidelity_target` for each chain length, same pattern and
/// control otherwise.
pub fn scalability_experiment(
    template: &ChainSpec,
    setup: &ControlSetup,
    integration: &Integration,
    m_list: &[usize],
    fidelity_target: f64,
) -> crate::Result<ScalabilityTable> {
    let setup = ControlSetup {
        termination: Termination { fidelity_target: Some(fidelity_target), field_floor: None, ..setup.termination },
        ..setup.clone()
    };
    let rows = m_list
        .par_iter()
        .map(|&m| {
            let spec = template.with_length(m)?;
            let rec = run_transfer(&spec, &setup, integration, 1)?;
            let time_to_target = (rec.terminated_by == TerminatedBy::FidelityTarget).then(|| rec.final_time());
            Ok(ScalabilityRow { m, time_to_target, final_fidelity: rec.final_fidelity() })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter_map(|r| r.time_to_target.map(|t| (r.m as f64, t)))
        .unzip();
    Ok(ScalabilityTable { fit: linear_fit(&xs, &ys), rows })
}

/// `(t, ⟨from|e^{−iH₀t}|from⟩, ⟨to|e^{−iH₀t}|from⟩)` on `0, dt, 2dt, …, t_max`.
pub fn free_evolution_series(
    dec: &SpectralDecomposition,
    t_max: f64,
    sample_dt: f64,
    from_site: usize,
    to_site: usize,
) -> Vec<(f64, C64, C64)> {
    let samples = (t_max / sample_dt).round() as usize;
    (0..=samples)
        .map(|j| {
            let t = j as f64 * sample_dt;
            (t, free_evolution_amplitude(dec, t, from_site, from_site), free_evolution_amplitude(dec, t, from_site, to_site))
        })
        .collect()
}

/// Where results go: the config's directory, else `$LYAPCHAIN_OUTPUT`, else
/// `results/`.
pub fn resolve_output_dir(config: &ExperimentConfig, cli_override: Option<&Path>) -> PathBuf {
    if let Some(p) = cli_override {
        return p.to_path_buf();
    }
    if let Some(p) = &config.output.directory {
        return p.clone();
    }
    std::env::var_os(OUTPUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("results"))
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Value,
    pub files: Vec<PathBuf>,
}

struct Writer<'a> {
    dir: &'a Path,
    config: &'a ExperimentConfig,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn io(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
        move |source| RunError::Io { path: path.to_path_buf(), source }
    }

    fn csv(&mut self, name: &str, table: &CsvTable) -> Result<(), RunError> {
        if self.config.output.wants(Format::Csv) {
            let path = self.dir.join(name);
            table.write(&path).map_err(Self::io(&path))?;
            self.files.push(path);
        }
        Ok(())
    }

    fn json(&mut self, name: &str, value: &Value, always: bool) -> Result<(), RunError> {
        if always || self.config.output.wants(Format::Json) {
            let path = self.dir.join(name);
            let text = serde_json::to_string_pretty(value).expect("json value serializes");
            std::fs::write(&path, text + "\n").map_err(Self::io(&path))?;
            self.files.push(path);
        }
        Ok(())
    }
}

/// Runs the experiment described by `config`, writing into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, RunError> {
    std::fs::create_dir_all(out_dir).map_err(|source| RunError::Io { path: out_dir.to_path_buf(), source })?;
    let started = Instant::now();
    let mut w = Writer { dir: out_dir, config, files: Vec::new() };
    let chain = &config.chain;
    let setup = &config.control;
    let integration = &config.integration;

    let mut summary = match &config.experiment {
        Experiment::Transfer { initial_site } => {
            let rec = run_transfer(chain, setup, integration, *initial_site)?;
            w.csv("trajectory.csv", &output::trajectory_table(&rec))?;
            json!({
                "final_fidelity": rec.final_fidelity(),
                "final_time": rec.final_time(),
                "terminated_by": rec.terminated_by,
                "target": rec.target,
                "steps": rec.steps,
                "renormalizations": rec.renormalizations,
                "max_norm_error": rec.max_norm_error(),
            })
        }
        Experiment::FreeEvolution { t_max, sample_dt, from_site, to_site } => {
            let to = to_site.unwrap_or(chain.m());
            for (what, site) in [("from_site", *from_site), ("to_site", to)] {
                if site == 0 || site > chain.m() {
                    return Err(ConfigError::Schema(format!("experiment.{what} = {site} outside 1..={}", chain.m())).into());
                }
            }
            if !(*sample_dt > 0.0 && *t_max >= 0.0) {
                return Err(ConfigError::Schema("experiment.t_max and sample_dt must be positive".into()).into());
            }
            let dec = eigendecompose(&chain.hamiltonian())?;
            let series = free_evolution_series(&dec, *t_max, *sample_dt, *from_site, to);
            let mut table = CsvTable::new(["t", "re_return", "im_return", "abs_return", "re_transfer", "im_transfer", "abs_transfer"]);
            for &(t, ret, tr) in &series {
                table.push(vec![t.into(), ret.re.into(), ret.im.into(), ret.norm().into(), tr.re.into(), tr.im.into(), tr.norm().into()]);
            }
            w.csv("free_evolution.csv", &table)?;
            json!({
                "min_abs_return": series.iter().map(|s| s.1.norm()).fold(f64::INFINITY, f64::min),
                "max_abs_transfer": series.iter().map(|s| s.2.norm()).fold(0.0, f64::max),
                "samples": series.len(),
            })
        }
        Experiment::OccupationScan { d1, d2, site } => {
            let grid = occupation_scan(chain, &d1.points(), &d2.points(), site.unwrap_or(chain.m()))?;
            w.csv("occupation_scan.csv", &output::occupation_table(&grid))?;
            let max = grid.values.iter().flatten().copied().fold(0.0, f64::max);
            json!({ "rows": grid.d1.len(), "columns": grid.d2.len(), "max_occupation": max })
        }
        Experiment::DisorderSweep { selector, deltas, t_trunc } => {
            let points = disorder_sweep(chain, setup, integration, *selector, &deltas.points(), *t_trunc)?;
            w.csv("sweep.csv", &output::sweep_table(&points))?;
            json!({ "selector": selector, "t_trunc": t_trunc, "points": points })
        }
        Experiment::DynamicDisorder { n, epsilon_range, runs, base_seed, resample_stride } => {
            let ens = dynamic_disorder_ensemble(
                chain,
                setup,
                integration,
                *n,
                (epsilon_range[0], epsilon_range[1]),
                *resample_stride,
                *runs,
                *base_seed,
            )?;
            w.csv("ensemble.csv", &output::ensemble_table(&ens))?;
            json!({
                "final_mean_fidelity": ens.mean.last(),
                "n": ens.n,
                "runs": ens.runs,
                "stride": ens.stride,
                "base_seed": ens.base_seed,
                "seeds": format!("{}..{}", ens.base_seed, ens.base_seed.wrapping_add(ens.runs as u64)),
                "rng": RNG_ALGORITHM,
            })
        }
        Experiment::Spectrum { static_draws } => {
            let dec = eigendecompose(&chain.hamiltonian())?;
            let report = spectrum_report_from(&dec);
            let m = chain.m();
            let occ: Vec<(f64, f64)> = dec.eigenvectors().iter().map(|u| (u[0] * u[0], u[m - 1] * u[m - 1])).collect();
            w.csv("spectrum.csv", &output::spectrum_table(&report, &occ))?;
            let mut s = json!({ "boundary": report.boundary, "min_gap": report.min_gap() });
            if let Some(d) = static_draws {
                let reports = static_coupling_draws(chain, (d.epsilon_range[0], d.epsilon_range[1]), d.draws, d.seed)?;
                let mut table = CsvTable::new(["draw", "gap_first", "gap_last"]);
                for (i, r) in reports.iter().enumerate() {
                    table.push(vec![i.into(), r.boundary[0].gap.into(), r.boundary[1].gap.into()]);
                }
                w.csv("gap_draws.csv", &table)?;
                let worst = reports.iter().map(|r| r.min_gap()).fold(f64::INFINITY, f64::min);
                s["static_draws"] = json!({ "draws": d.draws, "min_gap": worst, "seed": d.seed, "rng": RNG_ALGORITHM });
            }
            s
        }
        Experiment::Scalability { m_list, fidelity_target } => {
            let table = scalability_experiment(chain, setup, integration, m_list, *fidelity_target)?;
            let mut csv = CsvTable::new(["m", "time_to_target", "reached", "final_fidelity"]);
            for r in &table.rows {
                csv.push(vec![
                    r.m.into(),
                    r.time_to_target.map_or(Cell::Text(String::new()), Cell::Float),
                    r.time_to_target.is_some().into(),
                    r.final_fidelity.into(),
                ]);
            }
            w.csv("scalability.csv", &csv)?;
            json!({ "rows": table.rows, "fit": table.fit })
        }
    };

    let elapsed = started.elapsed().as_secs_f64();
    let hash = config.hash();
    summary["experiment"] = json!(config.experiment.name());
    summary["wall_clock_seconds"] = json!(elapsed);
    summary["config_hash"] = json!(hash);
    summary["config"] = config.canonical();
    w.json("summary.json", &summary, false)?;

    let mut outputs: Vec<String> = w.files.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy().into_owned()).collect();
    outputs.push("manifest.json".into());
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": config.experiment.name(),
        "config_hash": hash,
        "config": config.canonical(),
        "wall_clock_seconds": elapsed,
        "outputs": outputs,
    });
    w.json("manifest.json", &manifest, true)?;
    Ok(RunOutcome { summary, files: w.files })
}
