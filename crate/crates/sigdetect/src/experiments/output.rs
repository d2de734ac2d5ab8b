//! Experiment artifacts: the power-curve CSV, run-metadata JSON, the optional
//! sinogram dump, and the top-level experiment runner the command-line
//! interface drives.
//!
//! Numbers are written with Rust's shortest-round-trip float formatting, so a
//! rerun with the same configuration and seed produces byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::detect::{Chi2TestSpec, SupTestSpec};
use crate::dict::DictionarySystem;
use crate::error::{Error, Result};
use crate::experiments::config::{AlternativeSampler, ExperimentConfig, TestKind};
use crate::experiments::power::{
    beta_star_case1, beta_star_case2, chi2_power_per_anomaly, sup_power_uniform_sphere,
    PowerCurve, PowerEstimate,
};
use crate::experiments::studies::{build_study_system, StudySystem};
use crate::operators::OperatorKind;

/// Metadata describing one experiment run.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunMeta {
    /// SHA-256 of the canonicalized configuration.
    pub config_hash: String,
    /// Root seed every replication stream was derived from.
    pub seed: u64,
    /// `git describe --always --dirty` of the source tree, or `"unknown"`.
    pub git_describe: String,
    pub wall_time_seconds: f64,
    /// Crate version that produced the run.
    pub version: String,
}

/// A completed experiment: the measured curve, the system it ran on, and the
/// metadata the artifact writer records.
#[derive(Debug)]
pub struct ExperimentRun {
    pub curve: PowerCurve,
    pub study: StudySystem,
    pub meta: RunMeta,
}

/// `git describe --always --dirty` of the current working tree, falling back
/// to `"unknown"` when git or a repository is unavailable.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|out| out.status.success())
        .and_then(|out| String::from_utf8(out.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Run the configured experiment: build the dictionary and operator, estimate
/// power at every amplitude in the grid, and return the curve plus metadata.
/// No files are written; see [`write_run`].
///
/// Each amplitude gets its own replication-stream salt, so the estimates are
/// independent across grid points and reproducible regardless of evaluation
/// order or worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentRun> {
    let started = Instant::now();
    let study = build_study_system(config)?;
    let e = &config.experiment;
    let curve = match e.test {
        TestKind::Sup => {
            let spec =
                SupTestSpec::new(study.system.images().to_vec(), e.alpha, e.field, e.sigma)?;
            measure_curve(config, |delta, salt| match e.alternative {
                AlternativeSampler::PerAnomalyMean => {
                    beta_star_case1(&spec, delta, e.replications, e.seed, salt)
                }
                AlternativeSampler::UniformSphere => {
                    sup_power_uniform_sphere(&spec, &study.system, delta, e.replications, e.seed, salt)
                }
            })?
        }
        TestKind::Chi2 => {
            let vaguelettes = study
                .system
                .vaguelettes()
                .ok_or_else(|| {
                    Error::MissingData("the χ² experiment needs vaguelettes".into())
                })?
                .to_vec();
            let spec = Chi2TestSpec::new(
                vaguelettes,
                e.alpha,
                e.field,
                e.sigma,
                e.quantile_draws,
                e.seed,
            )?;
            measure_curve(config, |delta, salt| match e.alternative {
                AlternativeSampler::PerAnomalyMean => {
                    chi2_power_per_anomaly(&spec, &study.system, delta, e.replications, e.seed, salt)
                }
                AlternativeSampler::UniformSphere => {
                    beta_star_case2(&spec, &study.system, delta, e.replications, e.seed, salt)
                }
            })?
        }
    };
    let meta = RunMeta {
        config_hash: curve.config_hash.clone(),
        seed: e.seed,
        git_describe: git_describe(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(ExperimentRun { curve, study, meta })
}

fn measure_curve<F>(config: &ExperimentConfig, mut estimate: F) -> Result<PowerCurve>
where
    F: FnMut(f64, u64) -> Result<PowerEstimate>,
{
    let deltas = &config.experiment.delta_grid;
    let mut power = Vec::with_capacity(deltas.len());
    let mut std_err = Vec::with_capacity(deltas.len());
    for (i, &delta) in deltas.iter().enumerate() {
        // Disjoint salt per amplitude keeps replication streams independent
        // across the grid.
        let est = estimate(delta, (i as u64) << 32)?;
        power.push(est.power);
        std_err.push(est.std_err);
    }
    Ok(PowerCurve {
        deltas: deltas.clone(),
        power,
        std_err,
        replications: config.experiment.replications,
        config_hash: config.config_hash(),
    })
}

/// First adjacent pair of curve points whose power drops by more than twice
/// the combined standard errors — evidence of a bug rather than Monte-Carlo
/// noise, since power is monotone in the amplitude.
pub fn monotone_violation(curve: &PowerCurve) -> Option<(usize, usize)> {
    for i in 0..curve.power.len().saturating_sub(1) {
        let slack = 2.0 * (curve.std_err[i] + curve.std_err[i + 1]);
        if curve.deltas[i + 1] >= curve.deltas[i] && curve.power[i + 1] < curve.power[i] - slack {
            return Some((i, i + 1));
        }
    }
    None
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Write the curve as CSV with columns `delta,power,std_err,replications`.
pub fn write_power_curve_csv<W: Write>(curve: &PowerCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["delta", "power", "std_err", "replications"])
        .map_err(csv_err)?;
    for i in 0..curve.deltas.len() {
        w.write_record([
            curve.deltas[i].to_string(),
            curve.power[i].to_string(),
            curve.std_err[i].to_string(),
            curve.replications.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Write the first dictionary image as `t,theta,value` rows — a quick visual
/// check that a tomography run looked at the sinogram it claims.
pub fn write_sinogram_csv<W: Write>(system: &DictionarySystem, out: W) -> Result<()> {
    let image = &system.images()[0];
    let (t_ax, theta_ax) = image
        .grid()
        .axes2()
        .ok_or_else(|| Error::InvalidArgument("sinogram dumps need a 2-D output grid".into()))?;
    let values = image
        .values_real()
        .ok_or_else(|| Error::InvalidArgument("sinogram values must be real".into()))?;
    let ts = t_ax.points();
    let thetas = theta_ax.points();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "theta", "value"]).map_err(csv_err)?;
    for (i, &t) in ts.iter().enumerate() {
        for (k, &theta) in thetas.iter().enumerate() {
            w.write_record([
                t.to_string(),
                theta.to_string(),
                values[i * thetas.len() + k].to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write `power_curve.csv`, `meta.json`, and (for tomography runs)
/// `sinogram.csv` into `dir`, creating it if needed. Returns the paths
/// written.
pub fn write_run(dir: &Path, run: &ExperimentRun) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let curve_path = dir.join("power_curve.csv");
    let file = std::fs::File::create(&curve_path)?;
    write_power_curve_csv(&run.curve, std::io::BufWriter::new(file))?;
    written.push(curve_path);

    let meta_path = dir.join("meta.json");
    let mut json = serde_json::to_string_pretty(&run.meta)
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    json.push('\n');
    std::fs::write(&meta_path, json)?;
    written.push(meta_path);

    if run.study.operator.kind() == OperatorKind::Radon {
        let sino_path = dir.join("sinogram.csv");
        let file = std::fs::File::create(&sino_path)?;
        write_sinogram_csv(&run.study.system, std::io::BufWriter::new(file))?;
        written.push(sino_path);
    }
    Ok(written)
}
