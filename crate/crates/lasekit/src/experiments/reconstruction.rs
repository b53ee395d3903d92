//! Reconstruction-error sweep: continuous (flat-topped Gaussian) weights
//! against top-hat (induced subgraph) weights of varying width, scored by
//! RMSE of clipped-inner-product reconstruction over a fixed latent region.
//!
//! The continuous family plateaus at its boundary value inside the plateau
//! radius, so increasing the concentration approaches the top-hat regime
//! while staying continuous.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::rmse_region;
use crate::io::{Cell, ColType, CsvTable};
use crate::latent::{
    build_probability_matrix, sample_graph, sample_latent, KernelSpec, SupportSpec,
};
use crate::spectral::eigen::EigenOptions;
use crate::spectral::{lase, subgraph_ase};
use crate::weights::plateau_weights;

use super::subseed;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconstructionConfig {
    pub n: usize,
    pub trials: usize,
    /// Embedding dimension for both weight families.
    pub r: usize,
    /// Concentration grid for the continuous family.
    pub tau_grid: Vec<f64>,
    /// Half-width grid for the top-hat family.
    pub widths_grid: Vec<f64>,
    pub center: f64,
    pub plateau_radius: f64,
    pub region_lo: f64,
    pub region_hi: f64,
    pub box_hi: f64,
    pub kernel: String,
    pub seed: u64,
    pub dense_cutoff: usize,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        ReconstructionConfig {
            n: 1000,
            trials: 10,
            r: 2,
            tau_grid: (1..=10).map(|t| t as f64).collect(),
            widths_grid: vec![0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0],
            center: 4.0,
            plateau_radius: 0.5,
            region_lo: 3.5,
            region_hi: 4.5,
            box_hi: 10.0,
            kernel: "gaussian_full".into(),
            seed: 0,
            dense_cutoff: 1024,
        }
    }
}

/// RMSE samples for one grid point of one weight family.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub family: &'static str,
    pub param: f64,
    pub rmses: Vec<f64>,
}

impl SweepPoint {
    pub fn mean(&self) -> f64 {
        self.rmses.iter().sum::<f64>() / self.rmses.len() as f64
    }

    pub fn standard_error(&self) -> f64 {
        let n = self.rmses.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        let var = self
            .rmses
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        (var / n as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct ReconstructionResult {
    pub continuous: Vec<SweepPoint>,
    pub tophat: Vec<SweepPoint>,
}

impl ReconstructionResult {
    /// `(param, mean rmse)` of the grid point with the lowest mean.
    pub fn best(points: &[SweepPoint]) -> (f64, f64) {
        let best = points
            .iter()
            .min_by(|a, b| a.mean().total_cmp(&b.mean()))
            .expect("non-empty sweep");
        (best.param, best.mean())
    }

    /// Index of the minimiser within its grid.
    pub fn argmin(points: &[SweepPoint]) -> usize {
        (0..points.len())
            .min_by(|&a, &b| points[a].mean().total_cmp(&points[b].mean()))
            .expect("non-empty sweep")
    }
}

/// One trial: sample a graph, sweep both weight families, return RMSE per
/// grid point.
fn run_trial(
    cfg: &ReconstructionConfig,
    kernel: &KernelSpec,
    trial: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let support = SupportSpec::UniformBox {
        lo: vec![0.0],
        hi: vec![cfg.box_hi],
    };
    let sample = sample_latent(&support, cfg.n, subseed(cfg.seed, 0x1A7E, trial as u64))?;
    let p = build_probability_matrix(&sample, kernel);
    let graph = sample_graph(&p, subseed(cfg.seed, 0x6A0F, trial as u64));
    let z = sample.positions();
    let region: Vec<usize> = (0..cfg.n)
        .filter(|&i| z[(i, 0)] >= cfg.region_lo && z[(i, 0)] <= cfg.region_hi)
        .collect();
    if region.len() < 2 {
        return Err(Error::Degenerate(format!(
            "trial {trial}: fewer than two nodes fell in the evaluation region"
        )));
    }
    let opts = EigenOptions {
        dense_cutoff: cfg.dense_cutoff,
        ..EigenOptions::default()
    };

    let mut continuous = Vec::with_capacity(cfg.tau_grid.len());
    for &tau in &cfg.tau_grid {
        let w = plateau_weights(z, &[cfg.center], tau, cfg.plateau_radius)?;
        let (emb, _) = lase(&graph, &w, cfg.r, &opts)?;
        continuous.push(rmse_region(&emb, &p, &region)?.rmse);
    }

    let mut tophat = Vec::with_capacity(cfg.widths_grid.len());
    for &h in &cfg.widths_grid {
        let selected: Vec<usize> = (0..cfg.n)
            .filter(|&i| (z[(i, 0)] - cfg.center).abs() <= h)
            .collect();
        let (emb, _) = subgraph_ase(&graph, &selected, cfg.r, &opts)?;
        tophat.push(rmse_region(&emb, &p, &region)?.rmse);
    }
    Ok((continuous, tophat))
}

/// Run the sweep over seeded trials (in parallel) and report per-point RMSE
/// samples plus mean and standard error.
pub fn run_reconstruction_sweep(
    cfg: &ReconstructionConfig,
    out_dir: Option<&Path>,
) -> Result<ReconstructionResult> {
    if cfg.tau_grid.is_empty() || cfg.widths_grid.is_empty() || cfg.trials == 0 {
        return Err(Error::Config(
            "sweep grids and trial count must be non-empty".into(),
        ));
    }
    let kernel = KernelSpec::parse(&cfg.kernel)?;
    let per_trial: Result<Vec<(Vec<f64>, Vec<f64>)>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &kernel, t))
        .collect();
    let per_trial = per_trial?;

    let continuous: Vec<SweepPoint> = cfg
        .tau_grid
        .iter()
        .enumerate()
        .map(|(i, &tau)| SweepPoint {
            family: "continuous",
            param: tau,
            rmses: per_trial.iter().map(|(c, _)| c[i]).collect(),
        })
        .collect();
    let tophat: Vec<SweepPoint> = cfg
        .widths_grid
        .iter()
        .enumerate()
        .map(|(i, &h)| SweepPoint {
            family: "tophat",
            param: h,
            rmses: per_trial.iter().map(|(_, t)| t[i]).collect(),
        })
        .collect();

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let mut long = CsvTable::new(&[
            ("family", ColType::Str),
            ("param", ColType::Float),
            ("trial", ColType::Int),
            ("rmse", ColType::Float),
        ]);
        let mut summary = CsvTable::new(&[
            ("family", ColType::Str),
            ("param", ColType::Float),
            ("mean_rmse", ColType::Float),
            ("se", ColType::Float),
        ]);
        for point in continuous.iter().chain(&tophat) {
            for (t, rmse) in point.rmses.iter().enumerate() {
                long.push(vec![
                    Cell::Str(point.family.into()),
                    Cell::Float(point.param),
                    Cell::Int(t as i64),
                    Cell::Float(*rmse),
                ])?;
            }
            summary.push(vec![
                Cell::Str(point.family.into()),
                Cell::Float(point.param),
                Cell::Float(point.mean()),
                Cell::Float(point.standard_error()),
            ])?;
        }
        long.write(dir.join("reconstruction_rmse.csv"))?;
        summary.write(dir.join("reconstruction_summary.csv"))?;
    }
    Ok(ReconstructionResult { continuous, tophat })
}
