//! Shape-recovery pipeline: plant small recognisable shapes among uniform
//! background positions, embed with the global, subgraph, and locally
//! weighted methods, and compare region reconstruction error; local methods
//! are tuned over their localisation parameter.

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::eval::{pca_project, rmse_region};
use crate::io::{fmt_f64, Cell, ColType, CsvTable};
use crate::latent::{
    build_probability_matrix, sample_graph_from_latent, sample_latent, KernelSpec, LatentSample,
    ProbabilityMatrix, SupportSpec,
};
use crate::spectral::eigen::EigenOptions;
use crate::spectral::{ase, lase, subgraph_ase, Embedding, Provenance};
use crate::weights::attribute_weights;

use super::subseed;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapesConfig {
    pub n_background: usize,
    pub shape_points: usize,
    pub side: f64,
    /// Embedding dimension before PCA.
    pub r: usize,
    pub pca_dim: usize,
    /// Nodes within this radius of a shape centre form its evaluation
    /// region.
    pub region_radius: f64,
    /// Candidate subgraph radii (tuned by region RMSE).
    pub subgraph_radii: Vec<f64>,
    /// Candidate localisation strengths (tuned by region RMSE).
    pub tau_grid: Vec<f64>,
    pub kernel: String,
    pub seed: u64,
    /// Also embed directly into `pca_dim` dimensions for comparison.
    pub compare_direct_2d: bool,
}

impl Default for ShapesConfig {
    fn default() -> Self {
        ShapesConfig {
            n_background: 4000,
            shape_points: 200,
            side: 10.0,
            r: 3,
            pca_dim: 2,
            region_radius: 1.0,
            subgraph_radii: vec![1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0],
            tau_grid: vec![0.2, 0.4, 0.8, 1.6, 3.2],
            kernel: "gaussian_half".into(),
            seed: 0,
            compare_direct_2d: true,
        }
    }
}

/// The planted outlines. Points are spaced evenly along each stroke.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Circle,
    Cross,
    Triangle,
    Zigzag,
}

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Circle => "circle",
            ShapeKind::Cross => "cross",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Zigzag => "zigzag",
        }
    }

    /// `count` points along the outline, centred at `center`, extent ~0.8.
    pub fn points(&self, center: [f64; 2], count: usize) -> Vec<[f64; 2]> {
        let polyline: Vec<[f64; 2]> = match self {
            ShapeKind::Circle => {
                return (0..count)
                    .map(|i| {
                        let t = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                        [center[0] + 0.8 * t.cos(), center[1] + 0.8 * t.sin()]
                    })
                    .collect();
            }
            ShapeKind::Cross => {
                // two diagonal strokes; handled separately below
                let half = count / 2;
                let mut pts = segment_points([-0.6, -0.6], [0.6, 0.6], half);
                pts.extend(segment_points([-0.6, 0.6], [0.6, -0.6], count - half));
                return pts
                    .into_iter()
                    .map(|p| [center[0] + p[0], center[1] + p[1]])
                    .collect();
            }
            ShapeKind::Triangle => {
                let v = |deg: f64| {
                    let t = deg.to_radians();
                    [0.8 * t.cos(), 0.8 * t.sin()]
                };
                vec![v(90.0), v(210.0), v(330.0), v(90.0)]
            }
            ShapeKind::Zigzag => vec![[-0.5, -0.7], [-0.5, 0.7], [0.5, -0.7], [0.5, 0.7]],
        };
        polyline_points(&polyline, count)
            .into_iter()
            .map(|p| [center[0] + p[0], center[1] + p[1]])
            .collect()
    }
}

fn segment_points(a: [f64; 2], b: [f64; 2], count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|i| {
            let t = if count > 1 {
                i as f64 / (count - 1) as f64
            } else {
                0.5
            };
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

fn polyline_points(vertices: &[[f64; 2]], count: usize) -> Vec<[f64; 2]> {
    let seg_len: Vec<f64> = vertices
        .windows(2)
        .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
        .collect();
    let total: f64 = seg_len.iter().sum();
    (0..count)
        .map(|i| {
            let mut s = total * i as f64 / count as f64;
            for (seg, len) in seg_len.iter().enumerate() {
                if s <= *len || seg == seg_len.len() - 1 {
                    let t = if *len > 0.0 { (s / len).min(1.0) } else { 0.0 };
                    let (a, b) = (vertices[seg], vertices[seg + 1]);
                    return [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                }
                s -= len;
            }
            *vertices.last().unwrap()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ShapeMethodResult {
    pub shape: &'static str,
    pub method: &'static str,
    /// Region RMSE of the r-dimensional embedding.
    pub rmse: f64,
    /// Region RMSE after PCA projection to `pca_dim`.
    pub rmse_pca: f64,
    /// Region RMSE when embedding directly into `pca_dim` dimensions with
    /// the same tuned parameter.
    pub rmse_direct_low: Option<f64>,
    /// Tuned radius (subgraph) or tau (weighted); none for the global
    /// method.
    pub best_param: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ShapesResult {
    pub results: Vec<ShapeMethodResult>,
}

impl ShapesResult {
    pub fn get(&self, shape: &str, method: &str) -> Option<&ShapeMethodResult> {
        self.results
            .iter()
            .find(|r| r.shape == shape && r.method == method)
    }
}

/// Region rows as a standalone embedding over the region's local indices.
fn region_embedding(emb: &Embedding, region: &[usize]) -> Result<Embedding> {
    let mut x = DMatrix::zeros(region.len(), emb.r());
    for (row, &i) in region.iter().enumerate() {
        let vals = emb.row(i)?;
        for (k, v) in vals.iter().enumerate() {
            x[(row, k)] = *v;
        }
    }
    Embedding::from_parts(
        x,
        vec![false; region.len()],
        Provenance {
            method: "region_slice".into(),
            r: emb.r(),
            weight_strategy: None,
            seeds: vec![],
            excluded_count: 0,
        },
    )
}

fn region_rmse(emb: &Embedding, region: &[usize], p_region: &ProbabilityMatrix) -> Result<f64> {
    let local = region_embedding(emb, region)?;
    let all: Vec<usize> = (0..region.len()).collect();
    Ok(rmse_region(&local, p_region, &all)?.rmse)
}

fn rows_matrix(emb: &Embedding, region: &[usize]) -> Result<DMatrix<f64>> {
    let mut x = DMatrix::zeros(region.len(), emb.r());
    for (row, &i) in region.iter().enumerate() {
        let vals = emb.row(i)?;
        for (k, v) in vals.iter().enumerate() {
            x[(row, k)] = *v;
        }
    }
    Ok(x)
}

fn pca_rmse(rows: &DMatrix<f64>, pca_dim: usize, p_region: &ProbabilityMatrix) -> Result<f64> {
    let pca = pca_project(rows, pca_dim)?;
    let emb = Embedding::from_parts(
        pca.projected.clone(),
        vec![false; rows.nrows()],
        Provenance {
            method: "pca".into(),
            r: pca_dim,
            weight_strategy: None,
            seeds: vec![],
            excluded_count: 0,
        },
    )?;
    let all: Vec<usize> = (0..rows.nrows()).collect();
    Ok(rmse_region(&emb, p_region, &all)?.rmse)
}

struct ShapeContext {
    kind: ShapeKind,
    center: [f64; 2],
    region: Vec<usize>,
    p_region: ProbabilityMatrix,
}

/// Run the full pipeline; returns per-(shape, method) region RMSE and, when
/// `out_dir` is given, writes one PCA-projected embedding CSV per pair plus
/// a summary table.
pub fn run_shapes(cfg: &ShapesConfig, out_dir: Option<&Path>) -> Result<ShapesResult> {
    let kernel = KernelSpec::parse(&cfg.kernel)?;
    let support = SupportSpec::UniformBox {
        lo: vec![0.0, 0.0],
        hi: vec![cfg.side, cfg.side],
    };
    let background = sample_latent(&support, cfg.n_background, subseed(cfg.seed, 0xBA5E, 0))?;

    let kinds = [
        ShapeKind::Circle,
        ShapeKind::Cross,
        ShapeKind::Triangle,
        ShapeKind::Zigzag,
    ];
    let quarter = cfg.side / 4.0;
    let centers = [
        [quarter, quarter],
        [3.0 * quarter, quarter],
        [quarter, 3.0 * quarter],
        [3.0 * quarter, 3.0 * quarter],
    ];

    let n_total = cfg.n_background + kinds.len() * cfg.shape_points;
    let mut z = DMatrix::zeros(n_total, 2);
    for i in 0..cfg.n_background {
        z[(i, 0)] = background.positions()[(i, 0)];
        z[(i, 1)] = background.positions()[(i, 1)];
    }
    let mut row = cfg.n_background;
    for (kind, center) in kinds.iter().zip(centers) {
        for p in kind.points(center, cfg.shape_points) {
            z[(row, 0)] = p[0];
            z[(row, 1)] = p[1];
            row += 1;
        }
    }
    let sample = LatentSample::from_positions(z, support, cfg.seed)?;
    let graph = sample_graph_from_latent(&sample, &kernel, subseed(cfg.seed, 0xBA5E, 1));
    let z = sample.positions();
    let opts = EigenOptions::default();

    let contexts: Vec<ShapeContext> = kinds
        .iter()
        .zip(centers)
        .map(|(kind, center)| {
            let region: Vec<usize> = (0..n_total)
                .filter(|&i| {
                    let dx = z[(i, 0)] - center[0];
                    let dy = z[(i, 1)] - center[1];
                    (dx * dx + dy * dy).sqrt() <= cfg.region_radius
                })
                .collect();
            let mut region_z = DMatrix::zeros(region.len(), 2);
            for (r, &i) in region.iter().enumerate() {
                region_z[(r, 0)] = z[(i, 0)];
                region_z[(r, 1)] = z[(i, 1)];
            }
            let region_sample = LatentSample::from_positions(
                region_z,
                SupportSpec::UniformBox {
                    lo: vec![0.0, 0.0],
                    hi: vec![cfg.side, cfg.side],
                },
                0,
            )?;
            Ok(ShapeContext {
                kind: *kind,
                center,
                region,
                p_region: build_probability_matrix(&region_sample, &kernel),
            })
        })
        .collect::<Result<_>>()?;

    // global embedding, shared across shapes
    let (full_r, _) = ase(&graph, cfg.r, &opts)?;
    let full_low = if cfg.compare_direct_2d {
        Some(ase(&graph, cfg.pca_dim, &opts)?.0)
    } else {
        None
    };

    // localised embeddings, tuned per shape over their parameter grids; the
    // grid points are independent and run in parallel
    let graph_ref = &graph;
    let opts_ref = &opts;
    let lase_grid: Result<Vec<(usize, f64, f64, DMatrix<f64>)>> = contexts
        .par_iter()
        .enumerate()
        .flat_map(|(si, ctx)| {
            cfg.tau_grid.par_iter().map(move |&tau| {
                let w = attribute_weights(z, &ctx.center, tau)?;
                let (emb, _) = lase(graph_ref, &w, cfg.r, opts_ref)?;
                let rmse = region_rmse(&emb, &ctx.region, &ctx.p_region)?;
                let rows = rows_matrix(&emb, &ctx.region)?;
                Ok((si, tau, rmse, rows))
            })
        })
        .collect();
    let lase_grid = lase_grid?;

    let subgraph_grid: Result<Vec<(usize, f64, f64, DMatrix<f64>)>> = contexts
        .par_iter()
        .enumerate()
        .flat_map(|(si, ctx)| {
            cfg.subgraph_radii.par_iter().map(move |&radius| {
                let nodes: Vec<usize> = (0..n_total)
                    .filter(|&i| {
                        let dx = z[(i, 0)] - ctx.center[0];
                        let dy = z[(i, 1)] - ctx.center[1];
                        (dx * dx + dy * dy).sqrt() <= radius
                    })
                    .collect();
                let (emb, _) = subgraph_ase(graph_ref, &nodes, cfg.r, opts_ref)?;
                let rmse = region_rmse(&emb, &ctx.region, &ctx.p_region)?;
                let rows = rows_matrix(&emb, &ctx.region)?;
                Ok((si, radius, rmse, rows))
            })
        })
        .collect();
    let subgraph_grid = subgraph_grid?;

    let pick_best = |grid: &[(usize, f64, f64, DMatrix<f64>)], si: usize| {
        grid.iter()
            .filter(|(s, _, _, _)| *s == si)
            .min_by(|a, b| a.2.total_cmp(&b.2))
            .map(|(_, param, rmse, rows)| (*param, *rmse, rows.clone()))
            .expect("non-empty tuning grid")
    };

    let mut results = Vec::new();
    let mut exports: Vec<(String, Vec<usize>, DMatrix<f64>)> = Vec::new();
    for (si, ctx) in contexts.iter().enumerate() {
        let shape = ctx.kind.name();

        // full ASE
        let rmse = region_rmse(&full_r, &ctx.region, &ctx.p_region)?;
        let rows = rows_matrix(&full_r, &ctx.region)?;
        let rmse_pca = pca_rmse(&rows, cfg.pca_dim, &ctx.p_region)?;
        let rmse_direct_low = match &full_low {
            Some(e) => Some(region_rmse(e, &ctx.region, &ctx.p_region)?),
            None => None,
        };
        exports.push((
            format!("{shape}_full_ase"),
            ctx.region.clone(),
            pca_project(&rows, cfg.pca_dim)?.projected,
        ));
        results.push(ShapeMethodResult {
            shape,
            method: "full_ase",
            rmse,
            rmse_pca,
            rmse_direct_low,
            best_param: None,
        });

        // subgraph ASE at the tuned radius
        let (radius, rmse, rows) = pick_best(&subgraph_grid, si);
        let rmse_pca = pca_rmse(&rows, cfg.pca_dim, &ctx.p_region)?;
        let rmse_direct_low = if cfg.compare_direct_2d {
            let nodes: Vec<usize> = (0..n_total)
                .filter(|&i| {
                    let dx = z[(i, 0)] - ctx.center[0];
                    let dy = z[(i, 1)] - ctx.center[1];
                    (dx * dx + dy * dy).sqrt() <= radius
                })
                .collect();
            let (emb, _) = subgraph_ase(&graph, &nodes, cfg.pca_dim, &opts)?;
            Some(region_rmse(&emb, &ctx.region, &ctx.p_region)?)
        } else {
            None
        };
        exports.push((
            format!("{shape}_subgraph_ase"),
            ctx.region.clone(),
            pca_project(&rows, cfg.pca_dim)?.projected,
        ));
        results.push(ShapeMethodResult {
            shape,
            method: "subgraph_ase",
            rmse,
            rmse_pca,
            rmse_direct_low,
            best_param: Some(radius),
        });

        // locally weighted embedding at the tuned tau
        let (tau, rmse, rows) = pick_best(&lase_grid, si);
        let rmse_pca = pca_rmse(&rows, cfg.pca_dim, &ctx.p_region)?;
        let rmse_direct_low = if cfg.compare_direct_2d {
            let w = attribute_weights(z, &ctx.center, tau)?;
            let (emb, _) = lase(&graph, &w, cfg.pca_dim, &opts)?;
            Some(region_rmse(&emb, &ctx.region, &ctx.p_region)?)
        } else {
            None
        };
        exports.push((
            format!("{shape}_lase"),
            ctx.region.clone(),
            pca_project(&rows, cfg.pca_dim)?.projected,
        ));
        results.push(ShapeMethodResult {
            shape,
            method: "lase",
            rmse,
            rmse_pca,
            rmse_direct_low,
            best_param: Some(tau),
        });
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (name, region, projected) in &exports {
            let mut table = CsvTable::new(&[
                ("node", ColType::Int),
                ("x", ColType::Float),
                ("y", ColType::Float),
            ]);
            for (row, &node) in region.iter().enumerate() {
                table.push(vec![
                    Cell::Int(node as i64),
                    Cell::Float(projected[(row, 0)]),
                    Cell::Float(projected[(row, 1)]),
                ])?;
            }
            table.write(dir.join(format!("shapes_{name}.csv")))?;
        }
        let mut summary = CsvTable::new(&[
            ("shape", ColType::Str),
            ("method", ColType::Str),
            ("rmse", ColType::Float),
            ("rmse_pca", ColType::Float),
            ("rmse_direct_low", ColType::OptFloat),
            ("best_param", ColType::Str),
        ]);
        for r in &results {
            summary.push(vec![
                Cell::Str(r.shape.into()),
                Cell::Str(r.method.into()),
                Cell::Float(r.rmse),
                Cell::Float(r.rmse_pca),
                Cell::OptFloat(r.rmse_direct_low),
                Cell::Str(r.best_param.map(fmt_f64).unwrap_or_default()),
            ])?;
        }
        summary.write(dir.join("shapes_summary.csv"))?;
    }
    Ok(ShapesResult { results })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_outlines_have_expected_extent() {
        for kind in [
            ShapeKind::Circle,
            ShapeKind::Cross,
            ShapeKind::Triangle,
            ShapeKind::Zigzag,
        ] {
            let pts = kind.points([5.0, 5.0], 100);
            assert_eq!(pts.len(), 100);
            for p in &pts {
                let d = ((p[0] - 5.0).powi(2) + (p[1] - 5.0).powi(2)).sqrt();
                assert!(d <= 1.0 + 1e-9, "{kind:?} point {p:?} leaves the region");
            }
            // the outline is not collapsed to a point
            let spread: f64 = pts
                .iter()
                .map(|p| ((p[0] - 5.0).powi(2) + (p[1] - 5.0).powi(2)).sqrt())
                .sum::<f64>()
                / 100.0;
            assert!(spread > 0.3, "{kind:?} spread {spread}");
        }
    }

    fn mini_cfg() -> ShapesConfig {
        ShapesConfig {
            n_background: 350,
            shape_points: 60,
            r: 3,
            subgraph_radii: vec![1.0, 1.5],
            tau_grid: vec![0.4, 1.0],
            seed: 4,
            compare_direct_2d: false,
            ..ShapesConfig::default()
        }
    }

    #[test]
    fn mini_pipeline_runs_and_is_deterministic() {
        let a = run_shapes(&mini_cfg(), None).unwrap();
        let b = run_shapes(&mini_cfg(), None).unwrap();
        assert_eq!(a.results.len(), 12); // 4 shapes x 3 methods
        for (x, y) in a.results.iter().zip(&b.results) {
            assert_eq!(x.rmse.to_bits(), y.rmse.to_bits());
            assert_eq!(x.best_param, y.best_param);
        }
        for r in &a.results {
            assert!(
                (0.0..=1.0).contains(&r.rmse),
                "{} {} {}",
                r.shape,
                r.method,
                r.rmse
            );
        }
    }
}
