//! Coordinate-regression harness: predict held-out node coordinates from
//! spectral embeddings by linear regression, against a neighbour-mean
//! imputation baseline, over nested spatial neighbourhoods of randomly
//! chosen centres.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{neighbour_mean_baseline, regress_coordinates};
use crate::graph::Graph;
use crate::io::{fmt_f64, Cell, ColType, CsvTable};
use crate::spectral::eigen::EigenOptions;
use crate::spectral::{ase, lase, subgraph_ase, Embedding};
use crate::weights::{WeightStrategy, WeightVector};

use super::subseed;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CoordRegConfig {
    /// Number of randomly selected neighbourhood centres.
    pub centers: usize,
    /// Neighbourhood sizes (m closest nodes by true coordinates).
    pub m_grid: Vec<usize>,
    /// Embedding dimensions to evaluate.
    pub dims: Vec<usize>,
    /// Held-out test nodes per centre, drawn inside the smallest
    /// neighbourhood.
    pub test_per_center: usize,
    /// Subgraph expansion grid: the subgraph holds the m + k closest nodes.
    pub k_grid: Vec<usize>,
    /// Localisation grid for distance-based weights.
    pub tau_grid: Vec<f64>,
    pub seed: u64,
}

impl Default for CoordRegConfig {
    fn default() -> Self {
        CoordRegConfig {
            centers: 10,
            m_grid: vec![100, 150, 200, 250, 300],
            dims: vec![3, 20],
            test_per_center: 10,
            k_grid: (0..=10).map(|k| k * 10).collect(),
            tau_grid: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoordRegCell {
    pub center: usize,
    pub m: usize,
    pub d: usize,
    pub method: &'static str,
    pub param: Option<f64>,
    pub r2_train: f64,
    pub mse_test: f64,
}

#[derive(Debug, Clone)]
pub struct CoordRegResult {
    pub cells: Vec<CoordRegCell>,
}

impl CoordRegResult {
    /// Mean over centres of a metric for one (m, d, method) combination.
    pub fn mean(
        &self,
        m: usize,
        d: usize,
        method: &str,
        metric: impl Fn(&CoordRegCell) -> f64,
    ) -> f64 {
        let vals: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.m == m && c.d == d && c.method == method)
            .map(metric)
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    }
}

/// Gather embedding rows for a node list; any excluded row is an error.
fn rows_for(emb: &Embedding, nodes: &[usize]) -> Result<DMatrix<f64>> {
    let mut x = DMatrix::zeros(nodes.len(), emb.r());
    for (row, &i) in nodes.iter().enumerate() {
        let vals = emb.row(i)?;
        for (k, v) in vals.iter().enumerate() {
            x[(row, k)] = *v;
        }
    }
    Ok(x)
}

fn coord_rows(coords: &DMatrix<f64>, nodes: &[usize]) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(nodes.len(), coords.ncols());
    for (row, &i) in nodes.iter().enumerate() {
        for k in 0..coords.ncols() {
            y[(row, k)] = coords[(i, k)];
        }
    }
    y
}

fn euclid(coords: &DMatrix<f64>, i: usize, target: &[f64]) -> f64 {
    (0..coords.ncols())
        .map(|k| (coords[(i, k)] - target[k]).powi(2))
        .sum::<f64>()
        .sqrt()
}

struct CenterSetup {
    center: usize,
    /// All nodes ordered by distance to the centre.
    order: Vec<usize>,
    test: Vec<usize>,
    /// True coordinates with test rows replaced by baseline predictions.
    effective: DMatrix<f64>,
    baseline_mse: f64,
}

fn prepare_center(
    g: &Graph,
    coords: &DMatrix<f64>,
    cfg: &CoordRegConfig,
    index: usize,
) -> Result<CenterSetup> {
    let n = g.node_count();
    let m_min = *cfg.m_grid.iter().min().expect("non-empty m grid");
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(cfg.seed, 0xCE17, index as u64));
    let center = rng.gen_range(0..n);
    let c: Vec<f64> = (0..coords.ncols()).map(|k| coords[(center, k)]).collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        euclid(coords, a, &c)
            .total_cmp(&euclid(coords, b, &c))
            .then(a.cmp(&b))
    });

    // held-out nodes from the smallest neighbourhood; redraw any candidate
    // whose baseline would be undefined (no neighbour outside the test set)
    let pool: Vec<usize> = order[..m_min.min(n)].to_vec();
    let mut test: Vec<usize> = Vec::new();
    let mut picked: HashSet<usize> = HashSet::new();
    let mut attempts = 0usize;
    while test.len() < cfg.test_per_center {
        attempts += 1;
        if attempts > 200 * cfg.test_per_center {
            return Err(Error::Degenerate(format!(
                "could not draw {} viable test nodes around centre {center}",
                cfg.test_per_center
            )));
        }
        let cand = pool[rng.gen_range(0..pool.len())];
        if picked.contains(&cand) {
            continue;
        }
        let has_known_neighbour = g
            .neighbors(cand)
            .iter()
            .any(|&j| !picked.contains(&(j as usize)) && j as usize != cand);
        if !has_known_neighbour {
            continue;
        }
        picked.insert(cand);
        test.push(cand);
    }
    test.sort_unstable();

    let known: Vec<bool> = (0..n).map(|i| !picked.contains(&i)).collect();
    let mut effective = coords.clone();
    let mut baseline_sq = 0.0;
    for &t in &test {
        let pred = neighbour_mean_baseline(g, coords, &known, t)?;
        for k in 0..coords.ncols() {
            let diff = pred[k] - coords[(t, k)];
            baseline_sq += diff * diff;
            effective[(t, k)] = pred[k];
        }
    }
    let baseline_mse = baseline_sq / (test.len() * coords.ncols()) as f64;
    Ok(CenterSetup {
        center,
        order,
        test,
        effective,
        baseline_mse,
    })
}

/// Run the harness. Full-graph embeddings are cached per dimension; the
/// weighted method's weights use true coordinates for training nodes and
/// baseline-predicted coordinates for held-out nodes.
pub fn run_coordinate_regression(
    g: &Graph,
    coords: &DMatrix<f64>,
    cfg: &CoordRegConfig,
    out: Option<&Path>,
) -> Result<CoordRegResult> {
    let n = g.node_count();
    if coords.nrows() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: coords.nrows(),
        });
    }
    let m_max = *cfg
        .m_grid
        .iter()
        .max()
        .ok_or_else(|| Error::Config("m grid must be non-empty".into()))?;
    if m_max + cfg.k_grid.iter().max().copied().unwrap_or(0) > n {
        return Err(Error::Config(format!(
            "largest neighbourhood plus expansion exceeds the graph size {n}"
        )));
    }
    let opts = EigenOptions::default();

    // global embeddings are shared by every centre
    let mut full_by_dim = Vec::new();
    for &d in &cfg.dims {
        full_by_dim.push((d, ase(g, d, &opts)?.0));
    }

    let setups: Result<Vec<CenterSetup>> = (0..cfg.centers)
        .map(|i| prepare_center(g, coords, cfg, i))
        .collect();
    let setups = setups?;

    let per_center: Result<Vec<Vec<CoordRegCell>>> = setups
        .par_iter()
        .map(|setup| {
            let mut cells = Vec::new();
            cells.push(CoordRegCell {
                center: setup.center,
                m: 0,
                d: 0,
                method: "baseline",
                param: None,
                r2_train: f64::NAN,
                mse_test: setup.baseline_mse,
            });
            let c_eff: Vec<f64> = (0..coords.ncols())
                .map(|k| setup.effective[(setup.center, k)])
                .collect();

            for &(d, ref full_emb) in &full_by_dim {
                // the weighted embedding depends on (tau, d) but not on m
                let mut lase_cache: Vec<(f64, Option<Embedding>)> = Vec::new();
                for &tau in &cfg.tau_grid {
                    let raw: Vec<f64> = (0..n)
                        .map(|i| (-tau * euclid(&setup.effective, i, &c_eff)).exp())
                        .collect();
                    let emb = WeightVector::from_raw(
                        raw,
                        WeightStrategy::Custom {
                            name: format!("coord_distance_tau_{tau}"),
                        },
                    )
                    .ok()
                    .and_then(|w| lase(g, &w, d, &opts).ok())
                    .map(|(e, _)| e);
                    lase_cache.push((tau, emb));
                }

                for &m in &cfg.m_grid {
                    let hood: Vec<usize> = setup.order[..m.min(n)].to_vec();
                    let test: Vec<usize> = setup.test.clone();
                    let test_set: HashSet<usize> = test.iter().copied().collect();
                    let train: Vec<usize> = hood
                        .iter()
                        .copied()
                        .filter(|i| !test_set.contains(i))
                        .collect();
                    let y_train = coord_rows(coords, &train);
                    let y_test = coord_rows(coords, &test);

                    let mut push =
                        |method: &'static str, param: Option<f64>, emb: &Embedding| -> Result<()> {
                            let rep = regress_coordinates(
                                &rows_for(emb, &train)?,
                                &y_train,
                                &rows_for(emb, &test)?,
                                &y_test,
                            )?;
                            cells.push(CoordRegCell {
                                center: setup.center,
                                m,
                                d,
                                method,
                                param,
                                r2_train: rep.r2_pooled,
                                mse_test: rep.mse_pooled,
                            });
                            Ok(())
                        };

                    push("full_ase", None, full_emb)?;

                    // subgraph: tune the expansion k on training R^2
                    let mut best: Option<(f64, f64, f64, usize)> = None;
                    for &k in &cfg.k_grid {
                        let nodes: Vec<usize> = setup.order[..(m + k).min(n)].to_vec();
                        let Ok((emb, _)) = subgraph_ase(g, &nodes, d, &opts) else {
                            continue;
                        };
                        let rep = regress_coordinates(
                            &rows_for(&emb, &train)?,
                            &y_train,
                            &rows_for(&emb, &test)?,
                            &y_test,
                        )?;
                        let better = match &best {
                            None => true,
                            Some((r2, _, _, _)) => rep.r2_pooled > *r2,
                        };
                        if better {
                            best = Some((rep.r2_pooled, rep.mse_pooled, k as f64, k));
                        }
                    }
                    let (r2, mse, kf, _) = best.ok_or_else(|| {
                        Error::Degenerate(format!(
                            "no feasible subgraph embedding at centre {} m {m} d {d}",
                            setup.center
                        ))
                    })?;
                    cells.push(CoordRegCell {
                        center: setup.center,
                        m,
                        d,
                        method: "subgraph_ase",
                        param: Some(kf),
                        r2_train: r2,
                        mse_test: mse,
                    });

                    // weighted: tune tau on training R^2
                    let mut best: Option<(f64, f64, f64)> = None;
                    for (tau, emb) in &lase_cache {
                        let Some(emb) = emb else { continue };
                        // concentrated weights can exclude far nodes; skip a
                        // tau whose embedding does not cover the
                        // neighbourhood
                        if hood.iter().any(|&i| emb.is_excluded(i)) {
                            continue;
                        }
                        let rep = regress_coordinates(
                            &rows_for(emb, &train)?,
                            &y_train,
                            &rows_for(emb, &test)?,
                            &y_test,
                        )?;
                        let better = match &best {
                            None => true,
                            Some((r2, _, _)) => rep.r2_pooled > *r2,
                        };
                        if better {
                            best = Some((rep.r2_pooled, rep.mse_pooled, *tau));
                        }
                    }
                    let (r2, mse, tau) = best.ok_or_else(|| {
                        Error::Degenerate(format!(
                            "no feasible weighted embedding at centre {} m {m} d {d}",
                            setup.center
                        ))
                    })?;
                    cells.push(CoordRegCell {
                        center: setup.center,
                        m,
                        d,
                        method: "lase",
                        param: Some(tau),
                        r2_train: r2,
                        mse_test: mse,
                    });
                }
            }
            Ok(cells)
        })
        .collect();
    let cells: Vec<CoordRegCell> = per_center?.into_iter().flatten().collect();

    if let Some(path) = out {
        let mut table = CsvTable::new(&[
            ("center", ColType::Int),
            ("m", ColType::Int),
            ("d", ColType::Int),
            ("method", ColType::Str),
            ("param", ColType::Str),
            ("r2_train", ColType::OptFloat),
            ("mse_test", ColType::Float),
        ]);
        for c in &cells {
            table.push(vec![
                Cell::Int(c.center as i64),
                Cell::Int(c.m as i64),
                Cell::Int(c.d as i64),
                Cell::Str(c.method.into()),
                Cell::Str(c.param.map(fmt_f64).unwrap_or_default()),
                Cell::OptFloat(if c.r2_train.is_nan() {
                    None
                } else {
                    Some(c.r2_train)
                }),
                Cell::Float(c.mse_test),
            ])?;
        }
        table.write(path)?;
    }
    Ok(CoordRegResult { cells })
}
