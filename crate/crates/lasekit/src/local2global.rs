//! Local-to-global pipeline: overlapping m-hop subgraph cover, per-patch
//! spectral embedding, and assembly of a global precomputed distance matrix
//! for downstream manifold learners.
//!
//! Patch embeddings are independent and run in parallel; the assembly is a
//! sequential reduction in patch-index order so results are bit-identical
//! regardless of thread count.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::io;
use crate::spectral::eigen::{eigensolve_topk, AdjacencyOp, EigenOptions};
use crate::spectral::{lase, Embedding};
use crate::weights::{graph_distance_weights, UnreachablePolicy, WeightVector};

/// One seed-centred patch of the cover.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub seed_node: usize,
    /// Patch members, ascending original indices.
    pub nodes: Vec<usize>,
}

/// Overlapping cover of the node set by m-hop neighbourhoods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubgraphCover {
    pub patches: Vec<Patch>,
    pub m: u32,
    pub seed: u64,
}

impl SubgraphCover {
    /// Every node belongs to at least one patch.
    pub fn covers_all(&self, n: usize) -> bool {
        let mut seen = vec![false; n];
        for p in &self.patches {
            for &i in &p.nodes {
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Iteratively pick a uniformly random uncovered node and add its m-hop
/// neighbourhood, until every node is covered. Reproducible under `seed`.
pub fn build_cover(g: &Graph, m: u32, seed: u64) -> Result<SubgraphCover> {
    if m == 0 {
        return Err(Error::Config("cover needs hop radius m >= 1".into()));
    }
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut covered = vec![false; n];
    let mut patches = Vec::new();
    loop {
        let uncovered: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
        if uncovered.is_empty() {
            break;
        }
        let seed_node = uncovered[rng.gen_range(0..uncovered.len())];
        let nodes = g.m_hop_neighborhood(seed_node, m)?;
        for &i in &nodes {
            covered[i] = true;
        }
        patches.push(Patch { seed_node, nodes });
    }
    Ok(SubgraphCover { patches, m, seed })
}

/// How each patch is embedded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PatchWeighting {
    /// Plain adjacency spectral embedding of the induced subgraph.
    Uniform,
    /// Locally weighted embedding with `w_i = exp(-tau * hops(i, seed))`
    /// inside the patch.
    SoftLase { tau: f64 },
}

#[derive(Debug, Clone)]
pub struct EmbedCoverOptions {
    /// Target embedding dimension; rank-deficient patches fall back to the
    /// largest feasible dimension and are flagged.
    pub r: usize,
    pub weighting: PatchWeighting,
    pub eigen: EigenOptions,
}

impl Default for EmbedCoverOptions {
    fn default() -> Self {
        EmbedCoverOptions {
            r: 3,
            weighting: PatchWeighting::Uniform,
            eigen: EigenOptions::default(),
        }
    }
}

/// Spectral embedding of one patch, rows aligned with `nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchEmbedding {
    pub seed_node: usize,
    pub nodes: Vec<usize>,
    /// `|nodes| x r_used`; empty when the patch is degenerate.
    pub x: DMatrix<f64>,
    pub r_used: usize,
    /// Set when `r_used < r` was forced by the patch spectrum.
    pub reduced: bool,
    /// No usable positive eigenvalue (e.g. an edgeless patch); contributes
    /// no distances.
    pub degenerate: bool,
}

fn zero_floor(lambda_1: f64) -> f64 {
    1e-12 * lambda_1.max(0.0)
}

fn embed_patch(g: &Graph, patch: &Patch, opts: &EmbedCoverOptions) -> Result<PatchEmbedding> {
    let (sub, map) = g.induced_subgraph(&patch.nodes)?;
    let n_sub = sub.node_count();
    let r_max = opts.r.min(n_sub);

    match opts.weighting {
        PatchWeighting::Uniform => {
            let pairs = eigensolve_topk(&AdjacencyOp(&sub), r_max, &opts.eigen)?;
            let floor = zero_floor(pairs.values[0]);
            let r_used = pairs.values.iter().take_while(|&&l| l > floor).count();
            if r_used == 0 {
                return Ok(PatchEmbedding {
                    seed_node: patch.seed_node,
                    nodes: map,
                    x: DMatrix::zeros(0, 0),
                    r_used: 0,
                    reduced: true,
                    degenerate: true,
                });
            }
            let mut x = DMatrix::zeros(n_sub, r_used);
            for k in 0..r_used {
                let scale = pairs.values[k].sqrt();
                for i in 0..n_sub {
                    x[(i, k)] = pairs.vectors[(i, k)] * scale;
                }
            }
            Ok(PatchEmbedding {
                seed_node: patch.seed_node,
                nodes: map,
                x,
                r_used,
                reduced: r_used < opts.r,
                degenerate: false,
            })
        }
        PatchWeighting::SoftLase { tau } => {
            let local_seed = map
                .iter()
                .position(|&orig| orig == patch.seed_node)
                .ok_or_else(|| {
                    Error::Degenerate(format!(
                        "patch seed {} is not a member of its own patch",
                        patch.seed_node
                    ))
                })?;
            let dists = sub.bfs_distances(local_seed)?;
            let raw: Vec<f64> = dists
                .dist
                .iter()
                .map(|d| match d {
                    Some(h) => (-tau * *h as f64).exp(),
                    None => 0.0,
                })
                .collect();
            let w = WeightVector::from_raw(
                raw,
                crate::weights::WeightStrategy::Custom {
                    name: format!("patch_soft_lase_tau_{tau}"),
                },
            )?;
            // walk r down until the weighted spectrum supports it
            for r_try in (1..=r_max).rev() {
                match lase(&sub, &w, r_try, &opts.eigen) {
                    Ok((emb, _)) => {
                        let kept: Vec<usize> = emb.included_indices();
                        // patch members with underflowed weights drop out;
                        // restrict rows to the included set
                        let mut x = DMatrix::zeros(kept.len(), r_try);
                        for (row, &i) in kept.iter().enumerate() {
                            for k in 0..r_try {
                                x[(row, k)] = emb.matrix()[(i, k)];
                            }
                        }
                        let nodes: Vec<usize> = kept.iter().map(|&i| map[i]).collect();
                        return Ok(PatchEmbedding {
                            seed_node: patch.seed_node,
                            nodes,
                            x,
                            r_used: r_try,
                            reduced: r_try < opts.r,
                            degenerate: false,
                        });
                    }
                    Err(Error::NonPositiveEigenvalue { .. }) | Err(Error::RankTooLarge { .. }) => {
                        continue
                    }
                    Err(e) => return Err(e),
                }
            }
            Ok(PatchEmbedding {
                seed_node: patch.seed_node,
                nodes: map,
                x: DMatrix::zeros(0, 0),
                r_used: 0,
                reduced: true,
                degenerate: true,
            })
        }
    }
}

/// Embed every patch of the cover (in parallel, deterministic order).
pub fn embed_cover(
    g: &Graph,
    cover: &SubgraphCover,
    opts: &EmbedCoverOptions,
) -> Result<Vec<PatchEmbedding>> {
    if opts.r == 0 {
        return Err(Error::Config(
            "patch embedding dimension must be >= 1".into(),
        ));
    }
    cover
        .patches
        .par_iter()
        .map(|p| embed_patch(g, p, opts))
        .collect()
}

/// Global distance matrix assembled from overlapping patch embeddings.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceAssembly {
    d: DMatrix<f64>,
    counts: Vec<u32>,
    fill_value: f64,
    max_observed: f64,
}

impl DistanceAssembly {
    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    /// Number of patches in which the pair co-occurred.
    pub fn count(&self, i: usize, j: usize) -> u32 {
        self.counts[i * self.n() + j]
    }

    /// The constant assigned to never-co-occurring pairs: ten times the
    /// largest averaged distance.
    pub fn fill_value(&self) -> f64 {
        self.fill_value
    }

    pub fn max_observed(&self) -> f64 {
        self.max_observed
    }
}

/// Average patch-embedding distances per co-occurring pair, then fill the
/// never-co-occurring pairs with `10 x` the maximum averaged distance.
pub fn assemble_distances(n: usize, patches: &[PatchEmbedding]) -> Result<DistanceAssembly> {
    if patches.iter().all(|p| p.degenerate) {
        return Err(Error::Degenerate(
            "all patches are degenerate; no distances can be assembled".into(),
        ));
    }
    let mut sums = DMatrix::<f64>::zeros(n, n);
    let mut counts = vec![0u32; n * n];
    for patch in patches {
        if patch.degenerate {
            continue;
        }
        let k = patch.nodes.len();
        for a in 0..k {
            let i = patch.nodes[a];
            for b in (a + 1)..k {
                let j = patch.nodes[b];
                let mut acc = 0.0;
                for c in 0..patch.r_used {
                    let diff = patch.x[(a, c)] - patch.x[(b, c)];
                    acc += diff * diff;
                }
                let dist = acc.sqrt();
                sums[(i, j)] += dist;
                sums[(j, i)] += dist;
                counts[i * n + j] += 1;
                counts[j * n + i] += 1;
            }
        }
    }
    let mut max_observed = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let c = counts[i * n + j];
            if c > 0 {
                sums[(i, j)] /= c as f64;
                max_observed = max_observed.max(sums[(i, j)]);
            }
        }
    }
    let fill_value = 10.0 * max_observed;
    for i in 0..n {
        for j in 0..n {
            if i != j && counts[i * n + j] == 0 {
                sums[(i, j)] = fill_value;
            }
        }
        sums[(i, i)] = 0.0;
    }
    Ok(DistanceAssembly {
        d: sums,
        counts,
        fill_value,
        max_observed,
    })
}

/// On-disk format for the assembled distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    /// Little-endian: one u64 node count, then row-major f64 values.
    Raw64,
}

/// Sidecar metadata written next to every export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExportMeta {
    pub n: usize,
    pub fill_value: f64,
    pub max_observed: f64,
    pub m: u32,
    pub r: usize,
    pub seeds: Vec<u64>,
    pub patches: usize,
    pub format: ExportFormat,
}

/// Write the precomputed distance matrix plus a `<path>.meta.json` sidecar.
pub fn export_precomputed<P: AsRef<std::path::Path>>(
    assembly: &DistanceAssembly,
    cover: &SubgraphCover,
    r: usize,
    path: P,
    format: ExportFormat,
) -> Result<ExportMeta> {
    let path = path.as_ref();
    match format {
        ExportFormat::Csv => io::write_distance_csv(&assembly.d, path)?,
        ExportFormat::Raw64 => io::write_distance_raw64(&assembly.d, path)?,
    }
    let meta = ExportMeta {
        n: assembly.n(),
        fill_value: assembly.fill_value,
        max_observed: assembly.max_observed,
        m: cover.m,
        r,
        seeds: vec![cover.seed],
        patches: cover.patches.len(),
        format,
    };
    let mut sidecar = path.as_os_str().to_owned();
    sidecar.push(".meta.json");
    io::write_json(&meta, std::path::PathBuf::from(sidecar))?;
    Ok(meta)
}

/// Convenience end-to-end run: cover, embed, assemble.
pub fn cover_and_assemble(
    g: &Graph,
    m: u32,
    seed: u64,
    opts: &EmbedCoverOptions,
) -> Result<(SubgraphCover, Vec<PatchEmbedding>, DistanceAssembly)> {
    let cover = build_cover(g, m, seed)?;
    let patches = embed_cover(g, &cover, opts)?;
    let assembly = assemble_distances(g.node_count(), &patches)?;
    Ok((cover, patches, assembly))
}

/// Expose the full-graph embedding used as the comparison baseline in
/// intra-patch faithfulness checks.
pub fn full_ase_distances(e: &Embedding, i: usize, j: usize) -> Result<f64> {
    let a = e.row(i)?;
    let b = e.row(j)?;
    Ok(a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Graph-distance soft weights around a seed node, the non-binary analogue
/// of patch selection; used by callers that want weighted patches.
pub fn seed_soft_weights(g: &Graph, seed_node: usize, power: f64) -> Result<WeightVector> {
    let dists = g.bfs_distances(seed_node)?;
    graph_distance_weights(&dists, power, UnreachablePolicy::Zero)
}
