//! Spectral embedding algorithms: adjacency spectral embedding, its locally
//! weighted generalisation, and the inductive out-of-sample extension.
//!
//! The weighted embedding diagonalises `W^{1/2} A W^{1/2}` for a diagonal
//! matrix of node weights and maps back through `W^{-1/2}`, which makes the
//! result invariant to the global scale of the weights. Zero-weight nodes
//! are removed before the eigensolve (the spectrum of the active block is
//! unchanged by structural zero rows) and flagged as excluded in the output.

pub mod eigen;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::weights::{WeightStrategy, WeightVector};
use eigen::{eigensolve_topk, AdjacencyOp, EigenOptions, WeightedAdjacencyOp};

pub use eigen::EigenPairs;

/// Threshold on `lambda_min / lambda_1` below which the weighted matrix is
/// flagged as having significant negative eigenvalues.
const NEGATIVE_SPECTRUM_RATIO: f64 = 0.1;

/// How an embedding was produced; serialised into CSV provenance headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    pub r: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_strategy: Option<WeightStrategy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub excluded_count: usize,
}

/// An `n x r` embedding with an explicit mask for rows that are undefined
/// because the node carried zero weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    x: DMatrix<f64>,
    excluded: Vec<bool>,
    provenance: Provenance,
}

impl Embedding {
    /// Validate and wrap: included rows must be finite.
    pub fn from_parts(
        x: DMatrix<f64>,
        excluded: Vec<bool>,
        provenance: Provenance,
    ) -> Result<Embedding> {
        if excluded.len() != x.nrows() {
            return Err(Error::LengthMismatch {
                expected: x.nrows(),
                got: excluded.len(),
            });
        }
        for i in 0..x.nrows() {
            if excluded[i] {
                continue;
            }
            for k in 0..x.ncols() {
                if !x[(i, k)].is_finite() {
                    return Err(Error::Degenerate(format!(
                        "non-finite embedding entry at node {i}, column {k}"
                    )));
                }
            }
        }
        Ok(Embedding {
            x,
            excluded,
            provenance,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn r(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Record the seeds that led to this embedding (graph seed, weight seed,
    /// ...); used by experiment pipelines.
    pub fn push_seed(&mut self, seed: u64) {
        self.provenance.seeds.push(seed);
    }

    pub fn is_excluded(&self, i: usize) -> bool {
        self.excluded[i]
    }

    pub fn excluded_mask(&self) -> &[bool] {
        &self.excluded
    }

    pub fn excluded_count(&self) -> usize {
        self.excluded.iter().filter(|&&e| e).count()
    }

    pub fn included_indices(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.excluded[i]).collect()
    }

    /// Row of node `i`; an error names the node if it was excluded.
    pub fn row(&self, i: usize) -> Result<Vec<f64>> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n(),
            });
        }
        if self.excluded[i] {
            return Err(Error::ExcludedNode { index: i });
        }
        Ok((0..self.r()).map(|k| self.x[(i, k)]).collect())
    }
}

/// Fitted spectral model: the eigenpairs of the weighted adjacency matrix
/// over the active (positive-weight) nodes, plus the weights themselves.
/// This is everything the inductive extension needs.
///
/// Weights are stored at a canonical scale (largest active weight equal to
/// one); the embedding is invariant to this choice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    u: DMatrix<f64>,
    lambda: Vec<f64>,
    weights: WeightVector,
    active: Vec<usize>,
    n: usize,
    method: String,
    warnings: Vec<String>,
}

impl SpectralModel {
    pub fn u(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn r(&self) -> usize {
        self.lambda.len()
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    /// Active node indices (original graph indices), ascending.
    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub(crate) fn from_parts(
        u: DMatrix<f64>,
        lambda: Vec<f64>,
        weights: WeightVector,
        active: Vec<usize>,
        n: usize,
        method: String,
        warnings: Vec<String>,
    ) -> SpectralModel {
        SpectralModel {
            u,
            lambda,
            weights,
            active,
            n,
            method,
            warnings,
        }
    }
}

/// Round a weight ratio to 28 mantissa bits. The embedding is mathematically
/// invariant to the global weight scale, but callers that rescale weights
/// introduce last-ulp rounding; canonicalising to `w / max(w)` and rounding
/// away those bits keeps outputs byte-identical across rescalings.
fn quantize_ratio(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    const DROP: u32 = 52 - 28;
    let bits = x.to_bits();
    let rounded = bits.wrapping_add(1u64 << (DROP - 1)) & !((1u64 << DROP) - 1);
    f64::from_bits(rounded)
}

/// Eigenvalues within this relative distance of zero are numerical noise
/// around an exact zero of the spectrum.
fn zero_floor(lambda_1: f64) -> f64 {
    1e-12 * lambda_1.max(0.0)
}

/// Canonical per-node scale factors for the active set: `w_i / max(w)`,
/// mantissa-rounded.
fn canonical_active_weights(w: &WeightVector, active: &[usize]) -> Vec<f64> {
    let w_max = active
        .iter()
        .map(|&i| w.get(i))
        .fold(f64::NEG_INFINITY, f64::max);
    active
        .iter()
        .map(|&i| quantize_ratio(w.get(i) / w_max))
        .collect()
}

/// Adjacency spectral embedding into `r` dimensions (uniform weights).
pub fn ase(g: &Graph, r: usize, opts: &EigenOptions) -> Result<(Embedding, SpectralModel)> {
    let n = g.node_count();
    let mut pairs = eigensolve_topk(&AdjacencyOp(g), r, opts)?;
    let lambda_r = pairs.values[r - 1];
    // reject meaningfully negative lambda_r; clamp solver noise around an
    // exact zero so sqrt stays defined
    if lambda_r < -zero_floor(pairs.values[0]) {
        return Err(Error::NonPositiveEigenvalue {
            index: r,
            value: lambda_r,
            advice: "adjacency spectral embedding needs lambda_r >= 0; choose a smaller r".into(),
        });
    }
    for v in &mut pairs.values {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let x = embed_from_pairs(&pairs.vectors, &pairs.values, None);
    let embedding = Embedding::from_parts(
        x,
        vec![false; n],
        Provenance {
            method: "ase".into(),
            r,
            weight_strategy: None,
            seeds: vec![],
            excluded_count: 0,
        },
    )?;
    let model = SpectralModel::from_parts(
        pairs.vectors,
        pairs.values,
        WeightVector::uniform(n),
        (0..n).collect(),
        n,
        "ase".into(),
        vec![],
    );
    Ok((embedding, model))
}

/// `X = W^{-1/2} U diag(lambda)^{1/2}` over the active block; `sqrt_w_inv`
/// of `None` means uniform weights.
fn embed_from_pairs(u: &DMatrix<f64>, lambda: &[f64], sqrt_w: Option<&[f64]>) -> DMatrix<f64> {
    let (n, r) = (u.nrows(), u.ncols());
    let mut x = DMatrix::zeros(n, r);
    for k in 0..r {
        let scale = lambda[k].sqrt();
        for i in 0..n {
            let v = u[(i, k)] * scale;
            x[(i, k)] = match sqrt_w {
                Some(s) => v / s[i],
                None => v,
            };
        }
    }
    x
}

/// Local adjacency spectral embedding: top-`r` eigenpairs of
/// `W^{1/2} A W^{1/2}` mapped back through `W^{-1/2}`.
///
/// Zero-weight nodes are removed before the solve and flagged excluded in
/// the returned embedding. Requires at least `r` strictly positive weights
/// and `lambda_r > 0`.
pub fn lase(
    g: &Graph,
    w: &WeightVector,
    r: usize,
    opts: &EigenOptions,
) -> Result<(Embedding, SpectralModel)> {
    let n = g.node_count();
    if w.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: w.len(),
        });
    }
    let active = w.active_indices();
    if active.len() < r {
        return Err(Error::RankTooLarge { r, n: active.len() });
    }
    let canonical = canonical_active_weights(w, &active);

    // subgraph reduction: drop zero-weight rows/columns before solving
    let reduced;
    let sub: &Graph = if active.len() == n {
        g
    } else {
        let (s, _map) = g.induced_subgraph(&active)?;
        reduced = s;
        &reduced
    };
    let op = WeightedAdjacencyOp::new(sub, &canonical)?;
    let pairs = eigensolve_topk(&op, r, opts)?;
    let lambda_r = pairs.values[r - 1];
    if lambda_r <= zero_floor(pairs.values[0]) {
        return Err(Error::NonPositiveEigenvalue {
            index: r,
            value: lambda_r,
            advice: "weighted spectral embedding needs lambda_r > 0; choose a smaller r".into(),
        });
    }
    let mut warnings = Vec::new();
    let lambda_min = match pairs.lambda_min_hint {
        Some(v) => Some(v),
        None => eigen::estimate_lambda_min(&op, opts),
    };
    if let Some(lmin) = lambda_min {
        if lmin < -NEGATIVE_SPECTRUM_RATIO * pairs.values[0] {
            warnings.push(format!(
                "weighted adjacency matrix has significant negative eigenvalues \
                 (lambda_min ~ {lmin:.4e} vs lambda_1 = {:.4e}); a positive-part \
                 embedding may misrepresent this graph",
                pairs.values[0]
            ));
        }
    }

    let sqrt_w: Vec<f64> = canonical.iter().map(|c| c.sqrt()).collect();
    let x_active = embed_from_pairs(&pairs.vectors, &pairs.values, Some(&sqrt_w));
    let mut x = DMatrix::zeros(n, r);
    let mut excluded = vec![true; n];
    for (j, &orig) in active.iter().enumerate() {
        excluded[orig] = false;
        for k in 0..r {
            x[(orig, k)] = x_active[(j, k)];
        }
    }
    let excluded_count = n - active.len();
    // uniform weights over the whole graph reduce exactly to the unweighted
    // embedding; canonicalise the provenance so the reduction is visible in
    // outputs (and output files match the unweighted path byte for byte)
    let is_uniform_reduction = active.len() == n && canonical.iter().all(|&c| c == 1.0);
    let (method, strategy) = if is_uniform_reduction {
        ("ase", None)
    } else {
        ("lase", Some(w.strategy().clone()))
    };
    let embedding = Embedding::from_parts(
        x,
        excluded,
        Provenance {
            method: method.into(),
            r,
            weight_strategy: strategy.clone(),
            seeds: vec![],
            excluded_count,
        },
    )?;

    let mut full_canonical = vec![0.0; n];
    for (j, &orig) in active.iter().enumerate() {
        full_canonical[orig] = canonical[j];
    }
    let model_weights = if is_uniform_reduction {
        WeightVector::uniform(n)
    } else {
        WeightVector::from_raw(full_canonical, w.strategy().clone())?
    };
    let model = SpectralModel::from_parts(
        pairs.vectors,
        pairs.values,
        model_weights,
        active,
        n,
        method.into(),
        warnings,
    );
    Ok((embedding, model))
}

/// Adjacency spectral embedding of the subgraph induced by `nodes`, with
/// rows mapped back to the original indices and all other nodes excluded.
pub fn subgraph_ase(
    g: &Graph,
    nodes: &[usize],
    r: usize,
    opts: &EigenOptions,
) -> Result<(Embedding, SpectralModel)> {
    let n = g.node_count();
    let (sub, map) = g.induced_subgraph(nodes)?;
    let (sub_embedding, sub_model) = ase(&sub, r, opts)?;
    let mut x = DMatrix::zeros(n, r);
    let mut excluded = vec![true; n];
    for (j, &orig) in map.iter().enumerate() {
        excluded[orig] = false;
        for k in 0..r {
            x[(orig, k)] = sub_embedding.matrix()[(j, k)];
        }
    }
    let embedding = Embedding::from_parts(
        x,
        excluded,
        Provenance {
            method: "subgraph_ase".into(),
            r,
            weight_strategy: Some(WeightStrategy::Subgraph {
                selected: map.len(),
            }),
            seeds: vec![],
            excluded_count: n - map.len(),
        },
    )?;
    let mut w = vec![0.0; n];
    for &orig in &map {
        w[orig] = 1.0;
    }
    let model = SpectralModel::from_parts(
        sub_model.u,
        sub_model.lambda,
        WeightVector::from_raw(
            w,
            WeightStrategy::Subgraph {
                selected: map.len(),
            },
        )?,
        map,
        n,
        "subgraph_ase".into(),
        vec![],
    );
    Ok((embedding, model))
}

/// Embed an out-of-sample node from its 0/1 connection vector over the
/// active nodes of a fitted model, without re-solving.
///
/// `a[j]` refers to the j-th active node in `model.active()` order.
pub fn inductive_lase(a: &[f64], model: &SpectralModel) -> Result<Vec<f64>> {
    let m = model.active.len();
    if a.len() != m {
        return Err(Error::LengthMismatch {
            expected: m,
            got: a.len(),
        });
    }
    if let Some(bad) = a.iter().find(|v| **v != 0.0 && **v != 1.0) {
        return Err(Error::Config(format!(
            "connection vector entries must be 0 or 1, got {bad}"
        )));
    }
    if let Some((k, &lam)) = model.lambda.iter().enumerate().find(|(_, &l)| !(l > 0.0)) {
        return Err(Error::NonPositiveEigenvalue {
            index: k + 1,
            value: lam,
            advice: "inductive embedding needs strictly positive model eigenvalues".into(),
        });
    }
    let r = model.r();
    let mut out = vec![0.0; r];
    for k in 0..r {
        let mut acc = 0.0;
        for (j, &orig) in model.active.iter().enumerate() {
            if a[j] != 0.0 {
                acc += a[j] * model.weights.get(orig).sqrt() * model.u[(j, k)];
            }
        }
        out[k] = acc / model.lambda[k].sqrt();
    }
    Ok(out)
}

/// Top-`k` eigenvalues of `A` (or `W^{1/2} A W^{1/2}` when weights are
/// given) together with the successive gaps, for scree inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeReport {
    pub values: Vec<f64>,
    /// `values[i] - values[i+1]`.
    pub gaps: Vec<f64>,
    /// Set when `k` exceeded the node count and was clipped.
    pub clipped: bool,
}

/// Eigenvalue scree of the (optionally weighted) adjacency matrix.
///
/// Weights must be normalised (`sum w = n`) so spectra are comparable
/// across weighting strategies; the structural zero rows of zero-weight
/// nodes are kept, matching the spectrum of the full weighted matrix.
pub fn scree(
    g: &Graph,
    w: Option<&WeightVector>,
    k: usize,
    opts: &EigenOptions,
) -> Result<ScreeReport> {
    let n = g.node_count();
    if k == 0 {
        return Err(Error::Config("scree needs k >= 1".into()));
    }
    let clipped = k > n;
    let k_eff = k.min(n);
    let values = match w {
        None => eigensolve_topk(&AdjacencyOp(g), k_eff, opts)?.values,
        Some(w) => {
            if w.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if !w.is_normalised() {
                return Err(Error::Config(
                    "scree requires normalised weights (sum w = n) so spectra are comparable; \
                     normalise the weight vector first"
                        .into(),
                ));
            }
            let op = WeightedAdjacencyOp::new(g, w.values())?;
            eigensolve_topk(&op, k_eff, opts)?.values
        }
    };
    let gaps = values.windows(2).map(|p| p[0] - p[1]).collect();
    Ok(ScreeReport {
        values,
        gaps,
        clipped,
    })
}
