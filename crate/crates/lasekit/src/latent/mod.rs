//! Latent position model machinery: kernels, latent sampling, probability
//! matrices, and Bernoulli graph draws.
//!
//! A latent position model draws positions `Z_1..Z_n` i.i.d. from a measure
//! on a compact latent space and connects nodes independently with
//! probability `f(Z_i, Z_j)` for a symmetric PSD kernel `f` taking values in
//! [0, 1].

pub mod mercer;

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Symmetric kernel on Euclidean latent space with values in [0, 1].
#[derive(Clone)]
pub enum KernelSpec {
    /// `f(x, y) = exp(-||x - y||^2)`
    GaussianFull,
    /// `f(x, y) = exp(-1/2 ||x - y||^2)`
    GaussianHalf,
    /// Caller-supplied evaluator; must be symmetric with values in [0, 1].
    Custom {
        name: String,
        eval: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl KernelSpec {
    pub fn name(&self) -> &str {
        match self {
            KernelSpec::GaussianFull => "gaussian_full",
            KernelSpec::GaussianHalf => "gaussian_half",
            KernelSpec::Custom { name, .. } => name,
        }
    }

    pub fn parse(name: &str) -> Result<KernelSpec> {
        match name {
            "gaussian_full" => Ok(KernelSpec::GaussianFull),
            "gaussian_half" => Ok(KernelSpec::GaussianHalf),
            other => Err(Error::Config(format!(
                "unknown kernel '{other}', expected gaussian_full or gaussian_half"
            ))),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            KernelSpec::GaussianFull => (-sq_norm_diff(x, y)).exp(),
            KernelSpec::GaussianHalf => (-0.5 * sq_norm_diff(x, y)).exp(),
            KernelSpec::Custom { eval, .. } => eval(x, y),
        }
    }
}

fn sq_norm_diff(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d
        })
        .sum()
}

/// Support specification for latent sampling.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum SupportSpec {
    /// Uniform over the axis-aligned box `[lo_k, hi_k]` per dimension.
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Isotropic Gaussian `N(mean, (1/precision) I)`, optionally truncated
    /// to the ball of the given radius around the mean.
    IsotropicGaussian {
        mean: Vec<f64>,
        precision: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truncation_radius: Option<f64>,
    },
}

impl SupportSpec {
    pub fn dim(&self) -> usize {
        match self {
            SupportSpec::UniformBox { lo, .. } => lo.len(),
            SupportSpec::IsotropicGaussian { mean, .. } => mean.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SupportSpec::UniformBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::Config(
                        "uniform box needs matching non-empty lo/hi".into(),
                    ));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(Error::Config(
                        "uniform box needs lo < hi per dimension".into(),
                    ));
                }
            }
            SupportSpec::IsotropicGaussian {
                mean,
                precision,
                truncation_radius,
            } => {
                if mean.is_empty() {
                    return Err(Error::Config(
                        "gaussian support needs a non-empty mean".into(),
                    ));
                }
                if !(precision > &0.0) || !precision.is_finite() {
                    return Err(Error::Config(format!(
                        "precision must be positive, got {precision}"
                    )));
                }
                if let Some(r) = truncation_radius {
                    if !(r > &0.0) {
                        return Err(Error::Config("truncation radius must be positive".into()));
                    }
                }
            }
        }
        Ok(())
    }

    /// Whether a point lies in the declared support.
    pub fn contains(&self, z: &[f64]) -> bool {
        match self {
            SupportSpec::UniformBox { lo, hi } => z
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (l, h))| x >= l && x <= h),
            SupportSpec::IsotropicGaussian {
                mean,
                truncation_radius,
                ..
            } => match truncation_radius {
                None => true,
                Some(r) => sq_norm_diff(z, mean) <= r * r,
            },
        }
    }
}

/// A seeded draw of `n` latent positions, rows of an `n x d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    z: DMatrix<f64>,
    seed: u64,
    support: SupportSpec,
}

impl LatentSample {
    pub fn positions(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.z.nrows()
    }

    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn support(&self) -> &SupportSpec {
        &self.support
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.z.ncols()).map(|d| self.z[(i, d)]).collect()
    }

    /// Wrap externally supplied positions (e.g. planted shapes appended to a
    /// uniform draw). The support is recorded as given; rows are validated
    /// against it.
    pub fn from_positions(
        z: DMatrix<f64>,
        support: SupportSpec,
        seed: u64,
    ) -> Result<LatentSample> {
        support.validate()?;
        for i in 0..z.nrows() {
            let row: Vec<f64> = (0..z.ncols()).map(|d| z[(i, d)]).collect();
            if !support.contains(&row) {
                return Err(Error::Config(format!(
                    "latent position {i} lies outside the declared support"
                )));
            }
        }
        Ok(LatentSample { z, seed, support })
    }
}

/// Draw `n` latent positions from the support, reproducibly under `seed`.
pub fn sample_latent(support: &SupportSpec, n: usize, seed: u64) -> Result<LatentSample> {
    if n == 0 {
        return Err(Error::Config("need n >= 1 latent positions".into()));
    }
    support.validate()?;
    let d = support.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = DMatrix::zeros(n, d);
    match support {
        SupportSpec::UniformBox { lo, hi } => {
            for i in 0..n {
                for k in 0..d {
                    z[(i, k)] = lo[k] + (hi[k] - lo[k]) * rng.gen::<f64>();
                }
            }
        }
        SupportSpec::IsotropicGaussian {
            mean,
            precision,
            truncation_radius,
        } => {
            let sigma = (1.0 / precision).sqrt();
            let normal = Normal::new(0.0, sigma)
                .map_err(|e| Error::Config(format!("invalid gaussian support: {e}")))?;
            for i in 0..n {
                loop {
                    let draw: Vec<f64> =
                        (0..d).map(|k| mean[k] + normal.sample(&mut rng)).collect();
                    let ok = match truncation_radius {
                        None => true,
                        Some(r) => sq_norm_diff(&draw, mean) <= r * r,
                    };
                    if ok {
                        for k in 0..d {
                            z[(i, k)] = draw[k];
                        }
                        break;
                    }
                }
            }
        }
    }
    Ok(LatentSample {
        z,
        seed,
        support: support.clone(),
    })
}

/// Dense symmetric matrix of connection probabilities with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    p: DMatrix<f64>,
}

impl ProbabilityMatrix {
    /// Validate and wrap a raw matrix: square, symmetric, entries in [0, 1],
    /// zero diagonal.
    pub fn from_matrix(p: DMatrix<f64>) -> Result<ProbabilityMatrix> {
        if p.nrows() != p.ncols() {
            return Err(Error::DimensionMismatch(
                "probability matrix must be square".into(),
            ));
        }
        for i in 0..p.nrows() {
            if p[(i, i)] != 0.0 {
                return Err(Error::Config(
                    "probability matrix must have zero diagonal".into(),
                ));
            }
            for j in (i + 1)..p.ncols() {
                let v = p[(i, j)];
                if !(0.0..=1.0).contains(&v) || v != p[(j, i)] {
                    return Err(Error::Config(format!(
                        "invalid probability entry at ({i},{j}): {v}"
                    )));
                }
            }
        }
        Ok(ProbabilityMatrix { p })
    }

    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }
}

/// `P_ij = f(Z_i, Z_j)` for `i != j`, zero diagonal. Each unordered pair is
/// evaluated once and mirrored, so the result is bitwise symmetric.
pub fn build_probability_matrix(sample: &LatentSample, kernel: &KernelSpec) -> ProbabilityMatrix {
    let n = sample.n();
    let mut p = DMatrix::zeros(n, n);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| sample.row(i)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = kernel.eval(&rows[i], &rows[j]);
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    ProbabilityMatrix { p }
}

/// Full kernel Gram matrix `G_ij = f(Z_i, Z_j)` including the diagonal
/// `f(z, z)`. This is the finite-sample Gram of the population operator
/// (whose spectrum is PSD); contrast with [`build_probability_matrix`],
/// which zeroes the diagonal for self-loop-free sampling.
pub fn kernel_gram(sample: &LatentSample, kernel: &KernelSpec) -> DMatrix<f64> {
    let n = sample.n();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| sample.row(i)).collect();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = kernel.eval(&rows[i], &rows[i]);
        for j in (i + 1)..n {
            let v = kernel.eval(&rows[i], &rows[j]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Draw a simple undirected graph: each unordered pair `(i, j)` is an edge
/// with probability `P_ij`, independently, reproducibly under `seed`.
pub fn sample_graph(p: &ProbabilityMatrix, seed: u64) -> Graph {
    let n = p.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < p.get(i, j) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("pair indices are in range by construction")
}

/// Like [`sample_graph`] after [`build_probability_matrix`], but never
/// materialises the dense probability matrix. Draws are identical to the
/// two-step route for the same seed.
pub fn sample_graph_from_latent(sample: &LatentSample, kernel: &KernelSpec, seed: u64) -> Graph {
    let n = sample.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n).map(|i| sample.row(i)).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.gen::<f64>() < kernel.eval(&rows[i], &rows[j]) {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).expect("pair indices are in range by construction")
}
