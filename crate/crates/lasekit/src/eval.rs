//! Evaluation utilities: probability reconstruction from embeddings,
//! region RMSE, orthogonal Procrustes alignment, PCA projection, coordinate
//! regression, and the neighbour-mean imputation baseline.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::latent::ProbabilityMatrix;
use crate::spectral::Embedding;

/// Clipped-inner-product reconstruction error over a node region.
#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub rmse: f64,
    /// Unordered within-region pairs entering the RMSE (diagonal excluded).
    pub pairs: usize,
    pub region_size: usize,
    /// Inner products below 0 / above 1 that were clipped.
    pub clipped_low: usize,
    pub clipped_high: usize,
}

fn clip01(v: f64) -> (f64, i8) {
    if v < 0.0 {
        (0.0, -1)
    } else if v > 1.0 {
        (1.0, 1)
    } else {
        (v, 0)
    }
}

fn check_region(e: &Embedding, region: &[usize]) -> Result<Vec<usize>> {
    if region.is_empty() {
        return Err(Error::EmptySelection);
    }
    let set: BTreeSet<usize> = region.iter().copied().collect();
    for &i in &set {
        if i >= e.n() {
            return Err(Error::IndexOutOfRange { index: i, n: e.n() });
        }
        if e.is_excluded(i) {
            return Err(Error::ExcludedNode { index: i });
        }
    }
    Ok(set.into_iter().collect())
}

/// `P_hat[a][b] = clip(<X_i, X_j>, 0, 1)` over the requested nodes, in the
/// order given after dedup/sort. Errors if any requested node was excluded
/// from the embedding.
pub fn reconstruct_probabilities(
    e: &Embedding,
    nodes: &[usize],
) -> Result<(DMatrix<f64>, usize, usize)> {
    let nodes = check_region(e, nodes)?;
    let m = nodes.len();
    let mut p_hat = DMatrix::zeros(m, m);
    let mut low = 0usize;
    let mut high = 0usize;
    for a in 0..m {
        for b in a..m {
            let mut dot = 0.0;
            for k in 0..e.r() {
                dot += e.matrix()[(nodes[a], k)] * e.matrix()[(nodes[b], k)];
            }
            let (v, c) = clip01(dot);
            if c < 0 {
                low += 1;
            } else if c > 0 {
                high += 1;
            }
            p_hat[(a, b)] = v;
            p_hat[(b, a)] = v;
        }
    }
    Ok((p_hat, low, high))
}

/// RMSE between reconstructed and true connection probabilities over the
/// unordered pairs of `region`, diagonal excluded.
pub fn rmse_region(
    e: &Embedding,
    p_true: &ProbabilityMatrix,
    region: &[usize],
) -> Result<ReconstructionReport> {
    if p_true.n() != e.n() {
        return Err(Error::LengthMismatch {
            expected: e.n(),
            got: p_true.n(),
        });
    }
    let region = check_region(e, region)?;
    if region.len() < 2 {
        return Err(Error::Degenerate(
            "rmse_region needs at least two nodes (no pairs otherwise)".into(),
        ));
    }
    let mut acc = 0.0;
    let mut pairs = 0usize;
    let mut low = 0usize;
    let mut high = 0usize;
    for a in 0..region.len() {
        for b in (a + 1)..region.len() {
            let (i, j) = (region[a], region[b]);
            let mut dot = 0.0;
            for k in 0..e.r() {
                dot += e.matrix()[(i, k)] * e.matrix()[(j, k)];
            }
            let (v, c) = clip01(dot);
            if c < 0 {
                low += 1;
            } else if c > 0 {
                high += 1;
            }
            let d = v - p_true.get(i, j);
            acc += d * d;
            pairs += 1;
        }
    }
    Ok(ReconstructionReport {
        rmse: (acc / pairs as f64).sqrt(),
        pairs,
        region_size: region.len(),
        clipped_low: low,
        clipped_high: high,
    })
}

/// Options for [`procrustes_align`]. The default fit is purely orthogonal:
/// embeddings and feature maps share the Gram scale, so scaling and
/// translation are off unless requested.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProcrustesOptions {
    pub center: bool,
    pub scale: bool,
}

#[derive(Debug, Clone)]
pub struct ProcrustesResult {
    /// Orthogonal map applied on the right of (centered) `x`.
    pub rotation: DMatrix<f64>,
    pub aligned: DMatrix<f64>,
    pub residual: f64,
    pub scale: f64,
    /// Means used when centering was requested.
    pub x_mean: Option<DVector<f64>>,
    pub y_mean: Option<DVector<f64>>,
    /// The cross-covariance was singular; the fit is still valid but the
    /// rotation is not unique.
    pub rank_deficient: bool,
}

/// Orthogonal Procrustes: the orthogonal `Q` (reflections allowed)
/// minimising `||X Q - Y||_F`, via SVD of `X^T Y`.
pub fn procrustes_align(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    opts: ProcrustesOptions,
) -> Result<ProcrustesResult> {
    if x.shape() != y.shape() {
        return Err(Error::DimensionMismatch(format!(
            "point sets have shapes {:?} and {:?}",
            x.shape(),
            y.shape()
        )));
    }
    let d = x.ncols();
    let (xc, yc, x_mean, y_mean) = if opts.center {
        let xm = x.row_mean().transpose();
        let ym = y.row_mean().transpose();
        let mut xc = x.clone();
        let mut yc = y.clone();
        for i in 0..x.nrows() {
            for k in 0..d {
                xc[(i, k)] -= xm[k];
                yc[(i, k)] -= ym[k];
            }
        }
        (xc, yc, Some(xm), Some(ym))
    } else {
        (x.clone(), y.clone(), None, None)
    };

    let cross = xc.transpose() * &yc;
    let svd = cross.svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let rotation = u * v_t;
    let sv_max = svd.singular_values.max();
    let rank_deficient = svd
        .singular_values
        .iter()
        .any(|s| *s <= 1e-12 * sv_max.max(1e-300));

    let scale = if opts.scale {
        let denom: f64 = xc.iter().map(|v| v * v).sum();
        if denom > 0.0 {
            svd.singular_values.iter().sum::<f64>() / denom
        } else {
            1.0
        }
    } else {
        1.0
    };

    let mut aligned = (&xc * &rotation) * scale;
    if let Some(ym) = &y_mean {
        for i in 0..aligned.nrows() {
            for k in 0..d {
                aligned[(i, k)] += ym[k];
            }
        }
    }
    let residual = (&aligned - y).norm();
    Ok(ProcrustesResult {
        rotation,
        aligned,
        residual,
        scale,
        x_mean,
        y_mean,
        rank_deficient,
    })
}

#[derive(Debug, Clone)]
pub struct PcaResult {
    /// `n x target_dim` scores.
    pub projected: DMatrix<f64>,
    /// `d x target_dim` orthonormal directions.
    pub components: DMatrix<f64>,
    pub mean: DVector<f64>,
    /// Variance captured by each component.
    pub explained: Vec<f64>,
}

/// Mean-centered projection onto the top principal directions.
pub fn pca_project(x: &DMatrix<f64>, target_dim: usize) -> Result<PcaResult> {
    let (n, d) = x.shape();
    if target_dim == 0 || target_dim > d {
        return Err(Error::DimensionMismatch(format!(
            "target dimension {target_dim} out of range for ambient dimension {d}"
        )));
    }
    if n < target_dim {
        return Err(Error::Degenerate(format!(
            "need at least {target_dim} points, got {n}"
        )));
    }
    let mean = x.row_mean().transpose();
    let mut centered = x.clone();
    for i in 0..n {
        for k in 0..d {
            centered[(i, k)] -= mean[k];
        }
    }
    let svd = centered.clone().svd(true, true);
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let mut components = DMatrix::zeros(d, target_dim);
    for c in 0..target_dim {
        for k in 0..d {
            components[(k, c)] = v_t[(c, k)];
        }
    }
    crate::spectral::eigen::fix_column_signs(&mut components);
    let projected = &centered * &components;
    let explained = (0..target_dim)
        .map(|c| {
            let s = svd.singular_values[c];
            s * s / n as f64
        })
        .collect();
    Ok(PcaResult {
        projected,
        components,
        mean,
        explained,
    })
}

/// Ordinary least squares with intercept, plus held-out error.
#[derive(Debug, Clone, Serialize)]
pub struct RegressionReport {
    /// Training R^2 per target column.
    pub r2_per_target: Vec<f64>,
    /// Pooled training R^2 across targets.
    pub r2_pooled: f64,
    /// Held-out MSE per target column.
    pub mse_per_target: Vec<f64>,
    pub mse_pooled: f64,
    /// `(p + 1) x d`: row 0 is the intercept.
    pub coefficients: Vec<Vec<f64>>,
    /// The design matrix was rank-deficient and the fit went through the
    /// pseudoinverse.
    pub rank_deficient: bool,
    pub condition_number: f64,
}

/// Fit `Y ~ 1 + X` on the training split by least squares (SVD
/// pseudoinverse; rank deficiency is flagged, not fatal) and evaluate mean
/// squared error on the held-out split.
pub fn regress_coordinates(
    x_train: &DMatrix<f64>,
    y_train: &DMatrix<f64>,
    x_test: &DMatrix<f64>,
    y_test: &DMatrix<f64>,
) -> Result<RegressionReport> {
    let (n, p) = x_train.shape();
    let d = y_train.ncols();
    if y_train.nrows() != n {
        return Err(Error::DimensionMismatch(
            "x_train and y_train row counts differ".into(),
        ));
    }
    if x_test.ncols() != p || y_test.ncols() != d || x_test.nrows() != y_test.nrows() {
        return Err(Error::DimensionMismatch(
            "test split shapes do not match the training split".into(),
        ));
    }
    if n < p + 2 {
        return Err(Error::Degenerate(format!(
            "need at least {} training rows for {p} features plus intercept",
            p + 2
        )));
    }

    let mut design = DMatrix::zeros(n, p + 1);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        for k in 0..p {
            design[(i, k + 1)] = x_train[(i, k)];
        }
    }
    let svd = design.clone().svd(true, true);
    let sv_max = svd.singular_values.max();
    let rank_tol = sv_max * (n.max(p + 1) as f64) * f64::EPSILON;
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > rank_tol)
        .count();
    let rank_deficient = rank < p + 1;
    let sv_min_kept = svd
        .singular_values
        .iter()
        .filter(|s| **s > rank_tol)
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let condition_number = sv_max / sv_min_kept;
    let beta = svd
        .solve(y_train, rank_tol)
        .map_err(|e| Error::Degenerate(format!("least squares solve failed: {e}")))?;

    let fitted = &design * &beta;
    let mut r2_per_target = Vec::with_capacity(d);
    let mut ss_res_total = 0.0;
    let mut ss_tot_total = 0.0;
    for k in 0..d {
        let mean = y_train.column(k).mean();
        let mut ss_res = 0.0;
        let mut ss_tot = 0.0;
        for i in 0..n {
            let r = y_train[(i, k)] - fitted[(i, k)];
            let t = y_train[(i, k)] - mean;
            ss_res += r * r;
            ss_tot += t * t;
        }
        ss_res_total += ss_res;
        ss_tot_total += ss_tot;
        r2_per_target.push(r_squared(ss_res, ss_tot));
    }
    let r2_pooled = r_squared(ss_res_total, ss_tot_total);

    let n_test = x_test.nrows();
    let mut mse_per_target = vec![0.0; d];
    if n_test > 0 {
        for i in 0..n_test {
            for k in 0..d {
                let mut pred = beta[(0, k)];
                for j in 0..p {
                    pred += x_test[(i, j)] * beta[(j + 1, k)];
                }
                let diff = pred - y_test[(i, k)];
                mse_per_target[k] += diff * diff;
            }
        }
        for v in &mut mse_per_target {
            *v /= n_test as f64;
        }
    }
    let mse_pooled = if d > 0 {
        mse_per_target.iter().sum::<f64>() / d as f64
    } else {
        0.0
    };

    let coefficients = (0..p + 1)
        .map(|i| (0..d).map(|k| beta[(i, k)]).collect())
        .collect();
    Ok(RegressionReport {
        r2_per_target,
        r2_pooled,
        mse_per_target,
        mse_pooled,
        coefficients,
        rank_deficient,
        condition_number,
    })
}

fn r_squared(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot <= 1e-300 {
        if ss_res <= 1e-300 {
            1.0
        } else {
            -1e300 // constant target, nonzero residual; keep finite for JSON
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

/// Pearson correlation coefficient between two equal-length samples.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::Degenerate(
            "correlation needs at least two samples".into(),
        ));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va <= 0.0 || vb <= 0.0 {
        return Err(Error::Degenerate(
            "constant sample has no correlation".into(),
        ));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Mean coordinates of the node's neighbours that have known coordinates.
pub fn neighbour_mean_baseline(
    g: &Graph,
    coords: &DMatrix<f64>,
    known: &[bool],
    node: usize,
) -> Result<Vec<f64>> {
    let n = g.node_count();
    if node >= n {
        return Err(Error::IndexOutOfRange { index: node, n });
    }
    if coords.nrows() != n || known.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: coords.nrows().min(known.len()),
        });
    }
    let d = coords.ncols();
    let mut acc = vec![0.0; d];
    let mut count = 0usize;
    for &j in g.neighbors(node) {
        let j = j as usize;
        if known[j] {
            for k in 0..d {
                acc[k] += coords[(j, k)];
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Degenerate(format!(
            "node {node} has no neighbour with known coordinates"
        )));
    }
    for v in &mut acc {
        *v /= count as f64;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Provenance;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn embedding_from(x: DMatrix<f64>) -> Embedding {
        let n = x.nrows();
        let r = x.ncols();
        Embedding::from_parts(
            x,
            vec![false; n],
            Provenance {
                method: "test".into(),
                r,
                weight_strategy: None,
                seeds: vec![],
                excluded_count: 0,
            },
        )
        .unwrap()
    }

    fn random_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    fn random_orthogonal(d: usize, seed: u64) -> DMatrix<f64> {
        random_matrix(d, d, seed).qr().q()
    }

    #[test]
    fn reconstruct_trivial_cases() {
        // identical unit vectors -> 1, orthogonal -> 0
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let e = embedding_from(x);
        let (p, low, high) = reconstruct_probabilities(&e, &[0, 1, 2]).unwrap();
        assert_eq!(p[(0, 1)], 1.0);
        assert_eq!(p[(0, 2)], 0.0);
        assert_eq!((low, high), (0, 0));

        // inner product 1.3 clips to 1 and is counted
        let x = DMatrix::from_row_slice(2, 1, &[1.3, 1.0]);
        let e = embedding_from(x);
        let (p, low, high) = reconstruct_probabilities(&e, &[0, 1]).unwrap();
        assert_eq!(p[(0, 1)], 1.0);
        assert!(high >= 1);
        assert_eq!(low, 0);
        assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn reconstruct_rejects_excluded() {
        let x = DMatrix::zeros(3, 2);
        let e = Embedding::from_parts(
            x,
            vec![false, true, false],
            Provenance {
                method: "test".into(),
                r: 2,
                weight_strategy: None,
                seeds: vec![],
                excluded_count: 1,
            },
        )
        .unwrap();
        match reconstruct_probabilities(&e, &[0, 1]) {
            Err(Error::ExcludedNode { index }) => assert_eq!(index, 1),
            other => panic!("expected excluded-node error, got {other:?}"),
        }
    }

    #[test]
    fn rmse_region_trivialities() {
        // Gram of x equals P on the region -> rmse 0
        let x = DMatrix::from_row_slice(3, 1, &[0.5, 0.5, 0.5]);
        let e = embedding_from(x);
        let mut p = DMatrix::from_element(3, 3, 0.25);
        p.fill_diagonal(0.0);
        let p = ProbabilityMatrix::from_matrix(p).unwrap();
        let rep = rmse_region(&e, &p, &[0, 1, 2]).unwrap();
        assert!(rep.rmse < 1e-12);
        assert_eq!(rep.pairs, 3);

        // zero embedding against all-one probabilities -> rmse 1
        let e = embedding_from(DMatrix::zeros(3, 2));
        let mut ones = DMatrix::from_element(3, 3, 1.0);
        ones.fill_diagonal(0.0);
        let p = ProbabilityMatrix::from_matrix(ones).unwrap();
        let rep = rmse_region(&e, &p, &[0, 1, 2]).unwrap();
        assert!((rep.rmse - 1.0).abs() < 1e-12);

        // singleton region has no pairs
        assert!(rmse_region(&e, &p, &[1]).is_err());
    }

    #[test]
    fn rmse_invariant_under_orthogonal_maps() {
        let x = random_matrix(12, 3, 5);
        let q = random_orthogonal(3, 6);
        let mut p = DMatrix::from_fn(12, 12, |i, j| if i == j { 0.0 } else { 0.3 });
        p.fill_diagonal(0.0);
        let p = ProbabilityMatrix::from_matrix(p).unwrap();
        let region: Vec<usize> = (0..12).collect();
        let r1 = rmse_region(&embedding_from(x.clone()), &p, &region).unwrap();
        let r2 = rmse_region(&embedding_from(&x * q), &p, &region).unwrap();
        assert!((r1.rmse - r2.rmse).abs() < 1e-12);
    }

    #[test]
    fn procrustes_identity_and_rotation_recovery() {
        let x = random_matrix(20, 3, 1);
        let res = procrustes_align(&x, &x, ProcrustesOptions::default()).unwrap();
        assert!((res.rotation.clone() - DMatrix::identity(3, 3)).abs().max() < 1e-10);
        assert!(res.residual < 1e-10);

        let r = random_orthogonal(3, 2);
        let y = &x * &r;
        let res = procrustes_align(&x, &y, ProcrustesOptions::default()).unwrap();
        assert!((res.rotation.clone() - r).abs().max() < 1e-10);
        assert!(res.residual <= 1e-10);
    }

    #[test]
    fn procrustes_recovers_reflections() {
        let x = random_matrix(15, 2, 3);
        let refl = DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, -1.0]));
        let y = &x * &refl;
        let res = procrustes_align(&x, &y, ProcrustesOptions::default()).unwrap();
        assert!((res.rotation.determinant() + 1.0).abs() < 1e-10);
        assert!(res.residual <= 1e-10);
    }

    #[test]
    fn procrustes_residual_is_minimal() {
        let x = random_matrix(25, 3, 7);
        let y = random_matrix(25, 3, 8);
        let best = procrustes_align(&x, &y, ProcrustesOptions::default()).unwrap();
        for seed in 0..100u64 {
            let q = random_orthogonal(3, 100 + seed);
            let residual = (&x * q - &y).norm();
            assert!(residual >= best.residual - 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn pca_planar_points_project_losslessly() {
        // points in a 2D plane embedded in 3D
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let basis = random_orthogonal(3, 11);
        let mut x = DMatrix::zeros(40, 3);
        for i in 0..40 {
            let a: f64 = rng.gen::<f64>() * 4.0 - 2.0;
            let b: f64 = rng.gen::<f64>() * 4.0 - 2.0;
            for k in 0..3 {
                x[(i, k)] = a * basis[(k, 0)] + b * basis[(k, 1)] + 5.0;
            }
        }
        let res = pca_project(&x, 2).unwrap();
        // reconstruction from 2 components is exact
        let recon = &res.projected * res.components.transpose();
        for i in 0..40 {
            for k in 0..3 {
                let c = x[(i, k)] - res.mean[k];
                assert!((recon[(i, k)] - c).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pca_full_dimension_preserves_distances() {
        let x = random_matrix(30, 4, 9);
        let res = pca_project(&x, 4).unwrap();
        for i in 0..30 {
            for j in (i + 1)..30 {
                let d0 = (x.row(i) - x.row(j)).norm();
                let d1 = (res.projected.row(i) - res.projected.row(j)).norm();
                assert!((d0 - d1).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pca_isotropic_variance_ratio() {
        let x = random_matrix(6000, 4, 13);
        let res = pca_project(&x, 2).unwrap();
        let total: f64 = {
            let mean = x.row_mean();
            let mut acc = 0.0;
            for i in 0..x.nrows() {
                for k in 0..4 {
                    let d = x[(i, k)] - mean[k];
                    acc += d * d;
                }
            }
            acc / x.nrows() as f64
        };
        let kept: f64 = res.explained.iter().sum();
        let ratio = kept / total;
        assert!(
            (ratio - 0.5).abs() < 0.05,
            "isotropic 4D -> 2D should keep ~half the variance, kept {ratio}"
        );
    }

    #[test]
    fn pca_beats_random_projections() {
        let x = random_matrix(200, 5, 17);
        let res = pca_project(&x, 2).unwrap();
        let kept: f64 = res.explained.iter().sum();
        let mean = x.row_mean();
        let mut centered = x.clone();
        for i in 0..200 {
            for k in 0..5 {
                centered[(i, k)] -= mean[k];
            }
        }
        for seed in 0..100u64 {
            let q = random_orthogonal(5, 300 + seed);
            let proj = &centered * q.columns(0, 2);
            let var: f64 = proj.iter().map(|v| v * v).sum::<f64>() / 200.0;
            assert!(var <= kept + 1e-9, "seed {seed}: {var} > {kept}");
        }
    }

    #[test]
    fn pca_errors() {
        let x = random_matrix(3, 4, 1);
        assert!(pca_project(&x, 5).is_err()); // target beyond ambient
        assert!(pca_project(&x, 4).is_err()); // fewer points than target
    }

    #[test]
    fn regression_exact_linear_map() {
        let x = random_matrix(50, 3, 21);
        let b = DMatrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 3.0, 2.0, 0.0]);
        let y = &x * &b;
        let xt = random_matrix(10, 3, 22);
        let yt = &xt * &b;
        let rep = regress_coordinates(&x, &y, &xt, &yt).unwrap();
        for r2 in &rep.r2_per_target {
            assert!((r2 - 1.0).abs() < 1e-10);
        }
        assert!(rep.mse_pooled < 1e-16);
        assert!(!rep.rank_deficient);
    }

    #[test]
    fn regression_null_case() {
        let x = random_matrix(500, 3, 31);
        let y = random_matrix(500, 2, 32);
        let xt = random_matrix(50, 3, 33);
        let yt = random_matrix(50, 2, 34);
        let rep = regress_coordinates(&x, &y, &xt, &yt).unwrap();
        assert!(rep.r2_pooled.abs() < 0.05, "null R^2 = {}", rep.r2_pooled);
    }

    #[test]
    fn regression_matches_normal_equations_oracle() {
        for seed in 0..5u64 {
            let x = random_matrix(40, 3, 40 + seed);
            let y = random_matrix(40, 2, 50 + seed);
            let rep = regress_coordinates(&x, &y, &x, &y).unwrap();
            // oracle: solve (D^T D) B = D^T Y directly
            let mut design = DMatrix::zeros(40, 4);
            for i in 0..40 {
                design[(i, 0)] = 1.0;
                for k in 0..3 {
                    design[(i, k + 1)] = x[(i, k)];
                }
            }
            let dtd = design.transpose() * &design;
            let dty = design.transpose() * &y;
            let oracle = dtd.lu().solve(&dty).unwrap();
            for i in 0..4 {
                for k in 0..2 {
                    assert!(
                        (rep.coefficients[i][k] - oracle[(i, k)]).abs() <= 1e-8,
                        "seed {seed} coef ({i},{k})"
                    );
                }
            }
        }
    }

    #[test]
    fn neighbour_mean_examples() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let coords = DMatrix::from_row_slice(4, 2, &[9.0, 9.0, 0.0, 0.0, 2.0, 2.0, 100.0, 100.0]);
        let known = [false, true, true, false];
        let m = neighbour_mean_baseline(&g, &coords, &known, 0).unwrap();
        assert_eq!(m, vec![1.0, 1.0]);

        // single known neighbour returns that neighbour's coordinates
        let known = [false, true, false, false];
        let m = neighbour_mean_baseline(&g, &coords, &known, 0).unwrap();
        assert_eq!(m, vec![0.0, 0.0]);

        // no known neighbour is an error
        let known = [false, false, false, false];
        assert!(neighbour_mean_baseline(&g, &coords, &known, 0).is_err());
    }

    #[test]
    fn neighbour_mean_matches_direct_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut edges = Vec::new();
        for i in 0..20usize {
            for j in (i + 1)..20 {
                if rng.gen::<f64>() < 0.3 {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::from_edges(20, &edges).unwrap();
        let coords = random_matrix(20, 2, 62);
        let known: Vec<bool> = (0..20).map(|i| i % 3 != 0).collect();
        for node in 0..20 {
            let expect: Vec<Vec<f64>> = g
                .neighbors(node)
                .iter()
                .filter(|&&j| known[j as usize])
                .map(|&j| vec![coords[(j as usize, 0)], coords[(j as usize, 1)]])
                .collect();
            let got = neighbour_mean_baseline(&g, &coords, &known, node);
            if expect.is_empty() {
                assert!(got.is_err());
            } else {
                let got = got.unwrap();
                for k in 0..2 {
                    let mean: f64 = expect.iter().map(|v| v[k]).sum::<f64>() / expect.len() as f64;
                    assert!((got[k] - mean).abs() < 1e-12);
                }
            }
        }
    }
}
