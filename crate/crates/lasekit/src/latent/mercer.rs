//! Quadrature approximation of Mercer feature maps.
//!
//! The feature map of a PSD kernel under a (possibly reweighted) probability
//! measure is approximated on a regular grid with midpoint masses: the
//! symmetrically mass-weighted kernel Gram matrix
//! `S_gh = m_g^{1/2} f(x_g, x_h) m_h^{1/2}` is eigendecomposed, and component
//! `k` of the feature map at grid point `g` is
//! `lambda_k^{1/2} * (v_k[g] / m_g^{1/2})`.
//!
//! Reweighting the measure "zooms" the leading features into the region
//! where the measure concentrates, at the price of representing the rest of
//! the space more coarsely. When feature maps under different measures are
//! overlaid for plotting, we align them by an orthogonal Procrustes fit
//! computed over the full grid (the alignment point set is not otherwise
//! canonical).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::latent::KernelSpec;
use crate::spectral::eigen::fix_column_signs;

/// Discrete measure on a regular grid: points (rows) and positive masses
/// summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    points: DMatrix<f64>,
    masses: Vec<f64>,
}

impl GridMeasure {
    /// Validate and wrap raw grid points and masses.
    pub fn new(points: DMatrix<f64>, masses: Vec<f64>) -> Result<GridMeasure> {
        if points.nrows() == 0 || points.nrows() != masses.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} grid points vs {} masses",
                points.nrows(),
                masses.len()
            )));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::Config(
                "grid masses must be positive and finite".into(),
            ));
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "grid masses must sum to 1, got {sum}"
            )));
        }
        Ok(GridMeasure { points, masses })
    }

    /// Midpoint grid over `[lo, hi]` with uniform masses `1/g`.
    pub fn uniform_1d(lo: f64, hi: f64, g: usize) -> Result<GridMeasure> {
        Self::weighted_1d(lo, hi, g, |_| 1.0)
    }

    /// Midpoint grid over `[lo, hi]` with masses proportional to `weight`
    /// evaluated at the grid points, renormalised to sum to one.
    pub fn weighted_1d(
        lo: f64,
        hi: f64,
        g: usize,
        weight: impl Fn(f64) -> f64,
    ) -> Result<GridMeasure> {
        if g == 0 || !(lo < hi) {
            return Err(Error::Config("weighted_1d needs g >= 1 and lo < hi".into()));
        }
        let step = (hi - lo) / g as f64;
        let mut points = DMatrix::zeros(g, 1);
        let mut masses = vec![0.0; g];
        for i in 0..g {
            let x = lo + (i as f64 + 0.5) * step;
            points[(i, 0)] = x;
            let w = weight(x);
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!(
                    "weight function must be positive and finite on the grid, got {w} at x={x}"
                )));
            }
            masses[i] = w;
        }
        let total: f64 = masses.iter().sum();
        for m in &mut masses {
            *m /= total;
        }
        GridMeasure::new(points, masses)
    }

    /// Midpoint grid over a 2D box with masses proportional to `weight`.
    pub fn weighted_2d(
        lo: [f64; 2],
        hi: [f64; 2],
        g_per_axis: usize,
        weight: impl Fn(f64, f64) -> f64,
    ) -> Result<GridMeasure> {
        if g_per_axis == 0 || !(lo[0] < hi[0]) || !(lo[1] < hi[1]) {
            return Err(Error::Config(
                "weighted_2d needs g >= 1 and lo < hi per axis".into(),
            ));
        }
        let g = g_per_axis * g_per_axis;
        let step = [
            (hi[0] - lo[0]) / g_per_axis as f64,
            (hi[1] - lo[1]) / g_per_axis as f64,
        ];
        let mut points = DMatrix::zeros(g, 2);
        let mut masses = vec![0.0; g];
        for a in 0..g_per_axis {
            for b in 0..g_per_axis {
                let i = a * g_per_axis + b;
                let x = lo[0] + (a as f64 + 0.5) * step[0];
                let y = lo[1] + (b as f64 + 0.5) * step[1];
                points[(i, 0)] = x;
                points[(i, 1)] = y;
                let w = weight(x, y);
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::Config(format!(
                        "weight function must be positive and finite on the grid, got {w} at ({x},{y})"
                    )));
                }
                masses[i] = w;
            }
        }
        let total: f64 = masses.iter().sum();
        for m in &mut masses {
            *m /= total;
        }
        GridMeasure::new(points, masses)
    }

    pub fn uniform_2d(lo: [f64; 2], hi: [f64; 2], g_per_axis: usize) -> Result<GridMeasure> {
        Self::weighted_2d(lo, hi, g_per_axis, |_, _| 1.0)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn point(&self, g: usize) -> Vec<f64> {
        (0..self.points.ncols())
            .map(|d| self.points[(g, d)])
            .collect()
    }
}

/// Truncated feature map at quadrature resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct MercerFeatures {
    grid: DMatrix<f64>,
    masses: Vec<f64>,
    /// `G x K`; column `k` holds `lambda_k^{1/2} u_k` over the grid.
    features: DMatrix<f64>,
    /// Non-increasing, non-negative; tiny negatives are clipped to zero.
    eigenvalues: Vec<f64>,
}

impl MercerFeatures {
    pub fn grid(&self) -> &DMatrix<f64> {
        &self.grid
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn truncation(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `phi(x_g)` truncated to the first `r` components.
    pub fn feature_row(&self, g: usize, r: usize) -> Vec<f64> {
        (0..r.min(self.features.ncols()))
            .map(|k| self.features[(g, k)])
            .collect()
    }

    /// Tail eigenvalue sum beyond rank `r`.
    pub fn tail_sum(&self, r: usize) -> f64 {
        self.eigenvalues.iter().skip(r).sum()
    }

    /// Mass-weighted mean of the squared truncation error
    /// `||phi(x) - phi^{(r)}(x)||^2` over the grid.
    pub fn weighted_truncation_error(&self, r: usize) -> f64 {
        let mut acc = 0.0;
        for g in 0..self.grid.nrows() {
            let mut sq = 0.0;
            for k in r..self.features.ncols() {
                let v = self.features[(g, k)];
                sq += v * v;
            }
            acc += self.masses[g] * sq;
        }
        acc
    }

    /// Maximum absolute error of the rank-`r` Gram reconstruction
    /// `sum_k phi_k(x) phi_k(y)` against the kernel, over all grid pairs.
    pub fn gram_error(&self, kernel: &KernelSpec, r: usize) -> f64 {
        let g = self.grid.nrows();
        let r = r.min(self.features.ncols());
        let mut worst = 0.0f64;
        for a in 0..g {
            let xa = self.point_vec(a);
            for b in a..g {
                let xb = self.point_vec(b);
                let mut dot = 0.0;
                for k in 0..r {
                    dot += self.features[(a, k)] * self.features[(b, k)];
                }
                worst = worst.max((dot - kernel.eval(&xa, &xb)).abs());
            }
        }
        worst
    }

    fn point_vec(&self, g: usize) -> Vec<f64> {
        (0..self.grid.ncols()).map(|d| self.grid[(g, d)]).collect()
    }
}

/// Approximate the Mercer feature map of `kernel` under the grid measure,
/// truncated to `k` components.
///
/// `k` may not exceed the number of numerically positive eigenvalues of the
/// mass-weighted Gram matrix (fast-decaying kernels collapse to machine zero
/// well before rank `G`); eigenvalues below `1e-12 * lambda_1` count as
/// zero, and eigenvalues below `-1e-10 * lambda_1` mean the kernel is not
/// PSD at grid scale and raise an error.
pub fn mercer_features_grid(
    kernel: &KernelSpec,
    measure: &GridMeasure,
    k: usize,
) -> Result<MercerFeatures> {
    features_impl(kernel, measure, Some(k))
}

/// All numerically positive components of the feature map; the quadrature
/// analogue of a full-rank eigendecomposition.
pub fn mercer_features_full(kernel: &KernelSpec, measure: &GridMeasure) -> Result<MercerFeatures> {
    features_impl(kernel, measure, None)
}

fn features_impl(
    kernel: &KernelSpec,
    measure: &GridMeasure,
    truncation: Option<usize>,
) -> Result<MercerFeatures> {
    let g = measure.len();
    if let Some(k) = truncation {
        if k == 0 {
            return Err(Error::Config("truncation k must be >= 1".into()));
        }
        if k > g {
            return Err(Error::RankTooLarge { r: k, n: g });
        }
    }
    let sqrt_m: Vec<f64> = measure.masses.iter().map(|m| m.sqrt()).collect();
    let mut s = DMatrix::zeros(g, g);
    for a in 0..g {
        let xa = measure.point(a);
        for b in a..g {
            let xb = measure.point(b);
            let v = sqrt_m[a] * kernel.eval(&xa, &xb) * sqrt_m[b];
            s[(a, b)] = v;
            s[(b, a)] = v;
        }
    }
    let eig = s.symmetric_eigen();
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let lambda_max = eig.eigenvalues[order[0]].max(0.0);
    let neg_tol = 1e-10 * lambda_max;
    let zero_tol = 1e-12 * lambda_max;
    let mut eigenvalues = Vec::with_capacity(g);
    let mut positive = 0usize;
    for &idx in &order {
        let mut lam = eig.eigenvalues[idx];
        if lam < -neg_tol {
            return Err(Error::NotPsd {
                value: lam,
                tol: -neg_tol,
            });
        }
        if lam <= zero_tol {
            lam = 0.0;
        }
        if lam > 0.0 {
            positive += 1;
        }
        eigenvalues.push(lam);
    }
    let k = match truncation {
        Some(k) if k > positive => {
            return Err(Error::RankDeficient {
                requested: k,
                available: positive,
            })
        }
        Some(k) => k,
        None => positive,
    };
    eigenvalues.truncate(k);

    let mut features = DMatrix::zeros(g, k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let scale = eigenvalues[col].sqrt();
        for row in 0..g {
            features[(row, col)] = scale * eig.eigenvectors[(row, idx)] / sqrt_m[row];
        }
    }
    fix_column_signs(&mut features);
    Ok(MercerFeatures {
        grid: measure.points.clone(),
        masses: measure.masses.clone(),
        features,
        eigenvalues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn uniform_weight_reduces_to_unweighted() {
        // constant weights reduce to the uniform measure; compare via the
        // rank-5 Gram (eigenvectors of tiny trailing eigenvalues are not
        // individually stable)
        let a = GridMeasure::uniform_1d(0.0, 10.0, 64).unwrap();
        let b = GridMeasure::weighted_1d(0.0, 10.0, 64, |_| 3.7).unwrap();
        let fa = mercer_features_grid(&KernelSpec::GaussianHalf, &a, 5).unwrap();
        let fb = mercer_features_grid(&KernelSpec::GaussianHalf, &b, 5).unwrap();
        for (x, y) in fa.eigenvalues().iter().zip(fb.eigenvalues()) {
            assert!((x - y).abs() <= 1e-12);
        }
        let ga = fa.features() * fa.features().transpose();
        let gb = fb.features() * fb.features().transpose();
        assert!((ga - gb).abs().max() <= 1e-10);
    }

    #[test]
    fn eigenfunctions_orthonormal_in_weighted_l2() {
        let m =
            GridMeasure::weighted_1d(0.0, 10.0, 250, |x| (-0.5 * (x - 4.0).abs()).exp()).unwrap();
        let f = mercer_features_grid(&KernelSpec::GaussianHalf, &m, 8).unwrap();
        for j in 0..8 {
            for k in j..8 {
                // u_k = phi_k / sqrt(lambda_k)
                let mut dot = 0.0;
                for g in 0..m.len() {
                    dot += m.masses()[g] * f.features()[(g, j)] * f.features()[(g, k)]
                        / (f.eigenvalues()[j] * f.eigenvalues()[k]).sqrt();
                }
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!(
                    (dot - expect).abs() <= 1e-8,
                    "orthonormality ({j},{k}): {dot}"
                );
            }
        }
    }

    #[test]
    fn truncation_identity_matches_tail_sum() {
        for kernel in [KernelSpec::GaussianFull, KernelSpec::GaussianHalf] {
            let m = GridMeasure::weighted_1d(0.0, 10.0, 300, |x| (-0.4 * (x - 4.0).abs()).exp())
                .unwrap();
            let f = mercer_features_full(&kernel, &m).unwrap();
            for r in 1..=10 {
                let lhs = f.weighted_truncation_error(r);
                let rhs = f.tail_sum(r);
                assert!(
                    (lhs - rhs).abs() <= 1e-8,
                    "kernel {} r {r}: {lhs} vs {rhs}",
                    kernel.name()
                );
            }
        }
    }

    #[test]
    fn full_rank_gram_reconstruction_is_exact() {
        let m = GridMeasure::uniform_1d(0.0, 6.0, 80).unwrap();
        let f = mercer_features_full(&KernelSpec::GaussianHalf, &m).unwrap();
        assert!(f.gram_error(&KernelSpec::GaussianHalf, f.truncation()) <= 1e-8);
    }

    #[test]
    fn gram_error_decreases_in_k() {
        let m = GridMeasure::uniform_1d(0.0, 10.0, 120).unwrap();
        let f = mercer_features_grid(&KernelSpec::GaussianHalf, &m, 20).unwrap();
        let e2 = f.gram_error(&KernelSpec::GaussianHalf, 2);
        let e10 = f.gram_error(&KernelSpec::GaussianHalf, 10);
        let e20 = f.gram_error(&KernelSpec::GaussianHalf, 20);
        assert!(e10 < e2, "{e10} !< {e2}");
        assert!(e20 < e10, "{e20} !< {e10}");
    }

    #[test]
    fn localised_measure_zooms_in() {
        // Increasing concentration improves the 2-component representation
        // of kernel inner products near the localisation centre.
        let z_star = 1.5;
        let local_pairs_error = |tau: f64| -> f64 {
            let m = if tau == 0.0 {
                GridMeasure::uniform_1d(0.0, 10.0, 200).unwrap()
            } else {
                GridMeasure::weighted_1d(0.0, 10.0, 200, |x| (-tau * (x - z_star).abs()).exp())
                    .unwrap()
            };
            let f = mercer_features_grid(&KernelSpec::GaussianHalf, &m, 2).unwrap();
            let mut acc = 0.0;
            let mut count = 0usize;
            for a in 0..m.len() {
                if (m.points()[(a, 0)] - z_star).abs() > 0.5 {
                    continue;
                }
                for b in a..m.len() {
                    if (m.points()[(b, 0)] - z_star).abs() > 0.5 {
                        continue;
                    }
                    let truth =
                        KernelSpec::GaussianHalf.eval(&[m.points()[(a, 0)]], &[m.points()[(b, 0)]]);
                    let mut dot = 0.0;
                    for k in 0..2 {
                        dot += f.features()[(a, k)] * f.features()[(b, k)];
                    }
                    acc += (dot - truth) * (dot - truth);
                    count += 1;
                }
            }
            acc / count as f64
        };
        let e0 = local_pairs_error(0.0);
        let e2 = local_pairs_error(2.0);
        let e4 = local_pairs_error(4.0);
        assert!(e2 < e0, "tau=2 ({e2}) should beat tau=0 ({e0})");
        assert!(e4 < e0, "tau=4 ({e4}) should beat tau=0 ({e0})");
    }

    #[test]
    fn rank_deficiency_is_reported() {
        // Constant kernel has rank one; asking for three features must fail.
        let k = KernelSpec::Custom {
            name: "constant".into(),
            eval: Arc::new(|_, _| 1.0),
        };
        let m = GridMeasure::uniform_1d(0.0, 1.0, 16).unwrap();
        match mercer_features_grid(&k, &m, 3) {
            Err(Error::RankDeficient {
                requested,
                available,
            }) => {
                assert_eq!(requested, 3);
                assert_eq!(available, 1);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn non_psd_kernel_is_rejected() {
        let k = KernelSpec::Custom {
            name: "absdiff".into(),
            eval: Arc::new(|x: &[f64], y: &[f64]| (x[0] - y[0]).abs() / 10.0),
        };
        let m = GridMeasure::uniform_1d(0.0, 10.0, 32).unwrap();
        assert!(matches!(
            mercer_features_grid(&k, &m, 2),
            Err(Error::NotPsd { .. })
        ));
    }

    #[test]
    fn preconditions_enforced() {
        let m = GridMeasure::uniform_1d(0.0, 1.0, 8).unwrap();
        assert!(mercer_features_grid(&KernelSpec::GaussianHalf, &m, 9).is_err());
        assert!(mercer_features_grid(&KernelSpec::GaussianHalf, &m, 0).is_err());
        assert!(GridMeasure::weighted_1d(0.0, 1.0, 8, |_| 0.0).is_err());
    }
}
