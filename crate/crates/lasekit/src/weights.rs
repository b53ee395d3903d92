//! Node-weight construction and normalisation.
//!
//! Weight vectors localise a spectral embedding around a region of interest.
//! All strategies return unnormalised weights with a provenance record;
//! normalisation to `sum(w) = n` is explicit and only matters when spectra
//! are compared across weightings, since the embedding itself is invariant
//! to the global scale of the weights.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphDistances;

/// Treatment of unreachable nodes under graph-distance weighting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum UnreachablePolicy {
    /// Weight 0: unreachable nodes drop out of the embedding entirely.
    Zero,
    /// A small strictly positive weight for callers that need `w > 0`.
    Epsilon { value: f64 },
}

/// Provenance record: which strategy produced a weight vector, with its
/// parameters. Serialised into the '#' header of weights CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum WeightStrategy {
    Uniform,
    Attribute {
        center: Vec<f64>,
        tau: f64,
    },
    GraphDistance {
        source: usize,
        power: f64,
        unreachable: UnreachablePolicy,
    },
    Subgraph {
        selected: usize,
    },
    Hybrid {
        reference: usize,
        alpha: f64,
        beta: f64,
    },
    SoftThreshold {
        center: Vec<f64>,
        tau: f64,
        plateau_radius: f64,
    },
    Plateau {
        center: Vec<f64>,
        tau: f64,
        plateau_radius: f64,
    },
    Custom {
        name: String,
    },
}

/// Per-node non-negative weights plus normalisation state and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
    normalised: bool,
    strategy: WeightStrategy,
}

impl WeightVector {
    /// Wrap a raw weight vector, validating the type invariants: all entries
    /// finite and non-negative, at least one strictly positive.
    pub fn from_raw(w: Vec<f64>, strategy: WeightStrategy) -> Result<WeightVector> {
        if w.is_empty() {
            return Err(Error::Config("weight vector must be non-empty".into()));
        }
        if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::Config(format!(
                "weights must be finite and non-negative, found {bad}"
            )));
        }
        if !w.iter().any(|&x| x > 0.0) {
            return Err(Error::Config("all weights are zero".into()));
        }
        Ok(WeightVector {
            w,
            normalised: false,
            strategy,
        })
    }

    pub(crate) fn from_parts(
        w: Vec<f64>,
        normalised: bool,
        strategy: WeightStrategy,
    ) -> Result<WeightVector> {
        let mut v = Self::from_raw(w, strategy)?;
        if normalised {
            let n = v.len() as f64;
            let sum: f64 = v.w.iter().sum();
            if (sum - n).abs() > 1e-9 * n {
                return Err(Error::Config(format!(
                    "weights flagged normalised but sum to {sum} over {n} nodes"
                )));
            }
            v.normalised = true;
        }
        Ok(v)
    }

    /// Uniform weights, the no-localisation baseline.
    pub fn uniform(n: usize) -> WeightVector {
        WeightVector {
            w: vec![1.0; n],
            normalised: true,
            strategy: WeightStrategy::Uniform,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.w[i]
    }

    pub fn is_normalised(&self) -> bool {
        self.normalised
    }

    pub fn strategy(&self) -> &WeightStrategy {
        &self.strategy
    }

    /// Indices with strictly positive weight, ascending.
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.w.len()).filter(|&i| self.w[i] > 0.0).collect()
    }

    pub fn positive_count(&self) -> usize {
        self.w.iter().filter(|&&x| x > 0.0).count()
    }

    /// Rescale so the weights sum to the node count.
    pub fn normalise(&self) -> Result<WeightVector> {
        let sum: f64 = self.w.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::Config(
                "cannot normalise an all-zero weight vector".into(),
            ));
        }
        let scale = self.w.len() as f64 / sum;
        Ok(WeightVector {
            w: self.w.iter().map(|&x| x * scale).collect(),
            normalised: true,
            strategy: self.strategy.clone(),
        })
    }
}

fn check_center(coords: &DMatrix<f64>, center: &[f64]) -> Result<()> {
    if coords.ncols() != center.len() {
        return Err(Error::DimensionMismatch(format!(
            "coords have {} columns but center has {} entries",
            coords.ncols(),
            center.len()
        )));
    }
    Ok(())
}

fn sq_dist_to(coords: &DMatrix<f64>, i: usize, center: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (d, &c) in center.iter().enumerate() {
        let diff = coords[(i, d)] - c;
        acc += diff * diff;
    }
    acc
}

/// `w_i = exp(-tau * ||x_i - center||^2)` over node attribute rows.
pub fn attribute_weights(coords: &DMatrix<f64>, center: &[f64], tau: f64) -> Result<WeightVector> {
    check_center(coords, center)?;
    if !(tau >= 0.0) {
        return Err(Error::Config(format!("tau must be >= 0, got {tau}")));
    }
    let w = (0..coords.nrows())
        .map(|i| (-tau * sq_dist_to(coords, i, center)).exp())
        .collect();
    WeightVector::from_raw(
        w,
        WeightStrategy::Attribute {
            center: center.to_vec(),
            tau,
        },
    )
}

/// `w_i = (1 / (1 + GraphDist(i, source)))^p`; unreachable nodes follow the
/// chosen policy.
pub fn graph_distance_weights(
    dists: &GraphDistances,
    power: f64,
    unreachable: UnreachablePolicy,
) -> Result<WeightVector> {
    if !(power > 0.0) {
        return Err(Error::Config(format!("power must be > 0, got {power}")));
    }
    if let UnreachablePolicy::Epsilon { value } = unreachable {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::Config(format!(
                "epsilon policy requires a positive finite value, got {value}"
            )));
        }
    }
    let w = dists
        .dist
        .iter()
        .map(|d| match d {
            Some(h) => (1.0 + *h as f64).powf(-power),
            None => match unreachable {
                UnreachablePolicy::Zero => 0.0,
                UnreachablePolicy::Epsilon { value } => value,
            },
        })
        .collect();
    WeightVector::from_raw(
        w,
        WeightStrategy::GraphDistance {
            source: dists.source,
            power,
            unreachable,
        },
    )
}

/// Binary indicator weights over a selected node set (hard thresholding).
pub fn subgraph_weights(n: usize, selected: &[usize]) -> Result<WeightVector> {
    if selected.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut w = vec![0.0; n];
    for &i in selected {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        w[i] = 1.0;
    }
    WeightVector::from_raw(
        w,
        WeightStrategy::Subgraph {
            selected: selected.len(),
        },
    )
}

/// `w_i = exp(-alpha * GraphDist(i, i0) - beta * ||x_i - x_{i0}||^2)`,
/// combining structural and attribute proximity. Unreachable nodes get 0.
pub fn hybrid_weights(
    dists: &GraphDistances,
    coords: &DMatrix<f64>,
    alpha: f64,
    beta: f64,
) -> Result<WeightVector> {
    if coords.nrows() != dists.dist.len() {
        return Err(Error::DimensionMismatch(format!(
            "coords have {} rows but distances cover {} nodes",
            coords.nrows(),
            dists.dist.len()
        )));
    }
    if !(alpha >= 0.0) || !(beta >= 0.0) {
        return Err(Error::Config("alpha and beta must be >= 0".into()));
    }
    if alpha == 0.0 && beta == 0.0 {
        return Err(Error::Config(
            "hybrid weights with alpha = beta = 0 are degenerate; use uniform weights explicitly"
                .into(),
        ));
    }
    let i0 = dists.source;
    let ref_coords: Vec<f64> = (0..coords.ncols()).map(|d| coords[(i0, d)]).collect();
    let w = (0..coords.nrows())
        .map(|i| match dists.dist[i] {
            Some(h) => (-alpha * h as f64 - beta * sq_dist_to(coords, i, &ref_coords)).exp(),
            None => 0.0,
        })
        .collect();
    WeightVector::from_raw(
        w,
        WeightStrategy::Hybrid {
            reference: i0,
            alpha,
            beta,
        },
    )
}

/// Gaussian weights with a flat plateau: `exp(-tau)` inside the radius-`rho`
/// ball around `center`, `exp(-tau * ||x_i - center||^2)` outside. With
/// `rho = 0` this is a pure Gaussian profile. The profile is continuous at
/// the boundary only when `rho = 1`; for other radii the published form is
/// discontinuous there and is implemented verbatim.
pub fn soft_threshold_weights(
    coords: &DMatrix<f64>,
    center: &[f64],
    tau: f64,
    plateau_radius: f64,
) -> Result<WeightVector> {
    check_center(coords, center)?;
    if !(tau >= 0.0) || !(plateau_radius >= 0.0) {
        return Err(Error::Config("tau and plateau_radius must be >= 0".into()));
    }
    let rho_sq = plateau_radius * plateau_radius;
    let w = (0..coords.nrows())
        .map(|i| {
            let d2 = sq_dist_to(coords, i, center);
            if d2 <= rho_sq {
                (-tau).exp()
            } else {
                (-tau * d2).exp()
            }
        })
        .collect();
    WeightVector::from_raw(
        w,
        WeightStrategy::SoftThreshold {
            center: center.to_vec(),
            tau,
            plateau_radius,
        },
    )
}

/// Flat-topped Gaussian weights: `w_i = exp(-tau * max(||x_i - center||, rho)^2)`.
///
/// This is the continuous extension of a plateaued Gaussian: constant at the
/// boundary value inside the radius-`rho` ball, Gaussian decay outside, and
/// continuous at the boundary for every `rho`. As `tau` grows the normalised
/// weights approach the top-hat indicator of the plateau; `rho = 0` recovers
/// the pure Gaussian profile.
pub fn plateau_weights(
    coords: &DMatrix<f64>,
    center: &[f64],
    tau: f64,
    plateau_radius: f64,
) -> Result<WeightVector> {
    check_center(coords, center)?;
    if !(tau >= 0.0) || !(plateau_radius >= 0.0) {
        return Err(Error::Config("tau and plateau_radius must be >= 0".into()));
    }
    let rho_sq = plateau_radius * plateau_radius;
    let w = (0..coords.nrows())
        .map(|i| {
            let d2 = sq_dist_to(coords, i, center);
            (-tau * d2.max(rho_sq)).exp()
        })
        .collect();
    WeightVector::from_raw(
        w,
        WeightStrategy::Plateau {
            center: center.to_vec(),
            tau,
            plateau_radius,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn coords_1d(xs: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(xs.len(), 1, xs)
    }

    #[test]
    fn attribute_tau_zero_is_uniform() {
        let c = coords_1d(&[0.0, 1.0, 5.0]);
        let w = attribute_weights(&c, &[2.0], 0.0).unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn attribute_at_center_is_one() {
        let c = coords_1d(&[4.0, 5.0]);
        let w = attribute_weights(&c, &[4.0], 0.4).unwrap();
        assert_eq!(w.get(0), 1.0);
        // distance 1 at tau = 0.4
        assert_relative_eq!(w.get(1), (-0.4f64).exp(), max_relative = 1e-15);
    }

    #[test]
    fn graph_distance_formula() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2)]).unwrap();
        let d = g.bfs_distances(0).unwrap();
        let w = graph_distance_weights(&d, 1.0, UnreachablePolicy::Zero).unwrap();
        assert_eq!(w.get(0), 1.0);
        assert_eq!(w.get(1), 0.5);
        assert_eq!(w.get(3), 0.0); // isolated node

        let we =
            graph_distance_weights(&d, 1.0, UnreachablePolicy::Epsilon { value: 1e-6 }).unwrap();
        assert_eq!(we.get(3), 1e-6);
    }

    #[test]
    fn graph_distance_monotone_in_power() {
        // larger p gives pointwise smaller weights at any dist >= 1
        for dist in 1u32..6 {
            let mut prev = f64::INFINITY;
            for p in [0.5, 1.0, 2.0, 3.5, 7.0] {
                let w = (1.0 + dist as f64).powf(-p);
                assert!(w < prev, "p={p} dist={dist}");
                prev = w;
            }
        }
    }

    #[test]
    fn graph_distance_single_positive_is_valid() {
        let g = Graph::from_edges(3, &[(1, 2)]).unwrap();
        let d = g.bfs_distances(0).unwrap();
        let w = graph_distance_weights(&d, 2.0, UnreachablePolicy::Zero).unwrap();
        assert_eq!(w.values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn subgraph_indicator() {
        let w = subgraph_weights(4, &[1, 3]).unwrap();
        assert_eq!(w.values(), &[0.0, 1.0, 0.0, 1.0]);
        assert!(subgraph_weights(4, &[]).is_err());
        assert!(subgraph_weights(4, &[4]).is_err());
    }

    #[test]
    fn hybrid_examples() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let d = g.bfs_distances(0).unwrap();
        let c = coords_1d(&[0.0, 1.0, 2.0]);
        // beta = 0: graph-only exponential profile
        let w = hybrid_weights(&d, &c, 0.7, 0.0).unwrap();
        for i in 0..3 {
            assert_relative_eq!(w.get(i), (-0.7 * i as f64).exp(), max_relative = 1e-15);
        }
        // alpha = 0, coords at i0
        let c0 = coords_1d(&[5.0, 5.0, 5.0]);
        let w = hybrid_weights(&d, &c0, 0.0, 3.0).unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 1.0]);
        assert!(hybrid_weights(&d, &c, 0.0, 0.0).is_err());
    }

    #[test]
    fn hybrid_matches_scalar_formula() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (0, 4)]).unwrap();
        let d = g.bfs_distances(2).unwrap();
        let c = coords_1d(&[0.3, -1.2, 4.0, 2.5, 9.9]);
        let (alpha, beta) = (0.31, 0.17);
        let w = hybrid_weights(&d, &c, alpha, beta).unwrap();
        for i in 0..5 {
            let expect =
                (-alpha * d.get(i).unwrap() as f64 - beta * (c[(i, 0)] - c[(2, 0)]).powi(2)).exp();
            assert_relative_eq!(w.get(i), expect, max_relative = 1e-15);
        }
    }

    #[test]
    fn soft_threshold_plateau() {
        // center 4, rho = 0.5, z = 4.2, tau = 3 -> exp(-3)
        let c = coords_1d(&[4.2, 6.0]);
        let w = soft_threshold_weights(&c, &[4.0], 3.0, 0.5).unwrap();
        assert_relative_eq!(w.get(0), (-3.0f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(w.get(1), (-3.0f64 * 4.0).exp(), max_relative = 1e-15);
        // tau = 0 -> uniform
        let w0 = soft_threshold_weights(&c, &[4.0], 0.0, 0.5).unwrap();
        assert_eq!(w0.values(), &[1.0, 1.0]);
    }

    #[test]
    fn soft_threshold_boundary_continuity_only_at_rho_one() {
        let eps = 1e-9;
        for rho in [0.5f64, 1.0, 2.0] {
            let c = coords_1d(&[4.0 + rho - eps, 4.0 + rho + eps]);
            let w = soft_threshold_weights(&c, &[4.0], 2.0, rho).unwrap();
            let jump = (w.get(0) - w.get(1)).abs();
            if (rho - 1.0).abs() < 1e-12 {
                assert!(jump < 1e-6, "continuous at rho=1, jump={jump}");
            } else {
                // the published form is discontinuous here
                let expected = ((-2.0f64).exp() - (-2.0 * rho * rho).exp()).abs();
                assert!((jump - expected).abs() < 1e-6, "rho={rho} jump={jump}");
            }
        }
    }

    #[test]
    fn plateau_is_continuous_and_flat_topped() {
        let eps = 1e-9;
        for rho in [0.5f64, 1.0, 2.0] {
            let c = coords_1d(&[4.0, 4.0 + rho - eps, 4.0 + rho + eps, 4.0 + 2.0 * rho]);
            let w = plateau_weights(&c, &[4.0], 2.0, rho).unwrap();
            // flat inside, continuous at the boundary
            assert_eq!(w.get(0), w.get(1));
            assert!((w.get(1) - w.get(2)).abs() < 1e-6, "rho {rho}");
            assert!(w.get(3) < w.get(2));
        }
        // rho = 0 reduces to the pure Gaussian profile
        let c = coords_1d(&[3.0, 4.5, 7.0]);
        let a = plateau_weights(&c, &[4.0], 1.3, 0.0).unwrap();
        let b = attribute_weights(&c, &[4.0], 1.3).unwrap();
        assert_eq!(a.values(), b.values());
        // tau = 0 is uniform
        let u = plateau_weights(&c, &[4.0], 0.0, 0.5).unwrap();
        assert_eq!(u.values(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn normalise_examples() {
        let w = WeightVector::from_raw(vec![1.0, 1.0, 1.0, 1.0], WeightStrategy::Uniform)
            .unwrap()
            .normalise()
            .unwrap();
        assert_eq!(w.values(), &[1.0, 1.0, 1.0, 1.0]);
        let w = WeightVector::from_raw(vec![2.0, 0.0, 0.0, 0.0], WeightStrategy::Uniform)
            .unwrap()
            .normalise()
            .unwrap();
        assert_eq!(w.values(), &[4.0, 0.0, 0.0, 0.0]);
        assert!(w.is_normalised());
    }

    #[test]
    fn from_raw_rejects_invalid() {
        assert!(WeightVector::from_raw(vec![], WeightStrategy::Uniform).is_err());
        assert!(WeightVector::from_raw(vec![0.0, 0.0], WeightStrategy::Uniform).is_err());
        assert!(WeightVector::from_raw(vec![1.0, -0.5], WeightStrategy::Uniform).is_err());
        assert!(WeightVector::from_raw(vec![1.0, f64::NAN], WeightStrategy::Uniform).is_err());
    }

    proptest! {
        #[test]
        fn normalise_is_idempotent(raw in proptest::collection::vec(1e-6f64..1e6, 1..40)) {
            let w = WeightVector::from_raw(raw, WeightStrategy::Uniform).unwrap();
            let n1 = w.normalise().unwrap();
            let n2 = n1.normalise().unwrap();
            let n = n1.len() as f64;
            let sum: f64 = n1.values().iter().sum();
            prop_assert!((sum - n).abs() <= 1e-9 * n);
            for (a, b) in n1.values().iter().zip(n2.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }

        #[test]
        fn normalise_preserves_ratios(raw in proptest::collection::vec(1e-3f64..1e3, 2..30)) {
            let w = WeightVector::from_raw(raw.clone(), WeightStrategy::Uniform).unwrap();
            let nw = w.normalise().unwrap();
            let r_before = raw[0] / raw[1];
            let r_after = nw.get(0) / nw.get(1);
            prop_assert!((r_before - r_after).abs() <= 1e-12 * r_before.abs());
        }

        #[test]
        fn attribute_translation_equivariance(
            xs in proptest::collection::vec(-5.0f64..5.0, 2..20),
            shift in -20.0f64..20.0,
            tau in 0.0f64..1.5,
        ) {
            let c = coords_1d(&xs);
            let shifted: Vec<f64> = xs.iter().map(|x| x + shift).collect();
            let cs = coords_1d(&shifted);
            let w1 = attribute_weights(&c, &[1.5], tau).unwrap();
            let w2 = attribute_weights(&cs, &[1.5 + shift], tau).unwrap();
            for (a, b) in w1.values().iter().zip(w2.values()) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
            }
        }
    }
}
