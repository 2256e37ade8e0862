//! Exactness condition: tree sparsity plus, on every edge, the origin lying
//! outside the relative interior of the convex hull of the edge's entries.

use serde::Serialize;

use crate::error::{validation, Result};
use crate::graph::TAU_ZERO;
use crate::hermitian::C64;
use crate::problem::QcqpProblem;
use crate::simplex::{solve_standard_form, LpOutcome};

/// Optimal LP margin above which the origin is in the relative interior.
pub const TAU_LP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelintResult {
    pub in_relint: bool,
    pub on_boundary: bool,
    /// Convex weights (one per input point) writing the origin as a
    /// combination of the points, when it lies in the hull.
    pub certificate: Option<Vec<f64>>,
    /// Optimal margin `t*`, when the LP is feasible.
    pub margin: Option<f64>,
}

/// Decides whether the origin is a strictly positive convex combination of
/// `points`, via `max t  s.t.  Σ a_l u_l = 0, Σ a_l = 1, a_l ≥ t`.
pub fn origin_in_relint(points: &[C64]) -> Result<RelintResult> {
    if points.is_empty() {
        return Err(validation("point set must be nonempty"));
    }
    if points.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(validation("point set has non-finite entries"));
    }
    // The answer is invariant under common scaling and duplication.
    let scale = points.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let normalized: Vec<C64> = if scale > 0.0 { points.iter().map(|z| z / scale).collect() } else { points.to_vec() };
    let mut unique: Vec<C64> = Vec::new();
    let mut owner = Vec::with_capacity(points.len());
    for z in &normalized {
        match unique.iter().position(|u| u == z) {
            Some(i) => owner.push(i),
            None => {
                owner.push(unique.len());
                unique.push(*z);
            }
        }
    }

    // a_l = t + a'_l with a' ≥ 0 and t = t⁺ - t⁻; columns: a'_1..a'_m, t⁺, t⁻.
    let m = unique.len();
    let sum_re: f64 = unique.iter().map(|z| z.re).sum();
    let sum_im: f64 = unique.iter().map(|z| z.im).sum();
    let mut row_re: Vec<f64> = unique.iter().map(|z| z.re).collect();
    row_re.extend([sum_re, -sum_re]);
    let mut row_im: Vec<f64> = unique.iter().map(|z| z.im).collect();
    row_im.extend([sum_im, -sum_im]);
    let mut row_one = vec![1.0; m];
    row_one.extend([m as f64, -(m as f64)]);
    let mut cost = vec![0.0; m];
    cost.extend([-1.0, 1.0]);

    match solve_standard_form(&cost, &[row_re, row_im, row_one], &[0.0, 0.0, 1.0]) {
        LpOutcome::Optimal { x, .. } => {
            let t = x[m] - x[m + 1];
            let weights: Vec<f64> = (0..m).map(|l| t + x[l]).collect();
            let mut counts = vec![0usize; m];
            for &o in &owner {
                counts[o] += 1;
            }
            let certificate = owner.iter().map(|&o| weights[o] / counts[o] as f64).collect();
            Ok(RelintResult {
                in_relint: t > TAU_LP,
                on_boundary: t <= TAU_LP,
                certificate: Some(certificate),
                margin: Some(t),
            })
        }
        // The LP objective is bounded by 1/m, so anything else means the
        // origin is outside the hull.
        _ => Ok(RelintResult { in_relint: false, on_boundary: false, certificate: None, margin: None }),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeReport {
    pub edge: (usize, usize),
    pub point_set: Vec<[f64; 2]>,
    pub origin_in_relint: bool,
    pub origin_on_boundary: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub is_tree: bool,
    pub per_edge: Vec<EdgeReport>,
    pub bounded_hint: bool,
    pub overall: bool,
    pub offending_edges: Vec<(usize, usize)>,
}

/// Runs the tree and relative-interior checks with the default zero cutoff.
pub fn check_condition1(p: &QcqpProblem) -> ConditionReport {
    check_condition1_with(p, TAU_ZERO)
}

pub fn check_condition1_with(p: &QcqpProblem, tau_zero: f64) -> ConditionReport {
    let g = p.graph(tau_zero);
    let is_tree = g.is_tree();
    let active = p.active();
    let mut per_edge = Vec::with_capacity(g.edges.len());
    let mut offending_edges = Vec::new();
    for &(i, j) in &g.edges {
        let points = edge_points(p, &active, i, j);
        let r = origin_in_relint(&points).expect("edge point set is nonempty");
        if r.in_relint {
            offending_edges.push((i, j));
        }
        per_edge.push(EdgeReport {
            edge: (i, j),
            point_set: points.iter().map(|z| [z.re, z.im]).collect(),
            origin_in_relint: r.in_relint,
            origin_on_boundary: r.on_boundary,
        });
    }
    ConditionReport {
        is_tree,
        overall: is_tree && offending_edges.is_empty(),
        per_edge,
        bounded_hint: p.bounded_hint(),
        offending_edges,
    }
}

/// `{C_ij} ∪ {[C_k]_ij : k active}`, zero entries included.
pub fn edge_points(p: &QcqpProblem, active: &[usize], i: usize, j: usize) -> Vec<C64> {
    let mut pts = vec![p.objective().get(i, j)];
    pts.extend(active.iter().map(|&k| p.constraints()[k].matrix.get(i, j)));
    pts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::HermitianMatrix;
    use crate::problem::Constraint;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn single_point() {
        let r = origin_in_relint(&[c(1.0, 0.0)]).unwrap();
        assert!(!r.in_relint && !r.on_boundary);
        // The hull of {0} is {0}, which is its own relative interior.
        let r = origin_in_relint(&[c(0.0, 0.0)]).unwrap();
        assert!(r.in_relint);
    }

    #[test]
    fn segment_endpoint() {
        let r = origin_in_relint(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(!r.in_relint && r.on_boundary);
        let r = origin_in_relint(&[c(-1.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert!(r.in_relint);
    }

    #[test]
    fn triangle_centroid() {
        let r = origin_in_relint(&[c(1.0, 1.0), c(-1.0, 1.0), c(0.0, -2.0)]).unwrap();
        assert!(r.in_relint);
        let w = r.certificate.unwrap();
        for v in w {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_is_rejected() {
        assert!(origin_in_relint(&[]).is_err());
    }

    #[test]
    fn diagonal_only_single_vertex_passes() {
        let p = QcqpProblem::new(
            HermitianMatrix::identity(1),
            vec![Constraint::new(HermitianMatrix::from_diag(&[-1.0]), -1.0, "lo")],
        )
        .unwrap();
        let r = check_condition1(&p);
        assert!(r.overall && r.is_tree && r.per_edge.is_empty());
    }

    #[test]
    fn open_half_plane_never_in_relint() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20_240_601);
        for _ in 0..10_000 {
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let m = rng.gen_range(1..=6);
            let pts: Vec<C64> = (0..m)
                .map(|_| {
                    let ang = phi + rng.gen_range(-1.0..1.0) * (std::f64::consts::FRAC_PI_2 - 1e-3);
                    C64::from_polar(rng.gen_range(0.01..10.0), ang)
                })
                .collect();
            assert!(!origin_in_relint(&pts).unwrap().in_relint, "{pts:?}");
        }
    }

    proptest! {
        #[test]
        fn invariant_under_permutation_duplication_and_rotation(
            pts in prop::collection::vec((-2i32..=2, -2i32..=2), 1..5),
            rot in 0.0f64..std::f64::consts::TAU,
            scale in 0.1f64..10.0,
            shift in 0usize..5,
        ) {
            let base: Vec<C64> = pts.iter().map(|&(a, b)| c(a as f64, b as f64)).collect();
            let r0 = origin_in_relint(&base).unwrap();
            let mut permuted = base.clone();
            permuted.rotate_left(shift % base.len());
            permuted.push(base[0]);
            let factor = C64::from_polar(scale, rot);
            let transformed: Vec<C64> = permuted.iter().map(|z| z * factor).collect();
            let r1 = origin_in_relint(&transformed).unwrap();
            prop_assert_eq!(r0.in_relint, r1.in_relint);
            prop_assert_eq!(r0.on_boundary, r1.on_boundary);
        }
    }
}
