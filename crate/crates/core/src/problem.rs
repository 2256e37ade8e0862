//! The QCQP `min xᴴCx  s.t.  xᴴC_k x ≤ b_k`, with `b_k = +∞` marking a removed
//! constraint.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::graph::{ProblemGraph, TAU_ZERO};
use crate::hermitian::{eig_hermitian, HermitianMatrix, C64, TAU_PSD};

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub matrix: HermitianMatrix,
    /// `None` is `+∞`: the constraint is removed.
    pub upper: Option<f64>,
    pub label: String,
}

impl Constraint {
    pub fn new(matrix: HermitianMatrix, upper: f64, label: impl Into<String>) -> Self {
        Self { matrix, upper: upper.is_finite().then_some(upper), label: label.into() }
    }

    pub fn is_active(&self) -> bool {
        self.upper.is_some()
    }
}

/// Two constraints `(-M, -lo)` and `(M, hi)` that together encode `lo ≤ xᴴMx ≤ hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundPair {
    pub lower: usize,
    pub upper: usize,
}

#[derive(Clone, Debug)]
pub struct QcqpProblem {
    n: usize,
    objective: HermitianMatrix,
    constraints: Vec<Constraint>,
    pairs: Vec<BoundPair>,
    bounded_assertion: bool,
    c_min_eig: f64,
    c_norm: f64,
}

impl QcqpProblem {
    /// Validates dimensions, bounds and positive semidefiniteness of `C`.
    pub fn new(objective: HermitianMatrix, constraints: Vec<Constraint>) -> Result<Self> {
        let n = objective.n();
        for (k, c) in constraints.iter().enumerate() {
            if c.matrix.n() != n {
                return Err(Error::Dimension { expected: n, found: c.matrix.n() });
            }
            if let Some(b) = c.upper {
                if !b.is_finite() {
                    return Err(validation(format!("constraint {k} has a non-finite bound {b}")));
                }
            }
        }
        let spec = eig_hermitian(&objective);
        let c_min_eig = *spec.eigenvalues.last().expect("n >= 1");
        let c_norm = spec.eigenvalues[0].abs().max(c_min_eig.abs());
        if c_min_eig < -TAU_PSD * (1.0 + c_norm) {
            return Err(validation(format!(
                "objective matrix is not positive semidefinite (minimum eigenvalue {c_min_eig:.3e})"
            )));
        }
        Ok(Self { n, objective, constraints, pairs: Vec::new(), bounded_assertion: false, c_min_eig, c_norm })
    }

    /// Declares two-sided bounds. Each pair's matrices must be negatives of each other.
    pub fn with_pairs(mut self, pairs: Vec<BoundPair>) -> Result<Self> {
        let mut used = vec![false; self.constraints.len()];
        for p in &pairs {
            if p.lower >= self.constraints.len() || p.upper >= self.constraints.len() || p.lower == p.upper {
                return Err(validation(format!("invalid bound pair ({}, {})", p.lower, p.upper)));
            }
            if used[p.lower] || used[p.upper] {
                return Err(validation(format!("constraint appears in two bound pairs ({}, {})", p.lower, p.upper)));
            }
            used[p.lower] = true;
            used[p.upper] = true;
            if !negated(&self.constraints[p.lower].matrix, &self.constraints[p.upper].matrix) {
                return Err(validation(format!(
                    "bound pair ({}, {}) does not consist of opposite matrices",
                    p.lower, p.upper
                )));
            }
        }
        self.pairs = pairs;
        Ok(self)
    }

    /// Pairs every constraint with the first later constraint carrying the
    /// negated matrix.
    pub fn with_detected_pairs(self) -> Self {
        let k = self.constraints.len();
        let mut used = vec![false; k];
        let mut pairs = Vec::new();
        for a in 0..k {
            if used[a] {
                continue;
            }
            for b in (a + 1)..k {
                if !used[b] && negated(&self.constraints[a].matrix, &self.constraints[b].matrix) {
                    used[a] = true;
                    used[b] = true;
                    // The side whose matrix has the larger trace is taken as the upper side.
                    let (lower, upper) = if self.constraints[a].matrix.trace() >= self.constraints[b].matrix.trace() {
                        (b, a)
                    } else {
                        (a, b)
                    };
                    pairs.push(BoundPair { lower, upper });
                    break;
                }
            }
        }
        Self { pairs, ..self }
    }

    /// Caller assertion that the feasible set is bounded.
    pub fn with_bounded_assertion(mut self, bounded: bool) -> Self {
        self.bounded_assertion = bounded;
        self
    }

    /// Same constraints with a different objective matrix.
    pub fn with_objective(&self, objective: HermitianMatrix) -> Result<Self> {
        let p = Self::new(objective, self.constraints.clone())?;
        Ok(Self { pairs: self.pairs.clone(), bounded_assertion: self.bounded_assertion, ..p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn objective(&self) -> &HermitianMatrix {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn pairs(&self) -> &[BoundPair] {
        &self.pairs
    }

    pub fn bounded_assertion(&self) -> bool {
        self.bounded_assertion
    }

    /// Indices of constraints with a finite bound.
    pub fn active(&self) -> Vec<usize> {
        (0..self.constraints.len()).filter(|&k| self.constraints[k].is_active()).collect()
    }

    pub fn c_min_eigenvalue(&self) -> f64 {
        self.c_min_eig
    }

    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    /// Whether `C ≻ 0` beyond the PSD tolerance.
    pub fn c_definite(&self) -> bool {
        self.c_min_eig > TAU_PSD * (1.0 + self.c_norm)
    }

    pub fn objective_value(&self, x: &[C64]) -> f64 {
        self.objective.quad_form(x)
    }

    pub fn constraint_value(&self, k: usize, x: &[C64]) -> f64 {
        self.constraints[k].matrix.quad_form(x)
    }

    /// Largest violation `xᴴC_k x - b_k` scaled by `1 + |b_k|`, over active constraints.
    pub fn max_scaled_violation(&self, x: &[C64]) -> f64 {
        self.constraints
            .iter()
            .filter_map(|c| c.upper.map(|b| (c.matrix.quad_form(x) - b) / (1.0 + b.abs())))
            .fold(0.0, f64::max)
    }

    /// `A(λ) = C + Σ λ_k C_k`, with `λ` indexed by all constraints.
    pub fn a_of_lambda(&self, lambda: &[f64]) -> HermitianMatrix {
        let mut a = self.objective.clone();
        for (c, &l) in self.constraints.iter().zip(lambda) {
            if l != 0.0 && c.is_active() {
                a.add_scaled_in_place(l, &c.matrix);
            }
        }
        a
    }

    /// `𝒢(P)`: union of off-diagonal supports of `C` and all active `C_k`.
    pub fn graph(&self, tau_zero: f64) -> ProblemGraph {
        let mut edges = self.objective.off_diagonal_support(tau_zero);
        for c in self.constraints.iter().filter(|c| c.is_active()) {
            edges.extend(c.matrix.off_diagonal_support(tau_zero));
        }
        ProblemGraph::from_edges(self.n, edges)
    }

    /// Sufficient syntactic evidence of boundedness: either every coordinate
    /// is capped by a single-entry diagonal constraint, or the active PSD
    /// constraint matrices sum to a definite matrix.
    pub fn syntactic_bounded(&self) -> bool {
        let active: Vec<&Constraint> = self.constraints.iter().filter(|c| c.is_active()).collect();
        let capped = (0..self.n).all(|i| {
            active.iter().any(|c| {
                let m = &c.matrix;
                m.get(i, i).re > 0.0
                    && (0..self.n).all(|r| (0..self.n).all(|s| (r == i && s == i) || m.get(r, s).norm() <= TAU_ZERO))
            })
        });
        if capped {
            return true;
        }
        let mut sum = HermitianMatrix::zeros(self.n);
        let mut any = false;
        for c in active {
            if c.matrix.is_psd() && !c.matrix.is_zero() {
                sum.add_scaled_in_place(1.0, &c.matrix);
                any = true;
            }
        }
        if !any {
            return false;
        }
        let s = eig_hermitian(&sum);
        let top = s.eigenvalues[0];
        *s.eigenvalues.last().expect("n >= 1") > 1e-9 * top.max(1e-300)
    }

    pub fn bounded_hint(&self) -> bool {
        self.bounded_assertion || self.syntactic_bounded()
    }

    /// Maps a constraint index to its pair partner and whether it is the upper side.
    pub fn pair_of(&self, k: usize) -> Option<(usize, bool)> {
        self.pairs.iter().find_map(|p| {
            if p.upper == k {
                Some((p.lower, true))
            } else if p.lower == k {
                Some((p.upper, false))
            } else {
                None
            }
        })
    }
}

fn negated(a: &HermitianMatrix, b: &HermitianMatrix) -> bool {
    let scale = 1.0 + a.max_abs().max(b.max_abs());
    a.entries().iter().zip(b.entries()).all(|(x, y)| (x + y).norm() <= 1e-12 * scale)
}

/// JSON document form: `{n, objective, constraints: [{matrix, upper, label}], pairs?, bounded?}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub n: usize,
    pub objective: HermitianMatrix,
    pub constraints: Vec<ConstraintDocument>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounded: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDocument {
    pub matrix: HermitianMatrix,
    /// `null` is `+∞`.
    pub upper: Option<f64>,
    #[serde(default)]
    pub label: String,
}

impl ProblemDocument {
    pub fn into_problem(self) -> Result<QcqpProblem> {
        if self.objective.n() != self.n {
            return Err(Error::Dimension { expected: self.n, found: self.objective.n() });
        }
        let constraints = self
            .constraints
            .into_iter()
            .map(|c| Constraint { matrix: c.matrix, upper: c.upper, label: c.label })
            .collect();
        let p = QcqpProblem::new(self.objective, constraints)?;
        let p = match self.pairs {
            Some(pairs) => p.with_pairs(pairs.into_iter().map(|[lower, upper]| BoundPair { lower, upper }).collect())?,
            None => p.with_detected_pairs(),
        };
        Ok(p.with_bounded_assertion(self.bounded.unwrap_or(false)))
    }

    pub fn from_problem(p: &QcqpProblem) -> Self {
        Self {
            n: p.n,
            objective: p.objective.clone(),
            constraints: p
                .constraints
                .iter()
                .map(|c| ConstraintDocument { matrix: c.matrix.clone(), upper: c.upper, label: c.label.clone() })
                .collect(),
            pairs: (!p.pairs.is_empty()).then(|| p.pairs.iter().map(|q| [q.lower, q.upper]).collect()),
            bounded: p.bounded_assertion.then_some(true),
        }
    }
}
