//! Semidefinite relaxation `min tr(CW) s.t. tr(C_k W) ≤ b_k, W ⪰ 0` and its
//! dual `max −Σ λ_k b_k s.t. A(λ) = C + Σ λ_k C_k ⪰ 0`.

use serde::Serialize;

use crate::conic::{self, ConicProblem, ConicRow, IterationLog, SolveStatus, SymEntries, Tolerances};
use crate::graph::{matrix_graph, ProblemGraph, TAU_ZERO};
use crate::hermitian::{eig_hermitian, numeric_rank, solution_rank, trace_product_unchecked, HermitianMatrix, TAU_RANK};
use crate::problem::QcqpProblem;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSense {
    Le,
    Eq,
}

/// Which constraints of the QCQP a relaxation row came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RowSource {
    Single(usize),
    /// `lo = hi` bound pair merged into one equality on the upper matrix.
    Equality { lower: usize, upper: usize },
    Auxiliary,
}

#[derive(Clone, Debug)]
pub struct SdpRow {
    pub matrix: HermitianMatrix,
    /// Coefficients on the auxiliary nonnegative variables.
    pub lin: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
    pub source: RowSource,
}

/// Hermitian SDP `min tr(cost·W) + lin_costᵀv + constant` over rows
/// `tr(M_i W) + a_iᵀv (≤ | =) rhs_i`, `W ⪰ 0`, `v ≥ 0`.
#[derive(Clone, Debug)]
pub struct HermitianSdp {
    pub n: usize,
    pub cost: HermitianMatrix,
    pub constant: f64,
    pub lin_cost: Vec<f64>,
    pub rows: Vec<SdpRow>,
    /// Number of QCQP constraints (length of the reported `λ`).
    pub n_constraints: usize,
    /// Added to every recovered multiplier; nonzero for perturbed objectives
    /// whose dual forces `λ_k ≥ ε`.
    pub lambda_offset: Vec<f64>,
}

/// Relative tolerance for treating a bound pair as an equality.
const EQ_TOL: f64 = 1e-12;

/// Rows for the active constraints of `p`; bound pairs with `lo = hi` become
/// one equality row.
pub fn constraint_rows(p: &QcqpProblem) -> Vec<SdpRow> {
    let cons = p.constraints();
    let mut merged = vec![false; cons.len()];
    let mut rows = Vec::new();
    for pair in p.pairs() {
        if let (Some(neg_lo), Some(hi)) = (cons[pair.lower].upper, cons[pair.upper].upper) {
            let lo = -neg_lo;
            if (hi - lo).abs() <= EQ_TOL * (1.0 + hi.abs()) {
                merged[pair.lower] = true;
                merged[pair.upper] = true;
                rows.push(SdpRow {
                    matrix: cons[pair.upper].matrix.clone(),
                    lin: Vec::new(),
                    sense: RowSense::Eq,
                    rhs: hi,
                    source: RowSource::Equality { lower: pair.lower, upper: pair.upper },
                });
            }
        }
    }
    for (k, c) in cons.iter().enumerate() {
        if let (Some(b), false) = (c.upper, merged[k]) {
            rows.push(SdpRow { matrix: c.matrix.clone(), lin: Vec::new(), sense: RowSense::Le, rhs: b, source: RowSource::Single(k) });
        }
    }
    rows
}

/// The plain relaxation of `p`.
pub fn build_relaxation(p: &QcqpProblem) -> HermitianSdp {
    HermitianSdp {
        n: p.n(),
        cost: p.objective().clone(),
        constant: 0.0,
        lin_cost: Vec::new(),
        rows: constraint_rows(p),
        n_constraints: p.constraints().len(),
        lambda_offset: vec![0.0; p.constraints().len()],
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residuals {
    /// `max_k (tr(C_k W) − b_k)₊ / (1 + |b_k| + ‖C_k‖_F ‖W‖_F)`.
    pub primal_feas: f64,
    /// `max(0, −ρ_min[Z]) / (1 + ‖Z‖₂)` for the dual slack matrix `Z`.
    pub dual_feas: f64,
    /// `|r − d| / (1 + |r| + |d| + ‖C‖_F ‖W‖_F)`.
    pub gap: f64,
    /// Largest absolute row violation `(tr(C_k W) − b_k)₊`.
    pub primal_abs: f64,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub w: HermitianMatrix,
    /// Indexed by all QCQP constraints; zero on removed ones.
    pub lambda: Vec<f64>,
    pub r_star: f64,
    pub d_star: f64,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub iterations: usize,
    /// Values of the auxiliary variables.
    pub aux: Vec<f64>,
    /// Dual slack `cost − Σ y_i M_i`, which equals `A(λ)` for relaxations of `P`.
    pub dual_matrix: HermitianMatrix,
    pub trace: Vec<IterationLog>,
}

/// Upper triangle of `embed(H)/2`, so that `⟨embed(H)/2, embed(W)⟩ = tr(HW)`.
fn embed_entries(h: &HermitianMatrix) -> SymEntries {
    let n = h.n();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            if j >= i && z.re != 0.0 {
                out.push((i, j, 0.5 * z.re));
                out.push((n + i, n + j, 0.5 * z.re));
            }
            if z.im != 0.0 {
                out.push((i, n + j, -0.5 * z.im));
            }
        }
    }
    out
}

pub fn solve_sdp(data: &HermitianSdp, tol: &Tolerances) -> SdpSolution {
    let n_aux = data.lin_cost.len();
    let mut lin_cost = data.lin_cost.clone();
    let mut rows = Vec::with_capacity(data.rows.len());
    for r in &data.rows {
        let mut lin = r.lin.clone();
        if r.sense == RowSense::Le {
            lin.push((lin_cost.len(), 1.0));
            lin_cost.push(0.0);
        }
        rows.push(ConicRow { entries: embed_entries(&r.matrix), lin, rhs: r.rhs });
    }
    let problem = ConicProblem { dim: 2 * data.n, cost: embed_entries(&data.cost), lin_cost, rows };
    let sol = conic::solve(&problem, tol);

    let w = HermitianMatrix::from_real_embedding(&sol.x).expect("embedding has even order");
    let mut lambda = data.lambda_offset.clone();
    lambda.resize(data.n_constraints, 0.0);
    let mut dual_matrix = data.cost.clone();
    for (r, &y) in data.rows.iter().zip(&sol.y) {
        dual_matrix.add_scaled_in_place(-y, &r.matrix);
        match r.source {
            RowSource::Single(k) => lambda[k] += (-y).max(0.0),
            RowSource::Equality { lower, upper } => {
                lambda[upper] += (-y).max(0.0);
                lambda[lower] += y.max(0.0);
            }
            RowSource::Auxiliary => {}
        }
    }
    let aux: Vec<f64> = sol.u[..n_aux].to_vec();
    let r_star = trace_product_unchecked(&data.cost, &w)
        + data.lin_cost.iter().zip(&aux).map(|(c, v)| c * v).sum::<f64>()
        + data.constant;
    let d_star = data.rows.iter().zip(&sol.y).map(|(r, y)| r.rhs * y).sum::<f64>() + data.constant;

    let wnorm = w.frobenius_norm() + aux.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut primal_abs = 0.0_f64;
    let mut primal_feas = 0.0_f64;
    for r in &data.rows {
        let v = trace_product_unchecked(&r.matrix, &w) + r.lin.iter().map(|&(l, a)| a * aux[l]).sum::<f64>();
        let excess = match r.sense {
            RowSense::Le => (v - r.rhs).max(0.0),
            RowSense::Eq => (v - r.rhs).abs(),
        };
        let size = r.matrix.frobenius_norm() + r.lin.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
        primal_abs = primal_abs.max(excess);
        primal_feas = primal_feas.max(excess / (1.0 + r.rhs.abs() + size * wnorm));
    }
    let cost_size = (data.cost.frobenius_norm() + data.lin_cost.iter().map(|v| v * v).sum::<f64>().sqrt()) * wnorm;
    let zs = eig_hermitian(&dual_matrix);
    let zmin = *zs.eigenvalues.last().expect("n >= 1");
    let znorm = zs.eigenvalues[0].abs().max(zmin.abs());
    let residuals = Residuals {
        primal_feas,
        dual_feas: (-zmin).max(0.0) / (1.0 + znorm),
        gap: (r_star - d_star).abs() / (1.0 + r_star.abs() + d_star.abs() + cost_size),
        primal_abs,
    };

    let mut status = sol.status;
    if status == SolveStatus::Optimal {
        // Accept only if the Hermitian invariants hold on the mapped solution.
        let within = |f: f64| residuals.gap <= f * tol.gap && primal_feas <= f * tol.feas && residuals.dual_feas <= f * tol.feas;
        if !within(10.0) {
            status = if within(10.0 / tol.gap.min(tol.feas).sqrt()) {
                SolveStatus::Inaccurate
            } else {
                SolveStatus::NumericalFailure
            };
        }
    }
    SdpSolution {
        w,
        lambda,
        r_star,
        d_star,
        status,
        residuals,
        iterations: sol.iterations,
        aux,
        dual_matrix,
        trace: sol.trace,
    }
}

/// Solves the plain relaxation of `p`.
pub fn solve_relaxation(p: &QcqpProblem, tol: &Tolerances) -> SdpSolution {
    solve_sdp(&build_relaxation(p), tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct DualCertificate {
    #[serde(skip)]
    pub a: HermitianMatrix,
    pub psd_ok: bool,
    pub graph: ProblemGraph,
    pub connected: bool,
    /// Numerical rank of `A(λ)` is at least `n − 1`.
    pub rank_at_least_n_minus_1: bool,
    pub min_eigenvalue: f64,
}

/// `A(λ) = C + Σ λ_k C_k` with its PSD test and sparsity graph.
pub fn dual_certificate(p: &QcqpProblem, lambda: &[f64]) -> DualCertificate {
    dual_certificate_with(p, lambda, TAU_ZERO)
}

pub fn dual_certificate_with(p: &QcqpProblem, lambda: &[f64], tau_zero: f64) -> DualCertificate {
    let a = p.a_of_lambda(lambda);
    let s = eig_hermitian(&a);
    let min = *s.eigenvalues.last().expect("n >= 1");
    let norm = s.eigenvalues[0].abs().max(min.abs());
    let graph = matrix_graph(&a, tau_zero);
    let connected = graph.is_connected();
    let rank = numeric_rank(&s, TAU_RANK);
    DualCertificate {
        psd_ok: min >= -crate::hermitian::TAU_PSD * (1.0 + norm),
        connected,
        graph,
        rank_at_least_n_minus_1: rank + 1 >= p.n(),
        min_eigenvalue: min,
        a,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KktReport {
    pub comp_slack: f64,
    pub comp_slack_violated: bool,
    pub dual_graph_connected: bool,
    pub rank_w: usize,
    pub a_min_eig: f64,
}

/// Relative cutoff on `|A_ij|` when deciding connectivity of a numerically
/// computed dual matrix.
pub const DUAL_GRAPH_REL_TOL: f64 = 1e-6;

/// Complementary slackness and rank diagnostics recomputed from `(W, λ)`.
pub fn kkt_report(p: &QcqpProblem, sol: &SdpSolution) -> KktReport {
    let a = p.a_of_lambda(&sol.lambda);
    let comp = trace_product_unchecked(&a, &sol.w).abs();
    let bound = 1e-6 * (1.0 + a.frobenius_norm() * sol.w.frobenius_norm());
    let graph = matrix_graph(&a, DUAL_GRAPH_REL_TOL * a.max_abs().max(TAU_ZERO));
    KktReport {
        comp_slack: comp,
        comp_slack_violated: comp > bound,
        dual_graph_connected: graph.is_connected(),
        rank_w: solution_rank(&eig_hermitian(&sol.w), TAU_RANK),
        a_min_eig: crate::hermitian::min_eigenvalue(&a),
    }
}

#[derive(Clone, Debug)]
pub struct ProbeResult {
    /// `max s` with `tr(C_k W) ≤ b_k − s`; positive certifies a strictly
    /// feasible relaxation point.
    pub slack: f64,
    pub witness: HermitianMatrix,
    pub status: SolveStatus,
}

/// Solves `max s s.t. tr(C_k W) ≤ b_k − s, W ⪰ 0, tr(W) ≤ τ_box`.
pub fn strict_feasibility_probe(p: &QcqpProblem, tau_box: Option<f64>, tol: &Tolerances) -> ProbeResult {
    let active = p.active();
    let n = p.n();
    if active.is_empty() {
        return ProbeResult { slack: f64::INFINITY, witness: HermitianMatrix::zeros(n), status: SolveStatus::Optimal };
    }
    let bounds: Vec<f64> = active.iter().map(|&k| p.constraints()[k].upper.expect("active")).collect();
    let max_b = bounds.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let tau_box = tau_box.unwrap_or(10.0 * n as f64 * (1.0 + max_b));
    // W = 0 gives s ≥ min b_k, so s = s' + s_min with s' ≥ 0 loses nothing.
    let s_min = bounds.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
    let mut rows: Vec<SdpRow> = active
        .iter()
        .zip(&bounds)
        .map(|(&k, &b)| SdpRow {
            matrix: p.constraints()[k].matrix.clone(),
            lin: vec![(0, 1.0)],
            sense: RowSense::Le,
            rhs: b - s_min,
            source: RowSource::Auxiliary,
        })
        .collect();
    rows.push(SdpRow {
        matrix: HermitianMatrix::identity(n),
        lin: Vec::new(),
        sense: RowSense::Le,
        rhs: tau_box,
        source: RowSource::Auxiliary,
    });
    let data = HermitianSdp {
        n,
        cost: HermitianMatrix::zeros(n),
        constant: 0.0,
        lin_cost: vec![-1.0],
        rows,
        n_constraints: 0,
        lambda_offset: Vec::new(),
    };
    let sol = solve_sdp(&data, tol);
    ProbeResult { slack: sol.aux[0] + s_min, witness: sol.w, status: sol.status }
}
