//! Primal–dual interior-point method for real semidefinite programs with one
//! PSD block and a nonnegative orthant:
//!
//! ```text
//! min ⟨C, X⟩ + cᵀu   s.t.  ⟨A_i, X⟩ + a_iᵀu = b_i,  X ⪰ 0,  u ≥ 0
//! max bᵀy            s.t.  Z = C − Σ y_i A_i ⪰ 0,  z = c − Σ y_i a_i ≥ 0
//! ```
//!
//! Infeasible-start path following with the HKM search direction and
//! Mehrotra's predictor–corrector. Dense kernels come from `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

/// Sparse symmetric matrix: `(p, q, v)` with `p <= q` sets `A[p][q] = A[q][p] = v`.
pub type SymEntries = Vec<(usize, usize, f64)>;

#[derive(Clone, Debug, Default)]
pub struct ConicRow {
    pub entries: SymEntries,
    pub lin: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug)]
pub struct ConicProblem {
    pub dim: usize,
    pub cost: SymEntries,
    pub lin_cost: Vec<f64>,
    pub rows: Vec<ConicRow>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Duality gap of the normalized problem relative to `1 + |p| + |d|`.
    pub gap: f64,
    /// Primal residual of the normalized problem relative to `1 + |b_i| + ‖X‖`,
    /// and dual residual of the normalized problem.
    pub feas: f64,
    pub max_iters: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { gap: 1e-8, feas: 1e-8, max_iters: 200 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Stopped short of the tolerances but within their square roots.
    Inaccurate,
    Infeasible,
    Unbounded,
    MaxIters,
    NumericalFailure,
}

impl SolveStatus {
    /// Whether the returned point can be used as an (approximate) optimum.
    pub fn is_usable(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Inaccurate)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub step_primal: f64,
    pub step_dual: f64,
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: DMatrix<f64>,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub z: DMatrix<f64>,
    pub z_lin: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    pub trace: Vec<IterationLog>,
}

struct Row {
    // Both triangles listed.
    full: Vec<(usize, usize, f64)>,
    lin: Vec<(usize, f64)>,
    rhs: f64,
}

fn expand(entries: &SymEntries) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(2 * entries.len());
    for &(p, q, v) in entries {
        if v == 0.0 {
            continue;
        }
        let (p, q) = (p.min(q), p.max(q));
        out.push((p, q, v));
        if p != q {
            out.push((q, p, v));
        }
    }
    out
}

fn inner(full: &[(usize, usize, f64)], x: &DMatrix<f64>) -> f64 {
    full.iter().map(|&(p, q, v)| v * x[(p, q)]).sum()
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    let t = m.transpose();
    (m + t) * 0.5
}

/// Largest `α` with `X + α·dX ⪰ 0`, given the Cholesky factor of `X`.
fn max_step(chol: &Cholesky<f64, nalgebra::Dyn>, dx: &DMatrix<f64>) -> f64 {
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else { return 0.0 };
    let m = sym(&linv * dx * linv.transpose());
    let lmin = SymmetricEigen::new(m).eigenvalues.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_lin(u: &[f64], du: &[f64]) -> f64 {
    u.iter().zip(du).fold(f64::INFINITY, |a, (&ui, &di)| if di < 0.0 { a.min(-ui / di) } else { a })
}

struct Scaled {
    rows: Vec<Row>,
    cost: DMatrix<f64>,
    lin_cost: Vec<f64>,
    row_scale: Vec<f64>,
    cost_scale: f64,
    // Per linear variable, the rows it appears in.
    lin_rows: Vec<Vec<(usize, f64)>>,
}

fn scale_problem(p: &ConicProblem) -> Scaled {
    let n = p.dim;
    let mut rows = Vec::with_capacity(p.rows.len());
    let mut row_scale = Vec::with_capacity(p.rows.len());
    for r in &p.rows {
        let full = expand(&r.entries);
        let norm = (full.iter().map(|e| e.2 * e.2).sum::<f64>() + r.lin.iter().map(|e| e.1 * e.1).sum::<f64>()).sqrt();
        let s = if norm > 0.0 { 1.0 / norm } else { 1.0 };
        row_scale.push(norm.max(f64::MIN_POSITIVE));
        rows.push(Row {
            full: full.into_iter().map(|(a, b, v)| (a, b, v * s)).collect(),
            lin: r.lin.iter().map(|&(l, v)| (l, v * s)).collect(),
            rhs: r.rhs * s,
        });
    }
    let mut cost = DMatrix::<f64>::zeros(n, n);
    for (a, b, v) in expand(&p.cost) {
        cost[(a, b)] += v;
    }
    let cnorm = (cost.norm_squared() + p.lin_cost.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let cost_scale = if cnorm > 0.0 { cnorm } else { 1.0 };
    let mut lin_rows = vec![Vec::new(); p.lin_cost.len()];
    for (i, r) in rows.iter().enumerate() {
        for &(l, v) in &r.lin {
            lin_rows[l].push((i, v));
        }
    }
    Scaled {
        rows,
        cost: cost / cost_scale,
        lin_cost: p.lin_cost.iter().map(|v| v / cost_scale).collect(),
        row_scale,
        cost_scale,
        lin_rows,
    }
}

struct Iterate {
    x: DMatrix<f64>,
    u: Vec<f64>,
    y: Vec<f64>,
    z: DMatrix<f64>,
    zl: Vec<f64>,
}

struct Metrics {
    pobj: f64,
    dobj: f64,
    gap: f64,
    pinf: f64,
    dinf: f64,
    // Same measures on the normalized problem, relative to the size of the
    // terms; these drive termination.
    gap_s: f64,
    pinf_s: f64,
    dinf_s: f64,
}

pub fn solve(p: &ConicProblem, tol: &Tolerances) -> ConicSolution {
    let n = p.dim;
    let nl = p.lin_cost.len();
    let m = p.rows.len();
    let s = scale_problem(p);

    let max_b = s.rows.iter().fold(0.0_f64, |a, r| a.max(r.rhs.abs()));
    let nf = n as f64;
    let xi = 10f64.max(nf.sqrt()).max(nf * (1.0 + max_b) / 2.0);
    let eta = 10f64.max(nf.sqrt());
    let mut it = Iterate {
        x: DMatrix::identity(n, n) * xi,
        u: vec![xi; nl],
        y: vec![0.0; m],
        z: DMatrix::identity(n, n) * eta,
        zl: vec![eta; nl],
    };
    let unscaled_b: Vec<f64> = p.rows.iter().map(|r| r.rhs).collect();
    let c_norm_unscaled = s.cost_scale;

    let residuals = |it: &Iterate| -> (Vec<f64>, DMatrix<f64>, Vec<f64>) {
        let rp: Vec<f64> = s
            .rows
            .iter()
            .map(|r| r.rhs - inner(&r.full, &it.x) - r.lin.iter().map(|&(l, v)| v * it.u[l]).sum::<f64>())
            .collect();
        let mut rd = &s.cost - &it.z;
        for (r, &yi) in s.rows.iter().zip(&it.y) {
            for &(a, b, v) in &r.full {
                rd[(a, b)] -= yi * v;
            }
        }
        let mut rdl: Vec<f64> = s.lin_cost.iter().zip(&it.zl).map(|(c, z)| c - z).collect();
        for (l, list) in s.lin_rows.iter().enumerate() {
            for &(i, v) in list {
                rdl[l] -= it.y[i] * v;
            }
        }
        (rp, rd, rdl)
    };

    let metrics = |it: &Iterate, rp: &[f64], rd: &DMatrix<f64>, rdl: &[f64]| -> Metrics {
        let sc = s.cost_scale;
        let pobj = sc * (s.cost.dot(&it.x) + s.lin_cost.iter().zip(&it.u).map(|(a, b)| a * b).sum::<f64>());
        let dobj = sc * s.rows.iter().zip(&it.y).map(|(r, y)| r.rhs * y).sum::<f64>();
        let pinf = rp
            .iter()
            .zip(&s.row_scale)
            .zip(&unscaled_b)
            .map(|((r, sc_i), b)| (r * sc_i).abs() / (1.0 + b.abs()))
            .fold(0.0, f64::max);
        let dinf = sc * (rd.norm_squared() + rdl.iter().map(|v| v * v).sum::<f64>()).sqrt() / (1.0 + c_norm_unscaled);
        let xnorm = it.x.norm() + it.u.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (ps, ds) = (pobj / sc, dobj / sc);
        let pinf_s = rp.iter().zip(&s.rows).map(|(r, row)| r.abs() / (1.0 + row.rhs.abs() + xnorm)).fold(0.0, f64::max);
        let dinf_s = (rd.norm_squared() + rdl.iter().map(|v| v * v).sum::<f64>()).sqrt();
        Metrics {
            pobj,
            dobj,
            gap: (pobj - dobj).abs() / (1.0 + pobj.abs()),
            pinf,
            dinf,
            gap_s: (ps - ds).abs() / (1.0 + ps.abs() + ds.abs()),
            pinf_s,
            dinf_s,
        }
    };

    let mut trace = Vec::new();
    let mut status = SolveStatus::MaxIters;
    let mut best: Option<(f64, Iterate, usize)> = None;
    let mut stalls = 0;
    let mut iterations = 0;

    for iter in 0..=tol.max_iters {
        iterations = iter;
        let (rp, rd, rdl) = residuals(&it);
        let mt = metrics(&it, &rp, &rd, &rdl);
        let merit = (mt.gap / tol.gap).max(mt.pinf / tol.feas).max(mt.dinf / tol.feas);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, Iterate { x: it.x.clone(), u: it.u.clone(), y: it.y.clone(), z: it.z.clone(), zl: it.zl.clone() }, iter));
        }
        if merit <= 1.0 {
            status = SolveStatus::Optimal;
            break;
        }
        // Badly scaled data can stop short of the absolute targets; give up
        // once the best iterate has not improved for a while.
        if best.as_ref().is_some_and(|b| iter >= b.2 + 6) {
            break;
        }
        // Infeasibility certificates on the scaled data.
        let by: f64 = s.rows.iter().zip(&it.y).map(|(r, y)| r.rhs * y).sum();
        if by > 0.0 {
            let aty_z = (&s.cost - &rd).norm() + s.lin_cost.iter().zip(&rdl).map(|(c, r)| (c - r).powi(2)).sum::<f64>().sqrt();
            if aty_z / by < 1e-8 && by > 1e3 {
                status = SolveStatus::Infeasible;
                break;
            }
        }
        let cx = s.cost.dot(&it.x) + s.lin_cost.iter().zip(&it.u).map(|(a, b)| a * b).sum::<f64>();
        if cx < 0.0 {
            let ax: f64 = s
                .rows
                .iter()
                .zip(&rp)
                .map(|(r, rpi)| (r.rhs - rpi).powi(2))
                .sum::<f64>()
                .sqrt();
            if ax / -cx < 1e-8 && -cx > 1e3 {
                status = SolveStatus::Unbounded;
                break;
            }
        }
        if iter == tol.max_iters {
            break;
        }

        let Some(zchol) = Cholesky::new(it.z.clone()) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let Some(xchol) = Cholesky::new(it.x.clone()) else {
            status = SolveStatus::NumericalFailure;
            break;
        };
        let g = sym(zchol.inverse());
        let mu = (it.x.dot(&it.z) + it.u.iter().zip(&it.zl).map(|(a, b)| a * b).sum::<f64>()) / (n + nl) as f64;

        // Schur complement M_ij = tr(A_i X A_j G) + Σ_l a_il a_jl u_l / z_l.
        let mut schur = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            let ai = &s.rows[i].full;
            for j in 0..=i {
                let aj = &s.rows[j].full;
                let mut acc = 0.0;
                for &(pp, q, v) in ai {
                    for &(r, ss, w) in aj {
                        acc += v * w * it.x[(q, r)] * g[(ss, pp)];
                    }
                }
                schur[(i, j)] = acc;
                schur[(j, i)] = acc;
            }
        }
        for (l, list) in s.lin_rows.iter().enumerate() {
            let d = it.u[l] / it.zl[l];
            for &(i, vi) in list {
                for &(j, vj) in list {
                    schur[(i, j)] += vi * vj * d;
                }
            }
        }
        let Some(factor) = factor_schur(schur) else {
            status = SolveStatus::NumericalFailure;
            break;
        };

        let xrdg = &it.x * &rd * &g;
        let direction = |k: &DMatrix<f64>, rc: &[f64]| {
            let t = k - &xrdg;
            let rhs: Vec<f64> = (0..m)
                .map(|i| {
                    let row = &s.rows[i];
                    let lin: f64 = row.lin.iter().map(|&(l, v)| v * (rc[l] - it.u[l] * rdl[l]) / it.zl[l]).sum();
                    rp[i] - inner(&row.full, &t) - lin
                })
                .collect();
            let mut dy = factor.solve(&DVector::from_vec(rhs));
            // The direction is affine in dy; a few refinement passes absorb
            // the error of the ill-conditioned Schur solve.
            let mut best_res = f64::INFINITY;
            let mut out = None;
            for _ in 0..4 {
                let mut dz = rd.clone();
                for (r, &d) in s.rows.iter().zip(dy.iter()) {
                    for &(a, b, v) in &r.full {
                        dz[(a, b)] -= d * v;
                    }
                }
                let dx = k - sym(&it.x * &dz * &g);
                let mut dzl = rdl.clone();
                for (l, list) in s.lin_rows.iter().enumerate() {
                    for &(i, v) in list {
                        dzl[l] -= dy[i] * v;
                    }
                }
                let du: Vec<f64> = (0..nl).map(|l| (rc[l] - it.u[l] * dzl[l]) / it.zl[l]).collect();
                let res: Vec<f64> = (0..m)
                    .map(|i| {
                        let row = &s.rows[i];
                        rp[i] - inner(&row.full, &dx) - row.lin.iter().map(|&(l, v)| v * du[l]).sum::<f64>()
                    })
                    .collect();
                let norm = res.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                if norm >= best_res {
                    break;
                }
                best_res = norm;
                out = Some((dx, du, dy.as_slice().to_vec(), dz, dzl));
                if norm <= 1e-15 * (1.0 + rp.iter().fold(0.0_f64, |a, v| a.max(v.abs()))) {
                    break;
                }
                dy += factor.solve(&DVector::from_vec(res));
            }
            out.expect("first pass always stored")
        };

        // Predictor.
        let k_aff = -it.x.clone();
        let rc_aff: Vec<f64> = it.u.iter().zip(&it.zl).map(|(a, b)| -a * b).collect();
        let (dxa, dua, _, dza, dzla) = direction(&k_aff, &rc_aff);
        let ap = max_step(&xchol, &dxa).min(max_step_lin(&it.u, &dua)).min(1.0);
        let ad = max_step(&zchol, &dza).min(max_step_lin(&it.zl, &dzla)).min(1.0);
        let mu_aff = ((&it.x + &dxa * ap).dot(&(&it.z + &dza * ad))
            + (0..nl).map(|l| (it.u[l] + ap * dua[l]) * (it.zl[l] + ad * dzla[l])).sum::<f64>())
            / (n + nl) as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let k = &g * (sigma * mu) - &it.x - sym(&dxa * &dza * &g);
        let rc: Vec<f64> = (0..nl).map(|l| sigma * mu - it.u[l] * it.zl[l] - dua[l] * dzla[l]).collect();
        let (dx, du, dy, dz, dzl) = direction(&k, &rc);
        let gamma = 0.98;
        let ap = (gamma * max_step(&xchol, &dx).min(max_step_lin(&it.u, &du))).min(1.0);
        let ad = (gamma * max_step(&zchol, &dz).min(max_step_lin(&it.zl, &dzl))).min(1.0);

        it.x += &dx * ap;
        it.x = sym(it.x.clone());
        for l in 0..nl {
            it.u[l] += ap * du[l];
            it.zl[l] += ad * dzl[l];
        }
        for i in 0..m {
            it.y[i] += ad * dy[i];
        }
        it.z += &dz * ad;
        it.z = sym(it.z.clone());

        trace.push(IterationLog {
            iteration: iter + 1,
            primal_objective: mt.pobj,
            dual_objective: mt.dobj,
            gap: mt.gap,
            primal_infeasibility: mt.pinf,
            dual_infeasibility: mt.dinf,
            step_primal: ap,
            step_dual: ad,
        });
        if ap.max(ad) < 1e-10 {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }

    if status != SolveStatus::Optimal && status != SolveStatus::Infeasible && status != SolveStatus::Unbounded {
        if let Some((_, b, at)) = best.take() {
            it = b;
            iterations = iterations.max(at);
        }
    }
    let (rp, rd, rdl) = residuals(&it);
    let mt = metrics(&it, &rp, &rd, &rdl);
    // Accept the best iterate when it is optimal relative to the size of the terms.
    if matches!(status, SolveStatus::MaxIters | SolveStatus::NumericalFailure)
        && mt.gap_s <= tol.gap
        && mt.pinf_s <= tol.feas
        && mt.dinf_s <= tol.feas
    {
        status = SolveStatus::Optimal;
    } else if matches!(status, SolveStatus::MaxIters | SolveStatus::NumericalFailure)
        && mt.gap_s <= tol.gap.sqrt()
        && mt.pinf_s <= tol.feas.sqrt()
        && mt.dinf_s <= tol.feas.sqrt()
    {
        status = SolveStatus::Inaccurate;
    }
    let sc = s.cost_scale;
    ConicSolution {
        status,
        y: it.y.iter().zip(&s.row_scale).map(|(y, r)| sc * y / r).collect(),
        z: &it.z * sc,
        z_lin: it.zl.iter().map(|v| v * sc).collect(),
        x: it.x,
        u: it.u,
        primal_objective: mt.pobj,
        dual_objective: mt.dobj,
        gap: mt.gap,
        primal_infeasibility: mt.pinf,
        dual_infeasibility: mt.dinf,
        iterations,
        trace,
    }
}

enum SchurFactor {
    Chol(Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl SchurFactor {
    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        match self {
            SchurFactor::Chol(c) => c.solve(b),
            SchurFactor::Lu(l) => l.solve(b).unwrap_or_else(|| DVector::zeros(b.len())),
        }
    }
}

fn factor_schur(mut schur: DMatrix<f64>) -> Option<SchurFactor> {
    if schur.nrows() == 0 {
        return Some(SchurFactor::Chol(Cholesky::new(schur)?));
    }
    if let Some(c) = Cholesky::new(schur.clone()) {
        return Some(SchurFactor::Chol(c));
    }
    let diag_max = schur.diagonal().iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
    for k in 0..schur.nrows() {
        schur[(k, k)] += 1e-13 * diag_max;
    }
    if let Some(c) = Cholesky::new(schur.clone()) {
        return Some(SchurFactor::Chol(c));
    }
    let lu = schur.lu();
    lu.is_invertible().then_some(SchurFactor::Lu(lu))
}
