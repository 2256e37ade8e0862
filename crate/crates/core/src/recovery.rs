//! Rank-one recovery: plain relaxation, then the ε-perturbation cascade for
//! definite objectives and the δ-shift cascade for singular ones.

use serde::Serialize;

use crate::condition::check_condition1;
use crate::conic::{SolveStatus, Tolerances};
use crate::error::{Error, Result};
use crate::heuristic::{quadratic_violations, restore_from, HeuristicConfig, HeuristicOutcome, Rectangular, TOL_FEAS};
use crate::hermitian::{eig_hermitian, min_eigenvalue, solution_rank, HermitianMatrix, C64, TAU_ABS, TAU_PSD, TAU_RANK};
use crate::problem::QcqpProblem;
use crate::sdr::{build_relaxation, solve_sdp, HermitianSdp, SdpSolution};

/// Largest ε tried when searching for ε₀.
pub const EPS0_MAX: f64 = 1.0;
/// Smallest ε tried when searching for ε₀.
pub const EPS0_MIN: f64 = 1e-12;
const EPS0_BISECTIONS: usize = 20;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct RecoveryConfig {
    /// Accuracy target; `1e-6·(1 + |r*|)` when absent.
    pub zeta: Option<f64>,
    pub tol: Tolerances,
    pub tau_rank: f64,
    /// `δ₀ = delta0_factor·(‖C‖₂ + 1)`.
    pub delta0_factor: f64,
    /// Run even when the exactness condition fails.
    pub skip_condition_check: bool,
    /// Feasibility correction of extracted points.
    pub polish: bool,
    pub tol_feas: f64,
    /// Entry made real and nonnegative in returned vectors.
    pub gauge: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        Self {
            zeta: None,
            tol: Tolerances::default(),
            tau_rank: TAU_RANK,
            delta0_factor: 1.0,
            skip_condition_check: false,
            polish: true,
            tol_feas: TOL_FEAS,
            gauge: 0,
        }
    }
}

pub fn default_zeta(r_star: f64) -> f64 {
    1e-6 * (1.0 + r_star.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StageKind {
    Plain,
    /// Perturbed objective `C + εΣC_k`, on the δ-shifted problem when `delta` is set.
    Eps { eps: f64, delta: Option<f64> },
    /// Plain relaxation of the problem with objective `C + δI`.
    Delta { delta: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    #[serde(flatten)]
    pub kind: StageKind,
    pub status: SolveStatus,
    pub iterations: usize,
    /// Optimal value of the stage's SDP, constant included.
    pub r_star: f64,
    pub d_star: f64,
    /// `tr(C W)` with the unperturbed objective of the stage's problem.
    pub objective_trace: f64,
    /// `Σ_active (b_k − tr(C_k W))`, clamped at zero termwise.
    pub slack_sum: f64,
    pub rank: usize,
    /// `ρ₂/ρ₁` of the stage's `W`.
    pub rho_ratio: f64,
    pub gap_tolerance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ExactRank1,
    CascadeRank1,
    HandedToHeuristic,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveryReport {
    pub stages: Vec<StageRecord>,
    pub x_star: Option<Vec<C64>>,
    pub p_hat: Option<f64>,
    /// `r*` of the plain relaxation.
    pub lower_bound: f64,
    pub zeta: f64,
    /// `p_hat − lower_bound`.
    pub achieved_gap: Option<f64>,
    pub outcome: Outcome,
    /// Outer iterations of the feasibility correction applied to `x_star`.
    pub polish_iterations: usize,
    /// Largest `(xᴴC_kx − b_k)₊ / (1 + |b_k|)` at `x_star`.
    pub max_violation: Option<f64>,
    pub condition_passed: Option<bool>,
    pub condition_overridden: bool,
    pub eps0: Option<f64>,
    pub delta0: Option<f64>,
    /// Stage at which the pipeline stopped without a rank-one point.
    pub failed_stage: Option<String>,
    /// Optimal `W` of the plain relaxation, the heuristic's starting data.
    #[serde(skip)]
    pub relaxation: Option<SdpSolution>,
}

/// `x = √ρ₁·u₁` rotated so entry `gauge` is real and nonnegative, when
/// `W` has numeric rank at most one; then `‖W − xxᴴ‖_F ≤ √(n−1)·τ_rank·‖W‖_F`.
/// Rank zero returns the zero vector.
pub fn extract_rank1(w: &HermitianMatrix, tau_rank: f64, gauge: usize) -> Result<Option<Vec<C64>>> {
    let s = eig_hermitian(w);
    let top = s.eigenvalues[0].abs();
    let min = *s.eigenvalues.last().expect("n >= 1");
    if min < -TAU_PSD * (1.0 + top) {
        return Err(Error::Validation(format!("matrix is not positive semidefinite (eigenvalue {min:.3e})")));
    }
    match solution_rank(&s, tau_rank) {
        0 => Ok(Some(vec![C64::new(0.0, 0.0); w.n()])),
        1 => {
            let x: Vec<C64> = s.eigenvectors[0].iter().map(|z| z * s.eigenvalues[0].sqrt()).collect();
            Ok(Some(crate::heuristic::gauge_fixed(&x, gauge)))
        }
        _ => Ok(None),
    }
}

fn active_sum(p: &QcqpProblem) -> (HermitianMatrix, f64) {
    let mut m = HermitianMatrix::zeros(p.n());
    let mut b = 0.0;
    for k in p.active() {
        let c = &p.constraints()[k];
        m.add_scaled_in_place(1.0, &c.matrix);
        b += c.upper.expect("active");
    }
    (m, b)
}

/// Largest `ε₀ ≤ EPS0_MAX` with `ρ_min[C + εΣC_k] ≥ ½ρ_min[C]` on `[0, ε₀]`:
/// a decade grid from the top, then bisection of the first failing decade.
/// The test function is concave in `ε`, so checking the endpoint suffices.
pub fn choose_eps0(p: &QcqpProblem) -> Result<f64> {
    if !p.c_definite() {
        return Err(Error::Contract("ε₀ requires a positive definite objective".into()));
    }
    let (sum, _) = active_sum(p);
    let half = 0.5 * p.c_min_eigenvalue();
    let ok = |eps: f64| min_eigenvalue(&p.objective().add_scaled(eps, &sum).expect("same n")) >= half;
    let mut hi = EPS0_MAX;
    if ok(hi) {
        return Ok(hi);
    }
    let mut lo = hi / 10.0;
    while !ok(lo) {
        hi = lo;
        lo /= 10.0;
        if lo < EPS0_MIN {
            return Err(Error::Contract(format!("no ε₀ ≥ {EPS0_MIN:e} keeps A(ε1) above half of ρ_min[C]")));
        }
    }
    for _ in 0..EPS0_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Relaxation with objective `tr(CW) − ε Σ_active [b_k − tr(C_k W)]`; the
/// feasible set is unchanged and the dual multipliers are shifted by `ε`.
pub fn build_eps_perturbation(p: &QcqpProblem, eps: f64, eps0: f64) -> Result<HermitianSdp> {
    if !(eps > 0.0 && eps <= eps0) {
        return Err(Error::Contract(format!("ε = {eps:e} outside (0, ε₀ = {eps0:e}]")));
    }
    let mut data = build_relaxation(p);
    let (sum, b) = active_sum(p);
    data.cost.add_scaled_in_place(eps, &sum);
    data.constant -= eps * b;
    for k in p.active() {
        data.lambda_offset[k] += eps;
    }
    Ok(data)
}

/// `Σ_active (b_k − tr(C_k W))`, each term clamped at zero.
pub fn slack_sum(p: &QcqpProblem, w: &HermitianMatrix) -> f64 {
    p.active()
        .iter()
        .map(|&k| {
            let c = &p.constraints()[k];
            (c.upper.expect("active") - crate::hermitian::trace_product_unchecked(&c.matrix, w)).max(0.0)
        })
        .sum()
}

/// `ε = min(ε₀/2, ζ / max(slack(W^{ε₀}), τ_abs))`, so that
/// `tr(CW^ε) − r* ≤ ε·slack(W^ε) ≤ ε·slack(W^{ε₀}) ≤ ζ`.
pub fn select_eps_for_zeta(p: &QcqpProblem, eps0: f64, sol_eps0: &SdpSolution, zeta: f64) -> f64 {
    let s = slack_sum(p, &sol_eps0.w);
    (eps0 / 2.0).min(zeta / s.max(TAU_ABS))
}

/// Gap tolerance for a stage perturbed by `ε`: the tie it breaks is of order
/// `ε`, so the solve must be resolved well below that.
fn eps_tolerances(base: &Tolerances, eps: f64, tau_rank: f64) -> Tolerances {
    Tolerances { gap: base.gap.min(1e-2 * eps * tau_rank).max(1e-13), ..*base }
}

struct Pipeline<'a> {
    cfg: &'a RecoveryConfig,
    stages: Vec<StageRecord>,
}

struct Rank1 {
    x: Vec<C64>,
}

impl Pipeline<'_> {
    fn record(&mut self, kind: StageKind, p: &QcqpProblem, sol: &SdpSolution, gap_tolerance: f64) -> Option<Rank1> {
        let s = eig_hermitian(&sol.w);
        let rank = solution_rank(&s, self.cfg.tau_rank);
        let rho_ratio = if s.eigenvalues[0] > 0.0 { s.eigenvalues.get(1).copied().unwrap_or(0.0).max(0.0) / s.eigenvalues[0] } else { 0.0 };
        self.stages.push(StageRecord {
            kind,
            status: sol.status,
            iterations: sol.iterations,
            r_star: sol.r_star,
            d_star: sol.d_star,
            objective_trace: crate::hermitian::trace_product_unchecked(p.objective(), &sol.w),
            slack_sum: slack_sum(p, &sol.w),
            rank,
            rho_ratio,
            gap_tolerance,
        });
        if !sol.status.is_usable() {
            return None;
        }
        extract_rank1(&sol.w, self.cfg.tau_rank, self.cfg.gauge).ok().flatten().map(|x| Rank1 { x })
    }

    /// ε-cascade on a problem with definite objective. `Ok(None)` when the
    /// perturbed optimum is still not rank one.
    fn eps_cascade(&mut self, p: &QcqpProblem, zeta: f64, delta: Option<f64>, eps0_out: &mut Option<f64>) -> std::result::Result<Option<Rank1>, String> {
        let eps0 = choose_eps0(p).map_err(|e| e.to_string())?;
        eps0_out.get_or_insert(eps0);
        let (sum, _) = active_sum(p);
        if sum.max_abs() <= 1e-14 * (1.0 + p.c_norm()) {
            // The perturbation only shifts the objective by a constant.
            return Ok(None);
        }
        let tol0 = eps_tolerances(&self.cfg.tol, eps0, self.cfg.tau_rank);
        let sol0 = solve_sdp(&build_eps_perturbation(p, eps0, eps0).expect("ε₀ in range"), &tol0);
        self.record(StageKind::Eps { eps: eps0, delta }, p, &sol0, tol0.gap);
        if !sol0.status.is_usable() {
            return Err(format!("eps({eps0:e}): {:?}", sol0.status));
        }
        let mut eps = select_eps_for_zeta(p, eps0, &sol0, zeta);
        for _ in 0..2 {
            let tol = eps_tolerances(&self.cfg.tol, eps, self.cfg.tau_rank);
            let sol = solve_sdp(&build_eps_perturbation(p, eps, eps0).expect("ε in range"), &tol);
            if let Some(r) = self.record(StageKind::Eps { eps, delta }, p, &sol, tol.gap) {
                return Ok(Some(r));
            }
            if !sol.status.is_usable() {
                return Err(format!("eps({eps:e}): {:?}", sol.status));
            }
            eps /= 2.0;
        }
        Ok(None)
    }

    /// Plain relaxation of `p` followed by the ε-cascade when needed.
    fn definite_pipeline(&mut self, p: &QcqpProblem, zeta: f64, delta: f64, eps0_out: &mut Option<f64>) -> std::result::Result<Option<Rank1>, String> {
        let sol = solve_sdp(&build_relaxation(p), &self.cfg.tol);
        if let Some(r) = self.record(StageKind::Delta { delta }, p, &sol, self.cfg.tol.gap) {
            return Ok(Some(r));
        }
        if !sol.status.is_usable() {
            return Err(format!("delta({delta:e}): {:?}", sol.status));
        }
        self.eps_cascade(p, zeta, Some(delta), eps0_out)
    }
}

/// Solves the relaxation and recovers a rank-one optimum, perturbing the
/// problem when the relaxation optimum is not unique.
pub fn solve_exact(p: &QcqpProblem, cfg: &RecoveryConfig) -> Result<RecoveryReport> {
    let mut condition_passed = None;
    if cfg.gauge >= p.n() {
        return Err(Error::Validation(format!("gauge index {} out of range", cfg.gauge)));
    }
    if !cfg.skip_condition_check {
        let report = check_condition1(p);
        condition_passed = Some(report.overall);
        if !report.overall {
            return Err(Error::ConditionFailed(if report.is_tree {
                format!("origin in the relative interior on edges {:?}", report.offending_edges)
            } else {
                "the problem graph is not a tree".into()
            }));
        }
    }
    let mut pipe = Pipeline { cfg, stages: Vec::new() };
    let plain = solve_sdp(&build_relaxation(p), &cfg.tol);
    let plain_rank1 = pipe.record(StageKind::Plain, p, &plain, cfg.tol.gap);
    let lower_bound = plain.r_star;
    let zeta = cfg.zeta.unwrap_or_else(|| default_zeta(lower_bound));
    let mut report = RecoveryReport {
        stages: Vec::new(),
        x_star: None,
        p_hat: None,
        lower_bound,
        zeta,
        achieved_gap: None,
        outcome: Outcome::Failed,
        polish_iterations: 0,
        max_violation: None,
        condition_passed,
        condition_overridden: cfg.skip_condition_check,
        eps0: None,
        delta0: None,
        failed_stage: None,
        relaxation: None,
    };
    if !plain.status.is_usable() {
        report.failed_stage = Some(format!("plain: {:?}", plain.status));
        report.stages = pipe.stages;
        report.relaxation = Some(plain);
        return Ok(report);
    }

    let mut eps0 = None;
    let found: std::result::Result<Option<(Rank1, Outcome)>, String> = if let Some(r) = plain_rank1 {
        Ok(Some((r, Outcome::ExactRank1)))
    } else if p.c_definite() {
        pipe.eps_cascade(p, zeta, None, &mut eps0).map(|o| o.map(|r| (r, Outcome::CascadeRank1)))
    } else {
        delta_cascade(&mut pipe, p, lower_bound, zeta, cfg, &mut eps0, &mut report.delta0)
    };
    report.eps0 = eps0;
    match found {
        Ok(Some((r, outcome))) => {
            let (x, iters) = polish(p, r.x, cfg);
            let viol = quadratic_violations(p, &x, cfg.tol_feas);
            report.max_violation = Some(
                p.constraints()
                    .iter()
                    .zip(&viol.per_constraint)
                    .filter_map(|(c, v)| c.upper.map(|b| v / (1.0 + b.abs())))
                    .fold(0.0, f64::max),
            );
            report.polish_iterations = iters;
            let p_hat = p.objective_value(&x);
            // ζ for the ε-cascade, 2ζ once the objective was shifted, plus the solver's gap.
            let allowance = if report.delta0.is_some() { 2.0 * zeta } else { zeta } + cfg.tol.gap * (1.0 + lower_bound.abs());
            if !viol.feasible {
                report.failed_stage = Some("polish".into());
                report.outcome = Outcome::HandedToHeuristic;
            } else if p_hat > lower_bound + allowance {
                // The matrix passed the rank test but its factor is not an optimum
                // of the original problem: the relaxation is not exact here.
                report.failed_stage = Some(format!("accuracy: p_hat − r* = {:.3e} exceeds {allowance:.3e}", p_hat - lower_bound));
                report.outcome = Outcome::HandedToHeuristic;
            } else {
                report.p_hat = Some(p_hat);
                report.achieved_gap = Some(p_hat - lower_bound);
                report.x_star = Some(x);
                report.outcome = outcome;
            }
        }
        Ok(None) => report.outcome = Outcome::HandedToHeuristic,
        Err(stage) => {
            report.failed_stage = Some(stage);
            report.outcome = Outcome::Failed;
        }
    }
    report.stages = pipe.stages;
    report.relaxation = Some(plain);
    Ok(report)
}

/// `P` with objective `C + δI`; definite for `δ > 0`, same constraints.
pub fn shift_objective(p: &QcqpProblem, delta: f64) -> Result<QcqpProblem> {
    p.with_objective(p.objective().add_scaled(delta, &HermitianMatrix::identity(p.n()))?)
}

/// Singular objective: shift by `δ₀I`, bound the cost of the shift with the
/// recovered value, then solve with the smaller shift `δ`.
fn delta_cascade(
    pipe: &mut Pipeline<'_>,
    p: &QcqpProblem,
    r_star: f64,
    zeta: f64,
    cfg: &RecoveryConfig,
    eps0: &mut Option<f64>,
    delta0_out: &mut Option<f64>,
) -> std::result::Result<Option<(Rank1, Outcome)>, String> {
    let delta0 = cfg.delta0_factor * (p.c_norm() + 1.0);
    *delta0_out = Some(delta0);
    let shifted = |d: f64| shift_objective(p, d).map_err(|e| e.to_string());
    let p0 = shifted(delta0)?;
    let Some(r0) = pipe.definite_pipeline(&p0, zeta, delta0, eps0)? else { return Ok(None) };
    let (x0, _) = polish(p, r0.x, cfg);
    // Value of the δ₀-shifted problem at a feasible point: an upper bound on its optimum.
    let p_hat0 = p0.objective_value(&x0);
    let delta = (delta0 / 2.0).min(zeta * delta0 / (p_hat0 - r_star).max(TAU_ABS));
    let pd = shifted(delta)?;
    Ok(pipe.definite_pipeline(&pd, zeta, delta, eps0)?.map(|r| (r, Outcome::CascadeRank1)))
}

/// Feasibility correction by linearized least-norm steps; returns the input
/// unchanged when it is already feasible or the correction fails.
fn polish(p: &QcqpProblem, x: Vec<C64>, cfg: &RecoveryConfig) -> (Vec<C64>, usize) {
    if !cfg.polish || quadratic_violations(p, &x, cfg.tol_feas).feasible {
        return (x, 0);
    }
    let hcfg = HeuristicConfig { max_outer_iters: 20, tol_feas: cfg.tol_feas, ..HeuristicConfig::default() };
    let r = restore_from(p, &x, 0.0, &hcfg, &Rectangular { n: p.n(), gauge: cfg.gauge });
    match (r.outcome, r.x_tilde) {
        (HeuristicOutcome::Feasible, Some(y)) => (y, r.iterations),
        _ => (x, r.iterations),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{BoundPair, Constraint};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn coupling(n: usize, i: usize, j: usize, z: C64) -> HermitianMatrix {
        let mut m = HermitianMatrix::zeros(n);
        m.set(i, j, z);
        m
    }

    fn two_sided(m: &HermitianMatrix, lo: f64, hi: f64, cons: &mut Vec<Constraint>, pairs: &mut Vec<BoundPair>) {
        let k = cons.len();
        cons.push(Constraint::new(m.clone(), hi, "hi"));
        cons.push(Constraint::new(m.scaled(-1.0), -lo, "lo"));
        pairs.push(BoundPair { lower: k + 1, upper: k });
    }

    /// `min |x₁|² + |x₂|²`, `1 ≤ |x_i|² ≤ 4`, `Re(x̄₁x₂) ≤ 0`: every phase
    /// difference in `[π/2, 3π/2]` is optimal.
    fn tie_instance() -> QcqpProblem {
        let (mut cons, mut pairs) = (Vec::new(), Vec::new());
        two_sided(&HermitianMatrix::unit(2, 0), 1.0, 4.0, &mut cons, &mut pairs);
        two_sided(&HermitianMatrix::unit(2, 1), 1.0, 4.0, &mut cons, &mut pairs);
        cons.push(Constraint::new(coupling(2, 0, 1, c(0.5, 0.0)), 0.0, "re"));
        QcqpProblem::new(HermitianMatrix::identity(2), cons).unwrap().with_pairs(pairs).unwrap()
    }

    #[test]
    fn extraction() {
        let w = HermitianMatrix::new(2, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)]).unwrap();
        let x = extract_rank1(&w, TAU_RANK, 0).unwrap().unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-12 && (x[1] - c(0.0, -1.0)).norm() < 1e-12);
        let z = extract_rank1(&HermitianMatrix::zeros(2), TAU_RANK, 0).unwrap().unwrap();
        assert!(z.iter().all(|v| v.norm() == 0.0));
        assert!(extract_rank1(&HermitianMatrix::identity(2), TAU_RANK, 0).unwrap().is_none());
        assert!(extract_rank1(&HermitianMatrix::from_diag(&[1.0, -1.0]), TAU_RANK, 0).is_err());
    }

    #[test]
    fn eps0_examples() {
        let none = QcqpProblem::new(HermitianMatrix::identity(2), vec![Constraint::new(HermitianMatrix::zeros(2), 1.0, "")]).unwrap();
        assert_eq!(choose_eps0(&none).unwrap(), EPS0_MAX);
        let neg = QcqpProblem::new(HermitianMatrix::identity(1), vec![Constraint::new(HermitianMatrix::identity(1).scaled(-1.0), -1.0, "")]).unwrap();
        assert!((choose_eps0(&neg).unwrap() - 0.5).abs() < 1e-5);
        let swap = coupling(2, 0, 1, c(1.0, 0.0));
        let two = QcqpProblem::new(HermitianMatrix::identity(2).scaled(2.0), vec![Constraint::new(swap, 1.0, "")]).unwrap();
        assert_eq!(choose_eps0(&two).unwrap(), EPS0_MAX);
        let singular = QcqpProblem::new(HermitianMatrix::from_diag(&[1.0, 0.0]), vec![]).unwrap();
        assert!(matches!(choose_eps0(&singular), Err(Error::Contract(_))));
    }

    #[test]
    fn eps_perturbation() {
        let (mut cons, mut pairs) = (Vec::new(), Vec::new());
        two_sided(&HermitianMatrix::identity(1), 1.0, 2.0, &mut cons, &mut pairs);
        let p = QcqpProblem::new(HermitianMatrix::identity(1), cons).unwrap().with_pairs(pairs).unwrap();
        let data = build_eps_perturbation(&p, 0.1, 0.5).unwrap();
        assert!(data.cost.get(0, 0).re == 1.0 && (data.constant + 0.1).abs() < 1e-15);
        let sol = solve_sdp(&data, &Tolerances::default());
        assert!((sol.w.get(0, 0).re - 1.0).abs() < 1e-6);
        let plain = solve_sdp(&build_relaxation(&p), &Tolerances::default());
        assert!(sol.r_star <= plain.r_star + 1e-7);
        assert!(build_eps_perturbation(&p, 0.0, 0.5).is_err());
        assert!(build_eps_perturbation(&p, 0.6, 0.5).is_err());
    }

    #[test]
    fn eps_for_zeta() {
        let p = QcqpProblem::new(HermitianMatrix::identity(1), vec![Constraint::new(HermitianMatrix::identity(1), 10.0, "")]).unwrap();
        let mut sol = solve_sdp(&build_relaxation(&p), &Tolerances::default());
        sol.w = HermitianMatrix::zeros(1);
        assert!((select_eps_for_zeta(&p, 1.0, &sol, 1e-4) - 1e-5).abs() < 1e-18);
        assert_eq!(select_eps_for_zeta(&p, 1.0, &sol, 10.0), 0.5);
        sol.w = HermitianMatrix::from_diag(&[10.0]);
        assert_eq!(select_eps_for_zeta(&p, 1.0, &sol, 1e-4), 0.5);
    }

    #[test]
    fn exact_at_first_stage() {
        // min |x₁|² + 2|x₂|² with |x_i|² ≥ 1 and Re(x̄₁x₂) ≥ 1: x = (1, 1).
        let cons = vec![
            Constraint::new(HermitianMatrix::unit(2, 0).scaled(-1.0), -1.0, ""),
            Constraint::new(HermitianMatrix::unit(2, 1).scaled(-1.0), -1.0, ""),
            Constraint::new(coupling(2, 0, 1, c(-0.5, 0.0)), -1.0, ""),
        ];
        let p = QcqpProblem::new(HermitianMatrix::from_diag(&[1.0, 2.0]), cons).unwrap();
        let r = solve_exact(&p, &RecoveryConfig::default()).unwrap();
        assert_eq!(r.outcome, Outcome::ExactRank1);
        assert!((r.p_hat.unwrap() - 3.0).abs() < 1e-6, "{:?}", r.p_hat);
        let x = r.x_star.unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-4 && (x[1] - c(1.0, 0.0)).norm() < 1e-4);
        assert_eq!(r.stages.len(), 1);
    }

    #[test]
    fn cascade_breaks_tie() {
        let p = tie_instance();
        let cfg = RecoveryConfig { zeta: Some(1e-4), ..RecoveryConfig::default() };
        let r = solve_exact(&p, &cfg).unwrap();
        assert_eq!(r.stages[0].rank, 2);
        assert_eq!(r.outcome, Outcome::CascadeRank1);
        assert!(r.achieved_gap.unwrap() <= 1e-4);
        assert!((r.lower_bound - 2.0).abs() < 1e-6);
    }

    #[test]
    fn zero_objective_uses_delta_shift() {
        let (mut cons, mut pairs) = (Vec::new(), Vec::new());
        two_sided(&HermitianMatrix::unit(2, 0), 1.0, 2.0, &mut cons, &mut pairs);
        two_sided(&HermitianMatrix::unit(2, 1), 1.0, 2.0, &mut cons, &mut pairs);
        cons.push(Constraint::new(coupling(2, 0, 1, c(-0.5, 0.0)), -0.5, "re"));
        let p = QcqpProblem::new(HermitianMatrix::zeros(2), cons).unwrap().with_pairs(pairs).unwrap();
        let r = solve_exact(&p, &RecoveryConfig::default()).unwrap();
        assert_eq!(r.outcome, Outcome::CascadeRank1);
        assert!(r.p_hat.unwrap().abs() < 1e-12);
        assert!(r.delta0.is_some());
    }

    #[test]
    fn condition_gate() {
        // Points {0, 1, −1} on the edge: origin in the relative interior.
        let cons = vec![
            Constraint::new(coupling(2, 0, 1, c(1.0, 0.0)), 1.0, ""),
            Constraint::new(coupling(2, 0, 1, c(-1.0, 0.0)), 1.0, ""),
            Constraint::new(HermitianMatrix::identity(2), 4.0, ""),
        ];
        let p = QcqpProblem::new(HermitianMatrix::identity(2), cons).unwrap();
        assert!(matches!(solve_exact(&p, &RecoveryConfig::default()), Err(Error::ConditionFailed(_))));
        let r = solve_exact(&p, &RecoveryConfig { skip_condition_check: true, ..RecoveryConfig::default() }).unwrap();
        assert!(r.condition_overridden);
    }
}
