//! End-to-end OPF solve and the map from voltages to physical quantities.

use serde::Serialize;

use super::assemble::{apply_pattern, assemble_opf, check_opf_condition, OpfConditionReport, Pattern};
use super::matrices::{build_admittance, build_injection_matrices, flow_matrices};
use super::network::{ObjectiveSpec, PowerNetwork};
use crate::error::Result;
use crate::heuristic::{eta, initial_point, restore_from, HeuristicConfig, HeuristicOutcome, HeuristicResult, Polar};
use crate::hermitian::C64;
use crate::recovery::{solve_exact, Outcome, RecoveryConfig, RecoveryReport, StageKind};

#[derive(Clone, Copy, Debug)]
pub struct OpfSolveConfig {
    pub recovery: RecoveryConfig,
    pub heuristic: HeuristicConfig,
    pub pattern: Pattern,
    /// Let the heuristic move `|V|` at the gauge bus instead of pinning it
    /// to its relaxation value.
    pub reoptimize_gauge_magnitude: bool,
}

impl Default for OpfSolveConfig {
    fn default() -> Self {
        Self {
            recovery: RecoveryConfig { skip_condition_check: true, ..RecoveryConfig::default() },
            heuristic: HeuristicConfig::default(),
            pattern: Pattern::None,
            reoptimize_gauge_magnitude: false,
        }
    }
}

/// Quantities implied by a voltage vector, per-unit.
#[derive(Clone, Debug, Serialize)]
pub struct PhysicalState {
    pub v: Vec<C64>,
    /// `|V_k|²`.
    pub w: Vec<f64>,
    /// Net injections `P_k + iQ_k = V_k·conj((YV)_k)`.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Per line, in network order: power sent into the line at each end and its loss.
    pub p_from: Vec<f64>,
    pub p_to: Vec<f64>,
    pub loss: Vec<f64>,
    /// Largest disagreement between the quadratic forms and the direct
    /// circuit computation `I = YV`.
    pub consistency: f64,
}

/// Evaluates injections and flows through the constraint matrices and checks
/// them against `S = V∘conj(YV)` and `P_ij = Re[V_i·conj(y_ij(V_i − V_j))]`.
pub fn recover_physical(x: &[C64], net: &PowerNetwork) -> Result<PhysicalState> {
    let n = net.n();
    if x.len() != n {
        return Err(crate::Error::Dimension { expected: n, found: x.len() });
    }
    let y = build_admittance(net);
    let mut consistency: f64 = 0.0;
    let (mut p, mut q) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for k in 0..n {
        let (phi, psi, _) = build_injection_matrices(&y, k);
        let (pk, qk) = (phi.quad_form(x), psi.quad_form(x));
        let current: C64 = (0..n).map(|j| y[(k, j)] * x[j]).sum();
        let s = x[k] * current.conj();
        consistency = consistency.max((pk - s.re).abs()).max((qk - s.im).abs());
        p.push(pk);
        q.push(qk);
    }
    let (mut p_from, mut p_to, mut loss) = (Vec::new(), Vec::new(), Vec::new());
    for l in &net.lines {
        let (mij, mji, t) = flow_matrices(n, l.from, l.to, l.g, l.b);
        let (a, b, c) = (mij.quad_form(x), mji.quad_form(x), t.quad_form(x));
        let y_l = l.admittance();
        let direct = |i: usize, j: usize| (x[i] * (y_l * (x[i] - x[j])).conj()).re;
        consistency = consistency
            .max((a - direct(l.from, l.to)).abs())
            .max((b - direct(l.to, l.from)).abs())
            .max((c - a - b).abs());
        p_from.push(a);
        p_to.push(b);
        loss.push(c);
    }
    Ok(PhysicalState { v: x.to_vec(), w: x.iter().map(|v| v.norm_sqr()).collect(), p, q, p_from, p_to, loss, consistency })
}

#[derive(Clone, Debug, Serialize)]
pub struct BusSolution {
    pub id: usize,
    pub v_pu: f64,
    pub theta_rad: f64,
    pub p_gen_pu: f64,
    pub q_gen_pu: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LineSolution {
    pub from: usize,
    pub to: usize,
    pub p_from_pu: f64,
    pub p_to_pu: f64,
    pub loss_pu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpfStatus {
    Exact,
    Cascade,
    Heuristic,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct OpfSummary {
    pub status: OpfStatus,
    pub objective: Option<f64>,
    /// Relaxation lower bound `r*`.
    pub r_star: f64,
    pub eta: Option<f64>,
    /// Numeric rank of the plain relaxation optimum.
    pub rank: usize,
    /// `ρ₂/ρ₁` of the plain relaxation optimum.
    pub rho_ratio: f64,
    /// Outer iterations of the feasibility heuristic, zero when it did not run.
    pub heuristic_iterations: usize,
    /// Largest absolute constraint violation at the returned voltages.
    pub max_violation_pu: Option<f64>,
    pub stage_trace: Vec<StageKind>,
}

#[derive(Clone, Debug, Serialize)]
pub struct OpfSolution {
    pub pattern: Pattern,
    pub base: super::network::Base,
    pub buses: Vec<BusSolution>,
    pub lines: Vec<LineSolution>,
    pub summary: OpfSummary,
    pub condition: OpfConditionReport,
    pub recovery: RecoveryReport,
    pub heuristic: Option<HeuristicResult>,
}

/// Assembles the QCQP, runs exact recovery and, when the relaxation is not
/// rank one, the feasibility heuristic in polar voltage coordinates.
pub fn solve_opf(net: &PowerNetwork, spec: &ObjectiveSpec, cfg: &OpfSolveConfig) -> Result<OpfSolution> {
    cfg.heuristic.validate()?;
    let net = apply_pattern(net, cfg.pattern);
    let condition = check_opf_condition(&net, spec)?;
    let opf = assemble_opf(&net, spec)?;
    let p = &opf.qcqp;
    let gauge = net.gauge_bus;
    let rcfg = RecoveryConfig { gauge, ..cfg.recovery };
    let recovery = solve_exact(p, &rcfg)?;
    let r_star = recovery.lower_bound;

    let mut heuristic = None;
    let (status, x) = match recovery.outcome {
        Outcome::ExactRank1 => (OpfStatus::Exact, recovery.x_star.clone()),
        Outcome::CascadeRank1 => (OpfStatus::Cascade, recovery.x_star.clone()),
        Outcome::HandedToHeuristic => match &recovery.relaxation {
            Some(rel) => {
                let x0 = initial_point(&rel.w, p.objective(), cfg.heuristic.start_mode, gauge);
                let pin = (!cfg.reoptimize_gauge_magnitude).then(|| rel.w.get(gauge, gauge).re.max(0.0).sqrt());
                let r = restore_from(p, &x0, r_star, &cfg.heuristic, &Polar::new(p.n(), gauge, pin));
                let found = (r.outcome == HeuristicOutcome::Feasible).then(|| r.x_tilde.clone()).flatten();
                heuristic = Some(r);
                match found {
                    Some(x) => (OpfStatus::Heuristic, Some(x)),
                    None => (OpfStatus::Failed, None),
                }
            }
            None => (OpfStatus::Failed, None),
        },
        Outcome::Failed => (OpfStatus::Failed, None),
    };

    let plain = &recovery.stages[0];
    let mut summary = OpfSummary {
        status,
        objective: None,
        r_star,
        eta: None,
        rank: plain.rank,
        rho_ratio: plain.rho_ratio,
        heuristic_iterations: heuristic.as_ref().map_or(0, |h| h.iterations),
        max_violation_pu: None,
        stage_trace: recovery.stages.iter().map(|s| s.kind).collect(),
    };
    let (mut buses, mut lines) = (Vec::new(), Vec::new());
    if let Some(x) = &x {
        let obj = p.objective_value(x);
        summary.objective = Some(obj);
        summary.eta = eta(obj, r_star);
        summary.max_violation_pu = Some(
            p.constraints()
                .iter()
                .filter_map(|c| c.upper.map(|b| (c.matrix.quad_form(x) - b).max(0.0)))
                .fold(0.0, f64::max),
        );
        let phys = recover_physical(x, &net)?;
        for (k, b) in net.buses.iter().enumerate() {
            buses.push(BusSolution {
                id: b.id,
                v_pu: x[k].norm(),
                theta_rad: x[k].arg(),
                p_gen_pu: phys.p[k] + b.p_demand,
                q_gen_pu: phys.q[k] + b.q_demand,
            });
        }
        for (t, l) in net.lines.iter().enumerate() {
            lines.push(LineSolution {
                from: net.buses[l.from].id,
                to: net.buses[l.to].id,
                p_from_pu: phys.p_from[t],
                p_to_pu: phys.p_to[t],
                loss_pu: phys.loss[t],
            });
        }
    }
    Ok(OpfSolution { pattern: cfg.pattern, base: net.base, buses, lines, summary, condition, recovery, heuristic })
}
