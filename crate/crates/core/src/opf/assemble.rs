//! OPF as a QCQP over bus voltages, constraint patterns, and the exactness check.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::matrices::{build_admittance, build_injection_matrices, build_objective, flow_matrices};
use super::network::{ObjectiveSpec, PowerNetwork};
use crate::condition::{check_condition1, ConditionReport};
use crate::error::{validation, Result};
use crate::hermitian::C64;
use crate::problem::{BoundPair, Constraint, QcqpProblem};

/// Index of each bus's six constraints, in order
/// `P̄, −P̲, Q̄, −Q̲, W̄, −W̲`.
pub const BUS_ROWS: usize = 6;
/// Per line: `M^{ij} ≤ F̄`, `M^{ji} ≤ F̄`, `T ≤ L̄`.
pub const LINE_ROWS: usize = 3;

#[derive(Clone, Debug)]
pub struct OpfProblem {
    pub qcqp: QcqpProblem,
    pub y: DMatrix<C64>,
    pub objective_definite: bool,
}

impl OpfProblem {
    pub fn bus_row(&self, bus: usize, which: usize) -> usize {
        bus * BUS_ROWS + which
    }

    pub fn line_row(&self, n_buses: usize, line: usize, which: usize) -> usize {
        n_buses * BUS_ROWS + line * LINE_ROWS + which
    }
}

fn neg(v: f64) -> f64 {
    -v
}

/// Builds the QCQP. Infinite bounds become removed constraints; two-sided
/// bounds are declared as bound pairs.
pub fn assemble_opf(net: &PowerNetwork, spec: &ObjectiveSpec) -> Result<OpfProblem> {
    let obj = build_objective(net, spec)?;
    if !obj.psd {
        return Err(validation(format!(
            "objective matrix is not positive semidefinite (minimum eigenvalue {:.3e}); \
             the relaxation requires a PSD objective",
            obj.min_eigenvalue
        )));
    }
    let n = net.n();
    let y = build_admittance(net);
    let mut cons = Vec::with_capacity(BUS_ROWS * n + LINE_ROWS * net.lines.len());
    let mut pairs = Vec::new();
    for (k, bus) in net.buses.iter().enumerate() {
        let (phi, psi, j) = build_injection_matrices(&y, k);
        let (p_lo, p_hi) = bus.p_bounds();
        let (q_lo, q_hi) = bus.q_bounds();
        let id = bus.id;
        let base = cons.len();
        cons.push(Constraint::new(phi.clone(), p_hi, format!("P_max@{id}")));
        cons.push(Constraint::new(phi.scaled(-1.0), neg(p_lo), format!("P_min@{id}")));
        cons.push(Constraint::new(psi.clone(), q_hi, format!("Q_max@{id}")));
        cons.push(Constraint::new(psi.scaled(-1.0), neg(q_lo), format!("Q_min@{id}")));
        cons.push(Constraint::new(j.clone(), bus.w_max, format!("W_max@{id}")));
        cons.push(Constraint::new(j.scaled(-1.0), neg(bus.w_min), format!("W_min@{id}")));
        for s in 0..3 {
            pairs.push(BoundPair { lower: base + 2 * s + 1, upper: base + 2 * s });
        }
    }
    for l in &net.lines {
        let (mij, mji, t) = flow_matrices(n, l.from, l.to, l.g, l.b);
        let (a, b) = (net.buses[l.from].id, net.buses[l.to].id);
        cons.push(Constraint::new(mij, l.f_max, format!("F_max@{a}->{b}")));
        cons.push(Constraint::new(mji, l.f_max, format!("F_max@{b}->{a}")));
        cons.push(Constraint::new(t, l.l_max, format!("L_max@{a}-{b}")));
    }
    let qcqp = QcqpProblem::new(obj.c, cons)?.with_pairs(pairs)?;
    Ok(OpfProblem { qcqp, y, objective_definite: obj.definite })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    None,
    /// No lower bounds on real or reactive injections anywhere.
    Oversatisfaction,
    /// No real-power lower bounds; reactive lower bounds removed at buses of
    /// odd depth from the gauge bus.
    Example1,
    /// With every line oriented away from the gauge bus (`i` parent, `j`
    /// child): `P̄_i = Q̄_j = F̄ = L̄ = +∞` and `Q̲_i = −∞`.
    Example3,
}

impl Pattern {
    pub const ALL: [Pattern; 3] = [Pattern::Oversatisfaction, Pattern::Example1, Pattern::Example3];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::None => "none",
            Pattern::Oversatisfaction => "oversatisfaction",
            Pattern::Example1 => "example1",
            Pattern::Example3 => "example3",
        }
    }
}

impl std::str::FromStr for Pattern {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Pattern::None),
            "oversatisfaction" => Ok(Pattern::Oversatisfaction),
            "example1" => Ok(Pattern::Example1),
            "example3" => Ok(Pattern::Example3),
            other => Err(validation(format!("unknown pattern '{other}'"))),
        }
    }
}

/// Returns a copy of `net` with the pattern's bounds removed.
pub fn apply_pattern(net: &PowerNetwork, pattern: Pattern) -> PowerNetwork {
    let mut out = net.clone();
    let depth = net.graph().depths(net.gauge_bus);
    match pattern {
        Pattern::None => {}
        Pattern::Oversatisfaction => {
            for b in &mut out.buses {
                b.p_gen_min = f64::NEG_INFINITY;
                b.q_gen_min = f64::NEG_INFINITY;
            }
        }
        Pattern::Example1 => {
            for (k, b) in out.buses.iter_mut().enumerate() {
                b.p_gen_min = f64::NEG_INFINITY;
                if depth[k] % 2 == 1 {
                    b.q_gen_min = f64::NEG_INFINITY;
                }
            }
        }
        Pattern::Example3 => {
            for l in &mut out.lines {
                l.f_max = f64::INFINITY;
                l.l_max = f64::INFINITY;
            }
            for l in &net.lines {
                let (parent, child) = if depth[l.from] < depth[l.to] { (l.from, l.to) } else { (l.to, l.from) };
                out.buses[parent].p_gen_max = f64::INFINITY;
                out.buses[parent].q_gen_min = f64::NEG_INFINITY;
                out.buses[child].q_gen_max = f64::INFINITY;
            }
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct PatternSuggestion {
    pub pattern: Pattern,
    /// Offending edges (bus ids) that pass once the pattern is applied.
    pub fixes: Vec<(usize, usize)>,
    /// Whether the whole network passes under the pattern.
    pub passes: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OpfConditionReport {
    #[serde(flatten)]
    pub report: ConditionReport,
    /// `offending_edges` as bus ids.
    pub offending_lines: Vec<(usize, usize)>,
    /// Lines with no nonzero coupling entry among the active matrices.
    pub vanished_lines: Vec<(usize, usize)>,
    pub suggestions: Vec<PatternSuggestion>,
}

/// Runs the exactness check on the assembled problem and, for failing edges,
/// reports which named patterns would make them pass.
pub fn check_opf_condition(net: &PowerNetwork, spec: &ObjectiveSpec) -> Result<OpfConditionReport> {
    let opf = assemble_opf(net, spec)?;
    let report = check_condition1(&opf.qcqp);
    let ids = |(i, j): (usize, usize)| (net.buses[i].id, net.buses[j].id);
    let graph = opf.qcqp.graph(crate::graph::TAU_ZERO);
    let vanished_lines = net
        .lines
        .iter()
        .map(|l| (l.from.min(l.to), l.from.max(l.to)))
        .filter(|e| !graph.edges.contains(e))
        .map(ids)
        .collect();
    let offending_lines = report.offending_edges.iter().map(|&e| ids(e)).collect();
    let mut suggestions = Vec::new();
    if !report.offending_edges.is_empty() {
        for pattern in Pattern::ALL {
            let patched = check_condition1(&assemble_opf(&apply_pattern(net, pattern), spec)?.qcqp);
            let fixes: Vec<(usize, usize)> = report
                .offending_edges
                .iter()
                .filter(|e| !patched.offending_edges.contains(e))
                .map(|&e| ids(e))
                .collect();
            if !fixes.is_empty() {
                suggestions.push(PatternSuggestion { pattern, fixes, passes: patched.overall });
            }
        }
    }
    Ok(OpfConditionReport { report, offending_lines, vanished_lines, suggestions })
}
