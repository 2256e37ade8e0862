use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::graph::ProblemGraph;
use crate::hermitian::C64;

/// All quantities are per-unit on [`Base`].
#[derive(Clone, Debug, PartialEq)]
pub struct Bus {
    /// External identifier, as it appears in case files.
    pub id: usize,
    pub p_demand: f64,
    pub q_demand: f64,
    pub p_gen_min: f64,
    pub p_gen_max: f64,
    pub q_gen_min: f64,
    pub q_gen_max: f64,
    /// Bounds on `|V|²`.
    pub w_min: f64,
    pub w_max: f64,
    pub shunt: C64,
}

impl Bus {
    /// Injection bounds `P̲ = P̲ᴳ − Pᴰ`, `P̄ = P̄ᴳ − Pᴰ`.
    pub fn p_bounds(&self) -> (f64, f64) {
        (self.p_gen_min - self.p_demand, self.p_gen_max - self.p_demand)
    }

    pub fn q_bounds(&self) -> (f64, f64) {
        (self.q_gen_min - self.q_demand, self.q_gen_max - self.q_demand)
    }
}

/// Series admittance `y = g − i·b` between buses `from` and `to` (0-based).
#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    pub g: f64,
    pub b: f64,
    pub f_max: f64,
    pub l_max: f64,
}

impl Line {
    pub fn admittance(&self) -> C64 {
        C64::new(self.g, -self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Base {
    #[serde(rename = "power_MW")]
    pub power_mw: f64,
    #[serde(rename = "voltage_kV_LL")]
    pub voltage_kv_ll: f64,
}

impl Base {
    /// `V² / S` in ohms.
    pub fn impedance_ohm(&self) -> f64 {
        self.voltage_kv_ll * self.voltage_kv_ll / self.power_mw
    }
}

impl Default for Base {
    fn default() -> Self {
        Self { power_mw: 1.0, voltage_kv_ll: 12.47 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerNetwork {
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub base: Base,
    /// Angle reference, 0-based.
    pub gauge_bus: usize,
}

impl PowerNetwork {
    /// Validates bus and line data and requires a radial topology.
    pub fn new(buses: Vec<Bus>, lines: Vec<Line>, base: Base) -> Result<Self> {
        let n = buses.len();
        if n == 0 {
            return Err(validation("network has no buses"));
        }
        for (k, b) in buses.iter().enumerate() {
            if !(b.w_min > 0.0 && b.w_min <= b.w_max) {
                return Err(validation(format!("bus {}: need 0 < w_min <= w_max", b.id)));
            }
            if b.p_gen_min > b.p_gen_max || b.q_gen_min > b.q_gen_max {
                return Err(validation(format!("bus {}: generation minimum exceeds maximum", b.id)));
            }
            if b.p_gen_min == f64::INFINITY || b.q_gen_min == f64::INFINITY || b.p_gen_max == f64::NEG_INFINITY || b.q_gen_max == f64::NEG_INFINITY {
                return Err(validation(format!("bus {}: generation bound on the wrong side of infinity", b.id)));
            }
            if !b.p_demand.is_finite() || !b.q_demand.is_finite() || !b.shunt.re.is_finite() || !b.shunt.im.is_finite() || !b.w_min.is_finite() {
                return Err(validation(format!("bus {}: non-finite demand, shunt or voltage bound", b.id)));
            }
            if buses[..k].iter().any(|o| o.id == b.id) {
                return Err(validation(format!("duplicate bus id {}", b.id)));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for l in &lines {
            if l.from >= n || l.to >= n || l.from == l.to {
                return Err(validation(format!("line ({}, {}) has invalid endpoints", l.from, l.to)));
            }
            if !(l.g > 0.0 && l.b > 0.0 && l.g.is_finite() && l.b.is_finite()) {
                return Err(validation(format!(
                    "line {}-{}: need g > 0 and b > 0 (resistive and inductive)",
                    buses[l.from].id, buses[l.to].id
                )));
            }
            if l.f_max.is_nan() || l.l_max.is_nan() {
                return Err(validation("line limit is NaN"));
            }
            if !seen.insert((l.from.min(l.to), l.from.max(l.to))) {
                return Err(validation(format!("duplicate line between buses {} and {}", buses[l.from].id, buses[l.to].id)));
            }
        }
        let net = Self { buses, lines, base, gauge_bus: 0 };
        if !net.graph().is_tree() {
            return Err(validation("network is non-radial: the line graph must be a tree"));
        }
        Ok(net)
    }

    pub fn n(&self) -> usize {
        self.buses.len()
    }

    pub fn graph(&self) -> ProblemGraph {
        ProblemGraph::from_edges(self.n(), self.lines.iter().map(|l| (l.from, l.to)))
    }

    pub fn line_between(&self, i: usize, j: usize) -> Option<&Line> {
        self.lines.iter().find(|l| (l.from == i && l.to == j) || (l.from == j && l.to == i))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Voltage,
    Loss,
    Cost,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    /// Per-bus `c_k ≥ 0`, used when `kind = cost`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cost: Vec<f64>,
}

impl ObjectiveSpec {
    pub fn voltage() -> Self {
        Self { kind: ObjectiveKind::Voltage, cost: Vec::new() }
    }

    pub fn loss() -> Self {
        Self { kind: ObjectiveKind::Loss, cost: Vec::new() }
    }

    pub fn cost(c: Vec<f64>) -> Self {
        Self { kind: ObjectiveKind::Cost, cost: c }
    }
}
