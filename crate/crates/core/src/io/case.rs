//! JSON case format in physical units, converted to per-unit at ingestion.

use serde::{Deserialize, Serialize};

use super::parse_json;
use crate::error::{validation, Result};
use crate::hermitian::C64;
use crate::opf::{Base, Bus, Line, ObjectiveSpec, PowerNetwork};

/// Bounds written as `[min, max]`; `null` stands for the infinite side.
pub type Interval = [Option<f64>; 2];

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    #[serde(default)]
    pub base: Base,
    pub buses: Vec<BusRecord>,
    pub lines: Vec<LineRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSpec>,
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BusRecord {
    pub id: usize,
    #[serde(default)]
    pub p_demand_kW: f64,
    #[serde(default)]
    pub q_demand_kVAr: f64,
    /// Real generation limits in kW.
    #[serde(default = "unbounded")]
    pub p_gen: Interval,
    /// Reactive generation limits in kVAr.
    #[serde(default = "unbounded")]
    pub q_gen: Interval,
    pub v_bounds_pu: [f64; 2],
    /// Shunt admittance `[g, b]` in per-unit; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt_pu: Option<[f64; 2]>,
}

fn unbounded() -> Interval {
    [None, None]
}

#[allow(non_snake_case)]
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineRecord {
    /// Bus ids.
    pub from: usize,
    pub to: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_ohm_per_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_ohm_per_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b_pu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_max_MW: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_max_MW: Option<f64>,
    /// Accepted only to reject it with a clear message.
    #[serde(default, skip_serializing)]
    pub s_max_MVA: Option<serde_json::Value>,
}

fn lower(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NEG_INFINITY)
}

fn upper(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::INFINITY)
}

fn finite_or_none(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl CaseFile {
    /// Converts to a per-unit network. The first listed bus is the gauge bus.
    pub fn to_network(&self) -> Result<PowerNetwork> {
        let base = self.base;
        if !(base.power_mw > 0.0 && base.voltage_kv_ll > 0.0 && base.power_mw.is_finite() && base.voltage_kv_ll.is_finite()) {
            return Err(validation("base power and voltage must be positive"));
        }
        let kw = 1000.0 * base.power_mw;
        let z_base = base.impedance_ohm();
        let mut buses = Vec::with_capacity(self.buses.len());
        for b in &self.buses {
            let [v_lo, v_hi] = b.v_bounds_pu;
            if !(v_lo > 0.0) {
                return Err(validation(format!("bus {}: voltage lower bound must be positive", b.id)));
            }
            let shunt = b.shunt_pu.map_or(C64::new(0.0, 0.0), |[g, s]| C64::new(g, s));
            buses.push(Bus {
                id: b.id,
                p_demand: b.p_demand_kW / kw,
                q_demand: b.q_demand_kVAr / kw,
                p_gen_min: lower(b.p_gen[0]) / kw,
                p_gen_max: upper(b.p_gen[1]) / kw,
                q_gen_min: lower(b.q_gen[0]) / kw,
                q_gen_max: upper(b.q_gen[1]) / kw,
                w_min: v_lo * v_lo,
                w_max: v_hi * v_hi,
                shunt,
            });
        }
        let index = |id: usize| {
            self.buses
                .iter()
                .position(|b| b.id == id)
                .ok_or_else(|| validation(format!("line refers to unknown bus {id}")))
        };
        let mut lines = Vec::with_capacity(self.lines.len());
        for l in &self.lines {
            if l.s_max_MVA.is_some() {
                return Err(validation(format!(
                    "line {}-{}: apparent-power limits are not supported; use f_max_MW or l_max_MW",
                    l.from, l.to
                )));
            }
            let (g, b) = match (l.r_ohm_per_km, l.x_ohm_per_km, l.length_km, l.g_pu, l.b_pu) {
                (Some(r), Some(x), Some(len), None, None) => {
                    let (r, x) = (r * len / z_base, x * len / z_base);
                    let m = r * r + x * x;
                    (r / m, x / m)
                }
                (None, None, None, Some(g), Some(b)) => (g, b),
                _ => {
                    return Err(validation(format!(
                        "line {}-{}: give either r_ohm_per_km, x_ohm_per_km and length_km, or g_pu and b_pu",
                        l.from, l.to
                    )))
                }
            };
            lines.push(Line {
                from: index(l.from)?,
                to: index(l.to)?,
                g,
                b,
                f_max: upper(l.f_max_MW) / base.power_mw,
                l_max: upper(l.l_max_MW) / base.power_mw,
            });
        }
        PowerNetwork::new(buses, lines, base)
    }
}

pub fn parse_case_str(text: &str) -> Result<CaseFile> {
    parse_json(text)
}

/// Parses and converts a case document.
pub fn parse_case(text: &str) -> Result<(PowerNetwork, Option<ObjectiveSpec>)> {
    let case = parse_case_str(text)?;
    Ok((case.to_network()?, case.objective))
}

/// Writes `net` back in physical units, with lines given by `g_pu` and `b_pu`.
pub fn emit_case(net: &PowerNetwork, objective: Option<&ObjectiveSpec>) -> CaseFile {
    let kw = 1000.0 * net.base.power_mw;
    let buses = net
        .buses
        .iter()
        .map(|b| BusRecord {
            id: b.id,
            p_demand_kW: b.p_demand * kw,
            q_demand_kVAr: b.q_demand * kw,
            p_gen: [finite_or_none(b.p_gen_min * kw), finite_or_none(b.p_gen_max * kw)],
            q_gen: [finite_or_none(b.q_gen_min * kw), finite_or_none(b.q_gen_max * kw)],
            v_bounds_pu: [b.w_min.sqrt(), b.w_max.sqrt()],
            shunt_pu: (b.shunt != C64::new(0.0, 0.0)).then_some([b.shunt.re, b.shunt.im]),
        })
        .collect();
    let lines = net
        .lines
        .iter()
        .map(|l| LineRecord {
            from: net.buses[l.from].id,
            to: net.buses[l.to].id,
            g_pu: Some(l.g),
            b_pu: Some(l.b),
            f_max_MW: finite_or_none(l.f_max * net.base.power_mw),
            l_max_MW: finite_or_none(l.l_max * net.base.power_mw),
            ..LineRecord::default()
        })
        .collect();
    CaseFile { base: net.base, buses, lines, objective: objective.cloned() }
}
