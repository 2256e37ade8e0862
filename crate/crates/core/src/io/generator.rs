//! Random radial distribution circuits with rural-feeder parameters.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::case::{BusRecord, CaseFile, LineRecord};
use crate::error::{validation, Result};
use crate::opf::{Base, ObjectiveSpec};

pub const R_OHM_PER_KM: f64 = 0.33;
pub const X_OHM_PER_KM: f64 = 0.38;
pub const LENGTH_KM: (f64, f64) = (0.2, 0.3);
pub const V_BOUNDS_PU: [f64; 2] = [0.95, 1.05];
pub const P_DEMAND_KW: (f64, f64) = (0.0, 4.5);
pub const Q_OVER_P: (f64, f64) = (0.2, 0.3);
pub const PV_CAPACITY_KW: (f64, f64) = (0.0, 2.0);
pub const Q_GEN_RATIO: f64 = 0.3;
pub const PV_FRACTION: (f64, f64) = (0.15, 0.60);
/// Substation real-power capacity per bus.
pub const SUBSTATION_KW_PER_BUS: f64 = 5.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeModel {
    /// Each new bus attaches to a uniformly chosen earlier bus.
    #[default]
    Attachment,
    /// Uniform over labelled trees via a random Prüfer sequence.
    Pruefer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomCircuitParams {
    pub n: usize,
    /// Fraction of non-substation buses with PV; drawn from its range when absent.
    pub pv_fraction: Option<f64>,
    pub seed: u64,
    #[serde(default)]
    pub tree: TreeModel,
}

impl RandomCircuitParams {
    pub fn new(n: usize, seed: u64) -> Self {
        Self { n, pv_fraction: None, seed, tree: TreeModel::Attachment }
    }
}

fn edges(n: usize, model: TreeModel, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    match model {
        TreeModel::Attachment => (1..n).map(|k| (rng.gen_range(0..k), k)).collect(),
        TreeModel::Pruefer => {
            if n == 2 {
                return vec![(0, 1)];
            }
            let seq: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
            let mut degree = vec![1usize; n];
            for &s in &seq {
                degree[s] += 1;
            }
            let mut out = Vec::with_capacity(n - 1);
            for &s in &seq {
                let leaf = (0..n).find(|&v| degree[v] == 1).expect("a leaf exists");
                out.push((s.min(leaf), s.max(leaf)));
                degree[leaf] -= 1;
                degree[s] -= 1;
            }
            let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
            out.push((rest[0], rest[1]));
            out
        }
    }
}

/// Draws a radial circuit; bus 1 is the substation. Deterministic in `seed`.
pub fn gen_random_radial(params: &RandomCircuitParams) -> Result<CaseFile> {
    let n = params.n;
    if n < 2 {
        return Err(validation("random circuits need at least 2 buses"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let frac = match params.pv_fraction {
        Some(f) if (PV_FRACTION.0..=PV_FRACTION.1).contains(&f) => f,
        Some(f) => {
            return Err(validation(format!(
                "pv_fraction {f} outside [{}, {}]",
                PV_FRACTION.0, PV_FRACTION.1
            )))
        }
        None => rng.gen_range(PV_FRACTION.0..=PV_FRACTION.1),
    };
    let tree = edges(n, params.tree, &mut rng);
    let mut others: Vec<usize> = (1..n).collect();
    others.shuffle(&mut rng);
    let n_pv = (frac * (n - 1) as f64).round() as usize;
    let mut is_pv = vec![false; n];
    for &k in &others[..n_pv] {
        is_pv[k] = true;
    }
    let s_cap = SUBSTATION_KW_PER_BUS * n as f64;
    let mut buses = vec![BusRecord {
        id: 1,
        p_demand_kW: 0.0,
        q_demand_kVAr: 0.0,
        p_gen: [Some(0.0), Some(s_cap)],
        q_gen: [Some(-Q_GEN_RATIO * s_cap), Some(Q_GEN_RATIO * s_cap)],
        v_bounds_pu: V_BOUNDS_PU,
        shunt_pu: None,
    }];
    for (k, &pv) in is_pv.iter().enumerate().skip(1) {
        let p = rng.gen_range(P_DEMAND_KW.0..P_DEMAND_KW.1);
        let q = p * rng.gen_range(Q_OVER_P.0..Q_OVER_P.1);
        let cap = if pv { rng.gen_range(PV_CAPACITY_KW.0..PV_CAPACITY_KW.1) } else { 0.0 };
        buses.push(BusRecord {
            id: k + 1,
            p_demand_kW: p,
            q_demand_kVAr: q,
            p_gen: [Some(0.0), Some(cap)],
            q_gen: [Some(-Q_GEN_RATIO * cap), Some(Q_GEN_RATIO * cap)],
            v_bounds_pu: V_BOUNDS_PU,
            shunt_pu: None,
        });
    }
    let lines = tree
        .into_iter()
        .map(|(a, b)| LineRecord {
            from: a + 1,
            to: b + 1,
            r_ohm_per_km: Some(R_OHM_PER_KM),
            x_ohm_per_km: Some(X_OHM_PER_KM),
            length_km: Some(rng.gen_range(LENGTH_KM.0..LENGTH_KM.1)),
            ..LineRecord::default()
        })
        .collect();
    Ok(CaseFile { base: Base::default(), buses, lines, objective: Some(ObjectiveSpec::loss()) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
        v >= lo && v <= hi
    }

    #[test]
    fn ranges_and_topology() {
        for model in [TreeModel::Attachment, TreeModel::Pruefer] {
            for seed in 0..20 {
                let params = RandomCircuitParams { tree: model, ..RandomCircuitParams::new(50, seed) };
                let case = gen_random_radial(&params).unwrap();
                let net = case.to_network().unwrap();
                assert_eq!(net.n(), 50);
                assert!(net.graph().is_tree());
                let pv = case.buses[1..].iter().filter(|b| b.p_gen[1] > Some(0.0)).count();
                assert!(pv as f64 <= 0.6 * 49.0 + 0.5 && pv as f64 >= 0.15 * 49.0 - 0.5);
                for b in &case.buses[1..] {
                    assert!(within(b.p_demand_kW, P_DEMAND_KW));
                    assert!(within(b.q_demand_kVAr, (0.2 * b.p_demand_kW, 0.3 * b.p_demand_kW)));
                    let cap = b.p_gen[1].unwrap();
                    assert!(within(cap, PV_CAPACITY_KW));
                    assert_eq!(b.p_gen[0], Some(0.0));
                    assert_eq!(b.q_gen, [Some(-0.3 * cap), Some(0.3 * cap)]);
                    assert_eq!(b.v_bounds_pu, V_BOUNDS_PU);
                }
                assert_eq!(case.buses[0].p_gen[1], Some(250.0));
                for l in &case.lines {
                    assert!(within(l.length_km.unwrap(), LENGTH_KM));
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let a = serde_json::to_string(&gen_random_radial(&RandomCircuitParams::new(2, 7)).unwrap()).unwrap();
        let b = serde_json::to_string(&gen_random_radial(&RandomCircuitParams::new(2, 7)).unwrap()).unwrap();
        assert_eq!(a, b);
        let c = serde_json::to_string(&gen_random_radial(&RandomCircuitParams::new(2, 8)).unwrap()).unwrap();
        assert_ne!(a, c);
        assert!(gen_random_radial(&RandomCircuitParams { pv_fraction: Some(0.9), ..RandomCircuitParams::new(5, 1) }).is_err());
    }
}
