//! Seeded benchmark runs over random radial circuits.

use std::time::Instant;

use serde::Serialize;

use super::generator::{gen_random_radial, RandomCircuitParams};
use crate::error::Result;
use crate::opf::{solve_opf, ObjectiveKind, ObjectiveSpec, OpfSolution, OpfSolveConfig, OpfStatus};

pub const CSV_HEADER: &str = "seed,rank,iterations,eta,r_star,p_hat,wall_ms";

#[derive(Clone, Debug, Serialize)]
pub struct BenchRow {
    pub seed: u64,
    pub n: usize,
    pub rank: usize,
    pub rho_ratio: f64,
    /// Outer iterations of the feasibility heuristic.
    pub iterations: usize,
    pub eta: Option<f64>,
    pub r_star: f64,
    pub p_hat: Option<f64>,
    pub wall_ms: f64,
    pub status: OpfStatus,
    pub max_violation_pu: Option<f64>,
}

impl BenchRow {
    pub fn csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |v| format!("{v:e}"));
        format!(
            "{},{},{},{},{:e},{},{:.1}",
            self.seed,
            self.rank,
            self.iterations,
            opt(self.eta),
            self.r_star,
            opt(self.p_hat),
            self.wall_ms
        )
    }
}

/// Objective for a generated circuit. Production costs use `c_k = 1` on every
/// bus: unequal coefficients give an indefinite matrix on lossless-shunt lines.
pub fn bench_objective(kind: ObjectiveKind, n: usize) -> ObjectiveSpec {
    match kind {
        ObjectiveKind::Voltage => ObjectiveSpec::voltage(),
        ObjectiveKind::Loss => ObjectiveSpec::loss(),
        ObjectiveKind::Cost => ObjectiveSpec::cost(vec![1.0; n]),
    }
}

/// Generates the circuit for `seed` and solves it; also returns the full solution.
pub fn bench_case(n: usize, seed: u64, kind: ObjectiveKind, cfg: &OpfSolveConfig) -> Result<(BenchRow, OpfSolution)> {
    let case = gen_random_radial(&RandomCircuitParams::new(n, seed))?;
    let net = case.to_network()?;
    let start = Instant::now();
    let sol = solve_opf(&net, &bench_objective(kind, n), cfg)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let s = &sol.summary;
    let row = BenchRow {
        seed,
        n,
        rank: s.rank,
        rho_ratio: s.rho_ratio,
        iterations: s.heuristic_iterations,
        eta: s.eta,
        r_star: s.r_star,
        p_hat: s.objective,
        wall_ms,
        status: s.status,
        max_violation_pu: s.max_violation_pu,
    };
    Ok((row, sol))
}
