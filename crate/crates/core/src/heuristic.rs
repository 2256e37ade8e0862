//! Feasibility restoration for relaxations that are not rank one: repeatedly
//! linearize the constraints around the current point and minimize the
//! squared linearized violations, optionally inside an ℓ¹ trust region.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::hermitian::{eig_hermitian, HermitianMatrix, C64, TAU_ABS};
use crate::problem::QcqpProblem;

/// Relative feasibility tolerance: constraint `k` holds when
/// `xᴴC_kx − b_k ≤ TOL_FEAS·(1 + |b_k|)`.
pub const TOL_FEAS: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// `w·√tr(CW)` with `w` the unit principal eigenvector.
    TraceScale,
    /// `√ρ₁·u₁`, the Frobenius-nearest rank-one factor.
    #[default]
    Rank1Approx,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerConfig {
    pub max_iters: usize,
    /// Stop when an iteration lowers the model by less than this fraction.
    pub stall_tol: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self { max_iters: 500, stall_tol: 1e-10, armijo: 1e-4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeuristicConfig {
    /// ℓ¹ trust-region radius; `+∞` removes the region.
    pub gamma: f64,
    pub max_outer_iters: usize,
    pub inner: InnerConfig,
    pub start_mode: StartMode,
    pub tol_feas: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            gamma: f64::INFINITY,
            max_outer_iters: 50,
            inner: InnerConfig::default(),
            start_mode: StartMode::Rank1Approx,
            tol_feas: TOL_FEAS,
        }
    }
}

impl HeuristicConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.gamma > 0.0) || self.max_outer_iters == 0 || self.inner.max_iters == 0 {
            return Err(crate::error::validation("heuristic needs gamma > 0 and at least one iteration"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicOutcome {
    Feasible,
    Exhausted,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeuristicResult {
    pub x_tilde: Option<Vec<C64>>,
    pub iterations: usize,
    pub objective: Option<f64>,
    pub eta: Option<f64>,
    /// `Σ_k v_k²` of the true quadratic violations, starting point first.
    pub violation_trace: Vec<f64>,
    pub outcome: HeuristicOutcome,
    /// Inner solves that hit their iteration cap.
    pub inner_warnings: usize,
}

/// Real coordinates of the complex vector. Every coordinate moves exactly one
/// entry of `x`.
pub trait Parametrization {
    fn encode(&self, x: &[C64]) -> Vec<f64>;
    fn decode(&self, q: &[f64]) -> Vec<C64>;
    /// `∂x/∂q_j` as `(entry, derivative)`.
    fn tangent(&self, q: &[f64], x: &[C64], j: usize) -> (usize, C64);
}

/// Phase of `x` that makes entry `gauge` real and nonnegative.
pub fn gauge_fixed(x: &[C64], gauge: usize) -> Vec<C64> {
    let z = x[gauge];
    if z.norm() <= 0.0 {
        return x.to_vec();
    }
    let phase = z.conj() / z.norm();
    x.iter().map(|v| v * phase).collect()
}

/// `(Re x₀, …, Re x_{n−1}, Im x_j for j ≠ gauge)`; the gauge entry stays real.
#[derive(Clone, Copy, Debug)]
pub struct Rectangular {
    pub n: usize,
    pub gauge: usize,
}

impl Parametrization for Rectangular {
    fn encode(&self, x: &[C64]) -> Vec<f64> {
        let x = gauge_fixed(x, self.gauge);
        let mut q: Vec<f64> = x.iter().map(|z| z.re).collect();
        q.extend((0..self.n).filter(|&k| k != self.gauge).map(|k| x[k].im));
        q
    }

    fn decode(&self, q: &[f64]) -> Vec<C64> {
        let mut x: Vec<C64> = q[..self.n].iter().map(|&r| C64::new(r, 0.0)).collect();
        for (t, k) in (0..self.n).filter(|&k| k != self.gauge).enumerate() {
            x[k].im = q[self.n + t];
        }
        x
    }

    fn tangent(&self, _q: &[f64], _x: &[C64], j: usize) -> (usize, C64) {
        if j < self.n {
            (j, C64::new(1.0, 0.0))
        } else {
            let k = (0..self.n).filter(|&k| k != self.gauge).nth(j - self.n).expect("index in range");
            (k, C64::new(0.0, 1.0))
        }
    }
}

/// Magnitudes and angles with `θ_gauge = 0`. With `magnitude = Some(m)` the
/// gauge entry is pinned to `m`; otherwise its magnitude is a coordinate.
#[derive(Clone, Debug)]
pub struct Polar {
    pub n: usize,
    pub gauge: usize,
    pub magnitude: Option<f64>,
    mags: Vec<usize>,
    angles: Vec<usize>,
}

impl Polar {
    pub fn new(n: usize, gauge: usize, magnitude: Option<f64>) -> Self {
        let mags = (0..n).filter(|&k| magnitude.is_none() || k != gauge).collect();
        let angles = (0..n).filter(|&k| k != gauge).collect();
        Self { n, gauge, magnitude, mags, angles }
    }
}

impl Parametrization for Polar {
    fn encode(&self, x: &[C64]) -> Vec<f64> {
        let x = gauge_fixed(x, self.gauge);
        let mut q: Vec<f64> = self.mags.iter().map(|&k| x[k].norm()).collect();
        q.extend(self.angles.iter().map(|&k| x[k].arg()));
        q
    }

    fn decode(&self, q: &[f64]) -> Vec<C64> {
        let mut mag = vec![self.magnitude.unwrap_or(0.0); self.n];
        for (t, &k) in self.mags.iter().enumerate() {
            mag[k] = q[t];
        }
        let mut ang = vec![0.0; self.n];
        for (t, &k) in self.angles.iter().enumerate() {
            ang[k] = q[self.mags.len() + t];
        }
        (0..self.n).map(|k| C64::from_polar(mag[k], ang[k])).collect()
    }

    fn tangent(&self, q: &[f64], x: &[C64], j: usize) -> (usize, C64) {
        if j < self.mags.len() {
            let k = self.mags[j];
            let th = if k == self.gauge { 0.0 } else { q[self.mags.len() + self.angles.iter().position(|&a| a == k).expect("angle")] };
            (k, C64::from_polar(1.0, th))
        } else {
            let k = self.angles[j - self.mags.len()];
            (k, C64::new(0.0, 1.0) * x[k])
        }
    }
}

/// Starting point from a relaxation optimum, gauge-fixed on entry `gauge`.
pub fn initial_point(w_star: &HermitianMatrix, c: &HermitianMatrix, mode: StartMode, gauge: usize) -> Vec<C64> {
    let s = eig_hermitian(w_star);
    let rho = s.eigenvalues[0];
    if rho <= TAU_ABS {
        return vec![C64::new(0.0, 0.0); w_star.n()];
    }
    let scale = match mode {
        StartMode::Rank1Approx => rho.sqrt(),
        StartMode::TraceScale => crate::hermitian::trace_product_unchecked(c, w_star).max(0.0).sqrt(),
    };
    let x: Vec<C64> = s.eigenvectors[0].iter().map(|z| z * scale).collect();
    gauge_fixed(&x, gauge)
}

#[derive(Clone, Debug, Serialize)]
pub struct Violations {
    /// `(xᴴC_kx − b_k)₊`, indexed by all constraints; zero for removed ones.
    pub per_constraint: Vec<f64>,
    /// `Σ_k v_k²`.
    pub total: f64,
    pub feasible: bool,
}

pub fn quadratic_violations(p: &QcqpProblem, x: &[C64], tol_feas: f64) -> Violations {
    let mut per_constraint = vec![0.0; p.constraints().len()];
    let mut total = 0.0;
    let mut feasible = true;
    for (k, c) in p.constraints().iter().enumerate() {
        let Some(b) = c.upper else { continue };
        let v = (c.matrix.quad_form(x) - b).max(0.0);
        per_constraint[k] = v;
        total += v * v;
        if v > tol_feas * (1.0 + b.abs()) {
            feasible = false;
        }
    }
    Violations { per_constraint, total, feasible }
}

/// `Σ_k s_k(x)²` for the constraints linearized at `x_m`:
/// `f_k(x) ≈ x_mᴴC_kx_m + 2 Re[x_mᴴC_k(x − x_m)]`, `s_k = (f_k − b_k)₊`.
/// A two-sided bound contributes through its two rows.
pub fn linearize_violation(p: &QcqpProblem, x_m: &[C64], x: &[C64]) -> f64 {
    let dx: Vec<C64> = x.iter().zip(x_m).map(|(a, b)| a - b).collect();
    p.constraints()
        .iter()
        .filter_map(|c| {
            let b = c.upper?;
            let cx = c.matrix.mul_vec(x_m);
            let f = c.matrix.quad_form(x_m) + 2.0 * crate::hermitian::dot(&cx, &dx).re;
            Some((f - b).max(0.0).powi(2))
        })
        .sum()
}

/// Affine model `r(d) = c + G d` of the active rows around a base point.
struct Model {
    g: DMatrix<f64>,
    c: DVector<f64>,
}

impl Model {
    fn build(p: &QcqpProblem, param: &dyn Parametrization, q: &[f64]) -> Self {
        let x = param.decode(q);
        let active = p.active();
        let d = q.len();
        let tangents: Vec<(usize, C64)> = (0..d).map(|j| param.tangent(q, &x, j)).collect();
        let mut g = DMatrix::zeros(active.len(), d);
        let mut c = DVector::zeros(active.len());
        for (r, &k) in active.iter().enumerate() {
            let con = &p.constraints()[k];
            let cx = con.matrix.mul_vec(&x);
            c[r] = crate::hermitian::dot(&x, &cx).re - con.upper.expect("active");
            for (j, &(e, t)) in tangents.iter().enumerate() {
                // ∂(xᴴMx)/∂q_j = 2 Re((Mx)_e^* t).
                g[(r, j)] = 2.0 * (cx[e].conj() * t).re;
            }
        }
        Self { g, c }
    }

    fn residual(&self, d: &DVector<f64>) -> DVector<f64> {
        &self.c + &self.g * d
    }

    fn value(&self, d: &DVector<f64>) -> f64 {
        self.residual(d).iter().map(|r| r.max(0.0).powi(2)).sum()
    }

    fn gradient(&self, d: &DVector<f64>) -> DVector<f64> {
        // Zero subgradient at the hinge kinks.
        let s = self.residual(d).map(|r| r.max(0.0));
        self.g.transpose() * s * 2.0
    }
}

/// Euclidean projection onto `{d : ‖d‖₁ ≤ radius}` by sorting.
pub fn project_l1(v: &DVector<f64>, radius: f64) -> DVector<f64> {
    if v.iter().map(|x| x.abs()).sum::<f64>() <= radius {
        return v.clone();
    }
    let mut u: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - radius) / (i + 1) as f64;
        if ui > t {
            theta = t;
        } else {
            break;
        }
    }
    v.map(|x| x.signum() * (x.abs() - theta).max(0.0))
}

/// Minimizes the linearized violation from `d = 0`; returns the step and
/// whether the iteration cap was hit.
fn minimize_model(model: &Model, gamma: f64, cfg: &InnerConfig) -> (DVector<f64>, bool) {
    let dim = model.g.ncols();
    let mut d = DVector::zeros(dim);
    let mut phi = model.value(&d);
    if phi == 0.0 {
        return (d, false);
    }
    if gamma.is_infinite() {
        // Gauss–Newton on the rows with positive residual, least-norm steps.
        for _ in 0..cfg.max_iters {
            let r = model.residual(&d);
            let rows: Vec<usize> = (0..r.len()).filter(|&i| r[i] > 0.0).collect();
            if rows.is_empty() {
                return (d, false);
            }
            let ga = DMatrix::from_fn(rows.len(), dim, |i, j| model.g[(rows[i], j)]);
            let ra = DVector::from_fn(rows.len(), |i, _| r[rows[i]]);
            let mut gram = &ga * ga.transpose();
            let damp = 1e-12 * (gram.trace() / rows.len() as f64).max(f64::MIN_POSITIVE);
            for i in 0..rows.len() {
                gram[(i, i)] += damp;
            }
            let Some(sol) = gram.clone().cholesky().map(|c| c.solve(&ra)).or_else(|| gram.lu().solve(&ra)) else {
                return (d, true);
            };
            let step = -(ga.transpose() * sol);
            let slope = -2.0 * ra.norm_squared();
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let cand = &d + &step * t;
                let v = model.value(&cand);
                if v <= phi + cfg.armijo * t * slope {
                    accepted = Some((cand, v));
                    break;
                }
                t *= 0.5;
            }
            let Some((cand, v)) = accepted else { return (d, false) };
            let progress = phi - v;
            d = cand;
            phi = v;
            if phi == 0.0 || progress <= cfg.stall_tol * (phi + progress) {
                return (d, false);
            }
        }
        return (d, true);
    }
    // Projected gradient with backtracking on a quadratic upper model.
    let lip = 2.0 * model.g.norm_squared();
    let mut alpha = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    for _ in 0..cfg.max_iters {
        let grad = model.gradient(&d);
        let mut accepted = None;
        for _ in 0..60 {
            let cand = project_l1(&(&d - &grad * alpha), gamma);
            let diff = &cand - &d;
            let v = model.value(&cand);
            if v <= phi + grad.dot(&diff) + diff.norm_squared() / (2.0 * alpha) && v <= phi - cfg.armijo * diff.norm_squared() / alpha {
                accepted = Some((cand, v));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, v)) = accepted else { return (d, false) };
        let progress = phi - v;
        d = cand;
        phi = v;
        alpha *= 2.0;
        if phi == 0.0 || progress <= cfg.stall_tol * (phi + progress) {
            return (d, false);
        }
    }
    (d, true)
}

/// One outer step in the given coordinates; returns the new coordinates and
/// whether the inner solver hit its cap.
pub fn heuristic_step_with(p: &QcqpProblem, param: &dyn Parametrization, q_m: &[f64], cfg: &HeuristicConfig) -> (Vec<f64>, bool) {
    let model = Model::build(p, param, q_m);
    let (d, capped) = minimize_model(&model, cfg.gamma, &cfg.inner);
    (q_m.iter().zip(d.iter()).map(|(a, b)| a + b).collect(), capped)
}

/// One outer step in rectangular coordinates with entry 0 as gauge.
pub fn heuristic_step(p: &QcqpProblem, x_m: &[C64], cfg: &HeuristicConfig) -> Vec<C64> {
    let param = Rectangular { n: p.n(), gauge: 0 };
    let (q, _) = heuristic_step_with(p, &param, &param.encode(x_m), cfg);
    param.decode(&q)
}

/// `objective / r* − 1`; absent when `r*` is zero and the objective is not.
pub fn eta(objective: f64, r_star: f64) -> Option<f64> {
    if r_star.abs() > TAU_ABS {
        Some(objective / r_star - 1.0)
    } else if objective.abs() <= TAU_ABS {
        Some(0.0)
    } else {
        None
    }
}

/// Runs outer steps from `x0` until the true constraints hold.
pub fn restore_from(p: &QcqpProblem, x0: &[C64], r_star: f64, cfg: &HeuristicConfig, param: &dyn Parametrization) -> HeuristicResult {
    let mut q = param.encode(x0);
    let mut x = param.decode(&q);
    let mut viol = quadratic_violations(p, &x, cfg.tol_feas);
    let mut trace = vec![viol.total];
    let mut warnings = 0;
    let mut iterations = 0;
    while !viol.feasible && iterations < cfg.max_outer_iters {
        iterations += 1;
        let (next, capped) = heuristic_step_with(p, param, &q, cfg);
        warnings += capped as usize;
        let next_x = param.decode(&next);
        let next_viol = quadratic_violations(p, &next_x, cfg.tol_feas);
        trace.push(next_viol.total);
        let stalled = (viol.total - next_viol.total).abs() <= 1e-10 * viol.total;
        q = next;
        x = next_x;
        viol = next_viol;
        if stalled && !viol.feasible {
            break;
        }
    }
    let (outcome, x_tilde, objective, eta_v) = if viol.feasible {
        let obj = p.objective_value(&x);
        (HeuristicOutcome::Feasible, Some(x), Some(obj), eta(obj, r_star))
    } else {
        (HeuristicOutcome::Exhausted, None, None, None)
    };
    HeuristicResult { x_tilde, iterations, objective, eta: eta_v, violation_trace: trace, outcome, inner_warnings: warnings }
}

/// Starts from `W_star` and restores feasibility in rectangular coordinates.
pub fn restore_feasibility(p: &QcqpProblem, w_star: &HermitianMatrix, r_star: f64, cfg: &HeuristicConfig) -> HeuristicResult {
    let x0 = initial_point(w_star, p.objective(), cfg.start_mode, 0);
    restore_from(p, &x0, r_star, cfg, &Rectangular { n: p.n(), gauge: 0 })
}
