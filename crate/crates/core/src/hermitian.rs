//! Dense complex Hermitian matrices.
//!
//! Eigen-decompositions go through the real symmetric embedding
//! `[[Re H, -Im H], [Im H, Re H]]`, whose spectrum is that of `H` with every
//! eigenvalue doubled in multiplicity.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::jacobi::symmetric_eigen;

pub type C64 = Complex64;

/// Asymmetry allowed on input, relative to `1 + max |H_ij|`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Relative PSD tolerance: `H` is PSD when `ρ_min ≥ -TAU_PSD (1 + ‖H‖₂)`.
pub const TAU_PSD: f64 = 1e-8;
/// Default relative rank threshold.
pub const TAU_RANK: f64 = 1e-5;
/// Absolute floor for the largest eigenvalue in rank decisions.
pub const TAU_ABS: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    // Full row-major storage; kept exactly Hermitian by every constructor.
    data: Vec<C64>,
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<C64>>,
}

impl HermitianMatrix {
    /// Builds from full row-major entries, rejecting asymmetry beyond
    /// [`HERMITIAN_TOL`]. The stored matrix is the exact Hermitian part.
    pub fn new(n: usize, entries: Vec<C64>) -> Result<Self> {
        if n == 0 {
            return Err(validation("matrix dimension must be at least 1"));
        }
        if entries.len() != n * n {
            return Err(Error::Dimension { expected: n * n, found: entries.len() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(validation("matrix has non-finite entries"));
        }
        let scale = 1.0 + entries.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        for i in 0..n {
            for j in i..n {
                let d = (entries[i * n + j] - entries[j * n + i].conj()).norm();
                if d > HERMITIAN_TOL * scale {
                    return Err(validation(format!(
                        "matrix is not Hermitian: |H[{i}][{j}] - conj(H[{j}][{i}])| = {d:.3e}"
                    )));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| entries[i * n + j]))
    }

    /// Builds from a generator of the upper triangle (`i <= j`); the lower
    /// triangle is filled by conjugation and the diagonal is made real.
    pub fn from_upper(n: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(n >= 1, "matrix dimension must be at least 1");
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = C64::new(f(i, i).re, 0.0);
            for j in (i + 1)..n {
                let z = f(i, j);
                data[i * n + j] = z;
                data[j * n + i] = z.conj();
            }
        }
        Self { n, data }
    }

    /// Hermitian part `(F + Fᴴ)/2` of an arbitrary generator.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        Self::from_upper(n, |i, j| 0.5 * (f(i, j) + f(j, i).conj()))
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_upper(n, |_, _| C64::new(0.0, 0.0))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(d: &[f64]) -> Self {
        Self::from_upper(d.len(), |i, j| if i == j { C64::new(d[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// `e_k e_kᴴ`.
    pub fn unit(n: usize, k: usize) -> Self {
        let mut d = vec![0.0; n];
        d[k] = 1.0;
        Self::from_diag(&d)
    }

    /// `x xᴴ`.
    pub fn outer(x: &[C64]) -> Self {
        Self::from_upper(x.len(), |i, j| x[i] * x[j].conj())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    /// Sets `H[i][j]` and `H[j][i]` together.
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        if i == j {
            self.data[i * self.n + i] = C64::new(z.re, 0.0);
        } else {
            self.data[i * self.n + j] = z;
            self.data[j * self.n + i] = z.conj();
        }
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { n: self.n, data: self.data.iter().map(|z| z * s).collect() }
    }

    /// `self + s·other`.
    pub fn add_scaled(&self, s: f64, other: &Self) -> Result<Self> {
        check_dims(self, other)?;
        Ok(Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b * s).collect(),
        })
    }

    pub fn add_scaled_in_place(&mut self, s: f64, other: &Self) {
        assert_eq!(self.n, other.n, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `xᴴ H x`, real for Hermitian `H`.
    pub fn quad_form(&self, x: &[C64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let hx: C64 = self.data[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
            acc += (x[i].conj() * hx).re;
        }
        acc
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.data[i * self.n + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Spectral norm `max |ρ_i|`.
    pub fn norm2(&self) -> f64 {
        let s = eig_values(self);
        s.first().map_or(0.0, |a| a.abs()).max(s.last().map_or(0.0, |a| a.abs()))
    }

    /// `H[i][j]` with `i != j` treated as nonzero above `tau`.
    pub fn off_diagonal_support(&self, tau: f64) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.get(i, j).norm() > tau {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    pub fn is_psd(&self) -> bool {
        let vals = eig_values(self);
        let norm = vals[0].abs().max(vals[vals.len() - 1].abs());
        vals[vals.len() - 1] >= -TAU_PSD * (1.0 + norm)
    }

    /// Inverse of [`real_embedding`], averaging over the block symmetry so the
    /// result is exactly Hermitian.
    pub fn from_real_embedding(x: &DMatrix<f64>) -> Result<Self> {
        if x.nrows() != x.ncols() || x.nrows() % 2 != 0 || x.nrows() == 0 {
            return Err(validation("embedding must be a nonempty square matrix of even order"));
        }
        let n = x.nrows() / 2;
        Ok(Self::from_fn(n, |i, j| {
            let a = 0.5 * (x[(i, j)] + x[(n + i, n + j)]);
            let b = 0.5 * (x[(n + i, j)] - x[(i, n + j)]);
            C64::new(a, b)
        }))
    }
}

fn check_dims(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<()> {
    if a.n != b.n {
        return Err(Error::Dimension { expected: a.n, found: b.n });
    }
    Ok(())
}

/// `[[Re H, -Im H], [Im H, Re H]]`.
pub fn real_embedding(h: &HermitianMatrix) -> DMatrix<f64> {
    let n = h.n;
    DMatrix::from_fn(2 * n, 2 * n, |r, c| {
        let z = h.get(r % n, c % n);
        match (r < n, c < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// `tr(H1 H2)`.
pub fn trace_product(h1: &HermitianMatrix, h2: &HermitianMatrix) -> Result<f64> {
    check_dims(h1, h2)?;
    Ok(trace_product_unchecked(h1, h2))
}

pub(crate) fn trace_product_unchecked(h1: &HermitianMatrix, h2: &HermitianMatrix) -> f64 {
    // tr(AB) = Σ_ij A_ij B_ji = Σ_ij A_ij conj(B_ij), whose real part is the value.
    h1.data.iter().zip(&h2.data).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

fn eig_values(h: &HermitianMatrix) -> Vec<f64> {
    eig_hermitian(h).eigenvalues
}

pub fn min_eigenvalue(h: &HermitianMatrix) -> f64 {
    *eig_values(h).last().expect("nonempty spectrum")
}

/// Full eigen-decomposition, eigenvalues descending.
pub fn eig_hermitian(h: &HermitianMatrix) -> Spectrum {
    let n = h.n;
    if n == 1 {
        return Spectrum {
            eigenvalues: vec![h.get(0, 0).re],
            eigenvectors: vec![vec![C64::new(1.0, 0.0)]],
        };
    }
    let (vals, vecs) = symmetric_eigen(&real_embedding(h));
    let scale = vals[0].abs().max(vals[2 * n - 1].abs()).max(f64::MIN_POSITIVE);
    let cluster_tol = 1e-9 * scale;

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < 2 * n {
        // Extend while values agree, and always to an even size: each complex
        // eigenvalue appears twice in the embedding.
        let mut end = start + 1;
        while end < 2 * n && ((end - start) % 2 == 1 || vals[end - 1] - vals[end] <= cluster_tol) {
            end += 1;
        }
        let candidates: Vec<Vec<C64>> = (start..end)
            .map(|c| (0..n).map(|r| C64::new(vecs[(r, c)], vecs[(n + r, c)])).collect())
            .collect();
        pick_complex_basis(candidates, (end - start) / 2, &mut basis);
        start = end;
    }

    let mut pairs: Vec<(f64, Vec<C64>)> = basis
        .into_iter()
        .map(|u| {
            let rq = h.quad_form(&u);
            (rq, u)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (eigenvalues, eigenvectors) = pairs.into_iter().unzip();
    Spectrum { eigenvalues, eigenvectors }
}

/// Pivoted complex Gram–Schmidt: selects `m` orthonormal complex vectors
/// from the span of `candidates`, also orthogonal to `basis`.
fn pick_complex_basis(mut candidates: Vec<Vec<C64>>, m: usize, basis: &mut Vec<Vec<C64>>) {
    // Candidates from distinct clusters are already orthogonal; only project
    // within the cluster.
    let first_new = basis.len();
    for _ in 0..m {
        for c in candidates.iter_mut() {
            for _ in 0..2 {
                for b in &basis[first_new..] {
                    let p = dot(b, c);
                    for (ci, bi) in c.iter_mut().zip(b) {
                        *ci -= p * bi;
                    }
                }
            }
        }
        let (best, norm) = candidates
            .iter()
            .enumerate()
            .map(|(i, c)| (i, norm(c)))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let v = candidates.swap_remove(best);
        basis.push(v.into_iter().map(|z| z / norm).collect());
    }
}

/// `aᴴ b`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Number of eigenvalues above `tau_rank · max(ρ₁, TAU_ABS)`.
pub fn numeric_rank(s: &Spectrum, tau_rank: f64) -> usize {
    numeric_rank_of(&s.eigenvalues, tau_rank)
}

/// Eigenvalues at or below this are zero when ranking a solver-produced
/// matrix: an interior-point iterate approaches a zero optimum only to within
/// its feasibility tolerance.
pub const SOLVER_ZERO: f64 = 1e-8;

/// [`numeric_rank`] of a matrix returned by the interior-point solver, with
/// eigenvalues below [`SOLVER_ZERO`] treated as zero.
pub fn solution_rank(s: &Spectrum, tau_rank: f64) -> usize {
    let cleaned: Vec<f64> = s.eigenvalues.iter().map(|&v| if v <= SOLVER_ZERO { 0.0 } else { v }).collect();
    numeric_rank_of(&cleaned, tau_rank)
}

pub fn numeric_rank_of(eigenvalues: &[f64], tau_rank: f64) -> usize {
    let top = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let threshold = tau_rank * top.max(TAU_ABS);
    eigenvalues.iter().filter(|&&v| v > threshold).count()
}

/// Serialized as `[[re, im], ...]` rows.
impl Serialize for HermitianMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| [self.get(i, j).re, self.get(i, j).im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("matrix must be square"));
        }
        let entries = rows.into_iter().flatten().map(|[re, im]| C64::new(re, im)).collect();
        HermitianMatrix::new(n, entries).map_err(serde::de::Error::custom)
    }
}
