//! Admittance, injection and line-flow matrices of a power network.

use nalgebra::DMatrix;

use super::network::{ObjectiveKind, ObjectiveSpec, PowerNetwork};
use crate::error::{validation, Result};
use crate::hermitian::{eig_hermitian, HermitianMatrix, C64, TAU_PSD};

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `Y_kk = y_kk + Σ_{j∼k} y_kj`, `Y_ij = −y_ij` on lines. Symmetric, not Hermitian.
pub fn build_admittance(net: &PowerNetwork) -> DMatrix<C64> {
    let n = net.n();
    let mut y = DMatrix::from_element(n, n, zero());
    for (k, b) in net.buses.iter().enumerate() {
        y[(k, k)] += b.shunt;
    }
    for l in &net.lines {
        let a = l.admittance();
        y[(l.from, l.from)] += a;
        y[(l.to, l.to)] += a;
        y[(l.from, l.to)] -= a;
        y[(l.to, l.from)] -= a;
    }
    y
}

/// `(Φ_k, Ψ_k, J_k)` with `Φ_k = (Y_kᴴ + Y_k)/2`, `Ψ_k = (Y_kᴴ − Y_k)/(2i)`,
/// `Y_k = e_k e_kᵀ Y` and `J_k = e_k e_kᵀ`.
pub fn build_injection_matrices(y: &DMatrix<C64>, k: usize) -> (HermitianMatrix, HermitianMatrix, HermitianMatrix) {
    let n = y.nrows();
    // (Y_k)[r][c] = δ_rk Y[k][c]; (Y_kᴴ)[r][c] = δ_ck conj(Y[k][r]).
    let yk = |r: usize, c: usize| if r == k { y[(k, c)] } else { zero() };
    let ykh = |r: usize, c: usize| if c == k { y[(k, r)].conj() } else { zero() };
    let two_i = C64::new(0.0, 2.0);
    let phi = HermitianMatrix::from_upper(n, |r, c| (ykh(r, c) + yk(r, c)) * 0.5);
    let psi = HermitianMatrix::from_upper(n, |r, c| (ykh(r, c) - yk(r, c)) / two_i);
    (phi, psi, HermitianMatrix::unit(n, k))
}

/// `(M^{ij}, M^{ji}, T^{ij})` for line `(i, j)`: `VᴴM^{ij}V` is the real power
/// sent from `i` into the line, `T^{ij} = M^{ij} + M^{ji}` its loss.
pub fn build_flow_matrices(net: &PowerNetwork, i: usize, j: usize) -> Result<(HermitianMatrix, HermitianMatrix, HermitianMatrix)> {
    let line = net
        .line_between(i, j)
        .ok_or_else(|| validation(format!("no line between buses {} and {}", i + 1, j + 1)))?;
    Ok(flow_matrices(net.n(), i, j, line.g, line.b))
}

pub(crate) fn flow_matrices(n: usize, i: usize, j: usize, g: f64, b: f64) -> (HermitianMatrix, HermitianMatrix, HermitianMatrix) {
    let half = |re: f64, im: f64| C64::new(re / 2.0, im / 2.0);
    let mut mij = HermitianMatrix::zeros(n);
    mij.set(i, i, C64::new(g, 0.0));
    mij.set(i, j, half(-g, b));
    let mut mji = HermitianMatrix::zeros(n);
    mji.set(j, j, C64::new(g, 0.0));
    mji.set(j, i, half(-g, b));
    let t = mij.add_scaled(1.0, &mji).expect("same dimension");
    (mij, mji, t)
}

/// Result of [`build_objective`].
#[derive(Clone, Debug)]
pub struct ObjectiveMatrix {
    pub c: HermitianMatrix,
    pub psd: bool,
    pub definite: bool,
    pub min_eigenvalue: f64,
}

/// `I` (voltage), `(Y + Yᴴ)/2` (loss) or `Σ c_k Φ_k` (cost).
pub fn build_objective(net: &PowerNetwork, spec: &ObjectiveSpec) -> Result<ObjectiveMatrix> {
    let n = net.n();
    let c = match spec.kind {
        ObjectiveKind::Voltage => HermitianMatrix::identity(n),
        ObjectiveKind::Loss => {
            let y = build_admittance(net);
            HermitianMatrix::from_upper(n, |r, c| (y[(r, c)] + y[(c, r)].conj()) * 0.5)
        }
        ObjectiveKind::Cost => {
            if spec.cost.len() != n {
                return Err(validation(format!("cost objective needs {n} coefficients, got {}", spec.cost.len())));
            }
            if let Some(k) = spec.cost.iter().position(|&c| !(c >= 0.0 && c.is_finite())) {
                return Err(validation(format!("cost coefficient of bus {} must be finite and nonnegative", net.buses[k].id)));
            }
            let y = build_admittance(net);
            let mut acc = HermitianMatrix::zeros(n);
            for (k, &ck) in spec.cost.iter().enumerate() {
                if ck != 0.0 {
                    acc.add_scaled_in_place(ck, &build_injection_matrices(&y, k).0);
                }
            }
            acc
        }
    };
    let s = eig_hermitian(&c);
    let min = *s.eigenvalues.last().expect("n >= 1");
    let norm = s.eigenvalues[0].abs().max(min.abs());
    Ok(ObjectiveMatrix {
        psd: min >= -TAU_PSD * (1.0 + norm),
        definite: min > TAU_PSD * (1.0 + norm),
        min_eigenvalue: min,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::super::network::fixtures::*;
    use super::super::network::Base;
    use super::*;

    fn two_bus(g: f64, b: f64) -> PowerNetwork {
        PowerNetwork::new(vec![bus(1), bus(2)], vec![line(0, 1, g, b)], Base::default()).unwrap()
    }

    #[test]
    fn two_bus_admittance() {
        let y = build_admittance(&two_bus(1.0, 0.5));
        let a = C64::new(1.0, -0.5);
        assert_eq!(y[(0, 0)], a);
        assert_eq!(y[(1, 1)], a);
        assert_eq!(y[(0, 1)], -a);
        assert_eq!(y[(1, 0)], -a);
    }

    #[test]
    fn row_sums_are_shunts() {
        let mut b2 = bus(2);
        b2.shunt = C64::new(0.1, 0.3);
        let net = PowerNetwork::new(vec![bus(1), b2, bus(3)], vec![line(0, 1, 2.0, 1.0), line(1, 2, 1.0, 3.0)], Base::default()).unwrap();
        let y = build_admittance(&net);
        for k in 0..3 {
            let s: C64 = (0..3).map(|j| y[(k, j)]).sum();
            assert!((s - net.buses[k].shunt).norm() < 1e-15);
        }
        let shunt_only = PowerNetwork::new(vec![b2_only()], vec![], Base::default()).unwrap();
        assert_eq!(build_admittance(&shunt_only)[(0, 0)], C64::new(0.2, 0.0));
    }

    fn b2_only() -> super::super::network::Bus {
        let mut b = bus(1);
        b.shunt = C64::new(0.2, 0.0);
        b
    }

    #[test]
    fn injection_entries() {
        let y = build_admittance(&two_bus(2.0, 1.0));
        let (phi, psi, j) = build_injection_matrices(&y, 0);
        assert!((phi.get(0, 1) - C64::new(-1.0, 0.5)).norm() < 1e-15);
        assert!((psi.get(0, 1) - C64::new(-0.5, -1.0)).norm() < 1e-15);
        assert_eq!(j, HermitianMatrix::unit(2, 0));
    }

    #[test]
    fn isolated_bus_has_zero_injection_matrices() {
        let net = PowerNetwork::new(vec![bus(1)], vec![], Base::default()).unwrap();
        let (phi, psi, _) = build_injection_matrices(&build_admittance(&net), 0);
        assert!(phi.is_zero() && psi.is_zero());
    }

    #[test]
    fn flow_matrix_entries() {
        let net = two_bus(2.0, 1.0);
        let (mij, mji, t) = build_flow_matrices(&net, 0, 1).unwrap();
        assert_eq!(mij.get(0, 0).re, 2.0);
        assert_eq!(mij.get(0, 1), C64::new(-1.0, 0.5));
        assert_eq!(mji.get(0, 1), C64::new(-1.0, -0.5));
        assert_eq!(t.get(0, 1), C64::new(-2.0, 0.0));
        assert_eq!(t.get(0, 0).re, 2.0);
        let s = eig_hermitian(&t);
        assert!((s.eigenvalues[0] - 4.0).abs() < 1e-12 && s.eigenvalues[1].abs() < 1e-12);
        assert!(build_flow_matrices(&net, 0, 0).is_err());
        let flat = [C64::new(1.0, 0.0); 2];
        assert_eq!(mij.quad_form(&flat), 0.0);
        assert_eq!(t.quad_form(&flat), 0.0);
    }

    #[test]
    fn objectives() {
        let net = two_bus(1.0, 0.5);
        let v = build_objective(&PowerNetwork::new(vec![bus(1), bus(2), bus(3)], vec![line(0, 1, 1.0, 1.0), line(1, 2, 1.0, 1.0)], Base::default()).unwrap(), &ObjectiveSpec::voltage()).unwrap();
        assert!(v.definite && v.c == HermitianMatrix::identity(3));
        let l = build_objective(&net, &ObjectiveSpec::loss()).unwrap();
        assert_eq!(l.c.get(0, 0).re, 1.0);
        assert_eq!(l.c.get(0, 1), C64::new(-1.0, 0.0));
        assert!(l.psd && !l.definite);
        let c = build_objective(&net, &ObjectiveSpec::cost(vec![1.0, 0.0])).unwrap();
        assert_eq!(c.c.get(0, 1), C64::new(-0.5, 0.25));
        assert!(build_objective(&net, &ObjectiveSpec::cost(vec![-1.0, 0.0])).is_err());
    }
}
