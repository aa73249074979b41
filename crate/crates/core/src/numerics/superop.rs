use ndarray::Array2;

use super::linalg::{check_square, conj_transpose, identity, kron};
use super::{C64, I};
use crate::error::{Error, Result};

/// Jump operator `L = sqrt(rate) * op`.
#[derive(Debug, Clone)]
pub struct JumpOperator {
    pub rate: f64,
    pub op: Array2<C64>,
}

impl JumpOperator {
    pub fn new(rate: f64, op: Array2<C64>) -> Self {
        Self { rate, op }
    }

    fn scaled(&self) -> Array2<C64> {
        self.op.mapv(|z| z * self.rate.sqrt())
    }
}

/// Lindblad generator acting on `vec(ρ)` with row-stacking
/// (`ρ[i][j]` sits at index `i*d + j`):
///
/// `-i(H⊗I − I⊗Hᵀ) + Σ L⊗L* − ½(L†L⊗I + I⊗LᵀL*)`.
pub fn vectorize_superoperator(h: &Array2<C64>, jumps: &[JumpOperator]) -> Result<Array2<C64>> {
    let d = check_square(h)?;
    if d * d > super::DEFAULT_DIMENSION_CAP {
        return Err(Error::Domain(format!("superoperator dimension {} exceeds cap", d * d)));
    }
    let id = identity(d);
    let mut out = (kron(h, &id) - kron(&id, &h.t().to_owned())).mapv(|z| -I * z);
    for j in jumps {
        if j.op.dim() != (d, d) {
            return Err(Error::Domain(format!(
                "jump operator is {:?}, Hamiltonian is {d}x{d}",
                j.op.dim()
            )));
        }
        if !(j.rate >= 0.0) || !j.rate.is_finite() {
            return Err(Error::Domain(format!("jump rate {} must be non-negative", j.rate)));
        }
        let l = j.scaled();
        let lc = l.mapv(|z| z.conj());
        let ldl = conj_transpose(&l).dot(&l);
        let ltlc = l.t().dot(&lc);
        out = out + kron(&l, &lc) - (kron(&ldl, &id) + kron(&id, &ltlc)).mapv(|z| z * 0.5);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, matvec, ZERO};
    use ndarray::array;

    fn vec_rows(rho: &Array2<C64>) -> Vec<C64> {
        rho.iter().copied().collect()
    }

    #[test]
    fn matches_direct_lindblad_action() {
        let h = array![[c(0.3), C64::new(0.1, -0.4)], [C64::new(0.1, 0.4), c(-0.7)]];
        let l = array![[ZERO, c(1.0)], [ZERO, ZERO]];
        let jumps = [JumpOperator::new(0.8, l.clone())];
        let sup = vectorize_superoperator(&h, &jumps).unwrap();
        let rho = array![[c(0.6), C64::new(0.2, 0.1)], [C64::new(0.2, -0.1), c(0.4)]];

        let ls = l.mapv(|z| z * 0.8f64.sqrt());
        let ld = conj_transpose(&ls);
        let comm = h.dot(&rho) - rho.dot(&h);
        let ldl = ld.dot(&ls);
        let direct = comm.mapv(|z| -I * z) + ls.dot(&rho).dot(&ld)
            - (ldl.dot(&rho) + rho.dot(&ldl)).mapv(|z| z * 0.5);

        let got = matvec(&sup, &vec_rows(&rho));
        for (a, b) in got.iter().zip(direct.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn trace_is_conserved() {
        let h = array![[c(1.0), c(0.5), ZERO], [c(0.5), c(0.0), c(0.2)], [ZERO, c(0.2), c(-1.0)]];
        let mut l = Array2::zeros((3, 3));
        l[[0, 2]] = c(1.0);
        let sup = vectorize_superoperator(&h, &[JumpOperator::new(2.0, l)]).unwrap();
        // Row-stacked trace functional: indices 0, 4, 8.
        for col in 0..9 {
            let s = sup[[0, col]] + sup[[4, col]] + sup[[8, col]];
            assert!(s.norm() < 1e-14);
        }
    }

    #[test]
    fn rejects_mismatched_jump() {
        let h = identity(2);
        assert!(vectorize_superoperator(&h, &[JumpOperator::new(1.0, identity(3))]).is_err());
        assert!(vectorize_superoperator(&h, &[JumpOperator::new(-1.0, identity(2))]).is_err());
    }
}
