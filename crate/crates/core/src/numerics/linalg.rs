use ndarray::{Array1, Array2};

use super::{C64, DEFAULT_DIMENSION_CAP, ONE, ZERO};
use crate::error::{Error, Result};

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, ONE)
}

pub fn conj_transpose(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius_norm(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn matvec(m: &Array2<C64>, v: &[C64]) -> Array1<C64> {
    let n = m.nrows();
    let mut out = Array1::zeros(n);
    for (i, row) in m.outer_iter().enumerate() {
        out[i] = row.iter().zip(v).map(|(a, b)| a * b).sum();
    }
    out
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let s = a[[i, j]];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = s * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Square, finite and within the dimension cap.
pub(crate) fn check_square(m: &Array2<C64>) -> Result<usize> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::Domain(format!("matrix is {r}x{c}, expected square")));
    }
    if r > DEFAULT_DIMENSION_CAP {
        return Err(Error::Domain(format!(
            "dimension {r} exceeds dense cap {DEFAULT_DIMENSION_CAP}"
        )));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Domain("matrix has non-finite entries".into()));
    }
    Ok(r)
}

/// LU factorisation with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    lu: Array2<C64>,
    perm: Vec<usize>,
}

impl LuDecomposition {
    pub fn new(a: &Array2<C64>) -> Result<Self> {
        let n = check_square(a)?;
        let scale = max_abs(a).max(f64::MIN_POSITIVE);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[[i, k]].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= f64::EPSILON * scale * 1e-4 {
                return Err(Error::Degenerate(format!("singular pivot at column {k}")));
            }
            if p != k {
                for j in 0..n {
                    lu.swap([k, j], [p, j]);
                }
                perm.swap(k, p);
            }
            let pivot = lu[[k, k]];
            for i in k + 1..n {
                let f = lu[[i, k]] / pivot;
                lu[[i, k]] = f;
                if f == ZERO {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[[k, j]];
                    lu[[i, j]] -= f * u;
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[C64]) -> Array1<C64> {
        let n = self.lu.nrows();
        let mut x: Array1<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[[i, j]] * x[j];
            }
            x[i] = s / self.lu[[i, i]];
        }
        x
    }

    pub fn inverse(&self) -> Array2<C64> {
        let n = self.lu.nrows();
        let mut inv = Array2::zeros((n, n));
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e.iter_mut().for_each(|z| *z = ZERO);
            e[j] = ONE;
            let col = self.solve(&e);
            inv.column_mut(j).assign(&col);
        }
        inv
    }
}

pub fn inverse(a: &Array2<C64>) -> Result<Array2<C64>> {
    Ok(LuDecomposition::new(a)?.inverse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    #[test]
    fn lu_inverse_recovers_identity() {
        let a = ndarray::array![
            [c(2.0), C64::new(0.0, 1.0), c(0.5)],
            [c(1.0), c(3.0), C64::new(-1.0, 0.2)],
            [c(0.0), c(1.0), c(4.0)]
        ];
        let inv = inverse(&a).unwrap();
        let prod = a.dot(&inv);
        assert!(max_abs(&(prod - identity(3))) < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = ndarray::array![[c(1.0), c(2.0)], [c(2.0), c(4.0)]];
        assert!(matches!(LuDecomposition::new(&a), Err(Error::Degenerate(_))));
    }

    #[test]
    fn kron_dimensions_and_entries() {
        let a = ndarray::array![[c(1.0), c(2.0)], [c(3.0), c(4.0)]];
        let k = kron(&a, &identity(2));
        assert_eq!(k.dim(), (4, 4));
        assert_eq!(k[[2, 0]], c(3.0));
        assert_eq!(k[[3, 1]], c(3.0));
        assert_eq!(k[[2, 1]], ZERO);
    }
}
