//! Dense non-Hermitian eigendecomposition.
//!
//! Householder reduction to upper-Hessenberg form, then implicit single-shift
//! complex QR iteration (Wilkinson shifts, periodic exceptional shifts) to the
//! complex Schur form `A = Z T Z†`. Right eigenvectors come from back
//! substitution on `T`; left eigenvectors are the rows of `V_R⁻¹`, which makes
//! the pair biorthonormal by construction.

use ndarray::{s, Array1, Array2};

use super::linalg::{check_square, conj_transpose, frobenius_norm, identity, LuDecomposition};
use super::{C64, ONE, ZERO};
use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Conditioning of the right-eigenvector matrix above which the spectrum is
/// reported as nearly defective.
pub const CONDITION_WARNING: f64 = 1e8;

/// Conditioning beyond which biorthonormalisation is considered meaningless.
pub const CONDITION_FAILURE: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<C64>,
    /// Unit-norm right eigenvectors stored as columns.
    pub right: Array2<C64>,
}

#[derive(Debug, Clone)]
pub struct BiorthogonalEigen {
    pub values: Vec<C64>,
    /// Right eigenvectors `|nR⟩` as columns, unit norm, largest component
    /// real and positive.
    pub right: Array2<C64>,
    /// Left eigenvectors `|nL⟩` as columns with `⟨mL|nR⟩ = δ_mn`.
    pub left: Array2<C64>,
    /// `‖V_R‖_F ‖V_R⁻¹‖_F`, a proxy for how close the matrix is to defective.
    pub condition: f64,
}

impl BiorthogonalEigen {
    /// Reorders all three parts by the permutation `order` (new position → old index).
    pub fn permute(&mut self, order: &[usize]) {
        self.values = order.iter().map(|&k| self.values[k]).collect();
        self.right = select_columns(&self.right, order);
        self.left = select_columns(&self.left, order);
    }

    /// Sorts by `(Re E, Im E)` lexicographically.
    pub fn sort_lexicographic(&mut self) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| {
            let (x, y) = (self.values[a], self.values[b]);
            x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im))
        });
        self.permute(&order);
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.condition > CONDITION_WARNING
    }
}

fn select_columns(m: &Array2<C64>, order: &[usize]) -> Array2<C64> {
    let mut out = Array2::zeros(m.raw_dim());
    for (new, &old) in order.iter().enumerate() {
        out.column_mut(new).assign(&m.column(old));
    }
    out
}

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Unitary rotation `G = [[c, s], [-s̄, c]]` with `G [x; y] = [r; 0]`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let ax = x.norm();
    let ay = y.norm();
    if ay == 0.0 {
        return (1.0, ZERO);
    }
    if ax == 0.0 {
        return (0.0, y.conj() / ay);
    }
    let r = ax.hypot(ay);
    (ax / r, (x / ax) * y.conj() / r)
}

/// Reduces `a` in place to upper-Hessenberg form, accumulating the unitary
/// similarity in `z` (so that `A_original = Z H Z†`).
fn hessenberg(a: &mut Array2<C64>, z: &mut Array2<C64>) {
    let n = a.nrows();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Array1<C64> = a.slice(s![k + 1.., k]).to_owned();
        let xnorm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v.mapv_inplace(|c| c / vnorm);

        // A ← (I - 2vv†) A on rows k+1..
        for j in 0..n {
            let mut dot = ZERO;
            for (i, vi) in v.iter().enumerate() {
                dot += vi.conj() * a[[k + 1 + i, j]];
            }
            let dot = dot * 2.0;
            for (i, vi) in v.iter().enumerate() {
                a[[k + 1 + i, j]] -= vi * dot;
            }
        }
        // A ← A (I - 2vv†) on columns k+1.., and the same for Z.
        for m in [&mut *a, &mut *z] {
            for i in 0..n {
                let mut dot = ZERO;
                for (j, vj) in v.iter().enumerate() {
                    dot += m[[i, k + 1 + j]] * vj;
                }
                let dot = dot * 2.0;
                for (j, vj) in v.iter().enumerate() {
                    m[[i, k + 1 + j]] -= dot * vj.conj();
                }
            }
        }
        for i in k + 2..n {
            a[[i, k]] = ZERO;
        }
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half_tr = (a + d) * 0.5;
    let disc = ((a - d) * 0.5).powi(2) + b * c;
    let root = disc.sqrt();
    let l1 = half_tr + root;
    let l2 = half_tr - root;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Complex Schur decomposition `A = Z T Z†` with `T` upper triangular.
pub fn schur(a: &Array2<C64>) -> Result<(Array2<C64>, Array2<C64>)> {
    let n = check_square(a)?;
    let mut h = a.clone();
    let mut z = identity(n);
    if n == 0 {
        return Ok((h, z));
    }
    hessenberg(&mut h, &mut z);

    let eps = f64::EPSILON;
    let norm = frobenius_norm(&h).max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    let budget = MAX_SWEEPS_PER_EIGENVALUE * n.max(1) * 2;

    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut scale = abs1(h[[l - 1, l - 1]]) + abs1(h[[l, l]]);
            if scale == 0.0 {
                scale = norm;
            }
            if abs1(h[[l, l - 1]]) <= eps * scale {
                h[[l, l - 1]] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }

        iter += 1;
        total += 1;
        if iter > MAX_SWEEPS_PER_EIGENVALUE || total > budget {
            return Err(Error::NoConvergence { iterations: total, lo: l, hi });
        }

        let shift = if iter.is_multiple_of(11) {
            h[[hi, hi]] + 0.75 * abs1(h[[hi, hi - 1]])
        } else if iter.is_multiple_of(17) {
            h[[l, l]] + 0.75 * abs1(h[[l + 1, l]])
        } else {
            wilkinson_shift(h[[hi - 1, hi - 1]], h[[hi - 1, hi]], h[[hi, hi - 1]], h[[hi, hi]])
        };

        for k in l..hi {
            let (x, y) = if k == l {
                (h[[l, l]] - shift, h[[l + 1, l]])
            } else {
                (h[[k, k - 1]], h[[k + 1, k - 1]])
            };
            let (c, s) = givens(x, y);
            let start = if k == l { l } else { k - 1 };
            for j in start..n {
                let p = h[[k, j]];
                let q = h[[k + 1, j]];
                h[[k, j]] = p * c + s * q;
                h[[k + 1, j]] = -s.conj() * p + q * c;
            }
            let stop = (k + 2).min(hi);
            for i in 0..=stop {
                let p = h[[i, k]];
                let q = h[[i, k + 1]];
                h[[i, k]] = p * c + q * s.conj();
                h[[i, k + 1]] = -p * s + q * c;
            }
            for i in 0..n {
                let p = z[[i, k]];
                let q = z[[i, k + 1]];
                z[[i, k]] = p * c + q * s.conj();
                z[[i, k + 1]] = -p * s + q * c;
            }
            if k > l {
                h[[k + 1, k - 1]] = ZERO;
            }
        }
    }
    for i in 1..n {
        for j in 0..i {
            h[[i, j]] = ZERO;
        }
    }
    Ok((h, z))
}

/// Eigenvectors of the upper-triangular `t` by back substitution.
fn triangular_eigenvectors(t: &Array2<C64>) -> Array2<C64> {
    let n = t.nrows();
    let eps = f64::EPSILON;
    let tnorm = frobenius_norm(t).max(f64::MIN_POSITIVE);
    let mut x = Array2::zeros((n, n));
    for k in 0..n {
        let lambda = t[[k, k]];
        let smin = (eps * lambda.norm()).max(eps * tnorm).max(f64::MIN_POSITIVE * 1e4);
        let mut col = vec![ZERO; k + 1];
        col[k] = ONE;
        for j in (0..k).rev() {
            let mut sum = ZERO;
            for m in j + 1..=k {
                sum += t[[j, m]] * col[m];
            }
            let mut d = t[[j, j]] - lambda;
            if d.norm() < smin {
                d = C64::new(smin, 0.0);
            }
            col[j] = -sum / d;
            let big = col[j].norm();
            if big > 1e100 {
                col.iter_mut().for_each(|c| *c /= big);
            }
        }
        for (j, v) in col.into_iter().enumerate() {
            x[[j, k]] = v;
        }
    }
    x
}

fn normalize_columns_with_phase(v: &mut Array2<C64>) {
    for mut col in v.columns_mut() {
        let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let lead = col
            .iter()
            .copied()
            .fold(ZERO, |best, z| if z.norm() > best.norm() { z } else { best });
        let phase = if lead.norm() > 0.0 { lead.conj() / lead.norm() } else { ONE };
        col.mapv_inplace(|z| z * phase / norm);
    }
}

/// Eigenvalues and unit-norm right eigenvectors of a general complex matrix.
pub fn eig_general(m: &Array2<C64>) -> Result<Eigen> {
    let (t, z) = schur(m)?;
    let values = (0..t.nrows()).map(|k| t[[k, k]]).collect();
    let mut right = z.dot(&triangular_eigenvectors(&t));
    normalize_columns_with_phase(&mut right);
    Ok(Eigen { values, right })
}

/// Eigenvalues with paired, biorthonormal right and left eigenvectors.
///
/// Right vectors are normalised and phase-fixed (largest component real
/// positive); left vectors are then the adjoint rows of `V_R⁻¹`, so
/// `V_L† V_R = I`. A (numerically) defective matrix, conditioning above
/// [`CONDITION_FAILURE`], is an error; above [`CONDITION_WARNING`] it is
/// logged and reported through `condition`.
pub fn eig_pair(m: &Array2<C64>) -> Result<BiorthogonalEigen> {
    let Eigen { values, right } = eig_general(m)?;
    let lu = LuDecomposition::new(&right).map_err(|_| {
        Error::Degenerate("right eigenvectors are linearly dependent (defective matrix)".into())
    })?;
    let inv = lu.inverse();
    let condition = frobenius_norm(&right) * frobenius_norm(&inv);
    if !condition.is_finite() || condition > CONDITION_FAILURE {
        return Err(Error::Degenerate(format!(
            "eigenvector conditioning {condition:.3e} defeats biorthonormalisation"
        )));
    }
    if condition > CONDITION_WARNING {
        log::warn!("eigenvector matrix conditioning {condition:.3e} exceeds {CONDITION_WARNING:.0e}");
    }
    let left = conj_transpose(&inv);
    Ok(BiorthogonalEigen { values, right, left, condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linalg::max_abs;
    use crate::numerics::{c, matvec};
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64) -> Array2<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, n), |_| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = eig_general(&identity(5)).unwrap();
        assert!(e.values.iter().all(|v| (v - ONE).norm() < 1e-15));
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = array![[ZERO, c(2.0)], [c(1.0), ZERO]];
        let mut e = eig_pair(&m).unwrap();
        e.sort_lexicographic();
        assert!((e.values[0] - c(-2f64.sqrt())).norm() < 1e-14);
        assert!((e.values[1] - c(2f64.sqrt())).norm() < 1e-14);
    }

    #[test]
    fn diagonal_gives_standard_basis() {
        let m = Array2::from_diag(&array![c(3.0), c(-1.0), C64::new(0.5, 2.0)]);
        let e = eig_general(&m).unwrap();
        for k in 0..3 {
            let idx = (0..3).find(|&i| (m[[i, i]] - e.values[k]).norm() < 1e-14).unwrap();
            assert!((e.right[[idx, k]] - ONE).norm() < 1e-14);
        }
    }

    #[test]
    fn schur_reconstructs_random_matrix() {
        let a = random_matrix(30, 7);
        let (t, z) = schur(&a).unwrap();
        let back = z.dot(&t).dot(&conj_transpose(&z));
        assert!(max_abs(&(back - &a)) < 1e-12);
        let zz = conj_transpose(&z).dot(&z);
        assert!(max_abs(&(zz - identity(30))) < 1e-13);
    }

    #[test]
    fn random_forty_reconstruction_and_biorthonormality() {
        let a = random_matrix(40, 11);
        let e = eig_pair(&a).unwrap();
        let norm = frobenius_norm(&a);
        for k in 0..40 {
            let v: Vec<C64> = e.right.column(k).to_vec();
            let r = matvec(&a, &v) - &(e.right.column(k).to_owned() * e.values[k]);
            assert!(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() <= 1e-9 * norm);
        }
        let gram = conj_transpose(&e.left).dot(&e.right);
        assert!(max_abs(&(gram - identity(40))) < 1e-8);
        let lam = Array2::from_diag(&Array1::from(e.values.clone()));
        let rebuilt = e.right.dot(&lam).dot(&conj_transpose(&e.left));
        assert!(frobenius_norm(&(rebuilt - &a)) <= 1e-7 * norm);
    }

    #[test]
    fn jordan_block_is_reported_degenerate() {
        let m = array![[c(1.0), c(1.0)], [ZERO, c(1.0)]];
        assert!(eig_pair(&m).is_err());
    }

    #[test]
    fn already_triangular_and_tiny_inputs() {
        assert!(eig_general(&Array2::zeros((0, 0))).unwrap().values.is_empty());
        let one = array![[C64::new(2.0, -1.0)]];
        assert_eq!(eig_general(&one).unwrap().values[0], C64::new(2.0, -1.0));
    }
}
