//! Adaptive Dormand–Prince 5(4) integration of `ẋ = G(t) x`.

use ndarray::{Array1, Array2};

use super::{C64, ZERO};
use crate::error::{Error, Result};

/// Linear right-hand side `x ↦ G(t) x`.
pub trait LinearGenerator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, t: f64, x: &[C64], out: &mut [C64]);
}

impl LinearGenerator for Array2<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, _t: f64, x: &[C64], out: &mut [C64]) {
        for (o, row) in out.iter_mut().zip(self.outer_iter()) {
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Wraps a closure as a (possibly time-dependent) generator.
pub struct FnGenerator<F> {
    dim: usize,
    f: F,
}

impl<F> FnGenerator<F>
where
    F: Fn(f64, &[C64], &mut [C64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> LinearGenerator for FnGenerator<F>
where
    F: Fn(f64, &[C64], &mut [C64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, t: f64, x: &[C64], out: &mut [C64]) {
        (self.f)(t, x, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorContract {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Interpolate grid points from the continuous extension instead of
    /// landing a step exactly on each of them.
    pub dense_output: bool,
}

impl Default for IntegratorContract {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_step: f64::INFINITY, dense_output: true }
    }
}

impl IntegratorContract {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.atol > 0.0 && self.max_step > 0.0) {
            return Err(Error::Domain(format!(
                "integrator tolerances must be positive (rtol {}, atol {}, max_step {})",
                self.rtol, self.atol, self.max_step
            )));
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Stages {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = ZERO;
        for (w, k) in terms {
            acc += k[i] * *w;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `ẋ = G(t) x` from `t_grid[0]` and returns the state at every
/// grid point (the first entry is `x0`).
pub fn integrate_linear<G: LinearGenerator + ?Sized>(
    generator: &G,
    x0: &[C64],
    t_grid: &[f64],
    contract: &IntegratorContract,
) -> Result<Vec<Array1<C64>>> {
    contract.validate()?;
    let n = generator.dim();
    if x0.len() != n {
        return Err(Error::Domain(format!("state has {} entries, generator {n}", x0.len())));
    }
    if t_grid.is_empty() {
        return Ok(Vec::new());
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }

    let mut out = Vec::with_capacity(t_grid.len());
    out.push(Array1::from(x0.to_vec()));
    if t_grid.len() == 1 {
        return Ok(out);
    }

    let t_end = *t_grid.last().unwrap();
    let mut t = t_grid[0];
    let mut y = x0.to_vec();
    let mut st = Stages {
        k: std::array::from_fn(|_| vec![ZERO; n]),
        tmp: vec![ZERO; n],
        y_new: vec![ZERO; n],
    };
    generator.apply(t, &y, &mut st.k[0]);

    let span = t_end - t;
    let mut h = (span / 100.0).min(contract.max_step).min(t_grid[1] - t_grid[0]);
    let mut next = 1usize;
    let mut rcont: [Vec<C64>; 5] = std::array::from_fn(|_| vec![ZERO; n]);

    while next < t_grid.len() {
        let h_floor = 1e-14 * t.abs().max(span).max(1.0);
        if h < h_floor {
            return Err(Error::Integration {
                t,
                reason: format!("step size {h:.3e} underflowed (rtol {}, atol {})", contract.rtol, contract.atol),
            });
        }
        let target = if contract.dense_output { t_end } else { t_grid[next] };
        let mut step = h.min(contract.max_step);
        let landing = t + step >= target - 1e-12 * step.max(1.0);
        if landing {
            step = target - t;
        }

        let [k1, k2, k3, k4, k5, k6, k7] = &mut st.k;
        axpy_into(&mut st.tmp, &y, step, &[(A21, k1)]);
        generator.apply(t + C2 * step, &st.tmp, k2);
        axpy_into(&mut st.tmp, &y, step, &[(A31, k1), (A32, k2)]);
        generator.apply(t + C3 * step, &st.tmp, k3);
        axpy_into(&mut st.tmp, &y, step, &[(A41, k1), (A42, k2), (A43, k3)]);
        generator.apply(t + C4 * step, &st.tmp, k4);
        axpy_into(&mut st.tmp, &y, step, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]);
        generator.apply(t + C5 * step, &st.tmp, k5);
        axpy_into(&mut st.tmp, &y, step, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]);
        generator.apply(t + step, &st.tmp, k6);
        axpy_into(&mut st.y_new, &y, step, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        generator.apply(t + step, &st.y_new, k7);

        let mut err = 0.0;
        for i in 0..n {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
            let sc = contract.atol + contract.rtol * y[i].norm().max(st.y_new[i].norm());
            err += (e.norm() / sc).powi(2);
        }
        let err = (err / n.max(1) as f64).sqrt();

        if !err.is_finite() {
            h = step * 0.1;
            continue;
        }
        if err <= 1.0 {
            let t_new = if landing { target } else { t + step };
            if contract.dense_output {
                for i in 0..n {
                    let ydiff = st.y_new[i] - y[i];
                    let bspl = k1[i] * step - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - k7[i] * step - bspl;
                    rcont[4][i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * step;
                }
                while next < t_grid.len() && t_grid[next] <= t_new {
                    let theta = if t_new > t { (t_grid[next] - t) / (t_new - t) } else { 1.0 };
                    let theta1 = 1.0 - theta;
                    let v: Array1<C64> = (0..n)
                        .map(|i| {
                            rcont[0][i]
                                + (rcont[1][i]
                                    + (rcont[2][i] + (rcont[3][i] + rcont[4][i] * theta1) * theta) * theta1)
                                    * theta
                        })
                        .collect();
                    out.push(v);
                    next += 1;
                }
            }
            t = t_new;
            std::mem::swap(&mut y, &mut st.y_new);
            std::mem::swap(k1, k7);
            if !contract.dense_output && landing {
                out.push(Array1::from(y.clone()));
                next += 1;
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        let proposed = step * if err <= 1.0 { factor } else { factor.min(1.0) };
        h = if landing && err <= 1.0 { proposed.max(h) } else { proposed };
    }
    Ok(out)
}
