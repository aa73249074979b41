//! Localization and topology diagnostics: IPR, polarization, (m)IPR
//! differences and the real-space winding number.

use ndarray::{Array2, ArrayView1};

use crate::chain::{chiral_residual, eigensolve_matrix, ComplexSpectrum};
use crate::error::{Error, Result};
use crate::numerics::{conj_transpose, C64, ONE, ZERO};

/// Largest tolerated |S1 H S1 + H| before the winding number is refused.
pub const CHIRAL_TOLERANCE: f64 = 1e-9;

fn norm_sq(psi: ArrayView1<C64>) -> Result<f64> {
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::Domain("state has zero or non-finite norm".into()));
    }
    Ok(n)
}

/// `Σ|ψ_j|⁴ / (Σ|ψ_j|²)²`.
pub fn ipr(psi: ArrayView1<C64>) -> Result<f64> {
    let n = norm_sq(psi)?;
    Ok(psi.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() / (n * n))
}

/// `sgn Σ_j (j − L/2 − δ)|ψ_j|` with j counted from 1; −1 means the weight
/// sits on the left half. A vanishing sum is assigned `−sgn δ`.
pub fn polarization(psi: ArrayView1<C64>, delta: f64) -> Result<f64> {
    norm_sq(psi)?;
    let half = psi.len() as f64 / 2.0;
    let s: f64 = psi
        .iter()
        .enumerate()
        .map(|(j, z)| ((j + 1) as f64 - half - delta) * z.norm())
        .sum();
    // An exact zero counts as left-localized for δ ≥ 0.
    Ok(if s > 0.0 || (s == 0.0 && delta < 0.0) { 1.0 } else { -1.0 })
}

/// `P·IPR`.
pub fn dipr(psi: ArrayView1<C64>, delta: f64) -> Result<f64> {
    Ok(polarization(psi, delta)? * ipr(psi)?)
}

/// Mean of `P·IPR` over the columns of `states`.
pub fn dmipr(states: &Array2<C64>, delta: f64) -> Result<f64> {
    let m = states.ncols();
    if m == 0 {
        return Err(Error::Domain("no states".into()));
    }
    let mut acc = 0.0;
    for col in states.columns() {
        acc += dipr(col, delta)?;
    }
    Ok(acc / m as f64)
}

#[derive(Debug, Clone)]
pub struct LocalizationReport {
    pub ipr: Vec<f64>,
    pub polarization: Vec<f64>,
    pub dipr: Vec<f64>,
    pub dmipr: f64,
}

impl LocalizationReport {
    pub fn new(spec: &ComplexSpectrum, delta: f64) -> Result<Self> {
        let mut ipr_v = Vec::with_capacity(spec.len());
        let mut pol_v = Vec::with_capacity(spec.len());
        for col in spec.right.columns() {
            ipr_v.push(ipr(col)?);
            pol_v.push(polarization(col, delta)?);
        }
        let dipr: Vec<f64> = ipr_v.iter().zip(&pol_v).map(|(a, b)| a * b).collect();
        let dmipr = dipr.iter().sum::<f64>() / dipr.len() as f64;
        Ok(Self { ipr: ipr_v, polarization: pol_v, dipr, dmipr })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingValue {
    pub nu: f64,
    /// Sites inside the trace window.
    pub window_sites: usize,
}

/// Real-space winding number of a chiral chain.
///
/// `ν = (1/L') Σ_{j ∈ window} (S1 Q [Q, X])_{jj}` with Q = I − 2P built from
/// the biorthogonal projector onto the lower half of the spectrum (sorted by
/// Re E, then Im E), X the unit-cell position and L' the sites left after
/// trimming `cutoff_cells` cells from each end.
pub fn winding_number(h: &Array2<C64>, cutoff_cells: usize) -> Result<WindingValue> {
    let resid = chiral_residual(h);
    if resid > CHIRAL_TOLERANCE {
        return Err(Error::ChiralViolation(resid));
    }
    let spec = eigensolve_matrix(h)?;
    winding_from_spectrum(&spec, cutoff_cells)
}

pub fn winding_from_spectrum(spec: &ComplexSpectrum, cutoff_cells: usize) -> Result<WindingValue> {
    let l = spec.len();
    if !l.is_multiple_of(2) || l < 2 {
        return Err(Error::Domain(format!("winding number needs an even site count, got {l}")));
    }
    let lo = 2 * cutoff_cells;
    if 2 * lo >= l {
        return Err(Error::Domain(format!("cutoff of {cutoff_cells} cells leaves no sites out of {l}")));
    }
    let half = l / 2;
    let (a, b) = (spec.values[half - 1], spec.values[half]);
    if a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits() {
        return Err(Error::Degenerate(format!("occupied/empty split is degenerate at E = {a}")));
    }
    let occ_r = spec.right.slice(ndarray::s![.., ..half]);
    let occ_l = spec.left.slice(ndarray::s![.., ..half]);
    let p = occ_r.dot(&conj_transpose(&occ_l.to_owned()));
    let q = Array2::from_shape_fn((l, l), |(i, j)| {
        let d = if i == j { ONE } else { ZERO };
        d - p[[i, j]] * 2.0
    });
    // [Q, X]_{kj} = Q_kj (x_j − x_k).
    let cell = |i: usize| (i / 2) as f64;
    let sign = |i: usize| if i.is_multiple_of(2) { 1.0 } else { -1.0 };
    let hi = l - lo;
    let mut acc = ZERO;
    for j in lo..hi {
        let mut row = ZERO;
        for k in 0..l {
            row += q[[j, k]] * q[[k, j]] * (cell(j) - cell(k));
        }
        acc += row * sign(j);
    }
    let window_sites = hi - lo;
    Ok(WindingValue { nu: acc.re / window_sites as f64, window_sites })
}

/// Ensemble statistics over realization values; failed realizations are
/// excluded and counted.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WindingResult {
    pub values: Vec<f64>,
    pub nu: f64,
    pub one_minus_nu: f64,
    pub std_error: f64,
    pub failures: usize,
}

impl WindingResult {
    pub fn from_values(results: impl IntoIterator<Item = Result<f64>>) -> Result<Self> {
        let mut values = Vec::new();
        let mut failures = 0;
        for r in results {
            match r {
                Ok(v) => values.push(v),
                Err(e) => {
                    log::warn!("winding realization excluded: {e}");
                    failures += 1;
                }
            }
        }
        if values.is_empty() {
            return Err(Error::Domain(format!("all {failures} realizations failed")));
        }
        let (nu, std_error) = mean_and_error(&values);
        Ok(Self { one_minus_nu: 1.0 - nu, nu, std_error, values, failures })
    }
}

pub fn winding_ensemble(hamiltonians: &[Array2<C64>], cutoff_cells: usize) -> Result<WindingResult> {
    if hamiltonians.is_empty() {
        return Err(Error::Domain("empty ensemble".into()));
    }
    WindingResult::from_values(hamiltonians.iter().map(|h| winding_number(h, cutoff_cells).map(|w| w.nu)))
}

/// Sample mean and standard error (n − 1 normalization; zero for one sample).
pub fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
