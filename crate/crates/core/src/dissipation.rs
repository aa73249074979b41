//! Engineered decay: the three-level drain, the dissipative six-atom
//! segment and adiabatic elimination of the auxiliary atoms.

use ndarray::{s, Array2};

use crate::error::{Error, Result};
use crate::microscopic::{compare_trajectories, PopulationTrajectory, SixAtomSystem, TrajectoryComparison};
use crate::model::{BareCouplings, PhysicalConfig};
use crate::numerics::{
    eig_general, eig_pair, integrate_linear, max_abs, vectorize_superoperator, IntegratorContract,
    JumpOperator, LuDecomposition, C64, I, ONE, ZERO,
};

// ---------------------------------------------------------------------------
// Three-level drain |g⟩, |p⟩, |r⟩.

pub const LEVEL_G: usize = 0;
pub const LEVEL_P: usize = 1;
pub const LEVEL_R: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeLevelModel {
    /// Ω_p, r↔p drive.
    pub omega_p: f64,
    /// Γ, p→g decay.
    pub gamma: f64,
    /// Residual Rydberg decay; recorded, not part of the generator.
    pub gamma_c: f64,
}

impl ThreeLevelModel {
    pub fn new(omega_p: f64, gamma: f64) -> Result<Self> {
        if !(omega_p >= 0.0 && gamma >= 0.0) {
            return Err(Error::Domain(format!("Ω_p = {omega_p} and Γ = {gamma} must be non-negative")));
        }
        Ok(Self { omega_p, gamma, gamma_c: 0.0 })
    }

    pub fn hamiltonian(&self) -> Array2<C64> {
        let mut h = Array2::zeros((3, 3));
        h[[LEVEL_P, LEVEL_R]] = C64::new(0.5 * self.omega_p, 0.0);
        h[[LEVEL_R, LEVEL_P]] = C64::new(0.5 * self.omega_p, 0.0);
        h
    }

    pub fn jump(&self) -> JumpOperator {
        let mut l = Array2::zeros((3, 3));
        l[[LEVEL_G, LEVEL_P]] = ONE;
        JumpOperator::new(self.gamma, l)
    }
}

/// 9×9 generator acting on row-stacked ρ (`ρ[i][j]` at `3i + j`).
pub fn build_liouvillian(model: &ThreeLevelModel) -> Array2<C64> {
    vectorize_superoperator(&model.hamiltonian(), &[model.jump()]).expect("3-level model is well formed")
}

/// `Re[(Γ − κ)/2]` with `κ = √(Γ² − 4Ω_p²)`; exactly Γ/2 once Ω_p ≥ Γ/2.
pub fn gap_analytic(model: &ThreeLevelModel) -> f64 {
    let (g, w) = (model.gamma, model.omega_p);
    if 2.0 * w >= g {
        return 0.5 * g;
    }
    let kappa = (g * g - 4.0 * w * w).sqrt();
    // (Γ − κ)/2 written without cancellation.
    2.0 * w * w / (g + kappa)
}

/// Indices of the vectorized states reachable from coherences and
/// populations among `seeds`.
fn reachable_sector(l: &Array2<C64>, d: usize, seeds: &[usize]) -> Vec<usize> {
    let n = l.nrows();
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for &i in seeds {
        for &j in seeds {
            let k = i * d + j;
            if !seen[k] {
                seen[k] = true;
                stack.push(k);
            }
        }
    }
    while let Some(col) = stack.pop() {
        for row in 0..n {
            if !seen[row] && l[[row, col]] != ZERO {
                seen[row] = true;
                stack.push(row);
            }
        }
    }
    (0..n).filter(|&k| seen[k]).collect()
}

/// Averages eigenvalues that lie within `tol` of each other; a defective
/// (exceptional-point) cluster splits by ~ε^{1/k} while its mean stays exact.
fn cluster_means(values: &[C64], tol: f64) -> Vec<C64> {
    let mut remaining: Vec<C64> = values.to_vec();
    let mut out = Vec::new();
    while let Some(seed) = remaining.pop() {
        let mut cluster = vec![seed];
        let mut grew = true;
        while grew {
            grew = false;
            let mut i = 0;
            while i < remaining.len() {
                if cluster.iter().any(|c| (c - remaining[i]).norm() <= tol) {
                    cluster.push(remaining.swap_remove(i));
                    grew = true;
                } else {
                    i += 1;
                }
            }
        }
        let mean = cluster.iter().sum::<C64>() / cluster.len() as f64;
        out.extend(std::iter::repeat_n(mean, cluster.len()));
    }
    out
}

/// Slowest nonzero relaxation rate of `l` restricted to the sector reached
/// from the levels in `driven`. More than one zero mode means a dark state
/// and gap 0.
pub fn gap_numeric(l: &Array2<C64>, driven: &[usize]) -> Result<f64> {
    let n = l.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || l.ncols() != n {
        return Err(Error::InvalidGenerator(format!("{n}×{} is not a superoperator shape", l.ncols())));
    }
    if driven.iter().any(|&i| i >= d) {
        return Err(Error::InvalidGenerator("driven level out of range".into()));
    }
    let scale = max_abs(l);
    if scale == 0.0 {
        return Err(Error::InvalidGenerator("zero generator has no relaxation".into()));
    }
    let sector = reachable_sector(l, d, driven);
    let sub = Array2::from_shape_fn((sector.len(), sector.len()), |(i, j)| l[[sector[i], sector[j]]]);
    let values = cluster_means(&eig_general(&sub)?.values, 1e-4 * scale);
    let zero_tol = 1e-10 * scale;
    let zeros = values.iter().filter(|v| v.norm() <= zero_tol).count();
    if zeros == 0 {
        return Err(Error::InvalidGenerator("no stationary mode in the driven sector".into()));
    }
    if zeros > 1 {
        return Ok(0.0);
    }
    Ok(values
        .iter()
        .filter(|v| v.norm() > zero_tol)
        .map(|v| v.re.abs())
        .fold(f64::INFINITY, f64::min))
}

impl ThreeLevelModel {
    pub fn gap_numeric(&self) -> Result<f64> {
        gap_numeric(&build_liouvillian(self), &[LEVEL_P, LEVEL_R])
    }
}

#[derive(Debug, Clone)]
pub struct LiouvillianSpectrum {
    pub eigenvalues: Vec<C64>,
    pub gap: f64,
    pub steady_state: Option<Array2<C64>>,
    /// Right eigenmatrices R_i (unvectorized).
    pub right: Vec<Array2<C64>>,
    /// Left eigenmatrices L_i, when the generator is diagonalizable.
    pub left: Option<Vec<Array2<C64>>>,
    /// Overlaps a_i = Tr(L_i† ρ0), when left vectors exist.
    pub weights: Option<Vec<C64>>,
}

fn unvec(v: ndarray::ArrayView1<C64>, d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |(i, j)| v[i * d + j])
}

/// Stationary state from `L v = 0` with the trace row swapped in.
pub fn steady_state(l: &Array2<C64>) -> Result<Array2<C64>> {
    let n = l.nrows();
    let d = (n as f64).sqrt().round() as usize;
    let mut a = l.clone();
    let mut rhs = vec![ZERO; n];
    for j in 0..n {
        a[[0, j]] = if j % (d + 1) == 0 { ONE } else { ZERO };
    }
    rhs[0] = ONE;
    let v = LuDecomposition::new(&a)?.solve(&rhs);
    Ok(unvec(v.view(), d))
}

impl LiouvillianSpectrum {
    pub fn compute(model: &ThreeLevelModel, rho0: Option<&Array2<C64>>) -> Result<Self> {
        let l = build_liouvillian(model);
        let gap = model.gap_numeric()?;
        let eig = eig_general(&l)?;
        let right = (0..9).map(|k| unvec(eig.right.column(k), 3)).collect();
        let (left, weights) = match eig_pair(&l) {
            Ok(bi) => {
                let left: Vec<Array2<C64>> = (0..9).map(|k| unvec(bi.left.column(k), 3)).collect();
                let weights = rho0.map(|r| {
                    left.iter()
                        .map(|lm| lm.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum())
                        .collect()
                });
                (Some(left), weights)
            }
            Err(_) => (None, None),
        };
        Ok(Self { eigenvalues: eig.values, gap, steady_state: steady_state(&l).ok(), right, left, weights })
    }
}

// ---------------------------------------------------------------------------
// Six-atom dissipative segment c_{n−1}, a_n, b_n, c_n, a_{n+1}, c_{n+1}.

pub const SEG_C_PREV: usize = 0;
pub const SEG_A: usize = 1;
pub const SEG_B: usize = 2;
pub const SEG_C: usize = 3;
pub const SEG_A_NEXT: usize = 4;
pub const SEG_C_NEXT: usize = 5;
const AUX: [usize; 3] = [SEG_C_PREV, SEG_C, SEG_C_NEXT];
const DATA: [usize; 3] = [SEG_A, SEG_B, SEG_A_NEXT];

/// Hopping amplitudes of one segment, oriented as `K[x][y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentCouplings {
    /// K[c_{n−1}][a_n]
    pub h1_prev: C64,
    pub j_ab: C64,
    pub j_bc: C64,
    pub j_ca: C64,
    /// K[b_n][a_{n+1}]
    pub j_inter: C64,
    /// K[c_n][a_{n+1}]
    pub h1: C64,
    /// K[b_n][c_{n+1}]
    pub h2: C64,
    /// K[c_{n+1}][a_{n+1}]
    pub j_ca_next: C64,
}

impl SegmentCouplings {
    pub fn uniform(b: &BareCouplings) -> Self {
        Self {
            h1_prev: b.h1,
            j_ab: b.j_ab,
            j_bc: b.j_bc,
            j_ca: b.j_ca,
            j_inter: b.j_inter,
            h1: b.h1,
            h2: b.h2,
            j_ca_next: b.j_ca,
        }
    }

    pub fn zero() -> Self {
        Self {
            h1_prev: ZERO,
            j_ab: ZERO,
            j_bc: ZERO,
            j_ca: ZERO,
            j_inter: ZERO,
            h1: ZERO,
            h2: ZERO,
            j_ca_next: ZERO,
        }
    }

    /// Reads a segment out of a chain hopping matrix. `idx` lists the chain
    /// indices of the six segment atoms; missing atoms contribute nothing.
    pub fn from_hopping(k: &Array2<C64>, idx: [Option<usize>; 6]) -> Self {
        let get = |x: usize, y: usize| match (idx[x], idx[y]) {
            (Some(i), Some(j)) => k[[i, j]],
            _ => ZERO,
        };
        Self {
            h1_prev: get(SEG_C_PREV, SEG_A),
            j_ab: get(SEG_A, SEG_B),
            j_bc: get(SEG_B, SEG_C),
            j_ca: get(SEG_C, SEG_A),
            j_inter: get(SEG_B, SEG_A_NEXT),
            h1: get(SEG_C, SEG_A_NEXT),
            h2: get(SEG_B, SEG_C_NEXT),
            j_ca_next: get(SEG_C_NEXT, SEG_A_NEXT),
        }
    }

    /// Hermitian 6×6 hopping matrix in segment order.
    pub fn hopping(&self) -> Array2<C64> {
        let mut k = Array2::zeros((6, 6));
        let mut set = |x: usize, y: usize, v: C64| {
            k[[x, y]] = v;
            k[[y, x]] = v.conj();
        };
        set(SEG_C_PREV, SEG_A, self.h1_prev);
        set(SEG_A, SEG_B, self.j_ab);
        set(SEG_B, SEG_C, self.j_bc);
        set(SEG_C, SEG_A, self.j_ca);
        set(SEG_B, SEG_A_NEXT, self.j_inter);
        set(SEG_C, SEG_A_NEXT, self.h1);
        set(SEG_B, SEG_C_NEXT, self.h2);
        set(SEG_C_NEXT, SEG_A_NEXT, self.j_ca_next);
        k
    }

    fn max_aux_coupling(&self) -> f64 {
        [self.h1_prev, self.j_bc, self.j_ca, self.h1, self.h2, self.j_ca_next]
            .iter()
            .fold(0.0f64, |m, z| m.max(z.norm()))
    }
}

/// Rates and optional light shifts of the dissipative segment.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentModel {
    pub couplings: SegmentCouplings,
    /// Γ on the auxiliary atoms.
    pub gamma_aux: f64,
    /// γ on the data atoms.
    pub gamma_data: f64,
    /// Bare auxiliary Rydberg decay, added to Γ when nonzero.
    pub gamma_c: f64,
    /// Diagonal light shifts in segment order, when kept.
    pub stark: Option<[f64; 6]>,
}

impl SegmentModel {
    pub fn from_config(config: &PhysicalConfig) -> Result<Self> {
        let couplings = SegmentCouplings::uniform(&BareCouplings::from_config(config)?);
        let stark = if config.stark_in_dissipative {
            let mu = SixAtomSystem::from_config(config)?.stark_shifts()?;
            Some([mu[0], mu[1], mu[2], mu[3], mu[4], mu[5]])
        } else {
            None
        };
        Ok(Self { couplings, gamma_aux: config.gamma_aux, gamma_data: config.gamma_data, gamma_c: config.gamma_c, stark })
    }

    fn hamiltonian(&self) -> Array2<C64> {
        let mut h = self.couplings.hopping();
        if let Some(mu) = self.stark {
            for (i, m) in mu.iter().enumerate() {
                h[[i, i]] += *m;
            }
        }
        h
    }

    /// Amplitude decay rate of each segment atom.
    fn amplitude_decay(&self, site: usize) -> f64 {
        if AUX.contains(&site) {
            0.5 * (self.gamma_aux + self.gamma_c)
        } else {
            self.gamma_data
        }
    }

    /// Population jump rate per atom: twice the amplitude decay.
    pub fn jump_rates(&self) -> [f64; 6] {
        std::array::from_fn(|i| 2.0 * self.amplitude_decay(i))
    }

    /// Scale separation (Γ/2)/max(γ, |J| on auxiliary links).
    pub fn separation_ratio(&self) -> f64 {
        let slow = self.gamma_data.max(self.couplings.max_aux_coupling());
        if slow == 0.0 {
            f64::INFINITY
        } else {
            0.5 * (self.gamma_aux + self.gamma_c) / slow
        }
    }
}

/// `u̇ = M u` for the single-excitation amplitudes: `M = −iH − diag(decay)`
/// with Γ/2 on auxiliary and γ on data atoms.
pub fn amplitude_odes(model: &SegmentModel) -> Array2<C64> {
    let mut m = model.hamiltonian().mapv(|z| -I * z);
    for i in 0..6 {
        m[[i, i]] -= model.amplitude_decay(i);
    }
    m
}

/// Master-equation evolution of ρ on {vacuum, six atoms} (7 levels, vacuum
/// first) with one jump |vac⟩⟨x| per atom.
pub fn evolve_master_equation(
    model: &SegmentModel,
    rho0: &Array2<C64>,
    t_grid: &[f64],
    contract: &IntegratorContract,
) -> Result<PopulationTrajectory> {
    if rho0.dim() != (7, 7) {
        return Err(Error::Domain(format!("density matrix is {:?}, expected 7×7", rho0.dim())));
    }
    let mut h = Array2::zeros((7, 7));
    h.slice_mut(s![1.., 1..]).assign(&model.hamiltonian());
    let rates = model.jump_rates();
    let jumps: Vec<JumpOperator> = (0..6)
        .map(|i| {
            let mut l = Array2::zeros((7, 7));
            l[[0, i + 1]] = ONE;
            JumpOperator::new(rates[i], l)
        })
        .collect();
    let sup = vectorize_superoperator(&h, &jumps)?;
    let v0: Vec<C64> = rho0.iter().copied().collect();
    let states = integrate_linear(&sup, &v0, t_grid, contract)?;
    let labels = ["c_{n-1}", "a_n", "b_n", "c_n", "a_{n+1}", "c_{n+1}"].map(String::from).to_vec();
    Ok(PopulationTrajectory {
        times: t_grid.to_vec(),
        labels,
        populations: states.iter().map(|v| (1..7).map(|i| v[i * 7 + i].re).collect()).collect(),
        ground: Some(states.iter().map(|v| v[0].re).collect()),
    })
}

/// Non-reciprocal couplings of one cell after eliminating the auxiliary
/// atoms. `J_L = H_eff[b_n][a_n]`, `J_R = H_eff[a_n][b_n]`,
/// `G_L = H_eff[a_{n+1}][b_n]`, `G_R = H_eff[b_n][a_{n+1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NhCouplings {
    pub j_l: C64,
    pub j_r: C64,
    pub g_l: C64,
    pub g_r: C64,
    /// γ + 2(|J^ca|² + |h1|²)/Γ
    pub diag_decay_a: f64,
    /// γ + 2(|J^bc|² + |h2|²)/Γ
    pub diag_decay_b: f64,
    /// Same as `diag_decay_a` for a_{n+1}.
    pub diag_decay_a_next: f64,
    /// Residual energy shifts on (a_n, b_n, a_{n+1}) (zero without light shifts).
    pub diag_shift: [f64; 3],
}

/// Schur complement of the amplitude generator onto the data atoms:
/// `M_eff = M_dd − M_dc M_cc⁻¹ M_cd`, read back as `M_eff = −i H_eff − decay`.
pub fn adiabatic_eliminate(
    seg: &SegmentCouplings,
    gamma_aux: f64,
    gamma_data: f64,
    min_ratio: f64,
) -> Result<NhCouplings> {
    let model = SegmentModel { couplings: *seg, gamma_aux, gamma_data, gamma_c: 0.0, stark: None };
    eliminate_model(&model, min_ratio)
}

pub fn eliminate_model(model: &SegmentModel, min_ratio: f64) -> Result<NhCouplings> {
    let ratio = model.separation_ratio();
    if ratio < min_ratio {
        return Err(Error::EliminationInvalid { ratio, required: min_ratio });
    }
    let m = amplitude_odes(model);
    let pick = |rows: &[usize], cols: &[usize]| Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| m[[rows[i], cols[j]]]);
    let m_dd = pick(&DATA, &DATA);
    let m_dc = pick(&DATA, &AUX);
    let m_cd = pick(&AUX, &DATA);
    let inv = LuDecomposition::new(&pick(&AUX, &AUX))?.inverse();
    let eff = m_dd - m_dc.dot(&inv).dot(&m_cd);
    // H_eff = i (M_eff + decay) off the diagonal.
    let h = |x: usize, y: usize| I * eff[[x, y]];
    Ok(NhCouplings {
        j_l: h(1, 0),
        j_r: h(0, 1),
        g_l: h(2, 1),
        g_r: h(1, 2),
        diag_decay_a: -eff[[0, 0]].re,
        diag_decay_b: -eff[[1, 1]].re,
        diag_decay_a_next: -eff[[2, 2]].re,
        diag_shift: [-eff[[0, 0]].im, -eff[[1, 1]].im, -eff[[2, 2]].im],
    })
}

impl NhCouplings {
    /// Reduced generator on (a_n, b_n, a_{n+1}).
    pub fn eliminated_generator(&self) -> Array2<C64> {
        let mut m = Array2::zeros((3, 3));
        m[[0, 0]] = C64::new(-self.diag_decay_a, -self.diag_shift[0]);
        m[[1, 1]] = C64::new(-self.diag_decay_b, -self.diag_shift[1]);
        m[[2, 2]] = C64::new(-self.diag_decay_a_next, -self.diag_shift[2]);
        m[[1, 0]] = -I * self.j_l;
        m[[0, 1]] = -I * self.j_r;
        m[[2, 1]] = -I * self.g_l;
        m[[1, 2]] = -I * self.g_r;
        m
    }

    /// `G_L G_R > J_L J_R` on real parts.
    pub fn is_nontrivial(&self) -> bool {
        (self.g_l * self.g_r).re > (self.j_l * self.j_r).re
    }
}

#[derive(Debug, Clone)]
pub struct EliminationReport {
    pub master: PopulationTrajectory,
    pub reduced: PopulationTrajectory,
    pub comparison: TrajectoryComparison,
    pub separation_ratio: f64,
    pub max_trace_drift: f64,
}

/// Master equation against the eliminated three-site dynamics, both started
/// with one excitation on `initial` (a segment index of a data atom).
pub fn validate_elimination(
    model: &SegmentModel,
    initial: usize,
    t_grid: &[f64],
    contract: &IntegratorContract,
) -> Result<EliminationReport> {
    let slot = DATA
        .iter()
        .position(|&d| d == initial)
        .ok_or_else(|| Error::Domain(format!("segment site {initial} is not a data atom")))?;
    let mut rho0 = Array2::zeros((7, 7));
    rho0[[initial + 1, initial + 1]] = ONE;
    let full = evolve_master_equation(model, &rho0, t_grid, contract)?;
    let max_trace_drift = full.totals().iter().map(|t| (t - 1.0).abs()).fold(0.0, f64::max);
    let master = full.select(&["a_n", "b_n", "a_{n+1}"])?;

    let nh = eliminate_model(model, 0.0)?;
    let mut u0 = vec![ZERO; 3];
    u0[slot] = ONE;
    let states = integrate_linear(&nh.eliminated_generator(), &u0, t_grid, contract)?;
    let reduced = PopulationTrajectory {
        times: t_grid.to_vec(),
        labels: master.labels.clone(),
        populations: states.iter().map(|u| u.iter().map(|z| z.norm_sqr()).collect()).collect(),
        ground: None,
    };
    let comparison = compare_trajectories(&master, &reduced)?;
    Ok(EliminationReport { master, reduced, comparison, separation_ratio: model.separation_ratio(), max_trace_drift })
}

/// Relative distance between the eliminated spectrum and the three slowest
/// eigenvalues of the full amplitude generator.
pub fn elimination_spectral_error(model: &SegmentModel) -> Result<f64> {
    let full = eig_general(&amplitude_odes(model))?.values;
    let red = eig_general(&eliminate_model(model, 0.0)?.eliminated_generator())?.values;
    let mut slow = full.clone();
    slow.sort_by(|a, b| b.re.total_cmp(&a.re));
    slow.truncate(3);
    let mut worst = 0.0f64;
    for r in &red {
        let (best, _) = slow
            .iter()
            .map(|s| ((r - s).norm(), s))
            .fold((f64::INFINITY, ZERO), |acc, (d, s)| if d < acc.0 { (d, *s) } else { acc });
        let scale = slow.iter().map(|s| s.norm()).fold(0.0, f64::max);
        worst = worst.max(best / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    const GAMMA: f64 = 1.0 / 0.118;

    #[test]
    fn liouvillian_zero_and_trace_preserving() {
        let z = build_liouvillian(&ThreeLevelModel::new(0.0, 0.0).unwrap());
        assert_eq!(max_abs(&z), 0.0);
        let l = build_liouvillian(&ThreeLevelModel::new(1.3, GAMMA).unwrap());
        for col in 0..9 {
            let s = l[[0, col]] + l[[4, col]] + l[[8, col]];
            assert!(s.norm() < 1e-12);
        }
    }

    #[test]
    fn liouvillian_matches_hand_built_entries() {
        let (w, g) = (2.0, GAMMA);
        let l = build_liouvillian(&ThreeLevelModel::new(w, g).unwrap());
        let idx = |i: usize, j: usize| 3 * i + j;
        let mut want = Array2::<C64>::zeros((9, 9));
        // ρ̇ = −i[H, ρ] + Γ(|g⟩⟨p|ρ|p⟩⟨g| − ½{|p⟩⟨p|, ρ})
        for i in 0..3 {
            for j in 0..3 {
                let col = idx(i, j);
                // −i H ρ: H[p][r] = H[r][p] = w/2
                for k in 0..3 {
                    let hki = if (k, i) == (1, 2) || (k, i) == (2, 1) { 0.5 * w } else { 0.0 };
                    if hki != 0.0 {
                        want[[idx(k, j), col]] += -I * hki;
                    }
                    let hjk = if (j, k) == (1, 2) || (j, k) == (2, 1) { 0.5 * w } else { 0.0 };
                    if hjk != 0.0 {
                        want[[idx(i, k), col]] += I * hjk;
                    }
                }
                if i == 1 && j == 1 {
                    want[[idx(0, 0), col]] += c(g);
                }
                if i == 1 {
                    want[[col, col]] -= c(0.5 * g);
                }
                if j == 1 {
                    want[[col, col]] -= c(0.5 * g);
                }
            }
        }
        assert!(max_abs(&(&l - &want)) < 1e-14);
    }

    #[test]
    fn gap_examples() {
        let m = |r: f64| ThreeLevelModel::new(r * GAMMA, GAMMA).unwrap();
        assert_eq!(gap_analytic(&m(0.0)), 0.0);
        assert_eq!(gap_analytic(&m(0.5)), 0.5 * GAMMA);
        assert_eq!(gap_analytic(&m(3.0)), 0.5 * GAMMA);
        let small = gap_analytic(&m(0.05));
        let approx = (0.05 * GAMMA).powi(2) / GAMMA;
        assert!((small - approx).abs() / approx < 0.05);
        assert_eq!(m(0.0).gap_numeric().unwrap(), 0.0);
        let g1 = m(0.3).gap_numeric().unwrap();
        let g2 = ThreeLevelModel::new(0.6 * GAMMA, 2.0 * GAMMA).unwrap().gap_numeric().unwrap();
        assert!((g2 - 2.0 * g1).abs() < 1e-9 * GAMMA);
    }

    #[test]
    fn gap_numeric_matches_analytic_on_grid() {
        for i in 0..20 {
            let r = 0.05 + i as f64 * 0.1;
            let m = ThreeLevelModel::new(r * GAMMA, GAMMA).unwrap();
            let (a, n) = (gap_analytic(&m), m.gap_numeric().unwrap());
            assert!((a - n).abs() <= 1e-9 * GAMMA, "Ω_p/Γ = {r}: {a} vs {n}");
        }
    }

    #[test]
    fn gap_rejects_non_generators() {
        assert!(matches!(gap_numeric(&Array2::zeros((9, 9)), &[1, 2]), Err(Error::InvalidGenerator(_))));
        let mut bad = Array2::<C64>::zeros((9, 9));
        for i in 0..9 {
            bad[[i, i]] = c(-1.0);
        }
        assert!(matches!(gap_numeric(&bad, &[1, 2]), Err(Error::InvalidGenerator(_))));
        assert!(gap_numeric(&Array2::zeros((8, 8)), &[0]).is_err());
    }

    #[test]
    fn spectrum_invariants() {
        let m = ThreeLevelModel::new(0.3 * GAMMA, GAMMA).unwrap();
        let mut rho0 = Array2::zeros((3, 3));
        rho0[[LEVEL_R, LEVEL_R]] = ONE;
        let s = LiouvillianSpectrum::compute(&m, Some(&rho0)).unwrap();
        let zeros = s.eigenvalues.iter().filter(|v| v.norm() < 1e-10).count();
        assert_eq!(zeros, 1);
        assert!(s.eigenvalues.iter().all(|v| v.re <= 1e-12));
        let ss = s.steady_state.unwrap();
        assert!((ss[[0, 0]] - ONE).norm() < 1e-12);
        assert!(s.weights.is_some());
    }

    fn reference_segment() -> SegmentModel {
        SegmentModel::from_config(&PhysicalConfig::reference()).unwrap()
    }

    #[test]
    fn amplitude_generator_structure() {
        let mut model = reference_segment();
        let k = model.couplings.hopping();
        let m = amplitude_odes(&model);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!((m[[i, j]] - (-I * k[[i, j]])).norm() < 1e-15);
                }
            }
        }
        model.couplings = SegmentCouplings::zero();
        let m0 = amplitude_odes(&model);
        for i in 0..6 {
            let want = if AUX.contains(&i) { -0.5 * GAMMA } else { -1.0 / 104.0 };
            assert!((m0[[i, i]] - c(want)).norm() < 1e-12);
        }
    }

    #[test]
    fn anti_hermitian_part_matches_effective_hamiltonian() {
        let c0 = PhysicalConfig::reference();
        let mut model = reference_segment();
        model.gamma_aux = 0.0;
        model.gamma_data = 0.0;
        let m = amplitude_odes(&model);
        let h6 = SixAtomSystem::from_config(&c0).unwrap().hopping().unwrap();
        assert!(max_abs(&(&m - &h6.mapv(|z| -I * z))) < 1e-15);
    }

    #[test]
    fn elimination_reproduces_closed_form_at_half_pi() {
        let cs = crate::model::CouplingSet::from_config(&PhysicalConfig::reference()).unwrap();
        let b = cs.bare;
        let (jab, jbc, jca, ji, h1, h2) = (b.j_ab.norm(), b.j_bc.norm(), b.j_ca.norm(), b.j_inter.norm(), b.h1.norm(), b.h2.norm());
        let j1 = 2.0 * jbc * jca / GAMMA;
        let j2 = 2.0 * (jbc * h1 + jca * h2) / GAMMA;
        let nh = cs.nh;
        let close = |a: C64, x: f64| (a - c(x)).norm() <= 1e-14 * x;
        assert!(close(nh.j_l, jab + j1), "{}", nh.j_l);
        assert!(close(nh.j_r, jab - j1));
        assert!(close(nh.g_l, ji - j2));
        assert!(close(nh.g_r, ji + j2));
        assert!((j1 - 0.00387).abs() < 1e-5 && (j2 - 0.00138).abs() < 1e-5);
        assert!((nh.j_l + nh.j_r - c(2.0 * jab)).norm() < 1e-14);
        assert!(nh.is_nontrivial() && cs.is_nontrivial());
        let da = 1.0 / 104.0 + 2.0 * (jca * jca + h1 * h1) / GAMMA;
        let db = 1.0 / 104.0 + 2.0 * (jbc * jbc + h2 * h2) / GAMMA;
        assert!((nh.diag_decay_a - da).abs() < 1e-14);
        assert!((nh.diag_decay_b - db).abs() < 1e-14);
        assert!((nh.diag_decay_a - nh.diag_decay_b).abs() / nh.diag_decay_b < 0.1);
        assert!((cs.j1.re - j1).abs() < 1e-15 && (cs.j2.re - j2).abs() < 1e-15);
    }

    #[test]
    fn flux_reversal_swaps_directions() {
        let plus = crate::model::CouplingSet::from_config(&PhysicalConfig::reference()).unwrap().nh;
        let minus = crate::model::CouplingSet::from_config(&PhysicalConfig::reference().with_flux_reversed()).unwrap().nh;
        assert!((plus.j_l - minus.j_r).norm() < 1e-15);
        assert!((plus.j_r - minus.j_l).norm() < 1e-15);
        assert!((plus.g_l - minus.g_r).norm() < 1e-15);
        assert!((plus.g_r - minus.g_l).norm() < 1e-15);
    }

    #[test]
    fn elimination_limits() {
        let b = BareCouplings::from_config(&PhysicalConfig::reference()).unwrap();
        let mut seg = SegmentCouplings::uniform(&b);
        seg.j_bc = ZERO;
        seg.h1 = ZERO;
        seg.h1_prev = ZERO;
        seg.h2 = ZERO;
        let nh = adiabatic_eliminate(&seg, GAMMA, 0.0, 10.0).unwrap();
        assert_eq!(nh.j_l, nh.j_r);
        assert_eq!(nh.g_l, nh.g_r);
        let big = adiabatic_eliminate(&SegmentCouplings::uniform(&b), 1e12, 0.0, 10.0).unwrap();
        assert!((big.j_l - b.j_ab.conj()).norm() < 1e-12);
        assert!((big.g_r - b.j_inter).norm() < 1e-12);
        assert!(matches!(
            adiabatic_eliminate(&SegmentCouplings::uniform(&b), 0.5, 0.0, 10.0),
            Err(Error::EliminationInvalid { .. })
        ));
    }

    #[test]
    fn master_equation_trivial_cases() {
        let mut model = reference_segment();
        model.couplings = SegmentCouplings::zero();
        model.gamma_aux = 0.0;
        model.gamma_data = 0.0;
        let mut rho0 = Array2::zeros((7, 7));
        rho0[[2, 2]] = c(0.5);
        rho0[[0, 0]] = c(0.5);
        let grid = [0.0, 1.0, 2.0];
        let tr = evolve_master_equation(&model, &rho0, &grid, &IntegratorContract::default()).unwrap();
        for row in &tr.populations {
            assert!((row[1] - 0.5).abs() < 1e-14);
        }

        let mut model = reference_segment();
        model.couplings = SegmentCouplings::zero();
        let mut rho0 = Array2::zeros((7, 7));
        rho0[[SEG_C + 1, SEG_C + 1]] = ONE;
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        let tr = evolve_master_equation(&model, &rho0, &grid, &IntegratorContract::default()).unwrap();
        for (t, row) in grid.iter().zip(&tr.populations) {
            assert!((row[SEG_C] - (-GAMMA * t).exp()).abs() < 1e-8);
        }
        for tot in tr.totals() {
            assert!((tot - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn eliminated_dynamics_agree_in_the_reference_regime() {
        let model = reference_segment();
        let grid: Vec<f64> = (0..=300).map(|i| i as f64 * 0.01).collect();
        let rep = validate_elimination(&model, SEG_A, &grid, &IntegratorContract::default()).unwrap();
        assert!(rep.comparison.max_abs_deviation <= 0.05, "{}", rep.comparison.max_abs_deviation);
        assert!(rep.max_trace_drift < 1e-8);
        assert!(rep.separation_ratio > 10.0);
        assert!(elimination_spectral_error(&model).unwrap() <= 0.05);
    }

    #[test]
    fn slow_drain_breaks_elimination() {
        let mut model = reference_segment();
        model.gamma_aux = 0.4;
        assert!(model.separation_ratio() < 2.0);
        let grid: Vec<f64> = (0..=200).map(|i| i as f64 * 0.25).collect();
        let rep = validate_elimination(&model, SEG_A, &grid, &IntegratorContract::default()).unwrap();
        assert!(rep.comparison.max_abs_deviation > 0.05, "{}", rep.comparison.max_abs_deviation);
    }
}
