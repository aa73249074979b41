use ndarray::Array2;

use super::config::{PhysicalConfig, StarkForm};
use super::geometry::{shared_colors, BondTable, Lattice};
use super::{Color, SiteId, Species, TWO_PI};
use crate::error::{Error, Result};
use crate::numerics::{C64, ZERO};

/// Relative width of the resonance guard on perturbative denominators.
pub const RESONANCE_TOLERANCE: f64 = 1e-6;

/// `V = −C6/R⁶` in rad/μs for C6 in GHz·μm⁶ and R in μm.
pub fn vdw_interaction(c6_ghz_um6: f64, r_um: f64) -> Result<f64> {
    if !(r_um > 0.0) || !r_um.is_finite() {
        return Err(Error::Domain(format!("interatomic distance must be positive, got {r_um}")));
    }
    Ok(-c6_ghz_um6 * 1e3 * TWO_PI / r_um.powi(6))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserDrive {
    pub atom: SiteId,
    pub color: Color,
    /// Ω, rad/μs.
    pub rabi_magnitude: f64,
    pub phase: f64,
    /// Δ, rad/μs.
    pub detuning: f64,
}

/// Coefficient of σ⁺_j σ⁻_k mediated by one laser colour:
/// `|Ω_j Ω_k V / (4Δ(Δ+V))| · e^{i(φ_j − φ_k)}`.
///
/// Different colours give exactly zero.
pub fn hopping_amplitude(drive_j: &LaserDrive, drive_k: &LaserDrive, v_jk: f64) -> Result<C64> {
    if drive_j.color != drive_k.color {
        return Ok(ZERO);
    }
    let delta = drive_j.detuning;
    if delta == 0.0 {
        return Err(Error::Resonance { denominator: 0.0, detuning: delta });
    }
    let denom = delta + v_jk;
    if denom.abs() < RESONANCE_TOLERANCE * delta.abs() {
        return Err(Error::Resonance { denominator: denom, detuning: delta });
    }
    let mag = (drive_j.rabi_magnitude * drive_k.rabi_magnitude * v_jk / (4.0 * delta * denom)).abs();
    Ok(C64::from_polar(mag, drive_j.phase - drive_k.phase))
}

/// Reduces an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let pi = std::f64::consts::PI;
    let mut y = x.rem_euclid(TWO_PI);
    if y > pi {
        y -= TWO_PI;
    }
    y
}

/// Gauge flux of one triangle from its six laser phases, given in the order
/// `[φ^a_I, φ^b_I, φ^b_II, φ^c_II, φ^c_III, φ^a_III]`.
pub fn plaquette_flux(phases: [f64; 6]) -> f64 {
    let [a1, b1, b2, c2, c3, a3] = phases;
    wrap_angle((a1 - b1) + (b2 - c2) + (c3 - a3))
}

/// Light shift of atom `j`:
/// `Σ_Θ |Ω^j_Θ|²/(4Δ^j_Θ) − Σ_{k≠j,Θ} |Ω^k_Θ|²/D_{jk}` where `D` is
/// `4(Δ^k_Θ + V^{jk})` or `4Δ^k_Θ + V^{jk}` depending on `form`.
pub fn stark_shift(
    j: usize,
    drives: &[Vec<LaserDrive>],
    interactions: &Array2<f64>,
    form: StarkForm,
) -> Result<f64> {
    let guard = |den: f64, det: f64| -> Result<f64> {
        if det == 0.0 || den.abs() < RESONANCE_TOLERANCE * (4.0 * det).abs() {
            Err(Error::Resonance { denominator: den, detuning: det })
        } else {
            Ok(den)
        }
    };
    let mut mu = 0.0;
    for d in &drives[j] {
        let den = guard(4.0 * d.detuning, d.detuning)?;
        mu += d.rabi_magnitude.powi(2) / den;
    }
    for (k, dk) in drives.iter().enumerate() {
        if k == j {
            continue;
        }
        let v = interactions[[j, k]];
        for d in dk {
            let den = match form {
                StarkForm::SecondOrder => 4.0 * (d.detuning + v),
                StarkForm::Literal => 4.0 * d.detuning + v,
            };
            mu -= d.rabi_magnitude.powi(2) / guard(den, d.detuning)?;
        }
    }
    Ok(mu)
}

/// Per-cell offsets added to φ^c_III (phase disorder). Empty means none.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseOffsets<'a>(pub &'a [f64]);

impl PhaseOffsets<'_> {
    fn offset(&self, site: SiteId, color: Color) -> f64 {
        if site.species == Species::C && color == Color::III {
            self.0.get(site.cell).copied().unwrap_or(0.0)
        } else {
            0.0
        }
    }
}

impl PhysicalConfig {
    pub fn drive(&self, site: SiteId, color: Color, offsets: PhaseOffsets<'_>) -> LaserDrive {
        let l = self.laser(color);
        let base = self.phase(site.species, color);
        let off = offsets.offset(site, color);
        LaserDrive {
            atom: site,
            color,
            rabi_magnitude: l.rabi,
            phase: if off == 0.0 { base } else { base + off },
            detuning: l.detuning,
        }
    }

    pub fn drives_of(&self, site: SiteId, offsets: PhaseOffsets<'_>) -> Vec<LaserDrive> {
        site.species.colors().iter().map(|&c| self.drive(site, c, offsets)).collect()
    }

    /// Flux through the a–b–c triangle of cell `cell`.
    pub fn plaquette_flux(&self, cell: usize, offsets: PhaseOffsets<'_>) -> f64 {
        let p = |s, c| self.drive(SiteId::new(cell, s), c, offsets).phase;
        use Color::*;
        use Species::*;
        plaquette_flux([p(A, I), p(B, I), p(B, II), p(C, II), p(C, III), p(A, III)])
    }
}

/// Coupling between two atoms summed over their shared colours.
pub fn pair_coupling(
    config: &PhysicalConfig,
    sj: SiteId,
    sk: SiteId,
    distance: f64,
    offsets: PhaseOffsets<'_>,
) -> Result<C64> {
    let v = vdw_interaction(config.c6, distance)?;
    let mut total = ZERO;
    for color in shared_colors(sj.species, sk.species) {
        let dj = config.drive(sj, color, offsets);
        let dk = config.drive(sk, color, offsets);
        total += hopping_amplitude(&dj, &dk, v)?;
    }
    Ok(total)
}

/// Single-excitation hopping matrix `K[j][k]` (coefficient of σ⁺_jσ⁻_k)
/// over the retained bonds. `bond_deltas`, when non-empty, holds one length
/// change per bond in table order.
pub fn hopping_matrix(
    config: &PhysicalConfig,
    lattice: &Lattice,
    bonds: &BondTable,
    bond_deltas: &[f64],
    offsets: PhaseOffsets<'_>,
) -> Result<Array2<C64>> {
    if !bond_deltas.is_empty() && bond_deltas.len() != bonds.len() {
        return Err(Error::Domain(format!(
            "{} bond displacements for {} bonds",
            bond_deltas.len(),
            bonds.len()
        )));
    }
    let n = lattice.len();
    let mut k = Array2::zeros((n, n));
    for (idx, b) in bonds.bonds.iter().enumerate() {
        let d = match bond_deltas.get(idx) {
            Some(&dr) if dr != 0.0 => b.distance + dr,
            _ => b.distance,
        };
        if !(d > 0.0) {
            return Err(Error::Domain(format!("bond {idx} has non-positive length {d}")));
        }
        let (si, sj) = (lattice.sites[b.i], lattice.sites[b.j]);
        k[[b.i, b.j]] += pair_coupling(config, si, sj, d, offsets)?;
        k[[b.j, b.i]] += pair_coupling(config, sj, si, d, offsets)?;
    }
    Ok(k)
}

/// Bare single-bond amplitudes of the reference cell, oriented as
/// `K[a][b]`, `K[b][c]`, `K[c][a]`, `K[b_n][a_{n+1}]`, `K[c_n][a_{n+1}]`,
/// `K[b_n][c_{n+1}]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BareCouplings {
    pub j_ab: C64,
    pub j_bc: C64,
    pub j_ca: C64,
    pub j_inter: C64,
    pub h1: C64,
    pub h2: C64,
}

impl BareCouplings {
    /// Reads the amplitudes around cell 0 of an open chain at the nominal
    /// distances.
    pub fn from_config(config: &PhysicalConfig) -> Result<Self> {
        let lat = super::chain_lattice(2, config.r1, config.r2);
        let k = |i: usize, j: usize| pair_coupling(config, lat.sites[i], lat.sites[j], lat.distance(i, j), PhaseOffsets::default());
        // a0 b0 c0 a1 b1 c1
        Ok(Self {
            j_ab: k(0, 1)?,
            j_bc: k(1, 2)?,
            j_ca: k(2, 0)?,
            j_inter: k(1, 3)?,
            h1: k(2, 3)?,
            h2: k(1, 5)?,
        })
    }
}

/// Bare amplitudes together with the eliminated non-reciprocal couplings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingSet {
    pub bare: BareCouplings,
    /// `(J_L − J_R)/2`; real at Φ = ±π/2.
    pub j1: C64,
    /// `(G_R − G_L)/2`.
    pub j2: C64,
    pub nh: crate::dissipation::NhCouplings,
}

impl CouplingSet {
    pub fn from_config(config: &PhysicalConfig) -> Result<Self> {
        let bare = BareCouplings::from_config(config)?;
        let seg = crate::dissipation::SegmentCouplings::uniform(&bare);
        let nh = crate::dissipation::adiabatic_eliminate(
            &seg,
            config.gamma_aux + config.gamma_c,
            config.gamma_data,
            config.min_elimination_ratio,
        )?;
        Ok(Self { bare, j1: (nh.j_l - nh.j_r) * 0.5, j2: (nh.g_r - nh.g_l) * 0.5, nh })
    }

    /// `G_L G_R > J_L J_R` (compared on real parts).
    pub fn is_nontrivial(&self) -> bool {
        (self.nh.g_l * self.nh.g_r).re > (self.nh.j_l * self.nh.j_r).re
    }
}

/// Strongest coupling the cutoff discards against the weakest one it keeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffReport {
    pub weakest_retained: f64,
    pub strongest_dropped: f64,
    pub dropped_pair: (SiteId, SiteId),
    pub dropped_distance: f64,
}

impl CutoffReport {
    pub fn ratio(&self) -> f64 {
        self.strongest_dropped / self.weakest_retained
    }
}

pub fn cutoff_report(config: &PhysicalConfig, lattice: &Lattice, bonds: &BondTable) -> Result<CutoffReport> {
    let mut weakest = f64::INFINITY;
    for b in &bonds.bonds {
        let j = pair_coupling(config, lattice.sites[b.i], lattice.sites[b.j], b.distance, PhaseOffsets::default())?;
        weakest = weakest.min(j.norm());
    }
    let mut kept = vec![false; lattice.len() * lattice.len()];
    for b in &bonds.bonds {
        kept[b.i * lattice.len() + b.j] = true;
    }
    let mut strongest = (0.0, (lattice.sites[0], lattice.sites[0]), 0.0);
    for i in 0..lattice.len() {
        for j in i + 1..lattice.len() {
            if kept[i * lattice.len() + j] {
                continue;
            }
            let d = lattice.distance(i, j);
            let c = pair_coupling(config, lattice.sites[i], lattice.sites[j], d, PhaseOffsets::default())?.norm();
            if c > strongest.0 {
                strongest = (c, (lattice.sites[i], lattice.sites[j]), d);
            }
        }
    }
    Ok(CutoffReport {
        weakest_retained: weakest,
        strongest_dropped: strongest.0,
        dropped_pair: strongest.1,
        dropped_distance: strongest.2,
    })
}
