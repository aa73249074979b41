//! JSON configuration.
//!
//! Every physical key carries its unit in the name: `_um` (μm), `_us` (μs),
//! `_2pi_mhz` (frequency f with the stored angular value 2π·f rad/μs),
//! `_rad`, `_ghz_um6`. Missing keys fall back to the reference array.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Boundary, Color, Species, TWO_PI};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserParams {
    /// Rabi frequency Ω, rad/μs.
    pub rabi: f64,
    /// Detuning Δ, rad/μs.
    pub detuning: f64,
}

/// Which neighbour term of the second-order light shift to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StarkForm {
    /// `|Ω|²/(4Δ + V)`, with the blockade shift outside the factor 4.
    Literal,
    /// `|Ω|²/(4(Δ + V))`, the blockade-shifted light shift.
    #[default]
    SecondOrder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSettings {
    pub t_end: f64,
    pub n_points: usize,
    pub rtol: f64,
    pub atol: f64,
    /// Species of the central-cell atom that starts excited.
    pub initial: Species,
}

impl DynamicsSettings {
    pub fn time_grid(&self) -> Vec<f64> {
        let n = self.n_points;
        (0..n).map(|i| self.t_end * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSettings {
    pub n_realizations: usize,
    pub master_seed: u64,
    /// Half-width η of the phase noise, rad.
    pub phase_eta: f64,
    /// Half-width of the bond-length noise, μm.
    pub position_half_width: f64,
    /// Uniform offsets for the eigenvalue trajectory sweeps.
    pub phase_sweep: Vec<f64>,
    pub position_sweep: Vec<f64>,
    /// 1-based indices into the sorted spectrum.
    pub tracked_modes: Vec<usize>,
    /// Strength grids (half-widths) for the winding sweeps.
    pub phase_strengths: Vec<f64>,
    pub position_strengths: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalConfig {
    pub n_cells: usize,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r3_ring: f64,
    /// Overrides the boundary-dependent default cutoff when set.
    pub cutoff: Option<f64>,
    /// C6 in GHz·μm⁶, sign included.
    pub c6: f64,
    pub boundary: Boundary,
    pub lasers: [LaserParams; 3],
    /// Laser phases indexed `[species][color]`; entries for colours a species
    /// does not see are zero and unused.
    pub phases: [[f64; 3]; 3],
    /// Γ, decay of the auxiliary intermediate state, 1/μs.
    pub gamma_aux: f64,
    /// γ, Rydberg decay of the data atoms, 1/μs.
    pub gamma_data: f64,
    /// Bare Rydberg decay of the auxiliary atoms (kept at zero by default).
    pub gamma_c: f64,
    pub max_rabi_ratio: f64,
    pub min_elimination_ratio: f64,
    pub stark_form: StarkForm,
    pub stark_in_dissipative: bool,
    pub polarization_offset: f64,
    pub winding_cutoff_cells: usize,
    pub dynamics: DynamicsSettings,
    pub disorder: DisorderSettings,
    /// Ω_p/Γ grid for the gap scan.
    pub gap_scan: Vec<f64>,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self::reference()
    }
}

impl PhysicalConfig {
    /// The reference array: N = 20 cells, three-colour drive, φ^c_III = π/2.
    pub fn reference() -> Self {
        RawConfig::default().resolve().expect("reference configuration is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        raw.resolve()
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Self::from_json_str(&text)
    }

    pub fn laser(&self, color: Color) -> LaserParams {
        self.lasers[color.index()]
    }

    pub fn phase(&self, species: Species, color: Color) -> f64 {
        self.phases[species.index()][color.index()]
    }

    /// Bond-retention radius for the active boundary.
    pub fn cutoff_radius(&self) -> f64 {
        self.cutoff.unwrap_or(match self.boundary {
            Boundary::Obc => self.r3,
            Boundary::Pbc => self.r3_ring,
        })
    }

    pub fn n_sites(&self) -> usize {
        2 * self.n_cells
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn with_cells(mut self, n_cells: usize) -> Self {
        self.n_cells = n_cells;
        self
    }

    /// Negates every laser phase, reversing the plaquette flux.
    pub fn with_flux_reversed(mut self) -> Self {
        for row in self.phases.iter_mut() {
            for p in row.iter_mut() {
                *p = -*p;
            }
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        to_raw(self).resolve().map(|_| ())
    }

    /// Canonical JSON form (all keys, fixed order).
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&to_raw(self)).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_json().as_bytes());
        hex::encode(digest)
    }
}

// ---------------------------------------------------------------------------
// Serialized form.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawGeometry {
    n_cells: usize,
    r1_um: f64,
    r2_um: f64,
    r3_um: f64,
    r3_ring_um: f64,
    cutoff_um: Option<f64>,
    boundary: Boundary,
}

impl Default for RawGeometry {
    fn default() -> Self {
        Self {
            n_cells: 20,
            r1_um: 6.0,
            r2_um: 3.46,
            r3_um: 8.29,
            r3_ring_um: 8.61,
            cutoff_um: None,
            boundary: Boundary::Obc,
        }
    }
}

/// Missing fields (or a missing colour) fall back to the reference laser.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawLaser {
    rabi_2pi_mhz: Option<f64>,
    detuning_2pi_mhz: Option<f64>,
}

fn reference_laser(color: Color) -> (f64, f64) {
    match color {
        Color::I => (4.3, 51.3),
        Color::II => (4.65, 59.8),
        Color::III => (5.0, 68.4),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDecay {
    aux_lifetime_us: f64,
    data_lifetime_us: f64,
    /// `null` means no bare Rydberg decay on the auxiliary atoms.
    aux_rydberg_lifetime_us: Option<f64>,
}

impl Default for RawDecay {
    fn default() -> Self {
        Self { aux_lifetime_us: 0.118, data_lifetime_us: 104.0, aux_rydberg_lifetime_us: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawChecks {
    max_rabi_over_detuning: f64,
    min_elimination_ratio: f64,
}

impl Default for RawChecks {
    fn default() -> Self {
        Self { max_rabi_over_detuning: 0.15, min_elimination_ratio: 10.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawModel {
    stark_form: StarkForm,
    stark_in_dissipative: bool,
    polarization_offset_sites: f64,
    winding_cutoff_cells: usize,
}

impl Default for RawModel {
    fn default() -> Self {
        Self {
            stark_form: StarkForm::SecondOrder,
            stark_in_dissipative: false,
            polarization_offset_sites: 0.5,
            winding_cutoff_cells: 2,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDynamics {
    t_end_us: f64,
    n_points: usize,
    rtol: f64,
    atol: f64,
    initial_species: Species,
}

impl Default for RawDynamics {
    fn default() -> Self {
        Self { t_end_us: 3.0, n_points: 1500, rtol: 1e-8, atol: 1e-10, initial_species: Species::A }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawDisorder {
    n_realizations: usize,
    master_seed: u64,
    phase_eta_rad: f64,
    position_half_width_um: f64,
    phase_sweep_rad: Vec<f64>,
    position_sweep_um: Vec<f64>,
    tracked_modes: Vec<usize>,
    phase_strengths_rad: Vec<f64>,
    position_strengths_um: Vec<f64>,
}

impl Default for RawDisorder {
    fn default() -> Self {
        let half_pi = std::f64::consts::FRAC_PI_2;
        Self {
            n_realizations: 100,
            master_seed: 20_240_601,
            phase_eta_rad: 0.1 * half_pi,
            position_half_width_um: 0.1,
            phase_sweep_rad: (0..=20).map(|i| i as f64 * 0.05 * half_pi).collect(),
            position_sweep_um: (0..=20).map(|i| i as f64 * 0.005).collect(),
            tracked_modes: vec![1, 20, 21, 40],
            phase_strengths_rad: (0..=10).map(|i| i as f64 * 0.1 * half_pi).collect(),
            position_strengths_um: (0..=10).map(|i| i as f64 * 0.01).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawGapScan {
    omega_p_over_gamma: Vec<f64>,
}

impl Default for RawGapScan {
    fn default() -> Self {
        Self { omega_p_over_gamma: (0..=40).map(|i| i as f64 * 0.05).collect() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawConfig {
    geometry: RawGeometry,
    c6_ghz_um6: f64,
    lasers: BTreeMap<Color, RawLaser>,
    phases_rad: BTreeMap<Species, BTreeMap<Color, f64>>,
    decay: RawDecay,
    checks: RawChecks,
    model: RawModel,
    dynamics: RawDynamics,
    disorder: RawDisorder,
    gap_scan: RawGapScan,
}

impl Default for RawConfig {
    fn default() -> Self {
        let lasers = Color::ALL
            .iter()
            .map(|&c| {
                let (rabi, det) = reference_laser(c);
                (c, RawLaser { rabi_2pi_mhz: Some(rabi), detuning_2pi_mhz: Some(det) })
            })
            .collect();
        let phases_rad = BTreeMap::from([
            (Species::A, BTreeMap::from([(Color::I, 0.0), (Color::III, 0.0)])),
            (Species::B, BTreeMap::from([(Color::I, 0.0), (Color::II, 0.0)])),
            (
                Species::C,
                BTreeMap::from([(Color::II, 0.0), (Color::III, std::f64::consts::FRAC_PI_2)]),
            ),
        ]);
        Self {
            geometry: RawGeometry::default(),
            c6_ghz_um6: -863.0,
            lasers,
            phases_rad,
            decay: RawDecay::default(),
            checks: RawChecks::default(),
            model: RawModel::default(),
            dynamics: RawDynamics::default(),
            disorder: RawDisorder::default(),
            gap_scan: RawGapScan::default(),
        }
    }
}

fn positive(path: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(path, format!("must be a positive finite number, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v >= 0.0 {
        Ok(v)
    } else {
        Err(Error::config(path, format!("must be non-negative and finite, got {v}")))
    }
}

impl RawConfig {
    fn resolve(&self) -> Result<PhysicalConfig> {
        let g = &self.geometry;
        if g.n_cells == 0 {
            return Err(Error::config("geometry.n_cells", "must be at least 1"));
        }
        let r1 = positive("geometry.r1_um", g.r1_um)?;
        let r2 = positive("geometry.r2_um", g.r2_um)?;
        let r3 = positive("geometry.r3_um", g.r3_um)?;
        let r3_ring = positive("geometry.r3_ring_um", g.r3_ring_um)?;
        if !(r1 < r3 && r2 < r3) {
            return Err(Error::config("geometry.r3_um", "R1 and R2 must both be shorter than R3"));
        }
        if let Some(cut) = g.cutoff_um {
            positive("geometry.cutoff_um", cut)?;
        }
        if g.boundary == Boundary::Pbc && g.n_cells < 3 {
            return Err(Error::config("geometry.n_cells", "a ring needs at least 3 cells"));
        }
        if !(self.c6_ghz_um6.is_finite() && self.c6_ghz_um6 != 0.0) {
            return Err(Error::config("c6_ghz_um6", "must be finite and nonzero"));
        }

        let max_ratio = positive("checks.max_rabi_over_detuning", self.checks.max_rabi_over_detuning)?;
        let min_elim = positive("checks.min_elimination_ratio", self.checks.min_elimination_ratio)?;

        let mut lasers = [LaserParams { rabi: 0.0, detuning: 0.0 }; 3];
        for color in Color::ALL {
            let path = format!("lasers.{color:?}");
            let l = self.lasers.get(&color).copied().unwrap_or_default();
            let (ref_rabi, ref_det) = reference_laser(color);
            let rabi = non_negative(&format!("{path}.rabi_2pi_mhz"), l.rabi_2pi_mhz.unwrap_or(ref_rabi))?;
            let det = l.detuning_2pi_mhz.unwrap_or(ref_det);
            if !det.is_finite() || det == 0.0 {
                return Err(Error::config(format!("{path}.detuning_2pi_mhz"), "must be finite and nonzero"));
            }
            if rabi / det.abs() > max_ratio {
                return Err(Error::config(
                    format!("{path}.rabi_2pi_mhz"),
                    format!(
                        "|Ω/Δ| = {:.3} exceeds the large-detuning bound {max_ratio}",
                        rabi / det.abs()
                    ),
                ));
            }
            lasers[color.index()] = LaserParams { rabi: TWO_PI * rabi, detuning: TWO_PI * det };
        }

        let mut phases = [[0.0; 3]; 3];
        for (species, map) in &self.phases_rad {
            for (color, &phi) in map {
                let path = format!("phases_rad.{}.{color:?}", species.label());
                if !species.has_color(*color) {
                    return Err(Error::config(
                        path,
                        format!("species {} is not driven by colour {color:?}", species.label()),
                    ));
                }
                if !phi.is_finite() {
                    return Err(Error::config(path, "must be finite"));
                }
                phases[species.index()][color.index()] = phi;
            }
        }

        let d = &self.decay;
        let gamma_aux = 1.0 / positive("decay.aux_lifetime_us", d.aux_lifetime_us)?;
        let gamma_data = 1.0 / positive("decay.data_lifetime_us", d.data_lifetime_us)?;
        let gamma_c = match d.aux_rydberg_lifetime_us {
            Some(t) => 1.0 / positive("decay.aux_rydberg_lifetime_us", t)?,
            None => 0.0,
        };

        let m = &self.model;
        if !m.polarization_offset_sites.is_finite() {
            return Err(Error::config("model.polarization_offset_sites", "must be finite"));
        }

        let dy = &self.dynamics;
        positive("dynamics.t_end_us", dy.t_end_us)?;
        positive("dynamics.rtol", dy.rtol)?;
        positive("dynamics.atol", dy.atol)?;
        if dy.n_points < 2 {
            return Err(Error::config("dynamics.n_points", "need at least 2 output points"));
        }

        let ds = &self.disorder;
        if ds.n_realizations == 0 {
            return Err(Error::config("disorder.n_realizations", "must be at least 1"));
        }
        non_negative("disorder.phase_eta_rad", ds.phase_eta_rad)?;
        let half_min = 0.5 * r1.min(r2);
        let check_len = |path: &str, v: f64| -> Result<()> {
            non_negative(path, v)?;
            if v >= half_min {
                return Err(Error::config(path, format!("must stay below half the shortest distance ({half_min} μm)")));
            }
            Ok(())
        };
        check_len("disorder.position_half_width_um", ds.position_half_width_um)?;
        for (i, &v) in ds.position_sweep_um.iter().enumerate() {
            // Uniform sweep offsets may be signed.
            check_len(&format!("disorder.position_sweep_um[{i}]"), v.abs())?;
        }
        for (i, &v) in ds.position_strengths_um.iter().enumerate() {
            check_len(&format!("disorder.position_strengths_um[{i}]"), v)?;
        }
        for (i, &v) in ds.phase_sweep_rad.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::config(format!("disorder.phase_sweep_rad[{i}]"), "must be finite"));
            }
        }
        for (i, &v) in ds.phase_strengths_rad.iter().enumerate() {
            non_negative(&format!("disorder.phase_strengths_rad[{i}]"), v)?;
        }
        let l = 2 * g.n_cells;
        for (i, &k) in ds.tracked_modes.iter().enumerate() {
            if k == 0 || k > l {
                return Err(Error::config(
                    format!("disorder.tracked_modes[{i}]"),
                    format!("mode {k} outside 1..={l}"),
                ));
            }
        }
        for (i, &v) in self.gap_scan.omega_p_over_gamma.iter().enumerate() {
            non_negative(&format!("gap_scan.omega_p_over_gamma[{i}]"), v)?;
        }

        Ok(PhysicalConfig {
            n_cells: g.n_cells,
            r1,
            r2,
            r3,
            r3_ring,
            cutoff: g.cutoff_um,
            c6: self.c6_ghz_um6,
            boundary: g.boundary,
            lasers,
            phases,
            gamma_aux,
            gamma_data,
            gamma_c,
            max_rabi_ratio: max_ratio,
            min_elimination_ratio: min_elim,
            stark_form: m.stark_form,
            stark_in_dissipative: m.stark_in_dissipative,
            polarization_offset: m.polarization_offset_sites,
            winding_cutoff_cells: m.winding_cutoff_cells,
            dynamics: DynamicsSettings {
                t_end: dy.t_end_us,
                n_points: dy.n_points,
                rtol: dy.rtol,
                atol: dy.atol,
                initial: dy.initial_species,
            },
            disorder: DisorderSettings {
                n_realizations: ds.n_realizations,
                master_seed: ds.master_seed,
                phase_eta: ds.phase_eta_rad,
                position_half_width: ds.position_half_width_um,
                phase_sweep: ds.phase_sweep_rad.clone(),
                position_sweep: ds.position_sweep_um.clone(),
                tracked_modes: ds.tracked_modes.clone(),
                phase_strengths: ds.phase_strengths_rad.clone(),
                position_strengths: ds.position_strengths_um.clone(),
            },
            gap_scan: self.gap_scan.omega_p_over_gamma.clone(),
        })
    }
}

/// Rounds unit conversions to 13 significant digits so that a written
/// config reads back to the same document.
fn tidy(x: f64) -> f64 {
    format!("{x:.12e}").parse().unwrap_or(x)
}

fn to_raw(c: &PhysicalConfig) -> RawConfig {
    let lasers = Color::ALL
        .iter()
        .map(|&col| {
            let l = c.laser(col);
            let raw = RawLaser {
                rabi_2pi_mhz: Some(tidy(l.rabi / TWO_PI)),
                detuning_2pi_mhz: Some(tidy(l.detuning / TWO_PI)),
            };
            (col, raw)
        })
        .collect();
    let phases_rad = Species::ALL
        .iter()
        .map(|&s| (s, s.colors().iter().map(|&col| (col, c.phase(s, col))).collect()))
        .collect();
    RawConfig {
        geometry: RawGeometry {
            n_cells: c.n_cells,
            r1_um: c.r1,
            r2_um: c.r2,
            r3_um: c.r3,
            r3_ring_um: c.r3_ring,
            cutoff_um: c.cutoff,
            boundary: c.boundary,
        },
        c6_ghz_um6: c.c6,
        lasers,
        phases_rad,
        decay: RawDecay {
            aux_lifetime_us: tidy(1.0 / c.gamma_aux),
            data_lifetime_us: tidy(1.0 / c.gamma_data),
            aux_rydberg_lifetime_us: (c.gamma_c > 0.0).then(|| tidy(1.0 / c.gamma_c)),
        },
        checks: RawChecks {
            max_rabi_over_detuning: c.max_rabi_ratio,
            min_elimination_ratio: c.min_elimination_ratio,
        },
        model: RawModel {
            stark_form: c.stark_form,
            stark_in_dissipative: c.stark_in_dissipative,
            polarization_offset_sites: c.polarization_offset,
            winding_cutoff_cells: c.winding_cutoff_cells,
        },
        dynamics: RawDynamics {
            t_end_us: c.dynamics.t_end,
            n_points: c.dynamics.n_points,
            rtol: c.dynamics.rtol,
            atol: c.dynamics.atol,
            initial_species: c.dynamics.initial,
        },
        disorder: RawDisorder {
            n_realizations: c.disorder.n_realizations,
            master_seed: c.disorder.master_seed,
            phase_eta_rad: c.disorder.phase_eta,
            position_half_width_um: c.disorder.position_half_width,
            phase_sweep_rad: c.disorder.phase_sweep.clone(),
            position_sweep_um: c.disorder.position_sweep.clone(),
            tracked_modes: c.disorder.tracked_modes.clone(),
            phase_strengths_rad: c.disorder.phase_strengths.clone(),
            position_strengths_um: c.disorder.position_strengths.clone(),
        },
        gap_scan: RawGapScan { omega_p_over_gamma: c.gap_scan.clone() },
    }
}

/// The reference configuration as a pretty-printed JSON document.
pub fn reference_json() -> String {
    serde_json::to_string_pretty(&RawConfig::default()).expect("config serializes")
}
