//! Seeded phase and bond-length disorder: realizations, ensembles,
//! strength sweeps and eigenvalue trajectories.
//!
//! Random numbers come from ChaCha8 (`rand_chacha`). Realization `i` of an
//! ensemble seeded with `master_seed` uses `seed_from_u64(master_seed)` on
//! stream `i`, so its draws never depend on scheduling.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{eigensolve, eigensolve_matrix, ChainHamiltonian};
use crate::error::{Error, Result};
use crate::metrics::{mean_and_error, winding_from_spectrum, LocalizationReport, WindingResult, CHIRAL_TOLERANCE};
use crate::numerics::C64;
use crate::pipeline::Pipeline;

/// Recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(master_seed), stream = counter";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DisorderKind {
    /// One δφ per unit cell on the III-laser phase of its c atom.
    Phase,
    /// One δR per retained bond.
    Position,
}

impl std::fmt::Display for DisorderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DisorderKind::Phase => "phase",
            DisorderKind::Position => "position",
        })
    }
}

impl std::str::FromStr for DisorderKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "phase" => Ok(DisorderKind::Phase),
            "position" => Ok(DisorderKind::Position),
            other => Err(format!("unknown disorder kind `{other}` (expected phase or position)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    /// η in rad or ΔR in μm; draws are uniform on [−w, w].
    pub half_width: f64,
    pub n_realizations: usize,
    pub master_seed: u64,
}

impl DisorderSpec {
    pub fn validate(&self, pipeline: &Pipeline) -> Result<()> {
        if !(self.half_width >= 0.0 && self.half_width.is_finite()) {
            return Err(Error::Domain(format!("disorder half-width {} must be finite and ≥ 0", self.half_width)));
        }
        if self.n_realizations == 0 {
            return Err(Error::Domain("n_realizations must be positive".into()));
        }
        if self.kind == DisorderKind::Position {
            let shortest = pipeline.bonds.bonds.iter().map(|b| b.distance).fold(f64::INFINITY, f64::min);
            if self.half_width >= 0.5 * shortest {
                return Err(Error::Domain(format!(
                    "ΔR = {} μm reaches half the shortest bond ({shortest} μm)",
                    self.half_width
                )));
            }
        }
        Ok(())
    }
}

pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draws on [−w, w]; exactly zero when w = 0.
pub fn draw_uniform(master_seed: u64, stream: u64, half_width: f64, count: usize) -> Vec<f64> {
    if half_width == 0.0 {
        return vec![0.0; count];
    }
    let dist = Uniform::new_inclusive(-half_width, half_width).expect("finite positive half-width");
    let mut rng = stream_rng(master_seed, stream);
    (0..count).map(|_| dist.sample(&mut rng)).collect()
}

pub fn phase_disordered_chain(pipeline: &Pipeline, delta_phi: &[f64]) -> Result<ChainHamiltonian> {
    if delta_phi.len() != pipeline.n_cells() {
        return Err(Error::Domain(format!("{} δφ values for {} cells", delta_phi.len(), pipeline.n_cells())));
    }
    pipeline.chain(&[], delta_phi)
}

pub fn position_disordered_chain(pipeline: &Pipeline, delta_r: &[f64]) -> Result<ChainHamiltonian> {
    if delta_r.len() != pipeline.n_bonds() {
        return Err(Error::Domain(format!("{} δR values for {} bonds", delta_r.len(), pipeline.n_bonds())));
    }
    pipeline.chain(delta_r, &[])
}

#[derive(Debug, Clone)]
pub struct DisorderRealization {
    pub stream: u64,
    pub draws: Vec<f64>,
    pub chain: ChainHamiltonian,
}

impl DisorderRealization {
    pub fn build(pipeline: &Pipeline, kind: DisorderKind, half_width: f64, master_seed: u64, stream: u64) -> Result<Self> {
        let (draws, chain) = match kind {
            DisorderKind::Phase => {
                let d = draw_uniform(master_seed, stream, half_width, pipeline.n_cells());
                let h = phase_disordered_chain(pipeline, &d)?;
                (d, h)
            }
            DisorderKind::Position => {
                let d = draw_uniform(master_seed, stream, half_width, pipeline.n_bonds());
                let h = position_disordered_chain(pipeline, &d)?;
                (d, h)
            }
        };
        Ok(Self { stream, draws, chain })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizationMetrics {
    pub index: usize,
    pub stream: u64,
    pub dmipr: Option<f64>,
    pub abs_dmipr: Option<f64>,
    pub nu_s: Option<f64>,
    pub failure: Option<String>,
}

fn evaluate(pipeline: &Pipeline, chain: &ChainHamiltonian) -> (Result<f64>, Result<f64>) {
    let c = &pipeline.config;
    let spec = match eigensolve(chain) {
        Ok(s) => s,
        Err(e) => {
            let msg = e.to_string();
            return (Err(Error::Domain(msg.clone())), Err(Error::Domain(msg)));
        }
    };
    let dmipr = LocalizationReport::new(&spec, c.polarization_offset).map(|r| r.dmipr);
    let resid = chain.chiral_residual();
    let nu = if resid > CHIRAL_TOLERANCE {
        Err(Error::ChiralViolation(resid))
    } else {
        winding_from_spectrum(&spec, c.winding_cutoff_cells).map(|w| w.nu)
    };
    (dmipr, nu)
}

fn realization_metrics(pipeline: &Pipeline, spec: &DisorderSpec, index: usize, stream: u64) -> RealizationMetrics {
    let mut m = RealizationMetrics { index, stream, dmipr: None, abs_dmipr: None, nu_s: None, failure: None };
    match DisorderRealization::build(pipeline, spec.kind, spec.half_width, spec.master_seed, stream) {
        Ok(r) => {
            let (d, nu) = evaluate(pipeline, &r.chain);
            let mut errs = Vec::new();
            match d {
                Ok(v) => {
                    m.dmipr = Some(v);
                    m.abs_dmipr = Some(v.abs());
                }
                Err(e) => errs.push(format!("dmipr: {e}")),
            }
            match nu {
                Ok(v) => m.nu_s = Some(v),
                Err(e) => errs.push(format!("winding: {e}")),
            }
            if !errs.is_empty() {
                m.failure = Some(errs.join("; "));
            }
        }
        Err(e) => m.failure = Some(e.to_string()),
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleResult {
    pub spec: DisorderSpec,
    pub realizations: Vec<RealizationMetrics>,
    pub mean_abs_dmipr: f64,
    pub std_error_abs_dmipr: f64,
    pub mean_dmipr: f64,
    /// `None` when no realization produced a winding number.
    pub winding: Option<WindingResult>,
    pub failures: usize,
}

fn ensemble_with_streams(pipeline: &Pipeline, spec: &DisorderSpec, stream: impl Fn(usize) -> u64 + Sync) -> Result<EnsembleResult> {
    spec.validate(pipeline)?;
    let realizations: Vec<RealizationMetrics> = (0..spec.n_realizations)
        .into_par_iter()
        .map(|i| realization_metrics(pipeline, spec, i, stream(i)))
        .collect();
    let failures = realizations.iter().filter(|r| r.failure.is_some()).count();
    for r in realizations.iter().filter(|r| r.failure.is_some()) {
        log::warn!("realization {} failed: {}", r.index, r.failure.as_deref().unwrap_or(""));
    }
    let abs: Vec<f64> = realizations.iter().filter_map(|r| r.abs_dmipr).collect();
    let signed: Vec<f64> = realizations.iter().filter_map(|r| r.dmipr).collect();
    if abs.is_empty() {
        return Err(Error::Domain(format!("all {} realizations failed", spec.n_realizations)));
    }
    let (mean_abs_dmipr, std_error_abs_dmipr) = mean_and_error(&abs);
    let mean_dmipr = mean_and_error(&signed).0;
    let winding = WindingResult::from_values(
        realizations
            .iter()
            .map(|r| r.nu_s.ok_or_else(|| Error::Domain(r.failure.clone().unwrap_or_default()))),
    )
    .ok();
    Ok(EnsembleResult { spec: *spec, realizations, mean_abs_dmipr, std_error_abs_dmipr, mean_dmipr, winding, failures })
}

/// Runs every realization (in parallel on the current rayon pool) and reduces
/// in realization order.
pub fn ensemble_run(pipeline: &Pipeline, spec: &DisorderSpec) -> Result<EnsembleResult> {
    ensemble_with_streams(pipeline, spec, |i| i as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrengthPoint {
    pub strength: f64,
    pub mean_abs_dmipr: f64,
    pub nu: Option<f64>,
    pub one_minus_nu: Option<f64>,
    pub std_error: Option<f64>,
    pub failures: usize,
}

/// Ensembles over a grid of half-widths. Point `p`, realization `i` draws
/// from stream `(p << 32) | i`.
pub fn strength_sweep(
    pipeline: &Pipeline,
    kind: DisorderKind,
    strengths: &[f64],
    n_realizations: usize,
    master_seed: u64,
) -> Result<Vec<StrengthPoint>> {
    strengths
        .iter()
        .enumerate()
        .map(|(p, &w)| {
            let spec = DisorderSpec { kind, half_width: w, n_realizations, master_seed };
            let r = ensemble_with_streams(pipeline, &spec, |i| ((p as u64) << 32) | i as u64)?;
            Ok(StrengthPoint {
                strength: w,
                mean_abs_dmipr: r.mean_abs_dmipr,
                nu: r.winding.as_ref().map(|w| w.nu),
                one_minus_nu: r.winding.as_ref().map(|w| w.one_minus_nu),
                std_error: r.winding.as_ref().map(|w| w.std_error),
                failures: r.failures,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub delta: f64,
    /// 1-based index into the sorted clean spectrum.
    pub mode: usize,
    pub re: f64,
    pub im: f64,
    /// Continuation picked a state other than sorted index k, or the choice
    /// was close to a tie.
    pub flagged: bool,
}

impl TrajectoryPoint {
    pub fn abs(&self) -> f64 {
        self.re.hypot(self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySweep {
    pub kind: DisorderKind,
    pub points: Vec<TrajectoryPoint>,
    /// max |Re E| of the whole spectrum at each grid value.
    pub max_abs_re: Vec<f64>,
}

impl TrajectorySweep {
    pub fn mode(&self, k: usize) -> Vec<&TrajectoryPoint> {
        self.points.iter().filter(|p| p.mode == k).collect()
    }
}

/// Applies one uniform offset per grid value (every cell or every bond) and
/// follows the tracked eigenvalues by nearest continuation.
pub fn trajectory_sweep(pipeline: &Pipeline, kind: DisorderKind, grid: &[f64], modes: &[usize]) -> Result<TrajectorySweep> {
    let l = 2 * pipeline.n_cells();
    if let Some(&k) = modes.iter().find(|&&k| k == 0 || k > l) {
        return Err(Error::Domain(format!("mode {k} outside 1..={l}")));
    }
    let spectra: Vec<Vec<C64>> = grid
        .par_iter()
        .map(|&d| {
            let h = match kind {
                DisorderKind::Phase => pipeline.chain(&[], &vec![d; pipeline.n_cells()])?,
                DisorderKind::Position => pipeline.chain(&vec![d; pipeline.n_bonds()], &[])?,
            };
            Ok(eigensolve_matrix(&h.matrix)?.values)
        })
        .collect::<Result<_>>()?;
    let mut prev: Vec<Option<C64>> = vec![None; modes.len()];
    let mut points = Vec::with_capacity(grid.len() * modes.len());
    let mut max_abs_re = Vec::with_capacity(grid.len());
    for (&d, vals) in grid.iter().zip(&spectra) {
        max_abs_re.push(vals.iter().fold(0.0f64, |m, v| m.max(v.re.abs())));
        let mut taken = vec![false; vals.len()];
        for (slot, &k) in modes.iter().enumerate() {
            let (idx, flagged) = match prev[slot] {
                None => (k - 1, false),
                Some(p) => {
                    let mut order: Vec<usize> = (0..vals.len()).filter(|&i| !taken[i]).collect();
                    order.sort_by(|&a, &b| (vals[a] - p).norm().total_cmp(&(vals[b] - p).norm()));
                    let best = order[0];
                    let close = order.get(1).is_some_and(|&s| (vals[s] - p).norm() < 2.0 * (vals[best] - p).norm());
                    (best, close || best != k - 1)
                }
            };
            taken[idx] = true;
            prev[slot] = Some(vals[idx]);
            points.push(TrajectoryPoint { delta: d, mode: k, re: vals[idx].re, im: vals[idx].im, flagged });
        }
    }
    Ok(TrajectorySweep { kind, points, max_abs_re })
}
