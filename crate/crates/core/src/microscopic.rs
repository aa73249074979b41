//! Six-atom segment: the full two-colour Rydberg Hamiltonian on 2⁶ product
//! states against the perturbative single-excitation Hamiltonian.

use std::fmt::Write as _;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::model::{
    hopping_amplitude, six_atom_segment, stark_shift, vdw_interaction, Color, LaserDrive, Lattice,
    PhaseOffsets, PhysicalConfig, Species, StarkForm, CUTOFF_SLACK,
};
use crate::numerics::{integrate_linear, FnGenerator, IntegratorContract, C64, I, ZERO};

pub const SEGMENT_SIZE: usize = 6;
pub const FULL_DIM: usize = 1 << SEGMENT_SIZE;
/// Index of a_n inside the segment `c_{n−1}, a_n, b_n, c_n, a_{n+1}, c_{n+1}`.
pub const CENTRAL_A: usize = 1;

/// Site populations on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrajectory {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `populations[t][site]`.
    pub populations: Vec<Vec<f64>>,
    /// Probability of no excitation, when tracked.
    pub ground: Option<Vec<f64>>,
}

impl PopulationTrajectory {
    pub fn n_sites(&self) -> usize {
        self.labels.len()
    }

    /// Sum of site populations (plus ground) at each time.
    pub fn totals(&self) -> Vec<f64> {
        self.populations
            .iter()
            .enumerate()
            .map(|(t, p)| p.iter().sum::<f64>() + self.ground.as_ref().map_or(0.0, |g| g[t]))
            .collect()
    }

    /// Restricts to the named sites, in the given order.
    pub fn select(&self, labels: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = labels
            .iter()
            .map(|l| {
                self.labels
                    .iter()
                    .position(|x| x == l)
                    .ok_or_else(|| Error::Domain(format!("no site labelled {l}")))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            times: self.times.clone(),
            labels: labels.iter().map(|s| s.to_string()).collect(),
            populations: self.populations.iter().map(|p| idx.iter().map(|&i| p[i]).collect()).collect(),
            ground: None,
        })
    }

    /// CSV body: `time_us,<labels>[,ground]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_us");
        for l in &self.labels {
            out.push(',');
            out.push_str(l);
        }
        if self.ground.is_some() {
            out.push_str(",ground");
        }
        out.push('\n');
        for (k, (t, row)) in self.times.iter().zip(&self.populations).enumerate() {
            let _ = write!(out, "{t:.9e}");
            for p in row {
                let _ = write!(out, ",{p:.12e}");
            }
            if let Some(g) = &self.ground {
                let _ = write!(out, ",{:.12e}", g[k]);
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryComparison {
    pub max_abs_deviation: f64,
    /// `|p_A − p_B|` per time and site.
    pub per_site: Vec<Vec<f64>>,
}

pub fn compare_trajectories(a: &PopulationTrajectory, b: &PopulationTrajectory) -> Result<TrajectoryComparison> {
    if a.times != b.times {
        return Err(Error::GridMismatch(format!(
            "{} vs {} time points",
            a.times.len(),
            b.times.len()
        )));
    }
    if a.n_sites() != b.n_sites() {
        return Err(Error::GridMismatch(format!("{} vs {} sites", a.n_sites(), b.n_sites())));
    }
    let per_site: Vec<Vec<f64>> = a
        .populations
        .iter()
        .zip(&b.populations)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()).collect())
        .collect();
    let max_abs_deviation = per_site.iter().flatten().fold(0.0f64, |m, &d| m.max(d));
    Ok(TrajectoryComparison { max_abs_deviation, per_site })
}

/// The six-atom segment with its drives and interactions.
#[derive(Debug, Clone)]
pub struct SixAtomSystem {
    pub lattice: Lattice,
    pub drives: Vec<Vec<LaserDrive>>,
    /// Pairwise V^{jk}, rad/μs (zero diagonal).
    pub interactions: Array2<f64>,
    pub cutoff: f64,
    pub stark_form: StarkForm,
    pub labels: Vec<String>,
}

/// Drive edges for one colour: (from state, to state, Ω/2·e^{iφ}).
#[derive(Debug, Clone)]
struct DriveEdges {
    detuning: f64,
    edges: Vec<(usize, usize, C64)>,
}

impl SixAtomSystem {
    pub fn from_config(config: &PhysicalConfig) -> Result<Self> {
        let lattice = six_atom_segment(config.r1, config.r2);
        let drives = lattice.sites.iter().map(|&s| config.drives_of(s, PhaseOffsets::default())).collect();
        let n = lattice.len();
        let mut interactions = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    interactions[[i, j]] = vdw_interaction(config.c6, lattice.distance(i, j))?;
                }
            }
        }
        let labels = ["c_{n-1}", "a_n", "b_n", "c_n", "a_{n+1}", "c_{n+1}"].map(String::from).to_vec();
        Ok(Self { lattice, drives, interactions, cutoff: config.r3, stark_form: config.stark_form, labels })
    }

    fn max_detuning(&self) -> f64 {
        self.drives.iter().flatten().fold(0.0f64, |m, d| m.max(d.detuning.abs()))
    }

    fn drive_edges(&self) -> Vec<DriveEdges> {
        Color::ALL
            .iter()
            .filter_map(|&color| {
                let mut edges = Vec::new();
                let mut detuning = None;
                for s in 0..FULL_DIM {
                    for (i, ds) in self.drives.iter().enumerate() {
                        if s >> i & 1 == 1 {
                            continue;
                        }
                        for d in ds.iter().filter(|d| d.color == color) {
                            detuning = Some(d.detuning);
                            edges.push((s, s | 1 << i, C64::from_polar(0.5 * d.rabi_magnitude, d.phase)));
                        }
                    }
                }
                detuning.map(|detuning| DriveEdges { detuning, edges })
            })
            .collect()
    }

    fn interaction_diagonal(&self) -> Vec<f64> {
        (0..FULL_DIM)
            .map(|s| {
                let mut e = 0.0;
                for i in 0..SEGMENT_SIZE {
                    for j in i + 1..SEGMENT_SIZE {
                        if s >> i & 1 == 1 && s >> j & 1 == 1 {
                            e += self.interactions[[i, j]];
                        }
                    }
                }
                e
            })
            .collect()
    }

    /// Dense H(t) on the 64 product states (bit i set = atom i in |r⟩).
    pub fn build_full_hamiltonian(&self, t: f64) -> Array2<C64> {
        let mut h = Array2::zeros((FULL_DIM, FULL_DIM));
        for (s, e) in self.interaction_diagonal().into_iter().enumerate() {
            h[[s, s]] = C64::new(e, 0.0);
        }
        for de in self.drive_edges() {
            let rot = C64::from_polar(1.0, de.detuning * t);
            for &(from, to, amp) in &de.edges {
                let x = amp * rot;
                h[[to, from]] += x;
                h[[from, to]] += x.conj();
            }
        }
        h
    }

    /// Hopping `K[j][k]` between segment atoms closer than the cutoff.
    pub fn hopping(&self) -> Result<Array2<C64>> {
        let n = self.lattice.len();
        let limit = self.cutoff * (1.0 + CUTOFF_SLACK);
        let mut k = Array2::zeros((n, n));
        for j in 0..n {
            for m in 0..n {
                if j == m || self.lattice.distance(j, m) > limit {
                    continue;
                }
                let v = self.interactions[[j, m]];
                for dj in &self.drives[j] {
                    for dm in self.drives[m].iter().filter(|d| d.color == dj.color) {
                        k[[j, m]] += hopping_amplitude(dj, dm, v)?;
                    }
                }
            }
        }
        Ok(k)
    }

    pub fn stark_shifts(&self) -> Result<Vec<f64>> {
        (0..self.lattice.len())
            .map(|j| stark_shift(j, &self.drives, &self.interactions, self.stark_form))
            .collect()
    }

    /// Effective single-excitation Hamiltonian: hopping plus light shifts.
    pub fn build_effective_six_atom(&self) -> Result<Array2<C64>> {
        let mut h = self.hopping()?;
        for (j, mu) in self.stark_shifts()?.into_iter().enumerate() {
            h[[j, j]] += mu;
        }
        Ok(h)
    }

    /// Integrator settings for the full model: the step is capped at
    /// 1/(50·Δ_max) to resolve the e^{iΔt} phases.
    pub fn full_contract(&self, rtol: f64, atol: f64) -> IntegratorContract {
        IntegratorContract { rtol, atol, max_step: 1.0 / (50.0 * self.max_detuning()), dense_output: true }
    }

    /// Evolves the 64-dimensional state under the full Hamiltonian.
    pub fn evolve_full(&self, psi0: &[C64], t_grid: &[f64], contract: &IntegratorContract) -> Result<Vec<Array1<C64>>> {
        let diag = self.interaction_diagonal();
        let colors = self.drive_edges();
        let generator = FnGenerator::new(FULL_DIM, move |t, x: &[C64], out: &mut [C64]| {
            for s in 0..FULL_DIM {
                out[s] = -I * diag[s] * x[s];
            }
            for de in &colors {
                let rot = C64::from_polar(1.0, de.detuning * t);
                for &(from, to, amp) in &de.edges {
                    let a = amp * rot;
                    out[to] += -I * a * x[from];
                    out[from] += -I * a.conj() * x[to];
                }
            }
        });
        integrate_linear(&generator, psi0, t_grid, contract)
    }

    /// Product state with atom `site` in |r⟩.
    pub fn single_excitation_full(&self, site: usize) -> Vec<C64> {
        let mut v = vec![ZERO; FULL_DIM];
        v[1 << site] = C64::new(1.0, 0.0);
        v
    }

    /// Marginal Rydberg populations ⟨n_i⟩ with the all-ground probability.
    pub fn marginal_populations(&self, times: &[f64], states: &[Array1<C64>]) -> PopulationTrajectory {
        let populations = states
            .iter()
            .map(|psi| {
                (0..SEGMENT_SIZE)
                    .map(|i| (0..FULL_DIM).filter(|s| s >> i & 1 == 1).map(|s| psi[s].norm_sqr()).sum())
                    .collect()
            })
            .collect();
        PopulationTrajectory {
            times: times.to_vec(),
            labels: self.labels.clone(),
            populations,
            ground: Some(states.iter().map(|psi| psi[0].norm_sqr()).collect()),
        }
    }

    /// Populations of the single-excitation states renormalized within that
    /// manifold (virtual ground and double-excitation weight removed).
    pub fn conditional_populations(&self, times: &[f64], states: &[Array1<C64>]) -> PopulationTrajectory {
        let populations = states
            .iter()
            .map(|psi| {
                let p: Vec<f64> = (0..SEGMENT_SIZE).map(|i| psi[1 << i].norm_sqr()).collect();
                let total: f64 = p.iter().sum();
                p.into_iter().map(|x| if total > 0.0 { x / total } else { 0.0 }).collect()
            })
            .collect();
        PopulationTrajectory { times: times.to_vec(), labels: self.labels.clone(), populations, ground: None }
    }
}

/// Integrates `i ψ̇ = H ψ` for a constant Hamiltonian and returns the states.
pub fn evolve_static(h: &Array2<C64>, psi0: &[C64], t_grid: &[f64], contract: &IntegratorContract) -> Result<Vec<Array1<C64>>> {
    let g = h.mapv(|z| -I * z);
    integrate_linear(&g, psi0, t_grid, contract)
}

/// `|ψ_i|²` per basis state.
pub fn populations(times: &[f64], labels: &[String], states: &[Array1<C64>]) -> PopulationTrajectory {
    PopulationTrajectory {
        times: times.to_vec(),
        labels: labels.to_vec(),
        populations: states.iter().map(|s| s.iter().map(|z| z.norm_sqr()).collect()).collect(),
        ground: None,
    }
}

/// Static Hamiltonian evolution straight to populations.
pub fn evolve(h: &Array2<C64>, psi0: &[C64], t_grid: &[f64], contract: &IntegratorContract) -> Result<PopulationTrajectory> {
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("initial state has norm² {norm}")));
    }
    let states = evolve_static(h, psi0, t_grid, contract)?;
    let labels: Vec<String> = (0..h.nrows()).map(|i| format!("site{i}")).collect();
    Ok(populations(t_grid, &labels, &states))
}

/// Full versus effective comparison on the six-atom segment.
#[derive(Debug, Clone)]
pub struct HierarchyReport {
    pub full: PopulationTrajectory,
    pub effective: PopulationTrajectory,
    pub comparison: TrajectoryComparison,
    pub max_norm_drift: f64,
}

pub fn compare_models(config: &PhysicalConfig) -> Result<HierarchyReport> {
    let sys = SixAtomSystem::from_config(config)?;
    let site = match config.dynamics.initial {
        Species::A => CENTRAL_A,
        Species::B => 2,
        Species::C => 3,
    };
    let grid = config.dynamics.time_grid();
    let full_states = sys.evolve_full(
        &sys.single_excitation_full(site),
        &grid,
        &sys.full_contract(config.dynamics.rtol, config.dynamics.atol),
    )?;
    let max_norm_drift = full_states
        .iter()
        .map(|s| (s.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let full = sys.conditional_populations(&grid, &full_states);

    let heff = sys.build_effective_six_atom()?;
    let mut psi0 = vec![ZERO; SEGMENT_SIZE];
    psi0[site] = C64::new(1.0, 0.0);
    let contract = IntegratorContract { rtol: config.dynamics.rtol, atol: config.dynamics.atol, ..Default::default() };
    let eff_states = evolve_static(&heff, &psi0, &grid, &contract)?;
    let effective = populations(&grid, &sys.labels, &eff_states);
    let comparison = compare_trajectories(&full, &effective)?;
    Ok(HierarchyReport { full, effective, comparison, max_norm_drift })
}

/// Times of the first population maximum on b and c of one triangle after
/// an excitation starts on a, under the effective hopping alone.
pub fn first_maxima_times(config: &PhysicalConfig, t_end: f64, n_points: usize) -> Result<(f64, f64)> {
    let sys = SixAtomSystem::from_config(config)?;
    let k = sys.hopping()?;
    // a_n, b_n, c_n
    let idx = [1, 2, 3];
    let h = Array2::from_shape_fn((3, 3), |(i, j)| k[[idx[i], idx[j]]]);
    let grid: Vec<f64> = (0..n_points).map(|i| t_end * i as f64 / (n_points - 1) as f64).collect();
    let psi0 = [C64::new(1.0, 0.0), ZERO, ZERO];
    let states = evolve_static(&h, &psi0, &grid, &IntegratorContract::default())?;
    let first_peak = |site: usize| -> f64 {
        let p: Vec<f64> = states.iter().map(|s| s[site].norm_sqr()).collect();
        for i in 1..p.len() - 1 {
            if p[i] > p[i - 1] && p[i] >= p[i + 1] {
                return grid[i];
            }
        }
        f64::INFINITY
    };
    Ok((first_peak(1), first_peak(2)))
}
