//! Array parameters, geometry and Rydberg-mediated couplings.
//!
//! Units: lengths in μm, times in μs, every frequency/energy as an angular
//! frequency in rad/μs (so a value quoted as 2π×f MHz is stored as 2π·f).

pub mod config;
pub mod couplings;
pub mod geometry;

pub use config::{
    reference_json, DisorderSettings, DynamicsSettings, LaserParams, PhysicalConfig, StarkForm,
};
pub use couplings::{
    cutoff_report, hopping_amplitude, hopping_matrix, pair_coupling, plaquette_flux, stark_shift,
    vdw_interaction, wrap_angle, BareCouplings, CouplingSet, CutoffReport, LaserDrive,
    PhaseOffsets,
};
pub use geometry::{
    chain_lattice, ring_geometry, six_atom_segment, Bond, BondKind, BondTable, Lattice,
    RingGeometry,
};

use serde::{Deserialize, Serialize};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Relative slack applied to distance cutoffs so quoted (rounded) lengths
/// still capture the bonds they describe.
pub const CUTOFF_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    A,
    B,
    C,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::A, Species::B, Species::C];

    /// The two colours driving this species.
    pub fn colors(self) -> [Color; 2] {
        match self {
            Species::A => [Color::I, Color::III],
            Species::B => [Color::I, Color::II],
            Species::C => [Color::II, Color::III],
        }
    }

    pub fn has_color(self, color: Color) -> bool {
        self.colors().contains(&color)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Species::A => "a",
            Species::B => "b",
            Species::C => "c",
        }
    }

    /// Auxiliary (fast-decaying) atoms.
    pub fn is_aux(self) -> bool {
        self == Species::C
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Color {
    I,
    II,
    III,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::I, Color::II, Color::III];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Obc,
    Pbc,
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Boundary::Obc => "obc",
            Boundary::Pbc => "pbc",
        })
    }
}

impl std::str::FromStr for Boundary {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "obc" => Ok(Boundary::Obc),
            "pbc" => Ok(Boundary::Pbc),
            other => Err(format!("unknown boundary `{other}` (expected obc or pbc)")),
        }
    }
}

/// One atom: unit-cell index plus species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SiteId {
    pub cell: usize,
    pub species: Species,
}

impl SiteId {
    pub fn new(cell: usize, species: Species) -> Self {
        Self { cell, species }
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.species.label(), self.cell)
    }
}
