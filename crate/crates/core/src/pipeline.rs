//! From a configuration to chain couplings: lattice, bond table, hopping
//! matrix, per-cell elimination of the auxiliary atoms.

use crate::chain::{ChainCouplings, ChainHamiltonian};
use crate::dissipation::{adiabatic_eliminate, NhCouplings, SegmentCouplings};
use crate::error::{Error, Result};
use crate::model::{
    chain_lattice, hopping_matrix, ring_geometry, Boundary, BondTable, Lattice, PhaseOffsets,
    PhysicalConfig,
};

#[derive(Debug, Clone)]
pub struct Pipeline {
    pub config: PhysicalConfig,
    pub lattice: Lattice,
    pub bonds: BondTable,
    /// Ring radius and far chord for PBC.
    pub ring: Option<(f64, f64)>,
}

impl Pipeline {
    pub fn new(config: &PhysicalConfig) -> Result<Self> {
        config.validate()?;
        let (lattice, ring) = match config.boundary {
            Boundary::Obc => (chain_lattice(config.n_cells, config.r1, config.r2), None),
            Boundary::Pbc => {
                let g = ring_geometry(config.n_cells, config.r1, config.r2)?;
                if !g.far_chord_matches(config.r3_ring) {
                    log::warn!(
                        "ring far chord {:.4} μm differs from r3_ring = {} μm",
                        g.far_chord,
                        config.r3_ring
                    );
                }
                (g.lattice, Some((g.radius, g.far_chord)))
            }
        };
        let bonds = BondTable::build(&lattice, config.cutoff_radius());
        Ok(Self { config: config.clone(), lattice, bonds, ring })
    }

    pub fn n_cells(&self) -> usize {
        self.config.n_cells
    }

    pub fn n_bonds(&self) -> usize {
        self.bonds.len()
    }

    fn has_inter(&self, n: usize) -> bool {
        n + 1 < self.n_cells() || self.config.boundary == Boundary::Pbc
    }

    /// Lattice indices of (c_{n−1}, a_n, b_n, c_n, a_{n+1}, c_{n+1}).
    pub fn segment_indices(&self, n: usize) -> [Option<usize>; 6] {
        let nc = self.n_cells();
        let pbc = self.config.boundary == Boundary::Pbc;
        let prev = if n > 0 { Some(n - 1) } else if pbc { Some(nc - 1) } else { None };
        let next = if n + 1 < nc { Some(n + 1) } else if pbc { Some(0) } else { None };
        [
            prev.map(|p| 3 * p + 2),
            Some(3 * n),
            Some(3 * n + 1),
            Some(3 * n + 2),
            next.map(|q| 3 * q),
            next.map(|q| 3 * q + 2),
        ]
    }

    /// Eliminated couplings of every segment. Empty slices mean no disorder.
    pub fn segments(&self, bond_deltas: &[f64], phase_offsets: &[f64]) -> Result<Vec<NhCouplings>> {
        if !phase_offsets.is_empty() && phase_offsets.len() != self.n_cells() {
            return Err(Error::Domain(format!(
                "{} phase offsets for {} cells",
                phase_offsets.len(),
                self.n_cells()
            )));
        }
        let c = &self.config;
        let k = hopping_matrix(c, &self.lattice, &self.bonds, bond_deltas, PhaseOffsets(phase_offsets))?;
        (0..self.n_cells())
            .map(|n| {
                let seg = SegmentCouplings::from_hopping(&k, self.segment_indices(n));
                adiabatic_eliminate(&seg, c.gamma_aux + c.gamma_c, c.gamma_data, c.min_elimination_ratio)
            })
            .collect()
    }

    pub fn couplings(&self, bond_deltas: &[f64], phase_offsets: &[f64]) -> Result<ChainCouplings> {
        let segs = self.segments(bond_deltas, phase_offsets)?;
        let intra = segs.iter().map(|s| (s.j_l, s.j_r)).collect();
        let inter = segs
            .iter()
            .enumerate()
            .filter(|(n, _)| self.has_inter(*n))
            .map(|(_, s)| (s.g_l, s.g_r))
            .collect();
        Ok(ChainCouplings { intra, inter })
    }

    pub fn chain(&self, bond_deltas: &[f64], phase_offsets: &[f64]) -> Result<ChainHamiltonian> {
        ChainHamiltonian::from_couplings(self.couplings(bond_deltas, phase_offsets)?, self.config.boundary)
    }

    pub fn clean_chain(&self) -> Result<ChainHamiltonian> {
        self.chain(&[], &[])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;
    use crate::model::CouplingSet;

    #[test]
    fn clean_obc_matches_uniform_chain() {
        let c = PhysicalConfig::reference();
        let p = Pipeline::new(&c).unwrap();
        assert_eq!(p.n_bonds(), 6 * 20 - 3);
        let h = p.clean_chain().unwrap();
        let u = build_chain(&CouplingSet::from_config(&c).unwrap().nh, 20, Boundary::Obc).unwrap();
        for (a, b) in h.matrix.iter().zip(u.matrix.iter()) {
            assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-3), "{a} vs {b}");
        }
    }

    #[test]
    fn ring_has_translation_invariant_couplings() {
        let c = PhysicalConfig::reference().with_boundary(Boundary::Pbc);
        let p = Pipeline::new(&c).unwrap();
        assert_eq!(p.n_bonds(), 6 * 20);
        let (_, chord) = p.ring.unwrap();
        assert!((chord - 8.61).abs() < 0.01);
        let cc = p.couplings(&[], &[]).unwrap();
        assert_eq!(cc.inter.len(), 20);
        let obc = CouplingSet::from_config(&PhysicalConfig::reference()).unwrap().nh;
        for (&(jl, jr), &(gl, gr)) in cc.intra.iter().zip(&cc.inter) {
            // The ring bends the long h1/h2 bonds by a few parts in 10⁴.
            assert!((jl - obc.j_l).norm() < 2e-3 * obc.j_l.norm());
            assert!((jr - obc.j_r).norm() < 2e-3 * obc.j_r.norm());
            assert!((gl - cc.inter[0].0).norm() < 1e-12 && (gr - cc.inter[0].1).norm() < 1e-12);
            assert!((gl - obc.g_l).norm() < 2e-3 * obc.g_l.norm());
        }
    }

    #[test]
    fn zero_disorder_is_bitwise_clean() {
        let p = Pipeline::new(&PhysicalConfig::reference()).unwrap();
        let clean = p.clean_chain().unwrap();
        let zb = vec![0.0; p.n_bonds()];
        let zp = vec![0.0; p.n_cells()];
        assert_eq!(p.chain(&zb, &zp).unwrap().matrix, clean.matrix);
    }

    #[test]
    fn global_phase_offset_shifts_the_flux() {
        let c = PhysicalConfig::reference();
        let p = Pipeline::new(&c).unwrap();
        let d = 0.3;
        let h = p.couplings(&[], &[d; 20]).unwrap();
        let mut shifted = c.clone();
        shifted.phases[2][2] += d;
        let want = CouplingSet::from_config(&shifted).unwrap().nh;
        for &(jl, jr) in &h.intra {
            assert!((jl - want.j_l).norm() < 1e-12 && (jr - want.j_r).norm() < 1e-12);
        }
        for &(gl, gr) in &h.inter {
            assert!((gl - want.g_l).norm() < 1e-12 && (gr - want.g_r).norm() < 1e-12);
        }
    }

    #[test]
    fn bad_lengths_are_rejected() {
        let p = Pipeline::new(&PhysicalConfig::reference()).unwrap();
        assert!(p.chain(&[0.0; 3], &[]).is_err());
        assert!(p.chain(&[], &[0.0; 3]).is_err());
    }
}
