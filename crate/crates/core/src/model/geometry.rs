use ndarray::Array2;

use super::{Color, SiteId, Species, CUTOFF_SLACK};
use crate::error::{Error, Result};

/// Atom positions in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub sites: Vec<SiteId>,
    pub positions: Vec<[f64; 2]>,
    /// Number of unit cells the cell indices refer to.
    pub n_cells: usize,
    /// Cell `n_cells - 1` neighbours cell 0.
    pub periodic: bool,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let [xi, yi] = self.positions[i];
        let [xj, yj] = self.positions[j];
        (xi - xj).hypot(yi - yj)
    }

    pub fn distance_table(&self) -> Array2<f64> {
        let n = self.len();
        Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { self.distance(i, j) })
    }

    pub fn index_of(&self, site: SiteId) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    /// True when cell `b` follows cell `a`.
    fn next_cell(&self, a: usize, b: usize) -> bool {
        b == a + 1 || (self.periodic && self.n_cells >= 3 && b == 0 && a + 1 == self.n_cells)
    }
}

fn cell_positions(origin_x: f64, r1: f64) -> [[f64; 2]; 3] {
    let h = 0.5 * 3f64.sqrt() * r1;
    [[origin_x, 0.0], [origin_x + r1, 0.0], [origin_x + 0.5 * r1, h]]
}

/// Straight chain: atom `3n + s` is species `s` of cell `n`; a and b sit on
/// the axis, c at the apex of the equilateral a–b–c triangle.
pub fn chain_lattice(n_cells: usize, r1: f64, r2: f64) -> Lattice {
    let pitch = r1 + r2;
    let mut sites = Vec::with_capacity(3 * n_cells);
    let mut positions = Vec::with_capacity(3 * n_cells);
    for n in 0..n_cells {
        let p = cell_positions(n as f64 * pitch, r1);
        for (s, species) in Species::ALL.into_iter().enumerate() {
            sites.push(SiteId::new(n, species));
            positions.push(p[s]);
        }
    }
    Lattice { sites, positions, n_cells, periodic: false }
}

/// The six-atom segment `c_{n−1}, a_n, b_n, c_n, a_{n+1}, c_{n+1}` (cells
/// 0, 1, 2), in that order.
pub fn six_atom_segment(r1: f64, r2: f64) -> Lattice {
    let full = chain_lattice(3, r1, r2);
    let pick = [
        SiteId::new(0, Species::C),
        SiteId::new(1, Species::A),
        SiteId::new(1, Species::B),
        SiteId::new(1, Species::C),
        SiteId::new(2, Species::A),
        SiteId::new(2, Species::C),
    ];
    let positions = pick
        .iter()
        .map(|&s| full.positions[full.index_of(s).expect("segment site exists")])
        .collect();
    Lattice { sites: pick.to_vec(), positions, n_cells: 3, periodic: false }
}

#[derive(Debug, Clone)]
pub struct RingGeometry {
    pub radius: f64,
    pub lattice: Lattice,
    /// Length of the c_n–a_{n+1} (and b_n–c_{n+1}) chord.
    pub far_chord: f64,
}

impl RingGeometry {
    pub fn distance_table(&self) -> Array2<f64> {
        self.lattice.distance_table()
    }

    /// Whether the far chord reaches `r3_ring` (within the cutoff slack).
    pub fn far_chord_matches(&self, r3_ring: f64) -> bool {
        (self.far_chord - r3_ring).abs() <= CUTOFF_SLACK * r3_ring
    }
}

/// Places the a and b atoms on a circle so consecutive chords are R1, R2,
/// R1, R2, …; each c atom sits outside the ring at the apex of its cell's
/// equilateral triangle.
pub fn ring_geometry(n_cells: usize, r1: f64, r2: f64) -> Result<RingGeometry> {
    if n_cells < 3 {
        return Err(Error::Infeasible(format!("a ring needs at least 3 cells, got {n_cells}")));
    }
    if !(r1 > 0.0 && r2 > 0.0) {
        return Err(Error::Domain("ring chords must be positive".into()));
    }
    let target = std::f64::consts::TAU / n_cells as f64;
    let angle = |r: f64| 2.0 * (r1 / (2.0 * r)).asin() + 2.0 * (r2 / (2.0 * r)).asin();
    let mut lo = 0.5 * r1.max(r2);
    if angle(lo) < target {
        return Err(Error::Infeasible(format!(
            "chords {r1} and {r2} cannot close a ring of {n_cells} cells"
        )));
    }
    // angle(r) decreases monotonically; bracket then bisect.
    let mut hi = lo.max(1.0);
    while angle(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if angle(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let radius = 0.5 * (lo + hi);
    let alpha = 2.0 * (r1 / (2.0 * radius)).asin();
    let apex = 0.5 * 3f64.sqrt() * r1;

    let mut sites = Vec::with_capacity(3 * n_cells);
    let mut positions = Vec::with_capacity(3 * n_cells);
    for n in 0..n_cells {
        let t0 = n as f64 * target;
        let a = [radius * t0.cos(), radius * t0.sin()];
        let b = [radius * (t0 + alpha).cos(), radius * (t0 + alpha).sin()];
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        let norm = mid[0].hypot(mid[1]);
        let c = [mid[0] + apex * mid[0] / norm, mid[1] + apex * mid[1] / norm];
        for (species, p) in Species::ALL.into_iter().zip([a, b, c]) {
            sites.push(SiteId::new(n, species));
            positions.push(p);
        }
    }
    let lattice = Lattice { sites, positions, n_cells, periodic: true };
    let far_chord = lattice.distance(2, 3);
    Ok(RingGeometry { radius, lattice, far_chord })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondKind {
    Ab,
    Bc,
    Ca,
    /// b_n – a_{n+1}
    Inter,
    /// c_n – a_{n+1}
    H1,
    /// b_n – c_{n+1}
    H2,
    Other,
}

impl BondKind {
    /// Slot of the six per-cell bonds, in the order drawn for disorder.
    pub fn slot(self) -> Option<usize> {
        match self {
            BondKind::Ab => Some(0),
            BondKind::Bc => Some(1),
            BondKind::Ca => Some(2),
            BondKind::Inter => Some(3),
            BondKind::H1 => Some(4),
            BondKind::H2 => Some(5),
            BondKind::Other => None,
        }
    }
}

/// A retained pair of atoms that share at least one laser colour.
#[derive(Debug, Clone, PartialEq)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    /// Cell owning the bond (the earlier cell for inter-cell pairs).
    pub cell: usize,
    pub kind: BondKind,
    pub distance: f64,
    pub colors: Vec<Color>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BondTable {
    pub bonds: Vec<Bond>,
    pub cutoff: f64,
}

pub(crate) fn shared_colors(a: Species, b: Species) -> Vec<Color> {
    a.colors().into_iter().filter(|c| b.has_color(*c)).collect()
}

fn classify(lat: &Lattice, i: usize, j: usize) -> (usize, usize, usize, BondKind) {
    use Species::*;
    let (si, sj) = (lat.sites[i], lat.sites[j]);
    if si.cell == sj.cell {
        let kind = match (si.species.min(sj.species), si.species.max(sj.species)) {
            (A, B) => BondKind::Ab,
            (B, C) => BondKind::Bc,
            (A, C) => BondKind::Ca,
            _ => BondKind::Other,
        };
        return (si.cell, i.min(j), i.max(j), kind);
    }
    let (first, second, fi, si_) = if lat.next_cell(si.cell, sj.cell) {
        (si, sj, i, j)
    } else if lat.next_cell(sj.cell, si.cell) {
        (sj, si, j, i)
    } else {
        return (si.cell.min(sj.cell), i.min(j), i.max(j), BondKind::Other);
    };
    let kind = match (first.species, second.species) {
        (B, A) => BondKind::Inter,
        (C, A) => BondKind::H1,
        (B, C) => BondKind::H2,
        _ => BondKind::Other,
    };
    (first.cell, fi, si_, kind)
}

impl BondTable {
    /// Every pair sharing a colour with separation ≤ `cutoff·(1 + 1e-3)`.
    pub fn build(lattice: &Lattice, cutoff: f64) -> Self {
        let limit = cutoff * (1.0 + CUTOFF_SLACK);
        let mut bonds = Vec::new();
        for i in 0..lattice.len() {
            for j in i + 1..lattice.len() {
                let colors = shared_colors(lattice.sites[i].species, lattice.sites[j].species);
                if colors.is_empty() {
                    continue;
                }
                let distance = lattice.distance(i, j);
                if distance > limit {
                    continue;
                }
                let (cell, a, b, kind) = classify(lattice, i, j);
                bonds.push(Bond { i: a, j: b, cell, kind, distance, colors });
            }
        }
        bonds.sort_by_key(|x| (x.cell, x.kind, x.i, x.j));
        Self { bonds, cutoff }
    }

    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    pub fn count_kind(&self, kind: BondKind) -> usize {
        self.bonds.iter().filter(|b| b.kind == kind).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_distances_match_the_cell_layout() {
        let lat = chain_lattice(3, 6.0, 3.46);
        let d = lat.distance_table();
        assert!((d[[0, 1]] - 6.0).abs() < 1e-12);
        assert!((d[[1, 2]] - 6.0).abs() < 1e-12);
        assert!((d[[0, 2]] - 6.0).abs() < 1e-12);
        assert!((d[[1, 3]] - 3.46).abs() < 1e-12);
        // c_0–a_1 and b_0–c_1
        assert!((d[[2, 3]] - 8.2905).abs() < 1e-3);
        assert!((d[[1, 5]] - 8.2905).abs() < 1e-3);
        assert!((d[[0, 3]] - 9.46).abs() < 1e-12);
    }

    #[test]
    fn obc_bond_table_has_six_bonds_per_cell() {
        let lat = chain_lattice(20, 6.0, 3.46);
        let table = BondTable::build(&lat, 8.29);
        assert_eq!(table.len(), 6 * 20 - 3);
        for kind in [BondKind::Ab, BondKind::Bc, BondKind::Ca] {
            assert_eq!(table.count_kind(kind), 20);
        }
        for kind in [BondKind::Inter, BondKind::H1, BondKind::H2] {
            assert_eq!(table.count_kind(kind), 19);
        }
        assert_eq!(table.count_kind(BondKind::Other), 0);
    }

    #[test]
    fn ring_matches_quoted_chords() {
        let ring = ring_geometry(20, 6.0, 3.46).unwrap();
        let lat = &ring.lattice;
        assert!((ring.radius - 30.1498).abs() < 1e-3);
        assert!((lat.distance(0, 1) - 6.0).abs() < 1e-9);
        assert!((lat.distance(1, 3) - 3.46).abs() < 1e-9);
        assert!((lat.distance(3 * 19 + 1, 0) - 3.46).abs() < 1e-9);
        assert!((ring.far_chord - 8.6082).abs() < 1e-3);
        assert!((lat.distance(1, 5) - ring.far_chord).abs() < 1e-9);
        assert!(ring.far_chord_matches(8.61));

        let table = BondTable::build(lat, 8.61);
        assert_eq!(table.len(), 6 * 20);
        assert_eq!(table.count_kind(BondKind::Other), 0);
        let seam = table.bonds.iter().find(|b| b.cell == 19 && b.kind == BondKind::Inter).unwrap();
        assert_eq!((seam.i, seam.j), (3 * 19 + 1, 0));
    }

    #[test]
    fn ring_distance_table_is_symmetric() {
        let d = ring_geometry(7, 6.0, 3.46).unwrap().distance_table();
        for i in 0..d.nrows() {
            assert_eq!(d[[i, i]], 0.0);
            for j in 0..d.ncols() {
                assert_eq!(d[[i, j]], d[[j, i]]);
            }
        }
    }

    #[test]
    fn infeasible_rings_are_rejected() {
        assert!(matches!(ring_geometry(2, 6.0, 3.46), Err(Error::Infeasible(_))));
        assert!(ring_geometry(3, 6.0, 3.46).is_ok());
    }

    #[test]
    fn segment_order() {
        let seg = six_atom_segment(6.0, 3.46);
        let labels: Vec<_> = seg.sites.iter().map(|s| s.label()).collect();
        assert_eq!(labels, ["c0", "a1", "b1", "c1", "a2", "c2"]);
    }
}
