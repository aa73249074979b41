//! Non-reciprocal SSH chain: matrices, biorthogonal spectra, the
//! Hermitizing similarity transform and skin profiles.

use ndarray::Array2;

use crate::dissipation::NhCouplings;
use crate::error::{Error, Result};
use crate::model::Boundary;
use crate::numerics::{eig_pair, max_abs, C64, ZERO};

/// Relative spacing below which eigenvalues are reported as one cluster.
pub const CLUSTER_TOLERANCE: f64 = 1e-10;

/// Per-cell couplings: `intra[n] = (J_L, J_R)`, `inter[n] = (G_L, G_R)`
/// between cell n and n+1 (the last entry wraps for PBC).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainCouplings {
    pub intra: Vec<(C64, C64)>,
    pub inter: Vec<(C64, C64)>,
}

impl ChainCouplings {
    pub fn uniform(nh: &NhCouplings, n_cells: usize, boundary: Boundary) -> Self {
        let n_inter = match boundary {
            Boundary::Obc => n_cells.saturating_sub(1),
            Boundary::Pbc => n_cells,
        };
        Self { intra: vec![(nh.j_l, nh.j_r); n_cells], inter: vec![(nh.g_l, nh.g_r); n_inter] }
    }

    pub fn n_cells(&self) -> usize {
        self.intra.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainHamiltonian {
    pub n_cells: usize,
    pub boundary: Boundary,
    pub couplings: ChainCouplings,
    pub matrix: Array2<C64>,
}

/// Uniform chain: `H[2n][2n+1] = J_L`, `H[2n+1][2n] = J_R`,
/// `H[2n+1][2n+2] = G_L`, `H[2n+2][2n+1] = G_R`; PBC adds
/// `H[L−1][0] = G_L`, `H[0][L−1] = G_R`.
pub fn build_chain(nh: &NhCouplings, n_cells: usize, boundary: Boundary) -> Result<ChainHamiltonian> {
    ChainHamiltonian::from_couplings(ChainCouplings::uniform(nh, n_cells, boundary), boundary)
}

impl ChainHamiltonian {
    pub fn from_couplings(couplings: ChainCouplings, boundary: Boundary) -> Result<Self> {
        let n = couplings.n_cells();
        if n == 0 {
            return Err(Error::Domain("chain needs at least one cell".into()));
        }
        let want_inter = match boundary {
            Boundary::Obc => n - 1,
            Boundary::Pbc => {
                if n < 2 {
                    return Err(Error::Domain("periodic chain needs at least two cells".into()));
                }
                n
            }
        };
        if couplings.inter.len() != want_inter {
            return Err(Error::Domain(format!(
                "{} inter-cell couplings for {n} cells ({boundary})",
                couplings.inter.len()
            )));
        }
        let l = 2 * n;
        let mut h = Array2::zeros((l, l));
        for (c, &(jl, jr)) in couplings.intra.iter().enumerate() {
            h[[2 * c, 2 * c + 1]] = jl;
            h[[2 * c + 1, 2 * c]] = jr;
        }
        for (c, &(gl, gr)) in couplings.inter.iter().enumerate() {
            let (b, a) = (2 * c + 1, (2 * c + 2) % l);
            h[[b, a]] = gl;
            h[[a, b]] = gr;
        }
        Ok(Self { n_cells: n, boundary, couplings, matrix: h })
    }

    pub fn size(&self) -> usize {
        2 * self.n_cells
    }

    /// `max |S1 H S1 + H|` with S1 = diag(+1, −1, …).
    pub fn chiral_residual(&self) -> f64 {
        chiral_residual(&self.matrix)
    }
}

pub fn chiral_residual(h: &Array2<C64>) -> f64 {
    let mut worst = 0.0f64;
    for ((i, j), z) in h.indexed_iter() {
        if (i + j) % 2 == 0 {
            worst = worst.max(2.0 * z.norm());
        }
    }
    worst
}

/// Biorthonormal eigensystem sorted by (Re E, Im E).
#[derive(Debug, Clone)]
pub struct ComplexSpectrum {
    pub values: Vec<C64>,
    /// Right eigenvectors as columns, unit norm.
    pub right: Array2<C64>,
    /// Left eigenvectors as columns, `left[:, m]† right[:, n] = δ_mn`.
    pub left: Array2<C64>,
    /// Groups of indices whose eigenvalues coincide within tolerance.
    pub clusters: Vec<Vec<usize>>,
    /// The two midgap states, when present.
    pub edge: Option<[usize; 2]>,
    pub condition: f64,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// ε_n = Re E_n.
    pub fn energy(&self, n: usize) -> f64 {
        self.values[n].re
    }

    /// ζ_n = −2 Im E_n.
    pub fn decay_rate(&self, n: usize) -> f64 {
        -2.0 * self.values[n].im
    }

    pub fn max_abs_im(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.im.abs()))
    }

    pub fn max_abs_re(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.re.abs()))
    }

    pub fn is_bulk(&self, n: usize) -> bool {
        self.edge.is_none_or(|e| !e.contains(&n))
    }
}

fn find_clusters(values: &[C64], scale: f64) -> Vec<Vec<usize>> {
    let tol = CLUSTER_TOLERANCE * scale.max(f64::MIN_POSITIVE);
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            if (values[i] - values[j]).norm() <= tol {
                match clusters.iter_mut().find(|c| c.contains(&i)) {
                    Some(c) => {
                        if !c.contains(&j) {
                            c.push(j)
                        }
                    }
                    None => clusters.push(vec![i, j]),
                }
            }
        }
    }
    clusters
}

/// Two smallest |E|, kept only if both lie below half of the smallest bulk |E|.
fn find_edge(values: &[C64]) -> Option<[usize; 2]> {
    if values.len() < 4 {
        return None;
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].norm().total_cmp(&values[b].norm()));
    let bulk_min = values[order[2]].norm();
    let edge_max = values[order[1]].norm();
    if edge_max < 0.5 * bulk_min {
        let mut e = [order[0], order[1]];
        e.sort();
        Some(e)
    } else {
        None
    }
}

pub fn eigensolve_matrix(h: &Array2<C64>) -> Result<ComplexSpectrum> {
    let mut bi = eig_pair(h)?;
    bi.sort_lexicographic();
    let scale = max_abs(h);
    let clusters = find_clusters(&bi.values, scale);
    let edge = find_edge(&bi.values);
    Ok(ComplexSpectrum { values: bi.values, right: bi.right, left: bi.left, clusters, edge, condition: bi.condition })
}

pub fn eigensolve(h: &ChainHamiltonian) -> Result<ComplexSpectrum> {
    eigensolve_matrix(&h.matrix)
}

#[derive(Debug, Clone)]
pub struct SimilarityTransform {
    /// Diagonal of S, `s[0] = 1`.
    pub s: Vec<C64>,
    /// √(J_L/J_R) of the first cell.
    pub l1: C64,
    /// √(G_L/G_R) of the first bond.
    pub l2: C64,
    /// False when any ratio carries a phase.
    pub real: bool,
    /// Amplitude decay length in unit cells implied by |l1·l2|.
    pub localization_length_cells: f64,
}

/// Diagonal S with `s_{i+1}/s_i = √(H[i][i+1]/H[i+1][i])`, so S H S⁻¹ is
/// symmetric (Hermitian when the ratios are real and positive).
pub fn similarity_transform(couplings: &ChainCouplings) -> Result<SimilarityTransform> {
    let n = couplings.n_cells();
    if n == 0 {
        return Err(Error::Domain("empty chain".into()));
    }
    let mut ratios = Vec::with_capacity(2 * n - 1);
    for c in 0..n {
        let (jl, jr) = couplings.intra[c];
        ratios.push((jl, jr));
        if c + 1 < n {
            ratios.push(couplings.inter[c]);
        }
    }
    let mut s = vec![C64::new(1.0, 0.0)];
    let mut real = true;
    for &(up, down) in &ratios {
        if down == ZERO {
            return Err(Error::Domain("similarity transform needs nonzero J_R and G_R".into()));
        }
        let q = up / down;
        if q.im.abs() > 1e-12 * q.norm() || q.re <= 0.0 {
            real = false;
        }
        let last = *s.last().unwrap();
        s.push(last * q.sqrt());
    }
    if !real {
        log::warn!("couplings carry phases; similarity transform is complex");
    }
    let l1 = (couplings.intra[0].0 / couplings.intra[0].1).sqrt();
    let l2 = if n > 1 { (couplings.inter[0].0 / couplings.inter[0].1).sqrt() } else { C64::new(1.0, 0.0) };
    let growth = (l1 * l2).norm().ln();
    let localization_length_cells = if growth == 0.0 { f64::INFINITY } else { 1.0 / growth.abs() };
    Ok(SimilarityTransform { s, l1, l2, real, localization_length_cells })
}

impl SimilarityTransform {
    /// S H S⁻¹.
    pub fn apply(&self, h: &Array2<C64>) -> Array2<C64> {
        Array2::from_shape_fn(h.dim(), |(i, j)| self.s[i] * h[[i, j]] / self.s[j])
    }
}

#[derive(Debug, Clone)]
pub struct SkinProfile {
    /// `prob[[n, j]] = |ψ_{n,j}|²` for normalized right eigenvector n.
    pub prob: Array2<f64>,
    pub edge: Option<[usize; 2]>,
}

pub fn skin_profile(spec: &ComplexSpectrum) -> SkinProfile {
    let (l, m) = spec.right.dim();
    let mut prob = Array2::zeros((m, l));
    for n in 0..m {
        let col = spec.right.column(n);
        let norm: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        for j in 0..l {
            prob[[n, j]] = col[j].norm_sqr() / norm;
        }
    }
    SkinProfile { prob, edge: spec.edge }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CouplingSet, PhysicalConfig};
    use crate::numerics::{c, conj_transpose, frobenius_norm};

    fn reference_nh() -> NhCouplings {
        CouplingSet::from_config(&PhysicalConfig::reference()).unwrap().nh
    }

    fn nh(jl: f64, jr: f64, gl: f64, gr: f64) -> NhCouplings {
        NhCouplings {
            j_l: c(jl),
            j_r: c(jr),
            g_l: c(gl),
            g_r: c(gr),
            diag_decay_a: 0.0,
            diag_decay_b: 0.0,
            diag_decay_a_next: 0.0,
            diag_shift: [0.0; 3],
        }
    }

    #[test]
    fn single_cell_and_hermitian_limits() {
        let h = build_chain(&nh(0.3, 0.2, 0.5, 0.6), 1, Boundary::Obc).unwrap();
        assert_eq!(h.matrix, ndarray::array![[ZERO, c(0.3)], [c(0.2), ZERO]]);
        let spec = eigensolve(&h).unwrap();
        let e = (0.3f64 * 0.2).sqrt();
        assert!((spec.values[0] - c(-e)).norm() < 1e-14 && (spec.values[1] - c(e)).norm() < 1e-14);

        let herm = build_chain(&nh(0.3, 0.3, 0.5, 0.5), 6, Boundary::Pbc).unwrap();
        assert!(max_abs(&(&herm.matrix - &conj_transpose(&herm.matrix))) == 0.0);
        assert!(build_chain(&nh(0.3, 0.3, 0.5, 0.5), 1, Boundary::Pbc).is_err());
    }

    #[test]
    fn pbc_corner_orientation() {
        let h = build_chain(&nh(1.0, 2.0, 3.0, 4.0), 3, Boundary::Pbc).unwrap().matrix;
        assert_eq!(h[[5, 0]], c(3.0));
        assert_eq!(h[[0, 5]], c(4.0));
        assert_eq!(h[[1, 2]], c(3.0));
        assert_eq!(h[[2, 1]], c(4.0));
    }

    #[test]
    fn reference_chain_spectrum() {
        let h = build_chain(&reference_nh(), 20, Boundary::Obc).unwrap();
        assert_eq!(h.chiral_residual(), 0.0);
        let spec = eigensolve(&h).unwrap();
        assert!(spec.max_abs_im() <= 1e-6 * spec.max_abs_re());
        let edge = spec.edge.expect("two midgap states");
        assert_eq!(edge, [19, 20]);
        // ±E pairing
        let n = spec.len();
        for k in 0..n {
            assert!((spec.values[k] + spec.values[n - 1 - k]).norm() < 1e-9);
        }
        // residuals and biorthonormality
        let norm = frobenius_norm(&h.matrix);
        for k in 0..n {
            let v = spec.right.column(k);
            let r = h.matrix.dot(&v) - v.mapv(|z| z * spec.values[k]);
            assert!(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() <= 1e-9 * norm);
        }
        let gram = conj_transpose(&spec.left).dot(&spec.right);
        for ((i, j), z) in gram.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((z - c(want)).norm() < 1e-9);
        }
    }

    #[test]
    fn trivial_chain_has_no_edge_states() {
        let h = build_chain(&nh(0.5, 0.45, 0.2, 0.22), 20, Boundary::Obc).unwrap();
        assert!(eigensolve(&h).unwrap().edge.is_none());
    }

    #[test]
    fn diagonal_input_gives_standard_basis() {
        let d = Array2::from_diag(&ndarray::arr1(&[c(3.0), c(-1.0), c(2.0)]));
        let spec = eigensolve_matrix(&d).unwrap();
        let want = [-1.0, 2.0, 3.0];
        for (k, w) in want.iter().enumerate() {
            assert_eq!(spec.values[k], c(*w));
            let col = spec.right.column(k);
            assert_eq!(col.iter().filter(|z| z.norm() > 0.0).count(), 1);
        }
    }

    #[test]
    fn hermitization_of_reference_chain() {
        let h = build_chain(&reference_nh(), 20, Boundary::Obc).unwrap();
        let st = similarity_transform(&h.couplings).unwrap();
        assert!(st.real);
        assert_eq!(st.s[0], c(1.0));
        let hh = st.apply(&h.matrix);
        let resid = max_abs(&(&hh - &conj_transpose(&hh)));
        assert!(resid <= 1e-10 * max_abs(&h.matrix), "{resid}");
        let a = eigensolve_matrix(&h.matrix).unwrap().values;
        let b = eigensolve_matrix(&hh).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).norm() < 1e-8);
        }
        // alternating geometric growth
        assert!((st.s[1] / st.s[0] - st.l1).norm() < 1e-14);
        assert!((st.s[2] / st.s[1] - st.l2).norm() < 1e-14);
        assert!(st.localization_length_cells > 1.0);
    }

    #[test]
    fn reciprocal_transform_is_identity() {
        let h = build_chain(&nh(0.3, 0.3, 0.5, 0.5), 5, Boundary::Obc).unwrap();
        let st = similarity_transform(&h.couplings).unwrap();
        assert!(st.s.iter().all(|&z| z == c(1.0)));
        assert!(st.localization_length_cells.is_infinite());
    }

    #[test]
    fn complex_couplings_flag_the_transform() {
        let mut cc = ChainCouplings::uniform(&nh(0.3, 0.2, 0.5, 0.6), 3, Boundary::Obc);
        cc.intra[1].0 = C64::new(0.1, 0.2);
        assert!(!similarity_transform(&cc).unwrap().real);
    }

    #[test]
    fn skin_follows_similarity_envelope() {
        let h = build_chain(&reference_nh(), 20, Boundary::Obc).unwrap();
        let spec = eigensolve(&h).unwrap();
        let prof = skin_profile(&spec);
        let st = similarity_transform(&h.couplings).unwrap();
        let l = h.size();
        // Bulk density summed over states against |s_j|^{-2}.
        let dens: Vec<f64> = (0..l)
            .map(|j| (0..l).filter(|&n| spec.is_bulk(n)).map(|n| prof.prob[[n, j]]).sum())
            .collect();
        let env: Vec<f64> = st.s.iter().map(|z| z.norm_sqr().recip()).collect();
        let k = dens.iter().sum::<f64>() / env.iter().sum::<f64>();
        // The two end sites host the excluded edge pair.
        for j in 1..l - 1 {
            let ratio = dens[j] / (k * env[j]);
            assert!((0.8..=1.25).contains(&ratio), "site {j}: {ratio}");
        }
        for n in 0..l {
            let s: f64 = prof.prob.row(n).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }
}
