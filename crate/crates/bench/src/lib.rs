//! Fixtures shared by the kernel benchmarks.

use nhssh_core::chain::build_chain;
use nhssh_core::dissipation::{build_liouvillian, ThreeLevelModel};
use nhssh_core::numerics::C64;
use nhssh_core::{Boundary, ChainHamiltonian, CouplingSet, PhysicalConfig};

pub use nhssh_core;

/// Reference chain of `n` cells with uniform couplings.
pub fn reference_chain(n: usize, boundary: Boundary) -> ChainHamiltonian {
    let nh = CouplingSet::from_config(&PhysicalConfig::reference()).expect("reference config").nh;
    build_chain(&nh, n, boundary).expect("chain")
}

/// 9x9 Liouvillian of the driven three-level system at Ω = 0.3 Γ.
pub fn three_level_liouvillian() -> ndarray::Array2<C64> {
    let gamma = 1.0 / 0.118;
    build_liouvillian(&ThreeLevelModel::new(0.3 * gamma, gamma).expect("model"))
}
