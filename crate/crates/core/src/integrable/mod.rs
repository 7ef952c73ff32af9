//! Integrable regimes: symmetric pairs and their invariant tori, chains of
//! subalgebras, and the Suslov problem.

mod chain;
mod orbits;
mod suslov;
mod symmetric;
mod torus;

pub use chain::{adjoint_invariant_count, CascadeField, ChainReduction};
pub use orbits::{detect_period, PeriodEstimate};
pub use suslov::{asymptotic_diagnostics, suslov_field, AsymptoticReport, CloudOptions, CloudStats, SuslovProblem};
pub use symmetric::{
    check_symmetric_pair, isotypic_decomposition, pair_monitors, split_equations, pair_integrals,
    IsotypicBlocks, PairDecomposition, PairIntegrals, PairResiduals, ReducedField, SplitRates, SymmetricPairSetup,
    PAIR_TOL,
};
pub use torus::{
    adaptive_quadrature, rotation_numbers, tail_slope, unwrap_angles, FrequencyReport, TorusData, TorusLevels,
    QUADRATURE_TOL,
};
