//! Design and verification of noise-insensitive probes for distributed
//! quantum sensor networks.
//!
//! A field `B(r) = sum_k alpha_k f_k(r)` is sampled by `J` sensors, each a
//! register of `n_j` qubits. One coefficient is the signal; the others may be
//! designated as noise. The crate
//!
//! - samples the generating functions into a coefficient matrix ([`field`]),
//! - finds the probe with maximal signal Fisher information that is exactly
//!   blind to the noise generators ([`design`]),
//! - simulates evolution and the worst-case twirl at the level of site
//!   eigenvalues ([`branch`]) with a qubit-level cross-check ([`oracle`]),
//! - quantifies the advantage of entangled probes over sensor-product states
//!   in the alternating-signal scenario ([`advantage`]).

pub mod advantage;
pub mod branch;
pub mod design;
pub mod error;
pub mod field;
pub mod linalg;
pub mod lp;
pub mod oracle;

pub use advantage::{
    build_alternating, enumerate_blocks, product_advantage_sweep, AdvantageReport,
    AlternatingScenario, BlockCensus,
};
pub use branch::{
    evolve, parity_fisher, probe_state, product_state, qfi_mixed, qfi_pure, twirl, Block,
    BlockDecomposition, BranchState, EvolutionParams, SiteAmplitudes, C64,
};
pub use design::{
    design, noiseless_optimum, optimal_probe, optimal_probe_integer, perp_decompose, DesignProblem,
    PerpDecomposition, ProbePair,
};
pub use error::{Error, Result};
pub use field::{
    fourier_extremal_positions, rank_report, sample_coefficients, CoefficientMatrix,
    GeneratingFunctionSet, RankReport, SensorArray,
};
pub use oracle::{statevector_oracle, statevector_parity_fisher, OracleResult};
