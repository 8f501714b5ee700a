//! Local times of integer-valued observables on finite Markov shifts.
//!
//! * [`chain`]: validated Markov shifts `(P, π, φ)` and their JSON form.
//! * [`spectral`]: transfer and twisted operators, the leading eigenbranch
//!   `λ_t`, the asymptotic variance and the aperiodicity scan.
//! * [`exact_law`]: the exact law of `S_n` by dynamic programming and by
//!   Fourier inversion, local limit scans and potential-kernel sums.
//! * [`localtime`]: simulated local-time fields, occupation measures,
//!   moduli of continuity and moment statistics.
//! * [`stats`]: KS distances and the reference law of `l(0)`.
//!
//! The deterministic numerics are generic over [`scalar::Real`] (`f32` or
//! `f64`); Monte Carlo code works in `f64`. The aliases below fix the
//! scalar for the common case.

// `!(x > 0)` is used on purpose to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod chain;
pub mod exact_law;
pub mod export;
pub mod linalg;
pub mod localtime;
pub mod models;
pub mod sampling;
pub mod scalar;
pub mod spectral;
pub mod stats;

pub use chain::{build_chain, stationary_distribution, ChainError, ChainSpec};
pub use exact_law::{exact_law, law_via_inversion, local_limit_scan, potential_kernel, ExactLawError};
pub use sampling::{sample_paths, PathBatch};
pub use scalar::Real;
pub use spectral::{asymptotic_variance, check_aperiodicity, eigen_branch, AperiodicityReport, SpectralError};

pub type MarkovShift64 = chain::MarkovShift<f64>;
pub type MarkovShift32 = chain::MarkovShift<f32>;
pub type SpectralBranch64 = spectral::SpectralBranch<f64>;
pub type SpectralBranch32 = spectral::SpectralBranch<f32>;
pub type ExactLaw64 = exact_law::ExactLaw<f64>;
pub type ExactLaw32 = exact_law::ExactLaw<f32>;
pub type KernelCurve64 = exact_law::KernelCurve<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
