//! Local-time fields of simulated trajectories and the statistics built
//! on them.

pub mod field;
pub mod modulus;
pub mod moments;
pub mod occupation;
pub mod simulate;

pub use field::{local_time_field, FieldBuilder, FieldRow, LocalTimeField};
pub use modulus::{modulus, plain_modulus, sparse_modulus, ModulusReport};
pub use moments::{moment_rhs, moment_statistics, moment_statistics_multi, MomentError, MomentRecord, TailRecord};
pub use occupation::{occupation, occupation_of_field, riemann_occupation, OccupationResult, Strips};
pub use simulate::simulate_fields;
