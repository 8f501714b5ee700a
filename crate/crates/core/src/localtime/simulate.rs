use rayon::prelude::*;

use super::field::{FieldBuilder, LocalTimeField};
use crate::chain::MarkovShift;
use crate::sampling::{trajectory_rng, Sampler};
use crate::scalar::Real;

/// Simulate `count` stationary trajectories of `n` steps and apply `f` to
/// each trajectory's local-time field.
///
/// Results come back in trajectory order, and trajectory `i` always uses
/// stream `(seed, i)`, so the output does not depend on the thread count.
pub fn simulate_fields<T, R, F>(shift: &MarkovShift<T>, n: usize, count: usize, seed: u64, f: F) -> Vec<R>
where
    T: Real,
    R: Send,
    F: Fn(usize, &LocalTimeField) -> R + Sync,
{
    let sampler = Sampler::new(shift);
    let (lo, hi) = (shift.phi_min(), shift.phi_max());
    (0..count)
        .into_par_iter()
        .map_init(
            || FieldBuilder::new(n, lo, hi),
            |builder, i| {
                let mut rng = trajectory_rng(seed, i as u64);
                let field = builder.build(sampler.increments(&mut rng, n));
                f(i, &field)
            },
        )
        .collect()
}
