//! Shared fixtures for the benchmarks.

use maxmin_bandits::generator::generate_indexed;
use maxmin_bandits::{BanditInstance, GeneratorSpec};

/// A default-shaped random instance (100 arms, 10 groups, Bernoulli).
pub fn instance(gap: f64, id: u32) -> BanditInstance {
    generate_indexed(&GeneratorSpec::new(gap), 7, id).expect("default spec is valid")
}
