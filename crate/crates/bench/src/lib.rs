//! Fixtures shared by the benchmarks.

use critfpp_core::weights::sample_field;
use critfpp_core::{DistributionSpec, WeightField};

pub const SEED: u64 = 0x5eed;

pub fn bernoulli() -> DistributionSpec {
    DistributionSpec::bernoulli(1.0).expect("valid parameters")
}

pub fn uniform() -> DistributionSpec {
    DistributionSpec::uniform(1.0, 2.0).expect("valid parameters")
}

/// A fixed field of radius `n`.
pub fn field(spec: &DistributionSpec, n: u32) -> WeightField {
    sample_field(spec, n, SEED).expect("field fits in memory")
}
