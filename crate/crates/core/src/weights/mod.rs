//! Critical weight distributions, seeded fields and low-weight thresholds.

mod distribution;
mod field;
mod low_weight;

pub use distribution::{parse_decimal, Atom, DistributionSpec, Mass, RawSpec};
pub use field::{sample_field, SiteLaw, WeightField, DEFAULT_FIELD_LIMIT_BYTES, FIELD_STREAM};
pub use low_weight::{classify_low_weight, low_weight_threshold, required_mass, search_grid, LowWeightParams};

/// Which weights a passage time is computed with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    General,
    Bernoulli,
}
