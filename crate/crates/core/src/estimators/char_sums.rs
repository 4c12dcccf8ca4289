use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::DistributionSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharSums {
    pub n: u64,
    /// `sum_{k=2}^{floor(ln n)} F^{-1}(1/2 + 2^{-k})`.
    pub s1: f64,
    /// The same sum of squares.
    pub s2: f64,
    /// Number of terms, `floor(ln n) - 1`.
    pub terms: u32,
    pub log_base: String,
}

/// Characteristic sums of the low quantiles of `F` above `1/2`, with the
/// natural logarithm.
pub fn char_sums(spec: &DistributionSpec, n: u64) -> Result<CharSums> {
    if n < 8 {
        return Err(Error::invalid(format!("n = {n} below 8")));
    }
    let top = (n as f64).ln().floor() as i32;
    let (mut s1, mut s2) = (0.0, 0.0);
    for k in 2..=top {
        let q = spec.inverse_cdf(0.5 + (-k as f64).exp2())?;
        s1 += q;
        s2 += q * q;
    }
    Ok(CharSums { n, s1, s2, terms: (top - 1) as u32, log_base: "e".into() })
}
