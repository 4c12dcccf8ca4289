//! Critical weight distributions: `F(0-) = 0`, `F(0) = 1/2`.
//!
//! Every family puts an atom of mass 1/2 at zero. The positive part is
//! described by the family parameters:
//!
//! | family | positive part | `I` |
//! |---|---|---|
//! | `bernoulli(i)` | atom 1/2 at `i` | `i` |
//! | `zero_atom_plus_uniform(a, b)` | uniform on `[a, b]`, mass 1/2 | `a` |
//! | `zero_atom_plus_shifted_exponential(a, lambda)` | `a + Exp(lambda)`, mass 1/2 | `a` |
//! | `zero_atom_plus_pareto(a, alpha)` | Pareto with scale `a`, index `alpha`, mass 1/2 | `a` |
//! | `discrete(atoms)` | finitely many atoms, masses given as decimals | smallest positive atom |
//!
//! A spec has a short textual form used on the command line
//! (`bernoulli:1`, `uniform:1,2`, `exponential:0,1`, `pareto:1,0.5`,
//! `discrete:0=0.5,1=0.25,3=0.25`) and a structured config block:
//!
//! ```toml
//! family = "zero_atom_plus_uniform"
//! a = "1"
//! b = "2"
//! ```
//!
//! Discrete atoms are written as `atoms = [["0", "0.5"], ["1", "0.5"]]`
//! (value, mass). Masses are parsed as exact decimals so that `F(0) = 1/2`
//! is checked without rounding.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Mass = Ratio<i64>;

#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub value: f64,
    pub mass: Mass,
    /// The decimal text the atom was parsed from, kept for round-trips.
    value_text: String,
    mass_text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub enum DistributionSpec {
    Bernoulli { i: f64 },
    ZeroAtomPlusUniform { a: f64, b: f64 },
    ZeroAtomPlusShiftedExponential { a: f64, lambda: f64 },
    ZeroAtomPlusPareto { a: f64, alpha: f64 },
    Discrete { atoms: Vec<Atom> },
}

const TWO53: f64 = 9_007_199_254_740_992.0;

impl DistributionSpec {
    pub fn bernoulli(i: f64) -> Result<Self> {
        Self::Bernoulli { i }.validated()
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        Self::ZeroAtomPlusUniform { a, b }.validated()
    }

    pub fn shifted_exponential(a: f64, lambda: f64) -> Result<Self> {
        Self::ZeroAtomPlusShiftedExponential { a, lambda }.validated()
    }

    pub fn pareto(a: f64, alpha: f64) -> Result<Self> {
        Self::ZeroAtomPlusPareto { a, alpha }.validated()
    }

    /// Atoms as `(value, mass)` decimal strings.
    pub fn discrete<S: AsRef<str>>(atoms: &[(S, S)]) -> Result<Self> {
        let atoms = atoms
            .iter()
            .map(|(v, m)| Atom::parse(v.as_ref(), m.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Self::Discrete { atoms }.validated()
    }

    /// One representative of each built-in family.
    pub fn builtin_families() -> Vec<DistributionSpec> {
        vec![
            Self::bernoulli(1.0).unwrap(),
            Self::uniform(1.0, 2.0).unwrap(),
            Self::shifted_exponential(0.0, 1.0).unwrap(),
            Self::pareto(1.0, 0.5).unwrap(),
            Self::discrete(&[("0", "0.5"), ("1", "0.25"), ("2.5", "0.25")]).unwrap(),
        ]
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Bernoulli { .. } => "bernoulli",
            Self::ZeroAtomPlusUniform { .. } => "zero_atom_plus_uniform",
            Self::ZeroAtomPlusShiftedExponential { .. } => "zero_atom_plus_shifted_exponential",
            Self::ZeroAtomPlusPareto { .. } => "zero_atom_plus_pareto",
            Self::Discrete { .. } => "discrete",
        }
    }

    fn validated(mut self) -> Result<Self> {
        let finite = |field: &str, x: f64| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, "must be finite"))
            }
        };
        match &mut self {
            Self::Bernoulli { i } => {
                finite("i", *i)?;
                if *i <= 0.0 {
                    return Err(Error::config("i", "must be positive"));
                }
            }
            Self::ZeroAtomPlusUniform { a, b } => {
                finite("a", *a)?;
                finite("b", *b)?;
                if *a < 0.0 {
                    return Err(Error::config("a", "must be nonnegative"));
                }
                if *b <= *a {
                    return Err(Error::config("b", "must exceed a"));
                }
            }
            Self::ZeroAtomPlusShiftedExponential { a, lambda } => {
                finite("a", *a)?;
                finite("lambda", *lambda)?;
                if *a < 0.0 {
                    return Err(Error::config("a", "must be nonnegative"));
                }
                if *lambda <= 0.0 {
                    return Err(Error::config("lambda", "must be positive"));
                }
            }
            Self::ZeroAtomPlusPareto { a, alpha } => {
                finite("a", *a)?;
                finite("alpha", *alpha)?;
                if *a <= 0.0 {
                    return Err(Error::config("a", "must be positive"));
                }
                if *alpha <= 0.0 {
                    return Err(Error::config("alpha", "must be positive"));
                }
            }
            Self::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::config("atoms", "no atoms given"));
                }
                atoms.sort_by(|x, y| x.value.total_cmp(&y.value));
                for w in atoms.windows(2) {
                    if w[0].value == w[1].value {
                        return Err(Error::config("atoms", format!("duplicate atom at {}", w[0].value)));
                    }
                }
                let zero = Mass::new(0, 1);
                for at in atoms.iter() {
                    if at.value < 0.0 {
                        return Err(Error::config("atoms", "negative atom value"));
                    }
                    if at.mass <= zero {
                        return Err(Error::config("atoms", "atom masses must be positive"));
                    }
                }
                let total: Mass = atoms.iter().map(|a| a.mass).sum();
                if total != Mass::new(1, 1) {
                    return Err(Error::config("atoms", format!("masses sum to {total}, not 1")));
                }
                if atoms.len() < 2 {
                    return Err(Error::config("atoms", "need a positive atom"));
                }
            }
        }
        let f0 = self.cdf_at_zero_exact();
        if f0 != Mass::new(1, 2) {
            return Err(Error::config("family", format!("F(0) = {f0}; only critical distributions (F(0) = 1/2) are supported")));
        }
        Ok(self)
    }

    /// `F(0)` as an exact rational; 1/2 for every accepted spec.
    pub fn cdf_at_zero_exact(&self) -> Mass {
        match self {
            Self::Discrete { atoms } => atoms.iter().filter(|a| a.value <= 0.0).map(|a| a.mass).sum(),
            _ => Mass::new(1, 2),
        }
    }

    /// `F(x) = P(t <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match self {
            Self::Discrete { atoms } => {
                let m: Mass = atoms.iter().filter(|a| a.value <= x).map(|a| a.mass).sum();
                ratio_f64(m)
            }
            _ => 0.5 + self.positive_mass_up_to(x),
        }
    }

    /// `P(0 < t <= x)`, computed without cancellation against the atom at 0.
    pub fn positive_mass_up_to(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Bernoulli { i } => {
                if x >= i {
                    0.5
                } else {
                    0.0
                }
            }
            Self::ZeroAtomPlusUniform { a, b } => 0.5 * ((x - a) / (b - a)).clamp(0.0, 1.0),
            Self::ZeroAtomPlusShiftedExponential { a, lambda } => {
                if x <= a {
                    0.0
                } else {
                    -0.5 * (-lambda * (x - a)).exp_m1()
                }
            }
            Self::ZeroAtomPlusPareto { a, alpha } => {
                if x <= a {
                    0.0
                } else {
                    -0.5 * (-alpha * ((x - a) / a).ln_1p()).exp_m1()
                }
            }
            Self::Discrete { ref atoms } => {
                let m: Mass = atoms.iter().filter(|a| a.value > 0.0 && a.value <= x).map(|a| a.mass).sum();
                ratio_f64(m)
            }
        }
    }

    /// `P(I < t <= I + a)`.
    pub fn mass_above_infimum(&self, a: f64) -> f64 {
        let i = self.infimum();
        if a <= 0.0 {
            return 0.0;
        }
        let upto = self.positive_mass_up_to(i + a);
        let at_i = if i > 0.0 { self.positive_mass_up_to(i) } else { 0.0 };
        upto - at_i
    }

    /// Generalized inverse `F^{-1}(u) = inf{y : F(y) >= u}` on `(0, 1)`.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::invalid(format!("inverse_cdf argument {u} outside (0, 1)")));
        }
        Ok(self.inverse_cdf_unchecked(u))
    }

    /// [`inverse_cdf`](Self::inverse_cdf) without the range check.
    #[inline]
    pub fn inverse_cdf_unchecked(&self, u: f64) -> f64 {
        if u <= 0.5 {
            return 0.0;
        }
        match *self {
            Self::Bernoulli { i } => i,
            Self::ZeroAtomPlusUniform { a, b } => a + (b - a) * (2.0 * u - 1.0),
            Self::ZeroAtomPlusShiftedExponential { a, lambda } => a - (2.0 - 2.0 * u).ln() / lambda,
            Self::ZeroAtomPlusPareto { a, alpha } => a * (2.0 - 2.0 * u).powf(-1.0 / alpha),
            Self::Discrete { ref atoms } => {
                // u > 1/2 has binary exponent -1, so u * 2^53 is an exact integer.
                let scaled = (u * TWO53) as i128;
                let mut cum = Mass::new(0, 1);
                for at in atoms {
                    cum += at.mass;
                    let (p, q) = (*cum.numer() as i128, *cum.denom() as i128);
                    if p * (1i128 << 53) >= scaled * q {
                        return at.value;
                    }
                }
                atoms.last().map(|a| a.value).unwrap_or(0.0)
            }
        }
    }

    /// `I = inf{x > 0 : F(x) > 1/2}`.
    pub fn infimum(&self) -> f64 {
        match *self {
            Self::Bernoulli { i } => i,
            Self::ZeroAtomPlusUniform { a, .. } => a,
            Self::ZeroAtomPlusShiftedExponential { a, .. } => a,
            Self::ZeroAtomPlusPareto { a, .. } => a,
            Self::Discrete { ref atoms } => atoms.iter().find(|a| a.value > 0.0).map(|a| a.value).unwrap_or(0.0),
        }
    }

    /// Whether `P(t = I) > 0` with `I > 0`.
    pub fn has_atom_at_infimum(&self) -> bool {
        matches!(self, Self::Bernoulli { .. } | Self::Discrete { .. })
    }

    /// Whether `E min(t_1, ..., t_6)^2 < inf` for i.i.d. weights.
    ///
    /// `P(min > x) = P(t > x)^6`; only the Pareto tail can spoil this, and
    /// it does so exactly when `6 alpha <= 2`.
    pub fn min6_sq_finite(&self) -> bool {
        match *self {
            Self::ZeroAtomPlusPareto { alpha, .. } => 6.0 * alpha > 2.0,
            _ => true,
        }
    }

    /// Whether `t` itself has a finite mean.
    pub fn mean_finite(&self) -> bool {
        match *self {
            Self::ZeroAtomPlusPareto { alpha, .. } => alpha > 1.0,
            _ => true,
        }
    }

    /// Upper end of the support, or a far quantile (positive mass
    /// `1/2 - 2^-41`) for unbounded families.
    pub fn support_scale(&self) -> f64 {
        match *self {
            Self::Bernoulli { i } => i,
            Self::ZeroAtomPlusUniform { b, .. } => b,
            Self::ZeroAtomPlusShiftedExponential { a, lambda } => a + 41.0 * std::f64::consts::LN_2 / lambda,
            Self::ZeroAtomPlusPareto { a, alpha } => a * 2f64.powf(41.0 / alpha),
            Self::Discrete { ref atoms } => atoms.last().map(|a| a.value).unwrap_or(0.0),
        }
    }

    /// Config block as TOML text.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(&RawSpec::from(self.clone())).expect("spec serializes")
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: RawSpec = toml::from_str(s).map_err(|e| Error::config("distribution", e.message().to_string()))?;
        DistributionSpec::try_from(raw)
    }
}

fn ratio_f64(m: Mass) -> f64 {
    *m.numer() as f64 / *m.denom() as f64
}

impl Atom {
    pub fn parse(value: &str, mass: &str) -> Result<Self> {
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::config("atoms", format!("bad atom value `{value}`")))?;
        Ok(Atom {
            value: v,
            mass: parse_decimal(mass)?,
            value_text: value.trim().to_string(),
            mass_text: mass.trim().to_string(),
        })
    }
}

/// Exact rational from a plain decimal such as `0.125` or `1/3`.
pub fn parse_decimal(s: &str) -> Result<Mass> {
    let s = s.trim();
    let bad = || Error::config("atoms", format!("bad mass `{s}` (expected a decimal or p/q)"));
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p.trim().parse().map_err(|_| bad())?;
        let q: i64 = q.trim().parse().map_err(|_| bad())?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Mass::new(p, q));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 15 || !frac.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let int: i64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let den = 10i64.pow(frac.len() as u32);
    let num: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
    let sign = if s.starts_with('-') { -1 } else { 1 };
    Ok(Mass::new(int * den + sign * num, den))
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for DistributionSpec {
    /// Short form, parseable by [`FromStr`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bernoulli { i } => write!(f, "bernoulli:{}", fmt_num(*i)),
            Self::ZeroAtomPlusUniform { a, b } => write!(f, "uniform:{},{}", fmt_num(*a), fmt_num(*b)),
            Self::ZeroAtomPlusShiftedExponential { a, lambda } => {
                write!(f, "exponential:{},{}", fmt_num(*a), fmt_num(*lambda))
            }
            Self::ZeroAtomPlusPareto { a, alpha } => write!(f, "pareto:{},{}", fmt_num(*a), fmt_num(*alpha)),
            Self::Discrete { atoms } => {
                write!(f, "discrete:")?;
                for (k, a) in atoms.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}={}", a.value_text, a.mass_text)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (family, params) = s.split_once(':').unwrap_or((s, ""));
        let nums = || -> Result<Vec<f64>> {
            params
                .split(',')
                .map(|p| {
                    p.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config("dist", format!("bad parameter `{p}` in `{s}`")))
                })
                .collect()
        };
        let want = |v: Vec<f64>, k: usize| -> Result<Vec<f64>> {
            if v.len() == k {
                Ok(v)
            } else {
                Err(Error::config("dist", format!("`{family}` takes {k} parameter(s), got {}", v.len())))
            }
        };
        match family.trim() {
            "bernoulli" => Self::bernoulli(want(nums()?, 1)?[0]),
            "uniform" | "zero_atom_plus_uniform" => {
                let v = want(nums()?, 2)?;
                Self::uniform(v[0], v[1])
            }
            "exponential" | "zero_atom_plus_shifted_exponential" => {
                let v = want(nums()?, 2)?;
                Self::shifted_exponential(v[0], v[1])
            }
            "pareto" | "zero_atom_plus_pareto" => {
                let v = want(nums()?, 2)?;
                Self::pareto(v[0], v[1])
            }
            "discrete" => {
                let atoms: Vec<(String, String)> = params
                    .split(',')
                    .map(|p| {
                        p.split_once('=')
                            .map(|(v, m)| (v.to_string(), m.to_string()))
                            .ok_or_else(|| Error::config("dist", format!("discrete atom `{p}` is not value=mass")))
                    })
                    .collect::<Result<_>>()?;
                Self::discrete(&atoms)
            }
            other => Err(Error::config("dist", format!("unknown family `{other}`"))),
        }
    }
}

/// Structured-text form: family name plus named decimal-string parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atoms: Option<Vec<(String, String)>>,
}

impl TryFrom<RawSpec> for DistributionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let get = |name: &str, v: &Option<String>| -> Result<f64> {
            let s = v
                .as_ref()
                .ok_or_else(|| Error::config(name, format!("missing for family `{}`", raw.family)))?;
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(name, format!("`{s}` is not a decimal number")))
        };
        match raw.family.as_str() {
            "bernoulli" => Self::bernoulli(get("i", &raw.i)?),
            "zero_atom_plus_uniform" => Self::uniform(get("a", &raw.a)?, get("b", &raw.b)?),
            "zero_atom_plus_shifted_exponential" => Self::shifted_exponential(get("a", &raw.a)?, get("lambda", &raw.lambda)?),
            "zero_atom_plus_pareto" => Self::pareto(get("a", &raw.a)?, get("alpha", &raw.alpha)?),
            "discrete" => {
                let atoms = raw.atoms.as_ref().ok_or_else(|| Error::config("atoms", "missing for family `discrete`"))?;
                Self::discrete(atoms)
            }
            other => Err(Error::config("family", format!("unknown family `{other}`"))),
        }
    }
}

impl From<DistributionSpec> for RawSpec {
    fn from(spec: DistributionSpec) -> Self {
        let mut raw = RawSpec {
            family: spec.family_name().to_string(),
            i: None,
            a: None,
            b: None,
            lambda: None,
            alpha: None,
            atoms: None,
        };
        match spec {
            DistributionSpec::Bernoulli { i } => raw.i = Some(fmt_num(i)),
            DistributionSpec::ZeroAtomPlusUniform { a, b } => {
                raw.a = Some(fmt_num(a));
                raw.b = Some(fmt_num(b));
            }
            DistributionSpec::ZeroAtomPlusShiftedExponential { a, lambda } => {
                raw.a = Some(fmt_num(a));
                raw.lambda = Some(fmt_num(lambda));
            }
            DistributionSpec::ZeroAtomPlusPareto { a, alpha } => {
                raw.a = Some(fmt_num(a));
                raw.alpha = Some(fmt_num(alpha));
            }
            DistributionSpec::Discrete { atoms } => {
                raw.atoms = Some(atoms.into_iter().map(|a| (a.value_text, a.mass_text)).collect());
            }
        }
        raw
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;
    use proptest::prelude::*;

    #[test]
    fn inverse_cdf_examples() {
        let b = DistributionSpec::bernoulli(1.0).unwrap();
        assert_eq!(b.inverse_cdf(0.3).unwrap(), 0.0);
        assert_eq!(b.inverse_cdf(0.7).unwrap(), 1.0);
        let u = DistributionSpec::uniform(2.0, 4.0).unwrap();
        assert_eq!(u.inverse_cdf(0.75).unwrap(), 3.0);
        assert!(u.inverse_cdf(0.0).is_err());
        assert!(u.inverse_cdf(1.0).is_err());
        assert!(u.inverse_cdf(f64::NAN).is_err());
    }

    #[test]
    fn infimum_examples() {
        assert_eq!(DistributionSpec::bernoulli(1.0).unwrap().infimum(), 1.0);
        assert_eq!(DistributionSpec::uniform(2.0, 4.0).unwrap().infimum(), 2.0);
        assert_eq!(DistributionSpec::shifted_exponential(0.0, 1.0).unwrap().infimum(), 0.0);
    }

    #[test]
    fn infimum_is_consistent_with_cdf() {
        for spec in DistributionSpec::builtin_families() {
            let i = spec.infimum();
            for eps in [1e-9, 1e-6, 1e-3, 0.1, 1.0] {
                assert!(spec.cdf(i + eps) > 0.5, "{spec}: F(I + {eps})");
                if i - eps > 0.0 {
                    assert!(spec.cdf(i - eps) <= 0.5, "{spec}: F(I - {eps})");
                }
            }
            assert_eq!(spec.cdf(-1e-12), 0.0);
            assert!((spec.cdf(0.0) - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn discrete_criticality_is_exact() {
        let d = DistributionSpec::discrete(&[("0", "0.5"), ("1", "0.3"), ("2", "0.2")]).unwrap();
        assert_eq!(d.cdf_at_zero_exact(), Mass::new(1, 2));
        assert!(DistributionSpec::discrete(&[("0", "0.5000001"), ("1", "0.4999999")]).is_err());
        assert!(DistributionSpec::discrete(&[("0", "1/3"), ("1", "2/3")]).is_err());
        assert!(DistributionSpec::discrete(&[("0", "1/2"), ("1", "1/3"), ("4", "1/6")]).is_ok());
        assert!(DistributionSpec::discrete(&[("0", "0.5"), ("1", "0.6")]).is_err());
    }

    #[test]
    fn discrete_inverse_at_cumulative_boundaries() {
        let d = DistributionSpec::discrete(&[("0", "0.5"), ("1", "0.25"), ("3", "0.25")]).unwrap();
        assert_eq!(d.inverse_cdf_unchecked(0.75), 1.0);
        assert_eq!(d.inverse_cdf_unchecked(0.75 + f64::EPSILON), 3.0);
        assert_eq!(d.inverse_cdf_unchecked(0.5 + f64::EPSILON), 1.0);
        assert_eq!(d.inverse_cdf_unchecked(1.0 - f64::EPSILON / 2.0), 3.0);
    }

    #[test]
    fn min6_flag_boundary() {
        assert!(DistributionSpec::pareto(1.0, 0.5).unwrap().min6_sq_finite());
        assert!(!DistributionSpec::pareto(1.0, 1.0 / 3.0).unwrap().min6_sq_finite());
        assert!(!DistributionSpec::pareto(1.0, 0.2).unwrap().min6_sq_finite());
        assert!(DistributionSpec::bernoulli(2.0).unwrap().min6_sq_finite());
    }

    #[test]
    fn short_form_round_trips() {
        for s in ["bernoulli:1", "uniform:1,2", "exponential:0,1", "pareto:1,0.5", "discrete:0=0.5,1=0.25,2.5=0.25"] {
            let spec: DistributionSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
            assert_eq!(spec.to_string().parse::<DistributionSpec>().unwrap(), spec);
        }
        assert!("gamma:1".parse::<DistributionSpec>().is_err());
        assert!("uniform:1".parse::<DistributionSpec>().is_err());
        assert!("uniform:2,1".parse::<DistributionSpec>().is_err());
    }

    #[test]
    fn config_block_round_trips() {
        for spec in DistributionSpec::builtin_families() {
            let text = spec.to_toml_string();
            assert_eq!(DistributionSpec::from_toml_str(&text).unwrap(), spec, "{text}");
        }
        let text = "family = \"zero_atom_plus_uniform\"\na = \"2\"\nb = \"4\"\n";
        assert_eq!(DistributionSpec::from_toml_str(text).unwrap(), DistributionSpec::uniform(2.0, 4.0).unwrap());
        let err = DistributionSpec::from_toml_str("family = \"zero_atom_plus_uniform\"\na = \"2\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "b"), "{err}");
    }

    /// Empirical CDF of inverse-transform samples against `F`.
    fn ks_distance(spec: &DistributionSpec, n: usize, seed: u64) -> f64 {
        let rng = CounterRng::new(seed, 11);
        let mut xs: Vec<f64> = (0..n as u64).map(|c| spec.inverse_cdf_unchecked(rng.uniform(c))).collect();
        xs.sort_by(f64::total_cmp);
        let mut d: f64 = 0.0;
        let mut k = 0;
        while k < n {
            let x = xs[k];
            let mut j = k;
            while j < n && xs[j] == x {
                j += 1;
            }
            let f = spec.cdf(x);
            let below = spec.cdf(x - 1e-12 * x.max(1.0)).min(f);
            d = d.max((j as f64 / n as f64 - f).abs());
            d = d.max((k as f64 / n as f64 - below).abs());
            k = j;
        }
        d
    }

    #[test]
    fn samples_match_cdf_in_ks_distance() {
        for spec in DistributionSpec::builtin_families() {
            let d = ks_distance(&spec, 1_000_000, 3);
            assert!(d < 0.005, "{spec}: KS {d}");
        }
    }

    proptest! {
        #[test]
        fn inverse_cdf_is_monotone(mut us in proptest::collection::vec(1e-9f64..1.0 - 1e-9, 2..60)) {
            us.sort_by(f64::total_cmp);
            for spec in DistributionSpec::builtin_families() {
                let ts: Vec<f64> = us.iter().map(|&u| spec.inverse_cdf(u).unwrap()).collect();
                for w in ts.windows(2) {
                    prop_assert!(w[0] <= w[1]);
                }
                for (&u, &t) in us.iter().zip(&ts) {
                    if u <= 0.5 {
                        prop_assert_eq!(t, 0.0);
                    } else {
                        prop_assert!(t >= spec.infimum());
                    }
                }
            }
        }

        #[test]
        fn inverse_is_generalized_inverse(u in 0.5f64..1.0) {
            for spec in DistributionSpec::builtin_families() {
                let t = spec.inverse_cdf(u).unwrap();
                prop_assert!(spec.cdf(t) >= u - 1e-12);
            }
        }
    }
}
