use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use critfpp_core::estimators::{parse_sigma, Geometry, DEFAULT_MAX_RADIUS};
use critfpp_core::{DistributionSpec, SiteLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const DEFAULT_TOLERANCES: &str = include_str!("../tolerances.toml");

/// Criterion ids and the tolerance key each one reads.
pub const CRITERIA: [(u32, &str); 13] = [
    (1, "duality"),
    (2, "brute_force"),
    (3, "domination"),
    (4, "tc"),
    (5, "var"),
    (6, "universality"),
    (7, "hierarchy"),
    (8, "martingale"),
    (9, "ytilde"),
    (10, "arms"),
    (11, "moments"),
    (12, "determinism"),
    (13, "thresholds"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Tc,
    Var,
    Gap,
    Duality,
    Circuits,
    Martingale,
    Ytilde,
    Arms,
    Chars,
}

impl StudyKind {
    pub const ALL: [StudyKind; 9] = [
        StudyKind::Tc,
        StudyKind::Var,
        StudyKind::Gap,
        StudyKind::Duality,
        StudyKind::Circuits,
        StudyKind::Martingale,
        StudyKind::Ytilde,
        StudyKind::Arms,
        StudyKind::Chars,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Tc => "tc",
            StudyKind::Var => "var",
            StudyKind::Gap => "gap",
            StudyKind::Duality => "duality",
            StudyKind::Circuits => "circuits",
            StudyKind::Martingale => "martingale",
            StudyKind::Ytilde => "ytilde",
            StudyKind::Arms => "arms",
            StudyKind::Chars => "chars",
        }
    }
}

impl fmt::Display for StudyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StudyKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        StudyKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| anyhow!("unknown study `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmsConfig {
    /// Arm colors counterclockwise, e.g. `oc`.
    pub sigma: String,
    pub geometry: Geometry,
    /// Radius `n` of the inner box.
    pub inner_radius: u32,
}

/// Everything that determines the bytes a run writes. Worker count and
/// output directory are deliberately absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub study: StudyKind,
    /// Canonical short form, e.g. `bernoulli:1`.
    pub dist: String,
    /// `n` for passage and circuit studies, `k` for the chain studies,
    /// outer radii `N` for arms.
    pub ladder: Vec<u32>,
    pub samples: u64,
    pub inner_samples: u64,
    pub seed: u64,
    pub law: SiteLaw,
    pub max_radius: u32,
    pub window_skip: usize,
    pub batches: usize,
    pub arms: ArmsConfig,
    pub tolerances: BTreeMap<String, f64>,
}

impl RunConfig {
    pub fn defaults(study: StudyKind) -> Self {
        let (ladder, samples, inner): (Vec<u32>, u64, u64) = match study {
            StudyKind::Tc | StudyKind::Var | StudyKind::Gap => (dyadic(16, 512), 2000, 0),
            StudyKind::Duality => (vec![16, 64, 256], 200, 0),
            StudyKind::Circuits => (vec![12], 100, 0),
            StudyKind::Martingale => (vec![4], 400, 100),
            StudyKind::Ytilde => (vec![2], 300, 100),
            StudyKind::Arms => (dyadic(8, 64), 100_000, 0),
            StudyKind::Chars => (dyadic(8, 1 << 20), 0, 0),
        };
        RunConfig {
            study,
            dist: "bernoulli:1".into(),
            ladder,
            samples,
            inner_samples: inner,
            seed: 1,
            law: SiteLaw::Iid,
            max_radius: DEFAULT_MAX_RADIUS,
            window_skip: 2,
            batches: 20,
            arms: ArmsConfig { sigma: "oc".into(), geometry: Geometry::Full, inner_radius: 2 },
            tolerances: default_tolerances(),
        }
    }

    pub fn spec(&self) -> Result<DistributionSpec> {
        self.dist.parse().with_context(|| format!("field `dist`: cannot parse `{}`", self.dist))
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(f64::NAN)
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }

    /// Check cross-field constraints, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        self.spec()?;
        if self.ladder.is_empty() {
            bail!("field `n`: empty ladder");
        }
        if self.ladder.windows(2).any(|w| w[0] >= w[1]) {
            bail!("field `n`: ladder must be strictly increasing, got {:?}", self.ladder);
        }
        let needs_samples = self.study != StudyKind::Chars;
        if needs_samples && self.samples < 2 {
            bail!("field `samples`: need at least 2, got {}", self.samples);
        }
        if matches!(self.study, StudyKind::Martingale | StudyKind::Ytilde) {
            if self.ladder.len() != 1 {
                bail!("field `n`: the {} study takes a single level, got {:?}", self.study, self.ladder);
            }
            if self.inner_samples < 2 {
                bail!("field `inner_samples`: need at least 2, got {}", self.inner_samples);
            }
        }
        if self.batches < 2 {
            bail!("field `batches`: need at least 2, got {}", self.batches);
        }
        if self.study == StudyKind::Arms {
            parse_sigma(&self.arms.sigma).map_err(|e| anyhow!("field `sigma`: {e}"))?;
            if self.ladder[0] <= self.arms.inner_radius {
                bail!("field `inner_radius`: {} is not below the smallest outer radius {}", self.arms.inner_radius, self.ladder[0]);
            }
        }
        if let SiteLaw::PlantedRings { defect } = self.law {
            if !(0.0..=4.0).contains(&defect) {
                bail!("field `law`: defect {defect} outside [0, 4]");
            }
        }
        for (k, v) in &self.tolerances {
            if !v.is_finite() || *v < 0.0 {
                bail!("field `tol`: `{k}` = {v} must be finite and nonnegative");
            }
        }
        Ok(())
    }
}

/// Powers of two from `a` to `b` inclusive.
pub fn dyadic(a: u32, b: u32) -> Vec<u32> {
    std::iter::successors(Some(a), |&x| x.checked_mul(2)).take_while(|&x| x <= b).collect()
}

/// `a..b` (dyadic), `a,b,c` or a single value.
pub fn parse_ladder(s: &str) -> Result<Vec<u32>> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|_| anyhow!("field `n`: bad value `{t}` in `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if !a.is_power_of_two() || !b.is_power_of_two() || a > b {
            bail!("field `n`: `{s}` is not a dyadic range (powers of two, a <= b)");
        }
        return Ok(dyadic(a, b));
    }
    s.split(',').map(num).collect()
}

/// `iid` or `planted:<defect>`.
pub fn parse_law(s: &str) -> Result<SiteLaw> {
    match s.split_once(':') {
        None if s == "iid" => Ok(SiteLaw::Iid),
        Some(("planted", d)) => {
            let defect = d.parse::<f64>().map_err(|_| anyhow!("field `law`: bad defect `{d}`"))?;
            Ok(SiteLaw::PlantedRings { defect })
        }
        _ => bail!("field `law`: expected `iid` or `planted:<defect>`, got `{s}`"),
    }
}

pub fn default_tolerances() -> BTreeMap<String, f64> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Table {
        #[allow(dead_code)]
        version: u32,
        tolerance: BTreeMap<String, f64>,
    }
    let t: Table = toml::from_str(DEFAULT_TOLERANCES).expect("bundled tolerance table parses");
    t.tolerance
}

/// Resolve a `--tol` key, given by name or criterion number.
pub fn tolerance_key(key: &str) -> Result<&'static str> {
    let key = key.trim();
    CRITERIA
        .iter()
        .find(|(id, name)| *name == key || id.to_string() == key)
        .map(|(_, name)| *name)
        .ok_or_else(|| anyhow!("field `tol`: unknown criterion `{key}`"))
}

/// `key=value`.
pub fn parse_tol(s: &str) -> Result<(&'static str, f64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("field `tol`: expected `criterion=value`, got `{s}`"))?;
    let v = v.trim().parse::<f64>().map_err(|_| anyhow!("field `tol`: bad value `{v}` for `{k}`"))?;
    Ok((tolerance_key(k)?, v))
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum LadderValue {
    Text(String),
    List(Vec<u32>),
    One(u32),
}

impl LadderValue {
    fn resolve(&self) -> Result<Vec<u32>> {
        match self {
            LadderValue::Text(s) => parse_ladder(s),
            LadderValue::List(v) => Ok(v.clone()),
            LadderValue::One(x) => Ok(vec![*x]),
        }
    }
}

/// Partial configuration, as read from a TOML file or assembled from flags.
/// Later layers win.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub dist: Option<String>,
    pub n: Option<LadderValue>,
    pub samples: Option<u64>,
    pub inner_samples: Option<u64>,
    pub seed: Option<u64>,
    pub law: Option<String>,
    pub max_radius: Option<u32>,
    pub window_skip: Option<usize>,
    pub batches: Option<usize>,
    pub sigma: Option<String>,
    pub geometry: Option<String>,
    pub inner_radius: Option<u32>,
    #[serde(default)]
    pub tol: BTreeMap<String, f64>,
}

impl Overrides {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow!("config {}: {}", path.display(), e.message()))
    }

    pub fn apply(&self, c: &mut RunConfig) -> Result<()> {
        if let Some(d) = &self.dist {
            let spec: DistributionSpec = d.parse().map_err(|e| anyhow!("field `dist`: {e}"))?;
            c.dist = spec.to_string();
        }
        if let Some(n) = &self.n {
            c.ladder = n.resolve()?;
        }
        if let Some(x) = self.samples {
            c.samples = x;
        }
        if let Some(x) = self.inner_samples {
            c.inner_samples = x;
        }
        if let Some(x) = self.seed {
            c.seed = x;
        }
        if let Some(l) = &self.law {
            c.law = parse_law(l)?;
        }
        if let Some(x) = self.max_radius {
            c.max_radius = x;
        }
        if let Some(x) = self.window_skip {
            c.window_skip = x;
        }
        if let Some(x) = self.batches {
            c.batches = x;
        }
        if let Some(s) = &self.sigma {
            parse_sigma(s).map_err(|e| anyhow!("field `sigma`: {e}"))?;
            c.arms.sigma = s.clone();
        }
        if let Some(g) = &self.geometry {
            c.arms.geometry = g.parse().map_err(|e| anyhow!("field `geometry`: {e}"))?;
        }
        if let Some(x) = self.inner_radius {
            c.arms.inner_radius = x;
        }
        for (k, v) in &self.tol {
            c.tolerances.insert(tolerance_key(k)?.to_string(), *v);
        }
        Ok(())
    }
}
