use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Region, Site};
use crate::rng::CounterRng;
use crate::weights::DistributionSpec;

/// Stream id of the primary field of a sample.
pub const FIELD_STREAM: u64 = 0;

/// Default cap on the memory a single field may occupy.
pub const DEFAULT_FIELD_LIMIT_BYTES: u64 = 4 << 30;

const BYTES_PER_SITE: u64 = 8 + 8 + 1;

/// A sampled box of uniforms with the derived weights and statuses.
///
/// `omega(v)` is `CounterRng::new(seed, stream).site_uniform(v)`: a pure
/// function of the seed, the stream id and the site coordinates.
#[derive(Clone, Debug)]
pub struct WeightField {
    spec: DistributionSpec,
    bounds: LatticeBox,
    seed: u64,
    stream: u64,
    infimum: f64,
    omega: Vec<f64>,
    weight: Vec<f64>,
    open: Vec<bool>,
}

/// Law of the site uniforms.
///
/// `Iid` is the critical product measure. `PlantedRings` is an
/// inhomogeneous product measure for exercising the circuit machinery: each
/// site on the l-infinity ring of radius `R = 2, 4, 8, ...` is open with
/// probability `1 - defect / (8R)` (so a whole ring is open with probability
/// close to `exp(-defect)`), each site on a ring of radius `R = 3, 6, 12, ...`
/// is closed with the same probability, every other site is open with
/// probability 1/2, and a closed site's weight keeps the law of `t` given
/// `t > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "law")]
pub enum SiteLaw {
    #[default]
    Iid,
    PlantedRings { defect: f64 },
}

impl SiteLaw {
    pub fn open_probability(&self, v: Site) -> f64 {
        match *self {
            SiteLaw::Iid => 0.5,
            SiteLaw::PlantedRings { defect } => {
                let r = v.linf();
                let planted = (1.0 - defect / (8.0 * r as f64)).clamp(0.5, 1.0 - 1e-12);
                if r >= 2 && r.is_power_of_two() {
                    planted
                } else if r % 3 == 0 && (r / 3).is_power_of_two() {
                    1.0 - planted
                } else {
                    0.5
                }
            }
        }
    }

    /// Monotone map of a uniform `u` to the site's `omega`: `[0, p]` onto
    /// `(0, 1/2]` and `(p, 1)` onto `(1/2, 1)`.
    #[inline]
    pub fn transform(&self, v: Site, u: f64) -> f64 {
        if let SiteLaw::Iid = self {
            return u;
        }
        let p = self.open_probability(v);
        if u <= p {
            (u / (2.0 * p)).max(f64::MIN_POSITIVE)
        } else {
            (0.5 + (u - p) / (2.0 * (1.0 - p))).min(1.0 - f64::EPSILON / 2.0)
        }
    }
}

/// Sample `B(n)` under `spec` with the primary stream.
pub fn sample_field(spec: &DistributionSpec, n: u32, seed: u64) -> Result<WeightField> {
    WeightField::sample(spec, n, seed, FIELD_STREAM)
}

fn reserve<T: Clone>(len: usize, fill: T, requested: u64) -> Result<Vec<T>> {
    let mut v = Vec::new();
    v.try_reserve_exact(len).map_err(|_| Error::Resource {
        requested_bytes: requested,
        limit_bytes: DEFAULT_FIELD_LIMIT_BYTES,
    })?;
    v.resize(len, fill);
    Ok(v)
}

impl WeightField {
    pub fn sample(spec: &DistributionSpec, n: u32, seed: u64, stream: u64) -> Result<Self> {
        let rng = CounterRng::new(seed, stream);
        let mut f = Self::from_omega_fn(spec, n, |v| rng.site_uniform(v))?;
        f.seed = seed;
        f.stream = stream;
        Ok(f)
    }

    pub fn sample_with(spec: &DistributionSpec, n: u32, seed: u64, stream: u64, law: &SiteLaw) -> Result<Self> {
        let rng = CounterRng::new(seed, stream);
        let mut f = Self::from_omega_fn(spec, n, |v| law.transform(v, rng.site_uniform(v)))?;
        f.seed = seed;
        f.stream = stream;
        Ok(f)
    }

    pub fn bytes_for_radius(n: u32) -> u64 {
        let side = 2 * n as u64 + 1;
        side * side * BYTES_PER_SITE
    }

    /// Field with caller-supplied uniforms, e.g. a transformed stream.
    pub fn from_omega_fn(spec: &DistributionSpec, n: u32, omega: impl Fn(Site) -> f64) -> Result<Self> {
        let requested = Self::bytes_for_radius(n);
        if requested > DEFAULT_FIELD_LIMIT_BYTES {
            return Err(Error::Resource {
                requested_bytes: requested,
                limit_bytes: DEFAULT_FIELD_LIMIT_BYTES,
            });
        }
        let bounds = LatticeBox::new(n);
        let len = bounds.len();
        let mut om = reserve(len, 0.0, requested)?;
        let mut wt = reserve(len, 0.0, requested)?;
        let mut open = reserve(len, false, requested)?;
        for i in 0..len {
            let u = omega(bounds.site(i));
            if !(u > 0.0 && u < 1.0) {
                return Err(Error::invalid(format!("uniform {u} at {:?} outside (0, 1)", bounds.site(i))));
            }
            om[i] = u;
            wt[i] = spec.inverse_cdf_unchecked(u);
            open[i] = u <= 0.5;
        }
        Ok(WeightField {
            spec: spec.clone(),
            bounds,
            seed: 0,
            stream: 0,
            infimum: spec.infimum(),
            omega: om,
            weight: wt,
            open,
        })
    }

    /// Field with prescribed weights; `omega` is set to 1/4 on zero weights
    /// and 3/4 elsewhere so that the status convention still holds.
    pub fn from_weight_fn(spec: &DistributionSpec, n: u32, weight: impl Fn(Site) -> f64) -> Result<Self> {
        let mut f = Self::from_omega_fn(spec, n, |_| 0.25)?;
        for i in 0..f.bounds.len() {
            let t = weight(f.bounds.site(i));
            if !(t >= 0.0) {
                return Err(Error::invalid(format!("negative weight {t}")));
            }
            f.weight[i] = t;
            f.open[i] = t == 0.0;
            f.omega[i] = if t == 0.0 { 0.25 } else { 0.75 };
        }
        Ok(f)
    }

    /// Field whose open sites are exactly those with `open(v)`; closed sites
    /// get weight `I`.
    pub fn from_open_fn(spec: &DistributionSpec, n: u32, open: impl Fn(Site) -> bool) -> Result<Self> {
        let i = spec.infimum();
        if i <= 0.0 {
            return Err(Error::invalid("status-only fields need I > 0"));
        }
        Self::from_weight_fn(spec, n, |v| if open(v) { 0.0 } else { i })
    }

    pub fn spec(&self) -> &DistributionSpec {
        &self.spec
    }

    pub fn bounds(&self) -> LatticeBox {
        self.bounds
    }

    pub fn radius(&self) -> u32 {
        self.bounds.radius
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn infimum(&self) -> f64 {
        self.infimum
    }

    #[inline]
    pub fn omega(&self, v: Site) -> f64 {
        self.omega[self.bounds.index(v)]
    }

    #[inline]
    pub fn weight(&self, v: Site) -> f64 {
        self.weight[self.bounds.index(v)]
    }

    /// `t^B = I * 1{t > 0}`.
    #[inline]
    pub fn bernoulli_weight(&self, v: Site) -> f64 {
        if self.is_open(v) {
            0.0
        } else {
            self.infimum
        }
    }

    #[inline]
    pub fn is_open(&self, v: Site) -> bool {
        self.open[self.bounds.index(v)]
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omega
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    pub fn open_mask(&self) -> &[bool] {
        &self.open
    }

    pub fn bernoulli_weights(&self) -> Vec<f64> {
        self.open.iter().map(|&o| if o { 0.0 } else { self.infimum }).collect()
    }

    pub fn open_region(&self) -> Region {
        Region::from_predicate(self.bounds, |v| self.is_open(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_zero_is_reproducible() {
        let spec = DistributionSpec::uniform(1.0, 2.0).unwrap();
        let a = sample_field(&spec, 0, 5).unwrap();
        let b = sample_field(&spec, 0, 5).unwrap();
        assert_eq!(a.omegas().len(), 1);
        assert_eq!(a.omegas()[0].to_bits(), b.omegas()[0].to_bits());
    }

    #[test]
    fn open_fraction_within_binomial_band() {
        let spec = DistributionSpec::bernoulli(1.0).unwrap();
        let f = sample_field(&spec, 64, 7).unwrap();
        let n = (129 * 129) as f64;
        let frac = f.open_mask().iter().filter(|&&o| o).count() as f64 / n;
        assert!((frac - 0.5).abs() < 4.0 / (2.0 * n.sqrt()), "{frac}");
    }

    #[test]
    fn sub_boxes_agree_across_radii() {
        let spec = DistributionSpec::shifted_exponential(0.0, 1.0).unwrap();
        let small = sample_field(&spec, 5, 99).unwrap();
        let big = sample_field(&spec, 23, 99).unwrap();
        for v in small.bounds().sites() {
            assert_eq!(small.omega(v).to_bits(), big.omega(v).to_bits());
            assert_eq!(small.weight(v).to_bits(), big.weight(v).to_bits());
        }
    }

    #[test]
    fn status_and_coupling_invariants() {
        for spec in DistributionSpec::builtin_families() {
            let f = sample_field(&spec, 20, 1234).unwrap();
            for v in f.bounds().sites() {
                let open = f.is_open(v);
                assert_eq!(open, f.omega(v) <= 0.5);
                assert_eq!(open, f.weight(v) == 0.0, "{spec} at {v:?}");
                if spec.infimum() > 0.0 {
                    assert_eq!(open, f.bernoulli_weight(v) == 0.0);
                }
                assert!(f.bernoulli_weight(v) <= f.weight(v));
            }
        }
    }

    #[test]
    fn planted_law_keeps_status_convention() {
        let spec = DistributionSpec::uniform(1.0, 2.0).unwrap();
        let law = SiteLaw::PlantedRings { defect: 0.1 };
        let f = WeightField::sample_with(&spec, 20, 3, 0, &law).unwrap();
        let ring: Vec<Site> = crate::lattice::boundary_sites(LatticeBox::new(16));
        let open = ring.iter().filter(|&&v| f.is_open(v)).count();
        assert!(open >= ring.len() - 3);
        for v in f.bounds().sites() {
            assert_eq!(f.is_open(v), f.weight(v) == 0.0);
            assert!(f.omega(v) > 0.0 && f.omega(v) < 1.0);
        }
        let iid = WeightField::sample_with(&spec, 20, 3, 0, &SiteLaw::Iid).unwrap();
        let plain = WeightField::sample(&spec, 20, 3, 0).unwrap();
        assert_eq!(iid.omegas(), plain.omegas());
    }

    #[test]
    fn oversized_radius_reports_bytes() {
        let spec = DistributionSpec::bernoulli(1.0).unwrap();
        match sample_field(&spec, 1 << 20, 0) {
            Err(Error::Resource { requested_bytes, .. }) => {
                assert_eq!(requested_bytes, WeightField::bytes_for_radius(1 << 20));
            }
            other => panic!("expected resource error, got {other:?}"),
        }
    }
}
