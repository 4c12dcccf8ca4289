//! Arm events: disjoint monochromatic crossings of `B(N) \ B(n)` with a
//! prescribed counterclockwise color sequence.

use std::collections::{HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::Status;
use crate::error::{Error, Result};
use crate::estimators::report::{Check, EstimatorReport, Regression, ScaleRecord, Target};
use crate::estimators::stats;
use crate::lattice::{boundary_sites, neighbors, LatticeBox, Site};
use crate::rng::derive_seed;
use crate::weights::{sample_field, DistributionSpec, WeightField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Geometry {
    Full,
    /// `y >= 0`.
    Half,
    /// Everything but the 120-degree lattice sector `{y < 0, 2x + y > 0}`,
    /// which is the open fourth quadrant of the planar embedding.
    ThreeQuarter,
}

impl Geometry {
    pub fn contains(self, v: Site) -> bool {
        match self {
            Geometry::Full => true,
            Geometry::Half => v.y >= 0,
            Geometry::ThreeQuarter => !(v.y < 0 && 2 * v.x + v.y > 0),
        }
    }

    /// Exponent `e` with `P(A) = (N/n)^{-e + o(1)}` for a polychromatic
    /// (full plane) or arbitrary (restricted) color sequence of length `j`.
    pub fn exponent(self, j: u32) -> f64 {
        let j = j as f64;
        match self {
            Geometry::Full => (j * j - 1.0) / 12.0,
            Geometry::Half => j * (j + 1.0) / 6.0,
            Geometry::ThreeQuarter => j * (j + 1.0) / 9.0,
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Geometry::Full),
            "half" => Ok(Geometry::Half),
            "three_quarter" | "three-quarter" => Ok(Geometry::ThreeQuarter),
            _ => Err(Error::invalid(format!("unknown geometry {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmEventSpec {
    pub j: u32,
    /// Colors of the arms in counterclockwise order.
    pub sigma: Vec<Status>,
    pub geometry: Geometry,
    pub n: u32,
    pub big_n: u32,
}

impl ArmEventSpec {
    pub fn new(sigma: Vec<Status>, geometry: Geometry, n: u32, big_n: u32) -> Result<Self> {
        let s = ArmEventSpec { j: sigma.len() as u32, sigma, geometry, n, big_n };
        s.validate()?;
        Ok(s)
    }

    /// `open, closed, open, ...` of length `j`.
    pub fn alternating(j: u32, geometry: Geometry, n: u32, big_n: u32) -> Result<Self> {
        let sigma = (0..j).map(|i| if i % 2 == 0 { Status::Open } else { Status::Closed }).collect();
        Self::new(sigma, geometry, n, big_n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma.is_empty() || self.sigma.len() != self.j as usize {
            return Err(Error::invalid("sigma must have length j >= 1"));
        }
        if self.n < 1 || self.n >= self.big_n {
            return Err(Error::invalid(format!("need 1 <= n < N, got n = {}, N = {}", self.n, self.big_n)));
        }
        Ok(())
    }

    pub fn polychromatic(&self) -> bool {
        self.sigma.iter().any(|&s| s != self.sigma[0])
    }

    /// Exponent the estimate is compared against, when one applies.
    pub fn target_exponent(&self) -> Option<f64> {
        match self.geometry {
            Geometry::Full if !self.polychromatic() => None,
            g => Some(g.exponent(self.j)),
        }
    }
}

/// Parse `o`/`c` (or `open`/`closed`) letters separated by commas, or a
/// bare word like `ococ`.
pub fn parse_sigma(s: &str) -> Result<Vec<Status>> {
    let parts: Vec<&str> = if s.contains(',') { s.split(',').map(str::trim).collect() } else { s.split("").filter(|p| !p.is_empty()).collect() };
    parts
        .into_iter()
        .map(|p| match p {
            "o" | "open" => Ok(Status::Open),
            "c" | "closed" => Ok(Status::Closed),
            _ => Err(Error::invalid(format!("bad arm color {p:?}"))),
        })
        .collect()
}

struct Crossings {
    b: LatticeBox,
    /// Cluster label per site of `B(N)`, `u32::MAX` outside crossing
    /// clusters.
    label: Vec<u32>,
    color: Vec<Status>,
}

/// Crossing clusters of each color in `{n <= |v| <= N} ∩ domain`.
fn crossings(field: &WeightField, geometry: Geometry, n: u32, big_n: u32) -> Crossings {
    let b = LatticeBox::new(big_n);
    let inside = |v: Site| b.contains(v) && v.linf() >= n && geometry.contains(v);
    let mut label = vec![u32::MAX; b.len()];
    let mut seen = vec![false; b.len()];
    let mut color = Vec::new();
    let mut queue = VecDeque::new();
    let mut members = Vec::new();
    for v in b.sites() {
        if v.linf() != n || !inside(v) || seen[b.index(v)] {
            continue;
        }
        let st = Status::of(field, v);
        members.clear();
        seen[b.index(v)] = true;
        queue.push_back(v);
        let mut reaches = false;
        while let Some(u) = queue.pop_front() {
            members.push(u);
            reaches |= u.linf() == big_n;
            for w in neighbors(u) {
                if inside(w) && !seen[b.index(w)] && Status::of(field, w) == st {
                    seen[b.index(w)] = true;
                    queue.push_back(w);
                }
            }
        }
        if reaches {
            let id = color.len() as u32;
            color.push(st);
            for &u in &members {
                label[b.index(u)] = id;
            }
        }
    }
    Crossings { b, label, color }
}

/// Crossing clusters met along `∂B(N) ∩ domain` counterclockwise, repeats
/// merged; cyclic for the full plane.
fn boundary_word(c: &Crossings, geometry: Geometry, big_n: u32) -> Vec<u32> {
    let ring = boundary_sites(LatticeBox::new(big_n));
    let arc: Vec<Site> = if geometry == Geometry::Full {
        ring
    } else {
        let len = ring.len();
        let start = (0..len)
            .find(|&i| geometry.contains(ring[i]) && !geometry.contains(ring[(i + len - 1) % len]))
            .unwrap_or(0);
        (0..len).map(|i| ring[(start + i) % len]).filter(|&v| geometry.contains(v)).collect()
    };
    let mut word: Vec<u32> = Vec::new();
    for v in arc {
        let id = c.label[c.b.index(v)];
        if id != u32::MAX && word.last() != Some(&id) {
            word.push(id);
        }
    }
    if geometry == Geometry::Full && word.len() > 1 && word.first() == word.last() {
        word.pop();
    }
    word
}

/// Maximal number of vertex-disjoint crossings inside cluster `id`, capped
/// at `cap`: unit-capacity max flow on the split-vertex graph.
fn disjoint_crossings(c: &Crossings, id: u32, n: u32, big_n: u32, cap: usize) -> usize {
    let sites: Vec<Site> = c.b.sites().filter(|&v| c.label[c.b.index(v)] == id).collect();
    let local: HashMap<Site, usize> = sites.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    // nodes: 2i = in, 2i + 1 = out, then source and sink
    let s = 2 * sites.len();
    let t = s + 1;
    let mut graph: Vec<Vec<usize>> = vec![Vec::new(); t + 1];
    let mut to = Vec::new();
    let mut capv = Vec::new();
    let mut add = |g: &mut Vec<Vec<usize>>, a: usize, b: usize| {
        g[a].push(to.len());
        to.push(b);
        capv.push(1i32);
        g[b].push(to.len());
        to.push(a);
        capv.push(0i32);
    };
    for (i, &v) in sites.iter().enumerate() {
        add(&mut graph, 2 * i, 2 * i + 1);
        if v.linf() == n {
            add(&mut graph, s, 2 * i);
        }
        if v.linf() == big_n {
            add(&mut graph, 2 * i + 1, t);
        }
        for w in neighbors(v) {
            if let Some(&k) = local.get(&w) {
                add(&mut graph, 2 * i + 1, 2 * k);
            }
        }
    }
    let mut flow = 0;
    while flow < cap {
        let mut prev = vec![usize::MAX; t + 1];
        let mut q = VecDeque::from([s]);
        prev[s] = usize::MAX - 1;
        while let Some(u) = q.pop_front() {
            if u == t {
                break;
            }
            for &e in &graph[u] {
                if capv[e] > 0 && prev[to[e]] == usize::MAX {
                    prev[to[e]] = e;
                    q.push_back(to[e]);
                }
            }
        }
        if prev[t] == usize::MAX {
            break;
        }
        let mut v = t;
        while v != s {
            let e = prev[v];
            capv[e] -= 1;
            capv[e ^ 1] += 1;
            v = to[e ^ 1];
        }
        flow += 1;
    }
    flow
}

fn longest_run(sigma: &[Status], cyclic: bool) -> usize {
    if cyclic && sigma.iter().all(|&x| x == sigma[0]) {
        return sigma.len();
    }
    let j = sigma.len();
    let mut best = 1;
    let start = if cyclic { (0..j).find(|&i| sigma[i] != sigma[(i + j - 1) % j]).unwrap_or(0) } else { 0 };
    let mut run = 1;
    for i in 1..j {
        let (a, b) = (sigma[(start + i - 1) % j], sigma[(start + i) % j]);
        run = if a == b { run + 1 } else { 1 };
        best = best.max(run);
    }
    best
}

/// Whether the event holds on `field` (which must cover `B(N)`).
pub fn arm_event(field: &WeightField, arm: &ArmEventSpec) -> Result<bool> {
    arm.validate()?;
    if field.radius() < arm.big_n {
        return Err(Error::invalid("field smaller than B(N)"));
    }
    let c = crossings(field, arm.geometry, arm.n, arm.big_n);
    let cyclic = arm.geometry == Geometry::Full;
    let word = boundary_word(&c, arm.geometry, arm.big_n);
    let j = arm.sigma.len();
    let cap = longest_run(&arm.sigma, cyclic);
    let mut capacity: HashMap<u32, usize> = HashMap::new();
    let mut cap_of = |id: u32| -> usize {
        *capacity
            .entry(id)
            .or_insert_with(|| if cap == 1 { 1 } else { disjoint_crossings(&c, id, arm.n, arm.big_n, cap) })
    };
    let len = word.len();
    if len == 0 {
        return Ok(false);
    }
    let rotations = if cyclic { j } else { 1 };
    for start in 0..len {
        for rot in 0..rotations {
            let sigma: Vec<Status> = (0..j).map(|i| arm.sigma[(i + rot) % j]).collect();
            let mut used: HashMap<u32, usize> = HashMap::new();
            let mut pos = start;
            let mut ok = true;
            for i in 0..j {
                let here = word[pos % len];
                if i > 0 && sigma[i] == sigma[i - 1] && used.get(&here).copied().unwrap_or(0) < cap_of(here) {
                    *used.entry(here).or_default() += 1;
                    continue;
                }
                let from = if i == 0 { pos } else { pos + 1 };
                let next = (from..start + len).find(|&q| {
                    let id = word[q % len];
                    c.color[id as usize] == sigma[i] && used.get(&id).copied().unwrap_or(0) < cap_of(id)
                });
                match next {
                    Some(q) => {
                        pos = q;
                        *used.entry(word[q % len]).or_default() += 1;
                    }
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Largest `|v|` reached from the inner ring by each color, within the
/// domain; `n - 1` when the color is absent from the inner ring.
fn reach(field: &WeightField, geometry: Geometry, n: u32) -> [u32; 2] {
    let b = field.bounds();
    let mut out = [n.saturating_sub(1); 2];
    let mut seen = vec![false; b.len()];
    let mut stack = Vec::new();
    for v in b.sites().filter(|v| v.linf() == n && geometry.contains(*v)) {
        if seen[b.index(v)] {
            continue;
        }
        let st = Status::of(field, v);
        let slot = (st == Status::Closed) as usize;
        seen[b.index(v)] = true;
        stack.push(v);
        while let Some(u) = stack.pop() {
            out[slot] = out[slot].max(u.linf());
            for w in neighbors(u) {
                if b.contains(w) && w.linf() >= n && geometry.contains(w) && !seen[b.index(w)] && Status::of(field, w) == st {
                    seen[b.index(w)] = true;
                    stack.push(w);
                }
            }
        }
    }
    out
}

/// Indicators of the event for every outer radius of `ladder` on one field.
pub fn arm_sample(
    spec: &DistributionSpec,
    template: &ArmEventSpec,
    ladder: &[u32],
    master: u64,
    index: u64,
) -> Result<Vec<bool>> {
    let top = *ladder.iter().max().ok_or_else(|| Error::invalid("empty ladder"))?;
    let field = sample_field(spec, top, derive_seed(master, index))?;
    let by_reach = template.j == 1 || (template.j == 2 && template.polychromatic() && template.geometry == Geometry::Full);
    if by_reach {
        let r = reach(&field, template.geometry, template.n);
        return Ok(ladder
            .iter()
            .map(|&big| template.sigma.iter().all(|&s| r[(s == Status::Closed) as usize] >= big))
            .collect());
    }
    ladder
        .iter()
        .map(|&big| arm_event(&field, &ArmEventSpec { big_n: big, ..template.clone() }))
        .collect()
}

pub fn arm_samples(spec: &DistributionSpec, template: &ArmEventSpec, ladder: &[u32], samples: u64, master: u64) -> Result<Vec<Vec<bool>>> {
    for &big in ladder {
        ArmEventSpec { big_n: big, ..template.clone() }.validate()?;
    }
    (0..samples).into_par_iter().map(|i| arm_sample(spec, template, ladder, master, i)).collect()
}

/// Probabilities per `N`, and the slope of `ln P` on `ln(N/n)` against
/// `-exponent` when a target applies and every estimate is positive.
pub fn arm_report(
    template: &ArmEventSpec,
    ladder: &[u32],
    samples: &[Vec<bool>],
    batches: usize,
    tolerance: f64,
) -> EstimatorReport {
    let mut r = EstimatorReport::new("arms", "1{A_{j,sigma}(n, N)}");
    let col = |rows: &[Vec<bool>], j: usize| rows.iter().map(|s| s[j] as u8 as f64).collect::<Vec<f64>>();
    for (j, &big) in ladder.iter().enumerate() {
        r.scales.push(ScaleRecord::from_values(big as f64, &col(samples, j)));
    }
    let mono = r.scales.windows(2).all(|w| w[1].mean <= w[0].mean + 2.0 * (w[0].std_error.hypot(w[1].std_error)));
    r.push(Check::holds("P nonincreasing in N (2 SE)", mono));
    r.flags.push(format!(
        "j = {}, sigma = {:?}, geometry = {:?}, n = {}",
        template.j, template.sigma, template.geometry, template.n
    ));
    let Some(e) = template.target_exponent() else {
        r.flags.push("no exponent target for monochromatic full-plane arms".into());
        return r;
    };
    r.target = Some(Target {
        value: -e,
        formula: match template.geometry {
            Geometry::Full => "-(j^2-1)/12",
            Geometry::Half => "-j(j+1)/6",
            Geometry::ThreeQuarter => "-j(j+1)/9",
        }
        .into(),
        relative_tolerance: tolerance,
    });
    if ladder.len() < 2 || r.scales.iter().any(|s| s.mean == 0.0) {
        r.flags.push("slope not fitted: fewer than two scales or a zero estimate".into());
        r.push(Check::holds("slope fitted", false));
        return r;
    }
    let xs: Vec<f64> = ladder.iter().map(|&big| (big as f64 / template.n as f64).ln()).collect();
    let lnp = |rows: &[Vec<bool>]| -> Vec<f64> { (0..ladder.len()).map(|j| stats::mean(&col(rows, j)).ln()).collect() };
    let ys = lnp(samples);
    let (_, batch) = stats::batch_means(samples, batches, |chunk| stats::least_squares(&xs, &lnp(chunk)).slope);
    let finite: Vec<f64> = batch.into_iter().filter(|s| s.is_finite()).collect();
    if finite.len() < batches {
        r.flags.push(format!("{} of {batches} batches had a zero estimate and were left out of the slope error", batches - finite.len()));
    }
    r.regression = Some(Regression::fit("ln(N/n)", ladder.iter().map(|&b| b as f64).collect(), &xs, &ys, &finite));
    r.judge_slope();
    r
}

/// `a` strictly below `b` at outer radius `big_n`.
pub fn arm_ordering(name: &str, a: &EstimatorReport, b: &EstimatorReport, big_n: u32) -> Result<Check> {
    let find = |r: &EstimatorReport| {
        r.scales
            .iter()
            .find(|s| s.scale == big_n as f64)
            .map(|s| s.mean)
            .ok_or_else(|| Error::invalid(format!("no estimate at N = {big_n}")))
    };
    let (pa, pb) = (find(a)?, find(b)?);
    Ok(Check { name: name.to_string(), value: pa, reference: pb, bound: f64::NAN, pass: pa < pb })
}
