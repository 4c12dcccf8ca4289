//! Triangular lattice on the integer plane.
//!
//! Vertices are the points of Z^2; `(x, y)` is adjacent to the four axis
//! neighbours and to the two diagonal neighbours `(x + 1, y - 1)` and
//! `(x - 1, y + 1)`. Boxes are l-infinity balls `B(n) = {|v|_inf <= n}` and are
//! stored row-major over `[-n, n]^2`:
//!
//! ```text
//! index(x, y) = (y + n) * (2n + 1) + (x + n)
//! ```
//!
//! The embedding `(x, y) -> (x + y / 2, y * sqrt(3) / 2)` is the usual planar
//! picture; it is affine with positive determinant, so winding numbers and
//! orientations can be computed directly in integer coordinates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    #[inline]
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    #[inline]
    pub fn linf(self) -> u32 {
        self.x.unsigned_abs().max(self.y.unsigned_abs())
    }

    #[inline]
    pub fn offset(self, (dx, dy): (i32, i32)) -> Site {
        Site::new(self.x + dx, self.y + dy)
    }

    /// Euclidean distance in the integer-plane coordinates.
    pub fn dist(self, other: Site) -> f64 {
        let dx = (self.x - other.x) as f64;
        let dy = (self.y - other.y) as f64;
        dx.hypot(dy)
    }

    #[inline]
    pub fn is_adjacent(self, other: Site) -> bool {
        let d = (other.x - self.x, other.y - self.y);
        NEIGHBOR_OFFSETS.contains(&d)
    }
}

/// Neighbour enumeration order: E, W, N, S, (+1, -1), (-1, +1).
///
/// Every tie-break downstream (geodesics, tracing starts) follows this order.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 6] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)];

/// The six directions in counterclockwise angular order in the planar
/// embedding, starting from east.
pub(crate) const CCW_DIRECTIONS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

pub fn neighbors(v: Site) -> [Site; 6] {
    NEIGHBOR_OFFSETS.map(|d| v.offset(d))
}

/// The box `B(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    pub radius: u32,
}

impl LatticeBox {
    pub const fn new(radius: u32) -> Self {
        LatticeBox { radius }
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.side() * self.side()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn contains(&self, v: Site) -> bool {
        v.linf() <= self.radius
    }

    #[inline]
    pub fn on_boundary(&self, v: Site) -> bool {
        v.linf() == self.radius
    }

    #[inline]
    pub fn index(&self, v: Site) -> usize {
        let n = self.radius as i64;
        debug_assert!(self.contains(v));
        ((v.y as i64 + n) * self.side() as i64 + (v.x as i64 + n)) as usize
    }

    #[inline]
    pub fn site(&self, index: usize) -> Site {
        let side = self.side();
        let n = self.radius as i32;
        Site::new((index % side) as i32 - n, (index / side) as i32 - n)
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }
}

/// The dyadic annulus `A(k) = B(2^{k+1}) \ B(2^k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Annulus {
    pub level: u32,
}

impl Annulus {
    pub const fn new(level: u32) -> Self {
        Annulus { level }
    }

    pub fn inner_radius(&self) -> u32 {
        1 << self.level
    }

    pub fn outer_radius(&self) -> u32 {
        1 << (self.level + 1)
    }

    #[inline]
    pub fn contains(&self, v: Site) -> bool {
        let r = v.linf();
        r > self.inner_radius() && r <= self.outer_radius()
    }
}

/// Sites with `|v|_inf = n`, counterclockwise from `(n, 0)`.
pub fn boundary_sites(b: LatticeBox) -> Vec<Site> {
    let n = b.radius as i32;
    if n == 0 {
        return vec![Site::ORIGIN];
    }
    let mut out = Vec::with_capacity(8 * n as usize);
    for y in 0..n {
        out.push(Site::new(n, y));
    }
    for x in (-n + 1..=n).rev() {
        out.push(Site::new(x, n));
    }
    for y in (-n + 1..=n).rev() {
        out.push(Site::new(-n, y));
    }
    for x in -n..n {
        out.push(Site::new(x, -n));
    }
    for y in -n..0 {
        out.push(Site::new(n, y));
    }
    out
}

/// A finite vertex set stored as a dense mask over a bounding box.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    bounds: LatticeBox,
    mask: Vec<bool>,
}

impl Region {
    pub fn empty(bounds: LatticeBox) -> Self {
        Region { bounds, mask: vec![false; bounds.len()] }
    }

    pub fn full(bounds: LatticeBox) -> Self {
        Region { bounds, mask: vec![true; bounds.len()] }
    }

    pub fn from_predicate(bounds: LatticeBox, pred: impl Fn(Site) -> bool) -> Self {
        let mask = (0..bounds.len()).map(|i| pred(bounds.site(i))).collect();
        Region { bounds, mask }
    }

    /// Sites outside `bounds` are rejected.
    pub fn from_sites(bounds: LatticeBox, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut r = Region::empty(bounds);
        for s in sites {
            if !bounds.contains(s) {
                return Err(Error::invalid(format!("site {s:?} outside B({})", bounds.radius)));
            }
            r.insert(s);
        }
        Ok(r)
    }

    pub fn bounds(&self) -> LatticeBox {
        self.bounds
    }

    #[inline]
    pub fn contains(&self, v: Site) -> bool {
        self.bounds.contains(v) && self.mask[self.bounds.index(v)]
    }

    pub fn insert(&mut self, v: Site) {
        let i = self.bounds.index(v);
        self.mask[i] = true;
    }

    pub fn remove(&mut self, v: Site) {
        if self.bounds.contains(v) {
            let i = self.bounds.index(v);
            self.mask[i] = false;
        }
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn iter(&self) -> impl Iterator<Item = Site> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| self.bounds.site(i))
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// Reusable work space for flood fills.
#[derive(Default, Debug)]
pub struct FloodScratch {
    stack: Vec<usize>,
}

/// Sites of `region` reachable from `seeds` through passable sites of
/// `region`. With `seeds_free` the seeds are always included and expand
/// regardless of their own passability; otherwise impassable seeds are
/// dropped.
pub fn flood_fill(region: &Region, passable: impl Fn(Site) -> bool, seeds: &[Site], seeds_free: bool) -> Region {
    flood_fill_with(&mut FloodScratch::default(), region, passable, seeds, seeds_free)
}

pub fn flood_fill_with(
    scratch: &mut FloodScratch,
    region: &Region,
    passable: impl Fn(Site) -> bool,
    seeds: &[Site],
    seeds_free: bool,
) -> Region {
    let bounds = region.bounds;
    let mut out = Region::empty(bounds);
    scratch.stack.clear();
    for &s in seeds {
        if !region.contains(s) || out.contains(s) {
            continue;
        }
        if seeds_free || passable(s) {
            let i = bounds.index(s);
            out.mask[i] = true;
            scratch.stack.push(i);
        }
    }
    while let Some(i) = scratch.stack.pop() {
        let v = bounds.site(i);
        for w in neighbors(v) {
            if region.contains(w) {
                let j = bounds.index(w);
                if !out.mask[j] && passable(w) {
                    out.mask[j] = true;
                    scratch.stack.push(j);
                }
            }
        }
    }
    out
}

/// Whether `s` separates the origin from `∂B(n)`: a flood from the origin
/// through `B(n) \ s` never reaches the boundary.
pub fn surrounds_origin(s: &[Site], n: u32) -> Result<bool> {
    let b = LatticeBox::new(n);
    let blocked = Region::from_sites(b, s.iter().copied())?;
    surrounds_origin_region(&blocked)
}

/// Same as [`surrounds_origin`] with the blocked set given as a region over
/// `B(n)`.
pub fn surrounds_origin_region(blocked: &Region) -> Result<bool> {
    let b = blocked.bounds();
    if blocked.contains(Site::ORIGIN) {
        return Err(Error::invalid("origin belongs to the separating set"));
    }
    let reach = flood_fill(&Region::full(b), |v| !blocked.contains(v), &[Site::ORIGIN], false);
    let hits = reach.iter().any(|v| b.on_boundary(v));
    Ok(!hits)
}

/// Winding number of the closed polygon through `cycle` (first vertex not
/// repeated) around `p`. `p` must not lie on the polygon.
pub fn winding_number(cycle: &[Site], p: Site) -> i32 {
    let mut wn = 0;
    let n = cycle.len();
    for i in 0..n {
        let a = cycle[i];
        let b = cycle[(i + 1) % n];
        let (ax, ay) = ((a.x - p.x) as i64, (a.y - p.y) as i64);
        let (bx, by) = ((b.x - p.x) as i64, (b.y - p.y) as i64);
        let cross = ax * by - bx * ay;
        if ay <= 0 {
            if by > 0 && cross > 0 {
                wn += 1;
            }
        } else if by <= 0 && cross < 0 {
            wn -= 1;
        }
    }
    wn
}

/// Twice the signed area of the polygon; positive when counterclockwise.
pub fn signed_area2(cycle: &[Site]) -> i64 {
    let n = cycle.len();
    (0..n)
        .map(|i| {
            let a = cycle[i];
            let b = cycle[(i + 1) % n];
            a.x as i64 * b.y as i64 - b.x as i64 * a.y as i64
        })
        .sum()
}

/// Box `B(radius)` surrounded by a one-cell guard ring, for the hot loops.
///
/// Cell `i` of the padded layout has neighbours `i + offsets[d]` in
/// [`NEIGHBOR_OFFSETS`] order; guard cells never belong to the box.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PaddedGrid {
    pub radius: u32,
    pub stride: usize,
    pub offsets: [isize; 6],
}

impl PaddedGrid {
    pub fn new(radius: u32) -> Self {
        let stride = 2 * radius as usize + 3;
        let s = stride as isize;
        let offsets = NEIGHBOR_OFFSETS.map(|(dx, dy)| dx as isize + dy as isize * s);
        PaddedGrid { radius, stride, offsets }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.stride * self.stride
    }

    #[inline]
    pub fn index(&self, v: Site) -> usize {
        let r = self.radius as i64 + 1;
        ((v.y as i64 + r) * self.stride as i64 + (v.x as i64 + r)) as usize
    }

    #[inline]
    pub fn site(&self, i: usize) -> Site {
        let r = self.radius as i32 + 1;
        Site::new((i % self.stride) as i32 - r, (i / self.stride) as i32 - r)
    }

    #[inline]
    pub fn neighbor(&self, i: usize, d: usize) -> usize {
        (i as isize + self.offsets[d]) as usize
    }

    #[cfg(test)]
    pub fn contains(&self, v: Site) -> bool {
        v.linf() <= self.radius
    }

    /// Mask that is true on box cells and false on the guard ring.
    pub fn box_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.len()];
        let r = self.radius as i32;
        for y in -r..=r {
            let start = self.index(Site::new(-r, y));
            m[start..start + 2 * r as usize + 1].fill(true);
        }
        m
    }

    /// Flood through cells with `passable[i]` from `seeds`, confined to the
    /// box (guard cells must be impassable). Seeds are always marked.
    pub fn flood(&self, passable: &[bool], seeds: impl IntoIterator<Item = usize>, out: &mut [bool], stack: &mut Vec<usize>) {
        stack.clear();
        for s in seeds {
            if !out[s] {
                out[s] = true;
                stack.push(s);
            }
        }
        while let Some(i) = stack.pop() {
            for d in 0..6 {
                let j = self.neighbor(i, d);
                if passable[j] && !out[j] {
                    out[j] = true;
                    stack.push(j);
                }
            }
        }
    }

    /// Cells of the unbounded complementary component of `inside`: the guard
    /// ring plus every box cell connected to it avoiding `inside`.
    pub fn exterior(&self, inside: &[bool], stack: &mut Vec<usize>) -> Vec<bool> {
        let mut ext = vec![false; self.len()];
        let boxm = self.box_mask();
        let passable: Vec<bool> = boxm.iter().zip(inside).map(|(&b, &a)| b && !a).collect();
        let r = self.radius as i32;
        let seeds: Vec<usize> = boundary_sites(LatticeBox::new(self.radius))
            .into_iter()
            .map(|v| self.index(v))
            .filter(|&i| !inside[i])
            .collect();
        let _ = r;
        self.flood(&passable, seeds, &mut ext, stack);
        for (i, b) in boxm.iter().enumerate() {
            if !b {
                ext[i] = true;
            }
        }
        ext
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn origin_neighbors_in_documented_order() {
        let n = neighbors(Site::ORIGIN);
        assert_eq!(
            n,
            [
                Site::new(1, 0),
                Site::new(-1, 0),
                Site::new(0, 1),
                Site::new(0, -1),
                Site::new(1, -1),
                Site::new(-1, 1)
            ]
        );
    }

    #[test]
    fn diagonal_rule_applies() {
        let n = neighbors(Site::new(5, -3));
        assert!(n.contains(&Site::new(6, -4)));
        assert!(!n.contains(&Site::new(6, -2)));
    }

    #[test]
    fn boundary_counts() {
        assert_eq!(boundary_sites(LatticeBox::new(0)), vec![Site::ORIGIN]);
        let ring1 = boundary_sites(LatticeBox::new(1));
        assert_eq!(ring1.len(), 8);
        assert!(ring1.iter().all(|s| s.linf() == 1));
        assert_eq!(boundary_sites(LatticeBox::new(3)).len(), 24);
        for n in 1..12 {
            let ring = boundary_sites(LatticeBox::new(n));
            let set: std::collections::HashSet<_> = ring.iter().collect();
            assert_eq!(set.len(), 8 * n as usize);
            // consecutive ring sites are lattice neighbours, so the ring is a circuit
            for i in 0..ring.len() {
                assert!(ring[i].is_adjacent(ring[(i + 1) % ring.len()]));
            }
            assert!(signed_area2(&ring) > 0);
        }
    }

    #[test]
    fn flood_fill_examples() {
        let b2 = LatticeBox::new(2);
        let all = flood_fill(&Region::full(b2), |_| true, &[Site::ORIGIN], false);
        assert_eq!(all.len(), 25);

        let seeds = [Site::new(1, 1), Site::new(-1, 0)];
        let none = flood_fill(&Region::full(b2), |_| false, &seeds, true);
        assert_eq!(none.iter().collect::<Vec<_>>().len(), 2);
        assert!(seeds.iter().all(|&s| none.contains(s)));
        assert!(flood_fill(&Region::full(b2), |_| false, &seeds, false).is_empty());

        let b1 = LatticeBox::new(1);
        let half = flood_fill(&Region::full(b1), |v| v.x >= 0, &[Site::new(1, 0)], false);
        let mut got: Vec<_> = half.iter().collect();
        got.sort();
        let mut want = vec![
            Site::new(1, 0),
            Site::new(0, 0),
            Site::new(0, 1),
            Site::new(0, -1),
            Site::new(1, -1),
            Site::new(1, 1),
        ];
        want.sort();
        assert_eq!(got, want);
    }

    #[test]
    fn surrounds_origin_examples() {
        let ring1 = boundary_sites(LatticeBox::new(1));
        assert!(surrounds_origin(&ring1, 4).unwrap());
        let gap: Vec<_> = ring1.iter().copied().filter(|&s| s != Site::new(1, 0)).collect();
        assert!(!surrounds_origin(&gap, 4).unwrap());
        assert!(!surrounds_origin(&[], 4).unwrap());
        assert!(surrounds_origin(&[Site::ORIGIN], 4).is_err());
        // the hexagon of the six neighbours already separates
        assert!(surrounds_origin(&neighbors(Site::ORIGIN), 3).unwrap());
    }

    #[test]
    fn padded_grid_roundtrip() {
        let g = PaddedGrid::new(3);
        for v in LatticeBox::new(3).sites() {
            let i = g.index(v);
            assert_eq!(g.site(i), v);
            for d in 0..6 {
                assert_eq!(g.site(g.neighbor(i, d)), v.offset(NEIGHBOR_OFFSETS[d]));
            }
        }
        assert_eq!(g.box_mask().iter().filter(|&&b| b).count(), 49);
    }

    /// Random self-avoiding cycles: closed loops built from a random walk
    /// around the origin, loop-erased.
    fn random_cycle(seed: u64) -> Option<Vec<Site>> {
        use crate::rng::CounterRng;
        let rng = CounterRng::new(seed, 99);
        let mut path = vec![Site::new(1 + (rng.bits(0) % 3) as i32, 0)];
        let mut c = 1u64;
        for _ in 0..400 {
            let last = *path.last().unwrap();
            let d = NEIGHBOR_OFFSETS[(rng.bits(c) % 6) as usize];
            c += 1;
            let next = last.offset(d);
            if next == Site::ORIGIN || next.linf() > 5 {
                continue;
            }
            if let Some(pos) = path.iter().position(|&s| s == next) {
                if pos == 0 && path.len() >= 3 {
                    return Some(path);
                }
                path.truncate(pos + 1);
            } else {
                path.push(next);
            }
        }
        None
    }

    #[test]
    fn surround_matches_winding_on_random_cycles() {
        let mut tested = 0;
        let mut seed = 0;
        while tested < 150 {
            seed += 1;
            let Some(cycle) = random_cycle(seed) else { continue };
            let by_flood = surrounds_origin(&cycle, 6).unwrap();
            let by_winding = winding_number(&cycle, Site::ORIGIN) != 0;
            assert_eq!(by_flood, by_winding, "cycle {cycle:?}");
            tested += 1;
        }
    }

    proptest! {
        #[test]
        fn adjacency_symmetric_and_translation_covariant(x in -1000i32..1000, y in -1000i32..1000, ux in -50i32..50, uy in -50i32..50) {
            let v = Site::new(x, y);
            let ns = neighbors(v);
            let distinct: std::collections::HashSet<_> = ns.iter().collect();
            prop_assert_eq!(distinct.len(), 6);
            for w in ns {
                prop_assert!(neighbors(w).contains(&v));
            }
            let shifted = neighbors(v.offset((ux, uy)));
            for (a, b) in ns.iter().zip(shifted.iter()) {
                prop_assert_eq!(a.offset((ux, uy)), *b);
            }
        }

        #[test]
        fn flood_result_is_closed(seed in 0u64..500) {
            use crate::rng::CounterRng;
            let b = LatticeBox::new(6);
            let rng = CounterRng::new(seed, 5);
            let open = Region::from_predicate(b, |v| rng.site_uniform(v) < 0.55);
            let seeds = [Site::ORIGIN, Site::new(3, -2)];
            let f = flood_fill(&Region::full(b), |v| open.contains(v), &seeds, true);
            for s in seeds { prop_assert!(f.contains(s)); }
            for v in f.iter() {
                for w in neighbors(v) {
                    if b.contains(w) && open.contains(w) {
                        prop_assert!(f.contains(w));
                    }
                }
            }
        }
    }
}
