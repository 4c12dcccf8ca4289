//! Vertex-weighted first-passage times.
//!
//! The passage time of a path `(x_1, ..., x_m)` is `t(x_2) + ... + t(x_m)`:
//! the first vertex never counts, so `T(A, B)` and `T(B, A)` differ in
//! general. Paths are confined to the field's box and may re-enter `A`.
//!
//! General weights use Dijkstra with a zero-weight fast path; Bernoulli
//! weights (values in `{0, I}`) use a two-level queue over closed-site
//! counts, and the time is `I` times that count.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::circuits::Circuit;
use crate::error::{Error, Result};
use crate::lattice::{boundary_sites, winding_number, LatticeBox, PaddedGrid, Site};
use crate::weights::{WeightField, WeightKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PassageResult {
    pub time: f64,
    pub geodesic: Option<Vec<Site>>,
    pub source_hit: Site,
    pub target_hit: Site,
    /// Closed sites on a Bernoulli geodesic; `time = I * closed_count`.
    pub closed_count: Option<u64>,
}

/// Shortest-path algorithm selection; `Auto` uses the two-level queue for
/// Bernoulli weights and Dijkstra otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    Auto,
    Dijkstra,
    TwoLevelQueue,
}

const NONE: u32 = u32::MAX;
const WALL: u8 = u8::MAX;

struct Costs {
    grid: PaddedGrid,
    /// Padded float weights, infinite on the guard ring.
    real: Vec<f64>,
}

fn real_costs(field: &WeightField, kind: WeightKind) -> Costs {
    let grid = PaddedGrid::new(field.radius());
    let mut real = vec![f64::INFINITY; grid.len()];
    let b = field.bounds();
    for (k, v) in b.sites().enumerate() {
        real[grid.index(v)] = match kind {
            WeightKind::General => field.weights()[k],
            WeightKind::Bernoulli => {
                if field.open_mask()[k] {
                    0.0
                } else {
                    field.infimum()
                }
            }
        };
    }
    Costs { grid, real }
}

/// Padded closed-site indicator with a wall on the guard ring.
fn unit_costs(field: &WeightField) -> (PaddedGrid, Vec<u8>) {
    let grid = PaddedGrid::new(field.radius());
    let mut c = vec![WALL; grid.len()];
    for (k, v) in field.bounds().sites().enumerate() {
        c[grid.index(v)] = u8::from(!field.open_mask()[k]);
    }
    (grid, c)
}

struct Search {
    dist: Vec<f64>,
    pred: Vec<u32>,
    hit: Option<usize>,
}

/// Label-setting search. Forward: entering `u` costs `w[u]`. Reverse: a
/// settled `u` gives its neighbours `g(u) + w[u]`, which is the cost of
/// paths that start at the neighbour and end in the sources.
fn dijkstra(grid: &PaddedGrid, w: &[f64], sources: &[usize], mut stop: impl FnMut(usize, f64) -> bool, reverse: bool) -> Search {
    let len = grid.len();
    let mut dist = vec![f64::INFINITY; len];
    let mut pred = vec![NONE; len];
    let mut done = vec![false; len];
    let mut heap: BinaryHeap<Reverse<(u64, u32)>> = BinaryHeap::new();
    let mut level: Vec<usize> = Vec::new();
    for &s in sources {
        if dist[s] != 0.0 {
            dist[s] = 0.0;
            heap.push(Reverse((0, s as u32)));
        }
    }
    loop {
        let v = if let Some(v) = level.pop() {
            v
        } else if let Some(Reverse((_, v))) = heap.pop() {
            v as usize
        } else {
            break;
        };
        if done[v] {
            continue;
        }
        done[v] = true;
        let d = dist[v];
        if stop(v, d) {
            return Search { dist, pred, hit: Some(v) };
        }
        for k in 0..6 {
            let u = grid.neighbor(v, k);
            if done[u] || !w[u].is_finite() {
                continue;
            }
            let step = if reverse { w[v] } else { w[u] };
            let nd = d + step;
            if nd < dist[u] {
                dist[u] = nd;
                pred[u] = v as u32;
                if step == 0.0 {
                    level.push(u);
                } else {
                    heap.push(Reverse((nd.to_bits(), u as u32)));
                }
            }
        }
    }
    Search { dist, pred, hit: None }
}

struct CountSearch {
    dist: Vec<u32>,
    pred: Vec<u32>,
    hit: Option<usize>,
}

/// Two-level queue over unit costs in `{0, 1}`; same orientation rules as
/// [`dijkstra`].
fn zero_one_bfs(grid: &PaddedGrid, c: &[u8], sources: &[usize], mut stop: impl FnMut(usize, u32) -> bool, reverse: bool) -> CountSearch {
    let len = grid.len();
    let mut dist = vec![u32::MAX; len];
    let mut pred = vec![NONE; len];
    let mut done = vec![false; len];
    let mut q: VecDeque<usize> = VecDeque::new();
    for &s in sources {
        if dist[s] != 0 {
            dist[s] = 0;
            q.push_back(s);
        }
    }
    while let Some(v) = q.pop_front() {
        if done[v] {
            continue;
        }
        done[v] = true;
        let d = dist[v];
        if stop(v, d) {
            return CountSearch { dist, pred, hit: Some(v) };
        }
        for k in 0..6 {
            let u = grid.neighbor(v, k);
            if done[u] || c[u] == WALL {
                continue;
            }
            let step = if reverse { c[v] } else { c[u] } as u32;
            let nd = d + step;
            if nd < dist[u] {
                dist[u] = nd;
                pred[u] = v as u32;
                if step == 0 {
                    q.push_front(u);
                } else {
                    q.push_back(u);
                }
            }
        }
    }
    CountSearch { dist, pred, hit: None }
}

fn check_set(b: LatticeBox, set: &[Site], name: &str) -> Result<()> {
    if set.is_empty() {
        return Err(Error::invalid(format!("{name} is empty")));
    }
    if let Some(v) = set.iter().find(|v| !b.contains(**v)) {
        return Err(Error::invalid(format!("{name} contains {v:?} outside B({})", b.radius)));
    }
    Ok(())
}

fn trace(grid: &PaddedGrid, pred: &[u32], hit: usize) -> Vec<Site> {
    let mut path = vec![grid.site(hit)];
    let mut v = hit;
    while pred[v] != NONE {
        v = pred[v] as usize;
        path.push(grid.site(v));
    }
    path.reverse();
    path
}

pub fn first_passage(field: &WeightField, kind: WeightKind, a: &[Site], b: &[Site], want_geodesic: bool) -> Result<PassageResult> {
    first_passage_with(field, kind, a, b, want_geodesic, Solver::Auto)
}

pub fn first_passage_with(
    field: &WeightField,
    kind: WeightKind,
    a: &[Site],
    b: &[Site],
    want_geodesic: bool,
    solver: Solver,
) -> Result<PassageResult> {
    let bx = field.bounds();
    check_set(bx, a, "source set")?;
    check_set(bx, b, "target set")?;
    let use_bfs = match solver {
        Solver::Auto => kind == WeightKind::Bernoulli,
        Solver::Dijkstra => false,
        Solver::TwoLevelQueue => {
            if kind != WeightKind::Bernoulli {
                return Err(Error::invalid("the two-level queue needs Bernoulli weights"));
            }
            true
        }
    };
    let grid = PaddedGrid::new(field.radius());
    let mut target = vec![false; grid.len()];
    for &v in b {
        target[grid.index(v)] = true;
    }
    let sources: Vec<usize> = a.iter().map(|&v| grid.index(v)).collect();
    let (time, closed, pred, hit) = if use_bfs {
        let (g, c) = unit_costs(field);
        let s = zero_one_bfs(&g, &c, &sources, |v, _| target[v], false);
        let hit = s.hit.ok_or_else(|| Error::invalid("target unreachable"))?;
        let n = s.dist[hit];
        (n as f64 * field.infimum(), Some(n as u64), s.pred, hit)
    } else {
        let costs = real_costs(field, kind);
        let s = dijkstra(&costs.grid, &costs.real, &sources, |v, _| target[v], false);
        let hit = s.hit.ok_or_else(|| Error::invalid("target unreachable"))?;
        let closed = (kind == WeightKind::Bernoulli).then(|| {
            trace(&grid, &s.pred, hit)[1..].iter().filter(|v| !field.is_open(**v)).count() as u64
        });
        (s.dist[hit], closed, s.pred, hit)
    };
    let path = trace(&grid, &pred, hit);
    Ok(PassageResult {
        time,
        source_hit: path[0],
        target_hit: *path.last().unwrap(),
        geodesic: want_geodesic.then_some(path),
        closed_count: closed,
    })
}

/// `T(0, ∂B(n))`.
pub fn point_to_box(field: &WeightField, kind: WeightKind, n: u32) -> Result<PassageResult> {
    if n > field.radius() {
        return Err(Error::invalid(format!("n = {n} exceeds field radius {}", field.radius())));
    }
    first_passage(field, kind, &[Site::ORIGIN], &boundary_sites(LatticeBox::new(n)), false)
}

/// `T(inner, outer)` for nested disjoint circuits.
pub fn circuit_to_circuit(field: &WeightField, kind: WeightKind, inner: &Circuit, outer: &Circuit) -> Result<PassageResult> {
    check_nested(inner.vertices(), outer.vertices())?;
    first_passage(field, kind, inner.vertices(), outer.vertices(), false)
}

/// `inner` is disjoint from `outer` and lies in its interior.
pub fn check_nested(inner: &[Site], outer: &[Site]) -> Result<()> {
    let outer_set: std::collections::HashSet<Site> = outer.iter().copied().collect();
    for &v in inner {
        if outer_set.contains(&v) || winding_number(outer, v) == 0 {
            return Err(Error::invalid("circuits are not strictly nested"));
        }
    }
    Ok(())
}

/// Weight sum along `path`, first vertex excluded, in path order.
pub fn path_time(field: &WeightField, kind: WeightKind, path: &[Site]) -> f64 {
    path.iter().skip(1).fold(0.0, |acc, &v| {
        acc + match kind {
            WeightKind::General => field.weight(v),
            WeightKind::Bernoulli => field.bernoulli_weight(v),
        }
    })
}

/// Passage times from `sources` to every site of the box, indexed like the
/// field (row-major over `B(n)`).
pub fn times_from(field: &WeightField, kind: WeightKind, sources: &[Site]) -> Result<Vec<f64>> {
    distances(field, kind, sources, false)
}

/// For every site `v`, `T({v}, targets)`: the cheapest cost of a path from
/// `v` into `targets`, counting every vertex after `v`.
pub fn times_to(field: &WeightField, kind: WeightKind, targets: &[Site]) -> Result<Vec<f64>> {
    distances(field, kind, targets, true)
}

fn distances(field: &WeightField, kind: WeightKind, seeds: &[Site], reverse: bool) -> Result<Vec<f64>> {
    let bx = field.bounds();
    check_set(bx, seeds, "seed set")?;
    let grid = PaddedGrid::new(field.radius());
    let idx: Vec<usize> = seeds.iter().map(|&v| grid.index(v)).collect();
    let padded: Vec<f64> = if kind == WeightKind::Bernoulli {
        let (g, c) = unit_costs(field);
        let s = zero_one_bfs(&g, &c, &idx, |_, _| false, reverse);
        let i = field.infimum();
        s.dist.iter().map(|&d| if d == u32::MAX { f64::INFINITY } else { d as f64 * i }).collect()
    } else {
        let costs = real_costs(field, kind);
        dijkstra(&costs.grid, &costs.real, &idx, |_, _| false, reverse).dist
    };
    Ok(bx.sites().map(|v| padded[grid.index(v)]).collect())
}

/// Closed-site counts of Bernoulli passage from the origin to every site.
pub fn closed_counts_from_origin(field: &WeightField) -> Vec<u32> {
    let (g, c) = unit_costs(field);
    let s = zero_one_bfs(&g, &c, &[g.index(Site::ORIGIN)], |_, _| false, false);
    field.bounds().sites().map(|v| s.dist[g.index(v)]).collect()
}

/// `T(0, ∂B(n))` for every `n` up to the field radius, from one search.
///
/// Sites settle in time order, so `T(0, ∂B(r))` is the time of the first
/// settled site with `|v| >= r`; the search stops at the outer ring.
pub fn point_to_box_ladder(field: &WeightField, kind: WeightKind) -> Vec<f64> {
    let top = field.radius() as usize;
    let grid = PaddedGrid::new(field.radius());
    let mut out = vec![f64::INFINITY; top + 1];
    out[0] = 0.0;
    let mut reached = 0;
    let mut record = |v: usize, d: f64| {
        let r = grid.site(v).linf() as usize;
        while reached < r {
            reached += 1;
            out[reached] = d;
        }
        reached == top
    };
    let origin = [grid.index(Site::ORIGIN)];
    if kind == WeightKind::Bernoulli {
        let (g, c) = unit_costs(field);
        let i = field.infimum();
        zero_one_bfs(&g, &c, &origin, |v, d| record(v, d as f64 * i), false);
    } else {
        let costs = real_costs(field, kind);
        dijkstra(&costs.grid, &costs.real, &origin, record, false);
    }
    out
}

/// Largest box [`exhaustive_point_to_box`] accepts.
pub const EXHAUSTIVE_MAX_RADIUS: u32 = 4;

/// `T(0, ∂B(n))` by depth-first enumeration of self-avoiding paths from the
/// origin that stop at their first boundary site. Branches already costlier
/// than the best complete path are cut, which never discards a minimiser
/// since weights are nonnegative.
pub fn exhaustive_point_to_box(field: &WeightField, kind: WeightKind, n: u32) -> Result<f64> {
    if n > EXHAUSTIVE_MAX_RADIUS || n > field.radius() {
        return Err(Error::invalid(format!("exhaustive search limited to radius {EXHAUSTIVE_MAX_RADIUS}, got {n}")));
    }
    let b = LatticeBox::new(n);
    let w: Vec<f64> = b
        .sites()
        .map(|v| match kind {
            WeightKind::General => field.weight(v),
            WeightKind::Bernoulli => field.bernoulli_weight(v),
        })
        .collect();
    fn go(b: LatticeBox, w: &[f64], v: Site, cost: f64, seen: &mut [bool], best: &mut f64) {
        if b.on_boundary(v) {
            *best = best.min(cost);
            return;
        }
        for u in crate::lattice::neighbors(v) {
            let i = b.index(u);
            if seen[i] {
                continue;
            }
            let c = cost + w[i];
            if c > *best {
                continue;
            }
            seen[i] = true;
            go(b, w, u, c, seen, best);
            seen[i] = false;
        }
    }
    let mut seen = vec![false; b.len()];
    seen[b.index(Site::ORIGIN)] = true;
    let mut best = f64::INFINITY;
    if n == 0 {
        return Ok(0.0);
    }
    go(b, &w, Site::ORIGIN, 0.0, &mut seen, &mut best);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{sample_field, DistributionSpec};

    fn bern() -> DistributionSpec {
        DistributionSpec::bernoulli(1.0).unwrap()
    }

    #[test]
    fn all_open_is_zero_all_closed_is_n() {
        let s = bern();
        let open = WeightField::from_open_fn(&s, 6, |_| true).unwrap();
        let closed = WeightField::from_open_fn(&s, 6, |_| false).unwrap();
        for n in 0..=6 {
            for kind in [WeightKind::General, WeightKind::Bernoulli] {
                assert_eq!(point_to_box(&open, kind, n).unwrap().time, 0.0);
                assert_eq!(point_to_box(&closed, kind, n).unwrap().time, n as f64);
            }
        }
        let r = first_passage(&open, WeightKind::General, &[Site::new(2, 2)], &[Site::new(-3, 1)], true).unwrap();
        assert_eq!(r.time, 0.0);
    }

    #[test]
    fn overlapping_sets_give_zero() {
        let f = WeightField::from_open_fn(&bern(), 3, |_| false).unwrap();
        let r = first_passage(&f, WeightKind::General, &[Site::new(1, 1)], &[Site::new(1, 1), Site::new(3, 3)], true).unwrap();
        assert_eq!(r.time, 0.0);
        assert_eq!(r.geodesic.unwrap(), vec![Site::new(1, 1)]);
    }

    #[test]
    fn bad_inputs_rejected() {
        let f = WeightField::from_open_fn(&bern(), 3, |_| false).unwrap();
        assert!(first_passage(&f, WeightKind::General, &[], &[Site::ORIGIN], false).is_err());
        assert!(first_passage(&f, WeightKind::General, &[Site::ORIGIN], &[Site::new(4, 0)], false).is_err());
        assert!(point_to_box(&f, WeightKind::General, 4).is_err());
    }

    #[test]
    fn direction_matters() {
        let s = DistributionSpec::uniform(1.0, 2.0).unwrap();
        let f = WeightField::from_weight_fn(&s, 2, |v| if v == Site::ORIGIN { 1.75 } else { 1.25 }).unwrap();
        let a = [Site::ORIGIN];
        let b = [Site::new(1, 0)];
        assert_eq!(first_passage(&f, WeightKind::General, &a, &b, false).unwrap().time, 1.25);
        assert_eq!(first_passage(&f, WeightKind::General, &b, &a, false).unwrap().time, 1.75);
    }

    #[test]
    fn solvers_agree_and_geodesics_reproduce_time() {
        let spec = bern();
        for seed in 0..300 {
            let f = sample_field(&spec, 10, seed).unwrap();
            let ring = boundary_sites(LatticeBox::new(2 + (seed % 8) as u32));
            let d = first_passage_with(&f, WeightKind::Bernoulli, &[Site::ORIGIN], &ring, true, Solver::Dijkstra).unwrap();
            let q = first_passage_with(&f, WeightKind::Bernoulli, &[Site::ORIGIN], &ring, true, Solver::TwoLevelQueue).unwrap();
            assert_eq!(d.time, q.time);
            assert_eq!(d.closed_count, q.closed_count);
            for r in [d, q] {
                let g = r.geodesic.unwrap();
                assert_eq!(path_time(&f, WeightKind::Bernoulli, &g), r.time);
                assert_eq!(g[0], r.source_hit);
            }
        }
    }

    #[test]
    fn reverse_distances_match_pointwise_solves() {
        let spec = DistributionSpec::uniform(1.0, 2.0).unwrap();
        let f = sample_field(&spec, 5, 17).unwrap();
        let targets = boundary_sites(LatticeBox::new(3));
        for kind in [WeightKind::General, WeightKind::Bernoulli] {
            let g = times_to(&f, kind, &targets).unwrap();
            for v in LatticeBox::new(5).sites().step_by(3) {
                let direct = first_passage(&f, kind, &[v], &targets, false).unwrap().time;
                assert!((g[f.bounds().index(v)] - direct).abs() < 1e-12, "{v:?}");
            }
        }
    }

    #[test]
    fn exhaustive_search_matches_solver() {
        for spec in DistributionSpec::builtin_families() {
            for seed in 0..20 {
                let f = sample_field(&spec, 3, seed).unwrap();
                for kind in [WeightKind::General, WeightKind::Bernoulli] {
                    let brute = exhaustive_point_to_box(&f, kind, 3).unwrap();
                    assert_eq!(point_to_box(&f, kind, 3).unwrap().time, brute, "{spec} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn ladder_matches_individual_solves() {
        let mut specs = DistributionSpec::builtin_families();
        specs.push(DistributionSpec::shifted_exponential(0.5, 2.0).unwrap());
        for spec in &specs {
            for seed in 0..8 {
                let f = sample_field(spec, 12, seed).unwrap();
                for kind in [WeightKind::General, WeightKind::Bernoulli] {
                    let ladder = point_to_box_ladder(&f, kind);
                    for n in 0..=12u32 {
                        let t = point_to_box(&f, kind, n).unwrap().time;
                        assert_eq!(ladder[n as usize], t, "{spec} seed {seed} {kind:?} n {n}");
                        if n > 0 {
                            assert!(ladder[n as usize - 1] <= ladder[n as usize]);
                        }
                    }
                }
            }
        }
    }
}
