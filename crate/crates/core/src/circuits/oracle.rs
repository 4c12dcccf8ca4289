//! Slow, independent checks of the circuit constructions.
//!
//! These work on explicit site sets with plain flood fills and, for small
//! boxes, on an exhaustive enumeration of closed cycles.

use crate::circuits::{Circuit, CircuitHierarchy, Status};
use crate::error::{Error, Result};
use crate::lattice::{neighbors, signed_area2, surrounds_origin_region, winding_number, LatticeBox, Region, Site};
use crate::weights::WeightField;

/// Largest box the cycle enumeration accepts.
pub const ENUMERATION_MAX_RADIUS: u32 = 8;

fn closed_in(field: &WeightField, b: LatticeBox, keep: impl Fn(Site) -> bool) -> Region {
    Region::from_predicate(b, |v| !field.is_open(v) && v != Site::ORIGIN && keep(v))
}

/// Checks that `h` is a nested family of disjoint closed circuits in `B(n)`
/// and that no closed set strictly inside `C_1`, strictly between two
/// consecutive circuits or outside the last one separates the origin from
/// `∂B(n)`.
pub fn check_hierarchy(field: &WeightField, h: &CircuitHierarchy) -> Result<()> {
    let n = h.radius;
    let b = LatticeBox::new(n);
    for c in &h.circuits {
        if c.status() != Status::Closed {
            return Err(Error::Extraction("hierarchy circuit marked open".into()));
        }
        c.validate(field, n)?;
    }
    for w in h.circuits.windows(2) {
        if !w[0].vertices().iter().all(|&v| w[1].encloses(v)) {
            return Err(Error::Extraction("hierarchy circuits not strictly nested".into()));
        }
    }
    let fail = |what: &str| Err(Error::Extraction(format!("closed set {what} separates the origin")));
    match h.circuits.first() {
        None => {
            if surrounds_origin_region(&closed_in(field, b, |_| true))? {
                return fail("in an empty hierarchy");
            }
        }
        Some(first) => {
            if surrounds_origin_region(&closed_in(field, b, |v| first.encloses(v)))? {
                return fail("inside the innermost circuit");
            }
        }
    }
    for w in h.circuits.windows(2) {
        let between = closed_in(field, b, |v| w[1].encloses(v) && !w[0].contains(v) && !w[0].encloses(v));
        if surrounds_origin_region(&between)? {
            return fail("between consecutive circuits");
        }
    }
    if let Some(last) = h.circuits.last() {
        let outside = closed_in(field, b, |v| !last.contains(v) && !last.encloses(v));
        if surrounds_origin_region(&outside)? {
            return fail("outside the outermost circuit");
        }
    }
    Ok(())
}

/// Checks the innermost open circuit of annulus level `r`: with a circuit,
/// it is open, lies in the annulus and the open sites of the annulus strictly
/// inside it do not separate; without one, the open sites of the annulus do
/// not separate.
pub fn check_innermost_open(field: &WeightField, r: u32, circuit: Option<&Circuit>) -> Result<()> {
    let (lo, hi) = (1u32 << r, 1u32 << (r + 1));
    let b = LatticeBox::new(hi);
    let in_annulus = |v: Site| v.linf() > lo && v.linf() <= hi;
    let open_in = |keep: &dyn Fn(Site) -> bool| Region::from_predicate(b, |v| field.is_open(v) && in_annulus(v) && keep(v));
    match circuit {
        None => {
            if surrounds_origin_region(&open_in(&|_| true))? {
                return Err(Error::Extraction(format!("annulus {r} holds an open circuit that was missed")));
            }
        }
        Some(c) => {
            if c.status() != Status::Open || !c.vertices().iter().all(|&v| in_annulus(v)) {
                return Err(Error::Extraction("innermost circuit not open or not in the annulus".into()));
            }
            c.validate(field, hi)?;
            if surrounds_origin_region(&open_in(&|v| c.encloses(v)))? {
                return Err(Error::Extraction(format!("a smaller open circuit exists in annulus {r}")));
            }
        }
    }
    Ok(())
}

type Bits = [u64; 5];

#[derive(Clone, Debug)]
struct Cycle {
    bits: Bits,
    vertices: Vec<Site>,
    area2: i64,
}

fn disjoint(a: &Bits, b: &Bits) -> bool {
    a.iter().zip(b).all(|(x, y)| x & y == 0)
}

/// Every closed simple cycle of `B(n)` winding around the origin, once each,
/// counterclockwise. `None` when more than `budget` search steps are needed.
fn closed_cycles(field: &WeightField, n: u32, budget: u64) -> Result<Option<Vec<Cycle>>> {
    if n > ENUMERATION_MAX_RADIUS {
        return Err(Error::invalid(format!("enumeration limited to radius {ENUMERATION_MAX_RADIUS}, got {n}")));
    }
    if n > field.radius() {
        return Err(Error::invalid(format!("n = {n} exceeds field radius {}", field.radius())));
    }
    let b = LatticeBox::new(n);
    let usable: Vec<bool> = b.sites().map(|v| v != Site::ORIGIN && !field.is_open(v)).collect();
    let mut steps = 0u64;
    let mut out = Vec::new();
    for x0 in 1..=n as i32 {
        let start = Site::new(x0, 0);
        if !usable[b.index(start)] {
            continue;
        }
        // the canonical start is the crossing of the positive axis nearest
        // to the origin, so closer crossings are banned
        let allowed = |v: Site| b.contains(v) && usable[b.index(v)] && !(v.y == 0 && v.x > 0 && v.x < x0);
        let mut path = vec![start];
        let mut on = [0u64; 5];
        let set = |bits: &mut Bits, v: Site, val: bool| {
            let i = b.index(v);
            if val {
                bits[i / 64] |= 1 << (i % 64);
            } else {
                bits[i / 64] &= !(1 << (i % 64));
            }
        };
        let has = |bits: &Bits, v: Site| {
            let i = b.index(v);
            bits[i / 64] >> (i % 64) & 1 == 1
        };
        set(&mut on, start, true);
        let mut next_dir = vec![0usize];
        while let Some(d) = next_dir.last_mut() {
            if *d == 6 {
                next_dir.pop();
                let v = path.pop().unwrap();
                set(&mut on, v, false);
                continue;
            }
            let cur = *path.last().unwrap();
            let w = neighbors(cur)[*d];
            *d += 1;
            steps += 1;
            if steps > budget {
                return Ok(None);
            }
            if w == start && path.len() >= 3 {
                if winding_number(&path, Site::ORIGIN) != 0 && signed_area2(&path) > 0 {
                    out.push(Cycle { bits: on, vertices: path.clone(), area2: signed_area2(&path) });
                }
                continue;
            }
            if allowed(w) && !has(&on, w) {
                set(&mut on, w, true);
                path.push(w);
                next_dir.push(0);
            }
        }
    }
    Ok(Some(out))
}

/// Longest chain of pairwise disjoint cycles among those passing `keep`.
fn longest_disjoint_chain(mut cycles: Vec<Cycle>, keep: impl Fn(&Cycle) -> bool) -> usize {
    cycles.retain(|c| keep(c));
    cycles.sort_by_key(|c| c.area2);
    let mut best = vec![0usize; cycles.len()];
    for i in 0..cycles.len() {
        let mut b = 1;
        for j in 0..i {
            if cycles[j].area2 < cycles[i].area2 && disjoint(&cycles[j].bits, &cycles[i].bits) {
                b = b.max(best[j] + 1);
            }
        }
        best[i] = b;
    }
    best.into_iter().max().unwrap_or(0)
}

/// Exact maximal number of disjoint closed circuits surrounding the origin
/// in `B(n)`, by enumeration.
pub fn exact_max_disjoint_closed(field: &WeightField, n: u32, budget: u64) -> Result<Option<usize>> {
    Ok(closed_cycles(field, n, budget)?.map(|cs| longest_disjoint_chain(cs, |_| true)))
}

/// Exact maximal number of disjoint closed circuits surrounding the origin
/// in `B(n)` that meet `B(2^{m+1}) \ B(2^m)`, by enumeration.
pub fn exact_annulus_circuit_count(field: &WeightField, n: u32, m: u32, budget: u64) -> Result<Option<usize>> {
    let (lo, hi) = (1u32 << m, 1u32 << (m + 1));
    Ok(closed_cycles(field, n, budget)?.map(|cs| {
        longest_disjoint_chain(cs, |c| c.vertices.iter().any(|v| v.linf() > lo && v.linf() <= hi))
    }))
}
