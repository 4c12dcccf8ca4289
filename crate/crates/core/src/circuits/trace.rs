//! Boundary tracing.
//!
//! For a connected set `A` containing the origin, let `U` be the unbounded
//! component of its complement. The interface between `A` and `U` is walked
//! as a sequence of states `(a, d)` with `a` in `A` and `a + D[d]` in `U`,
//! `D` the six directions in counterclockwise order: with `h = a + D[d+1]`,
//! the next state is `(h, d-1)` if `h` is in `A` and `(a, d+1)` otherwise.
//! The `A` sites visited form the inner walk, the `U` sites the outer walk;
//! both are closed lattice walks around `A`. Pinches are removed by cutting
//! the walk at repeated vertices and keeping the loop that winds around the
//! origin.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lattice::{signed_area2, winding_number, PaddedGrid, Site, CCW_DIRECTIONS};

pub(crate) struct Walks {
    pub inner: Vec<Site>,
    pub outer: Vec<Site>,
}

pub(crate) fn boundary_walks(grid: &PaddedGrid, inside: &[bool], exterior: &[bool]) -> Result<Walks> {
    let s = grid.stride as isize;
    let off: [isize; 6] = CCW_DIRECTIONS.map(|(dx, dy)| dx as isize + dy as isize * s);
    let step = |i: usize, d: usize| (i as isize + off[d]) as usize;
    let start = (0..grid.len())
        .filter(|&i| inside[i])
        .find_map(|i| (0..6).find(|&d| exterior[step(i, d)]).map(|d| (i, d)))
        .ok_or_else(|| Error::Extraction("set has no exterior boundary".into()))?;
    let (mut a, mut d) = start;
    let mut inner: Vec<usize> = Vec::new();
    let mut outer: Vec<usize> = Vec::new();
    let limit = 12 * grid.len();
    for _ in 0..limit {
        if inner.last() != Some(&a) {
            inner.push(a);
        }
        let u = step(a, d);
        if outer.last() != Some(&u) {
            outer.push(u);
        }
        let h = step(a, (d + 1) % 6);
        if inside[h] {
            a = h;
            d = (d + 5) % 6;
        } else {
            d = (d + 1) % 6;
        }
        if (a, d) == start {
            for w in [&mut inner, &mut outer] {
                if w.len() > 1 && w.first() == w.last() {
                    w.pop();
                }
            }
            return Ok(Walks {
                inner: inner.into_iter().map(|i| grid.site(i)).collect(),
                outer: outer.into_iter().map(|i| grid.site(i)).collect(),
            });
        }
    }
    Err(Error::Extraction("boundary walk did not close".into()))
}

/// Cut a closed walk into simple loops and keep the one winding around the
/// origin, counterclockwise.
pub(crate) fn simple_loop(walk: &[Site]) -> Result<Vec<Site>> {
    if walk.contains(&Site::ORIGIN) {
        return Err(Error::Extraction("boundary walk passes through the origin".into()));
    }
    let mut stack: Vec<Site> = Vec::with_capacity(walk.len());
    let mut pos: HashMap<Site, usize> = HashMap::with_capacity(walk.len());
    for &v in walk.iter().chain(std::iter::once(&walk[0])) {
        if let Some(&p) = pos.get(&v) {
            let lp = &stack[p..];
            if lp.len() >= 3 && winding_number(lp, Site::ORIGIN) != 0 {
                let mut out = lp.to_vec();
                if signed_area2(&out) < 0 {
                    out.reverse();
                }
                return Ok(out);
            }
            for w in stack.drain(p + 1..) {
                pos.remove(&w);
            }
        } else {
            pos.insert(v, stack.len());
            stack.push(v);
        }
    }
    Err(Error::Extraction("no loop of the boundary walk winds around the origin".into()))
}

/// Simple circuit from the outer walk of `inside` (the exterior layer).
pub(crate) fn outer_circuit(grid: &PaddedGrid, inside: &[bool], scratch: &mut Vec<usize>) -> Result<Vec<Site>> {
    let ext = grid.exterior(inside, scratch);
    simple_loop(&boundary_walks(grid, inside, &ext)?.outer)
}

/// Simple circuit from the inner walk of `inside` (its own boundary layer).
pub(crate) fn inner_circuit(grid: &PaddedGrid, inside: &[bool], scratch: &mut Vec<usize>) -> Result<Vec<Site>> {
    let ext = grid.exterior(inside, scratch);
    simple_loop(&boundary_walks(grid, inside, &ext)?.inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::hex_ring;
    use crate::lattice::{boundary_sites, LatticeBox};

    fn mask(grid: &PaddedGrid, pred: impl Fn(Site) -> bool) -> Vec<bool> {
        (0..grid.len())
            .map(|i| {
                let v = grid.site(i);
                grid.contains(v) && pred(v)
            })
            .collect()
    }

    #[test]
    fn single_site_gives_hexagon() {
        let g = PaddedGrid::new(3);
        let m = mask(&g, |v| v == Site::ORIGIN);
        let c = outer_circuit(&g, &m, &mut Vec::new()).unwrap();
        let mut got = c.clone();
        got.sort();
        let mut want = hex_ring(1);
        want.sort();
        assert_eq!(got, want);
        assert!(signed_area2(&c) > 0);
    }

    #[test]
    fn box_outer_layer_is_ring_minus_two_corners() {
        let g = PaddedGrid::new(6);
        let m = mask(&g, |v| v.linf() <= 2);
        let c = outer_circuit(&g, &m, &mut Vec::new()).unwrap();
        assert_eq!(c.len(), 8 * 3 - 2);
        assert!(!c.contains(&Site::new(3, 3)) && !c.contains(&Site::new(-3, -3)));
        let inner = inner_circuit(&g, &m, &mut Vec::new()).unwrap();
        let mut a = inner.clone();
        a.sort();
        let mut b = boundary_sites(LatticeBox::new(2));
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn pinched_set_keeps_the_loop_around_origin() {
        // a hexagon around the origin plus a tentacle hanging off it
        let g = PaddedGrid::new(8);
        let m = mask(&g, |v| crate::circuits::hex_distance(v) <= 1 || (v.y == 0 && v.x >= 1 && v.x <= 5));
        let c = outer_circuit(&g, &m, &mut Vec::new()).unwrap();
        assert!(winding_number(&c, Site::ORIGIN) == 1);
        for i in 0..c.len() {
            assert!(c[i].is_adjacent(c[(i + 1) % c.len()]));
        }
    }
}
