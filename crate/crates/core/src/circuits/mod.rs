//! Circuits surrounding the origin and the structures built from them.
//!
//! A circuit is stored as a cyclic vertex list (first vertex not repeated),
//! self-avoiding, counterclockwise in the planar embedding, and winding once
//! around the origin.

mod chain;
mod diagnostics;
mod hierarchy;
pub mod oracle;
mod trace;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{signed_area2, surrounds_origin, winding_number, Site};
use crate::weights::WeightField;

pub(crate) use chain::{circuit_at_level, grow_field};
pub use chain::{annulus_chain, annulus_chain_growing, innermost_open_circuit, AnnulusChain, ChainLink};
pub use diagnostics::{
    annulus_circuit_count, proximity_statistic, square_counts, square_counts_with, ProximityStatistic, SquareCounts,
};
pub use hierarchy::{max_disjoint_closed_circuits, outermost_closed_sequence, CircuitHierarchy};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Open,
    Closed,
}

impl Status {
    pub fn of(field: &WeightField, v: Site) -> Status {
        if field.is_open(v) {
            Status::Open
        } else {
            Status::Closed
        }
    }

    pub fn flip(self) -> Status {
        match self {
            Status::Open => Status::Closed,
            Status::Closed => Status::Open,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    vertices: Vec<Site>,
    status: Status,
    diameter: f64,
}

impl Circuit {
    /// Checks adjacency, self-avoidance and winding around the origin, and
    /// reorients counterclockwise.
    pub fn new(mut vertices: Vec<Site>, status: Status) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::Extraction(format!("{n} vertices cannot form a circuit")));
        }
        let distinct: HashSet<Site> = vertices.iter().copied().collect();
        if distinct.len() != n {
            return Err(Error::Extraction("circuit revisits a vertex".into()));
        }
        for i in 0..n {
            if !vertices[i].is_adjacent(vertices[(i + 1) % n]) {
                return Err(Error::Extraction(format!(
                    "{:?} and {:?} are consecutive but not adjacent",
                    vertices[i],
                    vertices[(i + 1) % n]
                )));
            }
        }
        if distinct.contains(&Site::ORIGIN) || winding_number(&vertices, Site::ORIGIN) == 0 {
            return Err(Error::Extraction("circuit does not surround the origin".into()));
        }
        if signed_area2(&vertices) < 0 {
            vertices.reverse();
        }
        let diameter = euclidean_diameter(&vertices);
        Ok(Circuit { vertices, status, diameter })
    }

    pub fn vertices(&self) -> &[Site] {
        &self.vertices
    }

    pub fn status(&self) -> Status {
        self.status
    }

    /// Euclidean diameter of the vertex set in integer-plane coordinates.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: Site) -> bool {
        self.vertices.contains(&v)
    }

    /// Strict interior membership.
    pub fn encloses(&self, v: Site) -> bool {
        !self.contains(v) && winding_number(&self.vertices, v) != 0
    }

    pub fn max_linf(&self) -> u32 {
        self.vertices.iter().map(|v| v.linf()).max().unwrap_or(0)
    }

    pub fn min_linf(&self) -> u32 {
        self.vertices.iter().map(|v| v.linf()).min().unwrap_or(0)
    }

    /// Full check against a field: homogeneous status and topological
    /// separation of the origin from the boundary of `B(n)`.
    pub fn validate(&self, field: &WeightField, n: u32) -> Result<()> {
        for &v in &self.vertices {
            if !field.bounds().contains(v) {
                return Err(Error::Extraction(format!("{v:?} outside the field")));
            }
            if Status::of(field, v) != self.status {
                return Err(Error::Extraction(format!("{v:?} has the wrong status")));
            }
        }
        if !surrounds_origin(&self.vertices, n)? {
            return Err(Error::Extraction("circuit does not separate the origin".into()));
        }
        Ok(())
    }
}

/// Largest pairwise distance, over the convex hull.
pub fn euclidean_diameter(points: &[Site]) -> f64 {
    let hull = convex_hull(points);
    let mut best = 0i64;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let dx = (hull[i].x - hull[j].x) as i64;
            let dy = (hull[i].y - hull[j].y) as i64;
            best = best.max(dx * dx + dy * dy);
        }
    }
    (best as f64).sqrt()
}

fn cross(o: Site, a: Site, b: Site) -> i64 {
    (a.x - o.x) as i64 * (b.y - o.y) as i64 - (a.y - o.y) as i64 * (b.x - o.x) as i64
}

fn convex_hull(points: &[Site]) -> Vec<Site> {
    let mut p: Vec<Site> = points.to_vec();
    p.sort();
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<Site> = Vec::new();
    for &q in &p {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Site> = Vec::new();
    for &q in p.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Sites with hexagonal distance exactly `r` from the origin, the smallest
/// circuits around it.
pub fn hex_ring(r: u32) -> Vec<Site> {
    let r = r as i32;
    let mut out = Vec::new();
    let mut v = Site::new(r, 0);
    for (dx, dy) in [(-1, 1), (-1, 0), (0, -1), (1, -1), (1, 0), (0, 1)] {
        for _ in 0..r {
            out.push(v);
            v = v.offset((dx, dy));
        }
    }
    out
}

pub fn hex_distance(v: Site) -> u32 {
    v.x.unsigned_abs().max(v.y.unsigned_abs()).max((v.x + v.y).unsigned_abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{boundary_sites, LatticeBox};

    #[test]
    fn rings_are_circuits() {
        for r in 1..6 {
            let c = Circuit::new(boundary_sites(LatticeBox::new(r)), Status::Closed).unwrap();
            assert_eq!(c.len(), 8 * r as usize);
            let mut rev = boundary_sites(LatticeBox::new(r));
            rev.reverse();
            assert_eq!(Circuit::new(rev, Status::Closed).unwrap().vertices(), c.vertices());
            let h = Circuit::new(hex_ring(r), Status::Open).unwrap();
            assert_eq!(h.len(), 6 * r as usize);
            assert!(h.vertices().iter().all(|&v| hex_distance(v) == r));
        }
    }

    #[test]
    fn invalid_circuits_rejected() {
        let mut ring = boundary_sites(LatticeBox::new(2));
        ring.remove(3);
        assert!(Circuit::new(ring, Status::Open).is_err());
        let off = vec![Site::new(3, 3), Site::new(4, 3), Site::new(3, 4)];
        assert!(Circuit::new(off, Status::Open).is_err());
    }

    #[test]
    fn diameter_matches_pairwise_maximum() {
        for r in 1..5 {
            let ring = hex_ring(r);
            let brute = ring
                .iter()
                .flat_map(|a| ring.iter().map(move |b| a.dist(*b)))
                .fold(0.0, f64::max);
            assert_eq!(euclidean_diameter(&ring), brute);
        }
        assert_eq!(euclidean_diameter(&boundary_sites(LatticeBox::new(2))), 32f64.sqrt());
    }
}
