use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::circuits::{max_disjoint_closed_circuits, AnnulusChain, Circuit, CircuitHierarchy};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::weights::WeightField;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareCounts {
    /// Squares meeting two successive circuits, the inner of diameter at
    /// least `2^j`.
    pub two: usize,
    /// Squares meeting three successive circuits, the innermost of diameter
    /// at least `2^{j - (ln j)^2}`.
    pub three: usize,
}

/// Squares `[rL, (r+3)L] x [sL, (s+3)L]`, `L = 2^{c(j+1)}`, containing `v`.
fn squares_of(v: Site, side: f64, out: &mut HashSet<(i64, i64)>) {
    let rng = |x: i32| {
        let q = x as f64 / side;
        ((q - 3.0).ceil() as i64)..=(q.floor() as i64)
    };
    for r in rng(v.x) {
        for s in rng(v.y) {
            out.insert((r, s));
        }
    }
}

fn squares_of_circuit(c: &Circuit, side: f64) -> HashSet<(i64, i64)> {
    let mut s = HashSet::new();
    for &v in c.vertices() {
        squares_of(v, side, &mut s);
    }
    s
}

pub fn square_counts(hierarchy: &CircuitHierarchy, j: u32, c: f64) -> Result<SquareCounts> {
    square_counts_with(&hierarchy.circuits, j, c)
}

/// Square counts over an innermost-first list of nested circuits.
pub fn square_counts_with(circuits: &[Circuit], j: u32, c: f64) -> Result<SquareCounts> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::invalid(format!("c = {c} outside (0, 1)")));
    }
    if j == 0 {
        return Err(Error::invalid("j must be positive"));
    }
    if circuits.len() < 2 {
        return Ok(SquareCounts { two: 0, three: 0 });
    }
    let side = (c * (j + 1) as f64).exp2();
    let reach = (j as f64 + 1.0).exp2();
    let meets_box = |&(r, s): &(i64, i64)| {
        let ok = |a: i64| a as f64 * side <= reach && (a + 3) as f64 * side >= -reach;
        ok(r) && ok(s)
    };
    let sets: Vec<HashSet<(i64, i64)>> = circuits.iter().map(|ci| squares_of_circuit(ci, side)).collect();
    let big = (j as f64).exp2();
    let lj = (j as f64).ln();
    let medium = (j as f64 - lj * lj).exp2();
    let mut two = HashSet::new();
    let mut three = HashSet::new();
    for k in 0..circuits.len() - 1 {
        let d = circuits[k].diameter();
        if d >= big {
            two.extend(sets[k].intersection(&sets[k + 1]).filter(|q| meets_box(q)).copied());
        }
        if k + 2 < circuits.len() && d >= medium {
            three.extend(
                sets[k]
                    .intersection(&sets[k + 1])
                    .filter(|q| sets[k + 2].contains(q) && meets_box(q))
                    .copied(),
            );
        }
    }
    Ok(SquareCounts { two: two.len(), three: three.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityStatistic {
    pub d_min: f64,
    pub threshold: f64,
    pub occurs: bool,
}

/// Closest approach of `O_k` to the first hierarchy circuit enclosing it,
/// against `2 diam^{c1}`.
pub fn proximity_statistic(chain: &AnnulusChain, hierarchy: &CircuitHierarchy, k: u32, c1: f64) -> Result<ProximityStatistic> {
    let inner = chain.vertices(k as i64);
    let enclosing = hierarchy
        .first_enclosing(inner)
        .ok_or(Error::InsufficientField { k: k as i64, radius: hierarchy.radius })?;
    Ok(proximity_between(inner, enclosing, c1))
}

pub(crate) fn proximity_between(inner: &[Site], outer: &Circuit, c1: f64) -> ProximityStatistic {
    let d_min = inner
        .iter()
        .flat_map(|&v| outer.vertices().iter().map(move |&w| v.dist(w)))
        .fold(f64::INFINITY, f64::min);
    let threshold = 2.0 * outer.diameter().powf(c1);
    ProximityStatistic { d_min, threshold, occurs: d_min < threshold }
}

/// Circuits of the peeling family of `B(2^{m+1+margin})` that meet
/// `B(2^{m+1}) \ B(2^m)`: a lower bound for the maximal number of disjoint
/// closed circuits surrounding the origin that meet that annulus.
pub fn annulus_circuit_count(field: &WeightField, m: u32, margin: u32) -> Result<usize> {
    let n = 1u32 << (m + 1 + margin);
    if n > field.radius() {
        return Err(Error::InsufficientField { k: m as i64, radius: field.radius() });
    }
    let (_, fam) = max_disjoint_closed_circuits(field, n)?;
    let (lo, hi) = (1u32 << m, 1u32 << (m + 1));
    Ok(fam
        .iter()
        .filter(|c| c.vertices().iter().any(|v| v.linf() > lo && v.linf() <= hi))
        .count())
}
