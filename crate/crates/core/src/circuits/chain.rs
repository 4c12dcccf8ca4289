use std::sync::Arc;

use crate::circuits::trace::outer_circuit;
use crate::circuits::{Circuit, Status};
use crate::error::{Error, Result};
use crate::lattice::{boundary_sites, LatticeBox, PaddedGrid, Site};
use crate::weights::{DistributionSpec, SiteLaw, WeightField};

/// Innermost open circuit surrounding the origin inside the annulus
/// `A(r) = B(2^{r+1}) \ B(2^r)`, or `None` when a closed path crosses it.
///
/// The closed sites reachable from `B(2^r)` inside `B(2^{r+1})` are
/// flooded; if the flood is trapped, its exterior layer is all open, lies in
/// `A(r)` and is traced into the circuit.
pub fn innermost_open_circuit(field: &WeightField, r: u32) -> Result<Option<Circuit>> {
    let outer_r = 1u32
        .checked_shl(r + 1)
        .ok_or_else(|| Error::invalid(format!("annulus level {r} too large")))?;
    if outer_r > field.radius() {
        return Err(Error::InsufficientField { k: r as i64, radius: field.radius() });
    }
    let inner_r = outer_r / 2;
    let grid = PaddedGrid::new(outer_r);
    let mut closed = vec![false; grid.len()];
    for v in LatticeBox::new(outer_r).sites() {
        closed[grid.index(v)] = !field.is_open(v);
    }
    let seeds: Vec<usize> = LatticeBox::new(inner_r).sites().map(|v| grid.index(v)).collect();
    let mut flooded = vec![false; grid.len()];
    let mut stack = Vec::new();
    grid.flood(&closed, seeds, &mut flooded, &mut stack);
    if boundary_sites(LatticeBox::new(outer_r)).iter().any(|&v| flooded[grid.index(v)]) {
        return Ok(None);
    }
    let verts = outer_circuit(&grid, &flooded, &mut stack)?;
    Ok(Some(Circuit::new(verts, Status::Open)?))
}

#[derive(Clone, Debug)]
pub struct ChainLink {
    pub k: u32,
    /// `m(k)`: the first level `r >= k` whose annulus holds an open circuit.
    pub m: u32,
    /// `O_k`, shared between consecutive `k` with the same `m(k)`.
    pub circuit: Arc<Circuit>,
}

#[derive(Clone, Debug)]
pub struct AnnulusChain {
    pub links: Vec<ChainLink>,
    pub radius: u32,
}

impl AnnulusChain {
    pub fn k_max(&self) -> u32 {
        self.links.len() as u32 - 1
    }

    pub fn m(&self, k: u32) -> u32 {
        self.links[k as usize].m
    }

    /// `m(k)` with `m(-1) = -1`.
    pub fn m_signed(&self, k: i64) -> i64 {
        if k < 0 {
            -1
        } else {
            self.links[k as usize].m as i64
        }
    }

    pub fn circuit(&self, k: u32) -> &Arc<Circuit> {
        &self.links[k as usize].circuit
    }

    /// Vertex set of `O_k`, with `O_{-1} = {0}`.
    pub fn vertices(&self, k: i64) -> &[Site] {
        const ORIGIN: [Site; 1] = [Site::ORIGIN];
        if k < 0 {
            &ORIGIN
        } else {
            self.links[k as usize].circuit.vertices()
        }
    }

    /// Whether `O_{k-1}` and `O_k` are the same circuit.
    pub fn repeats(&self, k: u32) -> bool {
        k > 0 && Arc::ptr_eq(&self.links[k as usize - 1].circuit, &self.links[k as usize].circuit)
    }
}

/// `m(k)` and `O_k` for `k = 0..=k_max`, scanning annuli outward.
pub fn annulus_chain(field: &WeightField, k_max: u32) -> Result<AnnulusChain> {
    annulus_chain_from(field, 0, k_max)
}

/// Same as [`annulus_chain`] for `k = k_min..=k_max`; `links[i]` holds
/// `k_min + i`.
pub(crate) fn annulus_chain_from(field: &WeightField, k_min: u32, k_max: u32) -> Result<AnnulusChain> {
    let mut links: Vec<ChainLink> = Vec::new();
    let mut found: Option<(u32, Arc<Circuit>)> = None;
    for k in k_min..=k_max {
        if let Some((m, c)) = &found {
            if *m >= k {
                links.push(ChainLink { k, m: *m, circuit: Arc::clone(c) });
                continue;
            }
        }
        let mut r = k;
        let (m, c) = loop {
            if (1u64 << (r + 1)) > field.radius() as u64 {
                return Err(Error::InsufficientField { k: k as i64, radius: field.radius() });
            }
            if let Some(c) = innermost_open_circuit(field, r)? {
                break (r, Arc::new(c));
            }
            r += 1;
        };
        links.push(ChainLink { k, m, circuit: Arc::clone(&c) });
        found = Some((m, c));
    }
    Ok(AnnulusChain { links, radius: field.radius() })
}

/// Sample a field large enough for the chain up to `k_max`, doubling the
/// radius from `start` while the chain runs off the field, up to `cap`.
/// Because uniforms are tied to coordinates, enlarging never changes the
/// sites already sampled.
pub fn annulus_chain_growing(
    spec: &DistributionSpec,
    law: &SiteLaw,
    seed: u64,
    stream: u64,
    k_max: u32,
    start: u32,
    cap: u32,
) -> Result<(AnnulusChain, WeightField)> {
    grow_field(spec, law, seed, stream, start.max(2 << k_max), cap, |f| annulus_chain(f, k_max))
}

/// Run `f` on fields of radius `start, 2 start, ...` (at most `cap`) until
/// it stops reporting an insufficient field.
pub(crate) fn grow_field<T>(
    spec: &DistributionSpec,
    law: &SiteLaw,
    seed: u64,
    stream: u64,
    start: u32,
    cap: u32,
    f: impl Fn(&WeightField) -> Result<T>,
) -> Result<(T, WeightField)> {
    let mut radius = start.min(cap).max(1);
    loop {
        let field = WeightField::sample_with(spec, radius, seed, stream, law)?;
        match f(&field) {
            Ok(v) => return Ok((v, field)),
            Err(Error::InsufficientField { .. }) if radius < cap => radius = (radius * 2).min(cap),
            Err(e) => return Err(e),
        }
    }
}

/// `m(level)` and `O_level` alone.
pub(crate) fn circuit_at_level(field: &WeightField, level: u32) -> Result<(u32, Arc<Circuit>)> {
    let c = annulus_chain_from(field, level, level)?;
    let l = &c.links[0];
    Ok((l.m, Arc::clone(&l.circuit)))
}
