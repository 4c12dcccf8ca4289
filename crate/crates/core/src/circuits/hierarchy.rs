use serde::{Deserialize, Serialize};

use crate::circuits::trace::{inner_circuit, outer_circuit};
use crate::circuits::{Circuit, Status};
use crate::error::{Error, Result};
use crate::lattice::{boundary_sites, LatticeBox, PaddedGrid, Site};
use crate::weights::WeightField;

/// Nested disjoint closed circuits, innermost first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitHierarchy {
    pub circuits: Vec<Circuit>,
    pub radius: u32,
    pub seed: u64,
}

impl CircuitHierarchy {
    pub fn len(&self) -> usize {
        self.circuits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.circuits.is_empty()
    }

    /// First circuit with every vertex of `inner` strictly inside it.
    pub fn first_enclosing(&self, inner: &[Site]) -> Option<&Circuit> {
        self.circuits.iter().find(|c| inner.iter().all(|&v| c.encloses(v)))
    }
}

fn check_radius(field: &WeightField, n: u32) -> Result<()> {
    if n > field.radius() {
        return Err(Error::invalid(format!("n = {n} exceeds field radius {}", field.radius())));
    }
    Ok(())
}

fn padded_open(field: &WeightField, grid: &PaddedGrid) -> Vec<bool> {
    let mut open = vec![false; grid.len()];
    for v in LatticeBox::new(grid.radius).sites() {
        open[grid.index(v)] = field.is_open(v);
    }
    open
}

/// Maximal family of disjoint closed circuits surrounding the origin in
/// `B(n)`, peeled inside out.
///
/// Starting from the open cluster of the origin (the origin itself always
/// included), the exterior layer of the current set is traced into a
/// closed circuit, the circuit is added to the set and the set is grown
/// through open sites again, until it reaches `∂B(n)`.
pub fn max_disjoint_closed_circuits(field: &WeightField, n: u32) -> Result<(usize, Vec<Circuit>)> {
    check_radius(field, n)?;
    let grid = PaddedGrid::new(n);
    let open = padded_open(field, &grid);
    let ring: Vec<usize> = boundary_sites(LatticeBox::new(n)).into_iter().map(|v| grid.index(v)).collect();
    let mut set = vec![false; grid.len()];
    let mut stack = Vec::new();
    grid.flood(&open, [grid.index(Site::ORIGIN)], &mut set, &mut stack);
    let mut family = Vec::new();
    while !ring.iter().any(|&i| set[i]) {
        let verts = outer_circuit(&grid, &set, &mut stack)?;
        let seeds: Vec<usize> = verts.iter().map(|&v| grid.index(v)).collect();
        family.push(Circuit::new(verts, Status::Closed)?);
        grid.flood(&open, seeds, &mut set, &mut stack);
    }
    Ok((family.len(), family))
}

/// The sequence `C_1, C_2, ...` of closed circuits in `B(n)`: each is the
/// outermost closed circuit surrounding the origin strictly inside the
/// next, the last one is outermost in `B(n)`.
///
/// Computed outside in. With the origin counted as open, let `W` be the
/// open sites of the current domain connected to its frame; if the origin
/// is in `W` there are no more circuits. Otherwise the component of the
/// domain minus `W` containing the origin has an all-closed boundary
/// layer, traced into the next circuit, whose strict interior becomes the
/// new domain.
pub fn outermost_closed_sequence(field: &WeightField, n: u32) -> Result<CircuitHierarchy> {
    check_radius(field, n)?;
    let grid = PaddedGrid::new(n);
    let origin = grid.index(Site::ORIGIN);
    let mut open = padded_open(field, &grid);
    open[origin] = true;
    let mut domain = grid.box_mask();
    let mut stack = Vec::new();
    let mut circuits = Vec::new();
    loop {
        let pass: Vec<bool> = domain.iter().zip(&open).map(|(&d, &o)| d && o).collect();
        let seeds: Vec<usize> = (0..grid.len())
            .filter(|&i| pass[i] && (0..6).any(|k| !domain[grid.neighbor(i, k)]))
            .collect();
        let mut outer_open = vec![false; grid.len()];
        grid.flood(&pass, seeds, &mut outer_open, &mut stack);
        if outer_open[origin] {
            break;
        }
        let rest: Vec<bool> = domain.iter().zip(&outer_open).map(|(&d, &w)| d && !w).collect();
        let mut core = vec![false; grid.len()];
        grid.flood(&rest, [origin], &mut core, &mut stack);
        let verts = inner_circuit(&grid, &core, &mut stack)?;
        let mut on_circuit = vec![false; grid.len()];
        for &v in &verts {
            on_circuit[grid.index(v)] = true;
        }
        let c = Circuit::new(verts, Status::Closed)?;
        if c.vertices().iter().any(|&v| field.is_open(v)) {
            return Err(Error::Extraction(format!("traced layer is not closed (seed {})", field.seed())));
        }
        circuits.push(c);
        let inside: Vec<bool> = domain.iter().zip(&on_circuit).map(|(&d, &c)| d && !c).collect();
        let mut next = vec![false; grid.len()];
        grid.flood(&inside, [origin], &mut next, &mut stack);
        domain = next;
    }
    circuits.reverse();
    Ok(CircuitHierarchy { circuits, radius: n, seed: field.seed() })
}
