//! Low-weight vertices.
//!
//! With an atom at `I > 0` a vertex is `j`-low-weight iff `t_v = I`.
//! Otherwise it is `j`-low-weight iff `I < t_v <= I + a_j`, where `(a_j)` is
//! nonincreasing with `P(I < t <= I + a_j) >= 2^(-c2 j / 2 - 1)`.
//!
//! The table starts at `j = 1`: at `j = 0` the required mass is 1/2, which
//! unbounded families never reach with a finite `a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::weights::{DistributionSpec, WeightField};

pub const GRID_POINTS: usize = 2048;
pub const GRID_OCTAVES: f64 = 40.0;
pub const FIRST_J: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowWeightParams {
    pub c2: f64,
    pub atom_case: bool,
    /// `table[j - 1] = a_j` for `j = 1..=j_max`.
    pub table: Vec<f64>,
}

impl LowWeightParams {
    pub fn j_max(&self) -> u32 {
        self.table.len() as u32
    }

    /// `a_j`; `None` outside the table.
    pub fn a(&self, j: u32) -> Option<f64> {
        if j < FIRST_J {
            return None;
        }
        self.table.get((j - FIRST_J) as usize).copied()
    }
}

/// The mass each `a_j` must carry.
pub fn required_mass(c2: f64, j: u32) -> f64 {
    (-c2 * j as f64 / 2.0 - 1.0).exp2()
}

/// Geometric search grid from `2^-40 W` to `W`, with `W` the support width
/// above `I` (a far quantile for unbounded families).
pub fn search_grid(spec: &DistributionSpec) -> Vec<f64> {
    let width = spec.support_scale() - spec.infimum();
    (0..GRID_POINTS)
        .map(|i| width * (-GRID_OCTAVES + GRID_OCTAVES * i as f64 / (GRID_POINTS - 1) as f64).exp2())
        .collect()
}

pub fn low_weight_threshold(spec: &DistributionSpec, c2: f64, j_max: u32) -> Result<LowWeightParams> {
    if !(c2 > 0.0 && c2 < 1.0) {
        return Err(Error::invalid(format!("c2 = {c2} outside (0, 1)")));
    }
    let count = j_max.saturating_sub(FIRST_J - 1) as usize;
    if spec.has_atom_at_infimum() && spec.infimum() > 0.0 {
        return Ok(LowWeightParams { c2, atom_case: true, table: vec![0.0; count] });
    }
    let grid = search_grid(spec);
    let masses: Vec<f64> = grid.iter().map(|&a| spec.mass_above_infimum(a)).collect();
    let mut table = Vec::with_capacity(count);
    for j in FIRST_J..=j_max {
        let need = required_mass(c2, j);
        // masses are nondecreasing along the grid
        let pos = masses.partition_point(|&m| m < need);
        if pos == grid.len() {
            return Err(Error::Unsatisfiable { j });
        }
        table.push(grid[pos]);
    }
    for k in (0..table.len().saturating_sub(1)).rev() {
        table[k] = table[k].max(table[k + 1]);
    }
    for (k, &a) in table.iter().enumerate() {
        let j = FIRST_J + k as u32;
        if spec.mass_above_infimum(a) < required_mass(c2, j) {
            return Err(Error::Unsatisfiable { j });
        }
    }
    Ok(LowWeightParams { c2, atom_case: false, table })
}

pub fn classify_low_weight(field: &WeightField, v: Site, j: u32, params: &LowWeightParams) -> Result<bool> {
    if !field.bounds().contains(v) {
        return Err(Error::invalid(format!("{v:?} outside the field")));
    }
    let t = field.weight(v);
    let i = field.infimum();
    if params.atom_case {
        return Ok(t == i);
    }
    let a = params
        .a(j)
        .ok_or_else(|| Error::invalid(format!("j = {j} outside the threshold table")))?;
    Ok(i < t && t <= i + a)
}
