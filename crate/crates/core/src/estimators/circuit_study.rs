use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::oracle::check_hierarchy;
use crate::circuits::{
    annulus_chain, annulus_circuit_count, grow_field, innermost_open_circuit, max_disjoint_closed_circuits,
    outermost_closed_sequence, proximity_statistic, square_counts_with, Circuit,
};
use crate::error::{Error, Result};
use crate::estimators::report::{Check, EstimatorReport, ScaleRecord};
use crate::estimators::stats;
use crate::rng::derive_seed;
use crate::weights::{sample_field, DistributionSpec, SiteLaw, WeightField, FIELD_STREAM};

/// Outermost sequence, peeling family and oracle verdict on one field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HierarchySample {
    pub index: u64,
    pub seed: u64,
    pub n: u32,
    pub hierarchy: u64,
    pub peeling: u64,
    /// `None` when every oracle check passed.
    pub oracle_failure: Option<String>,
    pub diameters: Vec<f64>,
}

pub fn hierarchy_sample(spec: &DistributionSpec, n: u32, master: u64, index: u64) -> Result<HierarchySample> {
    let seed = derive_seed(master, index);
    let field = sample_field(spec, n, seed)?;
    let h = outermost_closed_sequence(&field, n)?;
    let (peeling, _) = max_disjoint_closed_circuits(&field, n)?;
    let oracle_failure = check_hierarchy(&field, &h).err().map(|e| e.to_string());
    Ok(HierarchySample {
        index,
        seed,
        n,
        hierarchy: h.len() as u64,
        peeling: peeling as u64,
        oracle_failure,
        diameters: h.circuits.iter().map(Circuit::diameter).collect(),
    })
}

pub fn hierarchy_samples(spec: &DistributionSpec, n: u32, samples: u64, master: u64) -> Result<Vec<HierarchySample>> {
    (0..samples).into_par_iter().map(|i| hierarchy_sample(spec, n, master, i)).collect()
}

pub fn hierarchy_report(samples: &[HierarchySample]) -> EstimatorReport {
    let mut r = EstimatorReport::new("circuits", "outermost closed sequence size");
    let mut scales: Vec<u32> = samples.iter().map(|s| s.n).collect();
    scales.sort_unstable();
    scales.dedup();
    for n in &scales {
        let xs: Vec<f64> = samples.iter().filter(|s| s.n == *n).map(|s| s.hierarchy as f64).collect();
        r.scales.push(ScaleRecord::from_values(*n as f64, &xs));
    }
    let failures: Vec<&HierarchySample> = samples.iter().filter(|s| s.oracle_failure.is_some()).collect();
    for s in failures.iter().take(5) {
        r.flags.push(format!("sample {} (seed {}): {}", s.index, s.seed, s.oracle_failure.as_ref().unwrap()));
    }
    r.push(Check::holds("every hierarchy passes the oracle", failures.is_empty()));
    r.push(Check::holds("hierarchy size = peeling count", samples.iter().all(|s| s.hierarchy == s.peeling)));
    r.push(Check::holds(
        "diameters strictly increasing",
        samples.iter().all(|s| s.diameters.windows(2).all(|w| w[0] < w[1])),
    ));
    // ln(diam C_k) / k over k >= 2, reported only
    let growth: Vec<f64> = samples
        .iter()
        .flat_map(|s| s.diameters.iter().enumerate().skip(1).map(|(i, d)| d.ln() / (i + 1) as f64))
        .collect();
    if !growth.is_empty() {
        let lo = growth.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = growth.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        r.flags.push(format!("ln(diam C_k)/k over k >= 2 lies in [{lo:.4}, {hi:.4}]"));
    }
    r
}

/// Square counts of one field, using the hierarchy of `B(2^{j+1+margin})`
/// restricted to circuits of diameter below half the box radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareSample {
    pub index: u64,
    pub two: u64,
    pub three: u64,
}

pub fn square_count_sample(spec: &DistributionSpec, j: u32, c: f64, margin: u32, master: u64, index: u64) -> Result<SquareSample> {
    let n = 1u32 << (j + 1 + margin);
    let field = sample_field(spec, n, derive_seed(master, index))?;
    let h = outermost_closed_sequence(&field, n)?;
    let kept: Vec<Circuit> = h.circuits.into_iter().filter(|c| c.diameter() < n as f64 / 2.0).collect();
    let sc = square_counts_with(&kept, j, c)?;
    Ok(SquareSample { index, two: sc.two as u64, three: sc.three as u64 })
}

pub fn square_count_samples(spec: &DistributionSpec, j: u32, c: f64, margin: u32, samples: u64, master: u64) -> Result<Vec<SquareSample>> {
    (0..samples).into_par_iter().map(|i| square_count_sample(spec, j, c, margin, master, i)).collect()
}

/// Empirical tail `P(N_m >= K)` of the peeling proxy, `K = 0, 1, ...` while
/// positive.
pub fn annulus_count_tail(spec: &DistributionSpec, m: u32, margin: u32, samples: u64, master: u64) -> Result<Vec<(u64, f64)>> {
    let n = 1u32 << (m + 1 + margin);
    let counts: Vec<usize> = (0..samples)
        .into_par_iter()
        .map(|i| annulus_circuit_count(&sample_field(spec, n, derive_seed(master, i))?, m, margin))
        .collect::<Result<_>>()?;
    let mut tail = Vec::new();
    for k in 0.. {
        let p = counts.iter().filter(|&&c| c >= k).count() as f64 / samples as f64;
        if p == 0.0 {
            break;
        }
        tail.push((k as u64, p));
    }
    Ok(tail)
}

/// `P(A(k) holds an open circuit around the origin)`, i.e. `P(m(k) = k)`,
/// per level.
pub fn open_circuit_probability(
    spec: &DistributionSpec,
    law: &SiteLaw,
    levels: &[u32],
    samples: u64,
    master: u64,
) -> Result<EstimatorReport> {
    let top = *levels.iter().max().ok_or_else(|| Error::invalid("no levels"))?;
    let hits: Vec<Vec<bool>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let f = WeightField::sample_with(spec, 2 << top, derive_seed(master, i), FIELD_STREAM, law)?;
            levels.iter().map(|&k| Ok(innermost_open_circuit(&f, k)?.is_some())).collect()
        })
        .collect::<Result<_>>()?;
    let mut r = EstimatorReport::new("open_circuit_probability", "1{A(k) holds an open circuit}");
    for (j, &k) in levels.iter().enumerate() {
        let xs: Vec<f64> = hits.iter().map(|h| h[j] as u8 as f64).collect();
        r.scales.push(ScaleRecord::from_values(k as f64, &xs));
    }
    Ok(r)
}

/// Occurrence of the proximity event `F_k` per level, on fields grown until
/// the annulus chain fits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximitySample {
    pub index: u64,
    pub radius: u32,
    pub occurs: Vec<bool>,
    pub d_min: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn proximity_sample(
    spec: &DistributionSpec,
    law: &SiteLaw,
    levels: &[u32],
    c1: f64,
    max_radius: u32,
    master: u64,
    index: u64,
) -> Result<ProximitySample> {
    let top = *levels.iter().max().ok_or_else(|| Error::invalid("no levels"))?;
    let seed = derive_seed(master, index);
    // the enclosing closed circuits may lie beyond the chain, so grow for both
    let ((occurs, d_min), field) = grow_field(spec, law, seed, FIELD_STREAM, 4 << top, max_radius, |field| {
        let chain = annulus_chain(field, top)?;
        let h = outermost_closed_sequence(field, field.radius())?;
        let mut occurs = Vec::new();
        let mut d_min = Vec::new();
        for &k in levels {
            let p = proximity_statistic(&chain, &h, k, c1)?;
            occurs.push(p.occurs);
            d_min.push(p.d_min);
        }
        Ok((occurs, d_min))
    })?;
    Ok(ProximitySample { index, radius: field.radius(), occurs, d_min })
}

pub fn proximity_report(levels: &[u32], samples: &[ProximitySample]) -> EstimatorReport {
    let mut r = EstimatorReport::new("proximity", "1{F_k}");
    for (j, &k) in levels.iter().enumerate() {
        let xs: Vec<f64> = samples.iter().map(|s| s.occurs[j] as u8 as f64).collect();
        r.scales.push(ScaleRecord::from_values(k as f64, &xs));
    }
    let decreasing = r.scales.windows(2).all(|w| w[1].mean <= w[0].mean);
    r.push(Check::holds("P(F_k) nonincreasing in k", decreasing));
    r
}

pub fn tail_fit(tail: &[(u64, f64)]) -> Option<(f64, f64)> {
    if tail.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = tail.iter().map(|t| t.0 as f64).collect();
    let ys: Vec<f64> = tail.iter().map(|t| t.1.ln()).collect();
    Some((stats::least_squares(&xs, &ys).slope, stats::correlation(&xs, &ys)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hierarchy_report_on_small_boxes() {
        let spec = DistributionSpec::bernoulli(1.0).unwrap();
        let s = hierarchy_samples(&spec, 8, 30, 5).unwrap();
        let r = hierarchy_report(&s);
        assert!(r.pass, "{:?}", r.flags);
    }

    #[test]
    fn planted_rings_make_circuits_likely() {
        let spec = DistributionSpec::bernoulli(1.0).unwrap();
        let law = SiteLaw::PlantedRings { defect: 0.2 };
        let r = open_circuit_probability(&spec, &law, &[1, 2, 3], 200, 1).unwrap();
        for s in &r.scales {
            assert!(s.mean > 0.6, "level {} p {}", s.scale, s.mean);
        }
    }

    #[test]
    fn proximity_under_planted_law() {
        let spec = DistributionSpec::bernoulli(1.0).unwrap();
        let law = SiteLaw::PlantedRings { defect: 0.2 };
        let mut ok = 0;
        for i in 0..20 {
            match proximity_sample(&spec, &law, &[1, 2], 0.5, 256, 3, i) {
                Ok(p) => {
                    assert_eq!(p.occurs.len(), 2);
                    assert!(p.d_min.iter().all(|d| *d >= 1.0));
                    ok += 1;
                }
                Err(Error::InsufficientField { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!(ok >= 15, "{ok}");
    }
}
