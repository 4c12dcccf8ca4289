//! Martingale decomposition of `T(0, O_n)` over the annulus chain, and the
//! nested versus single-field second moment of the coupling gap between
//! circuits.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{annulus_chain_growing, circuit_at_level, grow_field, AnnulusChain, Circuit};
use crate::error::{Error, Result};
use crate::estimators::report::{Check, EstimatorReport, ScaleRecord};
use crate::estimators::stats;
use crate::lattice::Site;
use crate::passage::{first_passage, times_to};
use crate::rng::derive_seed;
use crate::weights::{DistributionSpec, SiteLaw, WeightField, WeightKind, FIELD_STREAM};

/// Largest field radius the chain may grow to by default.
pub const DEFAULT_MAX_RADIUS: u32 = 1024;

const MARTINGALE_TAG: u64 = 1 << 62;
const Y_TILDE_TAG: u64 = 2 << 62;

/// Stream of inner sample `j` for level `k`; never the primary stream.
fn inner_stream(tag: u64, k: u32, j: u64) -> u64 {
    tag | ((k as u64) << 40) | j
}

/// How fields are drawn for the chain-based studies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainOptions {
    pub law: SiteLaw,
    pub max_radius: u32,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions { law: SiteLaw::Iid, max_radius: DEFAULT_MAX_RADIUS }
    }
}

/// Per outer sample: the inner-averaged martingale differences for
/// `k = 0..=n`, with general and Bernoulli weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleSample {
    pub index: u64,
    pub seed: u64,
    pub radius: u32,
    pub m: Vec<u32>,
    pub delta: Vec<f64>,
    pub delta_bernoulli: Vec<f64>,
    /// Variance of the inner average, `s^2 / inner`, subtracted from
    /// `delta^2` to debias the second moment.
    pub inner_var: Vec<f64>,
    pub inner_var_bernoulli: Vec<f64>,
    /// `T(0, O_n)` and `T^B(0, O_n)`.
    pub total: f64,
    pub total_bernoulli: f64,
}

fn min_over(field: &WeightField, dist: &[f64], set: &[Site]) -> f64 {
    let b = field.bounds();
    set.iter().map(|&v| dist[b.index(v)]).fold(f64::INFINITY, f64::min)
}

fn passage(field: &WeightField, kind: WeightKind, a: &[Site], b: &[Site]) -> Result<f64> {
    Ok(first_passage(field, kind, a, b, false)?.time)
}

/// Inner-sample terms `T(O_k, O_n(w'))(w')` and `T(O_{k-1}, O_n(w'))(w')`
/// for one fresh field `w'`; zero for a set that is not given.
struct InnerDraw {
    x: [f64; 2],
    y: [f64; 2],
}

fn inner_draw(
    spec: &DistributionSpec,
    opts: &ChainOptions,
    seed: u64,
    stream: u64,
    n: u32,
    inner: Option<&[Site]>,
    outer: Option<&[Site]>,
) -> Result<InnerDraw> {
    let ((_, target), field) =
        grow_field(spec, &opts.law, seed, stream, 2 << n, opts.max_radius, |f| circuit_at_level(f, n))?;
    let mut x = [0.0; 2];
    let mut y = [0.0; 2];
    for (i, kind) in [WeightKind::General, WeightKind::Bernoulli].into_iter().enumerate() {
        let d = times_to(&field, kind, target.vertices())?;
        x[i] = outer.map_or(0.0, |o| min_over(&field, &d, o));
        y[i] = inner.map_or(0.0, |o| min_over(&field, &d, o));
    }
    Ok(InnerDraw { x, y })
}

pub fn martingale_sample(
    spec: &DistributionSpec,
    n: u32,
    inner: u64,
    opts: &ChainOptions,
    master: u64,
    index: u64,
) -> Result<MartingaleSample> {
    if inner < 2 {
        return Err(Error::invalid("at least two inner samples are needed"));
    }
    let seed = derive_seed(master, index);
    let (chain, field) = annulus_chain_growing(spec, &opts.law, seed, FIELD_STREAM, n, 8 << n, opts.max_radius)?;
    let o_n = chain.vertices(n as i64);
    let total = passage(&field, WeightKind::General, &[Site::ORIGIN], o_n)?;
    let total_bernoulli = passage(&field, WeightKind::Bernoulli, &[Site::ORIGIN], o_n)?;
    let mut out = MartingaleSample {
        index,
        seed,
        radius: field.radius(),
        m: (0..=n).map(|k| chain.m(k)).collect(),
        delta: Vec::new(),
        delta_bernoulli: Vec::new(),
        inner_var: Vec::new(),
        inner_var_bernoulli: Vec::new(),
        total,
        total_bernoulli,
    };
    for k in 0..=n {
        if chain.repeats(k) {
            out.delta.push(0.0);
            out.delta_bernoulli.push(0.0);
            out.inner_var.push(0.0);
            out.inner_var_bernoulli.push(0.0);
            continue;
        }
        let prev = chain.vertices(k as i64 - 1);
        let cur = chain.vertices(k as i64);
        let step = [
            passage(&field, WeightKind::General, prev, cur)?,
            passage(&field, WeightKind::Bernoulli, prev, cur)?,
        ];
        let use_x = chain.m(k) < n;
        let use_y = chain.m_signed(k as i64 - 1) < n as i64;
        let mut d: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        if use_x || use_y {
            for j in 0..inner {
                let draw = inner_draw(spec, opts, seed, inner_stream(MARTINGALE_TAG, k, j), n, use_y.then_some(prev), use_x.then_some(cur))?;
                for i in 0..2 {
                    d[i].push(draw.x[i] - draw.y[i]);
                }
            }
        }
        let avg = |v: &Vec<f64>| if v.is_empty() { 0.0 } else { stats::mean(v) };
        let var = |v: &Vec<f64>| if v.is_empty() { 0.0 } else { stats::variance(v) / v.len() as f64 };
        out.delta.push(step[0] + avg(&d[0]));
        out.delta_bernoulli.push(step[1] + avg(&d[1]));
        out.inner_var.push(var(&d[0]));
        out.inner_var_bernoulli.push(var(&d[1]));
    }
    Ok(out)
}

pub fn martingale_samples(
    spec: &DistributionSpec,
    n: u32,
    outer: u64,
    inner: u64,
    opts: &ChainOptions,
    master: u64,
) -> Result<Vec<MartingaleSample>> {
    (0..outer).into_par_iter().map(|i| martingale_sample(spec, n, inner, opts, master, i)).collect()
}

/// Moments of the inner-averaged differences across outer samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MartingaleEstimate {
    pub outer_samples: u64,
    pub inner_samples: u64,
    /// `delta[k][i]`: the estimate of `Delta_k` on outer sample `i`.
    pub delta: Vec<Vec<f64>>,
    /// Debiased `E Delta_k^2`.
    pub second: Vec<f64>,
    pub second_se: Vec<f64>,
    /// `E Delta_k^4`, not debiased.
    pub fourth: Vec<f64>,
    /// `(j, k, E Delta_j Delta_k, SE)` for `j < k`.
    pub cross: Vec<(u32, u32, f64, f64)>,
    pub sum_second: f64,
    pub total_variance: f64,
    /// Standard error of `sum_second - total_variance`.
    pub difference_se: f64,
}

fn estimate(samples: &[MartingaleSample], inner: u64, bernoulli: bool) -> MartingaleEstimate {
    fn pick_of(s: &MartingaleSample, bernoulli: bool) -> (&Vec<f64>, &Vec<f64>, f64) {
        if bernoulli { (&s.delta_bernoulli, &s.inner_var_bernoulli, s.total_bernoulli) } else { (&s.delta, &s.inner_var, s.total) }
    }
    let levels = samples.first().map(|s| s.delta.len()).unwrap_or(0);
    let count = samples.len();
    let delta: Vec<Vec<f64>> = (0..levels).map(|k| samples.iter().map(|s| pick_of(s, bernoulli).0[k]).collect()).collect();
    let debiased: Vec<Vec<f64>> = (0..levels)
        .map(|k| samples.iter().map(|s| pick_of(s, bernoulli).0[k].powi(2) - pick_of(s, bernoulli).1[k]).collect())
        .collect();
    let second: Vec<f64> = debiased.iter().map(|v| stats::mean(v)).collect();
    let second_se: Vec<f64> = debiased.iter().map(|v| stats::std_error(v)).collect();
    let fourth: Vec<f64> = delta.iter().map(|v| stats::mean(&v.iter().map(|x| x.powi(4)).collect::<Vec<_>>())).collect();
    let mut cross = Vec::new();
    for j in 0..levels {
        for k in j + 1..levels {
            let p: Vec<f64> = delta[j].iter().zip(&delta[k]).map(|(a, b)| a * b).collect();
            cross.push((j as u32, k as u32, stats::mean(&p), stats::std_error(&p)));
        }
    }
    let totals: Vec<f64> = samples.iter().map(|s| pick_of(s, bernoulli).2).collect();
    let tbar = stats::mean(&totals);
    let scale = count as f64 / (count as f64 - 1.0);
    let z: Vec<f64> = (0..count)
        .map(|i| {
            let s: f64 = (0..levels).map(|k| debiased[k][i]).sum();
            s - (totals[i] - tbar).powi(2) * scale
        })
        .collect();
    MartingaleEstimate {
        outer_samples: count as u64,
        inner_samples: inner,
        delta,
        sum_second: second.iter().sum(),
        second,
        second_se,
        fourth,
        cross,
        total_variance: stats::variance(&totals),
        difference_se: stats::std_error(&z),
    }
}

pub fn martingale_estimate(samples: &[MartingaleSample], inner: u64) -> (MartingaleEstimate, MartingaleEstimate) {
    (estimate(samples, inner, false), estimate(samples, inner, true))
}

/// Identity `Var T(0, O_n) = sum_k E Delta_k^2` and vanishing cross moments,
/// both judged within `sigmas` standard errors.
pub fn martingale_report(samples: &[MartingaleSample], inner: u64, sigmas: f64) -> Result<(MartingaleEstimate, EstimatorReport)> {
    if samples.len() < 2 {
        return Err(Error::invalid("at least two outer samples are needed"));
    }
    let (g, b) = martingale_estimate(samples, inner);
    let mut r = EstimatorReport::new("martingale", "Delta_k (inner-averaged)");
    for (k, v) in g.delta.iter().enumerate() {
        r.scales.push(ScaleRecord::from_values(k as f64, v));
    }
    for (label, e) in [("", &g), ("Bernoulli ", &b)] {
        r.push(Check::within(
            &format!("{label}sum E Delta_k^2 vs Var T(0, O_n)"),
            e.sum_second,
            e.total_variance,
            sigmas * e.difference_se,
        ));
        let worst = e
            .cross
            .iter()
            .map(|c| if c.3 > 0.0 { c.2.abs() / c.3 } else if c.2 == 0.0 { 0.0 } else { f64::INFINITY })
            .fold(0.0, f64::max);
        r.push(Check::within(&format!("{label}max |E Delta_j Delta_k| / SE"), worst, 0.0, sigmas));
    }
    for (k, f) in g.fourth.iter().enumerate() {
        r.flags.push(format!("k = {k}: E Delta^2 = {:.6} (se {:.6}), E Delta^4 = {f:.6}", g.second[k], g.second_se[k]));
    }
    Ok((g, r))
}

/// Spread of fourth moments over the given levels: `max / min`.
pub fn fourth_moment_ratio(e: &MartingaleEstimate, levels: &[u32]) -> f64 {
    let v: Vec<f64> = levels.iter().map(|&k| e.fourth[k as usize]).collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// One outer sample of the gap second moments at level `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YTildeSample {
    pub index: u64,
    pub seed: u64,
    /// Inner mean of `Y^2` over fresh fields.
    pub nested: f64,
    /// `Y~` on the outer field alone.
    pub single: f64,
    /// Smallest of `Y~` and the inner `Y`.
    pub min_y: f64,
}

/// `m(k)` and `O_k` of `w`, then `O_l` with `l = m(m(k) + 1)` in the same
/// field.
fn chain_pair(field: &WeightField, k: u32) -> Result<((u32, Arc<Circuit>), Arc<Circuit>)> {
    let (m, ok) = circuit_at_level(field, k)?;
    let (_, ol) = circuit_at_level(field, m + 1)?;
    Ok(((m, ok), ol))
}

fn gap(field: &WeightField, a: &[Site], b: &[Site]) -> Result<f64> {
    Ok(passage(field, WeightKind::General, a, b)? - passage(field, WeightKind::Bernoulli, a, b)?)
}

pub fn y_tilde_sample(
    spec: &DistributionSpec,
    k: u32,
    inner: u64,
    opts: &ChainOptions,
    master: u64,
    index: u64,
) -> Result<YTildeSample> {
    let seed = derive_seed(master, index);
    let (((m, ok), ol), field) =
        grow_field(spec, &opts.law, seed, FIELD_STREAM, 4 << k, opts.max_radius, |f| chain_pair(f, k))?;
    let single = gap(&field, ok.vertices(), ol.vertices())?;
    let mut ys = Vec::new();
    for j in 0..inner {
        let stream = inner_stream(Y_TILDE_TAG, k, j);
        let ((_, target), f2) =
            grow_field(spec, &opts.law, seed, stream, 2 << (m + 1), opts.max_radius, |f| circuit_at_level(f, m + 1))?;
        ys.push(gap(&f2, ok.vertices(), target.vertices())?);
    }
    Ok(YTildeSample {
        index,
        seed,
        nested: stats::mean(&ys.iter().map(|y| y * y).collect::<Vec<_>>()),
        single: single * single,
        min_y: ys.iter().copied().fold(single, f64::min),
    })
}

pub fn y_tilde_samples(
    spec: &DistributionSpec,
    k: u32,
    outer: u64,
    inner: u64,
    opts: &ChainOptions,
    master: u64,
) -> Result<Vec<YTildeSample>> {
    (0..outer).into_par_iter().map(|i| y_tilde_sample(spec, k, inner, opts, master, i)).collect()
}

/// Nested `E E' Y^2` against single-field `E Y~^2`.
pub fn y_tilde_report(k: u32, samples: &[YTildeSample], sigmas: f64) -> EstimatorReport {
    let mut r = EstimatorReport::new("y_tilde", "E E' Y^2 (nested) and E Y~^2 (single field)");
    let a: Vec<f64> = samples.iter().map(|s| s.nested).collect();
    let b: Vec<f64> = samples.iter().map(|s| s.single).collect();
    r.scales.push(ScaleRecord::from_values(k as f64, &a));
    r.scales.push(ScaleRecord::from_values(k as f64, &b));
    let z: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    let se = stats::std_error(&z);
    let diff = stats::mean(&z);
    r.flags.push(format!("difference {diff:.6}, se {se:.6}, z = {:.3}", if se > 0.0 { diff / se } else { 0.0 }));
    r.push(Check::within("nested vs single-field second moment", stats::mean(&a), stats::mean(&b), sigmas * se));
    r.push(Check::holds("Y >= 0 and Y~ >= 0 on every draw", samples.iter().all(|s| s.min_y >= 0.0)));
    r
}

/// The chain used by a martingale sample, for inspection.
pub fn outer_chain(spec: &DistributionSpec, n: u32, opts: &ChainOptions, master: u64, index: u64) -> Result<(AnnulusChain, WeightField)> {
    annulus_chain_growing(spec, &opts.law, derive_seed(master, index), FIELD_STREAM, n, 8 << n, opts.max_radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planted() -> ChainOptions {
        ChainOptions { law: SiteLaw::PlantedRings { defect: 0.3 }, max_radius: 512 }
    }

    #[test]
    fn bernoulli_gap_vanishes() {
        let spec = DistributionSpec::bernoulli(1.0).unwrap();
        let s = y_tilde_samples(&spec, 1, 6, 3, &planted(), 2).unwrap();
        assert!(s.iter().all(|x| x.nested == 0.0 && x.single == 0.0));
        let m = martingale_samples(&spec, 2, 5, 3, &planted(), 2).unwrap();
        for x in &m {
            assert_eq!(x.delta, x.delta_bernoulli);
        }
    }

    #[test]
    fn differences_telescope_up_to_inner_noise() {
        // sum_k Delta_k = T(0, O_n) - E T(0, O_n); with many inner draws the
        // spread of sum - T is the inner noise only
        let spec = DistributionSpec::uniform(1.0, 2.0).unwrap();
        let s = martingale_samples(&spec, 2, 12, 40, &planted(), 8).unwrap();
        let resid: Vec<f64> = s.iter().map(|x| x.total - x.delta.iter().sum::<f64>()).collect();
        let noise: f64 = s.iter().map(|x| x.inner_var.iter().sum::<f64>()).sum::<f64>() / s.len() as f64;
        assert!(stats::variance(&resid) < 10.0 * noise + 1e-9, "{} vs {noise}", stats::variance(&resid));
    }

    #[test]
    fn exact_form_matches_the_l_form() {
        // E'[T(O_k, O_n') - T(O_{k-1}, O_n')] computed with O_n' equals the
        // same difference with O_l', l = m(m(k) + 1), by additivity across
        // the open circuit O_l'
        let spec = DistributionSpec::uniform(1.0, 2.0).unwrap();
        let opts = planted();
        let n = 3;
        let mut checked = 0;
        for index in 0..15 {
            let Ok((chain, _)) = outer_chain(&spec, n, &opts, 4, index) else { continue };
            for k in 0..=n {
                if chain.repeats(k) || chain.m(k) >= n {
                    continue;
                }
                let prev = chain.vertices(k as i64 - 1);
                let cur = chain.vertices(k as i64);
                let seed = derive_seed(4, index);
                let stream = inner_stream(MARTINGALE_TAG, k, 0);
                let Ok((((_, on), (_, ol)), f)) = grow_field(&spec, &opts.law, seed, stream, 2 << n, opts.max_radius, |f| {
                    Ok((circuit_at_level(f, n)?, circuit_at_level(f, chain.m(k) + 1)?))
                }) else {
                    continue;
                };
                let dn = times_to(&f, WeightKind::General, on.vertices()).unwrap();
                let dl = times_to(&f, WeightKind::General, ol.vertices()).unwrap();
                let exact = min_over(&f, &dn, cur) - min_over(&f, &dn, prev);
                let lform = min_over(&f, &dl, cur) - min_over(&f, &dl, prev);
                assert!((exact - lform).abs() < 1e-9, "{exact} vs {lform}");
                checked += 1;
            }
        }
        assert!(checked >= 10, "{checked}");
    }

    #[test]
    fn streams_are_disjoint() {
        assert_ne!(inner_stream(MARTINGALE_TAG, 0, 0), FIELD_STREAM);
        assert_ne!(inner_stream(MARTINGALE_TAG, 1, 0), inner_stream(MARTINGALE_TAG, 0, 1));
        assert_ne!(inner_stream(MARTINGALE_TAG, 1, 0), inner_stream(Y_TILDE_TAG, 1, 0));
    }
}
