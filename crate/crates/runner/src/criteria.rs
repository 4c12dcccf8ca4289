//! Acceptance criteria at their registered desk-scale parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::str::FromStr;

use anyhow::{anyhow, bail, Result};
use critfpp_core::estimators::{
    open_circuit_probability, proximity_report, proximity_sample, slope_agreement, stats, ArmEventSpec, Check,
    EstimatorReport, Geometry, TIME_CONSTANT_FACTOR, VARIANCE_FACTOR,
};
use critfpp_core::passage::{exhaustive_point_to_box, point_to_box};
use critfpp_core::weights::{low_weight_threshold, required_mass, sample_field};
use critfpp_core::circuits::max_disjoint_closed_circuits;
use critfpp_core::{derive_seed, DistributionSpec, SiteLaw, WeightField, WeightKind};
use serde::Serialize;

use crate::config::{default_tolerances, dyadic, RunConfig, StudyKind};
use crate::records::{Measure, SampleRecord};
use crate::studies::{self, execute, study_reports, underpowered, with_workers, RECORDS_FILE, REPORT_FILE, SUMMARY_FILE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Unit,
    Oracle,
    Statistical,
}

impl FromStr for Suite {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Suite::Unit),
            "oracle" => Ok(Suite::Oracle),
            "statistical" => Ok(Suite::Statistical),
            _ => bail!("unknown suite `{s}` (unit, oracle, statistical)"),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Unit => "unit",
            Suite::Oracle => "oracle",
            Suite::Statistical => "statistical",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Not resolvable at the sample size used; counts as not passing.
    Underpowered,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Underpowered => "UNDERPOWERED",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Outcome {
    /// `1`..`13` for the criteria, `S<k>` for supplementary checks, `U<k>`
    /// for unit invariants.
    pub id: String,
    pub suite: Suite,
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Replaces every outer sample count of the statistical suite.
    pub samples: Option<u64>,
    pub workers: usize,
    pub tolerances: BTreeMap<String, f64>,
    pub batches: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 1,
            samples: None,
            workers: studies::default_workers(),
            tolerances: default_tolerances(),
            batches: RunConfig::defaults(StudyKind::Tc).batches,
        }
    }
}

impl VerifyOptions {
    fn tol(&self, key: &str) -> f64 {
        self.tolerances[key]
    }

    fn samples(&self, stated: u64) -> u64 {
        self.samples.unwrap_or(stated)
    }

    fn seed(&self, id: u64) -> u64 {
        derive_seed(self.seed, id)
    }

    fn config(&self, study: StudyKind, id: u64) -> RunConfig {
        let mut c = RunConfig::defaults(study);
        c.seed = self.seed(id);
        c.tolerances = self.tolerances.clone();
        c
    }
}

struct Ctx<'a> {
    opts: &'a VerifyOptions,
    suite: Suite,
    out: Vec<Outcome>,
}

impl Ctx<'_> {
    fn push(&mut self, id: &str, name: &str, verdict: Verdict, detail: String) {
        self.out.push(Outcome { id: id.into(), suite: self.suite, name: name.into(), verdict, detail });
    }

    fn judge(&mut self, id: &str, name: &str, result: Result<(bool, String)>) {
        match result {
            Ok((ok, detail)) => self.push(id, name, if ok { Verdict::Pass } else { Verdict::Fail }, detail),
            Err(e) => self.push(id, name, Verdict::Fail, format!("error: {e:#}")),
        }
    }

    /// Verdict from reports. An underpowered fit says nothing either way,
    /// so it outranks failed checks.
    fn reports(&mut self, id: &str, name: &str, rs: Result<Vec<EstimatorReport>>, extra: Vec<Check>) {
        let rs = match rs {
            Ok(r) => r,
            Err(e) => return self.push(id, name, Verdict::Fail, format!("error: {e:#}")),
        };
        let checks: Vec<&Check> = rs.iter().flat_map(|r| r.checks.iter()).chain(extra.iter()).collect();
        let failed: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| describe_check(c)).collect();
        let weak: Vec<String> = rs.iter().flat_map(|r| underpowered(r, self.opts.batches)).collect();
        let mut detail: Vec<String> = rs.iter().filter_map(slope_line).collect();
        let verdict = if !weak.is_empty() {
            detail.extend(weak);
            detail.extend(failed);
            Verdict::Underpowered
        } else if !failed.is_empty() {
            detail.extend(failed);
            Verdict::Fail
        } else {
            detail.extend(checks.iter().filter(|c| c.bound.is_finite()).map(|c| describe_check(c)));
            Verdict::Pass
        };
        self.push(id, name, verdict, detail.join("; "));
    }
}

fn describe_check(c: &Check) -> String {
    if c.bound.is_nan() {
        format!("{}: {}", c.name, if c.pass { "holds" } else { "violated" })
    } else {
        format!("{}: {:.6} vs {:.6} (bound {:.6})", c.name, c.value, c.reference, c.bound)
    }
}

fn slope_line(r: &EstimatorReport) -> Option<String> {
    let g = r.regression.as_ref()?;
    let t = r.target.as_ref()?;
    Some(format!("{} slope {:.5} +- {:.5} vs {:.5}", r.study, g.slope, 1.96 * g.slope_se, t.value))
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Vec<Outcome> {
    let mut cx = Ctx { opts, suite, out: Vec::new() };
    match suite {
        Suite::Unit => unit(&mut cx),
        Suite::Oracle => oracle(&mut cx),
        Suite::Statistical => statistical(&mut cx),
    }
    cx.out
}

fn unit(cx: &mut Ctx) {
    cx.judge("13", "low-weight threshold tables", thresholds());
    cx.judge("U1", "closed-form constants", {
        let tc = (TIME_CONSTANT_FACTOR - 0.0918881).abs();
        let var = (VARIANCE_FACTOR - 0.0718568).abs();
        Ok((tc <= 5e-8 && var <= 5e-7, format!("time {TIME_CONSTANT_FACTOR:.9}, variance {VARIANCE_FACTOR:.9}")))
    });
    cx.judge("U2", "all-closed fields", (|| {
        let spec = DistributionSpec::bernoulli(2.0)?;
        let mut ok = true;
        for n in [1, 5, 17] {
            let f = WeightField::from_omega_fn(&spec, n, |_| 0.75)?;
            let t = point_to_box(&f, WeightKind::General, n)?.time;
            let (count, _) = max_disjoint_closed_circuits(&f, n)?;
            ok &= t == 2.0 * n as f64 && count == n as usize;
        }
        Ok((ok, "T = I n and n disjoint closed circuits on B(n)".into()))
    })());
}

fn thresholds() -> Result<(bool, String)> {
    let mut bad = Vec::new();
    let mut tables = 0;
    for spec in DistributionSpec::builtin_families() {
        for c2 in [0.25, 0.5, 0.75] {
            let p = low_weight_threshold(&spec, c2, 12)?;
            tables += 1;
            if spec.has_atom_at_infimum() {
                if !p.atom_case || p.table.iter().any(|&a| a != 0.0) {
                    bad.push(format!("{spec} c2 = {c2}: atom case not all zeros"));
                }
                continue;
            }
            for (k, &a) in p.table.iter().enumerate() {
                let j = k as u32 + 1;
                if spec.mass_above_infimum(a) < required_mass(c2, j) {
                    bad.push(format!("{spec} c2 = {c2}: mass inequality fails at j = {j}"));
                }
            }
            if p.table.windows(2).any(|w| w[1] > w[0]) {
                bad.push(format!("{spec} c2 = {c2}: table not nonincreasing"));
            }
        }
    }
    let detail = if bad.is_empty() { format!("{tables} tables exact") } else { bad.join("; ") };
    Ok((bad.is_empty(), detail))
}

fn oracle(cx: &mut Ctx) {
    let o = cx.opts;
    let duality = (|| {
        let mut c = o.config(StudyKind::Duality, 1);
        c.ladder = vec![16, 64, 256];
        c.samples = 200;
        let records = with_workers(o.workers, || execute(&c))??;
        study_reports(&c, &c.spec()?, &records)
    })();
    cx.reports("1", "T^B = I x disjoint closed circuits", duality, Vec::new());

    cx.judge("2", "solver vs exhaustive path enumeration on B(3)", brute_force(o));

    cx.judge("3", "coupling domination (oracle sweep)", (|| {
        let mut violations = 0u64;
        let mut solved = 0u64;
        for (f, spec) in DistributionSpec::builtin_families().into_iter().enumerate() {
            let mut c = o.config(StudyKind::Tc, 300 + f as u64);
            c.dist = spec.to_string();
            c.ladder = dyadic(4, 64);
            c.samples = 50;
            let records = with_workers(o.workers, || execute(&c))??;
            let (v, s) = domination(&records);
            violations += v;
            solved += s;
        }
        Ok((violations == 0, format!("{violations} violations over {solved} solved instances")))
    })());

    let hierarchy = (|| {
        let mut c = o.config(StudyKind::Circuits, 7);
        c.ladder = vec![12];
        c.samples = 100;
        let records = with_workers(o.workers, || execute(&c))??;
        study_reports(&c, &c.spec()?, &records)
    })();
    cx.reports("7", "circuit hierarchy oracle at n = 12", hierarchy, Vec::new());

    cx.judge("12", "byte-identical records across worker counts", determinism(o));
}

fn brute_force(o: &VerifyOptions) -> Result<(bool, String)> {
    let mut mismatches = Vec::new();
    let mut total = 0;
    for (f, spec) in DistributionSpec::builtin_families().into_iter().enumerate() {
        let master = o.seed(200 + f as u64);
        for i in 0..50 {
            let field = sample_field(&spec, 3, derive_seed(master, i))?;
            for kind in [WeightKind::General, WeightKind::Bernoulli] {
                let solved = point_to_box(&field, kind, 3)?.time;
                let exhaustive = exhaustive_point_to_box(&field, kind, 3)?;
                total += 1;
                if solved != exhaustive {
                    mismatches.push(format!("{spec} sample {i} {kind:?}: {solved} vs {exhaustive}"));
                }
            }
        }
    }
    let allowed = o.tol("brute_force");
    let detail = format!("{} mismatches in {total} comparisons {}", mismatches.len(), mismatches.join("; "));
    Ok((mismatches.len() as f64 <= allowed, detail.trim_end().to_string()))
}

/// `(violations, solved instances)` over passage records.
fn domination(records: &[SampleRecord]) -> (u64, u64) {
    let mut v = 0;
    let mut n = 0;
    for r in records {
        if let Measure::Passage { t, t_bernoulli, site_violations } = r.values {
            n += 1;
            if !(0.0 <= t_bernoulli && t_bernoulli <= t) || site_violations > 0 {
                v += 1;
            }
        }
    }
    (v, n)
}

fn determinism(o: &VerifyOptions) -> Result<(bool, String)> {
    let mut studies_checked = Vec::new();
    for (k, study) in [StudyKind::Tc, StudyKind::Duality, StudyKind::Arms].into_iter().enumerate() {
        let mut c = o.config(study, 1200 + k as u64);
        match study {
            StudyKind::Tc => {
                c.ladder = dyadic(8, 64);
                c.samples = 60;
            }
            StudyKind::Duality => {
                c.ladder = vec![16, 32];
                c.samples = 30;
            }
            _ => {
                c.ladder = vec![8, 16];
                c.samples = 400;
            }
        }
        let a = tempfile::tempdir()?;
        let b = tempfile::tempdir()?;
        studies::run(&c, 1, a.path())?;
        studies::run(&c, 4, b.path())?;
        for f in [RECORDS_FILE, REPORT_FILE, SUMMARY_FILE] {
            if fs::read(a.path().join(f))? != fs::read(b.path().join(f))? {
                return Ok((false, format!("{study}: {f} differs between 1 and 4 workers")));
            }
        }
        studies_checked.push(study.name());
    }
    Ok((true, format!("{} with 1 and 4 workers", studies_checked.join(", "))))
}

fn statistical(cx: &mut Ctx) {
    let o = cx.opts;
    let mut dominated = (0u64, 0u64);

    // 4 and 5 share one Bernoulli run
    let mut tc = o.config(StudyKind::Tc, 4);
    tc.samples = o.samples(2000);
    let bernoulli = with_workers(o.workers, || execute(&tc)).and_then(|r| r);
    let bern_tc = bernoulli.as_ref().map_err(|e| anyhow!("{e:#}")).and_then(|r| {
        let d = domination(r);
        dominated = (dominated.0 + d.0, dominated.1 + d.1);
        study_reports(&tc, &tc.spec()?, r)
    });
    cx.reports("4", "time constant slope", bern_tc.as_ref().map(|r| r.clone()).map_err(|e| anyhow!("{e:#}")), Vec::new());
    let var = RunConfig { study: StudyKind::Var, ..tc.clone() };
    let bern_var = bernoulli.as_ref().map_err(|e| anyhow!("{e:#}")).and_then(|r| study_reports(&var, &var.spec()?, r));
    cx.reports("5", "variance constant slope", bern_var, Vec::new());

    // 6: independent atomless run at the same scale
    let mut uni = o.config(StudyKind::Tc, 6);
    uni.dist = "uniform:1,2".into();
    uni.samples = o.samples(2000);
    let universality = (|| -> Result<(Vec<EstimatorReport>, Check, Vec<String>)> {
        let records = with_workers(o.workers, || execute(&uni))??;
        let d = domination(&records);
        dominated = (dominated.0 + d.0, dominated.1 + d.1);
        let spec = uni.spec()?;
        let u_tc = study_reports(&uni, &spec, &records)?.remove(0);
        let gap_cfg = RunConfig { study: StudyKind::Gap, ..uni.clone() };
        let gap = study_reports(&gap_cfg, &spec, &records)?.remove(0);
        let b_tc = bern_tc.as_ref().map_err(|e| anyhow!("Bernoulli run: {e:#}"))?[0].clone();
        let agree = slope_agreement("slope agrees with Bernoulli within the joint CI", &u_tc, &b_tc, o.tol("universality"))?;
        let weak: Vec<String> = [&u_tc, &b_tc].into_iter().flat_map(|r| underpowered(r, o.batches)).collect();
        let mut shown = u_tc;
        // judged against the Bernoulli slope, not the target
        shown.checks.retain(|c| c.name != "slope vs target");
        shown.target = None;
        shown.pass = shown.checks.iter().all(|c| c.pass);
        Ok((vec![shown, gap], agree, weak))
    })();
    match universality {
        Ok((_, agree, weak)) if !agree.bound.is_finite() || !weak.is_empty() => {
            let detail = format!("joint standard error {}; {}", agree.bound / o.tol("universality"), weak.join("; "));
            cx.push("6", "universality of the time constant", Verdict::Underpowered, detail)
        }
        Ok((rs, agree, _)) => {
            let detail = format!("uniform slope {:.5} vs Bernoulli {:.5}", agree.value, agree.reference);
            cx.reports("6", "universality of the time constant", Ok(rs), vec![agree]);
            if let Some(last) = cx.out.last_mut() {
                last.detail = format!("{detail}; {}", last.detail);
            }
        }
        Err(e) => cx.push("6", "universality of the time constant", Verdict::Fail, format!("error: {e:#}")),
    }

    cx.push(
        "3",
        "coupling domination (statistical runs)",
        if dominated.0 == 0 && dominated.1 > 0 { Verdict::Pass } else { Verdict::Fail },
        format!("{} violations over {} solved instances", dominated.0, dominated.1),
    );

    // 8 and 11 share the martingale run
    let mut mart = o.config(StudyKind::Martingale, 8);
    mart.samples = o.samples(400);
    let mart_reports = with_workers(o.workers, || execute(&mart)).and_then(|r| r).and_then(|r| study_reports(&mart, &mart.spec()?, &r));
    martingale_pair(cx, ("8", Some("11")), "", mart_reports);

    let mut yt = o.config(StudyKind::Ytilde, 9);
    yt.dist = "uniform:1,2".into();
    yt.samples = o.samples(300);
    let yt_reports = with_workers(o.workers, || execute(&yt)).and_then(|r| r).and_then(|r| study_reports(&yt, &yt.spec()?, &r));
    cx.reports("9", "nested vs single-field gap moment", yt_reports, Vec::new());

    arms(cx);

    supplementary(cx);
}

fn martingale_pair(cx: &mut Ctx, ids: (&str, Option<&str>), label: &str, rs: Result<Vec<EstimatorReport>>) {
    let is_moment = |c: &Check| c.name.starts_with("max/min E Delta_k^4");
    match rs {
        Ok(rs) => {
            let mut identity = rs[0].clone();
            let moments: Vec<Check> = identity.checks.iter().filter(|c| is_moment(c)).cloned().collect();
            identity.checks.retain(|c| !is_moment(c));
            identity.pass = identity.checks.iter().all(|c| c.pass);
            cx.reports(ids.0, &format!("{label}martingale variance identity"), Ok(vec![identity]), Vec::new());
            if let Some(id) = ids.1 {
                let ok = !moments.is_empty() && moments.iter().all(|c| c.pass);
                let detail = moments.iter().map(describe_check).collect::<Vec<_>>().join("; ");
                cx.push(id, &format!("{label}bounded fourth moments of the differences"), if ok { Verdict::Pass } else { Verdict::Fail }, detail);
            }
        }
        Err(e) => {
            let detail = format!("error: {e:#}");
            cx.push(ids.0, &format!("{label}martingale variance identity"), Verdict::Fail, detail.clone());
            if let Some(id) = ids.1 {
                cx.push(id, &format!("{label}bounded fourth moments of the differences"), Verdict::Fail, detail);
            }
        }
    }
}

fn arms(cx: &mut Ctx) {
    let o = cx.opts;
    let mut two = o.config(StudyKind::Arms, 10);
    two.samples = o.samples(100_000);
    two.ladder = dyadic(8, 64);
    two.arms.inner_radius = 2;
    let slope = with_workers(o.workers, || execute(&two)).and_then(|r| r).and_then(|r| study_reports(&two, &two.spec()?, &r));

    let ordering = (|| -> Result<Check> {
        let spec = DistributionSpec::bernoulli(1.0)?;
        let n = 2;
        let big = 8 * n;
        let run = |arm: ArmEventSpec, id: u64| -> Result<f64> {
            let rows = with_workers(o.workers, || {
                critfpp_core::estimators::arm_samples(&spec, &arm, &[big], o.samples(100_000), o.seed(id))
            })??;
            Ok(stats::mean(&rows.iter().map(|r| r[0] as u8 as f64).collect::<Vec<_>>()))
        };
        let half = run(ArmEventSpec::alternating(5, Geometry::Half, n, big)?, 1001)?;
        let full = run(ArmEventSpec::alternating(6, Geometry::Full, n, big)?, 1002)?;
        Ok(Check {
            name: format!("P(half-plane 5 arms) < P(full-plane 6 arms) at N/n = 8 ({half:.3e} vs {full:.3e})"),
            value: half,
            reference: full,
            bound: f64::NAN,
            pass: half < full,
        })
    })();
    match ordering {
        Ok(c) => cx.reports("10", "arm exponents", slope, vec![c]),
        Err(e) => cx.push("10", "arm exponents", Verdict::Fail, format!("error: {e:#}")),
    }
}

/// RSW-type circuit probabilities within `range` at every level.
fn rsw(o: &VerifyOptions, law: &SiteLaw, range: std::ops::RangeInclusive<f64>, id: u64) -> Result<(bool, String)> {
    let spec = DistributionSpec::bernoulli(1.0)?;
    let r = with_workers(o.workers, || open_circuit_probability(&spec, law, &[2, 3, 4, 5], o.samples(400), o.seed(id)))??;
    let ok = r.scales.iter().all(|s| range.contains(&s.mean));
    let ps: Vec<String> = r.scales.iter().map(|s| format!("k={}: {:.4}", s.scale, s.mean)).collect();
    Ok((ok, format!("P(open circuit in A(k)) {}; required within [{}, {}]", ps.join(", "), range.start(), range.end())))
}

/// `strict` asks for empirical monotonicity; otherwise rises up to 2 SE are
/// allowed and the first level must exceed the last by more than 2 SE.
fn proximity(o: &VerifyOptions, law: &SiteLaw, strict: bool, id: u64) -> Result<(bool, String)> {
    let spec = DistributionSpec::bernoulli(1.0)?;
    let levels = [2, 3, 4, 5];
    let samples = with_workers(o.workers, || {
        use rayon::prelude::*;
        (0..o.samples(500))
            .into_par_iter()
            .map(|i| proximity_sample(&spec, law, &levels, 0.5, critfpp_core::estimators::DEFAULT_MAX_RADIUS, o.seed(id), i))
            .collect::<critfpp_core::Result<Vec<_>>>()
    })??;
    let r = proximity_report(&levels, &samples);
    let ps: Vec<String> = r.scales.iter().map(|s| format!("k={}: {:.3}", s.scale, s.mean)).collect();
    let two_se = |a: &critfpp_core::estimators::ScaleRecord, b: &critfpp_core::estimators::ScaleRecord| 2.0 * a.std_error.hypot(b.std_error);
    let ok = if strict {
        r.pass
    } else {
        let (first, last) = (&r.scales[0], &r.scales[r.scales.len() - 1]);
        r.scales.windows(2).all(|w| w[1].mean <= w[0].mean + two_se(&w[0], &w[1])) && first.mean - last.mean > two_se(first, last)
    };
    Ok((ok, format!("P(F_k) {}", ps.join(", "))))
}

fn supplementary(cx: &mut Ctx) {
    let o = cx.opts;
    let planted = SiteLaw::PlantedRings { defect: 0.3 };
    cx.judge("S1", "RSW-type circuit probabilities (iid)", rsw(o, &SiteLaw::Iid, 0.01..=0.99, 2001));
    cx.judge("S2", "P(F_k) nonincreasing in k (iid)", proximity(o, &SiteLaw::Iid, true, 2002));

    let mut mart = o.config(StudyKind::Martingale, 2003);
    mart.law = planted;
    mart.samples = o.samples(200);
    mart.inner_samples = 20;
    let rs = with_workers(o.workers, || execute(&mart)).and_then(|r| r).and_then(|r| study_reports(&mart, &mart.spec()?, &r));
    martingale_pair(cx, ("S3", None), "planted rings: ", rs);

    let mut yt = o.config(StudyKind::Ytilde, 2005);
    yt.dist = "uniform:1,2".into();
    yt.law = planted;
    yt.samples = o.samples(300);
    yt.inner_samples = 20;
    let rs = with_workers(o.workers, || execute(&yt)).and_then(|r| r).and_then(|r| study_reports(&yt, &yt.spec()?, &r));
    cx.reports("S4", "planted rings: nested vs single-field gap moment", rs, Vec::new());

    cx.judge("S5", "planted rings: circuit probabilities bounded below", rsw(o, &planted, 0.01..=1.0, 2006));
    cx.judge("S6", "planted rings: P(F_k) nonincreasing in k (2 SE) and decaying", proximity(o, &planted, false, 2007));
}

/// Worst verdict per id, in first-seen order.
pub fn by_criterion(outcomes: &[Outcome]) -> Vec<(String, Verdict, Vec<&Outcome>)> {
    let mut out: Vec<(String, Verdict, Vec<&Outcome>)> = Vec::new();
    for o in outcomes {
        match out.iter_mut().find(|e| e.0 == o.id) {
            Some(e) => {
                e.2.push(o);
                if e.1 == Verdict::Pass || o.verdict == Verdict::Fail {
                    e.1 = if o.verdict == Verdict::Pass { e.1 } else { o.verdict };
                }
            }
            None => out.push((o.id.clone(), o.verdict, vec![o])),
        }
    }
    out
}

pub fn matrix(outcomes: &[Outcome]) -> String {
    let mut s = String::new();
    for o in outcomes {
        s.push_str(&format!("{:<4} {:<12} {:<13} {}\n", o.id, o.suite.to_string(), o.verdict.to_string(), o.name));
        if !o.detail.is_empty() {
            s.push_str(&format!("       {}\n", o.detail));
        }
    }
    s
}

/// 0 when every outcome passed, 2 otherwise.
pub fn exit_code(outcomes: &[Outcome]) -> i32 {
    if outcomes.iter().all(|o| o.verdict == Verdict::Pass) {
        studies::EXIT_PASS
    } else {
        studies::EXIT_FAIL
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn verdicts(v: &[Outcome]) -> Vec<(String, Verdict)> {
        v.iter().map(|o| (o.id.clone(), o.verdict)).collect()
    }

    #[test]
    fn unit_suite_passes() {
        let v = run_suite(Suite::Unit, &VerifyOptions::default());
        assert!(v.iter().all(|o| o.verdict == Verdict::Pass), "{}", matrix(&v));
        assert!(v.iter().any(|o| o.id == "13"));
    }

    #[test]
    fn worst_verdict_wins() {
        let mk = |id: &str, verdict| Outcome { id: id.into(), suite: Suite::Oracle, name: String::new(), verdict, detail: String::new() };
        let v = vec![mk("3", Verdict::Pass), mk("4", Verdict::Underpowered), mk("3", Verdict::Fail), mk("4", Verdict::Pass)];
        let g = by_criterion(&v);
        assert_eq!(g.iter().map(|e| (e.0.as_str(), e.1)).collect::<Vec<_>>(), vec![("3", Verdict::Fail), ("4", Verdict::Underpowered)]);
        assert_eq!(exit_code(&v), 2);
        assert_eq!(verdicts(&v[..1]), vec![("3".into(), Verdict::Pass)]);
    }
}
