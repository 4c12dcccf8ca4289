use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use critfpp_core::estimators::{
    arm_report, arm_samples, char_sums, coupling_gap_report, duality_report, duality_samples, fourth_moment_ratio,
    hierarchy_report, hierarchy_sample, martingale_report, martingale_samples, parse_sigma, passage_samples,
    time_constant_report, variance_constant_report, y_tilde_report, y_tilde_samples, ArmEventSpec, ChainOptions, Check,
    DualitySample, EstimatorReport, HierarchySample, LadderOptions, MartingaleSample, PassageSample, ScaleRecord,
    YTildeSample,
};
use critfpp_core::{DistributionSpec, PRNG_ALGORITHM};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, StudyKind};
use crate::records::{read_records, write_records, Header, Measure, RecordFile, SampleRecord, BINARY_VERSION};

pub const REPORT_FORMAT: &str = "critfpp-report-v1";
pub const RECORDS_FILE: &str = "records.jsonl";
pub const REPORT_FILE: &str = "report.json";
pub const SUMMARY_FILE: &str = "summary.csv";

/// Exit codes of the command-line contract.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

/// Number of worker threads when none is given.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Run `f` on a pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build().context("building worker pool")?;
    Ok(pool.install(f))
}

/// A record file that took part in a merged report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Source {
    pub file: String,
    pub seed: u64,
    pub samples: u64,
    pub config_hash: String,
}

/// Contents of `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub format: String,
    pub binary_version: String,
    pub config_hash: String,
    pub prng: String,
    pub tolerances: std::collections::BTreeMap<String, f64>,
    pub config: RunConfig,
    /// Non-empty only for a report pooled from several record files.
    pub merged_from: Vec<Source>,
    pub reports: Vec<EstimatorReport>,
    /// Reasons the sample size cannot resolve the tolerance.
    pub underpowered: Vec<String>,
    pub pass: bool,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

fn record(study: StudyKind, index: u64, seed: u64, scale: u32, values: Measure) -> SampleRecord {
    SampleRecord { study, index, seed, scale, values }
}

fn arm_template(c: &RunConfig) -> Result<ArmEventSpec> {
    let sigma = parse_sigma(&c.arms.sigma).map_err(|e| anyhow!("field `sigma`: {e}"))?;
    Ok(ArmEventSpec::new(sigma, c.arms.geometry, c.arms.inner_radius, c.ladder[0])?)
}

fn chain_options(c: &RunConfig) -> ChainOptions {
    ChainOptions { law: c.law, max_radius: c.max_radius }
}

/// Draw every sample of the study, in sample-index order. Must run inside
/// the caller's worker pool.
pub fn execute(c: &RunConfig) -> Result<Vec<SampleRecord>> {
    c.validate()?;
    let spec = c.spec()?;
    let study = c.study;
    let ladder = &c.ladder;
    let mut out = Vec::new();
    match study {
        StudyKind::Tc | StudyKind::Var | StudyKind::Gap => {
            for s in passage_samples(&spec, ladder, c.samples, c.seed)? {
                for (j, &n) in ladder.iter().enumerate() {
                    let m = Measure::Passage { t: s.t[j], t_bernoulli: s.t_bernoulli[j], site_violations: s.site_violations };
                    out.push(record(study, s.index, s.seed, n, m));
                }
            }
        }
        StudyKind::Duality => {
            for row in duality_samples(&spec, ladder, c.samples, c.seed)? {
                for s in row {
                    let m = Measure::Duality {
                        t_bernoulli: s.t_bernoulli,
                        circuits: s.circuits,
                        closed_on_geodesic: s.closed_on_geodesic,
                    };
                    out.push(record(study, s.index, s.seed, s.n, m));
                }
            }
        }
        StudyKind::Circuits => {
            let rows: Vec<Vec<HierarchySample>> = (0..c.samples)
                .into_par_iter()
                .map(|i| ladder.iter().map(|&n| hierarchy_sample(&spec, n, c.seed, i)).collect())
                .collect::<critfpp_core::Result<_>>()?;
            for s in rows.into_iter().flatten() {
                let m = Measure::Hierarchy {
                    hierarchy: s.hierarchy,
                    peeling: s.peeling,
                    oracle_failure: s.oracle_failure,
                    diameters: s.diameters,
                };
                out.push(record(study, s.index, s.seed, s.n, m));
            }
        }
        StudyKind::Martingale => {
            let k = ladder[0];
            for s in martingale_samples(&spec, k, c.samples, c.inner_samples, &chain_options(c), c.seed)? {
                let m = Measure::Martingale {
                    radius: s.radius,
                    m: s.m,
                    delta: s.delta,
                    delta_bernoulli: s.delta_bernoulli,
                    inner_var: s.inner_var,
                    inner_var_bernoulli: s.inner_var_bernoulli,
                    total: s.total,
                    total_bernoulli: s.total_bernoulli,
                };
                out.push(record(study, s.index, s.seed, k, m));
            }
        }
        StudyKind::Ytilde => {
            let k = ladder[0];
            for s in y_tilde_samples(&spec, k, c.samples, c.inner_samples, &chain_options(c), c.seed)? {
                let m = Measure::YTilde { nested: s.nested, single: s.single, min_y: s.min_y };
                out.push(record(study, s.index, s.seed, k, m));
            }
        }
        StudyKind::Arms => {
            let template = arm_template(c)?;
            for (i, row) in arm_samples(&spec, &template, ladder, c.samples, c.seed)?.into_iter().enumerate() {
                let seed = critfpp_core::derive_seed(c.seed, i as u64);
                for (j, &big) in ladder.iter().enumerate() {
                    out.push(record(study, i as u64, seed, big, Measure::Arm { hit: row[j] }));
                }
            }
        }
        StudyKind::Chars => {
            for &n in ladder {
                let s = char_sums(&spec, n as u64)?;
                out.push(record(study, 0, 0, n, Measure::Chars { s1: s.s1, s2: s.s2, terms: s.terms }));
            }
        }
    }
    Ok(out)
}

/// Records grouped by sample, each group covering the ladder in order.
fn grouped<'a>(records: &'a [SampleRecord], ladder: &[u32]) -> Result<Vec<(u64, u64, Vec<&'a Measure>)>> {
    let mut out: Vec<(u64, u64, Vec<&Measure>)> = Vec::new();
    for r in records {
        match out.last_mut() {
            Some(g) if g.0 == r.index => g.2.push(&r.values),
            _ => out.push((r.index, r.seed, vec![&r.values])),
        }
        let g = out.last().expect("just pushed");
        let j = g.2.len() - 1;
        if ladder.get(j) != Some(&r.scale) {
            bail!("record for sample {} has scale {}, expected {:?}", r.index, r.scale, ladder.get(j));
        }
    }
    if let Some(g) = out.iter().find(|g| g.2.len() != ladder.len()) {
        bail!("sample {} covers {} of {} scales", g.0, g.2.len(), ladder.len());
    }
    Ok(out)
}

fn wrong(index: u64, want: &str) -> anyhow::Error {
    anyhow!("record for sample {index} is not a {want} measure")
}

fn passages(records: &[SampleRecord], ladder: &[u32]) -> Result<Vec<PassageSample>> {
    grouped(records, ladder)?
        .into_iter()
        .map(|(index, seed, ms)| {
            let mut s = PassageSample { index, seed, t: Vec::new(), t_bernoulli: Vec::new(), site_violations: 0 };
            for m in ms {
                let Measure::Passage { t, t_bernoulli, site_violations } = m else { return Err(wrong(index, "passage")) };
                s.t.push(*t);
                s.t_bernoulli.push(*t_bernoulli);
                s.site_violations = *site_violations;
            }
            Ok(s)
        })
        .collect()
}

fn dualities(records: &[SampleRecord]) -> Result<Vec<DualitySample>> {
    records
        .iter()
        .map(|r| match &r.values {
            Measure::Duality { t_bernoulli, circuits, closed_on_geodesic } => Ok(DualitySample {
                index: r.index,
                seed: r.seed,
                n: r.scale,
                t_bernoulli: *t_bernoulli,
                circuits: *circuits,
                closed_on_geodesic: *closed_on_geodesic,
            }),
            _ => Err(wrong(r.index, "duality")),
        })
        .collect()
}

fn hierarchies(records: &[SampleRecord]) -> Result<Vec<HierarchySample>> {
    records
        .iter()
        .map(|r| match &r.values {
            Measure::Hierarchy { hierarchy, peeling, oracle_failure, diameters } => Ok(HierarchySample {
                index: r.index,
                seed: r.seed,
                n: r.scale,
                hierarchy: *hierarchy,
                peeling: *peeling,
                oracle_failure: oracle_failure.clone(),
                diameters: diameters.clone(),
            }),
            _ => Err(wrong(r.index, "hierarchy")),
        })
        .collect()
}

fn martingales(records: &[SampleRecord]) -> Result<Vec<MartingaleSample>> {
    records
        .iter()
        .map(|r| match &r.values {
            Measure::Martingale { radius, m, delta, delta_bernoulli, inner_var, inner_var_bernoulli, total, total_bernoulli } => {
                Ok(MartingaleSample {
                    index: r.index,
                    seed: r.seed,
                    radius: *radius,
                    m: m.clone(),
                    delta: delta.clone(),
                    delta_bernoulli: delta_bernoulli.clone(),
                    inner_var: inner_var.clone(),
                    inner_var_bernoulli: inner_var_bernoulli.clone(),
                    total: *total,
                    total_bernoulli: *total_bernoulli,
                })
            }
            _ => Err(wrong(r.index, "martingale")),
        })
        .collect()
}

fn y_tildes(records: &[SampleRecord]) -> Result<Vec<YTildeSample>> {
    records
        .iter()
        .map(|r| match &r.values {
            Measure::YTilde { nested, single, min_y } => {
                Ok(YTildeSample { index: r.index, seed: r.seed, nested: *nested, single: *single, min_y: *min_y })
            }
            _ => Err(wrong(r.index, "y_tilde")),
        })
        .collect()
}

fn arm_rows(records: &[SampleRecord], ladder: &[u32]) -> Result<Vec<Vec<bool>>> {
    grouped(records, ladder)?
        .into_iter()
        .map(|(index, _, ms)| {
            ms.into_iter()
                .map(|m| match m {
                    Measure::Arm { hit } => Ok(*hit),
                    _ => Err(wrong(index, "arm")),
                })
                .collect()
        })
        .collect()
}

/// Exact criteria read their tolerance as a number of allowed mismatching
/// samples; at zero the all-samples checks of the report stand as they are.
fn allow_mismatches(r: &mut EstimatorReport, replaced: &[&str], mismatches: usize, tol: f64) {
    if tol > 0.0 {
        r.checks.retain(|c| !replaced.contains(&c.name.as_str()));
        r.push(Check {
            name: "mismatching samples within tolerance".into(),
            value: mismatches as f64,
            reference: 0.0,
            bound: tol,
            pass: mismatches as f64 <= tol,
        });
    }
}

/// The relative-slope tolerance cannot be resolved at this sample size.
pub fn underpowered(r: &EstimatorReport, batches: usize) -> Vec<String> {
    let mut out = Vec::new();
    if let (Some(g), Some(t)) = (&r.regression, &r.target) {
        if g.batches < batches {
            out.push(format!("{}: only {} of {batches} batches usable for the slope error", r.study, g.batches));
        }
        let band = t.relative_tolerance * t.value.abs();
        if band > 0.0 {
            let half = 1.96 * g.slope_se;
            if !half.is_finite() {
                out.push(format!("{}: slope standard error undefined ({} usable batches)", r.study, g.batches));
            } else if half > band {
                out.push(format!("{}: 95% CI half-width {half:.4} exceeds the tolerance band {band:.4}", r.study));
            }
        }
    }
    for s in &r.scales {
        if s.samples >= 1 && !s.std_error.is_finite() {
            out.push(format!("{}: standard error undefined at scale {}", r.study, s.scale));
        }
    }
    out
}

fn char_reports(records: &[SampleRecord]) -> Result<Vec<EstimatorReport>> {
    let mut a = EstimatorReport::new("chars", "s1 = sum_k F^-1(1/2 + 2^-k)");
    let mut b = EstimatorReport::new("chars", "s2 = sum_k F^-1(1/2 + 2^-k)^2");
    for r in records {
        let Measure::Chars { s1, s2, terms } = r.values else { return Err(wrong(r.index, "chars")) };
        let row = |v: f64| ScaleRecord { scale: r.scale as f64, samples: terms as u64, mean: v, variance: 0.0, std_error: 0.0 };
        a.scales.push(row(s1));
        b.scales.push(row(s2));
        let ln = (r.scale as f64).ln();
        a.flags.push(format!("n = {}: s1 / ln n = {:.6}", r.scale, s1 / ln));
        b.flags.push(format!("n = {}: s2 / ln n = {:.6}", r.scale, s2 / ln));
    }
    Ok(vec![a, b])
}

/// Per-study reports from raw records. Both `run` and `report` go through
/// here.
pub fn study_reports(c: &RunConfig, spec: &DistributionSpec, records: &[SampleRecord]) -> Result<Vec<EstimatorReport>> {
    let ladder = &c.ladder;
    let opts = LadderOptions { skip: c.window_skip, batches: c.batches };
    Ok(match c.study {
        StudyKind::Tc => vec![time_constant_report(spec, ladder, &passages(records, ladder)?, &opts, c.tolerance("tc"))?],
        StudyKind::Var => {
            vec![variance_constant_report(spec, ladder, &passages(records, ladder)?, &opts, c.tolerance("var"))?]
        }
        StudyKind::Gap => vec![coupling_gap_report(ladder, &passages(records, ladder)?)?],
        StudyKind::Duality => {
            let s = dualities(records)?;
            let mut r = duality_report(spec, &s);
            let bad = s.iter().filter(|x| !x.holds(spec.infimum())).count();
            allow_mismatches(&mut r, &["T^B = I x count on every sample"], bad, c.tolerance("duality"));
            vec![r]
        }
        StudyKind::Circuits => {
            let s = hierarchies(records)?;
            let mut r = hierarchy_report(&s);
            let bad = s
                .iter()
                .filter(|x| {
                    x.oracle_failure.is_some()
                        || x.hierarchy != x.peeling
                        || x.diameters.windows(2).any(|w| w[0] >= w[1])
                })
                .count();
            allow_mismatches(
                &mut r,
                &["every hierarchy passes the oracle", "hierarchy size = peeling count", "diameters strictly increasing"],
                bad,
                c.tolerance("hierarchy"),
            );
            vec![r]
        }
        StudyKind::Martingale => {
            let (est, mut r) = martingale_report(&martingales(records)?, c.inner_samples, c.tolerance("martingale"))?;
            let levels: Vec<u32> = (2..=ladder[0]).collect();
            if levels.len() >= 2 {
                let ratio = fourth_moment_ratio(&est, &levels);
                let bound = c.tolerance("moments");
                r.push(Check {
                    name: format!("max/min E Delta_k^4 over k in {levels:?}"),
                    value: ratio,
                    reference: 1.0,
                    bound,
                    pass: ratio < bound,
                });
            }
            vec![r]
        }
        StudyKind::Ytilde => vec![y_tilde_report(ladder[0], &y_tildes(records)?, c.tolerance("ytilde"))],
        StudyKind::Arms => {
            let template = arm_template(c)?;
            vec![arm_report(&template, ladder, &arm_rows(records, ladder)?, c.batches, c.tolerance("arms"))]
        }
        StudyKind::Chars => char_reports(records)?,
    })
}

fn summarize_with(c: &RunConfig, records: &[SampleRecord], merged_from: Vec<Source>) -> Result<RunSummary> {
    let spec = c.spec()?;
    if records.is_empty() {
        bail!("no records");
    }
    if let Some(r) = records.iter().find(|r| r.study != c.study) {
        bail!("record for sample {} belongs to study `{}`, the header says `{}`", r.index, r.study, c.study);
    }
    let reports = study_reports(c, &spec, records)?;
    let underpowered: Vec<String> = reports.iter().flat_map(|r| underpowered(r, c.batches)).collect();
    let pass = underpowered.is_empty() && reports.iter().all(|r| r.pass);
    Ok(RunSummary {
        format: REPORT_FORMAT.into(),
        binary_version: BINARY_VERSION.into(),
        config_hash: c.hash(),
        prng: PRNG_ALGORITHM.into(),
        tolerances: c.tolerances.clone(),
        config: c.clone(),
        merged_from,
        reports,
        underpowered,
        pass,
    })
}

/// Summary of a single record file.
pub fn summarize(file: &RecordFile) -> Result<RunSummary> {
    summarize_with(&file.header.config, &file.records, Vec::new())
}

fn without_seed(c: &RunConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(c).expect("config serializes");
    let m = v.as_object_mut().expect("config is a map");
    m.remove("seed");
    m.remove("samples");
    v
}

/// Pool record files of the same study drawn from independent seeds.
/// Sample indices are renumbered consecutively in seed order.
pub fn merge(mut files: Vec<RecordFile>) -> Result<RunSummary> {
    if files.is_empty() {
        bail!("no records");
    }
    if files.len() == 1 {
        return summarize(&files[0]);
    }
    let kinds: BTreeSet<StudyKind> = files.iter().map(|f| f.header.config.study).collect();
    if kinds.len() > 1 {
        let listed: Vec<String> = files.iter().map(|f| format!("{} ({})", f.header.config.study, f.source)).collect();
        bail!("incompatible study kinds: {}", listed.join(", "));
    }
    files.sort_by(|a, b| a.header.config.seed.cmp(&b.header.config.seed).then(a.source.cmp(&b.source)));
    let base = without_seed(&files[0].header.config);
    for f in &files[1..] {
        let other = without_seed(&f.header.config);
        if other != base {
            let keys: Vec<&String> = base
                .as_object()
                .unwrap()
                .iter()
                .filter(|(k, v)| other.get(k.as_str()) != Some(v))
                .map(|(k, _)| k)
                .collect();
            bail!("{} and {} differ beyond the seed in: {:?}", files[0].source, f.source, keys);
        }
    }
    for w in files.windows(2) {
        if w[0].header.config.seed == w[1].header.config.seed {
            bail!("{} and {} share seed {}; pooled samples would not be independent", w[0].source, w[1].source, w[0].header.config.seed);
        }
    }
    let mut config = files[0].header.config.clone();
    let mut records = Vec::new();
    let mut offset = 0u64;
    let mut sources = Vec::new();
    for f in &files {
        let count = f.records.iter().map(|r| r.index + 1).max().unwrap_or(0);
        records.extend(f.records.iter().map(|r| SampleRecord { index: r.index + offset, ..r.clone() }));
        offset += count;
        let file = Path::new(&f.source).file_name().map_or(f.source.clone(), |n| n.to_string_lossy().into_owned());
        sources.push(Source { file, seed: f.header.config.seed, samples: count, config_hash: f.header.config_hash.clone() });
    }
    config.samples = offset;
    summarize_with(&config, &records, sources)
}

pub fn load(path: &Path) -> Result<RecordFile> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_records(&path.display().to_string(), BufReader::new(f))
}

pub fn write_summary(dir: &Path, s: &RunSummary) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(s)?;
    json.push(b'\n');
    fs::write(dir.join(REPORT_FILE), json)?;
    let mut w = BufWriter::new(File::create(dir.join(SUMMARY_FILE))?);
    summary_csv(&mut w, s)?;
    w.flush()?;
    Ok(())
}

/// `#` metadata lines, then one row per report scale.
pub fn summary_csv(mut w: impl Write, s: &RunSummary) -> Result<()> {
    writeln!(w, "# format: critfpp-summary-v1")?;
    writeln!(w, "# binary_version: {}", s.binary_version)?;
    writeln!(w, "# config_hash: {}", s.config_hash)?;
    writeln!(w, "# prng: {}", s.prng)?;
    let tols: Vec<String> = s.tolerances.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(w, "# tolerances: {}", tols.join(";"))?;
    if !s.merged_from.is_empty() {
        let seeds: Vec<String> = s.merged_from.iter().map(|m| m.seed.to_string()).collect();
        writeln!(w, "# merged: {} files, seeds {}", s.merged_from.len(), seeds.join(","))?;
    }
    let mut c = csv::Writer::from_writer(w);
    c.write_record(["study", "quantity", "scale", "samples", "mean", "variance", "std_error"])?;
    for r in &s.reports {
        for x in &r.scales {
            c.write_record([
                r.study.clone(),
                r.quantity.clone(),
                x.scale.to_string(),
                x.samples.to_string(),
                x.mean.to_string(),
                x.variance.to_string(),
                x.std_error.to_string(),
            ])?;
        }
    }
    c.flush()?;
    Ok(())
}

/// Execute a study and write records, report and summary into `out`.
pub fn run(c: &RunConfig, workers: usize, out: &Path) -> Result<RunSummary> {
    c.validate()?;
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    let records = with_workers(workers, || execute(c))??;
    let file = RecordFile { source: RECORDS_FILE.into(), header: Header::new(c), records };
    let mut w = BufWriter::new(File::create(out.join(RECORDS_FILE))?);
    write_records(&mut w, &file.header, &file.records)?;
    let summary = summarize(&file)?;
    write_summary(out, &summary)?;
    Ok(summary)
}

/// Re-aggregate record files into `out`.
pub fn report(inputs: &[PathBuf], out: &Path) -> Result<RunSummary> {
    if inputs.is_empty() {
        bail!("no records");
    }
    let files = inputs.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
    let summary = merge(files)?;
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))?;
    write_summary(out, &summary)?;
    Ok(summary)
}

/// One line per report for the terminal.
pub fn describe(s: &RunSummary) -> String {
    let mut out = String::new();
    for r in &s.reports {
        let verdict = if r.pass { "pass" } else { "FAIL" };
        out.push_str(&format!("{} [{}]: {}\n", r.study, r.quantity, verdict));
        if let Some(g) = &r.regression {
            out.push_str(&format!("  slope {:.6} +- {:.6} on {}", g.slope, 1.96 * g.slope_se, g.abscissa));
            if let Some(t) = &r.target {
                out.push_str(&format!(", target {:.6} ({}) within {}%", t.value, t.formula, t.relative_tolerance * 100.0));
            }
            out.push('\n');
        }
        for c in r.checks.iter().filter(|c| !c.pass) {
            out.push_str(&format!("  failed: {} (value {}, reference {}, bound {})\n", c.name, c.value, c.reference, c.bound));
        }
    }
    for u in &s.underpowered {
        out.push_str(&format!("warning: underpowered: {u}\n"));
    }
    out
}
