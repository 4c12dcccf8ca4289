use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use anyhow::{anyhow, bail, Context, Result};
use critfpp_core::PRNG_ALGORITHM;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, StudyKind};

pub const RECORD_FORMAT: &str = "critfpp-records-v1";
pub const BINARY_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block written at the top of every output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format: String,
    pub binary_version: String,
    pub config_hash: String,
    pub prng: String,
    /// Tolerances actually used, by criterion key.
    pub tolerances: BTreeMap<String, f64>,
    pub config: RunConfig,
}

impl Header {
    pub fn new(config: &RunConfig) -> Self {
        Header {
            format: RECORD_FORMAT.into(),
            binary_version: BINARY_VERSION.into(),
            config_hash: config.hash(),
            prng: PRNG_ALGORITHM.into(),
            tolerances: config.tolerances.clone(),
            config: config.clone(),
        }
    }
}

/// Quantities measured on one sample at one scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Measure {
    Passage {
        t: f64,
        t_bernoulli: f64,
        /// Sites of the whole field with `t^B > t`.
        site_violations: u64,
    },
    Duality {
        t_bernoulli: f64,
        circuits: u64,
        closed_on_geodesic: u64,
    },
    Hierarchy {
        hierarchy: u64,
        peeling: u64,
        oracle_failure: Option<String>,
        diameters: Vec<f64>,
    },
    Martingale {
        radius: u32,
        m: Vec<u32>,
        delta: Vec<f64>,
        delta_bernoulli: Vec<f64>,
        inner_var: Vec<f64>,
        inner_var_bernoulli: Vec<f64>,
        total: f64,
        total_bernoulli: f64,
    },
    YTilde {
        nested: f64,
        single: f64,
        min_y: f64,
    },
    Arm {
        hit: bool,
    },
    Chars {
        s1: f64,
        s2: f64,
        terms: u32,
    },
}

/// One line per (sample, scale).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub study: StudyKind,
    pub index: u64,
    pub seed: u64,
    pub scale: u32,
    pub values: Measure,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum Line {
    Header(Box<Header>),
    Sample(SampleRecord),
}

pub fn write_records(mut w: impl Write, header: &Header, records: &[SampleRecord]) -> Result<()> {
    serde_json::to_writer(&mut w, &Line::Header(Box::new(header.clone())))?;
    w.write_all(b"\n")?;
    for r in records {
        serde_json::to_writer(&mut w, &SerLine::Sample(r))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

// borrowing twin of `Line` for writing
#[derive(Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum SerLine<'a> {
    Sample(&'a SampleRecord),
}

/// A record file: its header and sample lines in file order.
#[derive(Clone, Debug, PartialEq)]
pub struct RecordFile {
    pub source: String,
    pub header: Header,
    pub records: Vec<SampleRecord>,
}

pub fn read_records(source: &str, r: impl BufRead) -> Result<RecordFile> {
    let mut header = None;
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.with_context(|| format!("{source}: reading line {}", i + 1))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).with_context(|| format!("{source}: line {}", i + 1))?;
        match parsed {
            Line::Header(h) if header.is_none() && records.is_empty() => header = Some(*h),
            Line::Header(_) => bail!("{source}: line {}: unexpected second header", i + 1),
            Line::Sample(s) => {
                if header.is_none() {
                    bail!("{source}: line {}: sample before header", i + 1);
                }
                records.push(s);
            }
        }
    }
    let header = header.ok_or_else(|| anyhow!("{source}: no records"))?;
    if records.is_empty() {
        bail!("{source}: no records");
    }
    if header.format != RECORD_FORMAT {
        bail!("{source}: unsupported format `{}`", header.format);
    }
    Ok(RecordFile { source: source.to_string(), header, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(study: StudyKind, values: Measure) -> SampleRecord {
        SampleRecord { study, index: 3, seed: 0xdead_beef, scale: 16, values }
    }

    #[test]
    fn round_trip_is_exact() {
        let cfg = RunConfig::defaults(StudyKind::Tc);
        let h = Header::new(&cfg);
        let recs = vec![
            sample(StudyKind::Tc, Measure::Passage { t: 0.1 + 0.2, t_bernoulli: 1.0 / 3.0, site_violations: 0 }),
            sample(
                StudyKind::Martingale,
                Measure::Martingale {
                    radius: 64,
                    m: vec![0, 1, 3],
                    delta: vec![f64::MIN_POSITIVE, -2.5e-300, 1e300],
                    delta_bernoulli: vec![0.0; 3],
                    inner_var: vec![1.0 / 7.0; 3],
                    inner_var_bernoulli: vec![0.0; 3],
                    total: std::f64::consts::PI,
                    total_bernoulli: 3.0,
                },
            ),
            sample(StudyKind::Arms, Measure::Arm { hit: true }),
        ];
        let mut buf = Vec::new();
        write_records(&mut buf, &h, &recs).unwrap();
        let back = read_records("mem", buf.as_slice()).unwrap();
        assert_eq!(back.header, h);
        assert_eq!(back.records, recs);
        let mut again = Vec::new();
        write_records(&mut again, &back.header, &back.records).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn empty_input_has_no_records() {
        let e = read_records("empty", &b""[..]).unwrap_err();
        assert!(e.to_string().contains("no records"), "{e}");
        let mut buf = Vec::new();
        write_records(&mut buf, &Header::new(&RunConfig::defaults(StudyKind::Tc)), &[]).unwrap();
        assert!(read_records("bare", buf.as_slice()).unwrap_err().to_string().contains("no records"));
    }

    #[test]
    fn header_names_version_hash_prng_and_tolerances() {
        let cfg = RunConfig::defaults(StudyKind::Duality);
        let mut buf = Vec::new();
        write_records(&mut buf, &Header::new(&cfg), &[]).unwrap();
        let first = String::from_utf8(buf).unwrap();
        for key in ["binary_version", "config_hash", "prng", "tolerances", PRNG_ALGORITHM, &cfg.hash()] {
            assert!(first.contains(key), "{key}");
        }
    }
}
