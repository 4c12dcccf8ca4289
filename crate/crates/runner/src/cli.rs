use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use crate::config::{parse_tol, Overrides, RunConfig, StudyKind};
use crate::criteria::{self, Suite, VerifyOptions};
use crate::studies::{self, EXIT_ERROR};

#[derive(Debug, Parser)]
#[command(name = "critfpp", version, about = "Critical first-passage percolation on the triangular lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time constant: slope of E T(0, ∂B(n)) against ln n.
    Tc(StudyArgs),
    /// Variance constant: slope of Var T(0, ∂B(n)) against ln n.
    Var(StudyArgs),
    /// Coupling gap (T - T^B) / ln n.
    Gap(StudyArgs),
    /// T^B against the number of disjoint closed circuits.
    Duality(StudyArgs),
    /// Outermost closed circuit sequences checked by the oracle.
    Circuits(StudyArgs),
    /// Martingale differences of T(0, O_n).
    Martingale(StudyArgs),
    /// Nested and single-field gap second moments at level k.
    Ytilde(StudyArgs),
    /// Arm event probabilities against outer radius.
    Arms(StudyArgs),
    /// Characteristic quantile sums of the weight distribution.
    Chars(StudyArgs),
    /// Run an acceptance suite and print the criteria matrix.
    Verify(VerifyArgs),
    /// Recompute reports from record files, pooling several seeds.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Weight distribution, e.g. `bernoulli:1` or `uniform:1,2`.
    #[arg(long)]
    pub dist: Option<String>,
    /// Scales: `a..b` (powers of two), `a,b,c`, or one value.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub inner_samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// `iid` or `planted:<defect>`.
    #[arg(long)]
    pub law: Option<String>,
    /// Largest field radius grown by the chain studies.
    #[arg(long)]
    pub max_radius: Option<u32>,
    /// Smallest ladder scales left out of slope fits.
    #[arg(long)]
    pub window_skip: Option<usize>,
    #[arg(long)]
    pub batches: Option<usize>,
    /// Arm colors, e.g. `oc` or `open,closed,open`.
    #[arg(long)]
    pub sigma: Option<String>,
    /// `full`, `half` or `three_quarter`.
    #[arg(long)]
    pub geometry: Option<String>,
    /// Inner box radius of the arm event.
    #[arg(long)]
    pub inner_radius: Option<u32>,
    #[arg(long, env = "CRITFPP_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, default_value = "critfpp-out")]
    pub out: PathBuf,
    /// Tolerance override `criterion=value`, by name or number; repeatable.
    #[arg(long = "tol")]
    pub tol: Vec<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// `unit`, `oracle` or `statistical`.
    pub suite: Suite,
    /// Outer sample count for every statistical criterion.
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, env = "CRITFPP_WORKERS")]
    pub workers: Option<usize>,
    /// Also write the matrix as JSON into this directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "tol")]
    pub tol: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Record files (`records.jsonl`).
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "critfpp-report")]
    pub out: PathBuf,
}

impl StudyArgs {
    fn overrides(&self) -> Result<Overrides> {
        let mut o = Overrides {
            dist: self.dist.clone(),
            n: self.n.clone().map(crate::config::LadderValue::Text),
            samples: self.samples,
            inner_samples: self.inner_samples,
            seed: self.seed,
            law: self.law.clone(),
            max_radius: self.max_radius,
            window_skip: self.window_skip,
            batches: self.batches,
            sigma: self.sigma.clone(),
            geometry: self.geometry.clone(),
            inner_radius: self.inner_radius,
            tol: Default::default(),
        };
        for t in &self.tol {
            let (k, v) = parse_tol(t)?;
            o.tol.insert(k.to_string(), v);
        }
        Ok(o)
    }

    /// Defaults, then the TOML file, then flags.
    pub fn resolve(&self, study: StudyKind) -> Result<RunConfig> {
        let mut c = RunConfig::defaults(study);
        if let Some(p) = &self.config {
            Overrides::from_toml_file(p)?.apply(&mut c)?;
        }
        self.overrides()?.apply(&mut c)?;
        c.validate()?;
        Ok(c)
    }
}

fn workers(w: Option<usize>) -> usize {
    w.filter(|&w| w > 0).unwrap_or_else(studies::default_workers)
}

fn study_of(c: &Command) -> Option<(StudyKind, &StudyArgs)> {
    Some(match c {
        Command::Tc(a) => (StudyKind::Tc, a),
        Command::Var(a) => (StudyKind::Var, a),
        Command::Gap(a) => (StudyKind::Gap, a),
        Command::Duality(a) => (StudyKind::Duality, a),
        Command::Circuits(a) => (StudyKind::Circuits, a),
        Command::Martingale(a) => (StudyKind::Martingale, a),
        Command::Ytilde(a) => (StudyKind::Ytilde, a),
        Command::Arms(a) => (StudyKind::Arms, a),
        Command::Chars(a) => (StudyKind::Chars, a),
        Command::Verify(_) | Command::Report(_) => return None,
    })
}

/// Run a parsed command, writing human-readable output to `out` and
/// diagnostics to `err`. Returns the exit code.
pub fn execute(cli: &Cli, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            EXIT_ERROR
        }
    }
}

fn dispatch(cli: &Cli, out: &mut impl Write, err: &mut impl Write) -> Result<i32> {
    if let Some((study, args)) = study_of(&cli.command) {
        let c = args.resolve(study)?;
        let s = studies::run(&c, workers(args.workers), &args.out)?;
        write!(out, "{}", studies::describe(&s))?;
        writeln!(out, "wrote {}", args.out.display())?;
        for u in &s.underpowered {
            writeln!(err, "warning: underpowered: {u}")?;
        }
        return Ok(s.exit_code());
    }
    match &cli.command {
        Command::Verify(v) => {
            let mut opts = VerifyOptions { seed: v.seed, samples: v.samples, workers: workers(v.workers), ..Default::default() };
            for t in &v.tol {
                let (k, x) = parse_tol(t)?;
                opts.tolerances.insert(k.to_string(), x);
            }
            let outcomes = criteria::run_suite(v.suite, &opts);
            write!(out, "{}", criteria::matrix(&outcomes))?;
            if outcomes.iter().any(|o| o.verdict == criteria::Verdict::Underpowered) {
                writeln!(err, "warning: underpowered: standard errors too wide to resolve the tolerances at this sample size")?;
            }
            if let Some(dir) = &v.out {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let body = serde_json::json!({ "suite": v.suite, "tolerances": opts.tolerances, "outcomes": outcomes });
                std::fs::write(dir.join("verify.json"), serde_json::to_vec_pretty(&body)?)?;
            }
            Ok(criteria::exit_code(&outcomes))
        }
        Command::Report(r) => {
            let s = studies::report(&r.inputs, &r.out)?;
            write!(out, "{}", studies::describe(&s))?;
            if !s.merged_from.is_empty() {
                writeln!(out, "pooled {} record files", s.merged_from.len())?;
            }
            Ok(s.exit_code())
        }
        _ => unreachable!("study commands handled above"),
    }
}

pub fn main_exit() -> i32 {
    let cli = Cli::parse();
    execute(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::Measure;
    use crate::studies::{EXIT_FAIL, EXIT_PASS, RECORDS_FILE, REPORT_FILE};

    fn run_args(args: &[&str]) -> (i32, String, String) {
        let cli = Cli::try_parse_from(std::iter::once("critfpp").chain(args.iter().copied())).unwrap();
        let (mut o, mut e) = (Vec::new(), Vec::new());
        let code = execute(&cli, &mut o, &mut e);
        (code, String::from_utf8(o).unwrap(), String::from_utf8(e).unwrap())
    }

    #[test]
    fn duality_run_exits_zero_with_exact_records() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, _, err) = run_args(&["duality", "--dist", "bernoulli:1", "--n", "64", "--samples", "200", "--seed", "7", "--workers", "1", "--out", out]);
        assert_eq!(code, EXIT_PASS, "{err}");
        let f = studies::load(&dir.path().join(RECORDS_FILE)).unwrap();
        assert_eq!(f.records.len(), 200);
        assert!(f.records.iter().all(|r| matches!(r.values, Measure::Duality { t_bernoulli, circuits, .. } if t_bernoulli == circuits as f64)));
    }

    #[test]
    fn tc_run_reports_slope_against_the_target() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let (code, text, _) = run_args(&["tc", "--n", "16..64", "--samples", "50", "--window-skip", "0", "--batches", "5", "--out", out]);
        assert!(code == EXIT_PASS || code == EXIT_FAIL);
        assert!(text.contains("0.091888"), "{text}");
        let json = std::fs::read_to_string(dir.path().join(REPORT_FILE)).unwrap();
        assert!(json.contains("I/(2*sqrt(3)*pi)"));
    }

    #[test]
    fn config_file_layers_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        std::fs::write(&cfg, "dist = \"uniform:1,2\"\nn = [8, 16]\nsamples = 30\nseed = 5\n[tol]\n4 = 0.5\n").unwrap();
        let cli = Cli::try_parse_from(["critfpp", "gap", "--config", cfg.to_str().unwrap(), "--samples", "12"]).unwrap();
        let Command::Gap(a) = &cli.command else { panic!() };
        let c = a.resolve(StudyKind::Gap).unwrap();
        assert_eq!((c.dist.as_str(), c.ladder.clone(), c.samples, c.seed), ("uniform:1,2", vec![8, 16], 12, 5));
        assert_eq!(c.tolerance("tc"), 0.5);
    }

    #[test]
    fn malformed_input_exits_one_and_names_the_field() {
        let (code, _, err) = run_args(&["tc", "--dist", "bernoulli:-1", "--out", "/nonexistent-unused"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("dist"), "{err}");
        let (code, _, err) = run_args(&["arms", "--sigma", "oxc", "--out", "/nonexistent-unused"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("sigma"), "{err}");
        let (code, _, err) = run_args(&["tc", "--tol", "bogus=1", "--out", "/nonexistent-unused"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("tol"), "{err}");
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.toml");
        std::fs::write(&cfg, "samles = 3\n").unwrap();
        let (code, _, err) = run_args(&["tc", "--config", cfg.to_str().unwrap()]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("samles"), "{err}");
    }

    #[test]
    fn oversized_field_reports_the_requested_size() {
        let (code, _, err) = run_args(&["duality", "--n", "65536", "--samples", "2", "--out", "/tmp/critfpp-unused"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("bytes"), "{err}");
    }

    #[test]
    fn report_without_records_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.jsonl");
        std::fs::write(&empty, "").unwrap();
        let (code, _, err) = run_args(&["report", empty.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("no records"), "{err}");
        let (code, _, err) = run_args(&["report"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("no records"), "{err}");
    }

    #[test]
    fn verify_unit_exits_zero() {
        let (code, text, _) = run_args(&["verify", "unit"]);
        assert_eq!(code, EXIT_PASS, "{text}");
        assert!(text.contains("13"));
    }
}
