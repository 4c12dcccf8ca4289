use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use critfpp_runner::criteria::{by_criterion, Outcome, Suite, Verdict, VerifyOptions};
use critfpp_runner::run_suite;

const BIN: &str = env!("CARGO_BIN_EXE_critfpp");

fn critfpp(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("CRITFPP_WORKERS").output().expect("spawn critfpp")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn outcome(id: &str, name: &str, ok: bool, detail: String) -> Outcome {
    Outcome {
        id: id.into(),
        suite: Suite::Oracle,
        name: name.into(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        detail,
    }
}

fn same_files(a: &Path, b: &Path) -> Result<(), String> {
    for f in ["records.jsonl", "report.json", "summary.csv"] {
        let x = std::fs::read(a.join(f)).map_err(|e| format!("{f}: {e}"))?;
        let y = std::fs::read(b.join(f)).map_err(|e| format!("{f}: {e}"))?;
        if x != y {
            return Err(format!("{f} differs"));
        }
    }
    Ok(())
}

fn cli_checks() -> Vec<Outcome> {
    let mut out = Vec::new();
    let tmp = tempfile::tempdir().unwrap();
    let dir = |name: &str| tmp.path().join(name).to_string_lossy().into_owned();

    let d = dir("duality");
    let o = critfpp(&["duality", "--dist", "bernoulli:1", "--n", "64", "--samples", "200", "--seed", "7", "--out", &d]);
    let lines = std::fs::read_to_string(Path::new(&d).join("records.jsonl")).map(|s| s.lines().count()).unwrap_or(0);
    out.push(outcome(
        "C1",
        "`duality --n 64 --samples 200 --seed 7` exits 0 with 200 records",
        o.status.code() == Some(0) && lines == 201,
        format!("exit {:?}, {} record lines", o.status.code(), lines.saturating_sub(1)),
    ));

    let (w1, w8) = (dir("w1"), dir("w8"));
    let args = |w: &'static str, out: &str| {
        critfpp(&["tc", "--dist", "bernoulli:1", "--n", "16..128", "--samples", "200", "--seed", "42", "--workers", w, "--out", out])
    };
    let (a, b) = (args("1", &w1), args("8", &w8));
    let same = same_files(Path::new(&w1), Path::new(&w8));
    out.push(outcome(
        "12",
        "`tc` with --workers 1 and --workers 8 writes byte-identical files",
        a.status.code() != Some(1) && b.status.code() != Some(1) && same.is_ok(),
        format!("exit {:?} / {:?}; {}", a.status.code(), b.status.code(), same.err().unwrap_or_else(|| "identical".into())),
    ));

    let seed9 = dir("seed9");
    critfpp(&["tc", "--n", "16..128", "--samples", "200", "--seed", "9", "--out", &seed9]);
    let (r1, r2) = (dir("r1"), dir("r2"));
    let rec = |d: &str| format!("{d}/records.jsonl");
    let m1 = critfpp(&["report", &rec(&w1), &rec(&seed9), "--out", &r1]);
    let m2 = critfpp(&["report", &rec(&seed9), &rec(&w1), "--out", &r2]);
    let merged = std::fs::read_to_string(Path::new(&r1).join("summary.csv")).unwrap_or_default();
    let again = same_files_report(Path::new(&r1), Path::new(&r2));
    out.push(outcome(
        "C2",
        "`report` pools two seeds, flags the merge and is byte-stable",
        m1.status.code() != Some(1) && m2.status.code() != Some(1) && merged.contains("# merged: 2 files") && again,
        format!("exit {:?}", m1.status.code()),
    ));

    let single = dir("single");
    critfpp(&["report", &rec(&w1), "--out", &single]);
    let reproduced = std::fs::read(Path::new(&single).join("report.json")).ok() == std::fs::read(Path::new(&w1).join("report.json")).ok();
    out.push(outcome("C3", "`report` on a run's records reproduces its report.json", reproduced, String::new()));

    let empty = tmp.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let o = critfpp(&["report", empty.to_str().unwrap(), "--out", &dir("e")]);
    out.push(outcome(
        "C4",
        "`report` on empty input fails with \"no records\"",
        o.status.code() == Some(1) && text(&o).contains("no records"),
        format!("exit {:?}", o.status.code()),
    ));

    let o = critfpp(&["verify", "statistical", "--samples", "10"]);
    out.push(outcome(
        "C5",
        "`verify statistical --samples 10` exits 2 with an underpowered warning",
        o.status.code() == Some(2) && text(&o).contains("underpowered"),
        format!("exit {:?}", o.status.code()),
    ));

    let t = Instant::now();
    let o = critfpp(&["verify", "unit"]);
    let secs = t.elapsed().as_secs_f64();
    out.push(outcome(
        "C6",
        "`verify unit` exits 0 within 60 s",
        o.status.code() == Some(0) && secs < 60.0,
        format!("exit {:?} in {secs:.1} s", o.status.code()),
    ));

    let o = critfpp(&["verify", "oracle"]);
    out.push(outcome("C7", "`verify oracle` exits 0", o.status.code() == Some(0), format!("exit {:?}", o.status.code())));
    out
}

fn same_files_report(a: &Path, b: &Path) -> bool {
    ["report.json", "summary.csv"].iter().all(|f| {
        let x = std::fs::read(a.join(f));
        x.is_ok() && x.ok() == std::fs::read(b.join(f)).ok()
    })
}

fn main() {
    let opts = VerifyOptions::default();
    let mut all = Vec::new();
    for suite in [Suite::Unit, Suite::Oracle, Suite::Statistical] {
        let t = Instant::now();
        all.extend(run_suite(suite, &opts));
        eprintln!("[{suite} suite: {:.0} s]", t.elapsed().as_secs_f64());
    }
    let t = Instant::now();
    all.extend(cli_checks());
    eprintln!("[cli checks: {:.0} s]", t.elapsed().as_secs_f64());

    let mut grouped = by_criterion(&all);
    let rank = |id: &str| match id.parse::<u32>() {
        Ok(n) => (0, n, String::new()),
        Err(_) => (1 + "USC".find(&id[..1]).unwrap_or(3) as u32, 0, id.to_string()),
    };
    grouped.sort_by_key(|g| rank(&g.0));
    let mut failed = 0;
    for (id, verdict, parts) in &grouped {
        let word = if *verdict == Verdict::Pass { "PASS" } else { "FAIL" };
        if *verdict != Verdict::Pass {
            failed += 1;
        }
        let names: Vec<&str> = parts.iter().map(|o| o.name.as_str()).collect();
        println!("{word} [{id}] {}", names.join(" + "));
        for p in parts {
            if !p.detail.is_empty() {
                println!("       {} ({}): {}", p.verdict, p.suite, p.detail);
            }
        }
    }
    println!("{} of {} checks passed", grouped.len() - failed, grouped.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
