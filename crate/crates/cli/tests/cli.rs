use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_stripnet");

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn stripnet(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn analytic_reports_every_quantity() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let o = stripnet(&["analytic", "--config", p(&config("default.conf")), "--out", p(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    for needle in ["phi =", "pmf[0..]", "P_1  direct", "P_1''", "efficiency", "chain", "CT =", "P_link"] {
        assert!(text.contains(needle), "missing `{needle}`");
    }
    let rows = std::fs::read_to_string(&csv).unwrap();
    assert!(rows.starts_with("section,quantity,index,value\n"));
    for line in rows.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f.len(), 4);
        let probability = matches!(f[1], "P_direct" | "P_indirect" | "chain" | "P_link" | "chain_coupled" | "pmf");
        if probability {
            let v: f64 = f[3].parse().unwrap();
            assert!((0.0..=1.0).contains(&v), "{line}");
        }
    }
}

#[test]
fn analytic_flags_single_speed_level() {
    let o = stripnet(&["analytic", "--config", p(&config("degenerate.conf"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("V_c = 0"));
    assert!(text.contains("P_link = 0 "));
    assert!(text.contains("degenerate"));
}

#[test]
fn analytic_logs_raw_value_when_clamping() {
    let o = stripnet(&["analytic", "--config", p(&config("table1.conf"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("P_link = 0  raw = -1.972477  (clamped)"), "{text}");
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "strip.d = 250\n# comment\nstrip.mu = fast\n").unwrap();
    let o = stripnet(&["analytic", "--config", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = stripnet(&["analytic", "--config", p(&dir.path().join("missing.conf"))]);
    assert_eq!(o.status.code(), Some(2));

    let o = stripnet(&["analytic"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn mc_passes_and_repeats_exactly() {
    let conf = config("degenerate.conf");
    let args = ["mc", "--config", p(&conf), "--seed", "5"];
    let a = stripnet(&args);
    assert_eq!(a.status.code(), Some(0), "{}{}", stdout(&a), stderr(&a));
    assert!(stdout(&a).contains("degenerate"));
    let b = stripnet(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn mc_standard_errors_scale_with_samples() {
    let dir = tempfile::tempdir().unwrap();
    let run = |samples: &str, name: &str| {
        let csv = dir.path().join(name);
        let o = stripnet(&[
            "mc",
            "--config",
            p(&config("degenerate.conf")),
            "--samples",
            samples,
            "--out",
            p(&csv),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let text = std::fs::read_to_string(csv).unwrap();
        let line = text.lines().nth(1).unwrap().to_string();
        line.split(',').nth(3).unwrap().parse::<f64>().unwrap()
    };
    let small = run("1000", "small.csv");
    let large = run("100000", "large.csv");
    let ratio = small / large;
    assert!((7.0..14.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn mc_rejects_too_few_samples() {
    let o = stripnet(&["mc", "--config", p(&config("degenerate.conf")), "--samples", "100"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("samples"));
}

#[test]
fn sim_sanity_throughput_and_csv_append() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("runs.csv");
    for _ in 0..2 {
        let o = stripnet(&["sim", "--config", p(&config("sanity.conf")), "--out", p(&csv)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("throughput_Bps      51.2\n"));
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("protocol,axis,level"));
    assert_eq!(lines[1], lines[2]);
    assert_eq!(lines[1].split(',').nth(8), Some("51.2"));
}

#[test]
fn sim_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path();
    let run = |tag: &str, seed: &str| {
        let csv = base.join(format!("{tag}.csv"));
        let trace = base.join(format!("{tag}.tsv"));
        let o = stripnet(&[
            "sim",
            "--config",
            p(&config("sweep_small.conf")),
            "--protocol",
            "dsr",
            "--seed",
            seed,
            "--out",
            p(&csv),
            "--trace",
            p(&trace),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (std::fs::read(csv).unwrap(), std::fs::read(trace).unwrap())
    };
    let a = run("a", "3");
    let b = run("b", "3");
    let c = run("c", "4");
    assert_eq!(a, b);
    assert_ne!(a.1, c.1);
}

#[test]
fn sim_trace_shows_modified_ring_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.tsv");
    let o = stripnet(&["sim", "--config", p(&config("ers_unreachable.conf")), "--trace", p(&trace)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(trace).unwrap();
    let ttls: Vec<&str> = text
        .lines()
        .filter(|l| l.contains("\ttx\t0\t") && l.contains("rreq:ttl="))
        .map(|l| l.split("rreq:ttl=").nth(1).unwrap().split('\t').next().unwrap())
        .collect();
    assert_eq!(&ttls[..3], ["2", "6", "35"]);
}

#[test]
fn sim_protocol_override_selects_preset() {
    let o = stripnet(&["sim", "--config", p(&config("line3.conf")), "--protocol", "aodv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("protocol            aodv\n"));
    let o = stripnet(&["sim", "--config", p(&config("line3.conf"))]);
    let text = stdout(&o);
    assert!(text.contains("control_tx          4\n"), "{text}");
    assert!(text.contains("nrl                 0.4\n"), "{text}");
}

#[test]
fn sim_unknown_protocol_exits_2() {
    let o = stripnet(&["sim", "--config", p(&config("sanity.conf")), "--protocol", "olsr"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("olsr"));
}

#[test]
fn sweep_writes_plan_rows_in_order_regardless_of_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let csv = dir.path().join(name);
        let o = stripnet(&["sweep", "--config", p(&config("sweep_small.conf")), "--out", p(&csv), "--jobs", jobs]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (std::fs::read_to_string(csv).unwrap(), stdout(&o))
    };
    let (one, summary_one) = run("one.csv", "1");
    let (four, summary_four) = run("four.csv", "4");
    assert_eq!(one, four);
    assert_eq!(summary_one.lines().skip(1).collect::<Vec<_>>(), summary_four.lines().skip(1).collect::<Vec<_>>());
    let lines: Vec<&str> = one.lines().collect();
    assert_eq!(lines.len(), 1 + 8);
    let keys: Vec<(String, String, String)> = lines[1..]
        .iter()
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 12);
            (f[0].into(), f[2].into(), f[3].into())
        })
        .collect();
    assert_eq!(keys[0], ("aodv".into(), "25".into(), "0".into()));
    assert_eq!(keys[3], ("dsr".into(), "25".into(), "1".into()));
    assert_eq!(keys[7], ("dsr".into(), "50".into(), "1".into()));
}

#[test]
fn sweep_fails_before_running_when_output_is_unwritable() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("no/such/dir/out.csv");
    let o = stripnet(&["sweep", "--config", p(&config("fig3_scalability.conf")), "--out", p(&target)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).is_empty());
}
