use proptest::prelude::*;
use stripnet_core::config::Config;
use stripnet_core::harness::{self, parse_csv, render_summary, summarize, CsvRow, SimArgs, SweepArgs, CSV_HEADER};
use stripnet_core::sim::SimMetrics;

const SWEEP: &str = "\
sweep.axis = mobility
sweep.levels = 2, 7.5
sweep.protocols = aodv_mod, fsr
sweep.replications = 2
sweep.base_seed = 11
sim.nodes = 12
sim.width = 600
sim.height = 600
sim.duration = 30
traffic.random_flows = 3
traffic.interval = 0.25
";

fn sweep(text: &str, jobs: usize) -> (String, String) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let c: Config = text.parse().unwrap();
    let mut stdout = Vec::new();
    let args = SweepArgs {
        seed: None,
        jobs: Some(jobs),
        out: Some(&out),
    };
    harness::cmd_sweep(&c, &args, &mut stdout).unwrap();
    (std::fs::read_to_string(out).unwrap(), String::from_utf8(stdout).unwrap())
}

#[test]
fn printed_summary_is_recomputable_from_the_csv() {
    let (csv, stdout) = sweep(SWEEP, 3);
    let rows = parse_csv(&csv).unwrap();
    assert_eq!(rows.len(), 2 * 2 * 2);
    let mut expected = Vec::new();
    render_summary(&summarize(&rows), &mut expected).unwrap();
    let expected = String::from_utf8(expected).unwrap();
    assert!(stdout.ends_with(&expected), "{stdout}\n---\n{expected}");
}

#[test]
fn sweep_output_is_byte_identical_across_reruns_and_job_counts() {
    let (a, _) = sweep(SWEEP, 1);
    let (b, _) = sweep(SWEEP, 4);
    let (c, _) = sweep(SWEEP, 1);
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn sweep_seeds_ignore_protocol_position() {
    let (a, _) = sweep(SWEEP, 2);
    let (b, _) = sweep(&SWEEP.replace("aodv_mod, fsr", "fsr"), 2);
    let fsr_rows = |csv: &str| -> Vec<String> { csv.lines().filter(|l| l.starts_with("fsr,")).map(str::to_string).collect() };
    assert_eq!(fsr_rows(&a), fsr_rows(&b));
}

#[test]
fn failed_runs_are_flagged_and_the_csv_stays_complete() {
    // Flows name a node that only exists at the larger level.
    let plan = "\
sweep.axis = scalability
sweep.levels = 3, 6
sweep.protocols = aodv
sweep.replications = 1
sim.duration = 5
sim.width = 300
sim.height = 300
traffic.flows = 0-5
traffic.random_flows = 0
";
    let (csv, stdout) = sweep(plan, 2);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(&",ERR".repeat(7)), "{}", lines[1]);
    assert!(!lines[2].contains("ERR"));
    assert!(stdout.contains("failed"));
    let rows = parse_csv(&csv).unwrap();
    let summary = summarize(&rows);
    assert_eq!((summary[0].runs, summary[0].failed), (0, 1));
    assert_eq!((summary[1].runs, summary[1].failed), (1, 0));
}

#[test]
fn analytic_and_sim_outputs_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let c: Config = "sim.nodes = 10\nsim.duration = 20\nsim.width = 500\nsim.height = 500\ntraffic.random_flows = 2\n"
        .parse()
        .unwrap();
    let mut outputs = Vec::new();
    for tag in ["a", "b"] {
        let analytic = dir.path().join(format!("{tag}.analytic.csv"));
        let csv = dir.path().join(format!("{tag}.csv"));
        let trace = dir.path().join(format!("{tag}.tsv"));
        let mut sink = Vec::new();
        harness::cmd_analytic(&c, Some(&analytic), &mut sink).unwrap();
        let args = SimArgs {
            protocol: Some("dsr_mod"),
            seed: Some(99),
            trace: Some(&trace),
            out: Some(&csv),
        };
        harness::cmd_sim(&c, &args, &mut sink).unwrap();
        outputs.push([analytic, csv, trace].map(|p| std::fs::read(p).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

fn metrics() -> impl Strategy<Value = Option<SimMetrics>> {
    let counts = (1.0f64..1e4, 0u64..1_000_000, 0u64..1_000_000, 0u64..1_000_000, 0u64..1u64 << 40);
    prop::option::weighted(
        0.8,
        counts.prop_map(|(duration, sent, control, bytes, delay)| {
            let delivered = sent / 2;
            SimMetrics::from_counts(duration, sent, delivered, bytes, control, delay as u128 * delivered as u128)
        }),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_rows_round_trip(
        rows in prop::collection::vec(
            (prop::sample::select(vec!["aodv", "dsr_mod", "fsr"]), prop::sample::select(vec![2.0, 7.5, 25.0]), 0u32..5, any::<u64>(), metrics()),
            1..20,
        )
    ) {
        let rows: Vec<CsvRow> = rows
            .into_iter()
            .map(|(protocol, level, replication, seed, metrics)| CsvRow {
                protocol: protocol.into(),
                axis: "mobility".into(),
                level: f64::to_string(&level),
                replication,
                seed,
                metrics,
            })
            .collect();
        let mut text = format!("{CSV_HEADER}\n");
        for r in &rows {
            text.push_str(&r.render());
            text.push('\n');
        }
        let parsed = parse_csv(&text).unwrap();
        prop_assert_eq!(parsed.len(), rows.len());
        for (p, r) in parsed.iter().zip(&rows) {
            prop_assert_eq!(&p.protocol, &r.protocol);
            prop_assert_eq!(p.seed, r.seed);
            match (&p.values, &r.metrics) {
                (None, None) => {}
                (Some((thr, e2ed, nrl, control)), Some(m)) => {
                    prop_assert_eq!(*thr, m.throughput);
                    prop_assert_eq!(*e2ed, m.e2ed);
                    prop_assert_eq!(*nrl, m.nrl);
                    prop_assert_eq!(*control, m.control_transmissions);
                }
                _ => prop_assert!(false, "failure flag lost"),
            }
        }
        for s in summarize(&parsed) {
            prop_assert_eq!(s.runs + s.failed, parsed.iter().filter(|p| p.protocol == s.protocol && p.level == s.level).count());
        }
    }
}
