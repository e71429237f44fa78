//! The `analytic`, `mc`, `sim` and `sweep` subcommands, writing their reports
//! to any [`Write`] so they can be driven from the binary or from tests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::config::{self, Config, ExperimentPlan, McSettings, StripSettings};
use crate::connectivity::{self, ConnectivityReport, SegmentDistribution, StreamLoad, StreamSpec};
use crate::error::HarnessError;
use crate::linktime::{self, Direction, LinkTimeReport};
use crate::mc::{self, McConfig, McEstimate};
use crate::protocols::{self, ProtocolConfig, ProtocolRun};
use crate::sim::{write_trace, RunOptions, SimMetrics};

pub const CSV_HEADER: &str =
    "protocol,axis,level,replication,seed,data_sent,data_delivered,bytes_delivered,throughput_Bps,e2ed_s,nrl,control_tx";

/// Largest |z| accepted by the Monte Carlo comparison.
pub const Z_LIMIT: f64 = 3.0;

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    /// A statistical check failed; exit code 1.
    Fail,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |e| HarnessError::io(path, e)
}

fn stdout_err(e: io::Error) -> HarnessError {
    HarnessError::io(Path::new("<stdout>"), e)
}

/// Every analytic figure the `analytic` command reports.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReport {
    pub m: f64,
    pub stream_phi: Vec<f64>,
    pub segment_phi: Vec<f64>,
    pub pmf_head: Vec<Vec<f64>>,
    pub total_phi: f64,
    pub connectivity: ConnectivityReport,
    pub links: Vec<LinkTimeReport>,
    /// Pairwise indirect probabilities and chain with `P_link` folded in, per direction.
    pub coupled: Vec<(Vec<f64>, f64)>,
}

impl AnalyticReport {
    pub fn compute(c: &Config) -> Result<Self, HarnessError> {
        let strip = StripSettings::from_config(c).map_err(|e| c.wrap(e))?;
        let pmf_terms = c.u64_or("analytic.pmf_terms", 5).map_err(|e| c.wrap(e))?;
        let (kin, mode) = config::kinematics(c).map_err(|e| c.wrap(e))?;
        let model = connectivity::StripModel::new(strip.d, strip.n_segments, strip.mu, strip.sigma2, strip.beta)?;
        let m = model.m();
        let mut loads = Vec::new();
        let mut stream_phi = Vec::new();
        for &(rate, offset, length) in &strip.streams {
            let spec = StreamSpec {
                rate,
                strip_offset: offset,
                strip_length: length,
                variance_scale: strip.sigma2,
            };
            spec.validate()?;
            let phi = connectivity::steady_state_intensity(&spec, strip.mu, strip.horizon, strip.quadrature_steps)?;
            stream_phi.push(phi);
            loads.push(StreamLoad { phi, spec });
        }
        let segment_phi = connectivity::segment_intensities(&loads, m, strip.d, strip.n_segments)?;
        let pmf_head = segment_phi
            .iter()
            .map(|&phi| {
                let dist = SegmentDistribution::new(phi)?;
                Ok((0..pmf_terms).map(|n| dist.pmf(n)).collect())
            })
            .collect::<Result<Vec<Vec<f64>>, crate::ModelError>>()?;
        let total_phi = connectivity::total_intensity(&loads, m, strip.d, strip.n_segments)?;
        let report = ConnectivityReport::for_strip(&model, strip.quadrature_steps)?;
        let mut links = Vec::new();
        let mut coupled = Vec::new();
        for direction in [Direction::Same, Direction::Opposite] {
            let link = LinkTimeReport::compute_with(&kin, direction, mode)?;
            let direct = &report.per_segment_direct;
            let pairwise = direct
                .windows(2)
                .map(|w| linktime::coupled_indirect(w[0], w[1], link.p_link))
                .collect::<Result<Vec<_>, _>>()?;
            let chain = linktime::coupled_chain(direct, direct.len(), link.p_link)?;
            links.push(link);
            coupled.push((pairwise, chain));
        }
        Ok(AnalyticReport {
            m,
            stream_phi,
            segment_phi,
            pmf_head,
            total_phi,
            connectivity: report,
            links,
            coupled,
        })
    }

    /// `(section, quantity, index, value)` rows.
    pub fn rows(&self) -> Vec<(String, String, String, String)> {
        let mut rows = Vec::new();
        let mut push = |section: &str, q: &str, i: String, v: String| rows.push((section.into(), q.into(), i, v));
        push("strip", "m", "-".into(), self.m.to_string());
        for (k, phi) in self.stream_phi.iter().enumerate() {
            push("population", "stream_phi", (k + 1).to_string(), phi.to_string());
        }
        for (k, phi) in self.segment_phi.iter().enumerate() {
            push("population", "phi", (k + 1).to_string(), phi.to_string());
            for (n, p) in self.pmf_head[k].iter().enumerate() {
                push("population", "pmf", format!("{}:{n}", k + 1), p.to_string());
            }
        }
        push("population", "phi_total", "-".into(), self.total_phi.to_string());
        let c = &self.connectivity;
        for (k, p) in c.per_segment_direct.iter().enumerate() {
            push("connectivity", "P_direct", (k + 1).to_string(), p.to_string());
        }
        for (k, p) in c.pairwise_indirect.iter().enumerate() {
            push("connectivity", "P_indirect", (k + 1).to_string(), p.to_string());
            push("connectivity", "efficiency_pct", (k + 1).to_string(), c.efficiency[k].to_string());
        }
        push("connectivity", "chain", "-".into(), c.chain.to_string());
        for (link, (pairwise, chain)) in self.links.iter().zip(&self.coupled) {
            let dir = link.direction.to_string();
            let section = format!("link_{dir}");
            push(&section, "V_c", "-".into(), link.speed_levels.to_string());
            push(&section, "t_comm_same", "-".into(), link.t_comm_same.to_string());
            push(&section, "t_comm_diff", "-".into(), link.t_comm_diff.to_string());
            push(&section, "CT", "-".into(), link.ct.to_string());
            push(&section, "p_break", "-".into(), link.p_break.to_string());
            push(&section, "P_link_raw", "-".into(), link.p_link_raw.to_string());
            push(&section, "P_link", "-".into(), link.p_link.to_string());
            push(&section, "degenerate", "-".into(), link.is_degenerate().to_string());
            for (k, p) in pairwise.iter().enumerate() {
                push(&section, "P_indirect_coupled", (k + 1).to_string(), p.to_string());
            }
            push(&section, "chain_coupled", "-".into(), chain.to_string());
        }
        rows
    }

    pub fn render(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "decay rate m = {:.6e}", self.m)?;
        writeln!(w)?;
        writeln!(w, "population")?;
        for (k, phi) in self.stream_phi.iter().enumerate() {
            writeln!(w, "  stream {}  phi = {phi:.6}", k + 1)?;
        }
        for (k, phi) in self.segment_phi.iter().enumerate() {
            let head: Vec<String> = self.pmf_head[k].iter().map(|p| format!("{p:.6}")).collect();
            writeln!(w, "  segment {}  phi = {phi:.6}  pmf[0..] = {}", k + 1, head.join(" "))?;
        }
        writeln!(w, "  all segments  phi = {:.6}", self.total_phi)?;
        writeln!(w)?;
        let c = &self.connectivity;
        writeln!(w, "connectivity")?;
        for (k, p) in c.per_segment_direct.iter().enumerate() {
            writeln!(w, "  P_{}  direct = {p:.9}", k + 1)?;
        }
        for (k, p) in c.pairwise_indirect.iter().enumerate() {
            writeln!(w, "  P_{}''  indirect = {p:.9}  efficiency = {:.4}%", k + 1, c.efficiency[k])?;
        }
        writeln!(w, "  chain = {:.9}", c.chain)?;
        for (link, (pairwise, chain)) in self.links.iter().zip(&self.coupled) {
            writeln!(w)?;
            writeln!(w, "link time, {} direction", link.direction)?;
            writeln!(w, "  V_c = {}", link.speed_levels)?;
            writeln!(w, "  t_comm_same = {:.6} s  t_comm_diff = {:.6} s", link.t_comm_same, link.t_comm_diff)?;
            writeln!(w, "  CT = {:.6} s  T/CT = {:.6}", link.ct, link.p_break)?;
            let mut note = String::new();
            if link.p_link_raw != link.p_link {
                note.push_str("  (clamped)");
            }
            if link.is_degenerate() {
                note.push_str("  degenerate: single speed level");
            }
            writeln!(w, "  P_link = {}  raw = {:.6}{note}", link.p_link, link.p_link_raw)?;
            let coupled: Vec<String> = pairwise.iter().map(|p| format!("{p:.9}")).collect();
            writeln!(w, "  coupled indirect = [{}]  coupled chain = {chain:.9}", coupled.join(", "))?;
        }
        Ok(())
    }
}

/// Prints the analytic report and optionally writes it as CSV.
pub fn cmd_analytic(c: &Config, csv: Option<&Path>, w: &mut dyn Write) -> Result<Status, HarnessError> {
    let report = AnalyticReport::compute(c)?;
    if let Some(path) = csv {
        let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
        let mut body = String::from("section,quantity,index,value\n");
        for (s, q, i, v) in report.rows() {
            body.push_str(&format!("{s},{q},{i},{v}\n"));
        }
        out.write_all(body.as_bytes()).and_then(|_| out.flush()).map_err(io_err(path))?;
    }
    report.render(w).map_err(stdout_err)?;
    Ok(Status::Pass)
}

/// One analytic-versus-Monte-Carlo comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct McRow {
    pub quantity: String,
    pub analytic: f64,
    pub estimate: Option<McEstimate>,
    pub z: Option<f64>,
    pub passed: bool,
    pub note: String,
}

impl McRow {
    fn compare(quantity: String, analytic: f64, estimate: McEstimate) -> Self {
        let z = estimate.z_score(analytic);
        McRow {
            quantity,
            analytic,
            estimate: Some(estimate),
            z: Some(z),
            passed: z.abs() <= Z_LIMIT,
            note: String::new(),
        }
    }
}

/// Runs every Monte Carlo check of the config.
pub fn mc_rows(s: &McSettings, c: &Config) -> Result<Vec<McRow>, HarnessError> {
    let strip = StripSettings::from_config(c).map_err(|e| c.wrap(e))?;
    let (kin, _) = config::kinematics(c).map_err(|e| c.wrap(e))?;
    let mc_cfg = |samples: u64, salt: u64| McConfig::new(samples, config::mix64(s.seed ^ salt), s.batches);
    let mut rows = Vec::new();

    for (k, &(m, d, i)) in s.grid.iter().enumerate() {
        let analytic = connectivity::direct_comm_probability(m, d, i, strip.quadrature_steps)?;
        let est = mc::estimate_direct_prob(m, d, i, &mc_cfg(s.samples, k as u64)?)?;
        rows.push(McRow::compare(format!("P_direct m={m} d={d} i={i}"), analytic, est));
    }

    let (rate, mu, len) = (s.population_rate, s.population_mu, s.population_length);
    if !(mu > 0.0) {
        return Err(c.wrap(c.invalid("mc.population_mu", "must be positive")));
    }
    let horizon = (mc::WARMUP_TRAVERSALS + 1.0) * len / mu;
    let spec = StreamSpec {
        rate,
        strip_offset: 0.0,
        strip_length: len,
        variance_scale: 0.0,
    };
    let phi = connectivity::stream_intensity(&spec, mu, horizon, strip.quadrature_steps.max(100))?;
    let pop = mc::simulate_population(rate, mu, 0.0, len, horizon, &mc_cfg(s.population_samples, 1 << 32)?)?;
    let dist = SegmentDistribution::new(phi)?;
    rows.push(McRow::compare("population mean".into(), phi, pop.mean()));
    for z in [0.5, 0.9] {
        rows.push(McRow::compare(format!("population pgf(z={z})"), dist.pgf(z)?, pop.pgf(z)));
    }
    let mode = phi.floor() as u64;
    for n in [mode.saturating_sub(2), mode, mode + 2] {
        rows.push(McRow::compare(format!("population pmf(n={n})"), dist.pmf(n), pop.pmf(n)));
    }
    let chi = pop.chi_square(phi)?;
    rows.push(McRow {
        quantity: format!("population chi-square ({} dof)", chi.dof),
        analytic: chi.critical,
        estimate: None,
        z: None,
        passed: chi.passes(),
        note: format!("statistic {:.4} vs 1% critical {:.4}", chi.statistic, chi.critical),
    });

    for (k, direction) in [Direction::Same, Direction::Opposite].into_iter().enumerate() {
        let est = mc::estimate_ct(&kin, direction, &mc_cfg(s.ct_samples, (2 + k as u64) << 32)?)?;
        match (est.pair_duration, est.ct) {
            (Some(pair), Some(ct)) => {
                rows.push(McRow::compare(
                    format!("pair link duration ({direction})"),
                    est.analytic_pair_duration,
                    pair,
                ));
                rows.push(McRow::compare(format!("CT ({direction})"), est.analytic_ct, ct));
            }
            _ => rows.push(McRow {
                quantity: format!("CT ({direction})"),
                analytic: est.analytic_ct,
                estimate: None,
                z: None,
                passed: true,
                note: "degenerate: single speed level, links never break".into(),
            }),
        }
    }
    Ok(rows)
}

fn render_mc(rows: &[McRow], w: &mut dyn Write) -> io::Result<()> {
    writeln!(
        w,
        "{:<36} {:>14} {:>14} {:>12} {:>8}  result",
        "quantity", "analytic", "mc_mean", "std_error", "|z|"
    )?;
    for r in rows {
        let (mean, se) = r
            .estimate
            .map_or(("-".to_string(), "-".to_string()), |e| (format!("{:.8}", e.mean), format!("{:.3e}", e.std_error)));
        let z = r.z.map_or("-".to_string(), |z| format!("{:.3}", z.abs()));
        let verdict = if r.passed { "ok" } else { "FAIL" };
        let note = if r.note.is_empty() { String::new() } else { format!("  {}", r.note) };
        writeln!(w, "{:<36} {:>14.8} {:>14} {:>12} {:>8}  {verdict}{note}", r.quantity, r.analytic, mean, se, z)?;
    }
    Ok(())
}

/// Compares analytic values with Monte Carlo estimates; fails when any
/// |z| exceeds [`Z_LIMIT`] or the chi-square test rejects.
pub fn cmd_mc(
    c: &Config,
    samples: Option<u64>,
    seed: Option<u64>,
    csv: Option<&Path>,
    w: &mut dyn Write,
) -> Result<Status, HarnessError> {
    let mut settings = McSettings::from_config(c).map_err(|e| c.wrap(e))?;
    if let Some(n) = samples {
        settings.samples = n;
    }
    if let Some(s) = seed {
        settings.seed = s;
    }
    McConfig::new(settings.samples, settings.seed, settings.batches)?;
    let rows = mc_rows(&settings, c)?;
    if let Some(path) = csv {
        let mut body = String::from("quantity,analytic,mc_mean,std_error,z,passed\n");
        for r in &rows {
            let (mean, se) = r
                .estimate
                .map_or(("NA".to_string(), "NA".to_string()), |e| (e.mean.to_string(), e.std_error.to_string()));
            let z = r.z.map_or("NA".to_string(), |z| z.to_string());
            body.push_str(&format!("{},{},{mean},{se},{z},{}\n", r.quantity, r.analytic, r.passed));
        }
        std::fs::write(path, body).map_err(io_err(path))?;
    }
    render_mc(&rows, w).map_err(stdout_err)?;
    Ok(if rows.iter().all(|r| r.passed) {
        Status::Pass
    } else {
        Status::Fail
    })
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub protocol: String,
    pub axis: String,
    pub level: String,
    pub replication: u32,
    pub seed: u64,
    /// `None` when the run failed.
    pub metrics: Option<SimMetrics>,
}

impl CsvRow {
    pub fn render(&self) -> String {
        let head = format!("{},{},{},{},{}", self.protocol, self.axis, self.level, self.replication, self.seed);
        match &self.metrics {
            Some(m) => format!(
                "{head},{},{},{},{},{},{},{}",
                m.data_sent,
                m.data_delivered,
                m.bytes_delivered,
                m.throughput,
                m.e2ed,
                m.nrl_display(),
                m.control_transmissions
            ),
            None => format!("{head}{}", ",ERR".repeat(7)),
        }
    }
}

/// Metric columns of a parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub protocol: String,
    pub axis: String,
    pub level: String,
    pub replication: u32,
    pub seed: u64,
    /// `(throughput, e2ed, nrl, control_tx)`; `None` for a failed run.
    pub values: Option<(f64, f64, Option<f64>, u64)>,
}

pub fn parse_csv(text: &str) -> Result<Vec<ParsedRow>, String> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err("missing or unexpected header".into());
    }
    lines
        .enumerate()
        .map(|(k, line)| {
            let bad = || format!("row {}: cannot parse `{line}`", k + 1);
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(bad());
            }
            let values = if f[5] == "ERR" {
                None
            } else {
                let nrl = if f[10] == "NA" {
                    None
                } else {
                    Some(f[10].parse().map_err(|_| bad())?)
                };
                Some((
                    f[8].parse().map_err(|_| bad())?,
                    f[9].parse().map_err(|_| bad())?,
                    nrl,
                    f[11].parse().map_err(|_| bad())?,
                ))
            };
            Ok(ParsedRow {
                protocol: f[0].into(),
                axis: f[1].into(),
                level: f[2].into(),
                replication: f[3].parse().map_err(|_| bad())?,
                seed: f[4].parse().map_err(|_| bad())?,
                values,
            })
        })
        .collect()
}

/// Means over the successful replications of one protocol at one level.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub protocol: String,
    pub level: String,
    pub runs: usize,
    pub failed: usize,
    pub throughput: f64,
    pub e2ed: f64,
    /// Mean over runs where NRL is defined.
    pub nrl: Option<f64>,
    pub control_tx: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Groups rows by (protocol, level) in order of first appearance.
pub fn summarize(rows: &[ParsedRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&ParsedRow>> = BTreeMap::new();
    for r in rows {
        let key = (r.protocol.clone(), r.level.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let members = &groups[&key];
            let ok: Vec<(f64, f64, Option<f64>, u64)> = members.iter().filter_map(|r| r.values).collect();
            let nrls: Vec<f64> = ok.iter().filter_map(|v| v.2).collect();
            SummaryRow {
                protocol: key.0,
                level: key.1,
                runs: ok.len(),
                failed: members.len() - ok.len(),
                throughput: mean(&ok.iter().map(|v| v.0).collect::<Vec<_>>()),
                e2ed: mean(&ok.iter().map(|v| v.1).collect::<Vec<_>>()),
                nrl: if nrls.is_empty() { None } else { Some(mean(&nrls)) },
                control_tx: mean(&ok.iter().map(|v| v.3 as f64).collect::<Vec<_>>()),
            }
        })
        .collect()
}

pub fn render_summary(rows: &[SummaryRow], w: &mut dyn Write) -> io::Result<()> {
    writeln!(
        w,
        "{:<10} {:>8} {:>5} {:>6} {:>16} {:>14} {:>12} {:>14}",
        "protocol", "level", "runs", "failed", "throughput_Bps", "e2ed_s", "nrl", "control_tx"
    )?;
    for r in rows {
        let nrl = r.nrl.map_or("NA".to_string(), |v| format!("{v:.6}"));
        writeln!(
            w,
            "{:<10} {:>8} {:>5} {:>6} {:>16.6} {:>14.6} {:>12} {:>14.2}",
            r.protocol, r.level, r.runs, r.failed, r.throughput, r.e2ed, nrl, r.control_tx
        )?;
    }
    Ok(())
}

fn render_metrics(name: &str, run: &ProtocolRun, w: &mut dyn Write) -> io::Result<()> {
    let m = &run.metrics;
    writeln!(w, "protocol            {name}")?;
    writeln!(w, "flows               {}", run.flows.len())?;
    writeln!(w, "data_sent           {}", m.data_sent)?;
    writeln!(w, "data_delivered      {}", m.data_delivered)?;
    writeln!(w, "data_in_flight      {}", run.data_in_flight)?;
    writeln!(w, "bytes_delivered     {}", m.bytes_delivered)?;
    writeln!(w, "throughput_Bps      {}", m.throughput)?;
    writeln!(w, "e2ed_s              {}", m.e2ed)?;
    writeln!(w, "nrl                 {}", m.nrl_display())?;
    writeln!(w, "control_tx          {}", m.control_transmissions)?;
    writeln!(w, "protocol_stats      {}", run.stats)
}

#[derive(Debug, Clone, Default)]
pub struct SimArgs<'a> {
    pub protocol: Option<&'a str>,
    pub seed: Option<u64>,
    pub trace: Option<&'a Path>,
    /// CSV file the result row is appended to.
    pub out: Option<&'a Path>,
}

/// Runs one simulation.
pub fn cmd_sim(c: &Config, args: &SimArgs<'_>, w: &mut dyn Write) -> Result<Status, HarnessError> {
    let name = args.protocol.unwrap_or_else(|| c.str_or("sim.protocol", "aodv")).to_string();
    let protocol =
        config::protocol(c, &name).map_err(|e| c.wrap(e))?.ok_or_else(|| HarnessError::UnknownProtocol(name.clone()))?;
    let mut scenario = config::scenario(c).map_err(|e| c.wrap(e))?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    let run = protocols::simulate(&scenario, &protocol, RunOptions { trace: args.trace.is_some() })?;
    if let Some(path) = args.trace {
        let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
        write_trace(&mut out, &run.trace).and_then(|_| out.flush()).map_err(io_err(path))?;
    }
    if let Some(path) = args.out {
        let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path).map_err(io_err(path))?;
        let row = CsvRow {
            protocol: name.clone(),
            axis: "single".into(),
            level: scenario.node_count.to_string(),
            replication: 0,
            seed: scenario.seed,
            metrics: Some(run.metrics.clone()),
        };
        let mut text = String::new();
        if fresh {
            text.push_str(CSV_HEADER);
            text.push('\n');
        }
        text.push_str(&row.render());
        text.push('\n');
        file.write_all(text.as_bytes()).map_err(io_err(path))?;
    }
    render_metrics(&name, &run, w).map_err(stdout_err)?;
    Ok(Status::Pass)
}

#[derive(Debug, Clone, Default)]
pub struct SweepArgs<'a> {
    pub seed: Option<u64>,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    pub out: Option<&'a Path>,
}

/// Runs every simulation of a plan and writes one CSV row per run in plan
/// order. Returns the rows as written.
pub fn cmd_sweep(c: &Config, args: &SweepArgs<'_>, w: &mut dyn Write) -> Result<Vec<CsvRow>, HarnessError> {
    let mut plan = ExperimentPlan::from_config(c).map_err(|e| c.wrap(e))?;
    if let Some(seed) = args.seed {
        plan.base_seed = seed;
    }
    let out_path = match (args.out, plan.output.as_deref()) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => p.into(),
        (None, None) => {
            return Err(c.wrap(crate::ConfigError::general(
                "sweep needs an output path: pass --out or set sweep.output",
            )))
        }
    };
    let file = File::create(&out_path).map_err(io_err(&out_path))?;

    let mut jobs = Vec::with_capacity(plan.run_count());
    for (li, &level) in plan.levels.iter().enumerate() {
        for (name, protocol) in &plan.protocols {
            for rep in 0..plan.replications {
                jobs.push((li, level, name.clone(), *protocol, rep));
            }
        }
    }
    let run_one = |&(li, level, ref name, protocol, rep): &(usize, f64, String, ProtocolConfig, u32)| {
        let seed = config::run_seed(plan.base_seed, li, rep);
        let scenario = plan.scenario_at(level, seed);
        let result = protocols::simulate(&scenario, &protocol, RunOptions { trace: true });
        let row = CsvRow {
            protocol: name.clone(),
            axis: plan.axis.name().into(),
            level: level.to_string(),
            replication: rep,
            seed,
            metrics: result.as_ref().ok().map(|r| r.metrics.clone()),
        };
        (row, result.err())
    };
    let threads = args.jobs.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HarnessError::io(Path::new("<thread pool>"), io::Error::other(e)))?;
    let results: Vec<(CsvRow, Option<crate::SimError>)> = pool.install(|| jobs.par_iter().map(run_one).collect());

    let mut text = String::from(CSV_HEADER);
    text.push('\n');
    for (row, _) in &results {
        text.push_str(&row.render());
        text.push('\n');
    }
    let mut out = BufWriter::new(file);
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io_err(&out_path))?;

    let parsed = parse_csv(&text).expect("rows render in the parsed format");
    let mut report = || -> io::Result<()> {
        writeln!(w, "{} runs written to {}", results.len(), out_path.display())?;
        for (row, err) in &results {
            if let Some(e) = err {
                writeln!(w, "run {} level {} replication {} failed: {e}", row.protocol, row.level, row.replication)?;
            }
        }
        render_summary(&summarize(&parsed), w)
    };
    report().map_err(stdout_err)?;
    Ok(results.into_iter().map(|(r, _)| r).collect())
}
