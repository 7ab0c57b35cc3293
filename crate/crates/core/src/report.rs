//! Run execution and the output files: `summary.txt`, `metrics.csv`,
//! `outcomes.csv` and the echoed `config.resolved`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::engine::{self, RequestOutcome, RunOutput, SimConfig, Tier};
use crate::error::{Error, Result};
use crate::metrics::MetricsReport;
use crate::net::{build_topology, Topology};
use crate::workload::{build_catalog, generate_trace, read_trace, write_catalog, Catalog, Trace};

pub const OUTCOMES_HEADER: &str =
    "time_us,client,object,tier,latency_us,disc_us,lan_us,wlan_up_us,wlan_down_us,wan_us,synth_us,valid_us,wlan_b,lan_b,wan_b";

/// Everything a run needs, built from a validated config.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub catalog: Catalog,
    pub topology: Topology,
    pub trace: Trace,
    pub sim: SimConfig,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let catalog = build_catalog(&cfg.catalog, cfg.seed)?;
    let topology = build_topology(&cfg.net_config())?;
    let trace = load_trace(cfg, &catalog)?;
    let sim = cfg.sim_config(catalog.total_bytes());
    Ok(Prepared { catalog, topology, trace, sim })
}

/// Reads the configured trace file, or generates one from the workload.
pub fn load_trace(cfg: &RunConfig, catalog: &Catalog) -> Result<Trace> {
    match &cfg.trace {
        Some(path) => read_trace(path),
        None => generate_trace(&cfg.workload, catalog, cfg.seed),
    }
}

pub fn outcomes_csv(outcomes: &[RequestOutcome]) -> String {
    let mut out = String::with_capacity(64 * (outcomes.len() + 1));
    out.push_str(OUTCOMES_HEADER);
    out.push('\n');
    for o in outcomes {
        let b = &o.breakdown;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            o.request.time_us,
            o.request.client,
            o.request.object,
            o.tier,
            o.latency_total,
            b.discovery,
            b.lan,
            b.wlan_up,
            b.wlan_down,
            b.wan,
            b.synthesis,
            b.validation,
            o.bytes.wlan,
            o.bytes.lan,
            o.bytes.wan
        );
    }
    out
}

pub fn metrics_csv(m: &MetricsReport) -> String {
    let fields = m.fields();
    let header: Vec<&str> = fields.iter().map(|(k, _)| k.as_str()).collect();
    let row: Vec<&str> = fields.iter().map(|(_, v)| v.as_str()).collect();
    format!("{}\n{}\n", header.join(","), row.join(","))
}

pub fn summary_text(cfg: &RunConfig, m: &MetricsReport, trace_checksum: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "seed                     {}", cfg.seed);
    let _ = writeln!(s, "policy                   {}", cfg.policy);
    let _ = writeln!(s, "cooperation              {}", if cfg.cooperation { "on" } else { "off" });
    let _ = writeln!(s, "discovery                {}", cfg.discovery);
    let _ = writeln!(s, "dissemination            {}", cfg.dissemination_mode().name());
    let _ = writeln!(s, "consistency              {}", cfg.consistency);
    let _ = writeln!(s, "trace checksum           {trace_checksum}");
    let _ = writeln!(s, "requests                 {}", m.requests);
    for t in Tier::ALL {
        let _ = writeln!(s, "  {:<26} {:>8}  mean {:.1} us", t.as_str(), m.tier_count(t), m.tier_mean_latency(t));
    }
    let _ = writeln!(s, "hit ratio local          {:.4}", m.hit_ratio_local);
    let _ = writeln!(s, "hit ratio coop           {:.4}", m.hit_ratio_coop);
    let _ = writeln!(s, "hit ratio cloudlet       {:.4}", m.overall_cloudlet_hit_ratio);
    let _ = writeln!(s, "latency mean             {:.1} us", m.latency_mean_us);
    let _ =
        writeln!(s, "latency p50/p95/p99      {} / {} / {} us", m.latency_p50_us, m.latency_p95_us, m.latency_p99_us);
    let _ = writeln!(s, "bytes wlan/lan/wan       {} / {} / {}", m.bytes_wlan, m.bytes_lan, m.bytes_wan);
    let _ = writeln!(s, "wlan bytes per request   {:.1}", m.wlan_bytes_per_request);
    let _ = writeln!(s, "discovery overhead       {} us", m.discovery_overhead_us);
    let _ = writeln!(s, "validation overhead      {} us", m.validation_overhead_us);
    let _ = writeln!(s, "evictions per node       {:?}", m.evictions_per_node);
    s
}

/// Writes via a sibling temp file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub output: RunOutput,
    pub trace_checksum: u64,
    pub files: Vec<PathBuf>,
}

/// Runs `cfg` end to end and writes the report files into its output
/// directory.
pub fn execute_run(cfg: &RunConfig) -> Result<RunArtifacts> {
    let prep = prepare(cfg)?;
    let output = engine::run(&prep.catalog, &prep.topology, prep.sim.clone(), &prep.trace)?;
    let checksum = prep.trace.checksum();

    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let mut emit = |name: &str, body: String| -> Result<()> {
        let path = dir.join(name);
        write_atomic(&path, &body)?;
        files.push(path);
        Ok(())
    };
    emit("config.resolved", cfg.echo())?;
    emit("summary.txt", summary_text(cfg, &output.metrics, checksum))?;
    emit("metrics.csv", metrics_csv(&output.metrics))?;
    emit("outcomes.csv", outcomes_csv(&output.outcomes))?;
    if let Some(path) = &cfg.catalog_dump {
        write_catalog(&prep.catalog, path)?;
        files.push(path.clone());
    }
    Ok(RunArtifacts { output, trace_checksum: checksum, files })
}
