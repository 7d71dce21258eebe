//! Experiment orchestration: single runs, preset sweeps, and the files each
//! run leaves behind (manifest, trace, summary, bound report, matrix dumps).

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::controller::{RunOutput, Simulation, SlotRecord};
use crate::dump::{antenna_labels, user_labels, write_matrix};
use crate::error::{Result, WnvError};
use crate::fd::{sub_band_scenario, FdOutput};
use crate::linalg::block_diag;
use crate::metrics::{watts_to_dbm, BoundReport, Summary};
use crate::precoders::Scheme;
use crate::scenario::Scenario;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SWEEP_PRESETS: [&str; 4] = ["fig2", "fig3", "fig4", "fig5"];

/// Spatial virtualization (the proposed controller) or the FD baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Approach {
    Spatial,
    Fd,
}

impl Approach {
    pub fn as_str(self) -> &'static str {
        match self {
            Approach::Spatial => "spatial",
            Approach::Fd => "fd",
        }
    }
}

/// One run to execute: its output sub-directory name, configuration and
/// approach.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub label: String,
    pub config: ScenarioConfig,
    pub approach: Approach,
}

/// Self-description written next to every run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest: String,
    pub version: String,
    pub label: String,
    pub approach: Approach,
    pub seed: u64,
    pub config: ScenarioConfig,
}

impl Manifest {
    pub fn new(spec: &RunSpec) -> Self {
        Manifest {
            manifest: manifest_hash(spec),
            version: VERSION.into(),
            label: spec.label.clone(),
            approach: spec.approach,
            seed: spec.config.run.seed,
            config: spec.config.clone(),
        }
    }
}

/// SHA-256 over the code version, approach and configuration. The output
/// directory is excluded so that relocating a run keeps its identity.
pub fn manifest_hash(spec: &RunSpec) -> String {
    let mut cfg = spec.config.clone();
    cfg.run.out_dir = PathBuf::new();
    let mut h = Sha256::new();
    h.update(VERSION.as_bytes());
    h.update([0]);
    h.update(spec.approach.as_str().as_bytes());
    h.update([0]);
    h.update(cfg.to_toml().as_bytes());
    hex::encode(h.finalize())
}

/// What a finished run reports back to the caller.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub spec: RunSpec,
    pub dir: PathBuf,
    pub manifest: String,
    pub summary: Summary,
    /// One report for a spatial run, one per sub-band for FD.
    pub bounds: Vec<BoundReport>,
}

/// The runs a configuration asks for: the spatial run, plus its FD twin when
/// the baseline toggle is set.
pub fn plan_runs(config: &ScenarioConfig) -> Vec<RunSpec> {
    let label = default_label(config);
    let mut runs = vec![RunSpec {
        label: format!("{label}-spatial"),
        config: config.clone(),
        approach: Approach::Spatial,
    }];
    if config.run.baseline {
        runs.push(RunSpec {
            label: format!("{label}-fd"),
            config: config.clone(),
            approach: Approach::Fd,
        });
    }
    runs
}

fn default_label(config: &ScenarioConfig) -> String {
    format!("{}-seed{}", config.preset, config.run.seed)
}

fn scheme_tag(s: Scheme) -> &'static str {
    match s {
        Scheme::Mrt => "mrt",
        Scheme::Zf => "zf",
    }
}

/// The runs of a figure preset on top of `base` (seed, horizon and output
/// directory are taken from `base`).
pub fn sweep_preset(name: &str, base: &ScenarioConfig) -> Result<Vec<RunSpec>> {
    let mut runs = Vec::new();
    let mut push = |label: String, mut cfg: ScenarioConfig, approach| {
        cfg.preset = name.to_string();
        cfg.run.baseline = false;
        runs.push(RunSpec { label, config: cfg, approach });
    };
    for scheme in [Scheme::Mrt, Scheme::Zf] {
        let s = scheme_tag(scheme);
        let cfg = base.clone().with_scheme(scheme);
        match name {
            "fig2" => {
                for theta in [1e-2, 1e-3, 1e-4] {
                    for e_h in [0.15, 0.0] {
                        let mut c = cfg.clone();
                        c.algorithm.theta = theta;
                        c.algorithm.csi_error = e_h;
                        push(format!("fig2-{s}-theta{theta:e}-eh{e_h}"), c, Approach::Spatial);
                    }
                }
            }
            "fig3" => {
                for p_bar in [36.0, 37.0, f64::INFINITY] {
                    let mut c = cfg.clone();
                    c.power.p_bar_dbm = p_bar;
                    push(format!("fig3-{s}-pbar{p_bar}"), c, Approach::Spatial);
                }
            }
            "fig4" => {
                for e_h in [0.05, 0.10, 0.15] {
                    let mut c = cfg.clone();
                    c.algorithm.csi_error = e_h;
                    push(format!("fig4-{s}-eh{e_h}"), c, Approach::Spatial);
                }
            }
            "fig5" => {
                for approach in [Approach::Spatial, Approach::Fd] {
                    push(format!("fig5-{s}-{}", approach.as_str()), cfg.clone(), approach);
                }
            }
            other => {
                return Err(WnvError::Config(format!(
                    "unknown sweep preset `{other}` (expected one of {SWEEP_PRESETS:?})"
                )))
            }
        }
    }
    Ok(runs)
}

/// Executes one run and writes its files under `out_dir/label`.
pub fn run_experiment(spec: &RunSpec) -> Result<RunReport> {
    let manifest = Manifest::new(spec);
    let dir = spec.config.run.out_dir.join(&spec.label);
    fs::create_dir_all(&dir)?;
    let hash = manifest.manifest.clone();
    let text = toml::to_string(&manifest).map_err(|e| WnvError::Config(e.to_string()))?;
    fs::write(dir.join("manifest.toml"), format!("# manifest={hash}\n{text}"))?;

    let scenario = spec.config.to_scenario()?;
    let horizon = spec.config.run.horizon;
    let dump = spec.config.run.dump_matrices.then(|| dir.join("matrices"));
    let users = scenario.topology.total_users();

    let (summary, bounds, summary_rows) = match spec.approach {
        Approach::Spatial => {
            let out = simulate(&scenario, horizon, dump.as_deref(), &hash)?;
            write_trace(&dir.join("trace.csv"), &hash, spec.approach, &out.records)?;
            let summary = Summary::new(&out.records, users)?;
            let bounds = BoundReport::new(&scenario, &out)?;
            let rows = summary_rows(&summary, Some(&out));
            (summary, vec![bounds], rows)
        }
        Approach::Fd => {
            let mut bands = Vec::new();
            for sp in 0..scenario.topology.sp_count() {
                let sub = sub_band_scenario(&scenario, sp)?;
                let band_dump = dump.as_ref().map(|d| d.join(format!("band{sp}")));
                let out = simulate(&sub, horizon, band_dump.as_deref(), &hash)?;
                write_trace(&dir.join(format!("trace_band{sp}.csv")), &hash, spec.approach, &out.records)?;
                bands.push((sub, out));
            }
            let fd = FdOutput { bands, users };
            let summary = fd_summary(&fd)?;
            let bounds = fd
                .bands
                .iter()
                .map(|(s, o)| BoundReport::new(s, o))
                .collect::<Result<Vec<_>>>()?;
            let rows = summary_rows(&summary, None);
            (summary, bounds, rows)
        }
    };

    let mut s = format!("# manifest={hash}\napproach,metric,value\n");
    for (k, v) in summary_rows {
        let _ = writeln!(s, "{},{k},{v}", spec.approach.as_str());
    }
    fs::write(dir.join("summary.csv"), s)?;

    let mut b = format!("# manifest={hash}\n");
    for (i, report) in bounds.iter().enumerate() {
        if bounds.len() > 1 {
            let _ = writeln!(b, "band {i}");
        }
        b.push_str(&report.to_string());
    }
    fs::write(dir.join("bounds.txt"), b)?;

    Ok(RunReport {
        spec: spec.clone(),
        dir,
        manifest: hash,
        summary,
        bounds,
    })
}

/// Runs the controller, dumping every slot's matrices when `dump` is set.
fn simulate(scenario: &Scenario, horizon: usize, dump: Option<&Path>, hash: &str) -> Result<RunOutput> {
    let Some(dir) = dump else {
        return Simulation::new(scenario.clone())?.run(horizon);
    };
    let topo = &scenario.topology;
    let (users, antennas) = (user_labels(topo), antenna_labels(topo));
    let mut sim = Simulation::new(scenario.clone())?;
    let mut records = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let (channel, outcome) = sim.step()?;
        let slot = dir.join(format!("t{t:05}"));
        fs::create_dir_all(&slot)?;
        let pre = [format!("manifest={hash}"), format!("slot={t}")];
        write_matrix(&slot.join("H.csv"), &channel.true_h, &users, &antennas, &pre)?;
        write_matrix(&slot.join("H_hat.csv"), &channel.est_h, &users, &antennas, &pre)?;
        write_matrix(&slot.join("D.csv"), &outcome.demand.global, &users, &users, &pre)?;
        write_matrix(&slot.join("D_hat.csv"), &outcome.est_demand.global, &users, &users, &pre)?;
        let v: Vec<_> = outcome.cells.iter().map(|o| o.v.clone()).collect();
        write_matrix(&slot.join("V.csv"), &block_diag(&v), &antennas, &users, &pre)?;
        records.push(outcome.record);
    }
    Ok(RunOutput {
        params: sim.params().clone(),
        stats: sim.stats().clone(),
        final_queue: sim.queue().to_vec(),
        records,
    })
}

fn fd_summary(fd: &FdOutput) -> Result<Summary> {
    let share = fd.bands.len() as f64;
    let horizon = fd.bands[0].1.records.len();
    let mut merged = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let slots: Vec<&SlotRecord> = fd.bands.iter().map(|(_, o)| &o.records[t]).collect();
        let sum = |f: fn(&SlotRecord) -> f64| slots.iter().map(|r| f(r)).sum::<f64>();
        let cells = slots[0].power.len();
        let mut r = slots[0].clone();
        r.power = (0..cells).map(|c| slots.iter().map(|s| s.power[c]).sum()).collect();
        r.queue = (0..cells).map(|c| slots.iter().map(|s| s.queue[c]).sum()).collect();
        r.deviation = sum(|r| r.deviation);
        r.deviation_est = sum(|r| r.deviation_est);
        r.demand_norm_sq = sum(|r| r.demand_norm_sq);
        r.est_demand_norm_sq = sum(|r| r.est_demand_norm_sq);
        r.sum_rate = sum(|r| r.sum_rate) / share;
        merged.push(r);
    }
    Summary::new(&merged, fd.users)
}

fn summary_rows(s: &Summary, run: Option<&RunOutput>) -> Vec<(String, String)> {
    let mut rows = vec![
        ("horizon".to_string(), s.horizon.to_string()),
        ("rho_bar".into(), s.rho_bar.to_string()),
        ("rho_steady".into(), s.rho_steady.to_string()),
        ("power_bar_w".into(), s.power_bar.to_string()),
        ("power_bar_dbm".into(), watts_to_dbm(s.power_bar).to_string()),
        ("power_steady_w".into(), s.power_steady.to_string()),
        ("rate_bar".into(), s.rate_bar.to_string()),
        ("rate_steady".into(), s.rate_steady.to_string()),
        ("skipped_slots".into(), s.skipped_slots.to_string()),
    ];
    if let Some(run) = run {
        rows.push(("u".into(), run.params.u.to_string()));
        rows.push(("epsilon".into(), run.params.epsilon.to_string()));
        rows.push(("bound_b".into(), run.params.bound_b.to_string()));
    }
    rows
}

/// Writes the per-slot trace as CSV.
pub fn write_trace(path: &Path, hash: &str, approach: Approach, records: &[SlotRecord]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# manifest={hash}")?;
    writeln!(w, "# approach={}", approach.as_str())?;
    let cells = records.first().map_or(0, |r| r.power.len());
    let mut header = vec!["t".to_string()];
    for name in ["z", "power", "lambda", "case"] {
        header.extend((0..cells).map(|c| format!("{name}{c}")));
    }
    header.extend(
        [
            "deviation",
            "deviation_est",
            "demand_norm_sq",
            "est_demand_norm_sq",
            "demand_error",
            "channel_norm",
            "delta_hat",
            "sum_rate",
            "kkt_residual",
            "zf_fallbacks",
            "rho_bar",
        ]
        .map(String::from),
    );
    writeln!(w, "{}", header.join(","))?;
    let mut rho_sum = 0.0;
    for r in records {
        rho_sum += r.normalized_deviation();
        let mut row = vec![r.t.to_string()];
        row.extend(r.queue.iter().map(f64::to_string));
        row.extend(r.power.iter().map(f64::to_string));
        row.extend(r.lambda.iter().map(f64::to_string));
        row.extend(r.case.iter().map(|c| c.as_str().to_string()));
        row.extend(
            [
                r.deviation,
                r.deviation_est,
                r.demand_norm_sq,
                r.est_demand_norm_sq,
                r.demand_error,
                r.channel_norm,
                r.delta_hat,
                r.sum_rate,
                r.kkt_residual,
            ]
            .map(|v| v.to_string()),
        );
        row.push(r.zf_fallbacks.to_string());
        row.push((rho_sum / (r.t + 1) as f64).to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Runs every spec in order, stopping at the first failure.
pub fn run_all(specs: &[RunSpec]) -> Result<Vec<RunReport>> {
    specs.iter().map(run_experiment).collect()
}

/// Pretty-prints a `bounds.txt` file as an aligned table.
pub fn format_bound_report(text: &str) -> Result<String> {
    let mut out = String::new();
    let mut failed = 0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            if let Some(m) = line.strip_prefix("# manifest=") {
                let _ = writeln!(out, "manifest {m}");
            }
            continue;
        }
        let mut words = line.split_whitespace();
        let kind = words.next().unwrap_or_default();
        let fields: Vec<(&str, &str)> = words.filter_map(|w| w.split_once('=')).collect();
        let get = |k: &str| fields.iter().find(|(key, _)| *key == k).map(|(_, v)| *v);
        match kind {
            "constant" => {
                let _ = writeln!(
                    out,
                    "  {:<28} {}",
                    get("name").unwrap_or("?"),
                    get("value").unwrap_or("?")
                );
            }
            "check" => {
                let pass = get("pass") == Some("true");
                failed += usize::from(!pass);
                let _ = writeln!(
                    out,
                    "{} {:<32} lhs {:>16} rhs {:>16} slack {:>16} violations {}/{}",
                    if pass { "PASS" } else { "FAIL" },
                    get("name").unwrap_or("?"),
                    get("lhs").unwrap_or("?"),
                    get("rhs").unwrap_or("?"),
                    get("slack").unwrap_or("?"),
                    get("violations").unwrap_or("?"),
                    get("checked").unwrap_or("?"),
                );
            }
            "band" => {
                let _ = writeln!(out, "{line}");
            }
            _ => return Err(WnvError::Config(format!("unrecognized bound-report line: {line}"))),
        }
    }
    let _ = writeln!(out, "{failed} failing inequalities");
    Ok(out)
}
