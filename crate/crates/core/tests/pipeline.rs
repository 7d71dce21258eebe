//! End-to-end checks across the channel, SP, solver, controller and output
//! layers, each against an independent recomputation.

mod common;

use std::fs;
use std::path::Path;
use std::process::Command;

use mimo_wnv::channel::{Csi, GlobalChannel};
use mimo_wnv::config::{load_config, ScenarioConfig};
use mimo_wnv::controller::Simulation;
use mimo_wnv::dump::parse_matrix_csv;
use mimo_wnv::experiment::{format_bound_report, run_experiment, Approach, RunSpec};
use mimo_wnv::fd::run_fd;
use mimo_wnv::linalg::{block_diag, frobenius_sq, CMatrix};
use mimo_wnv::precoders::{sp_demands, Scheme};
use mimo_wnv::WnvError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::cgauss;

/// Three cells, eight antennas, two SPs with two users each.
fn small_config(scheme: Scheme) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::urban_lte_default().with_scheme(scheme);
    cfg.topology.cells = 3;
    cfg.topology.antennas = 8;
    cfg.topology.sps = 2;
    cfg.run.horizon = 20;
    cfg
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

#[test]
fn global_deviation_equals_sum_of_cell_objectives() {
    for scheme in [Scheme::Mrt, Scheme::Zf] {
        let scenario = small_config(scheme).to_scenario().unwrap();
        let topo = scenario.topology.clone();
        let mut sim = Simulation::new(scenario).unwrap();
        for _ in 0..10 {
            let (channel, out) = sim.step().unwrap();
            let v = block_diag(&out.precoders().into_iter().cloned().collect::<Vec<_>>());
            let global_est = frobenius_sq(&(&channel.est_h * &v - &out.est_demand.global));
            let global_true = frobenius_sq(&(&channel.true_h * &v - &out.demand.global));
            let per_cell: f64 = (0..topo.cell_count())
                .map(|c| {
                    let h = channel.bs_channel(&topo, Csi::Estimated, c);
                    frobenius_sq(&(h * &out.cells[c].v - out.est_demand.padded(&topo, c)))
                })
                .sum();
            assert!(rel_close(global_est, per_cell, 1e-10), "{global_est} vs {per_cell}");
            assert!(rel_close(out.record.deviation_est, global_est, 1e-10));
            assert!(rel_close(out.record.deviation, global_true, 1e-10));
        }
    }
}

#[test]
fn perfect_csi_makes_estimates_exact() {
    let mut cfg = small_config(Scheme::Zf);
    cfg.algorithm.csi_error = 0.0;
    let out = Simulation::new(cfg.to_scenario().unwrap()).unwrap().run(10).unwrap();
    for r in &out.records {
        assert_eq!(r.deviation, r.deviation_est);
        assert_eq!(r.demand_norm_sq, r.est_demand_norm_sq);
        assert_eq!(r.demand_error, 0.0);
        assert_eq!(r.delta_hat, 0.0);
    }
}

#[test]
fn sp_demand_depends_only_on_its_own_block() {
    for scheme in [Scheme::Mrt, Scheme::Zf] {
        let scenario = small_config(scheme).to_scenario().unwrap();
        let topo = &scenario.topology;
        let mut sim = Simulation::new(scenario.clone()).unwrap();
        let channel = sim.draw_channel();
        let (base, _) = sp_demands(topo, &channel, Csi::True, &scenario.sp).unwrap();

        // Replace everything except SP 0's own block in cell 1.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut other = cgauss(channel.true_h.nrows(), channel.true_h.ncols(), &mut rng);
        let (rows, cols) = (topo.sp_rows(1, 0), topo.bs_cols(1));
        other
            .view_mut((rows.start, cols.start), (rows.len(), cols.len()))
            .copy_from(&channel.true_h.view((rows.start, cols.start), (rows.len(), cols.len())));
        let zero = CMatrix::zeros(other.nrows(), other.ncols());
        let perturbed = GlobalChannel::from_parts(topo, other.clone(), other, zero, 0.0, channel.bound_b);
        let (moved, _) = sp_demands(topo, &perturbed, Csi::True, &scenario.sp).unwrap();

        let block = |d: &CMatrix| d.view((rows.start, rows.start), (rows.len(), rows.len())).into_owned();
        assert_eq!(block(&base.global), block(&moved.global));
        assert_ne!(base.global, moved.global);
    }
}

#[test]
fn fd_band_is_isolated_from_other_sps() {
    let base = small_config(Scheme::Mrt).to_scenario().unwrap();
    let mut changed = base.clone();
    for row in &mut changed.sp.schemes {
        row[1] = Scheme::Zf;
    }
    let a = run_fd(&base, 15).unwrap();
    let b = run_fd(&changed, 15).unwrap();
    assert_eq!(a.bands[0].1.records, b.bands[0].1.records);
    assert_ne!(a.bands[1].1.records, b.bands[1].1.records);
}

fn data_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(String::from)
        .collect()
}

fn summary_value(dir: &Path, metric: &str) -> f64 {
    data_rows(&dir.join("summary.csv"))
        .iter()
        .find_map(|l| {
            let mut f = l.split(',');
            let (_, m, v) = (f.next()?, f.next()?, f.next()?);
            (m == metric).then(|| v.parse().unwrap())
        })
        .unwrap()
}

#[test]
fn dumped_matrices_reproduce_the_reported_deviation() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Scheme::Zf);
    cfg.run.horizon = 6;
    cfg.run.dump_matrices = true;
    cfg.run.out_dir = tmp.path().to_path_buf();
    let report = run_experiment(&RunSpec {
        label: "dump".into(),
        config: cfg,
        approach: Approach::Spatial,
    })
    .unwrap();

    let read = |t: usize, name: &str| {
        let p = report.dir.join(format!("matrices/t{t:05}/{name}.csv"));
        parse_matrix_csv(&fs::read_to_string(p).unwrap()).unwrap()
    };
    let rows = data_rows(&report.dir.join("trace.csv"));
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let mut rho = 0.0;
    for t in 0..6 {
        let traced: Vec<&str> = rows[t + 1].split(',').collect();
        let field = |name: &str| traced[col(name)].parse::<f64>().unwrap();
        let (h, d, v) = (read(t, "H"), read(t, "D"), read(t, "V"));
        let deviation = frobenius_sq(&(&h * &v - &d));
        assert!(rel_close(deviation, field("deviation"), 1e-12));
        rho += deviation / frobenius_sq(&d);
        let (h_hat, d_hat) = (read(t, "H_hat"), read(t, "D_hat"));
        assert!(rel_close(frobenius_sq(&(&h_hat * &v - &d_hat)), field("deviation_est"), 1e-12));
    }
    rho /= 6.0;
    assert!(rel_close(rho, report.summary.rho_bar, 1e-9), "{rho} vs {}", report.summary.rho_bar);
    assert!(rel_close(rho, summary_value(&report.dir, "rho_bar"), 1e-9));
}

#[test]
fn rerun_from_manifest_is_bitwise_identical() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Scheme::Mrt);
    cfg.run.out_dir = first.path().to_path_buf();
    let spec = RunSpec {
        label: "run".into(),
        config: cfg,
        approach: Approach::Spatial,
    };
    let a = run_experiment(&spec).unwrap();

    let mut reloaded = load_config(a.dir.join("manifest.toml").to_str().unwrap()).unwrap();
    assert_eq!(reloaded, spec.config);
    reloaded.run.out_dir = second.path().to_path_buf();
    let b = run_experiment(&RunSpec {
        config: reloaded,
        ..spec.clone()
    })
    .unwrap();

    assert_eq!(a.manifest, b.manifest);
    for file in ["trace.csv", "summary.csv", "bounds.txt"] {
        assert_eq!(fs::read(a.dir.join(file)).unwrap(), fs::read(b.dir.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn trace_running_average_matches_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(Scheme::Mrt);
    cfg.run.out_dir = tmp.path().to_path_buf();
    let report = run_experiment(&RunSpec {
        label: "trace".into(),
        config: cfg,
        approach: Approach::Spatial,
    })
    .unwrap();
    let rows = data_rows(&report.dir.join("trace.csv"));
    let header: Vec<&str> = rows[0].split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (dev, norm, running) = (col("deviation"), col("demand_norm_sq"), col("rho_bar"));
    let mut sum = 0.0;
    for (t, row) in rows[1..].iter().enumerate() {
        let f: Vec<f64> = row.split(',').map(|s| s.parse().unwrap_or(f64::NAN)).collect();
        sum += f[dev] / f[norm];
        assert!(rel_close(sum / (t + 1) as f64, f[running], 1e-12));
    }
    assert_eq!(rows.len() - 1, 20);
    assert!(rel_close(sum / 20.0, report.summary.rho_bar, 1e-12));
}

#[test]
fn config_file_round_trips_and_rejects_infeasible_power() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("scenario.toml");
    let mut cfg = small_config(Scheme::Zf);
    cfg.power.p_bar_dbm = f64::INFINITY;
    fs::write(&path, cfg.to_toml()).unwrap();
    assert_eq!(load_config(path.to_str().unwrap()).unwrap(), cfg);

    cfg.power.p_bar_dbm = 40.0;
    fs::write(&path, cfg.to_toml()).unwrap();
    match load_config(path.to_str().unwrap()) {
        Err(WnvError::InvalidParameter { field, .. }) => assert!(field.contains("p_bar"), "{field}"),
        other => panic!("expected a parameter error, got {other:?}"),
    }
    assert!(load_config("no-such-preset").is_err());
}

#[test]
fn cli_run_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_mimo-wnv");
    let run = Command::new(bin)
        .args(["run", "--preset", "urban-lte-default", "--seed", "4", "--horizon", "3", "--out-dir"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let dir = tmp.path().join("urban-lte-default-seed4-spatial");
    for file in ["manifest.toml", "trace.csv", "summary.csv", "bounds.txt"] {
        assert!(dir.join(file).exists(), "{file}");
    }

    let report = Command::new(bin).arg("report").arg(&dir).output().unwrap();
    assert!(report.status.success());
    let text = String::from_utf8(report.stdout).unwrap();
    let direct = format_bound_report(&fs::read_to_string(dir.join("bounds.txt")).unwrap()).unwrap();
    assert!(text.contains(direct.trim_end()));
    assert!(text.contains("PASS slot_power.cell0"));
}
