use std::process::Command;

use twr_core::lmmse::Phase;
use twr_sim::config::{ExperimentSection, ScenarioConfig};
use twr_sim::output::{read_convergence, Format};
use twr_sim::{emit_convergence, emit_results, read_results, run_experiment, ExperimentConfig, Init, Method, ResultRow};

fn config(phase: Phase, methods: &[Method], snr_grid: &[f64], trials: usize) -> ExperimentConfig {
    ExperimentConfig {
        scenario: ScenarioConfig::default(),
        experiment: ExperimentSection {
            phase,
            methods: methods.to_vec(),
            snr_grid: snr_grid.to_vec(),
            trials,
            seed: 17,
            init: Init::Identity,
            tol: 1e-6,
            max_iter: 200,
            timing: false,
        },
    }
}

#[test]
fn same_seed_gives_identical_rows() {
    let cfg = config(Phase::Mac, &[Method::Algorithm1, Method::IdentityBaseline], &[0.0, 10.0], 300);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a, b);
    let mut other = cfg.clone();
    other.experiment.seed = 18;
    let c = run_experiment(&other).unwrap();
    assert_ne!(a[0].empirical_nmse, c[0].empirical_nmse);
    assert_eq!(a[0].analytic_nmse, c[0].analytic_nmse);
}

#[test]
fn thread_count_does_not_change_results() {
    let cfg = config(Phase::Bc, &[Method::Algorithm2], &[10.0], 500);
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = pool(1).install(|| run_experiment(&cfg).unwrap());
    let four = pool(4).install(|| run_experiment(&cfg).unwrap());
    assert_eq!(one, four);
}

#[test]
fn prior_only_when_the_relay_is_silent() {
    let mut cfg = config(Phase::Bc, &[Method::IdentityBaseline, Method::Algorithm2], &[10.0], 1);
    cfg.scenario.bc.relay_power = 0.0;
    let rows = run_experiment(&cfg).unwrap();
    // Tr Z_t · Tr Z_r summed over both links, over M(N₁ + N₂)
    let expected = (3.0 * 3.0 + 3.0 * 3.0) / 18.0;
    for r in &rows {
        assert!((r.analytic_nmse - expected).abs() < 1e-12, "{r:?}");
        assert!(r.empirical_nmse > 0.0);
    }
    cfg.experiment.trials = 20_000;
    let rows = run_experiment(&cfg).unwrap();
    assert!((rows[0].empirical_nmse / expected - 1.0).abs() < 0.02, "{:?}", rows[0]);
}

#[test]
fn monte_carlo_matches_analytic_at_10db() {
    let cfg = config(Phase::Mac, &[Method::Algorithm1], &[10.0], 10_000);
    let r = &run_experiment(&cfg).unwrap()[0];
    let gap = (r.empirical_nmse / r.analytic_nmse - 1.0).abs();
    assert!(gap <= 0.02, "{r:?}");
}

#[test]
fn nmse_does_not_increase_with_snr() {
    for (phase, methods) in [
        (Phase::Mac, vec![Method::Algorithm1, Method::P2pOrthogonalBaseline, Method::IdentityBaseline]),
        (Phase::Bc, vec![Method::Algorithm2, Method::P2pOrthogonalBaseline, Method::IdentityBaseline]),
    ] {
        let rows = run_experiment(&config(phase, &methods, &[0.0, 5.0, 10.0, 15.0, 20.0], 1)).unwrap();
        for m in methods {
            let v: Vec<f64> = rows.iter().filter(|r| r.method == m).map(|r| r.analytic_nmse).collect();
            assert!(v.windows(2).all(|w| w[1] <= w[0]), "{m}: {v:?}");
        }
    }
}

#[test]
fn results_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        ResultRow {
            method: Method::Algorithm1,
            snr_db: 10.0,
            analytic_nmse: 0.1234567890123456,
            empirical_nmse: 1.0 / 3.0,
            iterations: 42,
            wall_time: 0.001,
            seed: u64::MAX,
        },
        ResultRow {
            method: Method::P2pOrthogonalBaseline,
            snr_db: -2.5,
            analytic_nmse: 1e-300,
            empirical_nmse: 7.0,
            iterations: 0,
            wall_time: 0.0,
            seed: 0,
        },
    ];
    for (name, format) in [("r.csv", Format::Csv), ("r.json", Format::Json)] {
        let path = dir.path().join(name);
        emit_results(&rows, format, &path).unwrap();
        assert_eq!(read_results(&path, format).unwrap(), rows);
        emit_results(&[], format, &path).unwrap();
        assert!(read_results(&path, format).unwrap().is_empty());
    }
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert_eq!(csv, "method,snr_db,analytic_nmse,empirical_nmse,iterations,wall_time,seed\n");
}

#[test]
fn convergence_file_is_non_increasing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(Phase::Mac, &[Method::Algorithm1], &[10.0], 1);
    let trace = twr_sim::experiment::convergence(&cfg, Method::Algorithm1, 10.0).unwrap();
    let path = dir.path().join("trace.csv");
    emit_convergence(&trace, &path).unwrap();
    let back = read_convergence(&path).unwrap();
    assert_eq!(back.len(), trace.len());
    assert!(back.iter().enumerate().all(|(i, (it, _))| *it == i));
    assert!(back.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-9)));
}

#[test]
fn io_errors_name_the_path() {
    let err = emit_results(&[], Format::Csv, std::path::Path::new("/nonexistent/dir/out.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/out.csv"), "{err}");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twr-sim"))
}

#[test]
fn cli_sweep_is_reproducible_and_exit_codes_follow_the_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "[experiment]\nphase = \"mac\"\nmethods = [\"algorithm1\", \"identity_baseline\"]\nsnr_grid = [0.0, 10.0]\ntrials = 200\nseed = 4\n",
    )
    .unwrap();
    let run = |out: &str| {
        let status = cli()
            .args(["sweep", "--config"])
            .arg(&cfg)
            .args(["--no-timing", "--out"])
            .arg(dir.path().join(out))
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(dir.path().join(out)).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
    let rows = read_results(&dir.path().join("a.csv"), Format::Csv).unwrap();
    assert_eq!(rows.len(), 4);

    let status = cli().args(["sweep", "--trials", "0", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(2));

    std::fs::write(&cfg, "[experiment]\nphase = \"mac\"\nmethods = [\"waterfilling\"]\nsnr_grid = [0.0]\n").unwrap();
    let out = cli().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    std::fs::write(&cfg, "[experiment]\nphase = \"bc\"\nmethods = [\"algorithm2\"]\nsnr_grid = [0.0, nan]\n").unwrap();
    let out = cli().args(["sweep", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("snr_grid"));
}

#[test]
fn cli_design_and_converge() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    std::fs::write(&cfg, "[experiment]\nphase = \"bc\"\nmethods = [\"algorithm2\"]\nsnr_grid = [10.0]\ntrials = 1\n").unwrap();
    let out = cli().args(["design", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v[0]["method"], "algorithm2");
    assert_eq!(v[0]["training"].as_array().unwrap().len(), 3);
    let trace = dir.path().join("trace.csv");
    let status = cli().args(["converge", "--config"]).arg(&cfg).arg("--out").arg(&trace).status().unwrap();
    assert!(status.success());
    assert!(read_convergence(&trace).unwrap().len() >= 2);
}

#[test]
fn shipped_configs_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["mac.toml", "bc.toml", "white.toml"] {
        ExperimentConfig::load(&root.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
