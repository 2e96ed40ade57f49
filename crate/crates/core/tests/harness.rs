use d2d_eegame::game::Policy;
use d2d_eegame::harness::campaign::{ConvergenceRow, CONVERGENCE_COLUMNS};
use d2d_eegame::harness::experiments::{topology_table, tradeoff_table, TradeoffRow, TRADEOFF_COLUMNS};
use d2d_eegame::harness::*;

fn small() -> ScenarioConfig {
    ScenarioConfig {
        trials: 12,
        n_d2d: 3,
        n_cell: 2,
        max_rounds: 6,
        seed: 77,
        ..Default::default()
    }
}

fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(f)
}

#[test]
fn campaign_independent_of_thread_count() {
    let cfg = small();
    let one = with_threads(1, || run_campaign(&cfg, &Policy::ALL).unwrap());
    let four = with_threads(4, || run_campaign(&cfg, &Policy::ALL).unwrap());
    assert_eq!(one, four);
}

#[test]
fn trial_streams_do_not_depend_on_trial_count() {
    let cfg = small();
    let fewer = ScenarioConfig { trials: 3, ..cfg.clone() };
    let a = run_campaign(&cfg, &Policy::ALL).unwrap();
    let b = run_campaign(&fewer, &Policy::ALL).unwrap();
    assert_eq!(a.trials[..3], b.trials[..]);
}

#[test]
fn normalized_series_peak_at_one() {
    let res = run_campaign(&small(), &Policy::ALL).unwrap();
    for metric in Metric::ALL {
        let peak = res
            .rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| r.normalized_mean)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(peak, 1.0);
    }
}

#[test]
fn results_round_trip_through_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_campaign(&small(), &Policy::ALL).unwrap();
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let path = dir.path().join(format!("r.{}", format.extension()));
        emit_results(&res.rows, format, &path).unwrap();
        let back: Vec<ResultRow> = read_rows(format, &path).unwrap();
        assert_eq!(back, res.rows);

        let side = dir.path().join(format!("c.{}", format.extension()));
        write_rows(&res.convergence, &CONVERGENCE_COLUMNS, format, &side).unwrap();
        let back: Vec<ConvergenceRow> = read_rows(format, &side).unwrap();
        assert_eq!(back, res.convergence);
    }
}

#[test]
fn emission_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let rows = tradeoff_table(&[-20.0]).unwrap();
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let a = dir.path().join(format!("a.{}", format.extension()));
        let b = dir.path().join(format!("b.{}", format.extension()));
        write_rows(&rows, &TRADEOFF_COLUMNS, format, &a).unwrap();
        write_rows(&rows, &TRADEOFF_COLUMNS, format, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        let back: Vec<TradeoffRow> = read_rows(format, &a).unwrap();
        assert_eq!(back, rows);
    }
}

#[test]
fn empty_table_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_results(&[], OutputFormat::Csv, &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "policy,round,metric,mean,normalized_mean,trials\n"
    );
    let json = dir.path().join("empty.json");
    emit_results(&[], OutputFormat::Json, &json).unwrap();
    assert_eq!(std::fs::read_to_string(&json).unwrap(), "[]\n");
}

#[test]
fn csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_campaign(&ScenarioConfig { trials: 2, ..small() }, &[Policy::EnergyEfficient]).unwrap();
    let path = dir.path().join("r.csv");
    emit_results(&res.rows, OutputFormat::Csv, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(!text.contains('\r'));
    let second = text.lines().nth(1).unwrap();
    assert!(second.starts_with("energy-efficient,1,ee_d2d,"), "{second}");
    assert_eq!(text.lines().count(), 1 + 6 * 4);
}

#[test]
fn config_file_then_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cfg");
    std::fs::write(&path, "# small run\nn_d2d = 2\ntrials = 7\n\nseed = 3\n").unwrap();
    let cfg = ScenarioConfig::from_file(&path).unwrap();
    assert_eq!((cfg.n_d2d, cfg.trials, cfg.seed, cfg.n_cell), (2, 7, 3, 3));
    std::fs::write(&path, "d2d_max_dist = 600\n").unwrap();
    assert!(ScenarioConfig::from_file(&path).is_err());
    let missing = ScenarioConfig::from_file(&dir.path().join("nope.cfg")).unwrap_err();
    assert!(missing.to_string().contains("nope.cfg"));
}

#[test]
fn topology_geometry_holds_over_trials() {
    let cfg = ScenarioConfig::default();
    for t in 0..50 {
        let rows = topology_table(&cfg, t).unwrap();
        let tx: Vec<_> = rows.iter().filter(|r| r.kind == "d2d_tx").collect();
        let rx: Vec<_> = rows.iter().filter(|r| r.kind == "d2d_rx").collect();
        for r in &rows {
            assert!(r.x.hypot(r.y) <= cfg.cell_radius + 1e-9);
        }
        for (a, b) in tx.iter().zip(&rx) {
            assert!((a.x - b.x).hypot(a.y - b.y) <= cfg.d2d_max_dist + 1e-9);
        }
    }
}
