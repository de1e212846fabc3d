use nls_core::checkpoint;
use nls_core::field::{make_initial, FieldMeta, GridSpec, InitialDataSpec};
use nls_core::harness::config::{ExperimentConfig, ExperimentKind};
use nls_core::harness::run_experiment;
use nls_core::solver::SolverConfig;
use nls_core::ModelParams;
use num_complex::Complex64;
use proptest::prelude::*;
use std::path::Path;

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            ExperimentConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 4);
}

#[test]
fn file_initial_data_roundtrips_through_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let grid = GridSpec::new(1, 20.0, 128).unwrap();
    let u0 = make_initial(&grid, &InitialDataSpec::Gaussian { amplitude: Complex64::new(0.6, 0.2), width: 1.5, center: vec![1.0] })
        .unwrap();
    let model = ModelParams::new(1, 2.0, Complex64::new(1.0, 0.0)).unwrap();
    let path = tmp.path().join("u0.nlsf");
    checkpoint::write(&path, &u0, &FieldMeta { time: 0.0, model, grid }).unwrap();
    let text = format!(
        "kind = \"single\"\noutput_dir = \"{}\"\n[model]\ndim = 1\nalpha = 2.0\nkappa = [1.0, 0.0]\n\
         [grid]\nbox_length = 20.0\npoints = 128\n[solver]\ndt = 0.01\nt_end = 0.1\n\
         [initial]\nkind = \"file\"\npath = \"{}\"\n",
        tmp.path().join("out").display(),
        path.display()
    );
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    let rep = run_experiment(&cfg).unwrap();
    assert!((rep.summary.scalars["mass_initial"] - u0.mass()).abs() < 1e-15);
    let summary = std::fs::read_to_string(tmp.path().join("out/summary.json")).unwrap();
    let echoed: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(echoed["config"]["initial"]["kind"], "file");
    assert_eq!(echoed["config"]["solver"]["blowup_dt_floor"], 1e-12);
}

fn arb_config() -> impl Strategy<Value = ExperimentConfig> {
    (1usize..4, 0.1f64..4.0, -2.0f64..2.0, -2.0f64..2.0, 3u32..8, 1.0f64..100.0, 1e-4f64..1e-2, 0.1f64..3.0, any::<u64>())
        .prop_map(|(dim, alpha, kr, ki, log_m, l, dt, width, seed)| {
            let text = format!(
                "kind = \"single\"\noutput_dir = \"out\"\nseed = {seed}\n[model]\ndim = {dim}\nalpha = {alpha:?}\nkappa = [{kr:?}, {ki:?}]\n\
                 [grid]\nbox_length = {l:?}\npoints = {}\n[solver]\ndt = {dt:?}\nt_end = 1.0\n\
                 [initial]\nkind = \"gaussian\"\namplitude = [1.0, 0.0]\nwidth = {width:?}\n",
                1usize << log_m
            );
            ExperimentConfig::from_toml(&text).unwrap()
        })
}

proptest! {
    #[test]
    fn toml_roundtrip(cfg in arb_config()) {
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn parser_never_panics(text in "\\PC{0,200}") {
        let _ = ExperimentConfig::from_toml(&text);
    }
}

#[test]
fn resolved_defaults_are_explicit_in_serialised_form() {
    let cfg = ExperimentConfig {
        kind: ExperimentKind::Single,
        output_dir: "x".into(),
        seed: 0,
        model: Some(ModelParams::new(1, 1.0, Complex64::new(0.0, -1.0)).unwrap()),
        grid: Some(nls_core::harness::config::GridConfig { box_length: 10.0, points: 64 }),
        solver: Some(SolverConfig::new(0.01, 1.0)),
        initial: Some(InitialDataSpec::PlaneWave { amplitude: Complex64::new(1.0, 0.0), mode: vec![0] }),
        probes: Default::default(),
        sweep: None,
        pct: None,
        confinement: None,
        acceptance: None,
    };
    let text = cfg.to_toml();
    for key in ["safety", "blowup_linf_threshold", "blowup_dt_floor", "diagnostics_cadence", "median_radius"] {
        assert!(text.contains(key), "{key} missing from\n{text}");
    }
}
