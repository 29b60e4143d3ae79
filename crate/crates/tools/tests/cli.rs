use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rsc_core::chain::{modes, Axis, IonSpecies, TrapConfig};
use rsc_core::constants::khz;
use rsc_tools::table::ResultTable;

fn example() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/single_ion.cfg")
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn rsc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rsc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("RSC_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) {
    let o = rsc(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn column(t: &ResultTable, name: &str) -> Vec<f64> {
    t.numeric_column(name).unwrap_or_else(|| panic!("no column {name}"))
}

#[test]
fn single_ion_modes_is_one_row() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["modes"], dir.path());
    let t = ResultTable::read_csv(&dir.path().join("modes.csv")).unwrap();
    assert_eq!(t.rows.len(), 1);
    assert_eq!(column(&t, "frequency_khz"), [735.0]);
    assert_eq!(t.metadata["command"], "modes");
    assert_eq!(t.metadata["config_hash"].len(), 64);
    assert!(dir.path().join("modes.json").exists());
}

#[test]
fn scaling_table_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "long.cfg", "[trap]\nomega_z_khz = 200.0\nomega_x_khz = 7500.0\n");
    ok(&["-c", &cfg, "scaling", "--axis", "axial", "--nmax", "100"], dir.path());
    let t = ResultTable::read_csv(&dir.path().join("scaling.csv")).unwrap();
    assert_eq!(t.rows.len(), 100);
    let (n, par, seq) = (column(&t, "n_ions"), column(&t, "t_parallel_us"), column(&t, "t_sequential_us"));
    // single-ion time 200 µs at 735 kHz, carried to 200 kHz as 1/√ω
    let t1 = 200.0 * (735.0f64 / 200.0).sqrt();
    for k in 0..100 {
        let cfg = TrapConfig::new(IonSpecies::beryllium9(), k + 1, khz(200.0), khz(7500.0)).unwrap();
        let w = modes(&cfg, Axis::Axial).unwrap().frequencies;
        let inv: f64 = w.iter().map(|x| 1.0 / x).sum();
        let inv_sqrt: f64 = w.iter().map(|x| 1.0 / x.sqrt()).sum();
        assert_eq!(n[k], (k + 1) as f64);
        assert!((par[k] / (t1 * (w[0] * inv).sqrt()) - 1.0).abs() < 1e-12, "N={}", k + 1);
        assert!((seq[k] / (t1 * w[0].sqrt() * inv_sqrt) - 1.0).abs() < 1e-12, "N={}", k + 1);
        if k > 0 {
            assert!(seq[k] > par[k]);
        }
    }
}

#[test]
fn pump_scale_sweep_gives_five_trajectories() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = example();
    ok(
        &["-c", cfg.to_str().unwrap(), "crsc", "--sweep", "pump_scale=0.2,0.4,1,2.5,5"],
        dir.path(),
    );
    let t = ResultTable::read_csv(&dir.path().join("crsc.csv")).unwrap();
    let (scale, time, nbar) = (column(&t, "pump_scale"), column(&t, "time_us"), column(&t, "nbar"));
    let mut finals = Vec::new();
    for s in [0.2, 0.4, 1.0, 2.5, 5.0] {
        let rows: Vec<usize> = (0..scale.len()).filter(|&k| scale[k] == s).collect();
        assert!(rows.len() > 1000, "scale {s}");
        assert_eq!(nbar[rows[0]], 6.0);
        assert!((time[*rows.last().unwrap()] - 300.0).abs() < 1e-3);
        finals.push(nbar[*rows.last().unwrap()]);
        if s == 1.0 {
            let k = rows.iter().find(|&&k| nbar[k] <= 0.2).unwrap();
            assert!((150.0..=300.0).contains(&time[*k]));
        }
    }
    let best = (0..5).min_by(|a, b| finals[*a].total_cmp(&finals[*b])).unwrap();
    assert_eq!(best, 2, "{finals:?}");
    assert_eq!(t.metadata["sweep"], "pump_scale=0.2,0.4,1,2.5,5");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    // thermal spectators push the carrier sum onto the Monte Carlo path
    let cfg = write_config(
        dir.path(),
        "mc.cfg",
        "[trap]\nn_ions = 6\nomega_z_khz = 400.0\n[simulation]\ncom_nbar = 1.0\nspectator_nbar = 0.3\nmc_samples = 2000\nflop_points = 21\n",
    );
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    // thread count must not change the bytes either
    for (out, jobs) in [(&a, "1"), (&b, "3")] {
        for cmd in [&["carrier"][..], &["modes"], &["limits"], &["prsc"]] {
            let mut args = vec!["-c", cfg.as_str(), "--jobs", jobs];
            args.extend_from_slice(cmd);
            ok(&args, out);
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("carrier.json")).unwrap()).unwrap();
    assert_eq!(summary["results"]["method"], "monte_carlo");
    for name in ["carrier.csv", "carrier.json", "modes.csv", "modes.json", "limits.csv", "prsc.csv", "prsc.json"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    ok(&["-c", &cfg, "--seed", "99", "carrier"], &c);
    let first = ResultTable::read_csv(&a.join("carrier.csv")).unwrap();
    let other = ResultTable::read_csv(&c.join("carrier.csv")).unwrap();
    assert_ne!(column(&first, "excitation"), column(&other, "excitation"));
    assert_eq!(other.metadata["seed"], "99");
    assert_eq!(first.metadata["config_hash"], other.metadata["config_hash"]);
    // traces report excitation, which starts at zero
    let (time, exc) = (column(&first, "time_s"), column(&first, "excitation"));
    assert!(time.iter().zip(&exc).filter(|(t, _)| **t == 0.0).all(|(_, e)| *e == 0.0));
}

#[test]
fn report_aggregates_and_refuses_mixed_hashes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = write_config(dir.path(), "a.cfg", "[trap]\nn_ions = 3\n");
    for cmd in ["modes", "limits", "prsc"] {
        ok(&["-c", &cfg, cmd], &out);
    }
    ok(&["-c", &cfg, "scaling", "--nmax", "12"], &out);
    ok(&["report"], &out);
    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    let hash = rsc_tools::config::parse_config(Path::new(&cfg)).unwrap().hash();
    assert!(md.contains(&hash));
    for section in ["## modes", "## prsc", "## scaling", "## limits", "### scaling.csv", "| n_ions |"] {
        assert!(md.contains(section), "{section}");
    }
    assert!(md.find("## modes").unwrap() < md.find("## limits").unwrap());

    let other = write_config(dir.path(), "b.cfg", "[trap]\nn_ions = 4\n");
    ok(&["-c", &other, "modes"], &out);
    let o = rsc(&["report"], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("refused"));

    // a table swapped in from another run is caught as well
    let mixed = dir.path().join("mixed");
    ok(&["-c", &cfg, "modes"], &mixed);
    let alien = dir.path().join("alien");
    ok(&["-c", &other, "modes"], &alien);
    std::fs::copy(alien.join("modes.csv"), mixed.join("modes.csv")).unwrap();
    assert_eq!(rsc(&["report"], &mixed).status.code(), Some(1));
}

#[test]
fn exit_codes_separate_input_from_numerics() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| rsc(args, dir.path()).status.code();
    assert_eq!(code(&["-c", "/nonexistent.cfg", "modes"]), Some(1));
    let bad = write_config(dir.path(), "bad.cfg", "[trap]\nomega_z = 700\n");
    let o = rsc(&["-c", &bad, "modes"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("trap.omega_z"));
    let neg = write_config(dir.path(), "neg.cfg", "[trap]\nomega_z_khz = -1\n");
    assert_eq!(code(&["-c", &neg, "modes"]), Some(1));
    assert_eq!(code(&["crsc", "--sweep", "nbar0=1,2"]), Some(1));
    assert_eq!(code(&["modes", "--axis", "sideways"]), Some(1));
    assert_eq!(code(&["frobnicate"]), Some(1));
    let missing = dir.path().join("none.csv");
    assert_eq!(code(&["sideband", "--bounds", missing.to_str().unwrap()]), Some(1));
    let soft = write_config(dir.path(), "soft.cfg", "[trap]\nn_ions = 30\nomega_z_khz = 500\nomega_x_khz = 1500\n");
    assert_eq!(code(&["-c", &soft, "modes", "--axis", "radial"]), Some(2));
    assert_eq!(code(&["-c", &soft, "modes", "--axis", "axial"]), Some(0));
    assert_eq!(code(&["--help"]), Some(0));
}

#[test]
fn output_directory_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_rsc"))
        .arg("modes")
        .env("RSC_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(env_dir.join("modes.csv").exists());
    let flag_dir = dir.path().join("from_flag");
    let o = Command::new(env!("CARGO_BIN_EXE_rsc"))
        .args(["modes", "--out"])
        .arg(&flag_dir)
        .env("RSC_OUT_DIR", &env_dir)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(flag_dir.join("modes.csv").exists());
}

#[test]
fn eight_mode_noise_gives_bounds_in_the_measured_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "eight.cfg", "[trap]\nn_ions = 8\nomega_z_khz = 400.0\n");
    let spectrum = fixture("eight_mode_spectrum.csv");
    ok(&["-c", &cfg, "sideband", "--bounds", spectrum.to_str().unwrap()], dir.path());
    let t = ResultTable::read_csv(&dir.path().join("sideband_bounds.csv")).unwrap();
    let bounds = column(&t, "nbar_bound");
    assert_eq!(bounds.len(), 8);
    let designed = [0.25, 0.18, 0.11, 0.12, 0.09, 0.07, 0.08, 0.09];
    for (b, d) in bounds.iter().zip(designed) {
        assert!((0.95 * 0.07..=1.05 * 0.25).contains(b), "{b}");
        assert!((b / d - 1.0).abs() < 0.05, "{b} vs {d}");
    }
    let flags = t.column("flag").unwrap();
    assert!(t.rows.iter().all(|r| r[flags].to_string() == "ok"));
}

#[test]
fn carrier_traces_fit_back_to_their_com_occupation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "chain.cfg",
        "[trap]\nn_ions = 24\nomega_z_khz = 272.0\n[simulation]\ncom_nbar = 1.5\nflop_points = 60\n",
    );
    ok(&["-c", &cfg, "carrier"], dir.path());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("carrier.json")).unwrap()).unwrap();
    let ratio = summary["results"]["center_over_edge"].as_f64().unwrap();
    assert!(ratio > 1.1, "{ratio}");
    let traces = dir.path().join("carrier.csv");
    ok(&["-c", &cfg, "carrier", "--fit", traces.to_str().unwrap()], dir.path());
    let fit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("carrier_fit.json")).unwrap()).unwrap();
    assert!((fit["results"]["nbar"].as_f64().unwrap() - 1.5).abs() < 1e-9);
    assert_eq!(fit["results"]["flat"], false);
}
