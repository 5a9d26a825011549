//! End-to-end checks of the command surface through the library entry point,
//! plus exit codes and the data-directory override through the binary.

use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::sync::OnceLock;

use clap::Parser;

use rydex_cli::cli::Cli;
use rydex_cli::error::{CliError, EXIT_CONFIG, EXIT_DATA_GAP, EXIT_IO, EXIT_USAGE};
use rydex_cli::files::Table;
use rydex_cli::pulse_file::PulseFile;
use rydex_cli::units::mhz;
use rydex_core::{embed_target, gate_fidelity, propagate, SystemConfig};

fn run(args: &[&str]) -> Result<Option<PathBuf>, CliError> {
    let mut full = vec!["rydex"];
    full.extend_from_slice(args);
    let cli = Cli::try_parse_from(full).unwrap_or_else(|e| panic!("{e}"));
    rydex_cli::execute(&cli.command)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_table(p: &Path) -> Table {
    Table::parse(&std::fs::read_to_string(p).unwrap())
}

fn cell(t: &Table, row: usize, col: &str) -> String {
    t.rows[row][t.column(col).unwrap_or_else(|| panic!("no column {col}"))].clone()
}

fn value(t: &Table, row: usize, col: &str) -> f64 {
    cell(t, row, col).parse().unwrap()
}

/// Row of `source` in a budget-shaped table (optionally at one grid value).
fn budget_value(t: &Table, source: &str, grid: Option<(&str, f64)>) -> f64 {
    let src = t.column("source").unwrap();
    let inf = t.column("infidelity").unwrap();
    t.rows
        .iter()
        .find(|r| {
            r[src] == source && grid.is_none_or(|(c, v)| r[t.column(c).unwrap()].parse::<f64>().unwrap() == v)
        })
        .unwrap_or_else(|| panic!("no row for {source}"))[inf]
        .parse()
        .unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    /// Converged Scheme A phase pulse, τΩ = 2π·3, V/Ω = 2, N = 24.
    pulse: PathBuf,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let pulse = root.join("base.json");
        run(&[
            "optimize", "--scheme", "A", "--modulation", "phase", "--tau-omega", "2pi*3", "--v-over-omega", "2",
            "--segments", "24", "--restarts", "3", "--max-iterations", "1500", "--seed", "5", "--out", s(&pulse),
        ])
        .unwrap();
        let f = PulseFile::load(&pulse).unwrap();
        assert!(f.diagnostics.infidelity < 1e-4, "fixture pulse not converged: {}", f.diagnostics.infidelity);
        Fixture { _dir: dir, root, pulse }
    })
}

fn white_psd(path: &Path, kind: &str, level: f64, f_max: f64) {
    std::fs::write(path, format!("# kind: {kind}\n0 {level}\n{f_max} {level}\n")).unwrap();
}

#[test]
fn pulse_file_round_trip_is_bit_exact() {
    let fx = fixture();
    let a = PulseFile::load(&fx.pulse).unwrap();
    let copy = fx.root.join("copy.json");
    a.save(&copy).unwrap();
    let b = PulseFile::load(&copy).unwrap();
    assert_eq!(a, b);
    for (ch, va) in a.pulse.control_map() {
        let vb = b.pulse.controls(*ch).unwrap();
        assert!(va.iter().zip(vb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert_eq!(std::fs::read(&fx.pulse).unwrap(), std::fs::read(&copy).unwrap());

    let mut json: serde_json::Value = serde_json::from_slice(&std::fs::read(&copy).unwrap()).unwrap();
    json["schema_version"] = 99.into();
    std::fs::write(&copy, serde_json::to_vec(&json).unwrap()).unwrap();
    assert!(matches!(PulseFile::load(&copy), Err(CliError::Config(_))));
}

#[test]
fn single_point_sweep_equals_optimize_and_replay_is_identical() {
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.json");
    let common = ["--scheme", "B", "--modulation", "rabi", "--segments", "10", "--max-iterations", "150", "--seed", "42"];
    let mut opt = vec!["optimize", "--tau-omega", "2pi*2", "--v-over-omega", "1.5", "--restarts", "1", "--out", s(&single)];
    opt.extend(common);
    let manifest = run(&opt).unwrap().unwrap();
    let sweep_dir = dir.path().join("sweep");
    let mut sweep = vec!["sweep", "--tau-omega", "2pi*2", "--v-over-omega", "1.5", "--runs", "1", "--out-dir", s(&sweep_dir)];
    sweep.extend(common);
    run(&sweep).unwrap();
    let from_sweep = std::fs::read(sweep_dir.join("pulses/p00000.json")).unwrap();
    assert_eq!(std::fs::read(&single).unwrap(), from_sweep);
    let landscape = read_table(&sweep_dir.join("landscape.csv"));
    assert_eq!(landscape.rows.len(), 1);
    assert!(landscape.headers.iter().all(|h| h == "file" || h == "seed" || h == "stream" || h == "converged" || h.contains('[')));

    // Replay overwrites the outputs with identical bytes.
    let before = std::fs::read(&single).unwrap();
    std::fs::remove_file(&single).unwrap();
    run(&["replay", "--manifest", s(&manifest)]).unwrap();
    assert_eq!(std::fs::read(&single).unwrap(), before);
    run(&["replay", "--manifest", s(&manifest)]).unwrap();
    assert_eq!(std::fs::read(&single).unwrap(), before);

    let recorded: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap()).unwrap();
    assert_eq!(recorded["command"], "optimize");
    assert_eq!(recorded["master_seed"], 42);
    assert_eq!(recorded["outputs"][0], s(&single));
}

#[test]
fn sweep_rejects_bad_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    let err = run(&["sweep", "--tau-omega=-1", "--v-over-omega", "1", "--out-dir", s(&out)]).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
    let err = run(&["sweep", "--tau-omega", "2", "--v-over-omega", "1", "--runs", "0", "--out-dir", s(&out)]).unwrap_err();
    assert!(matches!(err, CliError::Usage(_)));
}

/// Library of three pulses with hand-set diagnostics.
///
/// | file | infidelity | T_int·V | T_ryd·Ω | τΩ |
/// | a    | 1e-7       | 3       | 10      | 20 |
/// | b    | 1e-6       | 1       | 30      | 15 |
/// | c    | 1e-4       | 2       | 5       | 25 |
fn synthetic_library(dir: &Path) -> Vec<PathBuf> {
    let base = PulseFile::load(&fixture().pulse).unwrap();
    let omega = base.pulse.max_rabi();
    let v = base.v_dipole();
    [("a", 1e-7, 3.0, 10.0, 20.0), ("b", 1e-6, 1.0, 30.0, 15.0), ("c", 1e-4, 2.0, 5.0, 25.0)]
        .iter()
        .map(|&(name, inf, tintv, trydo, tau)| {
            let mut f = base.clone();
            f.pulse = f.pulse.with_duration(tau / omega).unwrap();
            f.diagnostics.infidelity = inf;
            f.diagnostics.t_int = tintv / v;
            f.diagnostics.t_ryd = trydo / omega;
            let p = dir.join(format!("{name}.json"));
            f.save(&p).unwrap();
            p
        })
        .collect()
}

#[test]
fn select_orders_filters_and_picks_extremes() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("lib");
    std::fs::create_dir_all(&lib).unwrap();
    synthetic_library(&lib);
    let out = dir.path().join("sel.csv");
    let files = |t: &Table| -> Vec<String> {
        (0..t.rows.len())
            .map(|i| Path::new(&cell(t, i, "file")).file_stem().unwrap().to_string_lossy().into_owned())
            .collect()
    };
    for (rank, expected) in
        [("t-ryd", ["c", "a", "b"]), ("t-int-v", ["b", "c", "a"]), ("tau", ["b", "a", "c"]), ("infidelity", ["a", "b", "c"])]
    {
        let manifest =
            run(&["select", "--library", s(&lib), "--rank-by", rank, "--out", s(&out)]).unwrap().unwrap();
        assert_eq!(files(&read_table(&out)), expected, "rank by {rank}");
        let m: serde_json::Value = serde_json::from_slice(&std::fs::read(manifest).unwrap()).unwrap();
        assert!(m["summary"]["min_t_ryd_omega"].as_str().unwrap().ends_with("c.json"));
        assert!(m["summary"]["min_t_int_v"].as_str().unwrap().ends_with("b.json"));
        assert!(m["summary"]["min_tau_omega"].as_str().unwrap().ends_with("b.json"));
    }
    // All three are mutually non-dominated.
    let t = read_table(&out);
    assert!((0..3).all(|i| cell(&t, i, "pareto") == "true"));

    run(&["select", "--library", s(&lib), "--max-infidelity", "1e-5", "--out", s(&out)]).unwrap();
    assert_eq!(files(&read_table(&out)), ["a", "b"]);

    let best = dir.path().join("best.json");
    run(&["select", "--library", s(&lib), "--max-tryd-omega", "20", "--rank-by", "tau", "--copy-best", s(&best), "--out", s(&out)])
        .unwrap();
    assert_eq!(std::fs::read(&best).unwrap(), std::fs::read(lib.join("a.json")).unwrap());

    // Empty result is an explicit, successful outcome.
    let manifest = run(&["select", "--library", s(&lib), "--max-infidelity", "1e-9", "--out", s(&out)]).unwrap().unwrap();
    assert!(read_table(&out).rows.is_empty());
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(manifest).unwrap()).unwrap();
    assert_eq!(m["summary"]["selected"], 0);
    assert_eq!(m["warnings"].as_array().unwrap().len(), 1);

    // One pulse: ranked first.
    run(&["select", "--library", s(&lib.join("b.json")), "--out", s(&out)]).unwrap();
    assert_eq!(files(&read_table(&out)), ["b"]);
}

#[test]
fn budget_sources_and_psd_requirements() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("budget.csv");
    run(&["budget", "--pulse", s(&fx.pulse), "--sources", "none", "--out", s(&out)]).unwrap();
    let t = read_table(&out);
    assert_eq!(t.rows.len(), 1);
    assert_eq!(cell(&t, 0, "source"), "noise_free");
    let f = PulseFile::load(&fx.pulse).unwrap();
    assert!((value(&t, 0, "infidelity") - f.diagnostics.infidelity).abs() < 1e-9);

    let err = run(&["budget", "--pulse", s(&fx.pulse), "--sources", "laser_phase", "--out", s(&out)]).unwrap_err();
    assert!(matches!(err, CliError::Config(_)), "{err}");

    let psd = dir.path().join("rin.psd");
    white_psd(&psd, "intensity", 1e-13, 1e8);
    run(&[
        "budget", "--pulse", s(&fx.pulse), "--sources", "decay,laser_intensity", "--intensity-psd", s(&psd), "--shots",
        "20", "--out", s(&out),
    ])
    .unwrap();
    let t = read_table(&out);
    let names: Vec<_> = (0..t.rows.len()).map(|i| cell(&t, i, "source")).collect();
    assert_eq!(names, ["noise_free", "decay", "laser_intensity", "all_combined"]);
    assert!(budget_value(&t, "laser_intensity", None) > 0.0);
}

#[test]
fn frt_zero_psd_and_audit() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let psd = dir.path().join("zero.psd");
    white_psd(&psd, "phase", 0.0, 1e9);
    let out = dir.path().join("frt");
    run(&["frt", "--pulse", s(&fx.pulse), "--kind", "both", "--psd", s(&psd), "--grid", "2e8:40", "--out-dir", s(&out)])
        .unwrap();
    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["total_infidelity"], 0.0);
    let audit = summary["zero_frequency"].as_array().unwrap();
    assert_eq!(audit.len(), 2);
    for a in audit {
        assert!(a["phase"].as_f64().unwrap() >= -1e-12 && a["intensity"].is_f64());
    }
    let t = read_table(&out.join("response.csv"));
    assert_eq!(t.rows.len(), 40);
    assert!(t.column("I_phase_ch1r").is_some() && t.column("I_intensity_ch0rp").is_some());
    assert!(t.column("SI_phase_ch1r").is_some() && t.column("SI_intensity_ch1r").is_none());

    // A PSD that stops short of the grid is reported.
    white_psd(&psd, "phase", 1e-12, 1e6);
    let manifest = run(&["frt", "--pulse", s(&fx.pulse), "--kind", "phase", "--psd", s(&psd), "--grid", "2e8:40", "--out-dir", s(&out)])
        .unwrap()
        .unwrap();
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(manifest).unwrap()).unwrap();
    assert!(m["warnings"][0].as_str().unwrap().contains("zero outside"));
    assert!(matches!(
        run(&["frt", "--pulse", s(&fx.pulse), "--grid", "nonsense", "--out-dir", s(&out)]),
        Err(CliError::Usage(_))
    ));
}

#[test]
fn sensitivity_curves_follow_the_physics() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.csv");
    run(&[
        "sensitivity", "--pulse", s(&fx.pulse), "--vary", "temperature", "--grid", "0.1,1,20", "--sources",
        "interaction,doppler", "--shots", "150", "--out", s(&out),
    ])
    .unwrap();
    let t = read_table(&out);
    let col = "temperature";
    let at = |v: f64| budget_value(&t, "all_combined", Some((col, v)));
    let ratio = at(0.1) / at(1.0);
    assert!((0.8..=1.2).contains(&ratio), "flat below the quantum limit: {ratio}");
    assert!(at(20.0) > 2.0 * at(1.0));

    let psd = dir.path().join("rin.psd");
    white_psd(&psd, "intensity", 1e-12, 1e9);
    let out = dir.path().join("omega.csv");
    run(&[
        "sensitivity", "--pulse", s(&fx.pulse), "--vary", "omega", "--grid", "5,10,20", "--sources",
        "decay,laser_intensity", "--intensity-psd", s(&psd), "--shots", "60", "--out", s(&out),
    ])
    .unwrap();
    let t = read_table(&out);
    let decay = |v: f64| budget_value(&t, "decay", Some(("omega", v)));
    let r = decay(10.0) / decay(20.0);
    assert!((r / 2.0 - 1.0).abs() < 0.15, "decay ratio under doubled omega: {r}");
    let rin: Vec<f64> = [5.0, 10.0, 20.0].iter().map(|&v| budget_value(&t, "laser_intensity", Some(("omega", v)))).collect();
    assert!(rin[0] <= rin[1] * 1.05 && rin[1] <= rin[2] * 1.05, "intensity noise not non-decreasing: {rin:?}");

    // n outside the data: a flagged row, not a failure.
    let out = dir.path().join("n.csv");
    run(&["sensitivity", "--pulse", s(&fx.pulse), "--vary", "n", "--grid", "3,61", "--sources", "decay", "--out", s(&out)])
        .unwrap();
    let t = read_table(&out);
    assert_eq!(cell(&t, 0, "flagged"), "true");
    let d61 = budget_value(&t, "decay", Some(("n", 61.0)));
    assert!(d61 > 0.0);
}

#[test]
fn rescale_preserves_dynamics() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let p10 = dir.path().join("p10.json");
    let p10b = dir.path().join("p10b.json");
    let p20 = dir.path().join("p20.json");
    run(&["rescale", "--pulse", s(&fx.pulse), "--omega-max-mhz", "10", "--out", s(&p10)]).unwrap();
    run(&["rescale", "--pulse", s(&p10), "--omega-max-mhz", "10", "--out", s(&p10b)]).unwrap();
    assert_eq!(std::fs::read(&p10).unwrap(), std::fs::read(&p10b).unwrap());
    run(&["rescale", "--pulse", s(&p10), "--omega-max-mhz", "20", "--out", s(&p20)]).unwrap();
    let (a, b) = (PulseFile::load(&p10).unwrap(), PulseFile::load(&p20).unwrap());
    assert!((b.pulse.duration() / a.pulse.duration() - 0.5).abs() < 1e-15);
    assert!((b.pulse.max_rabi() - mhz(20.0)).abs() < 1e-6);
    let fidelity = |f: &PulseFile| {
        let cfg = SystemConfig::new(f.pulse.scheme(), f.v_dipole()).unwrap();
        gate_fidelity(&propagate(&cfg, &f.pulse, 8).unwrap(), &embed_target(f.diagnostics.theta).unwrap())
    };
    assert!((fidelity(&a) - fidelity(&b)).abs() < 1e-12);

    let out = dir.path().join("b.csv");
    let decay = |p: &Path| {
        // Hardware Ω equal to the pulse's own keeps the time axis.
        let hw = dir.path().join(format!("{}.toml", p.file_stem().unwrap().to_string_lossy()));
        let f = PulseFile::load(p).unwrap();
        let text = rydex_cli::hardware::PRESETS[0].1.replace("rabi_mhz = 10.0", &format!("rabi_mhz = {}", f.pulse.max_rabi() / mhz(1.0)));
        std::fs::write(&hw, text).unwrap();
        run(&["budget", "--pulse", s(p), "--hardware", s(&hw), "--sources", "decay", "--out", s(&out)]).unwrap();
        budget_value(&read_table(&out), "decay", None)
    };
    let r = decay(&p20) / decay(&p10);
    assert!((r - 0.5).abs() < 0.05, "decay under doubled omega: {r}");

    let flagged = dir.path().join("flagged.json");
    let m = run(&["rescale", "--pulse", s(&p10), "--omega-max-mhz", "10", "--v-dipole-mhz", "7", "--out", s(&flagged)])
        .unwrap()
        .unwrap();
    let f = PulseFile::load(&flagged).unwrap();
    assert!(f.diagnostics.flagged);
    assert!((f.v_dipole() - mhz(7.0)).abs() < 1e-6);
    assert!(f.diagnostics.infidelity > 10.0 * a.diagnostics.infidelity);
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(m).unwrap()).unwrap();
    assert_eq!(m["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn continuation_writes_steps() {
    let fx = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cont");
    run(&["continue", "--pulse", s(&fx.pulse), "--theta-to", "pi*0.8", "--steps", "2", "--threshold", "1e-4", "--max-iterations", "400", "--out-dir", s(&out)])
        .unwrap();
    let t = read_table(&out.join("continuation.csv"));
    assert_eq!(t.rows.len(), 2);
    assert!((value(&t, 1, "theta") - 0.8 * std::f64::consts::PI).abs() < 1e-15);
    for i in 0..2 {
        assert!(value(&t, i, "infidelity") < 1e-4);
        assert!(value(&t, i, "distance_rms").is_finite());
    }
    assert!(PulseFile::load(&out.join("step_02.json")).is_ok());
}

#[test]
fn atomic_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("life.csv");
    run(&["atomic", "lifetime", "--series", "S1", "--n", "60", "--out", s(&out)]).unwrap();
    let tau = value(&read_table(&out), 0, "lifetime");
    assert!((tau / 90.99 - 1.0).abs() < 0.25, "{tau}");

    run(&["atomic", "c3", "--n", "61", "--out", s(&out)]).unwrap();
    assert!((value(&read_table(&out), 0, "c3_scaled") - 1570.34).abs() < 1e-9);

    run(&["atomic", "energy", "--n", "100,1000", "--out", s(&out)]).unwrap();
    let t = read_table(&out);
    let b100 = value(&t, 0, "binding");
    let b1000 = value(&t, 1, "binding");
    assert!(b1000 < b100 / 90.0 && b1000 > 0.0);
    let ion = rydex_atomic::constants::IONIZATION_GHZ;
    assert!((value(&t, 1, "energy") - ion).abs() / ion < 1e-5);
    let ns = value(&t, 0, "n_star") / value(&t, 1, "n_star");
    assert!((b1000 / b100 / (ns * ns) - 1.0).abs() < 1e-9);

    // Partial coverage: flagged row plus data.
    let m = run(&["atomic", "c3", "--n", "5,61", "--out", s(&out)]).unwrap().unwrap();
    let t = read_table(&out);
    assert_eq!(cell(&t, 0, "flagged"), "true");
    assert_eq!(cell(&t, 1, "flagged"), "false");
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(m).unwrap()).unwrap();
    assert_eq!(m["summary"]["data_gaps"], 1);
}

fn binary(args: &[&str], env: Option<(&str, &Path)>) -> std::process::Output {
    let mut cmd = Process::new(env!("CARGO_BIN_EXE_rydex"));
    cmd.args(args);
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let code = |args: &[&str]| binary(args, None).status.code().unwrap();
    assert_eq!(code(&["optimize", "--bogus"]), EXIT_USAGE);
    assert_eq!(code(&["optimize", "--tau-omega", "3", "--v-over-omega", "1", "--segments", "1", "--out", "x.json"]), EXIT_USAGE);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema_version\": 1}").unwrap();
    assert_eq!(code(&["rescale", "--pulse", s(&bad), "--omega-max-mhz", "1", "--out", "y.json"]), EXIT_CONFIG);
    assert_eq!(code(&["atomic", "c3", "--n", "5"]), EXIT_DATA_GAP);
    assert_eq!(code(&["rescale", "--pulse", s(&dir.path().join("missing.json")), "--omega-max-mhz", "1", "--out", "y.json"]), EXIT_IO);
    assert_eq!(code(&["atomic", "c3", "--n", "61"]), 0);
    let codes = [EXIT_USAGE, EXIT_CONFIG, EXIT_DATA_GAP, rydex_cli::error::EXIT_NUMERICAL, EXIT_IO];
    assert!(codes.iter().all(|c| *c != 0 && codes.iter().filter(|d| *d == c).count() == 1));
    assert_eq!(CliError::Numerical("x".into()).exit_code(), rydex_cli::error::EXIT_NUMERICAL);
}

#[test]
fn data_directory_override() {
    let dir = tempfile::tempdir().unwrap();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../atomic/data/quantum_defects.txt");
    std::fs::copy(&shipped, dir.path().join("quantum_defects.txt")).unwrap();
    let args = ["atomic", "lifetime", "--n", "40"];
    let builtin = binary(&args, None);
    let copied = binary(&args, Some(("RYDEX_DATA_DIR", dir.path())));
    assert!(builtin.status.success() && copied.status.success());
    assert_eq!(builtin.stdout, copied.stdout);

    std::fs::write(dir.path().join("quantum_defects.txt"), "this is not a defect table\n").unwrap();
    let broken = binary(&args, Some(("RYDEX_DATA_DIR", dir.path())));
    assert_eq!(broken.status.code(), Some(EXIT_CONFIG));
    let empty = tempfile::tempdir().unwrap();
    let missing = binary(&args, Some(("RYDEX_DATA_DIR", empty.path())));
    assert_eq!(missing.status.code(), Some(EXIT_CONFIG));
}
