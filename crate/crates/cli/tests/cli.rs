use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn poroperm(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_poroperm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL: &str = r#"
[mesh]
length = 2.0
height = 1.0
dx = 0.25

[material]
youngs_modulus = 35e6
poisson_ratio = 0.3
viscosity = 1.307e-3
porosity = 0.4
grain_diameter = 2e-4

[relation]
kind = "network-inspired"
p_c = 0.4935

[time]
step = 0.5
end = 2.0
snapshots = [1.0, 2.0]

[problem]
kind = "high-pump-pressure"
pump_pressure = 5e6
"#;

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let o = poroperm(tmp.path(), &["network-sweep"]);
    assert_eq!(code(&o), 2);
    let o = poroperm(tmp.path(), &["network-sweep", "--topology", "hexagonal"]);
    assert_eq!(code(&o), 2);
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let o = poroperm(
        tmp.path(),
        &[
            "threshold-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--points",
            "0",
        ],
    );
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn network_sweep_outputs_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = [
        "network-sweep",
        "--topology",
        "triangular",
        "--nx",
        "10",
        "--ny",
        "6",
        "--trials",
        "12",
        "--seed",
        "5",
    ];
    for dir in [&a, &b] {
        let o = poroperm(dir, &args);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["records.csv", "bins.csv", "threshold.csv", "powerlaw.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name}");
    }
    let bins = read(&a, "bins.csv");
    assert!(bins.starts_with("# experiment: network-sweep-triangular-desk\n"));
    assert!(
        bins.contains("# seed: 5\n")
            && bins.contains("# profile: desk\n")
            && bins.contains("# version: poroperm ")
    );
    assert!(bins.contains("bin_center,kappa_n_low,kappa_n_high,count,mean_f_c,std_f_c"));

    let records = a.join("records.csv");
    let c = tmp.path().join("c");
    let o = poroperm(
        &c,
        &[
            "threshold-estimate",
            "--records",
            records.to_str().unwrap(),
            "--nx",
            "10",
            "--ny",
            "6",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let last = |s: String| s.lines().last().unwrap().to_string();
    assert_eq!(
        last(read(&a, "threshold.csv")),
        last(read(&c, "threshold.csv"))
    );
}

#[test]
fn relation_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let o = poroperm(
        tmp.path(),
        &["relation-curve", "--p-c", "0.5", "--points", "4"],
    );
    assert_eq!(code(&o), 0);
    let ni = read(tmp.path(), "curve_network-inspired_pc0.5.csv");
    assert!(ni.contains("# theta_hat: 0.2\n"));
    let mut rows = ni.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("theta_norm,kappa_norm"));
    let values: Vec<(f64, f64)> = rows
        .map(|l| {
            let (t, k) = l.split_once(',').unwrap();
            (t.parse().unwrap(), k.parse().unwrap())
        })
        .collect();
    for ((t, k), (te, ke)) in values
        .iter()
        .zip([(0.25, 0.0), (0.5, 0.0), (0.75, 0.5), (1.0, 1.0)])
    {
        assert!((t - te).abs() < 1e-12 && (k - ke).abs() < 1e-12, "{t},{k}");
    }
    assert_eq!(values.len(), 4);
    assert!(tmp.path().join("curve_kozeny-carman.csv").exists());
    let o = poroperm(tmp.path(), &["relation-curve", "--p-c", "1.5"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn biot_run_writes_series_fields_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = tmp.path().join("run");
    let o = poroperm(&out, &["biot-run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let series = read(&out, "timeseries.csv");
    let rows: Vec<&str> = series.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,Q_out,min_theta,min_kappa_n,max_abs_v");
    assert_eq!(rows.len(), 5);
    assert!(series.contains("# config: ") && series.contains("# relation: network-inspired"));
    for t in ["1", "2"] {
        let fields = read(&out, &format!("fields_t{t}.csv"));
        assert!(fields.contains("x,y,ux,uy,p,theta,kappa,vx,vy"));
        // 9 × 5 vertices
        assert_eq!(fields.lines().filter(|l| !l.starts_with('#')).count(), 46);
        let vtk = read(&out, &format!("fields_t{t}.vtk"));
        assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(vtk.contains("CELLS 64 256"));
    }
    let summary = read(&out, "summary.csv");
    assert!(summary.contains("t_end,kappa0,Q_out_avg,outlet_theta_n"));

    let again = tmp.path().join("again");
    assert_eq!(
        code(&poroperm(
            &again,
            &["biot-run", "--config", cfg.to_str().unwrap()]
        )),
        0
    );
    assert_eq!(series, read(&again, "timeseries.csv"));
    assert_eq!(read(&out, "fields_t2.csv"), read(&again, "fields_t2.csv"));
}

#[test]
fn invalid_config_lists_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.toml");
    fs::write(
        &cfg,
        SMALL
            .replace("poisson_ratio = 0.3", "poisson_ratio = 0.6")
            .replace("step = 0.5", "step = -1.0"),
    )
    .unwrap();
    let o = poroperm(tmp.path(), &["biot-run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(
        err.contains("poisson_ratio") && err.contains("time.step"),
        "{err}"
    );
    let o = poroperm(tmp.path(), &["biot-run", "--config", "/nonexistent.toml"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn desk_profile_caps_time_and_t_end_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("long.toml");
    fs::write(
        &cfg,
        SMALL
            .replace("end = 2.0", "end = 400.0")
            .replace("[1.0, 2.0]", "[1.0, 400.0]"),
    )
    .unwrap();
    let out = tmp.path().join("capped");
    let o = poroperm(
        &out,
        &[
            "biot-run",
            "--config",
            cfg.to_str().unwrap(),
            "--t-end",
            "1.5",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(read(&out, "manifest.txt").contains("t_end: 1.5\n"));
    assert!(out.join("fields_t1.csv").exists() && out.join("fields_t1.5.csv").exists());
}

#[test]
fn threshold_sweep_and_saddle_check() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("small.toml");
    fs::write(&cfg, SMALL).unwrap();
    let out = tmp.path().join("sweep");
    let o = poroperm(
        &out,
        &[
            "threshold-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--spacing",
            "0.25,0.5",
            "--p-c",
            "0,0.5",
            "--t-end",
            "1",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for dx in ["0.25", "0.5"] {
        let sweep = read(&out, &format!("sweep_dx{dx}.csv"));
        let rows: Vec<&str> = sweep.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "p_c,Q_out_avg,relation,status");
        assert!(rows[1].starts_with(",") && rows[1].ends_with(",kozeny-carman,ok"));
        assert_eq!(rows.len(), 4);
    }
    let o = poroperm(
        &out,
        &[
            "threshold-sweep",
            "--config",
            cfg.to_str().unwrap(),
            "--spacing",
            "0.3",
            "--p-c",
            "0.5",
        ],
    );
    assert_eq!(code(&o), 3);

    let out = tmp.path().join("saddle");
    let o = poroperm(&out, &["saddle-check"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let saddle = read(&out, "saddle.csv");
    assert_eq!(saddle.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn shipped_configs_run() {
    let tmp = tempfile::tempdir().unwrap();
    let mut n = 0;
    for entry in fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = tmp.path().join(path.file_stem().unwrap());
            let o = poroperm(
                &out,
                &[
                    "biot-run",
                    "--config",
                    path.to_str().unwrap(),
                    "--t-end",
                    "0.5",
                ],
            );
            assert_eq!(
                code(&o),
                0,
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&o.stderr)
            );
            n += 1;
        }
    }
    assert_eq!(n, 6);
}
