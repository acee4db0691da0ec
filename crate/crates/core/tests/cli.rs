use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn featdp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_featdp"))
        .args(args)
        .output()
        .expect("spawn featdp")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("presets").join(name)
}

#[test]
fn calibrate_reports_the_reference_variance() {
    let out = featdp(&[
        "calibrate",
        "--config",
        preset("adversary_epsilon.cfg").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| {
        row[header.iter().position(|h| *h == name).unwrap()]
            .parse::<f64>()
            .unwrap()
    };
    assert!((col("sigma2") - 173.353).abs() < 0.01);
    assert!((col("c_w") - 8.7711).abs() < 1e-4);
    assert!((col("d_z") - 1.79515).abs() < 1e-5);
    assert!(text.ends_with('\n') && !text.contains('\r'));
}

#[test]
fn sweep_header_is_fixed_and_json_matches_csv() {
    let args = ["sweep", "--axis", "epsilon", "--values", "0.5,1,2", "--trials", "60"];
    let csv = stdout(&featdp(&args));
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "axis_value,sigma2,c_w,d_z,nu2,bound_adv,gamma_star,mse_adv_emp,mse_server_emp,bound_server,acc_emp,acc_bound,ci95_mse_adv"
    );
    assert_eq!(csv.lines().count(), 4);

    let mut json_args = args.to_vec();
    json_args.extend(["--output", "json"]);
    let json: serde_json::Value = serde_json::from_str(&stdout(&featdp(&json_args))).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 3);
    let names: Vec<&str> = header.split(',').collect();
    for (obj, line) in rows.iter().zip(csv.lines().skip(1)) {
        let keys: Vec<&String> = obj.as_object().unwrap().keys().collect();
        assert_eq!(keys, names);
        for (name, cell) in names.iter().zip(line.split(',')) {
            assert_eq!(obj[*name].as_f64().unwrap(), cell.parse::<f64>().unwrap(), "{name}");
        }
    }
}

#[test]
fn config_errors_exit_with_one() {
    let out = featdp(&["calibrate", "--set", "epsilon=0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon>0"));

    assert_eq!(
        featdp(&["calibrate", "--config", "/no/such/file.cfg"]).status.code(),
        Some(1)
    );
    assert_eq!(featdp(&["calibrate", "--set", "colour=blue"]).status.code(), Some(1));
    assert_eq!(
        featdp(&["sweep", "--axis", "nope", "--values", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(featdp(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn infeasible_dimension_target_exits_with_two() {
    let out = featdp(&["dimension", "--set", "omega=4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("infeasible"));
}

#[test]
fn dimension_reports_both_solvers() {
    let out = featdp(&["dimension", "--set", "epsilon=20", "--set", "omega=2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let modes: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(modes, ["explicit", "consistent"]);
}

#[test]
fn duplicate_keys_warn_and_last_wins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dup.cfg");
    std::fs::write(&cfg, "epsilon = 1\nepsilon = 4\n").unwrap();
    let out = featdp(&["calibrate", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let row = stdout(&out).lines().nth(1).unwrap().to_string();
    assert!(row.starts_with("4,"));
}

#[test]
fn presets_parse_and_run_every_subcommand() {
    for name in [
        "adversary_epsilon.cfg",
        "accuracy_dimension.cfg",
        "acquisition.cfg",
        "massive_mimo.cfg",
    ] {
        let out = featdp(&["calibrate", "--config", preset(name).to_str().unwrap()]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let small = ["--trials", "50", "--seed", "5"];
    for cmd in [vec!["bound"], vec!["simulate"], vec!["mimo", "--set", "M=8"]] {
        let mut args = cmd.clone();
        args.extend(small);
        let out = featdp(&args);
        assert!(
            out.status.success(),
            "{cmd:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let acq = preset("acquisition.cfg");
    let out = featdp(&["acquire-demo", "--config", acq.to_str().unwrap(), "--trials", "50"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn seed_changes_simulated_output() {
    let a = stdout(&featdp(&["simulate", "--trials", "40", "--seed", "1"]));
    let b = stdout(&featdp(&["simulate", "--trials", "40", "--seed", "2"]));
    let a2 = stdout(&featdp(&["simulate", "--trials", "40", "--seed", "1"]));
    assert_ne!(a, b);
    assert_eq!(a, a2);
}

#[test]
fn out_flag_writes_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cal.json");
    let out = featdp(&["calibrate", "--output", "json", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(v[0]["sigma2"].as_f64().unwrap() > 173.0);
}
