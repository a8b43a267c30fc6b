use std::fs;
use std::path::Path;
use std::process::Command as Proc;

use skdv_cli::config::{parse_config, Command, Override};
use skdv_cli::{run_cli, EXIT_CHECK_FAILED, EXIT_PASS, EXIT_RUNTIME, EXIT_USAGE};

fn bin() -> Proc {
    Proc::new(env!("CARGO_BIN_EXE_skdv"))
}

fn run(args: &[&str], out: &Path) -> i32 {
    let mut v = vec!["skdv"];
    v.extend_from_slice(args);
    let out = out.to_str().unwrap();
    v.extend_from_slice(&["--out-dir", out]);
    run_cli(v, &[])
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn defaults_match_documented_values() {
    let cfg = parse_config(Command::Evolve, None, &[], &[]).unwrap();
    assert_eq!(cfg.regions.delta_u, 0.05);
    assert_eq!(cfg.regions.delta_v, 0.05);
    assert_eq!(cfg.regularity.b, 0.51);
    assert_eq!(cfg.regularity.b_prime, -0.49);
    assert_eq!(cfg.regularity.eta_plus, 0.01);
    assert!(cfg.warnings().is_empty());
}

#[test]
fn ibp_v_above_two_is_advisory() {
    let flags = [
        Override::new("evolve.mode", "ibp_v"),
        Override::new("regularity.k", 2.5),
        Override::new("regularity.s", 0.0),
    ];
    let cfg = parse_config(Command::Evolve, None, &[], &flags).unwrap();
    let w = cfg.warnings();
    assert_eq!(w.len(), 1);
    assert!(w[0].contains("advisory"), "{w:?}");
}

#[test]
fn negative_dt_names_the_key() {
    let err = parse_config(Command::Evolve, None, &[], &[Override::new("evolve.dt", -0.1)]).unwrap_err();
    assert!(format!("{err:#}").contains("dt"), "{err:#}");
    let tmp = tempfile::tempdir().unwrap();
    let out = bin().args(["evolve", "--dt=-0.1", "--out-dir"]).arg(tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("`evolve.dt`"));
}

#[test]
fn unknown_keys_are_rejected_by_name() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("exp.toml");
    fs::write(&file, "[evolve]\nn = 128\ntimestep = 0.1\n").unwrap();
    let err = parse_config(Command::Evolve, Some(&file), &[], &[]).unwrap_err();
    assert!(format!("{err:#}").contains("timestep"), "{err:#}");
    let err = parse_config(Command::Evolve, None, &[], &[Override::new("bogus", 1)]).unwrap_err();
    assert!(format!("{err:#}").contains("bogus"), "{err:#}");
}

#[test]
fn command_mismatch_in_file_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("exp.toml");
    fs::write(&file, "command = \"fre\"\n").unwrap();
    assert!(parse_config(Command::Evolve, Some(&file), &[], &[]).is_err());
}

#[test]
fn precedence_is_flags_then_env_then_file() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("exp.toml");
    fs::write(&file, "out_dir = \"from-file\"\nthreads = 4\n[evolve]\ndt = 0.002\nn = 128\n").unwrap();
    let env = vec![("SKDV_OUT_DIR".to_string(), "from-env".to_string()), ("SKDV_THREADS".to_string(), "2".to_string())];
    let cfg = parse_config(Command::Evolve, Some(&file), &env, &[]).unwrap();
    assert_eq!(cfg.out_dir, Path::new("from-env"));
    assert_eq!(cfg.threads, Some(2));
    assert_eq!(cfg.evolve.dt, 0.002);
    assert_eq!(cfg.evolve.n, 128);
    let flags = [Override::new("out_dir", "from-flag"), Override::new("evolve.dt", 0.004)];
    let cfg = parse_config(Command::Evolve, Some(&file), &env, &flags).unwrap();
    assert_eq!(cfg.out_dir, Path::new("from-flag"));
    assert_eq!(cfg.evolve.dt, 0.004);
    assert_eq!(cfg.evolve.n, 128);
    let bad = vec![("SKDV_THREADS".to_string(), "many".to_string())];
    assert!(parse_config(Command::Evolve, None, &bad, &[]).is_err());
}

#[test]
fn set_override_parses_literals() {
    let o = Override::parse("evolve.n = 64").unwrap();
    assert_eq!(o.value, toml::Value::Integer(64));
    let o = Override::parse("evolve.mode=ibp_u").unwrap();
    assert_eq!(o.value, toml::Value::String("ibp_u".into()));
    assert!(Override::parse("novalue").is_err());
}

#[test]
fn empty_invocation_prints_usage_and_exits_2() {
    let out = bin().output().unwrap();
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    let text = String::from_utf8_lossy(&out.stdout).to_string() + &String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "{text}");
    assert_eq!(run_cli(["skdv"], &[]), EXIT_USAGE);
    assert_eq!(run_cli(["skdv", "evolve", "--no-such-flag"], &[]), EXIT_USAGE);
}

#[test]
fn counterexample_cor41_exits_zero_with_positive_slope() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["counterexample", "--family", "cor41", "--kminus-s", "3.5"], tmp.path()), EXIT_PASS);
    let m = manifest(tmp.path());
    assert_eq!(m["passed"], true);
    let slope = m["checks"][0]["measured"].as_f64().unwrap();
    assert!(slope > 0.0);
    let csv = fs::read_to_string(tmp.path().join("counterexample.csv")).unwrap();
    assert!(csv.starts_with("family,N,k,s,b,bprime,rho,c,value\n"));
    assert_eq!(csv.lines().count(), 1 + 7);
}

#[test]
fn fre_example_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let code = run(&["fre", "--id", "lem:probU", "--k", "1", "--s", "0", "--eps", "0.3"], tmp.path());
    assert_eq!(code, EXIT_PASS);
    let m = manifest(tmp.path());
    let names: Vec<&str> = m["checks"].as_array().unwrap().iter().map(|c| c["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"exponent_M") && names.contains(&"exponent_alpha"));
    for c in m["checks"].as_array().unwrap() {
        assert!(c["claimed"].is_number() && c["measured"].is_number());
    }
    let csv = fs::read_to_string(tmp.path().join("fre_sweep.csv")).unwrap();
    assert!(csv.starts_with("estimate_id,k,s,eps,alpha,M,value,flag\n"));
}

#[test]
fn failed_check_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    // a slope tolerance of zero cannot be met by a finite sweep
    let code = run(&["counterexample", "--family", "cor41", "--kminus-s", "3.5", "--set", "tolerances.slope_dualized=0.0"], tmp.path());
    assert_eq!(code, EXIT_CHECK_FAILED);
    assert_eq!(manifest(tmp.path())["passed"], false);
}

#[test]
fn evolve_writes_manifest_with_hash_and_csv() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["evolve", "--t-end", "0.1", "--n", "128"], tmp.path()), EXIT_PASS);
    let m = manifest(tmp.path());
    assert_eq!(m["extra"]["initial_data_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["config"]["regions"]["delta_u"], 0.05);
    let csv = fs::read_to_string(tmp.path().join("evolution.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,mass,momentum,energy,norm_Hk,norm_Hs"));
    let row = lines.next().unwrap();
    assert!(row.split(',').all(|x| x.contains('e')), "{row}");
    assert!(fs::read_to_string(tmp.path().join("summary.txt")).unwrap().contains("PASS"));
    let leftovers = fs::read_dir(tmp.path()).unwrap().filter(|e| e.as_ref().unwrap().file_name().to_string_lossy().ends_with(".partial")).count();
    assert_eq!(leftovers, 0);
}

#[test]
fn blow_up_leaves_partial_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    // huge amplitude, coarse step and no step subdivision
    let code = run(
        &["evolve", "--t-end", "1", "--dt", "0.05", "--set", "evolve.amplitude=1e6", "--set", "evolve.stability_c=1e9"],
        tmp.path(),
    );
    assert_eq!(code, EXIT_RUNTIME);
    assert!(tmp.path().join("manifest.json.partial").exists());
    assert!(!tmp.path().join("manifest.json").exists());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("manifest.json.partial")).unwrap()).unwrap();
    assert!(m["error"].is_string());
}

#[test]
fn catalog_lists_every_table() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["catalog"], tmp.path()), EXIT_PASS);
    let c: serde_json::Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("catalog.json")).unwrap()).unwrap();
    for key in ["phases", "estimates", "regimes", "admissible"] {
        assert!(!c[key].is_null(), "{key}");
    }
}

#[test]
fn evolve_csv_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["evolve", "--t-end", "0.1", "--data", "random", "--n", "128", "--seed", "7"];
    assert_eq!(run(&args, a.path()), EXIT_PASS);
    assert_eq!(run(&args, b.path()), EXIT_PASS);
    assert_eq!(fs::read(a.path().join("evolution.csv")).unwrap(), fs::read(b.path().join("evolution.csv")).unwrap());
}
