use std::fs;
use std::process::Command;
use tempfile::tempdir;
use transverse_cd::structures::{known_failures, StructureFile};
use transverse_cd_cli::report::Report;
use transverse_cd_cli::{run, Outcome, EXIT_FAILED, EXIT_IO, EXIT_PASS, EXIT_USAGE};

fn tcd(args: &str) -> Outcome {
    run(std::iter::once("tcd").chain(args.split_whitespace()))
}

fn tcd_json(args: &str) -> (i32, Report) {
    let out = tcd(&format!("{args} --json"));
    let report = Report::from_json(&out.stdout).unwrap_or_else(|e| panic!("{args}: {e}\n{}", out.stderr));
    (out.code, report)
}

#[test]
fn cd_check_with_auto_parameters_on_h1() {
    let (code, r) = tcd_json("cd-check --model heisenberg:1 --params auto --trials 10000 --seed 7");
    assert_eq!(code, EXIT_PASS);
    assert_eq!(r.params.as_deref(), Some("CD(0, 1/2, 1, 2)"));
    assert_eq!(r.checks[0].detail["violations"], 0);
    assert_eq!((r.schema, r.seed), (1, Some(7)));
    assert_eq!(r.version, env!("CARGO_PKG_VERSION"));
    assert_eq!(r.config["command"], "cd-check");
    assert_eq!(r.config["sampling"]["trials"], 10000);
}

#[test]
fn cd_check_counts_violations_for_a_wrong_dimension() {
    let (code, r) = tcd_json("cd-check --model heisenberg:1 --params 0,1/2,1,19/10 --trials 3000 --seed 7");
    assert_eq!(code, EXIT_FAILED);
    assert!(r.checks[0].detail["violations"].as_u64().unwrap() > 0);
}

#[test]
fn falsifier_reports_a_counterexample() {
    let (code, r) = tcd_json("cd-falsify --model heisenberg:1 --params 0,3/5,1,2 --trials 10000 --seed 7");
    assert_eq!(code, EXIT_FAILED);
    assert!(r.checks[0].detail["residual"].as_str().unwrap().starts_with('-'));
    let (code, _) = tcd_json("cd-falsify --model heisenberg:1 --params auto --trials 2000 --seed 7");
    assert_eq!(code, EXIT_PASS);
}

#[test]
fn diameter_matches_the_closed_form() {
    let out = tcd("diameter --params 1,0.5,1,2");
    assert_eq!(out.code, EXIT_PASS);
    assert!(out.stdout.contains("bound 53.3145"), "{}", out.stdout);
    let (_, r) = tcd_json("diameter --params 1,0.5,1,2");
    let q = r.checks[0].detail["value"].as_f64().unwrap();
    assert!((q - 12.0 * 2f64.sqrt() * std::f64::consts::PI).abs() < 1e-6);
    // No bound without positive Ricci-type curvature.
    assert_eq!(tcd("diameter --params 0,1/2,1,2").code, EXIT_USAGE);
}

#[test]
fn exit_codes() {
    assert_eq!(tcd("validate --file missing.json").code, EXIT_IO);
    assert_eq!(tcd("report missing.json").code, EXIT_IO);
    assert_eq!(tcd("frobnicate").code, EXIT_USAGE);
    assert_eq!(tcd("validate").code, EXIT_USAGE);
    assert_eq!(tcd("validate --model nosuch").code, EXIT_USAGE);
    assert_eq!(tcd("cd-check --model heisenberg:1 --params 1,2").code, EXIT_USAGE);
    // "auto" needs a Carnot structure.
    let out = tcd("cd-check --model su2 --params auto");
    assert_eq!(out.code, EXIT_USAGE);
    assert!(out.stderr.contains("Carnot"));
    assert_eq!(tcd("--help").code, EXIT_PASS);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_tcd");
    let code = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.code();
    assert_eq!(code(&["catalog"]), Some(0));
    assert_eq!(code(&["validate", "--file", "missing.json"]), Some(3));
    assert_eq!(code(&["cd-falsify", "--model", "heisenberg:1", "--params", "1/10,1/2,1,2"]), Some(1));
    assert_eq!(code(&["bochner"]), Some(2));
}

#[test]
fn catalog_and_structural_commands() {
    let out = tcd("catalog");
    assert_eq!(out.code, EXIT_PASS);
    for name in ["g_rho1", "su2", "sl2", "heisenberg", "quaternionic_heisenberg", "random_step2"] {
        assert!(out.stdout.contains(name));
    }
    for spec in ["su2", "sl2", "g_rho1:-2/3", "heisenberg:2", "quaternionic_heisenberg", "random_step2:4:2:3"] {
        assert_eq!(tcd(&format!("validate --model {spec}")).code, EXIT_PASS, "{spec}");
        assert_eq!(tcd(&format!("yang-mills --model {spec}")).code, EXIT_PASS, "{spec}");
        assert_eq!(tcd(&format!("bochner --model {spec} --trials 100 --seed 3")).code, EXIT_PASS, "{spec}");
    }
}

#[test]
fn known_failures_are_rejected_from_files() {
    let dir = tempdir().unwrap();
    for k in known_failures() {
        let path = dir.path().join(format!("{}.json", k.violation));
        fs::write(&path, StructureFile::from_structure(&k.structure).to_json()).unwrap();
        let cmd = if k.rejected_by == "validate" { "validate" } else { "yang-mills" };
        let (code, r) = tcd_json(&format!("{cmd} --file {}", path.display()));
        assert_eq!(code, EXIT_FAILED, "{}", k.violation);
        let checks: Vec<&str> =
            r.checks[0].detail["violations"].as_array().unwrap().iter().map(|v| v["check"].as_str().unwrap()).collect();
        assert!(checks.contains(&k.violation), "{checks:?}");
    }
}

#[test]
fn structure_files_round_trip_through_the_cli() {
    let dir = tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    assert_eq!(tcd(&format!("validate --model quaternionic_heisenberg --emit {}", a.display())).code, EXIT_PASS);
    assert_eq!(tcd(&format!("validate --file {} --emit {}", a.display(), b.display())).code, EXIT_PASS);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    // Same constants from the file as from the catalog.
    let from_file = tcd(&format!("constants --file {}", a.display())).stdout;
    let from_catalog = tcd("constants --model quaternionic_heisenberg").stdout;
    assert_eq!(from_file, from_catalog);
    assert!(from_catalog.contains("rho2 = 1.000000000000, kappa = 3.000000000000, H-type: true"));

    fs::write(&a, "{ not json").unwrap();
    assert_eq!(tcd(&format!("validate --file {}", a.display())).code, EXIT_IO);
}

#[test]
fn constants_and_improved_bounds() {
    let out = tcd("constants --model heisenberg:1");
    assert_eq!(out.code, EXIT_PASS);
    assert!(out.stdout.contains("CD(0, 1/2, 1, 2)"));
    assert!(out.stdout.contains("D = 8"));
    assert_eq!(tcd("constants --model su2").code, EXIT_USAGE);
    assert_eq!(tcd("constants --params 1,1/2,1,2").code, EXIT_PASS);

    let (code, r) = tcd_json("improved-bounds --model heisenberg:1 --trials 2000 --seed 1");
    assert_eq!(code, EXIT_PASS);
    assert!(r.checks[0].detail["tight"].as_u64().unwrap() > 0);
    assert_eq!(tcd("improved-bounds --model su2 --params 1,1/2,1,2 --trials 500").code, EXIT_PASS);
}

#[test]
fn saved_reports_render_byte_identically() {
    let dir = tempdir().unwrap();
    for args in [
        "cd-check --model heisenberg:2 --trials 300 --seed 11",
        "cd-falsify --model heisenberg:1 --params 0,3/5,1,2 --trials 1000",
        "diameter --params 7/3,1/2,1,2",
        "validate --model random_step2:5:2:9",
        "heat-sim --model heisenberg:1 --h 0.125 --half-width 1.5 --time 0.05",
    ] {
        let path = dir.path().join("r.json");
        let first = tcd(&format!("{args} --out {}", path.display()));
        let again = tcd(&format!("report {}", path.display()));
        assert_eq!(first.stdout, again.stdout, "{args}");
        assert_eq!(first.code, again.code);
        // Deterministic given the configuration and seed.
        let saved = fs::read_to_string(&path).unwrap();
        tcd(&format!("{args} --out {}", path.display()));
        assert_eq!(saved, fs::read_to_string(&path).unwrap(), "{args}");
    }
}

#[test]
fn report_rejects_other_schemas() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("r.json");
    tcd(&format!("catalog --out {}", path.display()));
    let text = fs::read_to_string(&path).unwrap().replace("\"schema\": 1", "\"schema\": 2");
    fs::write(&path, text).unwrap();
    assert_eq!(tcd(&format!("report {}", path.display())).code, EXIT_IO);
}

#[test]
fn heat_simulation_resumes_from_a_snapshot() {
    let dir = tempdir().unwrap();
    let snap = dir.path().join("u.bin");
    let base = "heat-sim --model heisenberg:1 --h 0.125 --half-width 1.5";
    let (code, whole) = tcd_json(&format!("{base} --time 0.1"));
    assert_eq!(code, EXIT_PASS);
    assert_eq!(tcd(&format!("{base} --time 0.05 --snapshot {}", snap.display())).code, EXIT_PASS);
    let (code, resumed) = tcd_json(&format!("heat-sim --resume {} --time 0.1", snap.display()));
    assert_eq!(code, EXIT_PASS);
    let mass = |r: &Report| r.checks[0].detail["mass"].as_f64().unwrap();
    assert!((mass(&whole) - mass(&resumed)).abs() < 1e-12);
    assert_eq!(tcd(&format!("heat-sim --resume {}", dir.path().join("none.bin").display())).code, EXIT_IO);
    assert_eq!(tcd("heat-sim --model su2 --h 0.125 --half-width 1.5").code, EXIT_USAGE);
}

#[test]
fn estimate_suite_on_a_coarse_grid() {
    let (code, r) = tcd_json("estimates --model heisenberg:1 --h 0.125 --half-width 2");
    assert_eq!(code, EXIT_PASS);
    for check in ["mass_positivity", "li_yau", "harnack", "on_diagonal_bound", "gradient_decay", "variational"] {
        assert!(r.checks.iter().any(|c| c.name == check && c.passed), "{check}");
    }
    assert_eq!(tcd("estimates --model su2 --params 1,1/2,1,2").code, EXIT_USAGE);
}
