use std::fs;
use std::path::Path;

use heckesign_cli::commands::{DetectorRun, NfRow, TwoRouteRow};
use heckesign_cli::output::{read_csv, read_json, read_table};
use heckesign::cheb_minorant::CertificationReport;
use heckesign::petersson::DecayRow;
use tempfile::tempdir;

fn run(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["heckesign"];
    argv.extend_from_slice(args);
    let out = out.to_str().unwrap().to_owned();
    argv.extend_from_slice(&["--out", &out]);
    heckesign_cli::run(argv)
}

#[test]
fn certification_matrix_passes_and_round_trips() {
    let dir = tempdir().unwrap();
    assert_eq!(run(&["verify-lemma21"], dir.path()), 0);
    let rows: Vec<CertificationReport> = read_csv(&dir.path().join("certification.csv")).unwrap();
    assert_eq!(rows.len(), 35);
    assert!(rows.iter().all(|r| r.pass));

    assert_eq!(run(&["verify-lemma21", "--format", "json"], dir.path()), 0);
    let json: Vec<CertificationReport> = read_json(&dir.path().join("certification.json")).unwrap();
    assert_eq!(serde_json::to_string(&json).unwrap(), serde_json::to_string(&rows).unwrap());
}

#[test]
fn shrunk_bound_is_a_property_failure() {
    let dir = tempdir().unwrap();
    assert_eq!(run(&["verify-lemma21", "--L", "8", "--bound-scale", "1e-3"], dir.path()), 1);
}

#[test]
fn empty_matrix_passes() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "degrees = []\n").unwrap();
    assert_eq!(run(&["verify-lemma21", "--config", cfg.to_str().unwrap()], dir.path()), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempdir().unwrap();
    assert_eq!(run(&["nf-table", "--k-min", "13"], dir.path()), 2);
    assert_eq!(run(&["nf-table", "--k-min", "30", "--k-max", "20"], dir.path()), 2);
    assert_eq!(run(&["expand", "--delta", "0.7"], dir.path()), 2);
    assert_eq!(run(&["no-such-command"], dir.path()), 2);
    assert_eq!(
        run(&["eigen", "--config", dir.path().join("missing.toml").to_str().unwrap()], dir.path()),
        2
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "k_min = 12\nk_max = 40\nn_max = 50\nformat = \"json\"\n").unwrap();
    let c = cfg.to_str().unwrap();
    assert_eq!(run(&["nf-table", "--config", c, "--k-max", "12", "--format", "csv"], dir.path()), 0);
    let rows: Vec<NfRow> = read_csv(&dir.path().join("nf_table.csv")).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn weight_twelve_changes_sign_at_two() {
    let dir = tempdir().unwrap();
    assert_eq!(run(&["nf-table", "--k-min", "12", "--k-max", "12", "--n-max", "50"], dir.path()), 0);
    let rows: Vec<NfRow> = read_csv(&dir.path().join("nf_table.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!((rows[0].n_f, rows[0].p_f), (Some(2), Some(2)));
    let text = fs::read_to_string(dir.path().join("nf_table.csv")).unwrap();
    assert!(text.starts_with("k,form_index,n_f,p_f,ambiguous,log_k_over_loglog_k_sq\n"));
}

#[test]
fn parallel_output_is_byte_identical() {
    let serial = tempdir().unwrap();
    let parallel = tempdir().unwrap();
    for (dir, jobs) in [(&serial, "1"), (&parallel, "4")] {
        for cmd in ["nf-table", "eigen", "petersson-check"] {
            let code = run(
                &[cmd, "--k-min", "12", "--k-max", "60", "--n-max", "100", "--jobs", jobs],
                dir.path(),
            );
            assert!(code == 0 || cmd == "petersson-check", "{cmd} exited {code}");
        }
    }
    for name in [
        "nf_table.csv",
        "nf_summary.csv",
        "eigenforms.csv",
        "petersson_weights.csv",
        "petersson_decay.csv",
        "petersson_two_route.csv",
        "petersson_summary.json",
    ] {
        let a = fs::read(serial.path().join(name)).unwrap();
        let b = fs::read(parallel.path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn petersson_rows_for_the_discriminant() {
    let dir = tempdir().unwrap();
    let code = run(&["petersson-check", "--k-min", "12", "--k-max", "12"], dir.path());
    // the single-form weight at k = 12 sits outside the two-route band
    assert_eq!(code, 1);
    let decay: Vec<DecayRow> = read_table(&dir.path().join("petersson_decay.csv")).unwrap();
    let lambda2 = 24.0 / 2f64.powf(5.5);
    let row = |m: u64| decay.iter().find(|r| r.m == m).unwrap().defect;
    assert!(row(1) < 1e-12);
    assert!((row(2) - lambda2).abs() < 1e-12);
    let routes: Vec<TwoRouteRow> = read_csv(&dir.path().join("petersson_two_route.csv")).unwrap();
    assert_eq!(routes.len(), 1);
    assert!(!routes[0].within_band);
}

#[test]
fn detector_manual_and_coupled_runs() {
    let dir = tempdir().unwrap();
    let code = run(
        &["detector-run", "--k-min", "24", "--k-max", "24", "--L", "2", "--z", "3"],
        dir.path(),
    );
    assert_eq!(code, 0);
    let runs: Vec<DetectorRun> = read_json(&dir.path().join("detector.json")).unwrap();
    assert_eq!(runs.len(), 1);
    assert_eq!((runs[0].report.params.j, runs[0].report.params.degree), (2, 2));
    assert!(runs[0].expansion.unwrap().defect <= 1e-8);
    assert!(runs[0].report.indicator_dominates);

    let dir = tempdir().unwrap();
    assert_eq!(run(&["detector-run", "--k-min", "16", "--k-max", "16"], dir.path()), 0);
    let runs: Vec<DetectorRun> = read_json(&dir.path().join("detector.json")).unwrap();
    assert_eq!(runs[0].report.params.z, 2.0);
    assert_eq!(runs[0].report.params.primes, vec![2]);
}

#[test]
fn expansion_and_eigen_dumps_round_trip() {
    let dir = tempdir().unwrap();
    assert_eq!(run(&["expand", "--L", "4", "--delta", "0.1", "--format", "json"], dir.path()), 0);
    let dumps: Vec<heckesign::sato_tate::ExpansionDump> =
        read_json(&dir.path().join("expansion.json")).unwrap();
    assert_eq!(dumps[0].a.len(), 5);

    assert_eq!(
        run(&["eigen", "--k-min", "24", "--k-max", "24", "--n-max", "30", "--format", "json"], dir.path()),
        0
    );
    let forms: Vec<heckesign_cli::commands::EigenformDump> =
        read_json(&dir.path().join("eigenforms.json")).unwrap();
    assert_eq!(forms.len(), 2);
    assert_eq!(forms[0].lambda_p.len(), 10);
    let again = serde_json::to_string_pretty(&forms).unwrap() + "\n";
    assert_eq!(again, fs::read_to_string(dir.path().join("eigenforms.json")).unwrap());
}
