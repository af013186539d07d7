use std::collections::BTreeMap;
use std::path::Path;

use spinreg::{RegisterConfig, Topology};
use spinreg_cli::{parse_manifest_str, run_ensemble, Command, Grid, Overrides, RunManifest};

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn manifest(command: Command, dir: &Path) -> RunManifest {
    let register = RegisterConfig::new(6, Topology::Lattice, 1.0, 0.3).with_seed(11);
    RunManifest {
        realizations: 4,
        output_dir: dir.to_path_buf(),
        time_grid: Some(Grid::Geometric { start: 0.01, stop: 100.0, points: 40 }),
        j_grid: Some(Grid::Values { values: vec![0.02, 0.2] }),
        sizes: vec![4, 6],
        ..RunManifest::new(command, register)
    }
}

#[test]
fn every_command_writes_its_schema() {
    let cases = [
        (Command::Spectrum, "spectrum.csv", "realization,k,energy,S_k_bits,participation,parity"),
        (Command::Strength, "strength.csv", "realization,initial_state,energy,weight"),
        (Command::Evolve, "evolve.csv", "realization,time,W_i,S_bits,Np_t"),
        (Command::TcScan, "tc_scan.csv", "n,tc_measured,tc_eq24,tc_eq25,gamma_fit,deltaE2"),
        (Command::JcScan, "jc_scan.csv", "J,mean_S_k,stderr,mean_ratio,stderr_ratio"),
    ];
    for (command, file, header) in cases {
        let tmp = tempfile::tempdir().unwrap();
        let summary = run_ensemble(&manifest(command, tmp.path())).unwrap();
        assert!(!summary.partial, "{command}: {:?}", summary.failures);
        let files = read_dir(tmp.path());
        let text = String::from_utf8(files[file].clone()).unwrap();
        assert_eq!(text.lines().next(), Some(header), "{command}");
        assert!(text.lines().count() > 1, "{command}");
        assert!(files.contains_key("summary.json"));
        assert!(files.keys().all(|f| !f.starts_with('.')), "temporary files left: {:?}", files.keys());
    }
}

#[test]
fn spectrum_rows_cover_both_sectors() {
    let tmp = tempfile::tempdir().unwrap();
    let m = RunManifest { realizations: 2, ..manifest(Command::Spectrum, tmp.path()) };
    run_ensemble(&m).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 64);
    assert!(text.contains(",even\n") && text.contains(",odd\n"));
}

#[test]
fn single_realization_has_undefined_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let m = RunManifest { realizations: 1, ..manifest(Command::Evolve, tmp.path()) };
    let summary = run_ensemble(&m).unwrap();
    let w = summary.observables["final_W_i"];
    assert_eq!((w.count, w.stderr), (1, None));
    let last = std::fs::read_to_string(tmp.path().join("evolve.csv")).unwrap();
    let last: f64 = last.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(w.mean, last);
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert!(json["observables"]["final_W_i"]["stderr"].is_null());
    assert_eq!(json["manifest"]["command"], "evolve");
    assert!(json["version"].as_str().unwrap().starts_with("spinreg "));
}

#[test]
fn reruns_and_thread_counts_are_byte_identical() {
    for command in [Command::Spectrum, Command::Strength, Command::Evolve, Command::JcScan] {
        let outputs: Vec<_> = [Some(1), Some(8), Some(8)]
            .into_iter()
            .map(|threads| {
                let tmp = tempfile::tempdir().unwrap();
                let m = RunManifest {
                    threads,
                    store_components: command == Command::Evolve,
                    ..manifest(command, tmp.path())
                };
                let m = RunManifest { top_components: if command == Command::Evolve { 5 } else { 0 }, ..m };
                run_ensemble(&m).unwrap();
                read_dir(tmp.path())
            })
            .collect();
        assert_eq!(outputs[0], outputs[1], "{command}: 1 vs 8 threads");
        assert_eq!(outputs[1], outputs[2], "{command}: rerun");
    }
}

#[test]
fn components_follow_the_largest_stationary_states() {
    let tmp = tempfile::tempdir().unwrap();
    let m = RunManifest {
        store_components: true,
        top_components: 3,
        realizations: 2,
        ..manifest(Command::Evolve, tmp.path())
    };
    run_ensemble(&m).unwrap();
    let text = std::fs::read_to_string(tmp.path().join("components.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("realization,time,state,W_f"));
    assert_eq!(text.lines().count(), 1 + 2 * 3 * 40);
}

#[test]
fn failed_scan_marks_the_run_partial() {
    let tmp = tempfile::tempdir().unwrap();
    // Two qubits give a two-level strength function with nothing to fit.
    let m = RunManifest { sizes: vec![2], ..manifest(Command::TcScan, tmp.path()) };
    let summary = run_ensemble(&m).unwrap();
    assert!(summary.partial);
    assert_eq!(summary.completed, 0);
    assert_eq!(summary.failures.len(), 1);
    assert_eq!(summary.failures[0].index, None);
    assert!(tmp.path().join("summary.json").exists());
}

#[test]
fn invalid_manifest_is_refused_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let mut m = manifest(Command::Spectrum, tmp.path());
    m.register.n = 40;
    m.realizations = 0;
    let err = run_ensemble(&m).unwrap_err().to_string();
    assert!(err.contains("cap of 14") && err.contains("realizations"), "{err}");
    assert!(read_dir(tmp.path()).is_empty());
}

#[test]
fn manifest_text_drives_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
command = "strength"
realizations = 3
output_dir = "{}"

[register]
n = 8
topology = "chain"
delta0 = 1.0
j_scale = 0.3
master_seed = 5
"#,
        tmp.path().display()
    );
    let m = parse_manifest_str(&text, &Overrides { threads: Some(2), ..Overrides::default() }).unwrap();
    let summary = run_ensemble(&m).unwrap();
    assert_eq!((summary.completed, summary.master_seed), (3, 5));
    assert!(summary.observables["second_moment"].mean > 0.0);
    assert!(summary.manifest.get("threads").is_none() && summary.manifest.get("output_dir").is_none());
    assert_eq!(summary.manifest["register"]["n"], 8);
}
