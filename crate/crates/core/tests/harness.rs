use eqsentinel_core::harness::{
    parse_runs_csv, run_experiment, runs_csv, summarize, write_artifacts, ExperimentConfig, ExperimentId,
};

fn small(id: ExperimentId, runs: usize) -> ExperimentConfig {
    let mut config = ExperimentConfig::defaults(id);
    config.runs = runs;
    config
}

fn in_pool(threads: usize, config: &ExperimentConfig) -> String {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    let output = pool.install(|| run_experiment(config)).unwrap();
    runs_csv(&output.records)
}

#[test]
fn thread_count_does_not_change_results() {
    for (id, runs) in [(ExperimentId::NfDetect, 16), (ExperimentId::PreyMixture, 4), (ExperimentId::KlCheck, 8)] {
        let config = small(id, runs);
        let one = in_pool(1, &config);
        assert_eq!(one, in_pool(4, &config), "{id}");
        assert_eq!(one, in_pool(7, &config), "{id}");
    }
}

#[test]
fn seed_changes_the_streams() {
    let mut config = small(ExperimentId::NfDetect, 8);
    let first = in_pool(2, &config);
    config.seed += 1;
    assert_ne!(first, in_pool(2, &config));
}

#[test]
fn artifacts_roundtrip_through_disk() {
    let config = small(ExperimentId::NfSlack, 4);
    let output = run_experiment(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let written = write_artifacts(dir.path(), &output).unwrap();
    for name in ["runs.csv", "summary.csv", "config.txt"] {
        assert!(written.iter().any(|p| p.ends_with(name)), "{name} missing");
    }
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    let records = parse_runs_csv(&runs).unwrap();
    assert_eq!(runs_csv(&records), runs);
    let again = summarize(config.experiment, &records).unwrap();
    assert_eq!(
        again.to_csv(),
        std::fs::read_to_string(dir.path().join("summary.csv")).unwrap()
    );
    let text = std::fs::read_to_string(dir.path().join("config.txt")).unwrap();
    assert_eq!(ExperimentConfig::parse(&text, Some(config.experiment)).unwrap(), config);
}

#[test]
fn unwritable_directory_is_an_io_error() {
    let output = run_experiment(&small(ExperimentId::NfSlack, 2)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = write_artifacts(&blocker.join("sub"), &output).unwrap_err();
    assert!(matches!(err, eqsentinel_core::Error::Io { .. }));
}
