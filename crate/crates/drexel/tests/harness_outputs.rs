use std::collections::BTreeMap;
use std::path::Path;

use drexel::harness::ExperimentReport;
use drexel::{io, parse_config, run_experiment};
use drexel_core::rng::aux_stream;
use drexel_core::energy::energy_value;
use drexel_core::rbm::{exact_log_likelihood, train_rbm, BinaryDataset, RbmTrainConfig};
use drexel_core::StateVector;
use rand::Rng;

fn run(text: &str, dir: &Path) -> ExperimentReport {
    let mut cfg = parse_config(text).unwrap();
    cfg.output.dir = dir.to_path_buf();
    run_experiment(&cfg).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

const WAVE: &str = "kind = synthetic\nenergy = wave\nlevels = 32\nsampler = dmala\nalpha = 0.1\n\
                    iterations = 10000\nrepeats = 3\nseed = 5\n";

#[test]
fn synthetic_run_reports_all_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run(WAVE, tmp.path());
    let summary = read(tmp.path(), "summary.csv");
    for metric in ["kl", "mmd", "nll", "jump_rate", "accept_low"] {
        assert!(summary.lines().any(|l| l.starts_with(&format!("{metric},"))), "{metric}");
        assert_eq!(report.values(metric).len(), 3);
    }
    for seed in 5..8 {
        assert!(tmp.path().join(format!("run_{seed}.csv")).exists());
        assert!(tmp.path().join(format!("density_{seed}.pgm")).exists());
    }
    let trace = read(tmp.path(), "run_5.csv");
    assert_eq!(trace.lines().next().unwrap(), "iteration,energy_low,energy_high,accepted_low,accepted_high,swapped");
    assert_eq!(trace.lines().count(), 10_001);
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(WAVE, a.path());
    run(WAVE, b.path());
    let files = |d: &Path| -> BTreeMap<String, Vec<u8>> {
        std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.file_name().unwrap() != "timing.txt")
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
            .collect()
    };
    assert_eq!(files(a.path()), files(b.path()));
}

#[test]
fn thread_count_does_not_change_results() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&format!("{WAVE}threads = 1\n"), a.path());
    run(&format!("{WAVE}threads = 3\n"), b.path());
    assert_eq!(read(a.path(), "metrics.csv"), read(b.path(), "metrics.csv"));
}

#[test]
fn summary_matches_metrics_file() {
    let tmp = tempfile::tempdir().unwrap();
    run(WAVE, tmp.path());
    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for line in read(tmp.path(), "metrics.csv").lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        values.entry(f[2].to_string()).or_default().push(f[3].parse().unwrap());
    }
    let summary = read(tmp.path(), "summary.csv");
    assert_eq!(summary.lines().count() - 1, values.len());
    for line in summary.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let v = &values[f[0]];
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((f[1].parse::<f64>().unwrap() - mean).abs() <= 1e-12, "{line}");
        assert!((f[2].parse::<f64>().unwrap() - std).abs() <= 1e-12, "{line}");
        assert_eq!(f[3].parse::<usize>().unwrap(), v.len());
    }
}

#[test]
fn ising_truth_switches_from_enumeration_to_reference_chain() {
    let base = "kind = ising\nsampler = dmala\nalpha = 0.3\niterations = 2000\nrepeats = 1\n";
    let small = tempfile::tempdir().unwrap();
    run(&format!("{base}side = 4\n"), small.path());
    assert!(read(small.path(), "metadata.txt").contains("truth = exact enumeration over 16 spins"));
    let large = tempfile::tempdir().unwrap();
    let report = run(&format!("{base}side = 5\n[metrics]\nreference_steps = 2000\n"), large.path());
    assert!(read(large.path(), "metadata.txt").contains("truth = heat-bath reference chain, 2000 sweeps"));
    let curve = read(large.path(), &format!("curve_{}.csv", report.repeats[0].seed));
    assert!(curve.lines().count() >= 2);
}

#[test]
fn oracle_check_on_two_spins_with_matched_chains() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run(
        "kind = oracle-check\ntopology = chain\nspins = 2\nsampler = drexel\nalpha = 0.3\nalpha_high = 0.3\n\
         tau_high = 1\n",
        tmp.path(),
    );
    let text = report.oracle.clone().unwrap();
    assert!(report.checks_passed, "{text}");
    let residual = report.repeats[0].metric("balance_residual").unwrap();
    assert!(residual <= 1e-10, "{residual}");
    assert!(text.lines().any(|l| l.starts_with("PASS spectral")), "{text}");
    assert!(text.contains("overall = PASS"));
    assert_eq!(read(tmp.path(), "oracle_report.txt"), text);
}

#[test]
fn oracle_check_reports_failure_without_erroring() {
    let tmp = tempfile::tempdir().unwrap();
    let report = run(
        "kind = oracle-check\ntopology = chain\nspins = 2\nsampler = drexel\nalpha = 0.2\nalpha_high = 0.4\n\
         tau_high = 2\n",
        tmp.path(),
    );
    assert!(!report.checks_passed);
    assert!(report.oracle.unwrap().contains("overall = FAIL"));
}

#[test]
fn trained_model_roundtrips_through_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = BinaryDataset::new(4, vec![1, 1, 0, 0, 0, 0, 1, 1, 1, 0, 1, 0, 0, 1, 0, 1]).unwrap();
    io::save_dataset(&data, &tmp.path().join("data.bin")).unwrap();
    let mut cfg = parse_config(
        "kind = rbm-train\ndataset = data.bin\n[rbm]\nhidden = 3\niterations = 100\nbatch_size = 2\nseed = 11\n",
    )
    .unwrap();
    cfg.model.dataset = Some(tmp.path().join("data.bin"));
    cfg.output.dir = tmp.path().join("out");
    let report = run_experiment(&cfg).unwrap();
    let loaded = io::load_rbm(&tmp.path().join("out/model.bin")).unwrap();
    let tc = RbmTrainConfig {
        hidden: 3,
        iterations: 100,
        batch_size: 2,
        seed: 11,
        ..RbmTrainConfig::default()
    };
    let trained = train_rbm(&data, &tc).unwrap().model;
    let mut rng = aux_stream(3);
    for _ in 0..100 {
        let s = StateVector::new((0..4).map(|_| rng.random_range(0..2)).collect());
        let (a, b) = (energy_value(&loaded, &s).unwrap(), energy_value(&trained, &s).unwrap());
        assert_eq!(a.to_bits(), b.to_bits());
    }
    let ll = exact_log_likelihood(&loaded, &data).unwrap();
    assert_eq!(report.repeats[0].metric("log_likelihood").unwrap().to_bits(), ll.to_bits());
}
