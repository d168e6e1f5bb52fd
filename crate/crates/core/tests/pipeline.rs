use csihar_core::dataset_io::{export_dataset_csv, load_dataset, load_dataset_cached, preprocess_dataset};
use csihar_core::evaluation::{cross_validate_dataset, per_subcarrier_report};
use csihar_core::{
    generate_kernels, synthgen, ChannelMask, ClassSet, ClassifierBank, DatasetConfig, EvalConfig,
    SynthSpec,
};

fn small_eval(kernels: usize) -> EvalConfig {
    EvalConfig {
        runs: 1,
        kernel_count: kernels,
        ..EvalConfig::default()
    }
}

#[test]
fn csv_round_trip_through_loader_and_evaluation() {
    let spec = SynthSpec {
        sample_rate_hz: 1000.0,
        ..SynthSpec::new(6, 3, 800, 10).with_seed(4)
    };
    let raw = synthgen::generate(&spec).unwrap();
    let config = DatasetConfig {
        amplitude_count: 3,
        class_set: ClassSet::Six,
        ..DatasetConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let written = export_dataset_csv(&raw, &config, dir.path()).unwrap();
    assert_eq!(written.len(), 60);

    let (loaded, report) = load_dataset(dir.path(), &config).unwrap();
    assert_eq!(report.files_loaded, 60);
    assert_eq!(loaded.class_counts(), vec![10; 6]);
    assert!(loaded.samples.iter().all(|s| s.length() == 400));
    // decimated and normalized in memory gives the same windows
    let direct = preprocess_dataset(&raw, &config).unwrap();
    for s in &loaded.samples {
        let twin = direct.samples.iter().find(|d| s.source_id.contains(&d.source_id)).unwrap();
        assert_eq!(s.signals, twin.signals);
        assert_eq!(s.label, twin.label);
    }

    let cache = tempfile::tempdir().unwrap();
    let (first, _) = load_dataset_cached(dir.path(), &config, cache.path()).unwrap();
    let (second, hits) = load_dataset_cached(dir.path(), &config, cache.path()).unwrap();
    assert_eq!(first, second);
    assert_eq!(hits.cache_hits, 60);

    let report = cross_validate_dataset(&loaded, &small_eval(100)).unwrap().report(None).unwrap();
    assert!(report.average_accuracy >= 0.95, "{}", report.summary());
}

#[test]
fn one_informative_subcarrier() {
    let spec = SynthSpec::new(4, 5, 600, 15).with_seed(6).with_informative(vec![0]);
    let ds = preprocess_dataset(
        &synthgen::generate(&spec).unwrap(),
        &DatasetConfig {
            source_rate_hz: 500.0,
            ..DatasetConfig::default()
        },
    )
    .unwrap();
    let config = EvalConfig {
        subcarriers_per_antenna: 5,
        ..small_eval(200)
    };
    let r = per_subcarrier_report(&ds, &config).unwrap();
    assert!(r.accuracies[0] >= 0.9, "{:?}", r.accuracies);
    for a in &r.accuracies[1..] {
        assert!((a - 0.25).abs() <= 0.2, "{:?}", r.accuracies);
    }
    assert_eq!(r.rows()[0], (1, 1, r.accuracies[0]));

    let outcome = cross_validate_dataset(&ds, &config).unwrap();
    let solo = ChannelMask::single(5, 0).unwrap();
    let masked = outcome.report(Some(&solo)).unwrap();
    assert_eq!(masked.overall_accuracy, r.accuracies[0]);
}

#[test]
fn trained_bank_predicts_held_out_windows() {
    let spec = SynthSpec::new(3, 4, 500, 12).with_seed(8);
    let ds = preprocess_dataset(
        &synthgen::generate(&spec).unwrap(),
        &DatasetConfig {
            source_rate_hz: 500.0,
            ..DatasetConfig::default()
        },
    )
    .unwrap();
    let bank = ClassifierBank::fit(&ds, generate_kernels(3, 150, 500).unwrap(), &csihar_core::default_alphas())
        .unwrap();
    let fresh = preprocess_dataset(
        &synthgen::generate(&spec.clone().with_seed(99)).unwrap(),
        &DatasetConfig {
            source_rate_hz: 500.0,
            ..DatasetConfig::default()
        },
    )
    .unwrap();
    let correct = fresh
        .samples
        .iter()
        .filter(|s| bank.predict(s, None).unwrap().winner == s.label)
        .count();
    assert!(correct as f64 >= 0.95 * fresh.samples.len() as f64, "{correct}/{}", fresh.samples.len());
}
