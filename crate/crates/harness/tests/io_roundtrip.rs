mod common;

use cascade_core::fit::{ClassifierMode, ClassifierSpec, FitSpec};
use cascade_core::gnn::TabularScorer;
use cascade_core::{
    fit_offline, run_sdr, sample_trace_with, FeatureModel, FrontierPolicy, GinWeights, InformationTrace,
};
use cascade_core::{Rule, SdrConfig};
use cascade_harness::fixtures;
use cascade_harness::io::{self, IoError, OutcomeRow};
use std::fs;

fn traces(n: u64, features: bool) -> Vec<InformationTrace> {
    let models = fixtures::three_hypotheses();
    let f = FeatureModel::separated(3, 2, 3.0, 0.5).unwrap();
    (0..n)
        .map(|i| {
            let k = (i % 3) as usize;
            let feats = features.then_some(&f);
            sample_trace_with(models.model(k), feats, k, 1 + (i as usize % 30), FrontierPolicy::UniformFrontier, i)
                .unwrap()
        })
        .collect()
}

#[test]
fn thousand_traces_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for features in [false, true] {
        let ts = traces(1000, features);
        let path = dir.path().join("t.jsonl");
        io::write_traces(&path, &ts).unwrap();
        assert_eq!(io::read_traces(&path).unwrap(), ts);
    }
}

#[test]
fn writes_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let ts = traces(200, true);
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    io::write_traces(&a, &ts).unwrap();
    io::write_traces(&b, &io::read_traces(&a).unwrap()).unwrap();
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let (c, d) = (dir.path().join("c.csv"), dir.path().join("d.csv"));
    io::write_traces_csv(&c, &ts).unwrap();
    io::write_traces_csv(&d, &ts).unwrap();
    assert_eq!(fs::read(&c).unwrap(), fs::read(&d).unwrap());
    let text = fs::read_to_string(&c).unwrap();
    assert_eq!(text.lines().next().unwrap(), "trace_id,label,index,parent,type,xu,xv");
    assert_eq!(text.lines().count(), 1 + ts.iter().map(|t| t.len()).sum::<usize>());
}

#[test]
fn malformed_lines_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    let good = r#"{"trace_id":"a","label":0,"events":[{"parent":-1,"type":0,"xu":null,"xv":null}]}"#;
    let forward = r#"{"trace_id":"b","label":0,"events":[{"parent":1,"type":0,"xu":null,"xv":null}]}"#;
    fs::write(&path, format!("{good}\n{forward}\n")).unwrap();
    match io::read_traces(&path) {
        Err(e @ IoError::Parse { line: 2, .. }) => assert!(e.is_validation()),
        other => panic!("unexpected {other:?}"),
    }
    fs::write(&path, format!("{good}\nnot json\n")).unwrap();
    assert!(matches!(io::read_traces(&path), Err(IoError::Parse { line: 2, .. })));
    let half = r#"{"trace_id":"c","label":0,"events":[{"parent":-1,"type":0,"xu":[1.0],"xv":null}]}"#;
    fs::write(&path, half).unwrap();
    assert!(matches!(io::read_traces(&path), Err(IoError::Parse { line: 1, .. })));
    assert!(!io::read_traces(&dir.path().join("missing.jsonl")).unwrap_err().is_validation());
}

#[test]
fn model_gin_and_tabular_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let models = fixtures::three_hypotheses();
    let p = dir.path().join("model.json");
    io::write_model(&p, &models).unwrap();
    assert_eq!(io::read_model(&p).unwrap(), models);
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.contains("\"M\": 3") && text.contains("\"Z\": 3"));

    let w = GinWeights::new(
        vec![vec![1.0, -1.0], vec![0.5, 0.0]],
        vec![0.0, 0.1],
        0.2,
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
        vec![0.0, 0.0, 0.1],
    )
    .unwrap();
    let g = dir.path().join("gin.json");
    io::write_gin(&g, &w).unwrap();
    assert_eq!(io::read_gin(&g).unwrap(), w);

    let t = TabularScorer::from_posteriors(&models).unwrap();
    let tp = dir.path().join("tab.json");
    io::write_tabular(&tp, &t).unwrap();
    assert_eq!(io::read_tabular(&tp).unwrap(), t);

    fs::write(&p, r#"{"M":2,"Z":2,"priors":[0.5,0.5],"models":[{"eta":[0.5,0.5],"alpha":[[0.9,0.2],[0.5,0.5]]}]}"#)
        .unwrap();
    assert!(io::read_model(&p).unwrap_err().is_validation());
}

#[test]
fn fit_sidecar_keeps_the_classifier() {
    let dir = tempfile::tempdir().unwrap();
    let ts = traces(300, true);
    let mut spec = FitSpec::new(3, 3);
    spec.classifier = ClassifierSpec::KMeans { seed: 1 };
    let fit = fit_offline(&ts, &spec).unwrap();
    let p = dir.path().join("fit.json");
    io::write_fit_sidecar(&p, &fit).unwrap();
    let side = io::read_fit_sidecar(&p).unwrap();
    assert_eq!(side.s, 3.0);
    assert_eq!(side.counts.pairs, fit.transitions.counts.pairs);
    let rebuilt = side.classifier.to_classifier().unwrap();
    match (&rebuilt.mode, &fit.classifier.mode) {
        (ClassifierMode::KMeans(a), ClassifierMode::KMeans(b)) => assert_eq!(a.centroids(), b.centroids()),
        other => panic!("unexpected modes {other:?}"),
    }
    assert_eq!(rebuilt.z_count, 3);
}

#[test]
fn outcomes_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let models = fixtures::three_hypotheses();
    let cfg = SdrConfig::uniform(0.1, 3, Rule::Markov).unwrap();
    let rows: Vec<OutcomeRow> =
        traces(50, false).iter().map(|t| OutcomeRow::new(t, "msprt", &run_sdr(t, &models, &cfg).unwrap())).collect();
    let p = dir.path().join("outcomes.csv");
    io::write_csv_rows(&p, &rows).unwrap();
    assert_eq!(io::read_outcomes(&p).unwrap(), rows);
    assert!(fs::read_to_string(&p).unwrap().starts_with("trace_id,rule,stop_time,decision,label,correct,forced\n"));
}
