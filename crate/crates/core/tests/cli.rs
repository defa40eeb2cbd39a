use std::path::Path;
use std::process::Command;

use disco::cli::run;
use disco::eval::{
    median_cutoff, run_pipeline, split_models, EvalReport, PipelineConfig, PredictionConfig,
    SelectionConfig, SplitPolicy,
};
use disco::predictors::{ForestConfig, PcaSetting, RegressorConfig};
use disco::scoring::{score_dataset, Criterion};
use disco::signatures::SignatureMode;
use disco::store::{fetch_all, Population};

fn disco(dir: &Path, args: &[&str]) -> i32 {
    let wd = dir.to_str().unwrap();
    run(["disco", "--workdir", wd].iter().chain(args))
}

fn synth(dir: &Path) {
    let code = disco(
        dir,
        &[
            "--seed",
            "3",
            "synth",
            "--out",
            "pop",
            "--models",
            "24",
            "--samples",
            "150",
            "--classes",
            "3",
        ],
    );
    assert_eq!(code, 0);
}

#[test]
fn usage_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(disco(dir.path(), &[]), 64);
    assert_eq!(
        disco(
            dir.path(),
            &[
                "select",
                "--manifest",
                "m.json",
                "--method",
                "nope",
                "--k",
                "3",
                "--out",
                "s.json"
            ]
        ),
        64
    );
    assert_eq!(
        disco(
            dir.path(),
            &["--threads", "0", "validate", "--manifest", "m.json"]
        ),
        64
    );
    assert_eq!(disco(dir.path(), &["--help"]), 0);
    let status = Command::new(env!("CARGO_BIN_EXE_disco"))
        .arg("frobnicate")
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(64));
}

#[test]
fn validate_reports_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let m = ["validate", "--manifest", "pop/manifest.json"];
    assert_eq!(disco(dir.path(), &m), 0);
    assert_eq!(
        disco(dir.path(), &["validate", "--manifest", "pop/none.json"]),
        3
    );

    let manifest = dir.path().join("pop/manifest.json");
    let text = std::fs::read_to_string(&manifest).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&text).unwrap();
    json["labels"][0] = 99.into();
    std::fs::write(&manifest, json.to_string()).unwrap();
    assert_eq!(disco(dir.path(), &m), 2);
    std::fs::write(&manifest, "{\"labels\": []}").unwrap();
    assert_eq!(disco(dir.path(), &m), 1);
    std::fs::write(&manifest, &text).unwrap();

    let tensor = dir.path().join("pop/tensors/model-000.dten");
    let mut bytes = std::fs::read(&tensor).unwrap();
    bytes[..4].copy_from_slice(b"NOPE");
    std::fs::write(&tensor, bytes).unwrap();
    assert_eq!(disco(dir.path(), &m), 3);
}

fn chain(dir: &Path, selection: &str, predictor: &str, k: &str, extra_fit: &[&str]) -> EvalReport {
    let m = "pop/manifest.json";
    assert_eq!(
        disco(
            dir,
            &[
                "--seed",
                "5",
                "select",
                "--manifest",
                m,
                "--method",
                selection,
                "--k",
                k,
                "--out",
                "subset.json"
            ]
        ),
        0
    );
    let mut fit = vec![
        "--seed",
        "5",
        "fit",
        "--manifest",
        m,
        "--subset",
        "subset.json",
        "--predictor",
        predictor,
        "--out",
        "model.dpm",
    ];
    fit.extend(extra_fit);
    assert_eq!(disco(dir, &fit), 0);
    assert_eq!(
        disco(
            dir,
            &[
                "--seed",
                "5",
                "predict",
                "--manifest",
                m,
                "--subset",
                "subset.json",
                "--model",
                "model.dpm",
                "--out",
                "pred.json"
            ]
        ),
        0
    );
    assert_eq!(
        disco(
            dir,
            &[
                "evaluate",
                "--manifest",
                m,
                "--predictions",
                "pred.json",
                "--out",
                "report.json"
            ]
        ),
        0
    );
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn cli_chain_matches_library_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let pop = Population::load(&dir.path().join("pop/manifest.json")).unwrap();
    let cutoff = median_cutoff(&pop.manifest).unwrap();
    let split = split_models(&pop.manifest, SplitPolicy::Chronological { cutoff }).unwrap();
    let forest = PredictionConfig::Regressor {
        regressor: RegressorConfig::RandomForest(ForestConfig {
            trees: 30,
            ..ForestConfig::default()
        }),
        mode: SignatureMode::Probs,
        pca: PcaSetting::Auto,
    };
    let cases = [
        (
            "topk_pds",
            "random_forest",
            SelectionConfig::Topk {
                criterion: Criterion::PdsEnv,
            },
            forest,
        ),
        (
            "kmedoids_corr",
            "weighted_sum",
            SelectionConfig::Kmedoids {
                embedding: disco::selection::EmbeddingKind::Corr,
            },
            PredictionConfig::WeightedSum,
        ),
        (
            "random",
            "knn",
            SelectionConfig::Random,
            PredictionConfig::default_knn(),
        ),
    ];
    for (sel, pred, sc, pc) in cases {
        let mut got = chain(dir.path(), sel, pred, "20", &["--trees", "30"]);
        assert!(got.provenance.is_some());
        got.provenance = None;
        let want = run_pipeline(
            &pop.manifest,
            &pop,
            &split,
            &PipelineConfig::new(sc, pc),
            20,
            5,
        )
        .unwrap();
        assert_eq!(got, want, "{sel}+{pred}");
    }
}

#[test]
fn stale_inputs_and_bad_configs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let m = "pop/manifest.json";
    chain(dir.path(), "topk_jsd", "knn", "15", &[]);
    assert_eq!(
        disco(
            dir.path(),
            &[
                "fit",
                "--manifest",
                m,
                "--subset",
                "subset.json",
                "--pca",
                "999",
                "--out",
                "x.dpm"
            ]
        ),
        2
    );
    assert_eq!(
        disco(
            dir.path(),
            &[
                "select",
                "--manifest",
                m,
                "--method",
                "random",
                "--k",
                "151",
                "--out",
                "x.json"
            ]
        ),
        2
    );

    // Re-selecting rewrites the subset the model was fitted on.
    assert_eq!(
        disco(
            dir.path(),
            &[
                "--seed",
                "1",
                "select",
                "--manifest",
                m,
                "--method",
                "random",
                "--k",
                "15",
                "--out",
                "subset.json"
            ]
        ),
        0
    );
    assert_eq!(
        disco(
            dir.path(),
            &[
                "predict",
                "--manifest",
                m,
                "--subset",
                "subset.json",
                "--model",
                "model.dpm",
                "--out",
                "p.json"
            ]
        ),
        2
    );

    let path = dir.path().join(m);
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replace("synthetic-irt-seed3", "renamed");
    std::fs::write(&path, text).unwrap();
    assert_eq!(
        disco(
            dir.path(),
            &[
                "fit",
                "--manifest",
                m,
                "--subset",
                "subset.json",
                "--out",
                "y.dpm"
            ]
        ),
        2
    );
    assert_eq!(
        disco(
            dir.path(),
            &[
                "evaluate",
                "--manifest",
                m,
                "--predictions",
                "pred.json",
                "--out",
                "r.json"
            ]
        ),
        2
    );
}

#[test]
fn score_matches_library_and_sweep_has_one_row_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path());
    let m = "pop/manifest.json";
    assert_eq!(
        disco(
            dir.path(),
            &[
                "score",
                "--manifest",
                m,
                "--models",
                "all",
                "--out",
                "scores.csv"
            ]
        ),
        0
    );
    let pop = Population::load(&dir.path().join(m)).unwrap();
    let table = score_dataset(
        &pop.manifest,
        &fetch_all(&pop, &pop.manifest.model_ids()).unwrap(),
    )
    .unwrap();
    assert_eq!(
        std::fs::read_to_string(dir.path().join("scores.csv")).unwrap(),
        table.to_csv()
    );
    assert!(dir.path().join("scores.csv.provenance.json").exists());

    let code = disco(
        dir.path(),
        &[
            "sweep",
            "--manifest",
            m,
            "--methods",
            "random+direct,topk_pds+knn",
            "--budgets",
            "30,60",
            "--seeds",
            "0,1",
            "--split-ratio",
            "0.5",
            "--out",
            "sweep.csv",
        ],
    );
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2 * 2);
    assert!(csv.starts_with("method,selection,predictor,k,seed,mae_pp,spearman,pearson\n"));
}
