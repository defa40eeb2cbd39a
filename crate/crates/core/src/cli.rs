//! Command-line front end. Every stage is a thin wrapper over a library call
//! plus a provenance stanza; see `disco --help`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{
    evaluate_predictions, fit_predictor, median_cutoff, predict_targets, select_subset,
    split_models, sweep_budgets, sweep_csv, ModelSplit, PipelineConfig, PredictionConfig,
    SelectionConfig, SplitPolicy,
};
use crate::par;
use crate::predictors::{ForestConfig, PcaSetting, PredictorModel, RegressorConfig};
use crate::provenance::{file_sha256, sha256_hex, Provenance};
use crate::scoring::{score_dataset, Criterion};
use crate::selection::{AnchorSubset, EmbeddingKind};
use crate::signatures::SignatureMode;
use crate::store::{dten, fetch_all, load_manifest, BenchmarkManifest, DiskTensors, Population};
use crate::synth::{generate_population, SynthConfig};

pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(
    name = "disco",
    version,
    about = "Benchmark condensation by model disagreement"
)]
struct Cli {
    /// Base directory for every relative path.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads, or `auto`.
    #[arg(long, global = true, env = "DISCO_THREADS", value_parser = parse_threads)]
    threads: Option<Threads>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy)]
enum Threads {
    Auto,
    Fixed(usize),
}

fn parse_threads(s: &str) -> std::result::Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(Threads::Fixed(n)),
        _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a manifest and every tensor it registers.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Per-sample disagreement scores as CSV.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        /// Criterion summarized in the log line.
        #[arg(long, value_enum, default_value = "pds")]
        method: ScoreMethod,
        #[command(flatten)]
        models: ModelChoice,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Choose an anchor subset from source models.
    Select {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_parser = parse_selection_name)]
        method: String,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        selection: SelectionArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a predictor on source-model signatures.
    Fit {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        subset: PathBuf,
        #[arg(long, value_parser = parse_predictor_name, default_value = "random_forest")]
        predictor: String,
        #[command(flatten)]
        prediction: PredictionArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict full-benchmark accuracy of target models.
    Predict {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        subset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// `targets`, `sources`, `all`, or a comma-separated id list.
        #[arg(long, default_value = "targets")]
        models: String,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predictions against recorded accuracies.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run whole pipelines over budgets and seeds; one CSV row per run.
    Sweep {
        #[arg(long)]
        manifest: PathBuf,
        /// Comma-separated `selection+predictor` pairs, e.g. `topk_pds+random_forest`.
        #[arg(long, value_delimiter = ',', value_parser = parse_pipeline_name, required = true)]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<usize>,
        /// Defaults to the global seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[command(flatten)]
        selection: SelectionArgs,
        #[command(flatten)]
        prediction: PredictionArgs,
        #[command(flatten)]
        split: SplitArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic population with known accuracies.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        models: usize,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 4)]
        classes: usize,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        temperature: f64,
        #[arg(long, default_value_t = 4)]
        tasks: usize,
        #[arg(long, default_value = "2021-01-01")]
        start: NaiveDate,
        #[arg(long, default_value = "2025-12-31")]
        end: NaiveDate,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScoreMethod {
    Pds,
    Jsd,
}

#[derive(Debug, Args)]
struct ModelChoice {
    /// `sources`, `targets`, `all`, or a comma-separated id list.
    #[arg(long, default_value = "sources")]
    models: String,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Release-date cutoff (`YYYY-MM-DD` or `median`); sources are strictly earlier.
    #[arg(long, default_value = "median", conflicts_with = "split_ratio")]
    cutoff: String,
    /// Uniform seeded split with this source fraction instead of a date cutoff.
    #[arg(long)]
    split_ratio: Option<f64>,
}

#[derive(Debug, Args)]
struct SelectionArgs {
    /// Candidate subsets for best_for_validation.
    #[arg(long, default_value_t = 1000)]
    candidates: usize,
    /// Source fraction used for fitting inside best_for_validation.
    #[arg(long, default_value_t = 0.8)]
    train_ratio: f64,
}

#[derive(Debug, Args)]
struct PredictionArgs {
    #[arg(long, default_value_t = crate::predictors::DEFAULT_NEIGHBORS)]
    neighbors: usize,
    /// `auto`, `off`, or a dimension count.
    #[arg(long, default_value = "auto", value_parser = parse_pca)]
    pca: PcaSetting,
    #[arg(long, value_enum, default_value = "probs")]
    signature: SignatureArg,
    #[arg(long, default_value_t = 200)]
    trees: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SignatureArg {
    Probs,
    Onehot,
    Correctness,
}

impl From<SignatureArg> for SignatureMode {
    fn from(s: SignatureArg) -> Self {
        match s {
            SignatureArg::Probs => SignatureMode::Probs,
            SignatureArg::Onehot => SignatureMode::Onehot,
            SignatureArg::Correctness => SignatureMode::Correctness,
        }
    }
}

const SELECTIONS: &[&str] = &[
    "random",
    "topk_pds",
    "topk_jsd",
    "stratified_topk_pds",
    "stratified_topk_jsd",
    "kmedoids_conf",
    "kmedoids_corr",
    "best_for_validation",
];

const PREDICTORS: &[&str] = &["direct", "weighted_sum", "knn", "linear", "random_forest"];

fn parse_selection_name(s: &str) -> std::result::Result<String, String> {
    if SELECTIONS.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!(
            "unknown selection `{s}`; one of {}",
            SELECTIONS.join(", ")
        ))
    }
}

fn parse_predictor_name(s: &str) -> std::result::Result<String, String> {
    if PREDICTORS.contains(&s) {
        Ok(s.to_string())
    } else {
        Err(format!(
            "unknown predictor `{s}`; one of {}",
            PREDICTORS.join(", ")
        ))
    }
}

fn parse_pipeline_name(s: &str) -> std::result::Result<String, String> {
    let (sel, pred) = s
        .split_once('+')
        .ok_or_else(|| format!("expected `selection+predictor`, got `{s}`"))?;
    parse_selection_name(sel)?;
    parse_predictor_name(pred)?;
    Ok(s.to_string())
}

fn parse_pca(s: &str) -> std::result::Result<PcaSetting, String> {
    match s {
        "auto" => Ok(PcaSetting::Auto),
        "off" => Ok(PcaSetting::Off),
        _ => match s.parse::<usize>() {
            Ok(d) if d > 0 => Ok(PcaSetting::Dims(d)),
            _ => Err(format!(
                "expected `auto`, `off` or a positive integer, got `{s}`"
            )),
        },
    }
}

impl SelectionArgs {
    fn config(&self, name: &str) -> SelectionConfig {
        match name {
            "random" => SelectionConfig::Random,
            "topk_pds" => SelectionConfig::Topk {
                criterion: Criterion::PdsEnv,
            },
            "topk_jsd" => SelectionConfig::Topk {
                criterion: Criterion::JsdBits,
            },
            "stratified_topk_pds" => SelectionConfig::StratifiedTopk {
                criterion: Criterion::PdsEnv,
            },
            "stratified_topk_jsd" => SelectionConfig::StratifiedTopk {
                criterion: Criterion::JsdBits,
            },
            "kmedoids_conf" => SelectionConfig::Kmedoids {
                embedding: EmbeddingKind::Conf,
            },
            "kmedoids_corr" => SelectionConfig::Kmedoids {
                embedding: EmbeddingKind::Corr,
            },
            "best_for_validation" => SelectionConfig::BestForValidation {
                candidates: self.candidates,
                train_ratio: self.train_ratio,
            },
            other => unreachable!("selection `{other}` passed the parser"),
        }
    }
}

impl PredictionArgs {
    fn config(&self, name: &str) -> PredictionConfig {
        let regressor = match name {
            "direct" => return PredictionConfig::Direct,
            "weighted_sum" => return PredictionConfig::WeightedSum,
            "knn" => RegressorConfig::Knn {
                neighbors: self.neighbors,
            },
            "linear" => RegressorConfig::Linear,
            "random_forest" => RegressorConfig::RandomForest(ForestConfig {
                trees: self.trees,
                ..ForestConfig::default()
            }),
            other => unreachable!("predictor `{other}` passed the parser"),
        };
        PredictionConfig::Regressor {
            regressor,
            mode: self.signature.into(),
            pca: self.pca,
        }
    }
}

fn split_policy(args: &SplitArgs, manifest: &BenchmarkManifest, seed: u64) -> Result<SplitPolicy> {
    if let Some(ratio) = args.split_ratio {
        return Ok(SplitPolicy::Uniform { ratio, seed });
    }
    let cutoff = if args.cutoff == "median" {
        median_cutoff(manifest)?
    } else {
        NaiveDate::parse_from_str(&args.cutoff, "%Y-%m-%d")
            .map_err(|e| Error::InvalidConfig(format!("cutoff `{}`: {e}", args.cutoff)))?
    };
    Ok(SplitPolicy::Chronological { cutoff })
}

fn pick_models(
    choice: &str,
    split: &ModelSplit,
    manifest: &BenchmarkManifest,
) -> Result<Vec<String>> {
    Ok(match choice {
        "sources" => split.source_ids.clone(),
        "targets" => split.target_ids.clone(),
        "all" => manifest.model_ids(),
        list => {
            let ids: Vec<String> = list.split(',').map(|s| s.trim().to_string()).collect();
            for id in &ids {
                manifest.model(id)?;
            }
            ids
        }
    })
}

/// Hashes of everything a stage reads from a dataset.
struct Dataset {
    manifest: BenchmarkManifest,
    manifest_hash: String,
    tensors_hash: String,
}

impl Dataset {
    fn open(path: &Path) -> Result<Self> {
        let manifest = load_manifest(path)?;
        let manifest_hash = file_sha256(path)?;
        let per_model = par::try_map_range(manifest.models.len(), |i| {
            file_sha256(&manifest.tensor_file(&manifest.models[i].model_id)?)
        })?;
        let tensors_hash = sha256_hex(per_model.join("\n").as_bytes());
        Ok(Dataset {
            manifest,
            manifest_hash,
            tensors_hash,
        })
    }

    fn stamp(&self, p: Provenance) -> Provenance {
        p.input("manifest", self.manifest_hash.clone())
            .input("tensors", self.tensors_hash.clone())
    }

    fn check(&self, artifact: &Path, p: &Option<Provenance>) -> Result<()> {
        let p = p.as_ref().ok_or_else(|| Error::StaleArtifact {
            path: artifact.to_path_buf(),
            what: "provenance".into(),
            recorded: "<none>".into(),
            current: self.manifest_hash.clone(),
        })?;
        p.expect_input(artifact, "manifest", &self.manifest_hash)?;
        p.expect_input(artifact, "tensors", &self.tensors_hash)
    }
}

fn split_param(policy: &SplitPolicy) -> String {
    serde_json::to_string(policy).expect("policy serializes")
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    dten::write_file(path, bytes)
}

fn write_with_sidecar(path: &Path, body: &str, provenance: &Provenance) -> Result<()> {
    write_bytes(path, body.as_bytes())?;
    let mut side = path.as_os_str().to_owned();
    side.push(".provenance.json");
    write_bytes(Path::new(&side), &json_bytes(provenance))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializes");
    s.push('\n');
    s.into_bytes()
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(dten::read_file(path)?).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    serde_json::from_str(&read_text(path)?).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Output of `predict`, input of `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionFile {
    pub selection: String,
    pub predictor: String,
    pub k: usize,
    pub seed: u64,
    pub predictions: Vec<PredictedModel>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedModel {
    pub model_id: String,
    pub predicted: f64,
}

/// Parses `args` (including the program name) and runs one subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    if let Some(Threads::Fixed(n)) = cli.threads {
        if !par::init_global_threads(n) && par::current_threads() != n {
            log::warn!(
                "thread pool already initialized with {} threads",
                par::current_threads()
            );
        }
    }
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    let wd = |p: &Path| cli.workdir.join(p);
    let seed = cli.seed;
    match &cli.command {
        Command::Validate { manifest } => {
            let pop = Population::load(&wd(manifest))?;
            let m = &pop.manifest;
            log::info!(
                "validate: {} ok ({} models, {} samples, {} classes)",
                manifest.display(),
                m.models.len(),
                m.num_samples,
                m.num_classes
            );
            Ok(())
        }
        Command::Score {
            manifest,
            method,
            models,
            split,
            out,
        } => {
            let ds = Dataset::open(&wd(manifest))?;
            let policy = split_policy(split, &ds.manifest, seed)?;
            let ms = split_models(&ds.manifest, policy)?;
            let ids = pick_models(&models.models, &ms, &ds.manifest)?;
            let source = DiskTensors::new(&ds.manifest);
            let tensors = fetch_all(&source, &ids)?;
            let table = score_dataset(&ds.manifest, &tensors)?;
            let criterion = match method {
                ScoreMethod::Pds => Criterion::PdsEnv,
                ScoreMethod::Jsd => Criterion::JsdBits,
            };
            let col = table.column(criterion);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            let prov = ds
                .stamp(Provenance::new("score", seed))
                .param("models", ids.join(","))
                .param("split", split_param(&policy));
            write_with_sidecar(&wd(out), &table.to_csv(), &prov)?;
            log::info!(
                "score: {} samples over {} models, mean {} {:.6}",
                table.len(),
                ids.len(),
                criterion.label(),
                mean
            );
            Ok(())
        }
        Command::Select {
            manifest,
            method,
            k,
            selection,
            split,
            out,
        } => {
            let ds = Dataset::open(&wd(manifest))?;
            let policy = split_policy(split, &ds.manifest, seed)?;
            let ms = split_models(&ds.manifest, policy)?;
            let source = DiskTensors::new(&ds.manifest);
            let sources = fetch_all(&source, &ms.source_ids)?;
            let config = selection.config(method);
            let mut subset = select_subset(&ds.manifest, &sources, &config, *k, seed)?;
            subset.provenance = Some(
                ds.stamp(Provenance::new("select", seed))
                    .param(
                        "selection",
                        serde_json::to_string(&config).expect("serializes"),
                    )
                    .param("label", config.label())
                    .param("split", split_param(&policy)),
            );
            write_bytes(&wd(out), subset.to_json().as_bytes())?;
            log::info!(
                "select: {} picked {} of {} samples from {} source models",
                config.label(),
                subset.k,
                ds.manifest.num_samples,
                ms.source_ids.len()
            );
            Ok(())
        }
        Command::Fit {
            manifest,
            subset,
            predictor,
            prediction,
            split,
            out,
        } => {
            let ds = Dataset::open(&wd(manifest))?;
            let subset_path = wd(subset);
            let sub = AnchorSubset::from_json(&read_text(&subset_path)?, &subset_path)?;
            ds.check(&subset_path, &sub.provenance)?;
            let policy = split_policy(split, &ds.manifest, seed)?;
            let ms = split_models(&ds.manifest, policy)?;
            let source = DiskTensors::new(&ds.manifest);
            let sources = fetch_all(&source, &ms.source_ids)?;
            let config = prediction.config(predictor);
            let mut model = fit_predictor(&ds.manifest, &sources, &sub, &config, seed)?;
            model.provenance = Some(
                ds.stamp(Provenance::new("fit", seed))
                    .input("subset", file_sha256(&subset_path)?)
                    .param(
                        "prediction",
                        serde_json::to_string(&config).expect("serializes"),
                    )
                    .param("label", config.label())
                    .param("split", split_param(&policy)),
            );
            write_bytes(&wd(out), &model.to_bytes())?;
            log::info!(
                "fit: {} on {} source models, input dim {}",
                config.label(),
                ms.source_ids.len(),
                model.input_dim
            );
            Ok(())
        }
        Command::Predict {
            manifest,
            subset,
            model,
            models,
            split,
            out,
        } => {
            let ds = Dataset::open(&wd(manifest))?;
            let subset_path = wd(subset);
            let sub = AnchorSubset::from_json(&read_text(&subset_path)?, &subset_path)?;
            ds.check(&subset_path, &sub.provenance)?;
            let model_path = wd(model);
            let predictor =
                PredictorModel::from_bytes(&dten::read_file(&model_path)?, &model_path)?;
            ds.check(&model_path, &predictor.provenance)?;
            let subset_hash = file_sha256(&subset_path)?;
            let model_prov = predictor.provenance.as_ref().expect("checked above");
            model_prov.expect_input(&model_path, "subset", &subset_hash)?;
            let policy = split_policy(split, &ds.manifest, seed)?;
            let ms = split_models(&ds.manifest, policy)?;
            let ids = pick_models(models, &ms, &ds.manifest)?;
            let source = DiskTensors::new(&ds.manifest);
            let targets = fetch_all(&source, &ids)?;
            let predicted = predict_targets(&ds.manifest, &predictor, &sub, &targets)?;
            let param = |p: &Option<Provenance>, key: &str| {
                p.as_ref()
                    .and_then(|p| p.params.get(key).cloned())
                    .unwrap_or_default()
            };
            let file = PredictionFile {
                selection: param(&sub.provenance, "label"),
                predictor: param(&predictor.provenance, "label"),
                k: sub.k,
                seed,
                predictions: ids
                    .iter()
                    .zip(&predicted)
                    .map(|(id, &p)| PredictedModel {
                        model_id: id.clone(),
                        predicted: p,
                    })
                    .collect(),
                provenance: ds
                    .stamp(Provenance::new("predict", seed))
                    .input("subset", subset_hash)
                    .input("model", file_sha256(&model_path)?)
                    .param("models", ids.join(",")),
            };
            write_bytes(&wd(out), &json_bytes(&file))?;
            log::info!("predict: {} models", ids.len());
            Ok(())
        }
        Command::Evaluate {
            manifest,
            predictions,
            out,
        } => {
            let ds = Dataset::open(&wd(manifest))?;
            let pred_path = wd(predictions);
            let file: PredictionFile = read_json(&pred_path)?;
            ds.check(&pred_path, &Some(file.provenance.clone()))?;
            let pairs: Vec<(String, f64)> = file
                .predictions
                .iter()
                .map(|p| (p.model_id.clone(), p.predicted))
                .collect();
            let mut report = evaluate_predictions(
                &ds.manifest,
                &pairs,
                (&file.selection, &file.predictor),
                file.k,
                file.seed,
            )?;
            report.provenance = Some(
                ds.stamp(Provenance::new("evaluate", file.seed))
                    .input("predictions", file_sha256(&pred_path)?),
            );
            write_bytes(&wd(out), report.to_json().as_bytes())?;
            log::info!(
                "evaluate: {} mae {:.4} pp, spearman {:.4}, pearson {:.4}",
                report.method,
                report.mae_pp,
                report.spearman,
                report.pearson
            );
            Ok(())
        }
        Command::Sweep {
            manifest,
            methods,
            budgets,
            seeds,
            selection,
            prediction,
            split,
            out,
        } => {
            let ds = Dataset::open(&wd(manifest))?;
            let policy = split_policy(split, &ds.manifest, seed)?;
            let ms = split_models(&ds.manifest, policy)?;
            let configs: Vec<PipelineConfig> = methods
                .iter()
                .map(|m| {
                    let (s, p) = m.split_once('+').expect("validated by the parser");
                    PipelineConfig::new(selection.config(s), prediction.config(p))
                })
                .collect();
            let seeds = if seeds.is_empty() {
                vec![seed]
            } else {
                seeds.clone()
            };
            let source = DiskTensors::new(&ds.manifest);
            let reports = sweep_budgets(&ds.manifest, &source, &ms, &configs, budgets, &seeds)?;
            let prov = ds
                .stamp(Provenance::new("sweep", seed))
                .param("methods", methods.join(","))
                .param(
                    "budgets",
                    budgets
                        .iter()
                        .map(|b| b.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                )
                .param(
                    "seeds",
                    seeds
                        .iter()
                        .map(|s| s.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                )
                .param("split", split_param(&policy));
            write_with_sidecar(&wd(out), &sweep_csv(&reports), &prov)?;
            log::info!("sweep: {} runs", reports.len());
            Ok(())
        }
        Command::Synth {
            out,
            models,
            samples,
            classes,
            dim,
            temperature,
            tasks,
            start,
            end,
        } => {
            let config = SynthConfig {
                models: *models,
                samples: *samples,
                classes: *classes,
                ability_dim: *dim,
                seed,
                temperature: *temperature,
                start_date: *start,
                end_date: *end,
                tasks: *tasks,
            };
            config.validate()?;
            let pop = generate_population(&config)?;
            let dir = wd(out);
            pop.save(&dir)?;
            let prov = Provenance::new("synth", seed).param(
                "config",
                serde_json::to_string(&config).expect("serializes"),
            );
            write_bytes(&dir.join("synth.provenance.json"), &json_bytes(&prov))?;
            log::info!(
                "synth: {} models x {} samples x {} classes to {}",
                models,
                samples,
                classes,
                out.display()
            );
            Ok(())
        }
    }
}
