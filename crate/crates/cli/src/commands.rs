//! One function per subcommand, each a thin wrapper over a library call.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use styloprof::aggregate::{run_message_based_pipeline, write_user_predictions, MessageBasedModel};
use styloprof::artifact::ArtifactMeta;
use styloprof::corpus::{
    filter_min_posts, kfold_ids, load_corpus, load_split, save_corpus, save_split, split_user_disjoint, Corpus,
    Partition, SplitAssignment, Task,
};
use styloprof::evaluate::{
    compute_metrics, cross_domain_evaluate, cross_validate, load_foreign_corpus, stratified_baseline_expectation,
    EvalUnit, MetricsReport, CSV_HEADER,
};
use styloprof::ingest::{build_corpus, merge_corpora, AdapterRegistry, SnapshotArchive};
use styloprof::learners::{from_container, to_container};
use styloprof::pipeline::{self, labeled_posts, process_posts};
use styloprof::scalar::argmax;
use styloprof::userlevel::{merge_user_documents, run_user_based_pipeline};
use styloprof::{Error, Model};

use crate::config::{RawConfig, RunConfig};
use crate::report::build_report;
use crate::{CliError, CliResult, Command, Global, LevelArg, ModelFlags, UnitArg};

pub const MODEL_FILE: &str = "model.styloprof";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Post,
    User,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelBody {
    Text { level: Level, model: Model },
    MessageBased { model: MessageBasedModel<f64> },
}

/// What `train`, `aggregate` and `userbased` write: the model plus the
/// resolved configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub meta: ArtifactMeta,
    pub config: BTreeMap<String, String>,
    pub task: Task,
    pub body: ModelBody,
}

impl ModelFile {
    fn new(raw: &RawConfig, task: Task, body: ModelBody) -> Self {
        Self {
            meta: ArtifactMeta::new(raw.hash()),
            config: raw.entries().clone(),
            task,
            body,
        }
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_bytes(path, &to_container(self)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(from_container(&bytes)?)
    }

    pub fn classes(&self) -> &[String] {
        match &self.body {
            ModelBody::Text { model, .. } => &model.classes,
            ModelBody::MessageBased { model } => &model.ensemble.classes,
        }
    }

    fn boundary(&self) -> bool {
        self.config.get("userbased.boundary").map(String::as_str) != Some("false")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Post,
    User,
}

/// One line of a predictions file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub unit: Unit,
    pub id: String,
    pub user_id: String,
    pub predicted_label: String,
    pub scores: Vec<f64>,
}

pub fn dispatch(g: &Global, cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Ingest {
            archive,
            adapter,
            out,
            report,
        } => ingest(g, archive, adapter, out, report.as_deref()),
        Command::Split {
            corpus,
            fractions,
            seed,
            min_posts,
            task,
            out,
            report,
        } => {
            let raw = raw_config(
                g,
                &[
                    ("split.fractions", fractions.clone()),
                    ("seed", seed.map(|s| s.to_string())),
                    ("split.min_posts", min_posts.map(|m| m.to_string())),
                    ("task", task.clone()),
                ],
            )?;
            split(&raw, corpus, out, report.as_deref())
        }
        Command::Train {
            corpus,
            split,
            partitions,
            level,
            model,
            out,
        } => train(&raw_config(g, &flag_overrides(model))?, corpus, split.as_deref(), partitions, *level, out),
        Command::Predict {
            model,
            corpus,
            split,
            partition,
            out,
        } => predict(model, corpus, split.as_deref(), partition, out),
        Command::Aggregate {
            corpus,
            split,
            model,
            profile_features,
            out_dir,
        } => {
            let mut o = flag_overrides(model);
            o.push(("aggregate.profile_features", profile_features.clone()));
            aggregate(&raw_config(g, &o)?, corpus, split, out_dir)
        }
        Command::Userbased {
            corpus,
            split,
            model,
            folds,
            out_dir,
        } => {
            let mut o = flag_overrides(model);
            o.push(("userbased.folds", folds.map(|f| f.to_string())));
            userbased(&raw_config(g, &o)?, corpus, split, out_dir)
        }
        Command::Evaluate {
            corpus,
            model,
            unit,
            cv,
            split,
            partitions,
            flags,
            predictions,
            force,
            out_dir,
        } => {
            let raw = raw_config(g, &flag_overrides(flags))?;
            if let Some(m) = model {
                evaluate_model(&raw, m, corpus, *unit, out_dir)
            } else if let Some(k) = cv {
                evaluate_cv(&raw, corpus, split.as_deref(), partitions, *k, out_dir)
            } else if !predictions.is_empty() {
                evaluate_predictions(&raw, corpus, predictions, *force, out_dir)
            } else {
                Err(CliError::Usage("evaluate needs --model, --cv or --predictions".into()))
            }
        }
        Command::Profile {
            corpus,
            age_model,
            gender_model,
            forum,
            out_dir,
        } => {
            let raw = raw_config(g, &[])?;
            profile(&raw, corpus, age_model.as_deref(), gender_model.as_deref(), forum.as_deref(), out_dir)
        }
    }
}

fn flag_overrides(f: &ModelFlags) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("task", f.task.clone()),
        ("seed", f.seed.map(|s| s.to_string())),
        ("model.algo", f.algo.clone()),
        ("features", f.features.clone()),
        ("select", f.select.clone()),
        ("repr", f.repr.clone()),
        ("ensemble.algo", f.ensemble.clone()),
    ]
}

/// Defaults, then the config file, then `--set`, then command flags.
fn raw_config(g: &Global, flags: &[(&str, Option<String>)]) -> CliResult<RawConfig> {
    let mut raw = RawConfig::default();
    if let Some(p) = &g.config {
        raw.load(p)?;
    }
    for pair in &g.set {
        raw.set_pair(pair)?;
    }
    for (k, v) in flags {
        if let Some(v) = v {
            raw.set(k, v)?;
        }
    }
    // validate before any work
    raw.resolve()?;
    log::info!("config hash {}", raw.hash());
    Ok(raw)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Pretty JSON with the provenance header as `_meta`.
fn write_json<S: Serialize>(path: &Path, meta: &ArtifactMeta, value: &S) -> CliResult<()> {
    let mut v = serde_json::to_value(value).map_err(Error::from)?;
    let body = match v.as_object_mut() {
        Some(obj) => {
            let mut m = serde_json::Map::new();
            m.insert("_meta".into(), serde_json::to_value(meta).map_err(Error::from)?);
            m.append(obj);
            Value::Object(m)
        }
        None => serde_json::json!({ "_meta": meta, "data": v }),
    };
    let mut s = serde_json::to_string_pretty(&body).map_err(Error::from)?;
    s.push('\n');
    write_bytes(path, s.as_bytes())
}

fn csv_with_meta(meta: &ArtifactMeta, body: &str) -> String {
    format!("# {} {} config_hash={}\n{body}", meta.tool, meta.version, meta.config_hash)
}

fn out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e).into())
}

fn load_labeled(path: &Path, run: &RunConfig) -> CliResult<Corpus> {
    Ok(load_corpus(path, Some(run.task))?)
}

fn parse_partitions(s: &str) -> CliResult<BTreeSet<Partition>> {
    s.split(',')
        .map(|p| {
            Partition::parse(p.trim()).ok_or_else(|| CliError::Usage(format!("unknown partition {p:?}")))
        })
        .collect()
}

/// Users selected by a split and partition list; all users without a split.
fn selected_users(corpus: &Corpus, split: Option<&Path>, partitions: &str) -> CliResult<BTreeSet<String>> {
    match split {
        None => Ok(corpus.user_ids().into_iter().collect()),
        Some(p) => {
            let s = load_split(p)?;
            let parts = parse_partitions(partitions)?;
            Ok(parts.iter().flat_map(|&p| s.users_in(p)).collect())
        }
    }
}

fn ingest(g: &Global, archives: &[String], adapter: &str, out: &Path, report: Option<&Path>) -> CliResult<()> {
    let raw = raw_config(g, &[])?;
    let adapter = AdapterRegistry::default().get(adapter)?;
    let mut parts = Vec::new();
    let mut reports = Vec::new();
    for a in archives {
        let (name, dir) = match a.split_once('=') {
            Some((n, d)) => (Some(n), PathBuf::from(d)),
            None => (None, PathBuf::from(a)),
        };
        let archive = SnapshotArchive::load(&dir, name)?;
        let (c, r) = build_corpus(&archive, adapter.as_ref())?;
        log::info!("{}: {} posts, {} users", r.forum, r.posts, c.n_users());
        parts.push(c);
        reports.push(r);
    }
    let corpus = merge_corpora(parts)?;
    let meta = ArtifactMeta::new(raw.hash());
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_corpus(&corpus, out, Some(&meta))?;
    if let Some(r) = report {
        write_json(r, &meta, &serde_json::json!({ "forums": reports }))?;
    }
    Ok(())
}

fn split(raw: &RawConfig, corpus: &Path, out: &Path, report: Option<&Path>) -> CliResult<()> {
    let run = raw.resolve()?;
    let corpus = filter_min_posts(&load_corpus(corpus, None)?, run.min_posts)?;
    let (assignment, rep) = split_user_disjoint(&corpus, &run.fractions, run.seed)?;
    for w in &rep.warnings {
        log::warn!("{w}");
    }
    let meta = ArtifactMeta::new(raw.hash());
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    save_split(&assignment, out, Some(&meta))?;
    if let Some(r) = report {
        write_json(r, &meta, &rep)?;
    }
    Ok(())
}

fn train(
    raw: &RawConfig,
    corpus: &Path,
    split: Option<&Path>,
    partitions: &str,
    level: LevelArg,
    out: &Path,
) -> CliResult<()> {
    let run = raw.resolve()?;
    let corpus = load_labeled(corpus, &run)?;
    let users = selected_users(&corpus, split, partitions)?;
    let classes = run.task.class_names();
    let prep = run.post.preprocessor();
    let model = match level {
        LevelArg::Post => {
            let (posts, y) = labeled_posts(&corpus, &users);
            pipeline::fit::<f64>(&run.post, &process_posts(&prep, &posts), &y, &classes)?
        }
        LevelArg::User => {
            let sub = corpus.restrict_to_users(&users).labeled_only();
            let (docs, y): (Vec<_>, Vec<_>) = merge_user_documents(&sub, &prep, run.boundary)
                .into_iter()
                .filter_map(|d| d.label.map(|y| (d.stream, y)))
                .unzip();
            pipeline::fit::<f64>(&run.post, &docs, &y, &classes)?
        }
    };
    let level = match level {
        LevelArg::Post => Level::Post,
        LevelArg::User => Level::User,
    };
    ModelFile::new(raw, run.task, ModelBody::Text { level, model }).save(out)
}

/// Apply a model to every post or user of `corpus`. Labels are not read.
pub fn predict_records(mf: &ModelFile, corpus: &Corpus) -> CliResult<Vec<PredictionRecord>> {
    let classes = mf.classes();
    let record = |unit, id: &str, user: &str, label: usize, scores: Vec<f64>| PredictionRecord {
        unit,
        id: id.to_string(),
        user_id: user.to_string(),
        predicted_label: classes[label].clone(),
        scores,
    };
    match &mf.body {
        ModelBody::Text { level, model } => {
            let space = model
                .space
                .as_ref()
                .ok_or_else(|| Error::ModelFormat("text model without feature space".into()))?;
            let prep = space.preprocessor();
            match level {
                Level::Post => {
                    let posts: Vec<_> = corpus.posts().iter().collect();
                    let preds = pipeline::predict_docs(model, &process_posts(&prep, &posts))?;
                    Ok(posts
                        .iter()
                        .zip(preds)
                        .map(|(p, q)| record(Unit::Post, &p.post_id, &p.user_id, q.label, q.scores))
                        .collect())
                }
                Level::User => {
                    let docs = merge_user_documents(corpus, &prep, mf.boundary());
                    let streams: Vec<_> = docs.iter().map(|d| d.stream.clone()).collect();
                    let preds = pipeline::predict_docs(model, &streams)?;
                    Ok(docs
                        .iter()
                        .zip(preds)
                        .map(|(d, q)| record(Unit::User, &d.user_id, &d.user_id, q.label, q.scores))
                        .collect())
                }
            }
        }
        ModelBody::MessageBased { model } => {
            let (users, _) = model.predict_users(corpus, None)?;
            Ok(users
                .into_iter()
                .map(|u| record(Unit::User, &u.user_id, &u.user_id, u.label, u.scores))
                .collect())
        }
    }
}

/// One label per user: user-level records directly, post-level records by
/// majority vote with ties going to the lower class index.
pub fn user_labels(records: &[PredictionRecord], classes: &[String]) -> BTreeMap<String, usize> {
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut votes: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        let v = votes.entry(r.user_id.clone()).or_insert_with(|| vec![0.0; classes.len()]);
        v[index[r.predicted_label.as_str()]] += 1.0;
    }
    votes.into_iter().map(|(u, v)| (u, argmax(&v))).collect()
}

fn write_records(path: &Path, meta: &ArtifactMeta, records: &[PredictionRecord]) -> CliResult<()> {
    let mut buf = Vec::new();
    meta.write_line(&mut buf).map_err(|e| Error::io(path, e))?;
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(Error::from)?;
        buf.push(b'\n');
    }
    write_bytes(path, &buf)
}

pub fn read_records(path: &Path) -> CliResult<(Option<ArtifactMeta>, Vec<PredictionRecord>)> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut meta = None;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |m: String| Error::MalformedRecord { line: i + 1, message: m };
        let v: Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if let Some(m) = ArtifactMeta::from_value(&v) {
            meta = Some(m);
            continue;
        }
        records.push(serde_json::from_value(v).map_err(|e| bad(e.to_string()))?);
    }
    Ok((meta, records))
}

fn predict(model: &Path, corpus: &Path, split: Option<&Path>, partition: &str, out: &Path) -> CliResult<()> {
    let mf = ModelFile::load(model)?;
    let corpus = load_corpus(corpus, None)?;
    let corpus = match split {
        Some(_) => corpus.restrict_to_users(&selected_users(&corpus, split, partition)?),
        None => corpus,
    };
    let records = predict_records(&mf, &corpus)?;
    // predictions inherit the configuration of the model that made them
    write_records(out, &mf.meta, &records)
}

fn split_of(path: &Path) -> CliResult<SplitAssignment> {
    Ok(load_split(path)?)
}

#[derive(Serialize)]
struct MessageMetrics<'a> {
    post: &'a MetricsReport,
    user: &'a MetricsReport,
    ensemble_cv_accuracy: Option<f64>,
}

fn aggregate(raw: &RawConfig, corpus: &Path, split: &Path, dir: &Path) -> CliResult<()> {
    let run = raw.resolve()?;
    let corpus = load_labeled(corpus, &run)?;
    let outcome = run_message_based_pipeline::<f64>(&corpus, &split_of(split)?, &run.message_based())?;
    out_dir(dir)?;
    let meta = ArtifactMeta::new(raw.hash());
    write_user_predictions(&outcome.user_predictions, &dir.join("user_predictions.jsonl"), Some(&meta))?;
    write_json(
        &dir.join("metrics.json"),
        &meta,
        &MessageMetrics {
            post: &outcome.post_metrics,
            user: &outcome.user_metrics,
            ensemble_cv_accuracy: outcome.ensemble_cv_accuracy,
        },
    )?;
    let mut csv = outcome.post_metrics.to_csv("post");
    outcome.user_metrics.write_csv_rows("user", &mut csv);
    write_bytes(&dir.join("metrics.csv"), csv_with_meta(&meta, &csv).as_bytes())?;
    log::info!(
        "post accuracy {:.4}, user accuracy {:.4}",
        outcome.post_metrics.accuracy,
        outcome.user_metrics.accuracy
    );
    ModelFile::new(raw, run.task, ModelBody::MessageBased { model: outcome.model }).save(&dir.join(MODEL_FILE))
}

fn userbased(raw: &RawConfig, corpus: &Path, split: &Path, dir: &Path) -> CliResult<()> {
    let run = raw.resolve()?;
    let corpus = load_labeled(corpus, &run)?;
    let outcome = run_user_based_pipeline::<f64>(&corpus, &split_of(split)?, &run.user_based())?;
    out_dir(dir)?;
    let meta = ArtifactMeta::new(raw.hash());
    write_user_predictions(&outcome.user_predictions, &dir.join("user_predictions.jsonl"), Some(&meta))?;
    write_json(&dir.join("metrics.json"), &meta, &serde_json::json!({ "user": outcome.metrics, "cv": outcome.cv }))?;
    write_bytes(
        &dir.join("metrics.csv"),
        csv_with_meta(&meta, &outcome.metrics.to_csv("user")).as_bytes(),
    )?;
    if let Some(cv) = outcome.cv.get(outcome.selected) {
        write_bytes(&dir.join("cv.csv"), csv_with_meta(&meta, &cv.to_csv()).as_bytes())?;
    }
    log::info!("user accuracy {:.4}", outcome.metrics.accuracy);
    let body = ModelBody::Text {
        level: Level::User,
        model: outcome.model,
    };
    ModelFile::new(raw, run.task, body).save(&dir.join(MODEL_FILE))
}

fn write_metrics(dir: &Path, meta: &ArtifactMeta, scope: &str, m: &MetricsReport) -> CliResult<()> {
    out_dir(dir)?;
    write_json(&dir.join("metrics.json"), meta, m)?;
    write_bytes(&dir.join("metrics.csv"), csv_with_meta(meta, &m.to_csv(scope)).as_bytes())
}

/// Apply a saved model to another labeled corpus.
fn evaluate_model(raw: &RawConfig, model: &Path, corpus: &Path, unit: UnitArg, dir: &Path) -> CliResult<()> {
    let run = raw.resolve()?;
    let mf = ModelFile::load(model)?;
    let mapping = (mf.task == Task::Age).then_some(&run.age_mapping);
    let foreign = load_foreign_corpus(corpus, mf.task, mapping)?;
    let unit = match unit {
        UnitArg::Post => EvalUnit::Post,
        UnitArg::User => EvalUnit::User,
    };
    let metrics = match &mf.body {
        ModelBody::Text { model, .. } => cross_domain_evaluate(model, &foreign, unit)?,
        ModelBody::MessageBased { model } => {
            if unit == EvalUnit::Post {
                cross_domain_evaluate(&model.post_model, &foreign, EvalUnit::Post)?
            } else {
                let labeled = foreign.labeled_only();
                let (preds, _) = model.predict_users(&labeled, None)?;
                let y: Vec<usize> = preds.iter().map(|p| labeled.user_label(&p.user_id).unwrap()).collect();
                let pred: Vec<usize> = preds.iter().map(|p| p.label).collect();
                compute_metrics(&y, &pred, mf.classes())?
                    .with_baseline(stratified_baseline_expectation(&y, &y, mf.classes().len()))
            }
        }
    };
    log::info!("accuracy {:.4}", metrics.accuracy);
    let scope = match unit {
        EvalUnit::Post => "post",
        EvalUnit::User => "user",
    };
    write_metrics(dir, &mf.meta, scope, &metrics)
}

/// User-grouped k-fold cross-validation of the configured post model.
fn evaluate_cv(
    raw: &RawConfig,
    corpus: &Path,
    split: Option<&Path>,
    partitions: &str,
    k: usize,
    dir: &Path,
) -> CliResult<()> {
    let run = raw.resolve()?;
    let corpus = load_labeled(corpus, &run)?;
    let users = selected_users(&corpus, split, partitions)?;
    let (posts, y) = labeled_posts(&corpus, &users);
    let owners: Vec<String> = posts.iter().map(|p| p.user_id.clone()).collect();
    let docs = process_posts(&run.post.preprocessor(), &posts);
    let folds = kfold_ids(&owners, k, run.seed)?;
    let report = cross_validate::<f64>(&docs, &y, &owners, &folds, &run.post, &run.task.class_names())?;
    log::info!("mean accuracy {:.4}", report.mean_accuracy);
    out_dir(dir)?;
    let meta = ArtifactMeta::new(raw.hash());
    write_json(&dir.join("cv.json"), &meta, &report)?;
    write_bytes(&dir.join("cv.csv"), csv_with_meta(&meta, &report.to_csv()).as_bytes())
}

#[derive(Serialize)]
struct FileMetrics {
    file: String,
    unit: Unit,
    unlabeled: usize,
    metrics: MetricsReport,
}

/// Score prediction files against the corpus labels. Files must share a
/// config hash unless `force` is set.
fn evaluate_predictions(raw: &RawConfig, corpus: &Path, files: &[PathBuf], force: bool, dir: &Path) -> CliResult<()> {
    let run = raw.resolve()?;
    let corpus = load_labeled(corpus, &run)?;
    let classes = run.task.class_names();
    let mut loaded = Vec::new();
    for f in files {
        let (meta, records) = read_records(f)?;
        let meta = meta.ok_or_else(|| Error::MalformedRecord {
            line: 1,
            message: format!("{} has no provenance header", f.display()),
        })?;
        loaded.push((f, meta, records));
    }
    let hashes: BTreeSet<&str> = loaded.iter().map(|(_, m, _)| m.config_hash.as_str()).collect();
    if hashes.len() > 1 {
        if !force {
            return Err(CliError::Usage(format!(
                "prediction files come from different configurations ({}); use --force to compare",
                hashes.into_iter().collect::<Vec<_>>().join(", ")
            )));
        }
        log::warn!("comparing predictions from different configurations");
    }
    let mut out = Vec::new();
    let mut csv = String::from(CSV_HEADER);
    for (f, _, records) in &loaded {
        let (mut y, mut pred, mut unlabeled) = (Vec::new(), Vec::new(), 0);
        for r in records {
            let p = classes
                .iter()
                .position(|c| *c == r.predicted_label)
                .ok_or_else(|| Error::UnknownClass(r.predicted_label.clone()))?;
            match corpus.user_label(&r.user_id) {
                Some(t) => {
                    y.push(t);
                    pred.push(p);
                }
                None => unlabeled += 1,
            }
        }
        if unlabeled > 0 {
            log::warn!("{}: {unlabeled} prediction(s) without a label in the corpus", f.display());
        }
        let metrics = compute_metrics(&y, &pred, &classes)?;
        let name = f.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        metrics.write_csv_rows(&name, &mut csv);
        out.push(FileMetrics {
            file: name,
            unit: records.first().map(|r| r.unit).unwrap_or(Unit::Post),
            unlabeled,
            metrics,
        });
    }
    out_dir(dir)?;
    let meta = ArtifactMeta::new(raw.hash());
    write_json(&dir.join("metrics.json"), &meta, &serde_json::json!({ "files": out }))?;
    write_bytes(&dir.join("metrics.csv"), csv_with_meta(&meta, &csv).as_bytes())
}

fn profile(
    raw: &RawConfig,
    corpus: &Path,
    age_model: Option<&Path>,
    gender_model: Option<&Path>,
    forums: Option<&str>,
    dir: &Path,
) -> CliResult<()> {
    if age_model.is_none() && gender_model.is_none() {
        return Err(CliError::Usage("profile needs --age-model and/or --gender-model".into()));
    }
    let corpus = load_corpus(corpus, None)?;
    let mut hashes = vec![raw.hash()];
    let mut labels = |path: Option<&Path>, task: Task| -> CliResult<Option<BTreeMap<String, usize>>> {
        let Some(p) = path else { return Ok(None) };
        let mf = ModelFile::load(p)?;
        if mf.task != task {
            return Err(CliError::Usage(format!(
                "{} is a {} model, expected {}",
                p.display(),
                mf.task.as_str(),
                task.as_str()
            )));
        }
        hashes.push(mf.meta.config_hash.clone());
        let records = predict_records(&mf, &corpus)?;
        Ok(Some(user_labels(&records, mf.classes())))
    };
    let age = labels(age_model, Task::Age)?;
    let gender = labels(gender_model, Task::Gender)?;
    let forum_list: Option<Vec<String>> = forums.map(|f| f.split(',').map(|s| s.trim().to_string()).collect());
    let report = build_report(&corpus, age.as_ref(), gender.as_ref(), forum_list.as_deref());
    out_dir(dir)?;
    let meta = ArtifactMeta::new(styloprof::util::sha256_hex(hashes.join(",").as_bytes())[..16].to_string());
    write_json(&dir.join("profile.json"), &meta, &report)?;
    write_bytes(&dir.join("profile.csv"), csv_with_meta(&meta, &report.to_csv()).as_bytes())?;
    let text = format!("{}\nconfig_hash={}\n", report.to_text(), meta.config_hash);
    write_bytes(&dir.join("profile.txt"), text.as_bytes())
}
