//! `crmls` command-line pipeline: synth, split, sim, train, rank, eval, hybrid.
//!
//! Workdir layout:
//!
//! ```text
//! data/ratings.tsv, data/venues.jsonl      synth output
//! splits/seed-<s>/ratings.{train,valid,test}.tsv
//! sim/{geo,review,category}.tsv, sim/classifiers.jsonl, sim/vocabulary.json
//! models/seed-<s>/model.json, models/seed-<s>/train.log
//! rankings/seed-<s>.tsv
//! eval/seed-<s>.json, eval/report.json
//! hybrid/seed-<s>/rankings.tsv, hybrid/seed-<s>/report.json
//! sweeps/<param>.tsv
//! ```
//!
//! Every output directory carries a `manifest.json` with the config hash.
//! Exit codes: 0 success, 1 usage or config error, 2 data validation error,
//! 3 numerical failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::dataset::{
    generate_synthetic_with, load_dataset, load_ratings, save_ratings, save_venues, split_dataset,
    write_split, Dataset, DatasetError, Split,
};
use crate::hybrid::{fuse_all, HybridError};
use crate::ranking::{
    average_reports, evaluate_rankings, rank_test_candidates, read_rankings, write_rankings,
    EvalReport, RankingError,
};
use crate::similarity::{
    category_matrix, geo_matrix, read_matrix, review_matrix, save_classifiers, write_matrix,
    ReviewModel, SimilarityError, SimilarityKind, SimilarityMatrix, SimilarityStack,
};
use crate::trainer::{train_with_observer, Hyperparams, LatentModel, TrainError};

pub const WORKDIR_ENV: &str = "CRMLS_WORKDIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "workdir is locked by another command ({0}); remove the file if no command is running"
    )]
    Locked(PathBuf),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Config(_)
            | CliError::Io { .. }
            | CliError::Locked(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SimilarityError> for CliError {
    fn from(e: SimilarityError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<RankingError> for CliError {
    fn from(e: RankingError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<HybridError> for CliError {
    fn from(e: HybridError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::NonFinite { .. } => CliError::Numerical(e.to_string()),
            TrainError::InvalidHyperparams(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "crmls",
    version,
    about = "Similarity-aware collaborative ranking for venue suggestion"
)]
pub struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured workdir.
    #[arg(long, global = true, env = WORKDIR_ENV)]
    pub workdir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a planted-cluster dataset into <workdir>/data.
    Synth(SynthArgs),
    /// Split the ratings 70/10/20 once per seed.
    Split(SeedArgs),
    /// Compute the venue similarity matrices.
    Sim(SimArgs),
    /// Train one model per split seed.
    Train(TrainArgs),
    /// Rank each user's test venues.
    Rank(SeedArgs),
    /// Evaluate P@k and nDCG@k per seed and averaged over seeds.
    Eval(SeedArgs),
    /// Fuse the model ranking with an external ranking.
    Hybrid(HybridArgs),
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Comma-separated split seeds.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub users: Option<usize>,
    #[arg(long)]
    pub venues: Option<usize>,
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// Compute only these kinds (geo, review, category).
    #[arg(long, value_delimiter = ',')]
    pub only: Option<Vec<String>>,
    /// Recompute even when outputs are up to date.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub seeds: SeedArgs,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub alphas: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parameter study `param=a,b,c` over alpha1|alpha2|alpha3|d|lambda|gamma,
    /// scored on the validation split.
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Args)]
pub struct HybridArgs {
    /// External rankings file (user, position, venue, score).
    #[arg(long)]
    pub external: PathBuf,
    /// Split seed whose model and test split are used; defaults to the first.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta: Option<f64>,
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command from an argument list that includes the program name.
pub fn run_from<I, T>(args: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    run(cli)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(w) = cli.workdir {
        cfg.workdir = w;
    }
    fs::create_dir_all(&cfg.workdir).map_err(io_err(&cfg.workdir))?;
    let _lock = WorkdirLock::acquire(&cfg.workdir)?;

    match cli.command {
        Command::Synth(a) => cmd_synth(&mut cfg, &a),
        Command::Split(a) => cmd_split(&override_seeds(cfg, &a)),
        Command::Sim(a) => cmd_sim(&cfg, &a),
        Command::Train(a) => cmd_train(override_train(cfg, &a)?, a.sweep.as_deref()),
        Command::Rank(a) => cmd_rank(&override_seeds(cfg, &a)),
        Command::Eval(a) => cmd_eval(&override_seeds(cfg, &a)).map(|_| ()),
        Command::Hybrid(a) => cmd_hybrid(&cfg, &a).map(|_| ()),
    }
}

fn override_seeds(mut cfg: RunConfig, a: &SeedArgs) -> RunConfig {
    if let Some(s) = &a.seeds {
        cfg.seeds = s.clone();
    }
    cfg
}

fn override_train(cfg: RunConfig, a: &TrainArgs) -> Result<RunConfig, CliError> {
    let mut cfg = override_seeds(cfg, &a.seeds);
    let hp = &mut cfg.hyperparams;
    if let Some(v) = a.max_iter {
        hp.max_iter = v;
    }
    if let Some(v) = a.d {
        hp.d = v;
    }
    if let Some(v) = a.gamma {
        hp.gamma = v;
    }
    if let Some(v) = a.lambda {
        hp.lambda = v;
    }
    if let Some(v) = &a.alphas {
        hp.alphas = v.clone();
    }
    if let Some(v) = a.epsilon {
        hp.epsilon = v;
    }
    if let Some(v) = a.seed {
        hp.seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct WorkdirLock(PathBuf);

impl WorkdirLock {
    fn acquire(workdir: &Path) -> Result<Self, CliError> {
        let path = workdir.join(".crmls.lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(WorkdirLock(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Locked(path)),
            Err(source) => Err(CliError::Io { path, source }),
        }
    }
}

impl Drop for WorkdirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    write_text(path, &s)
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    extra: serde_json::Value,
) -> Result<(), CliError> {
    write_json(
        &dir.join("manifest.json"),
        &json!({
            "command": command,
            "config_hash": cfg.hash(),
            "seeds": cfg.seeds,
            "details": extra,
        }),
    )
}

fn require_file(path: &Path, hint: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "missing input {} ({hint})",
            path.display()
        )))
    }
}

fn load_inputs(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let (rp, vp) = (cfg.ratings_path(), cfg.venues_path());
    require_file(&rp, "ratings file")?;
    require_file(&vp, "venues file")?;
    let d = load_dataset(&rp, &vp)?;
    if d.threshold() != cfg.threshold {
        return Ok(Dataset::with_threshold(
            d.venues().to_vec(),
            d.ratings().to_vec(),
            cfg.threshold,
        )?);
    }
    Ok(d)
}

fn split_dir(cfg: &RunConfig, seed: u64) -> PathBuf {
    cfg.workdir.join("splits").join(format!("seed-{seed}"))
}

fn model_path(cfg: &RunConfig, seed: u64) -> PathBuf {
    cfg.workdir
        .join("models")
        .join(format!("seed-{seed}"))
        .join("model.json")
}

fn sim_dir(cfg: &RunConfig) -> PathBuf {
    cfg.workdir.join("sim")
}

fn load_split(cfg: &RunConfig, seed: u64) -> Result<Split, CliError> {
    let dir = split_dir(cfg, seed);
    let part = |name: &str| -> Result<_, CliError> {
        let p = dir.join(format!("ratings.{name}.tsv"));
        require_file(&p, "run `crmls split` first")?;
        Ok(load_ratings(&p)?)
    };
    Ok(Split {
        train: part("train")?,
        validation: part("valid")?,
        test: part("test")?,
        seed,
    })
}

fn load_model(cfg: &RunConfig, seed: u64) -> Result<LatentModel, CliError> {
    let p = model_path(cfg, seed);
    require_file(&p, "run `crmls train` first")?;
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    Ok(LatentModel::from_json(&text)?)
}

pub fn cmd_synth(cfg: &mut RunConfig, a: &SynthArgs) -> Result<(), CliError> {
    if let Some(v) = a.users {
        cfg.synth.n_users = v;
    }
    if let Some(v) = a.venues {
        cfg.synth.m_venues = v;
    }
    if let Some(v) = a.clusters {
        cfg.synth.n_clusters = v;
    }
    if let Some(v) = a.seed {
        cfg.synth.seed = v;
    }
    let planted = generate_synthetic_with(&cfg.synth.to_generator()).map_err(|e| match e {
        DatasetError::InvalidSynthetic(m) => CliError::Usage(m),
        other => other.into(),
    })?;
    let d = &planted.dataset;
    save_ratings(&cfg.ratings_path(), d.ratings())?;
    save_venues(&cfg.venues_path(), d.venues())?;
    let dir = cfg
        .ratings_path()
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    write_manifest(
        &dir,
        "synth",
        cfg,
        json!({
            "seed": cfg.synth.seed,
            "users": d.n_users(),
            "venues": d.n_venues(),
            "ratings": d.ratings().len(),
            "clusters": cfg.synth.n_clusters,
            "user_clusters": planted.user_clusters,
            "venue_clusters": planted.venue_clusters,
        }),
    )?;
    println!(
        "synth: {} users, {} venues, {} ratings (seed {})",
        d.n_users(),
        d.n_venues(),
        d.ratings().len(),
        cfg.synth.seed
    );
    Ok(())
}

pub fn cmd_split(cfg: &RunConfig) -> Result<(), CliError> {
    let d = load_inputs(cfg)?;
    let mut counts = Vec::new();
    for &seed in &cfg.seeds {
        let split = split_dataset(&d, seed)?;
        let m = write_split(&split, &split_dir(cfg, seed), "ratings")?;
        println!("split seed {seed}: {}/{}/{}", m.train, m.validation, m.test);
        counts.push(m);
    }
    write_manifest(
        &cfg.workdir.join("splits"),
        "split",
        cfg,
        serde_json::to_value(&counts).unwrap(),
    )
}

#[derive(Serialize, Deserialize, Default)]
struct SimManifest {
    venues_sha256: String,
    text_config: String,
    m: usize,
    kinds: Vec<SimilarityKind>,
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn matrix_path(cfg: &RunConfig, kind: SimilarityKind) -> PathBuf {
    sim_dir(cfg).join(format!("{kind}.tsv"))
}

pub fn cmd_sim(cfg: &RunConfig, a: &SimArgs) -> Result<(), CliError> {
    let kinds: Vec<SimilarityKind> = match &a.only {
        None => SimilarityKind::BUILTIN.to_vec(),
        Some(list) => list
            .iter()
            .map(|k| match k.parse() {
                Ok(SimilarityKind::Custom) | Err(_) => Err(CliError::Usage(format!(
                    "--only accepts geo, review, category; got {k:?}"
                ))),
                Ok(kind) => Ok(kind),
            })
            .collect::<Result<_, _>>()?,
    };
    let vp = cfg.venues_path();
    require_file(&vp, "venues file")?;
    let d = Dataset::new(crate::dataset::load_venues(&vp)?, vec![])?;
    let dir = sim_dir(cfg);
    let manifest_path = dir.join("sim.json");
    let venues_sha = sha256_file(&vp)?;
    let text_config = serde_json::to_string(&cfg.text).unwrap();

    let previous: SimManifest = fs::read_to_string(&manifest_path)
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or_default();
    let inputs_match = previous.venues_sha256 == venues_sha && previous.text_config == text_config;

    let mut done = if inputs_match {
        previous.kinds.clone()
    } else {
        Vec::new()
    };
    for &kind in &kinds {
        let path = matrix_path(cfg, kind);
        if !a.force && inputs_match && previous.kinds.contains(&kind) && path.is_file() {
            println!("sim: {kind} up to date");
            continue;
        }
        let matrix: SimilarityMatrix = match kind {
            SimilarityKind::Geo => geo_matrix(&d),
            SimilarityKind::Category => category_matrix(&d),
            SimilarityKind::Review => {
                let model = ReviewModel::fit(&d, &cfg.text);
                let ids: Vec<String> = d.venues().iter().map(|v| v.id.clone()).collect();
                save_classifiers(
                    &dir.join("classifiers.jsonl"),
                    &dir.join("vocabulary.json"),
                    &ids,
                    &model.classifiers,
                    &model.vectorizer,
                )?;
                review_matrix(&d, &model, cfg.text.clip)
            }
            SimilarityKind::Custom => unreachable!(),
        };
        write_matrix(&path, &matrix)?;
        println!(
            "sim: wrote {} ({} x {})",
            path.display(),
            matrix.size(),
            matrix.size()
        );
        if !done.contains(&kind) {
            done.push(kind);
        }
    }
    done.sort_by_key(|k| SimilarityKind::BUILTIN.iter().position(|b| b == k));
    write_json(
        &manifest_path,
        &SimManifest {
            venues_sha256: venues_sha,
            text_config,
            m: d.n_venues(),
            kinds: done.clone(),
        },
    )?;
    write_manifest(
        &dir,
        "sim",
        cfg,
        json!({ "m": d.n_venues(), "kinds": done }),
    )
}

/// Loads the matrices with non-zero weight, in geo, review, category order.
pub fn load_stack(
    cfg: &RunConfig,
    alphas: &[f64],
) -> Result<(SimilarityStack, Vec<f64>), CliError> {
    if alphas.len() != SimilarityKind::BUILTIN.len() {
        return Err(CliError::Usage(format!(
            "expected {} similarity weights (geo, review, category), got {}",
            SimilarityKind::BUILTIN.len(),
            alphas.len()
        )));
    }
    let mut matrices = Vec::new();
    let mut weights = Vec::new();
    for (kind, &alpha) in SimilarityKind::BUILTIN.iter().zip(alphas) {
        if alpha == 0.0 {
            continue;
        }
        let p = matrix_path(cfg, *kind);
        require_file(&p, "run `crmls sim` first")?;
        matrices.push(read_matrix(&p)?);
        weights.push(alpha);
    }
    if matrices.is_empty() {
        return Err(CliError::Usage(
            "at least one similarity weight must be positive".into(),
        ));
    }
    Ok((SimilarityStack::new(matrices, weights.clone())?, weights))
}

fn train_one(
    cfg: &RunConfig,
    full: &Dataset,
    train_ratings: Vec<crate::dataset::Rating>,
    stack: &SimilarityStack,
    weights: &[f64],
    split_seed: u64,
    log: Option<&Path>,
) -> Result<LatentModel, CliError> {
    let train_ds = full.with_ratings(train_ratings)?;
    let hp = Hyperparams {
        alphas: weights.to_vec(),
        seed: cfg.hyperparams.seed.wrapping_add(split_seed),
        ..cfg.hyperparams.clone()
    };
    let start = Instant::now();
    let mut lines = String::new();
    let model = train_with_observer(&train_ds, stack, &hp, |t, obj| {
        let _ = writeln!(lines, "{t}\t{obj}\t{}", start.elapsed().as_millis());
    })
    .map_err(|e| match e {
        TrainError::NonFinite { iteration } => CliError::Numerical(format!(
            "split seed {split_seed}: objective became non-finite at iteration {iteration}"
        )),
        other => other.into(),
    })?;
    if let Some(p) = log {
        write_text(p, &lines)?;
    }
    Ok(model)
}

pub fn cmd_train(cfg: RunConfig, sweep: Option<&str>) -> Result<(), CliError> {
    if let Some(arg) = sweep {
        return cmd_sweep(&cfg, arg);
    }
    let full = load_inputs(&cfg)?;
    let (stack, weights) = load_stack(&cfg, &cfg.hyperparams.alphas)?;
    for &seed in &cfg.seeds {
        let split = load_split(&cfg, seed)?;
        let path = model_path(&cfg, seed);
        let log = path.with_file_name("train.log");
        let model = train_one(&cfg, &full, split.train, &stack, &weights, seed, Some(&log))?;
        write_text(&path, &model.to_json())?;
        println!(
            "train seed {seed}: {} iterations, objective {} -> {}",
            model.loss_trace.len() - 1,
            model.loss_trace[0],
            model.final_objective().unwrap_or(f64::NAN)
        );
    }
    write_manifest(
        &cfg.workdir.join("models"),
        "train",
        &cfg,
        json!({ "hyperparams": cfg.hyperparams }),
    )
}

const SWEEP_PARAMS: [&str; 6] = ["alpha1", "alpha2", "alpha3", "d", "lambda", "gamma"];

fn cmd_sweep(cfg: &RunConfig, arg: &str) -> Result<(), CliError> {
    let (param, values) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("--sweep expects param=a,b,c, got {arg:?}")))?;
    if !SWEEP_PARAMS.contains(&param) {
        return Err(CliError::Usage(format!(
            "cannot sweep {param:?}; choose one of {}",
            SWEEP_PARAMS.join(", ")
        )));
    }
    let values: Vec<f64> = values
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("bad sweep values in {arg:?}")))?;

    let full = load_inputs(cfg)?;
    let mut table = String::new();
    let header: Vec<String> = cfg
        .ks
        .iter()
        .map(|k| format!("P@{k}"))
        .chain(cfg.ks.iter().map(|k| format!("nDCG@{k}")))
        .collect();
    writeln!(table, "{param}\t{}", header.join("\t")).unwrap();

    for value in values {
        let mut run_cfg = cfg.clone();
        let hp = &mut run_cfg.hyperparams;
        match param {
            "alpha1" => hp.alphas[0] = value,
            "alpha2" => hp.alphas[1] = value,
            "alpha3" => hp.alphas[2] = value,
            "d" => hp.d = value as usize,
            "lambda" => hp.lambda = value,
            "gamma" => hp.gamma = value,
            _ => unreachable!(),
        }
        run_cfg.validate()?;
        let (stack, weights) = load_stack(&run_cfg, &run_cfg.hyperparams.alphas)?;
        let mut reports = Vec::new();
        for &seed in &cfg.seeds {
            let split = load_split(cfg, seed)?;
            let model = train_one(&run_cfg, &full, split.train, &stack, &weights, seed, None)?;
            let lists = rank_test_candidates(&model, &split.validation, cfg.threshold)?;
            reports.push(evaluate_rankings(
                &lists,
                &split.validation,
                cfg.threshold,
                &cfg.ks,
            )?);
        }
        let avg = average_reports(&reports)?;
        let cells: Vec<String> = avg
            .precision
            .values()
            .chain(avg.ndcg.values())
            .map(|v| format!("{v:.4}"))
            .collect();
        writeln!(table, "{value}\t{}", cells.join("\t")).unwrap();
    }
    let dir = cfg.workdir.join("sweeps");
    write_text(&dir.join(format!("{param}.tsv")), &table)?;
    write_manifest(&dir, "train --sweep", cfg, json!({ "sweep": arg }))?;
    print!("{table}");
    Ok(())
}

pub fn cmd_rank(cfg: &RunConfig) -> Result<(), CliError> {
    for &seed in &cfg.seeds {
        let model = load_model(cfg, seed)?;
        let split = load_split(cfg, seed)?;
        let lists = rank_test_candidates(&model, &split.test, cfg.threshold)?;
        let path = cfg
            .workdir
            .join("rankings")
            .join(format!("seed-{seed}.tsv"));
        write_rankings(&path, &lists)?;
        println!(
            "rank seed {seed}: {} users -> {}",
            lists.len(),
            path.display()
        );
    }
    write_manifest(&cfg.workdir.join("rankings"), "rank", cfg, json!({}))
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<EvalReport, CliError> {
    let dir = cfg.workdir.join("eval");
    let mut reports = Vec::new();
    for &seed in &cfg.seeds {
        let model = load_model(cfg, seed)?;
        let split = load_split(cfg, seed)?;
        let lists = rank_test_candidates(&model, &split.test, cfg.threshold)?;
        let report = evaluate_rankings(&lists, &split.test, cfg.threshold, &cfg.ks)?;
        write_text(&dir.join(format!("seed-{seed}.json")), &report.to_json())?;
        reports.push(report);
    }
    let avg = average_reports(&reports)?;
    write_text(&dir.join("report.json"), &avg.to_json())?;
    write_manifest(&dir, "eval", cfg, json!({}))?;
    print!("{}", avg.to_json());
    Ok(avg)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct HybridReport {
    pub beta: f64,
    pub seed: u64,
    pub external: String,
    pub fused: EvalReport,
    pub model: EvalReport,
    pub external_metrics: EvalReport,
}

pub fn cmd_hybrid(cfg: &RunConfig, a: &HybridArgs) -> Result<HybridReport, CliError> {
    let beta = a.beta.unwrap_or(cfg.beta);
    if !(0.0..=1.0).contains(&beta) {
        return Err(CliError::Usage(format!("beta {beta} is outside [0, 1]")));
    }
    let seed = a.seed.unwrap_or(cfg.seeds[0]);
    require_file(&a.external, "external rankings file")?;
    let model = load_model(cfg, seed)?;
    let split = load_split(cfg, seed)?;
    let ours = rank_test_candidates(&model, &split.test, cfg.threshold)?;
    let external = read_rankings(&a.external)?;
    let fused = fuse_all(&ours, &external, beta)?;

    let eval = |lists: &[crate::ranking::RankedList]| {
        evaluate_rankings(lists, &split.test, cfg.threshold, &cfg.ks)
    };
    let report = HybridReport {
        beta,
        seed,
        external: a.external.display().to_string(),
        fused: eval(&fused)?,
        model: eval(&ours)?,
        external_metrics: eval(&external)?,
    };
    let dir = cfg.workdir.join("hybrid").join(format!("seed-{seed}"));
    write_rankings(&dir.join("rankings.tsv"), &fused)?;
    write_json(&dir.join("report.json"), &report)?;
    write_manifest(&dir, "hybrid", cfg, json!({ "beta": beta, "seed": seed }))?;
    print!("{}", serde_json::to_string_pretty(&report).unwrap() + "\n");
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(std::iter::once("crmls").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn train_flags_override_config() {
        let cli = parse(&["train", "--d", "8", "--alphas", "1,0,0", "--seeds", "4,5"]);
        let Command::Train(a) = cli.command else {
            panic!("expected train")
        };
        let cfg = override_train(RunConfig::default(), &a).unwrap();
        assert_eq!(cfg.hyperparams.d, 8);
        assert_eq!(cfg.hyperparams.alphas, vec![1.0, 0.0, 0.0]);
        assert_eq!(cfg.seeds, vec![4, 5]);
        assert_eq!(cfg.hyperparams.gamma, 1e-4);
    }

    #[test]
    fn invalid_overrides_are_usage_errors() {
        let Command::Train(a) = parse(&["train", "--lambda", "-2"]).command else {
            panic!("expected train")
        };
        let err = override_train(RunConfig::default(), &a).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::Data("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::from(TrainError::NonFinite { iteration: 3 }).exit_code(),
            3
        );
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
    }
}
