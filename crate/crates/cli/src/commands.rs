use std::fs;
use std::path::{Path, PathBuf};

use kgjoint::checkpoint::{load_checkpoint, save_joint, save_structural, Model};
use kgjoint::data::{
    build_vocab, load_triples, make_cluster_kg, make_synthetic, write_triples, ClusterKgParams, DatasetStats,
    KnownTriples, Role, TripleSet, Vocabulary,
};
use kgjoint::diagnostics::{check_gru, check_joint, check_structural, GradCheckReport, ToySize};
use kgjoint::eval::{evaluate, write_ranks_tsv, EvalOptions, Evaluation};
use kgjoint::joint::{train_joint_with, JointConfig, JointModel};
use kgjoint::literal::{load_literal_file, write_literal_file, LiteralStore, MissingPolicy};
use kgjoint::numeric::{NormOrder, SgdConfig};
use kgjoint::structural::{train_structural_with, StructuralModel};
use kgjoint::training::Validation;
use log::{info, warn};
use serde_json::json;

use crate::args::*;
use crate::failure::Failure;
use crate::manifest::{sidecar, Manifest};
use crate::settings::Settings;

type CmdResult = Result<(), Failure>;

fn need_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::usage(format!("{}: no such file", path.display())))
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| kgjoint::Error::io(path, e))?;
    Ok(())
}

fn create_dir(path: &Path) -> Result<(), Failure> {
    fs::create_dir_all(path).map_err(|e| kgjoint::Error::io(path, e))?;
    Ok(())
}

fn sgd_config(s: &Settings, a: &SgdArgs) -> Result<SgdConfig, Failure> {
    let d = SgdConfig::default();
    let norm: u8 = s.get("norm", a.norm, 2)?;
    let cfg = SgdConfig {
        learning_rate: s.get("lr", a.lr, d.learning_rate)?,
        batch_size: s.get("batch", a.batch, d.batch_size)?,
        margin: s.get("margin", a.margin, d.margin)?,
        dim: s.get("dim", a.dim, d.dim)?,
        epochs: s.get("epochs", a.epochs, d.epochs)?,
        seed: s.get("seed", a.seed, d.seed)?,
        norm_order: NormOrder::try_from(norm).map_err(|e| Failure::usage(e.to_string()))?,
    };
    cfg.validate()?;
    Ok(cfg)
}

struct Paths {
    train: Option<PathBuf>,
    valid: Option<PathBuf>,
    test: Option<PathBuf>,
}

impl Paths {
    fn resolve(s: &Settings, a: &SplitArgs) -> Result<Self, Failure> {
        let p = Self {
            train: s.opt("train", a.train.clone())?,
            valid: s.opt("valid", a.valid.clone())?,
            test: s.opt("test", a.test.clone())?,
        };
        p.present().into_iter().try_for_each(|f| need_file(f))?;
        Ok(p)
    }

    fn present(&self) -> Vec<&PathBuf> {
        [&self.train, &self.valid, &self.test].into_iter().flatten().collect()
    }

    fn require_train(&self) -> Result<&PathBuf, Failure> {
        self.train.as_ref().ok_or_else(|| Failure::usage("--train is required"))
    }
}

struct Dataset {
    vocab: Vocabulary,
    train: Option<TripleSet>,
    valid: Option<TripleSet>,
    test: Option<TripleSet>,
}

impl Dataset {
    /// Loads the given splits. Without a vocabulary, one is built from all of them.
    fn load(paths: &Paths, vocab: Option<Vocabulary>) -> Result<Self, Failure> {
        let vocab = match vocab {
            Some(v) => v,
            None => build_vocab(&paths.present())?,
        };
        let load = |p: &Option<PathBuf>, role| -> Result<Option<TripleSet>, Failure> {
            Ok(match p {
                Some(p) => Some(load_triples(p, &vocab, role)?),
                None => None,
            })
        };
        let (train, valid, test) =
            (load(&paths.train, Role::Train)?, load(&paths.valid, Role::Valid)?, load(&paths.test, Role::Test)?);
        Ok(Self { vocab, train, valid, test })
    }

    fn sets(&self) -> impl Iterator<Item = &TripleSet> {
        [&self.train, &self.valid, &self.test].into_iter().flatten()
    }

    fn known(&self) -> KnownTriples {
        KnownTriples::from_sets(self.sets())
    }

    fn train(&self) -> Result<&TripleSet, Failure> {
        let t = self.train.as_ref().ok_or_else(|| Failure::usage("--train is required"))?;
        if t.is_empty() {
            return Err(kgjoint::Error::Data("training set is empty".into()).into());
        }
        Ok(t)
    }
}

struct EarlyStop {
    every: usize,
    patience: usize,
    enabled: bool,
}

impl EarlyStop {
    fn resolve(s: &Settings, a: &EarlyStopArgs) -> Result<Self, Failure> {
        let every = s.get("valid-every", a.valid_every, 10)?;
        let patience = s.get("patience", a.patience, 50)?;
        let disabled = s.switch("no-early-stop", a.no_early_stop)?;
        if every == 0 || patience == 0 {
            return Err(Failure::usage("--valid-every and --patience must be positive"));
        }
        Ok(Self { every, patience, enabled: !disabled })
    }

    fn validation<'a>(&self, data: &'a Dataset, known: &'a KnownTriples) -> Option<Validation<'a>> {
        match (&data.valid, self.enabled) {
            (Some(set), true) if !set.is_empty() => {
                Some(Validation { set, known, every: self.every, patience: self.patience })
            }
            _ => None,
        }
    }
}

struct LiteralSettings {
    path: Option<PathBuf>,
    policy: MissingPolicy,
    joint_dim: Option<usize>,
    freeze_literals: bool,
    freeze_structural: bool,
    freeze_projection: bool,
}

impl LiteralSettings {
    fn resolve(s: &Settings, a: &LiteralArgs) -> Result<Self, Failure> {
        let path: Option<PathBuf> = s.opt("literals", a.literals.clone())?;
        let allow_zero = s.switch("allow-zero-literals", a.allow_zero_literals)?;
        match &path {
            Some(p) => need_file(p)?,
            None if !allow_zero => {
                return Err(Failure::usage(
                    "joint training needs --literals FILE (or --allow-zero-literals to run on zero vectors)",
                ))
            }
            None => {}
        }
        Ok(Self {
            path,
            policy: s.get("missing-policy", a.missing_policy, MissingPolicy::Zeros)?,
            joint_dim: s.opt("joint-dim", a.joint_dim)?,
            freeze_literals: s.switch("freeze-literals", a.freeze_literals)?,
            freeze_structural: s.switch("freeze-structural", a.freeze_structural)?,
            freeze_projection: s.switch("freeze-projection", a.freeze_projection)?,
        })
    }

    fn store(&self, vocab: &Vocabulary, fallback_dim: usize) -> Result<LiteralStore, Failure> {
        match &self.path {
            Some(p) => {
                let store = load_literal_file(p, vocab, self.policy)?;
                let c = store.coverage();
                info!(
                    "literals: {} entities found, {} missing; {} relations found, {} missing; {} ignored",
                    c.entities_found, c.entities_missing, c.relations_found, c.relations_missing, c.ignored
                );
                Ok(store)
            }
            None => {
                let dim = self.joint_dim.unwrap_or(fallback_dim);
                warn!("no literal file: using zero literal vectors of dimension {dim}");
                Ok(LiteralStore::zeros(vocab.n_entities(), vocab.n_relations(), dim))
            }
        }
    }

    fn joint_config(&self, sgd: SgdConfig, literal_dim: usize) -> JointConfig {
        JointConfig {
            sgd: SgdConfig { dim: self.joint_dim.unwrap_or(literal_dim), ..sgd },
            freeze_literals: self.freeze_literals,
            freeze_structural: self.freeze_structural,
            freeze_projection: self.freeze_projection,
        }
    }
}

fn summary(phase: &str, losses: &[f64], best_mr: Option<f64>, best_epoch: Option<usize>) -> serde_json::Value {
    json!({
        "phase": phase,
        "epochs_run": losses.len(),
        "final_loss": losses.last().copied(),
        "best_valid_mr_filtered": best_mr,
        "best_epoch": best_epoch,
    })
}

fn run_structural(
    data: &Dataset,
    sgd: SgdConfig,
    early: &EarlyStop,
) -> Result<(StructuralModel<f32>, serde_json::Value), Failure> {
    let train = data.train()?;
    let known = data.known();
    let model = StructuralModel::new(data.vocab.n_entities(), data.vocab.n_relations(), sgd)?;
    let validation = early.validation(data, &known);
    let out = train_structural_with(model, train, validation.as_ref())?;
    let s = summary("structural", &out.epoch_losses, out.best_valid_mr, out.best_epoch);
    Ok((out.model, s))
}

fn run_joint(
    data: &Dataset,
    structural: &StructuralModel<f32>,
    literals: &LiteralSettings,
    sgd: SgdConfig,
    early: &EarlyStop,
) -> Result<(JointModel<f32>, serde_json::Value), Failure> {
    let train = data.train()?;
    let known = data.known();
    let store = literals.store(&data.vocab, structural.dim())?;
    let config = literals.joint_config(sgd, store.dim());
    let model = JointModel::new(structural, &store, config)?;
    let validation = early.validation(data, &known);
    let out = train_joint_with(model, train, validation.as_ref())?;
    let s = summary("joint", &out.epoch_losses, out.best_valid_mr, out.best_epoch);
    Ok((out.model, s))
}

fn evaluate_model(model: &Model, test: &TripleSet, known: &KnownTriples) -> Result<Evaluation, Failure> {
    let opts = EvalOptions::default();
    Ok(match model {
        Model::Structural(m) => evaluate(&m.scorer(), test, known, &opts)?,
        Model::Joint(m) => evaluate(&m.embed_all()?, test, known, &opts)?,
    })
}

/// Sizes the global worker pool used by evaluation.
fn threads(s: &Settings, flag: Option<usize>) -> Result<(), Failure> {
    if let Some(n) = s.opt("threads", flag)? {
        if n == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot start {n} threads: {e}")))?;
    }
    Ok(())
}

fn print_json(value: &serde_json::Value) {
    println!("{value}");
}

pub fn stats(a: StatsArgs) -> CmdResult {
    let s = Settings::load(a.config.config.as_deref())?;
    let dir: Option<PathBuf> = s.opt("dir", a.dir.clone())?;
    let mut splits =
        SplitArgs { train: a.splits.train.clone(), valid: a.splits.valid.clone(), test: a.splits.test.clone() };
    if let Some(dir) = &dir {
        let pick = |flag: &mut Option<PathBuf>, name: &str| {
            let p = dir.join(name);
            if flag.is_none() && p.is_file() {
                *flag = Some(p);
            }
        };
        pick(&mut splits.train, "train.txt");
        pick(&mut splits.valid, "valid.txt");
        pick(&mut splits.test, "test.txt");
    }
    let paths = Paths::resolve(&s, &splits)?;
    s.finish()?;
    paths.require_train()?;
    let data = Dataset::load(&paths, None)?;
    let stats = DatasetStats::collect(&data.vocab, data.train()?, data.valid.as_ref(), data.test.as_ref());
    println!("{}", stats.to_json());
    Ok(())
}

pub fn make_synthetic_data(a: SyntheticArgs) -> CmdResult {
    let s = Settings::load(a.config.config.as_deref())?;
    let kind = s.get("kind", a.kind, SyntheticKind::Lattice)?;
    let out: PathBuf = s.require("out", a.out.clone())?;
    let seed = s.get("seed", a.seed, 0)?;
    create_dir(&out)?;
    let files = [out.join("train.txt"), out.join("valid.txt"), out.join("test.txt")];
    let mut outputs: Vec<PathBuf> = files.to_vec();
    let mut extra = None;

    let (vocab, splits) = match kind {
        SyntheticKind::Lattice => {
            let n = s.get("entities", a.entities, 200)?;
            let r = s.get("relations", a.relations, 16)?;
            let grid = s.get("grid-dim", a.grid_dim, 8)?;
            reject_other_kind(&a, kind)?;
            s.finish()?;
            let kg = make_synthetic(n, r, grid, seed)?;
            extra = Some(("planted_offsets", json!(kg.offsets)));
            (kg.vocab, [kg.train, kg.valid, kg.test])
        }
        SyntheticKind::Clusters => {
            let d = ClusterKgParams::default();
            let p = ClusterKgParams {
                n_entities: s.get("entities", a.entities, d.n_entities)?,
                n_clusters: s.get("clusters", a.clusters, d.n_clusters)?,
                n_relations: s.get("relations", a.relations, d.n_relations)?,
                tails_per_query: s.get("tails-per-query", a.tails_per_query, d.tails_per_query)?,
                literal_dim: s.get("literal-dim", a.literal_dim, d.literal_dim)?,
                literal_noise: s.get("literal-noise", a.literal_noise, d.literal_noise)?,
                train_fraction: s.get("train-fraction", a.train_fraction, d.train_fraction)?,
                valid_fraction: s.get("valid-fraction", a.valid_fraction, d.valid_fraction)?,
                seed,
            };
            reject_other_kind(&a, kind)?;
            s.finish()?;
            let kg = make_cluster_kg(&p)?;
            let store = LiteralStore::from_matrices(kg.entity_literals, kg.relation_literals)?;
            let lit = out.join("literals.leb1");
            write_literal_file(&lit, &store, &kg.vocab)?;
            outputs.push(lit);
            (kg.vocab, [kg.train, kg.valid, kg.test])
        }
    };
    for (path, set) in files.iter().zip(&splits) {
        write_triples(path, set, &vocab)?;
    }
    let stats = DatasetStats::collect(&vocab, &splits[0], Some(&splits[1]), Some(&splits[2]));
    let mut manifest = Manifest::new("make-synthetic", &s);
    for p in &outputs {
        manifest.output(p);
    }
    if let Some((k, v)) = extra {
        manifest.extra(k, v);
    }
    manifest.extra("stats", stats);
    manifest.write(&out.join("manifest.json"))?;
    println!("{}", stats.to_json());
    Ok(())
}

fn reject_other_kind(a: &SyntheticArgs, kind: SyntheticKind) -> CmdResult {
    let cluster_only = [
        ("--clusters", a.clusters.is_some()),
        ("--tails-per-query", a.tails_per_query.is_some()),
        ("--literal-dim", a.literal_dim.is_some()),
        ("--literal-noise", a.literal_noise.is_some()),
        ("--train-fraction", a.train_fraction.is_some()),
        ("--valid-fraction", a.valid_fraction.is_some()),
    ];
    let offending: Vec<&str> = match kind {
        SyntheticKind::Lattice => cluster_only.iter().filter(|f| f.1).map(|f| f.0).collect(),
        SyntheticKind::Clusters => a.grid_dim.map(|_| "--grid-dim").into_iter().collect(),
    };
    if offending.is_empty() {
        Ok(())
    } else {
        Err(Failure::usage(format!(
            "{} not valid with --kind {}",
            offending.join(", "),
            serde_json::to_value(kind).unwrap().as_str().unwrap_or_default()
        )))
    }
}

pub fn train_structural(a: StructuralArgs) -> CmdResult {
    let s = Settings::load(a.config.config.as_deref())?;
    let paths = Paths::resolve(&s, &a.splits)?;
    let sgd = sgd_config(&s, &a.sgd)?;
    let early = EarlyStop::resolve(&s, &a.early_stop)?;
    let out: PathBuf = s.require("out", a.out.clone())?;
    threads(&s, a.threads)?;
    s.finish()?;
    paths.require_train()?;

    let data = Dataset::load(&paths, None)?;
    let (model, summary) = run_structural(&data, sgd, &early)?;
    save_structural(&out, &model, &data.vocab)?;

    let mut manifest = Manifest::new("train-structural", &s);
    manifest.inputs(paths.present())?;
    manifest.output(&out);
    manifest.write(&sidecar(&out, ".manifest.json"))?;
    print_json(&summary);
    Ok(())
}

pub fn train_joint(a: JointArgs) -> CmdResult {
    let s = Settings::load(a.config.config.as_deref())?;
    let checkpoint: Option<PathBuf> = s.opt("checkpoint", a.checkpoint.clone())?;
    let skip = s.switch("skip-structural", a.skip_structural)?;
    let paths = Paths::resolve(&s, &a.splits)?;
    let literals = LiteralSettings::resolve(&s, &a.literals)?;
    let sgd = sgd_config(&s, &a.sgd)?;
    let early = EarlyStop::resolve(&s, &a.early_stop)?;
    let out: PathBuf = s.require("out", a.out.clone())?;
    threads(&s, a.threads)?;
    s.finish()?;
    paths.require_train()?;

    let (data, structural) = match (&checkpoint, skip) {
        (Some(_), true) => return Err(Failure::usage("--checkpoint and --skip-structural are mutually exclusive")),
        (None, false) => {
            return Err(Failure::usage(
                "train-joint needs a structural --checkpoint (or --skip-structural for a random start)",
            ))
        }
        (Some(c), false) => {
            need_file(c)?;
            let ckpt = load_checkpoint(c)?;
            let Model::Structural(model) = ckpt.model else {
                return Err(Failure::usage(format!("{} is not a structural checkpoint", c.display())));
            };
            (Dataset::load(&paths, Some(ckpt.vocab))?, model)
        }
        (None, true) => {
            let data = Dataset::load(&paths, None)?;
            let model = StructuralModel::new(data.vocab.n_entities(), data.vocab.n_relations(), sgd.clone())?;
            (data, model)
        }
    };
    let (model, summary) = run_joint(&data, &structural, &literals, sgd, &early)?;
    save_joint(&out, &model, &data.vocab)?;

    let mut manifest = Manifest::new("train-joint", &s);
    manifest.inputs(checkpoint.iter())?;
    manifest.inputs(paths.present())?;
    manifest.inputs(literals.path.iter())?;
    manifest.output(&out);
    manifest.write(&sidecar(&out, ".manifest.json"))?;
    print_json(&summary);
    Ok(())
}

pub fn train_all(a: AllArgs) -> CmdResult {
    let s = Settings::load(a.config.config.as_deref())?;
    let paths = Paths::resolve(&s, &a.splits)?;
    let literals = LiteralSettings::resolve(&s, &a.literals)?;
    let sgd = sgd_config(&s, &a.sgd)?;
    let early = EarlyStop::resolve(&s, &a.early_stop)?;
    let joint_sgd = SgdConfig {
        learning_rate: s.get("joint-lr", a.joint_lr, sgd.learning_rate)?,
        epochs: s.get("joint-epochs", a.joint_epochs, sgd.epochs)?,
        ..sgd.clone()
    };
    joint_sgd.validate()?;
    let out_dir: PathBuf = s.require("out-dir", a.out_dir.clone())?;
    threads(&s, a.threads)?;
    s.finish()?;
    paths.require_train()?;
    create_dir(&out_dir)?;

    let data = Dataset::load(&paths, None)?;
    let (structural, s_summary) = run_structural(&data, sgd, &early)?;
    let s_path = out_dir.join("structural.ckpt");
    save_structural(&s_path, &structural, &data.vocab)?;
    let (joint, j_summary) = run_joint(&data, &structural, &literals, joint_sgd, &early)?;
    let j_path = out_dir.join("joint.ckpt");
    save_joint(&j_path, &joint, &data.vocab)?;

    let mut manifest = Manifest::new("train-all", &s);
    manifest.inputs(paths.present())?;
    manifest.inputs(literals.path.iter())?;
    manifest.output(&s_path);
    manifest.output(&j_path);

    let mut reports = serde_json::Map::new();
    if let Some(test) = &data.test {
        let known = data.known();
        for (name, model) in [("structural", Model::Structural(structural)), ("joint", Model::Joint(Box::new(joint)))] {
            let eval = evaluate_model(&model, test, &known)?;
            let path = out_dir.join(format!("report.{name}.json"));
            write_text(&path, &format!("{}\n", eval.report.to_json()))?;
            manifest.output(&path);
            reports.insert(name.to_string(), serde_json::from_str(&eval.report.to_json()).expect("report JSON"));
        }
    }
    manifest.write(&out_dir.join("manifest.json"))?;
    print_json(&json!({"structural": s_summary, "joint": j_summary, "test": reports}));
    Ok(())
}

pub fn eval(a: EvalArgs) -> CmdResult {
    let s = Settings::load(a.config.config.as_deref())?;
    let checkpoint: PathBuf = s.require("checkpoint", a.checkpoint.clone())?;
    let paths = Paths::resolve(&s, &a.splits)?;
    let report: Option<PathBuf> = s.opt("report", a.report.clone())?;
    let ranks: Option<PathBuf> = s.opt("ranks", a.ranks.clone())?;
    threads(&s, a.threads)?;
    let ranks = ranks.or_else(|| report.as_ref().map(|r| sidecar(r, ".ranks.tsv")));
    s.note("ranks", &ranks);
    s.finish()?;
    need_file(&checkpoint)?;
    if paths.test.is_none() {
        return Err(Failure::usage("--test is required"));
    }
    if paths.train.is_none() {
        warn!("no --train given: the filtered setting only removes valid/test triples");
    }

    let ckpt = load_checkpoint(&checkpoint)?;
    let data = Dataset::load(&paths, Some(ckpt.vocab))?;
    let test = data.test.as_ref().expect("checked above");
    let evaluation = evaluate_model(&ckpt.model, test, &data.known())?;
    let json = format!("{}\n", evaluation.report.to_json());
    match &report {
        Some(path) => write_text(path, &json)?,
        None => print!("{json}"),
    }
    if let Some(path) = &ranks {
        write_ranks_tsv(path, &evaluation.ranks, &data.vocab)?;
    }
    if let Some(path) = &report {
        let mut manifest = Manifest::new("eval", &s);
        manifest.input(&checkpoint)?;
        manifest.inputs(paths.present())?;
        manifest.output(path);
        if let Some(r) = &ranks {
            manifest.output(r);
        }
        manifest.write(&sidecar(path, ".manifest.json"))?;
    }
    Ok(())
}

pub fn gradcheck(a: GradcheckArgs) -> CmdResult {
    let s = Settings::load(a.config.config.as_deref())?;
    let structural = s.switch("structural", a.structural)?;
    let gru = s.switch("gru", a.gru)?;
    let joint = s.switch("joint", a.joint)?;
    let dim = s.get("dim", a.dim, 4)?;
    let size = ToySize {
        joint_dim: dim,
        structural_dim: s.get("structural-dim", a.structural_dim, 3)?,
        literal_dim: s.get("literal-dim", a.literal_dim, dim)?,
        n_triples: s.get("triples", a.triples, 5)?,
        ..ToySize::default()
    };
    let seed = s.get("seed", a.seed, 0)?;
    let tolerance = s.get("tolerance", a.tolerance, 1e-4)?;
    s.finish()?;
    if size.joint_dim == 0 || size.structural_dim == 0 || size.literal_dim == 0 {
        return Err(Failure::usage("dimensions must be positive"));
    }

    let all = !(structural || gru || joint);
    let mut reports: Vec<GradCheckReport> = Vec::new();
    if all || structural {
        reports.push(check_structural(&size, seed)?);
    }
    if all || gru {
        reports.push(check_gru(&size, seed)?);
    }
    if all || joint {
        reports.push(check_joint(&size, seed)?);
    }
    let max = reports.iter().map(|r| r.max_relative_error).fold(0.0, f64::max);
    for r in &reports {
        if a.json {
            println!("{}", serde_json::to_string(r).expect("report serializes"));
        } else {
            println!(
                "{}: max relative error {:.3e} over {} parameter groups",
                r.target,
                r.max_relative_error,
                r.groups.len()
            );
        }
    }
    println!("max relative error {max:.3e} (tolerance {tolerance:e})");
    if max < tolerance {
        Ok(())
    } else {
        Err(Failure::Numeric(format!("gradient check failed: {max:.3e} >= {tolerance:e}")))
    }
}
