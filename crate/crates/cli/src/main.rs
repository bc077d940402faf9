//! Command-line entry points: dataset generation, training, sampling,
//! evaluation and the numerical verification suite.
//!
//! Settings come from an optional flat `key = value` file (`--config`);
//! command-line flags override keys from the file.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use graphflow::config::KeyValues;
use graphflow::datasets::{generate, Family, SynthSpec};
use graphflow::denoiser::{DenoiserParams, FeaturizedDenoiser, OracleDenoiser};
use graphflow::eval::{is_connected_planar, is_planar, is_tree, mmd_report, report_rows, rows_to_csv, vun};
use graphflow::graph::{read_dataset, write_dataset, GraphDataset};
use graphflow::initial::InitialDistribution;
use graphflow::sampling::{sample, NodeCountHistogram, SampleConfig};
use graphflow::training::{train_with_observer, TrainConfig};
use graphflow::verify;

use manifest::{DenoiserKind, ModelManifest, SampleManifest};

#[derive(Parser)]
#[command(name = "graphflow", version, about = "Discrete flow matching for categorical graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    GenData(GenDataArgs),
    /// Train a denoiser, or record an oracle denoiser with --oracle.
    Train(TrainArgs),
    /// Generate graphs from a trained (or oracle) model manifest.
    Sample(SampleArgs),
    /// Score generated graphs against train and test sets.
    Eval(EvalArgs),
    /// Run the rate-matrix and discretization checks.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct GenDataArgs {
    /// tree, planar, sbm-like or toy-enumerable.
    #[arg(long)]
    family: Family,
    /// Number of graphs (ignored for toy-enumerable).
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    n_min: usize,
    #[arg(long, default_value_t = 12)]
    n_max: usize,
    /// Attach binary edge-density labels.
    #[arg(long)]
    labels: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset (JSON).
    #[arg(long)]
    data: PathBuf,
    /// Directory receiving manifest.json, checkpoint.json and loss.csv.
    #[arg(long)]
    out_dir: PathBuf,
    /// Flat key/value file; flags below override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Skip training and record the exact posterior over the dataset instead.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    momentum: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    rrwp_depth: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// polyinc, cos, identity, revcos or polydec.
    #[arg(long)]
    train_distortion: Option<String>,
    /// uniform, masking, marginal or absorbing.
    #[arg(long)]
    initial: Option<String>,
    #[arg(long)]
    draws_per_graph: Option<usize>,
    #[arg(long)]
    conditional: bool,
    #[arg(long)]
    label_drop: Option<f64>,
}

#[derive(Args)]
struct SampleArgs {
    /// manifest.json written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Output dataset of generated graphs; a `.manifest.json` sibling is written too.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    sample_distortion: Option<String>,
    /// Target guidance weight.
    #[arg(long)]
    omega: Option<f64>,
    /// Detailed-balance (stochasticity) weight.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    db_design: Option<String>,
    #[arg(long)]
    exact_expectation: bool,
    #[arg(long)]
    max_overshoot: Option<f64>,
    /// Classifier-free guidance weight, used with --label.
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    label: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of graphs to generate.
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Validity {
    Tree,
    Planar,
    ConnectedPlanar,
    None,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    samples: PathBuf,
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, value_enum, default_value_t = Validity::None)]
    validity: Validity,
    #[arg(long)]
    out_json: Option<PathBuf>,
    #[arg(long)]
    out_csv: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Target guidance weight used in the violation check.
    #[arg(long, default_value_t = 0.1)]
    omega: f64,
    /// Random conditional paths per check.
    #[arg(long, default_value_t = 1000)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write TV against step count on the toy fixture to this CSV.
    #[arg(long)]
    tv_sweep: Option<PathBuf>,
    /// Write the check results as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train_cmd(a),
        Command::Sample(a) => sample_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Verify(a) => verify_cmd(a),
    }
}

fn load_dataset(path: &Path) -> Result<GraphDataset> {
    read_dataset(path).with_context(|| format!("reading dataset {}", path.display()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

/// Config file keys, then flag overrides, checked against the known keys
/// of both training and sampling so one file can serve a whole run.
fn merged_config(file: Option<&Path>, overrides: &[(&str, Option<String>)]) -> Result<KeyValues> {
    let mut kv = match file {
        Some(p) => KeyValues::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => KeyValues::default(),
    };
    for (k, v) in overrides {
        if let Some(v) = v {
            kv.set(*k, v);
        }
    }
    let known: Vec<&str> = TrainConfig::KEYS.iter().chain(SampleConfig::KEYS.iter()).copied().collect();
    kv.reject_unknown(&known)?;
    Ok(kv)
}

fn opt<T: ToString>(v: &Option<T>) -> Option<String> {
    v.as_ref().map(ToString::to_string)
}

fn flag(set: bool) -> Option<String> {
    set.then(|| "true".to_string())
}

fn gen_data(a: GenDataArgs) -> Result<()> {
    let spec = SynthSpec {
        density_labels: a.labels,
        ..SynthSpec::new(a.family, a.n, a.n_min, a.n_max, a.seed)
    };
    let ds = generate(&spec)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_dataset(&ds, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("wrote {} graphs to {}", ds.len(), a.out.display());
    Ok(())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let start = Instant::now();
    let kv = merged_config(
        a.config.as_deref(),
        &[
            ("epochs", opt(&a.epochs)),
            ("learning_rate", opt(&a.learning_rate)),
            ("momentum", opt(&a.momentum)),
            ("batch_size", opt(&a.batch_size)),
            ("seed", opt(&a.seed)),
            ("hidden", opt(&a.hidden)),
            ("rrwp_depth", opt(&a.rrwp_depth)),
            ("lambda", opt(&a.lambda)),
            ("train_distortion", a.train_distortion.clone()),
            ("initial", a.initial.clone()),
            ("draws_per_graph", opt(&a.draws_per_graph)),
            ("conditional", flag(a.conditional)),
            ("label_drop", opt(&a.label_drop)),
        ],
    )?;
    let mut cfg = TrainConfig::default();
    cfg.apply(&kv)?;
    cfg.validate()?;
    let ds = load_dataset(&a.data)?;
    let dataset_path = fs::canonicalize(&a.data)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;

    let mut manifest = ModelManifest {
        denoiser: DenoiserKind::Oracle,
        checkpoint: None,
        dataset: dataset_path,
        p0: InitialDistribution::from_dataset(cfg.initial, &ds)?,
        node_counts: NodeCountHistogram::from_dataset(&ds)?,
        train_config: cfg.clone(),
        config_text: kv.to_text(),
        final_loss: None,
        wall_time_s: 0.0,
    };
    if !a.oracle {
        let mut csv = String::from("epoch,mean_loss\n");
        let out = train_with_observer(&ds, &cfg, |epoch, _, loss| {
            csv.push_str(&format!("{epoch},{loss}\n"));
        })?;
        out.params.save(a.out_dir.join(manifest::CHECKPOINT_FILE))?;
        write_text(&a.out_dir.join("loss.csv"), &csv)?;
        manifest.denoiser = DenoiserKind::Featurized;
        manifest.checkpoint = Some(manifest::CHECKPOINT_FILE.to_string());
        manifest.p0 = out.p0;
        manifest.final_loss = out.epoch_losses.last().copied();
    }
    manifest.wall_time_s = start.elapsed().as_secs_f64();
    let path = a.out_dir.join(manifest::MANIFEST_FILE);
    write_json(&path, &manifest)?;
    match manifest.final_loss {
        Some(l) => println!("trained {} epochs, final loss {l:.4}; manifest {}", cfg.epochs, path.display()),
        None => println!("recorded oracle denoiser; manifest {}", path.display()),
    }
    Ok(())
}

fn sample_cmd(a: SampleArgs) -> Result<()> {
    let start = Instant::now();
    let model = ModelManifest::load(&a.model)?;
    let kv = merged_config(
        a.config.as_deref(),
        &[
            ("n_steps", opt(&a.steps)),
            ("sample_distortion", a.sample_distortion.clone()),
            ("omega", opt(&a.omega)),
            ("eta", opt(&a.eta)),
            ("db_design", a.db_design.clone()),
            ("exact_expectation", flag(a.exact_expectation)),
            ("max_overshoot", opt(&a.max_overshoot)),
            ("gamma", opt(&a.gamma)),
            ("label", opt(&a.label)),
            ("sample_seed", opt(&a.seed)),
            ("n_samples", opt(&a.n)),
        ],
    )?;
    let mut cfg = SampleConfig::default();
    cfg.apply(&kv)?;
    cfg.validate()?;
    let n_samples = kv.get::<usize>("n_samples")?.unwrap_or(100);

    let graphs = match model.denoiser {
        DenoiserKind::Featurized => {
            let path = model.checkpoint_path(&a.model)?;
            let params = DenoiserParams::load(&path).with_context(|| format!("loading {}", path.display()))?;
            sample(&FeaturizedDenoiser::new(params), &model.p0, &cfg, &model.node_counts, n_samples)?
        }
        DenoiserKind::Oracle => {
            let ds = load_dataset(&model.dataset)?;
            sample(&OracleDenoiser::new(ds, model.p0.clone()), &model.p0, &cfg, &model.node_counts, n_samples)?
        }
    };
    let out = GraphDataset::new(graphs, None, model.p0.x_card(), model.p0.e_card())?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    write_dataset(&out, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let manifest = SampleManifest {
        model: fs::canonicalize(&a.model)?,
        sample_config: cfg,
        n_samples,
        config_text: kv.to_text(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let manifest_path = manifest::sample_manifest_path(&a.out);
    write_json(&manifest_path, &manifest)?;
    println!("wrote {n_samples} graphs to {}", a.out.display());
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let samples = load_dataset(&a.samples)?;
    let train = load_dataset(&a.train)?;
    let test = load_dataset(&a.test)?;
    let validity: fn(&graphflow::CategoricalGraph) -> bool = match a.validity {
        Validity::Tree => is_tree,
        Validity::Planar => is_planar,
        Validity::ConnectedPlanar => is_connected_planar,
        Validity::None => |_| true,
    };
    let v = vun(samples.graphs(), train.graphs(), validity)?;
    let m = mmd_report(samples.graphs(), test.graphs(), Some(train.graphs()))?;
    let rows = report_rows(Some(&v), Some(&m));
    for (k, val) in &rows {
        println!("{k}: {val:.6}");
    }
    if let Some(p) = &a.out_json {
        write_json(p, &serde_json::json!({ "vun": v, "mmd": m }))?;
    }
    if let Some(p) = &a.out_csv {
        write_text(p, &rows_to_csv(&rows))?;
    }
    Ok(())
}

fn verify_cmd(a: VerifyArgs) -> Result<()> {
    if !(a.omega.is_finite() && a.omega >= 0.0) {
        bail!("--omega must be finite and >= 0");
    }
    let checks = verify::run_all(a.omega, a.paths, a.seed)?;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(p) = &a.tv_sweep {
        let mut csv = String::from("prior,steps,tv\n");
        for kind in [graphflow::initial::InitialKind::Uniform, graphflow::initial::InitialKind::Masking] {
            for (steps, tv) in verify::tv_sweep(kind, &verify::TV_SWEEP_STEPS, Default::default())? {
                csv.push_str(&format!("{kind},{steps},{tv}\n"));
            }
        }
        write_text(p, &csv)?;
    }
    if let Some(p) = &a.json {
        write_json(p, &checks)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        bail!("{failed} check(s) failed");
    }
    Ok(())
}
