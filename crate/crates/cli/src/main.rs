use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qnn_cli::config::ExperimentConfig;
use qnn_cli::harness::{
    self, boundary_grid, run_bench, run_gradcheck, train_once, GradCheckSettings, GridSpec,
};
use qnn_core::datasets::{cluster_dataset, six_cluster_specs, xor_dataset, XorEncoding};
use qnn_core::io::{load_network, save_network};
use qnn_core::layers::{init_layer, LayerKind, QInit};
use qnn_core::network::Network;
use qnn_core::tensor::Rng;
use qnn_core::{ActivationKind, Dataset64, Network64};

#[derive(Parser)]
#[command(
    name = "qnn",
    about = "Train and benchmark feedforward networks with quadratic neurons",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset and write it in the dataset dump format
    Gen {
        #[command(subcommand)]
        kind: GenKind,
    },
    /// Train a model described by a config file; writes the model and a loss log
    Train {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: TrainOverrides,
        /// Where to save the trained model
        #[arg(long, default_value = "model.txt")]
        out: PathBuf,
        /// Where to write the per-epoch loss CSV
        #[arg(long)]
        loss_log: Option<PathBuf>,
    },
    /// Evaluate a saved model on a dataset dump
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Run repeated trainings with consecutive seeds and report mean/std/best/worst
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: TrainOverrides,
        /// Number of independent trials (seeds seed, seed+1, ...)
        #[arg(long)]
        trials: Option<usize>,
        /// Worker threads (0 = one per core)
        #[arg(long)]
        workers: Option<usize>,
        /// Where to write the per-trial CSV
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify analytic gradients against central finite differences
    Gradcheck {
        /// Number of random parameter draws per composition
        #[arg(long, default_value_t = 100)]
        seeds: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[arg(long, default_value_t = 1e-6)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-10)]
        atol: f64,
        /// Custom stack like "affine:4:sigmoid,quadratic:3:sigmoid"
        /// (checked instead of the built-in composition suite)
        #[arg(long)]
        arch: Option<String>,
        /// Input width for --arch
        #[arg(long)]
        input_dim: Option<usize>,
        /// Corrupt one gradient coordinate to prove the checker catches it
        #[arg(long, default_value_t = false)]
        inject_fault: bool,
    },
    /// Export a decision grid (x, y, class, final-layer pre-activations)
    Boundary {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        xmin: f64,
        #[arg(long, allow_hyphen_values = true)]
        xmax: f64,
        #[arg(long, allow_hyphen_values = true)]
        ymin: f64,
        #[arg(long, allow_hyphen_values = true)]
        ymax: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value = "boundary.csv")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenKind {
    /// The four XOR pairs
    Xor {
        #[arg(long, default_value = "xor.csv")]
        out: PathBuf,
        /// "bipolar" (labels -1/+1) or "binary" (labels 0/1)
        #[arg(long, default_value = "bipolar")]
        encoding: String,
    },
    /// The six-cluster 2-D Gaussian benchmark
    Clusters {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "clusters-train.csv")]
        train_out: PathBuf,
        #[arg(long, default_value = "clusters-test.csv")]
        test_out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        train_per_class: usize,
        #[arg(long, default_value_t = 500)]
        test_per_class: usize,
    },
}

/// Flag overrides for the `[train]` section of the config file.
#[derive(Args)]
struct TrainOverrides {
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    shuffle: Option<bool>,
    #[arg(long)]
    log_every: Option<usize>,
}

impl TrainOverrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(eta) = self.eta {
            cfg.train.eta = eta;
        }
        if let Some(epochs) = self.epochs {
            cfg.train.epochs = epochs;
        }
        if let Some(seed) = self.seed {
            cfg.train.seed = seed;
        }
        if let Some(shuffle) = self.shuffle {
            cfg.train.shuffle = shuffle;
        }
        if let Some(log_every) = self.log_every {
            cfg.train.log_every = log_every;
        }
    }
}

fn main() {
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen { kind } => cmd_gen(kind),
        Command::Train { config, overrides, out, loss_log } => {
            cmd_train(config, overrides, out, loss_log)
        }
        Command::Eval { model, data } => cmd_eval(model, data),
        Command::Bench { config, overrides, trials, workers, out } => {
            cmd_bench(config, overrides, trials, workers, out)
        }
        Command::Gradcheck {
            seeds,
            seed_base,
            h,
            rtol,
            atol,
            arch,
            input_dim,
            inject_fault,
        } => cmd_gradcheck(seeds, seed_base, h, rtol, atol, arch, input_dim, inject_fault),
        Command::Boundary { model, xmin, xmax, ymin, ymax, steps, out } => {
            let net: Network64 = load_network(&model)?;
            let spec = GridSpec { xmin, xmax, ymin, ymax, steps };
            let rows = boundary_grid(&net, &spec)?;
            harness::write_boundary_csv(&rows, &spec, &out)?;
            println!("wrote {} grid rows to {}", rows.len(), out.display());
            Ok(())
        }
    }
}

fn cmd_gen(kind: GenKind) -> Result<()> {
    match kind {
        GenKind::Xor { out, encoding } => {
            let encoding = match encoding.as_str() {
                "bipolar" => XorEncoding::Bipolar,
                "binary" => XorEncoding::Binary,
                other => bail!("unknown encoding '{other}' (use bipolar or binary)"),
            };
            let data = xor_dataset::<f64>(encoding);
            data.save(&out)?;
            println!("wrote {} rows to {}", data.len(), out.display());
        }
        GenKind::Clusters { seed, train_out, test_out, train_per_class, test_per_class } => {
            let specs = six_cluster_specs::<f64>(train_per_class, test_per_class);
            let (train, test) = cluster_dataset(&specs, seed)?;
            train.save(&train_out)?;
            test.save(&test_out)?;
            println!(
                "wrote {} train rows to {} and {} test rows to {}",
                train.len(),
                train_out.display(),
                test.len(),
                test_out.display()
            );
        }
    }
    Ok(())
}

fn cmd_train(
    config: PathBuf,
    overrides: TrainOverrides,
    out: PathBuf,
    loss_log: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&config)?;
    overrides.apply(&mut cfg);
    let (train, test) = cfg.dataset.build()?;
    let train_cfg = cfg.train_config();
    let (net, report) = train_once(&cfg.model, &train, &train_cfg)?;
    save_network(&net, &out)?;
    if let Some(path) = &loss_log {
        harness::write_loss_log(&report, path)?;
    }
    println!(
        "trained {} epochs in {:.2}s, final mean loss {:.6}",
        report.epoch_loss.len(),
        report.wall_time_secs,
        report.epoch_loss.last().unwrap()
    );
    println!("train accuracy {:.4}", net.accuracy(&train)?);
    if let Some(test) = &test {
        println!("test accuracy {:.4}", net.accuracy(test)?);
    }
    println!("model saved to {}", out.display());
    Ok(())
}

fn cmd_eval(model: PathBuf, data: PathBuf) -> Result<()> {
    let net: Network64 = load_network(&model)?;
    let dataset = Dataset64::load(&data)?;
    let accuracy = net.accuracy(&dataset)?;
    println!("accuracy {:.4} over {} samples", accuracy, dataset.len());
    Ok(())
}

fn cmd_bench(
    config: PathBuf,
    overrides: TrainOverrides,
    trials: Option<usize>,
    workers: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&config)?;
    overrides.apply(&mut cfg);
    if let Some(trials) = trials {
        cfg.bench.trials = trials;
    }
    if let Some(workers) = workers {
        cfg.bench.workers = workers;
    }
    let stats = run_bench(&cfg, cfg.bench.trials, cfg.bench.workers)?;
    println!("{}", stats.summary_row());
    if let Some(path) = &out {
        stats.write_csv(path)?;
        println!("per-trial results written to {}", path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gradcheck(
    seeds: usize,
    seed_base: u64,
    h: f64,
    rtol: f64,
    atol: f64,
    arch: Option<String>,
    input_dim: Option<usize>,
    inject_fault: bool,
) -> Result<()> {
    let custom = match arch {
        Some(spec) => {
            let input_dim = input_dim.context("--arch needs --input-dim")?;
            let net = parse_arch(&spec, input_dim)?;
            Some(("custom", net))
        }
        None => None,
    };
    let settings = GradCheckSettings { seeds, seed_base, h, rtol, atol, inject_fault };
    let pass = run_gradcheck(custom, &settings, &mut std::io::stdout())?;
    if !pass {
        bail!("gradient check failed");
    }
    Ok(())
}

/// Parse "kind:width[:activation]" layer specs separated by commas.
fn parse_arch(spec: &str, input_dim: usize) -> Result<Network64> {
    let mut rng = Rng::new(0);
    let mut layers = Vec::new();
    let mut width = input_dim;
    for (i, part) in spec.split(',').enumerate() {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() < 2 || fields.len() > 3 {
            bail!("layer {i}: expected kind:width[:activation], got '{part}'");
        }
        let kind: LayerKind = fields[0].parse()?;
        let out_width: usize =
            fields[1].parse().with_context(|| format!("layer {i}: bad width '{}'", fields[1]))?;
        let act: ActivationKind =
            if fields.len() == 3 { fields[2].parse()? } else { ActivationKind::Sigmoid };
        layers.push(init_layer(kind, width, out_width, act, &QInit::Zero, &mut rng)?);
        width = out_width;
    }
    Ok(Network::new(input_dim, layers)?)
}
