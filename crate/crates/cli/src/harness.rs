//! Experiment machinery behind the CLI commands: single training runs,
//! multi-seed benchmarks with summary statistics, decision-boundary grid
//! export, and the gradient-check driver.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};

use qnn_core::gradcheck::{
    check_network, check_network_against, random_check_point, standard_compositions,
    GradCheckReport,
};
use qnn_core::layers::ParamGroup;
use qnn_core::network::TrainReport;
use qnn_core::{Dataset64, Network64, TrainConfig64, Vector64};

use crate::config::{ExperimentConfig, ModelConfig};

/// Train a fresh model: `seed` drives both the parameter initialization and
/// the epoch shuffles.
pub fn train_once(
    model: &ModelConfig,
    data: &Dataset64,
    cfg: &TrainConfig64,
) -> Result<(Network64, TrainReport<f64>)> {
    let mut net = model.build(cfg.seed)?;
    let report = net.sgd_train(data, cfg)?;
    Ok((net, report))
}

#[derive(Clone, Copy, Debug)]
pub struct TrialOutcome {
    pub seed: u64,
    pub accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrialStats {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub best: f64,
    pub worst: f64,
    pub trials: Vec<TrialOutcome>,
}

/// Summarize per-trial accuracies; `trials` keeps its order.
pub fn stats_from(trials: Vec<TrialOutcome>) -> TrialStats {
    assert!(!trials.is_empty());
    let n = trials.len() as f64;
    let mean = trials.iter().map(|t| t.accuracy).sum::<f64>() / n;
    let var = trials.iter().map(|t| (t.accuracy - mean) * (t.accuracy - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let best = trials.iter().map(|t| t.accuracy).fold(f64::NEG_INFINITY, f64::max);
    let worst = trials.iter().map(|t| t.accuracy).fold(f64::INFINITY, f64::min);
    TrialStats { mean, std, best, worst, trials }
}

/// Run `trials` independent trainings with seeds `base_seed, base_seed+1, …`
/// and collect test accuracies. The dataset is generated once and shared;
/// trials execute concurrently (each owns its network and RNG) but the
/// result is identical to the sequential run.
pub fn run_bench(cfg: &ExperimentConfig, trials: usize, workers: usize) -> Result<TrialStats> {
    if trials == 0 {
        bail!("bench needs at least one trial");
    }
    let (train, test) = cfg.dataset.build()?;
    let eval = test.as_ref().unwrap_or(&train);
    let base_seed = cfg.train.seed;
    let train_cfg = cfg.train_config();

    let worker_count = if workers == 0 {
        std::thread::available_parallelism().map_or(1, |n| n.get()).min(trials)
    } else {
        workers.min(trials)
    };

    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<TrialOutcome>>>> =
        Mutex::new((0..trials).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..worker_count {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= trials {
                    break;
                }
                let seed = base_seed + i as u64;
                let mut cfg_i = train_cfg.clone();
                cfg_i.seed = seed;
                let outcome = train_once(&cfg.model, &train, &cfg_i).and_then(|(net, _)| {
                    let accuracy = net.accuracy(eval)?;
                    Ok(TrialOutcome { seed, accuracy })
                });
                results.lock().unwrap()[i] = Some(outcome);
            });
        }
    });

    let mut outcomes = Vec::with_capacity(trials);
    for (i, slot) in results.into_inner().unwrap().into_iter().enumerate() {
        let outcome = slot.expect("every trial index was claimed");
        outcomes.push(outcome.with_context(|| {
            format!("trial {i} (seed {}) failed", base_seed + i as u64)
        })?);
    }
    Ok(stats_from(outcomes))
}

impl TrialStats {
    /// One benchmark-table row: `μ±σ` and best/worst, in percent.
    pub fn summary_row(&self) -> String {
        format!(
            "{:.2} ± {:.2}  best/worst {:.2}/{:.2}  ({} trials)",
            100.0 * self.mean,
            100.0 * self.std,
            100.0 * self.best,
            100.0 * self.worst,
            self.trials.len()
        )
    }

    /// CSV with one row per trial plus an exact summary comment; the
    /// summary values reproduce from the emitted per-trial list.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = BufWriter::new(File::create(path.as_ref())?);
        writeln!(out, "# qnn-bench v1 trials={}", self.trials.len())?;
        writeln!(out, "trial,seed,accuracy")?;
        for (i, t) in self.trials.iter().enumerate() {
            writeln!(out, "{i},{},{}", t.seed, t.accuracy)?;
        }
        writeln!(
            out,
            "# summary mean={} std={} best={} worst={}",
            self.mean, self.std, self.best, self.worst
        )?;
        Ok(())
    }
}

pub fn write_loss_log(report: &TrainReport<f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "epoch,mean_loss")?;
    for (epoch, loss) in report.epoch_loss.iter().enumerate() {
        writeln!(out, "{},{}", epoch + 1, loss)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub steps: usize,
}

#[derive(Clone, Debug)]
pub struct BoundaryRow {
    pub x: f64,
    pub y: f64,
    pub class: usize,
    /// Final-layer pre-activations; sign changes trace each neuron's
    /// quadric boundary.
    pub z: Vec<f64>,
}

/// Evaluate a 2-input model over a `steps × steps` lattice.
pub fn boundary_grid(net: &Network64, spec: &GridSpec) -> Result<Vec<BoundaryRow>> {
    if net.input_dim() != 2 {
        bail!("boundary export needs a 2-input model, this one has {} inputs", net.input_dim());
    }
    if spec.steps < 2 {
        bail!("boundary export needs at least 2 steps per axis");
    }
    if !(spec.xmin < spec.xmax) || !(spec.ymin < spec.ymax) {
        bail!("boundary export needs xmin < xmax and ymin < ymax");
    }
    let n = spec.steps;
    let mut rows = Vec::with_capacity(n * n);
    for iy in 0..n {
        let y = spec.ymin + (spec.ymax - spec.ymin) * iy as f64 / (n - 1) as f64;
        for ix in 0..n {
            let x = spec.xmin + (spec.xmax - spec.xmin) * ix as f64 / (n - 1) as f64;
            let input = Vector64::from_slice(&[x, y]);
            let (y_hat, caches) = net.forward(&input)?;
            let class = y_hat.argmax().expect("non-empty output");
            let z = caches.last().expect("at least one layer").z.as_slice().to_vec();
            rows.push(BoundaryRow { x, y, class, z });
        }
    }
    Ok(rows)
}

pub fn write_boundary_csv(
    rows: &[BoundaryRow],
    spec: &GridSpec,
    path: impl AsRef<Path>,
) -> Result<()> {
    let classes = rows.first().map_or(0, |r| r.z.len());
    let mut out = BufWriter::new(File::create(path.as_ref())?);
    writeln!(out, "# qnn-boundary v1 steps={} classes={classes}", spec.steps)?;
    let z_heads: Vec<String> = (0..classes).map(|k| format!("z{k}")).collect();
    writeln!(out, "x,y,class,{}", z_heads.join(","))?;
    for row in rows {
        let zs: Vec<String> = row.z.iter().map(|z| z.to_string()).collect();
        writeln!(out, "{},{},{},{}", row.x, row.y, row.class, zs.join(","))?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug)]
pub struct GradCheckSettings {
    pub seeds: usize,
    pub seed_base: u64,
    pub h: f64,
    pub rtol: f64,
    pub atol: f64,
    pub inject_fault: bool,
}

impl Default for GradCheckSettings {
    fn default() -> Self {
        GradCheckSettings {
            seeds: 100,
            seed_base: 0,
            h: 1e-5,
            rtol: 1e-6,
            atol: 1e-10,
            inject_fault: false,
        }
    }
}

/// Run the standard composition suite (or a custom stack) through the
/// finite-difference checker, printing one aligned row per composition.
/// Returns whether everything passed.
pub fn run_gradcheck(
    custom: Option<(&'static str, Network64)>,
    settings: &GradCheckSettings,
    out: &mut impl Write,
) -> Result<bool> {
    let nets: Vec<(&'static str, Network64)> = match custom {
        Some(entry) => vec![entry],
        None => standard_compositions(),
    };
    writeln!(
        out,
        "{:<22} {:>7} {:>6} {:>12} {:>12}  {:<18} status",
        "composition", "params", "seeds", "max_rel_err", "max_abs_err", "worst"
    )?;
    let mut all_pass = true;
    for (name, net) in nets {
        let mut max_rel = 0.0f64;
        let mut max_abs = 0.0f64;
        let mut worst = String::new();
        let mut pass = true;
        for s in 0..settings.seeds {
            let mut net = net.clone();
            let (x, y) = random_check_point(&mut net, settings.seed_base + s as u64);
            let report: GradCheckReport<f64> = if settings.inject_fault {
                let (y_hat, caches) = net.forward(&x)?;
                let delta = net.output_delta(&y_hat, &y)?;
                let grads = net.backward(&caches, delta)?;
                let mut analytic = net.flatten_gradients(&grads)?;
                flip_largest_weight(&net, &mut analytic);
                check_network_against(&net, &x, &y, &analytic, settings.h, settings.rtol, settings.atol)?
            } else {
                check_network(&net, &x, &y, settings.h, settings.rtol, settings.atol)?
            };
            if report.max_rel_err > max_rel {
                max_rel = report.max_rel_err;
                worst = report.worst.map(|w| w.to_string()).unwrap_or_default();
            }
            max_abs = max_abs.max(report.max_abs_err);
            pass &= report.pass;
        }
        all_pass &= pass;
        writeln!(
            out,
            "{:<22} {:>7} {:>6} {:>12.3e} {:>12.3e}  {:<18} {}",
            name,
            net.param_count(),
            settings.seeds,
            max_rel,
            max_abs,
            worst,
            if pass { "pass" } else { "FAIL" }
        )?;
    }
    Ok(all_pass)
}

/// Corrupt the analytic gradients by flipping the sign of the largest
/// W-group coordinate, guaranteeing a detectable mismatch.
fn flip_largest_weight(net: &Network64, analytic: &mut [f64]) {
    let mut target = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..net.param_count() {
        if net.param_path(i).group == ParamGroup::W && analytic[i].abs() > best {
            best = analytic[i].abs();
            target = i;
        }
    }
    analytic[target] = -analytic[target];
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trial_stats_collapse() {
        let stats = stats_from(vec![TrialOutcome { seed: 3, accuracy: 0.91 }]);
        assert_eq!(stats.std, 0.0);
        assert_eq!(stats.mean, 0.91);
        assert_eq!(stats.best, stats.worst);
        assert_eq!(stats.best, stats.mean);
    }

    #[test]
    fn stats_ordering_invariant() {
        let stats = stats_from(vec![
            TrialOutcome { seed: 0, accuracy: 0.8 },
            TrialOutcome { seed: 1, accuracy: 0.9 },
            TrialOutcome { seed: 2, accuracy: 0.7 },
        ]);
        assert!(stats.worst <= stats.mean && stats.mean <= stats.best);
        assert!(stats.std >= 0.0);
        assert_eq!(stats.best, 0.9);
        assert_eq!(stats.worst, 0.7);
    }
}
