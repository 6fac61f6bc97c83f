//! Experiment orchestration: build a federation from a config, run it, and
//! write results as CSV.
//!
//! Three entry points sit on top of the round machinery:
//!
//! * [`run_experiment`]: one federation, one strategy, a per-round trace.
//! * [`run_sweep`]: the fixed-batch ladder 4 through 256 plus the configured
//!   search strategy, all on the identical task and seed, summarized into a
//!   speedup table.
//! * [`run_monte_carlo`]: search-only ensembles across many derived seeds,
//!   one distribution summary per searcher count.
//!
//! All times are simulated seconds from the client timing model, never host
//! wall-clock, so results are identical on any machine. Every emitted byte
//! is a pure function of (config, seed).

use crate::bounds::BatchBounds;
use crate::client::ClientProfile;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::rng::{derive_run_seed, stream, StreamId};
use crate::search::{client_round, roles_for_round, summarize_round, Role, RoundReport, Strategy};
use crate::trainer::{
    dirichlet_partition, evaluate, fedavg, local_train, Dataset, ModelParams, PartitionSpec,
};
use rand::Rng;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::path::Path;

/// Whether a run trains a model or only simulates the batch-size search.
/// Search-only runs skip feature generation and training entirely, which
/// makes ensembles of tens of thousands of runs cheap; the bounds trajectory
/// is identical either way because search and training draw from disjoint
/// random streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainingMode {
    Full,
    SearchOnly,
}

/// One row of the per-round trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub round: usize,
    /// Cumulative simulated seconds up to and including this round.
    pub sim_time_s: f64,
    pub lo: usize,
    pub hi: usize,
    pub oom_events: usize,
    pub updates: usize,
    /// Test loss after this round's aggregation; NaN in search-only runs.
    pub loss: f64,
    /// Test accuracy after this round's aggregation; NaN in search-only runs.
    pub accuracy: f64,
}

/// A finished run: the trace plus its headline numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTrace {
    pub strategy: Strategy,
    pub rows: Vec<TraceRow>,
    /// First round whose merged bounds were converged; 0 means the window
    /// was already closed before any round ran. None: budget exhausted open.
    pub converged_round: Option<usize>,
    /// The settled shared batch size, once the window closed.
    pub converged_batch: Option<usize>,
    pub total_time: f64,
    pub final_loss: f64,
    pub final_accuracy: f64,
    /// Identifies the task (data + evaluation set); sweeps refuse to compare
    /// traces whose fingerprints differ.
    pub task_fingerprint: u64,
}

/// Exact header of the per-round trace CSV.
pub const TRACE_CSV_HEADER: &str = "round,sim_time_s,lo,hi,oom_events,updates,loss,accuracy";

/// Exact header of the sweep summary CSV.
pub const SWEEP_CSV_HEADER: &str = "strategy,total_time_s,speedup,final_accuracy,rounds_to_convergence";

/// Exact header of the Monte Carlo summary CSV.
pub const MONTE_CARLO_CSV_HEADER: &str =
    "k,seeds,rounds_mean,rounds_std,rounds_median,rounds_p95,batch_mean,batch_median,batch_p95";

fn task_fingerprint(cfg: &RunConfig) -> u64 {
    let mut h = DefaultHasher::new();
    cfg.seed.hash(&mut h);
    cfg.m.hash(&mut h);
    cfg.alpha.to_bits().hash(&mut h);
    cfg.min_shard.hash(&mut h);
    cfg.n_samples.hash(&mut h);
    cfg.n_features.hash(&mut h);
    cfg.n_classes.hash(&mut h);
    cfg.margin.to_bits().hash(&mut h);
    cfg.n_test.hash(&mut h);
    cfg.features_csv.hash(&mut h);
    cfg.labels_csv.hash(&mut h);
    h.finish()
}

/// The data a full run trains and evaluates on.
struct TaskData {
    train: Dataset,
    eval: Dataset,
}

/// The simulated federation: hardware profiles and data shards.
struct Federation {
    profiles: Vec<ClientProfile>,
    shards: Vec<Vec<usize>>,
    bounds0: BatchBounds,
}

fn load_csv_task(cfg: &RunConfig) -> Result<(Dataset, Dataset)> {
    let features = cfg.features_csv.as_ref().expect("checked by caller");
    let labels = cfg.labels_csv.as_ref().expect("checked by caller");
    let full = Dataset::from_csv(features, labels)?;
    if full.n <= cfg.n_test {
        return Err(Error::Config(format!(
            "n_test ({}) must be smaller than the imported dataset ({} rows); \
             the last n_test rows are held out for evaluation",
            cfg.n_test, full.n
        )));
    }
    let split = full.n - cfg.n_test;
    let train = Dataset {
        features: full.features[..split * full.d].to_vec(),
        labels: full.labels[..split].to_vec(),
        n: split,
        d: full.d,
        k: full.k,
    };
    let eval = Dataset {
        features: full.features[split * full.d..].to_vec(),
        labels: full.labels[split..].to_vec(),
        n: cfg.n_test,
        d: full.d,
        k: full.k,
    };
    Ok((train, eval))
}

fn synthetic_task(cfg: &RunConfig) -> (Dataset, Dataset) {
    let (d, k) = (cfg.n_features, cfg.n_classes);
    let mut drng = stream(cfg.seed, StreamId::Dataset);
    let means = Dataset::draw_means(d, k, cfg.margin, &mut drng);
    let train = Dataset::synthetic(cfg.n_samples, d, k, cfg.margin, &means, &mut drng);
    let mut trng = stream(cfg.seed, StreamId::TestSet);
    let eval = Dataset::synthetic(cfg.n_test, d, k, cfg.margin, &means, &mut trng);
    (train, eval)
}

/// Builds profiles and shards. In search-only mode with the synthetic task,
/// only the structural labels are materialized; features are never drawn.
fn build_federation(cfg: &RunConfig, mode: TrainingMode) -> Result<(Federation, Option<TaskData>)> {
    let (task, train_labels): (Option<TaskData>, Vec<usize>) =
        if cfg.features_csv.is_some() {
            let (train, eval) = load_csv_task(cfg)?;
            let labels = train.labels.clone();
            match mode {
                TrainingMode::Full => (Some(TaskData { train, eval }), labels),
                TrainingMode::SearchOnly => (None, labels),
            }
        } else {
            match mode {
                TrainingMode::Full => {
                    let (train, eval) = synthetic_task(cfg);
                    let labels = train.labels.clone();
                    (Some(TaskData { train, eval }), labels)
                }
                TrainingMode::SearchOnly => {
                    (None, Dataset::synthetic_labels(cfg.n_samples, cfg.n_classes))
                }
            }
        };

    let k = train_labels.iter().max().copied().unwrap_or(0) + 1;
    let spec = PartitionSpec { alpha: cfg.alpha, m: cfg.m, min_shard: cfg.min_shard };
    let mut prng = stream(cfg.seed, StreamId::Partition);
    let shards = dirichlet_partition(&train_labels, k, &spec, &mut prng)?;

    let mut hrng = stream(cfg.seed, StreamId::Profiles);
    let mut profiles = Vec::with_capacity(cfg.m);
    for (id, shard) in shards.iter().enumerate() {
        let capacity = cfg.mem_tiers[hrng.random_range(0..cfg.mem_tiers.len())];
        profiles.push(ClientProfile::new(
            id,
            shard.len(),
            capacity,
            cfg.mem_fixed,
            cfg.mem_per_sample,
            cfg.t_load,
            cfg.t_fixed,
            cfg.t_per_sample,
        )?);
    }

    let bounds0 = match cfg.strategy {
        Strategy::Fixed(b) => BatchBounds::pinned(b)?,
        _ => {
            let min_shard_size = profiles.iter().map(|p| p.n_samples).min().unwrap();
            BatchBounds::init(cfg.b_min, cfg.b_max, min_shard_size).map_err(|e| {
                Error::Config(format!("b_min/b_max: {e}"))
            })?
        }
    };

    Ok((Federation { profiles, shards, bounds0 }, task))
}

/// Runs one federation to its round budget and returns the trace.
pub fn run_experiment(cfg: &RunConfig, mode: TrainingMode) -> Result<ExperimentTrace> {
    cfg.validate()?;
    let (fed, task) = build_federation(cfg, mode)?;
    let mut bounds = fed.bounds0;
    let mut converged_round = if bounds.converged() { Some(0) } else { None };
    let mut model = task
        .as_ref()
        .map(|t| ModelParams::zeros(t.train.d, t.train.k));
    let mut clock = 0.0;
    let mut rows = Vec::with_capacity(cfg.rounds);

    for round in 1..=cfg.rounds {
        let roles = if bounds.converged() {
            vec![Role::Shielded; cfg.m]
        } else {
            let mut rrng = stream(cfg.seed, StreamId::Roles { round });
            roles_for_round(cfg.strategy, cfg.m, cfg.f, &mut rrng)
        };

        let reports: Vec<RoundReport> = (0..cfg.m)
            .map(|id| {
                let mut crng = stream(
                    cfg.seed,
                    StreamId::Probe { client: id, round },
                );
                client_round(id, &fed.profiles[id], bounds, roles[id], cfg.local_epochs, &mut crng)
            })
            .collect();

        if let (Some(task), Some(global)) = (task.as_ref(), model.as_mut()) {
            let mut updates: Vec<(ModelParams, usize)> = Vec::new();
            for report in &reports {
                if let Some(batch) = report.train_batch {
                    let shard = &fed.shards[report.client_id];
                    let mut srng = stream(
                        cfg.seed,
                        StreamId::Shuffle {
                            client: report.client_id,
                            round,
                        },
                    );
                    let trained = local_train(
                        global,
                        &task.train,
                        shard,
                        batch,
                        cfg.lr,
                        cfg.local_epochs,
                        &mut srng,
                    )?;
                    updates.push((trained, shard.len()));
                }
            }
            if !updates.is_empty() {
                let refs: Vec<(&ModelParams, usize)> =
                    updates.iter().map(|(p, n)| (p, *n)).collect();
                *global = fedavg(&refs)?;
            }
        }

        let summary = summarize_round(&reports)?;
        bounds = summary.bounds;
        if converged_round.is_none() && bounds.converged() {
            converged_round = Some(round);
        }
        clock += summary.time;

        let (loss, accuracy) = match (task.as_ref(), model.as_ref()) {
            (Some(task), Some(global)) => evaluate(global, &task.eval)?,
            _ => (f64::NAN, f64::NAN),
        };
        rows.push(TraceRow {
            round,
            sim_time_s: clock,
            lo: bounds.lo(),
            hi: bounds.hi(),
            oom_events: summary.oom_events,
            updates: summary.updates,
            loss,
            accuracy,
        });
    }

    let last = rows.last().expect("rounds >= 1 is validated");
    Ok(ExperimentTrace {
        strategy: cfg.strategy,
        converged_batch: bounds.converged().then(|| bounds.lo()),
        converged_round,
        total_time: clock,
        final_loss: last.loss,
        final_accuracy: last.accuracy,
        task_fingerprint: task_fingerprint(cfg),
        rows,
    })
}

/// Renders a trace as CSV, header included. Floats use six decimal places;
/// search-only runs carry NaN in the loss and accuracy columns.
pub fn trace_csv(trace: &ExperimentTrace) -> String {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for r in &trace.rows {
        out.push_str(&format!(
            "{},{:.6},{},{},{},{},{:.6},{:.6}\n",
            r.round, r.sim_time_s, r.lo, r.hi, r.oom_events, r.updates, r.loss, r.accuracy
        ));
    }
    out
}

/// One line of the sweep summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub strategy: Strategy,
    pub total_time_s: f64,
    pub speedup: f64,
    pub final_accuracy: f64,
    /// Populated for search strategies only; fixed baselines have nothing to
    /// converge.
    pub rounds_to_convergence: Option<usize>,
}

/// Runs the fixed-batch ladder plus the configured search strategy, all on
/// the same task, seed, and hardware draw.
pub fn run_sweep(cfg: &RunConfig, mode: TrainingMode) -> Result<Vec<ExperimentTrace>> {
    let mut strategies: Vec<Strategy> =
        [4, 8, 16, 32, 64, 128, 256].iter().map(|&b| Strategy::Fixed(b)).collect();
    if cfg.strategy.searches() {
        strategies.push(cfg.strategy);
    }
    let mut traces = Vec::with_capacity(strategies.len());
    for strategy in strategies {
        let mut sub = cfg.clone();
        sub.strategy = strategy;
        traces.push(run_experiment(&sub, mode)?);
    }
    Ok(traces)
}

/// Reduces sweep traces to the summary table. Speedup is measured against
/// the slowest fixed-batch baseline (with no fixed baseline in the input,
/// against the slowest trace overall, so a lone trace reports 1).
pub fn summarize_sweep(traces: &[ExperimentTrace]) -> Result<Vec<SweepRow>> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Invalid("sweep over no traces".into()))?;
    if let Some(t) = traces.iter().find(|t| t.task_fingerprint != first.task_fingerprint) {
        return Err(Error::Invalid(format!(
            "sweep traces mix different tasks ({} vs {})",
            t.strategy, first.strategy
        )));
    }
    let fixed_slowest = traces
        .iter()
        .filter(|t| !t.strategy.searches())
        .map(|t| t.total_time)
        .fold(f64::NAN, f64::max);
    let baseline = if fixed_slowest.is_nan() {
        traces.iter().map(|t| t.total_time).fold(0.0, f64::max)
    } else {
        fixed_slowest
    };
    Ok(traces
        .iter()
        .map(|t| SweepRow {
            strategy: t.strategy,
            total_time_s: t.total_time,
            speedup: baseline / t.total_time,
            final_accuracy: t.final_accuracy,
            rounds_to_convergence: if t.strategy.searches() { t.converged_round } else { None },
        })
        .collect())
}

/// Renders the sweep table as CSV. The rounds column is empty for rows that
/// never searched.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let rounds = r
            .rounds_to_convergence
            .map(|n| n.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{}\n",
            r.strategy, r.total_time_s, r.speedup, r.final_accuracy, rounds
        ));
    }
    out
}

/// Distribution summary of search behaviour at one searcher count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloRow {
    /// Searchers per round.
    pub k: usize,
    /// Ensemble size behind the statistics.
    pub seeds: usize,
    pub rounds_mean: f64,
    /// Sample standard deviation of rounds-to-convergence; lets a consumer
    /// attach a confidence interval to the mean.
    pub rounds_std: f64,
    pub rounds_median: f64,
    pub rounds_p95: f64,
    pub batch_mean: f64,
    pub batch_median: f64,
    pub batch_p95: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; zero for fewer than two observations.
fn sample_std(xs: &[f64], mu: f64) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let ss: f64 = xs.iter().map(|x| (x - mu) * (x - mu)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Median with the usual midpoint convention for even counts. Input must be
/// sorted.
fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// 95th percentile by the nearest-rank rule. Input must be sorted.
fn p95_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    let rank = ((0.95 * n as f64).ceil() as usize).clamp(1, n);
    xs[rank - 1]
}

/// Runs search-only ensembles: for each searcher count `k` in 1, 2, 5, 10
/// (capped at `m`), `n_seeds` federations with seeds derived from the
/// master, every run given enough rounds to close the window. Reports the
/// distribution of rounds-to-convergence and of the settled batch size.
pub fn run_monte_carlo(cfg: &RunConfig, n_seeds: usize) -> Result<Vec<MonteCarloRow>> {
    cfg.validate()?;
    if n_seeds == 0 {
        return Err(Error::Config("seeds: need at least one run".into()));
    }
    if !cfg.strategy.searches() {
        return Err(Error::Config(format!(
            "strategy: monte-carlo needs a search strategy, not {}",
            cfg.strategy
        )));
    }
    let ks: Vec<usize> = [1usize, 2, 5, 10].iter().copied().filter(|&k| k <= cfg.m).collect();
    let mut out = Vec::with_capacity(ks.len());
    for (ki, &k) in ks.iter().enumerate() {
        let mut rounds_obs = Vec::with_capacity(n_seeds);
        let mut batch_obs = Vec::with_capacity(n_seeds);
        for run in 0..n_seeds {
            let mut sub = cfg.clone();
            sub.seed = derive_run_seed(cfg.seed, ki as u64, run as u64);
            sub.f = (cfg.m - k) as f64 / cfg.m as f64;
            if k == 1 {
                // One searcher is exactly the single-prober baseline; the
                // fractional route can strand it if ceil(f*m) rounds badly.
                sub.strategy = Strategy::SingleProber;
            }
            // A window of width W closes after at most W informative rounds.
            sub.rounds = cfg.rounds.max(cfg.b_max.saturating_sub(cfg.b_min) + 1);
            let trace = run_experiment(&sub, TrainingMode::SearchOnly)?;
            let converged = trace.converged_round.ok_or_else(|| {
                Error::Invalid(format!(
                    "run with seed {} failed to converge within {} rounds",
                    sub.seed, sub.rounds
                ))
            })?;
            let batch = trace.converged_batch.expect("converged runs settle a batch");
            rounds_obs.push(converged as f64);
            batch_obs.push(batch as f64);
        }
        rounds_obs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        batch_obs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let rounds_mean = mean(&rounds_obs);
        out.push(MonteCarloRow {
            k,
            seeds: n_seeds,
            rounds_mean,
            rounds_std: sample_std(&rounds_obs, rounds_mean),
            rounds_median: median_sorted(&rounds_obs),
            rounds_p95: p95_sorted(&rounds_obs),
            batch_mean: mean(&batch_obs),
            batch_median: median_sorted(&batch_obs),
            batch_p95: p95_sorted(&batch_obs),
        });
    }
    Ok(out)
}

/// Renders the Monte Carlo summary as CSV.
pub fn monte_carlo_csv(rows: &[MonteCarloRow]) -> String {
    let mut out = String::from(MONTE_CARLO_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            r.k, r.seeds, r.rounds_mean, r.rounds_std, r.rounds_median, r.rounds_p95,
            r.batch_mean, r.batch_median, r.batch_p95
        ));
    }
    out
}

/// Writes a file atomically: the content lands in a temporary sibling first
/// and is renamed over the target, so a crash never leaves a half-written
/// result and rereads never observe a partial file.
pub fn write_atomic(path: &Path, content: &str) -> Result<()> {
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = parent {
        std::fs::create_dir_all(dir)?;
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Invalid(format!("cannot write to '{}'", path.display())))?;
    let mut tmp = path.to_path_buf();
    tmp.set_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}
