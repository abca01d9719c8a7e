//! Experiment runner: streams one training set per seed through a tracker
//! for every requested algorithm, next to an exact tracker that supplies the
//! MLE, and records accuracy and message counts at each checkpoint.

use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bnmon_core::budget::check_naive_bayes;
use bnmon_core::counter::mix_seed;
use bnmon_core::inference::{classify, EvidenceSet, TargetSet};
use bnmon_core::{Algorithm, BayesNet, Event, JointModel, Tracker, TrackerConfig};

use crate::error::{HarnessError, Result};
use crate::stream::{generate_stream, generate_test_queries};

const STREAM_DOMAIN: u64 = 0x7374_7265_616d;
const TRACKER_DOMAIN: u64 = 0x7472_6163_6b72;
const QUERY_DOMAIN: u64 = 0x7175_6572_7973;
const TRIAL_DOMAIN: u64 = 0x7472_6961_6c73;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub network: PathBuf,
    pub algorithms: Vec<Algorithm>,
    pub epsilon: f64,
    pub delta: f64,
    pub sites: usize,
    pub events: usize,
    /// Stream positions at which metrics are recorded, ascending.
    pub checkpoints: Vec<usize>,
    pub test_queries: usize,
    pub min_true_prob: f64,
    /// Prediction trials per checkpoint; 0 disables classification.
    pub classify_trials: usize,
    /// Run counters at ε/4 so that classification at ε is guaranteed.
    pub classification_mode: bool,
    /// Number of independent runs; run `i` uses seed `seed + i`.
    pub seeds: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            network: PathBuf::new(),
            algorithms: Algorithm::ALL.to_vec(),
            epsilon: 0.1,
            delta: 0.25,
            sites: 30,
            events: 500_000,
            checkpoints: vec![10_000, 100_000, 500_000],
            test_queries: 1_000,
            min_true_prob: 0.01,
            classify_trials: 1_000,
            classification_mode: false,
            seeds: 5,
            seed: 42,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".into());
        }
        for (i, a) in self.algorithms.iter().enumerate() {
            if self.algorithms[..i].contains(a) {
                return bad(format!("algorithm `{a}` listed twice"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.sites == 0 {
            return bad("at least one site is required".into());
        }
        if self.checkpoints.is_empty() {
            return bad("at least one checkpoint is required".into());
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("checkpoints must be strictly ascending".into());
        }
        if *self.checkpoints.last().unwrap() > self.events {
            return bad(format!(
                "last checkpoint {} exceeds the stream length {}",
                self.checkpoints.last().unwrap(),
                self.events
            ));
        }
        if !(0.0..1.0).contains(&self.min_true_prob) {
            return bad(format!("min-prob must lie in [0, 1), got {}", self.min_true_prob));
        }
        if self.test_queries == 0 {
            return bad("at least one test query is required".into());
        }
        if self.seeds == 0 {
            return bad("at least one seed is required".into());
        }
        Ok(())
    }

    /// Accuracy factor handed to the trackers.
    pub fn tracker_epsilon(&self) -> f64 {
        if self.classification_mode {
            self.epsilon / 4.0
        } else {
            self.epsilon
        }
    }

    pub fn run_seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.seeds as u64).map(|i| self.seed.wrapping_add(i))
    }
}

/// The `seed` column: a run's seed or the across-run median.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunLabel {
    Seed(u64),
    Median,
}

impl fmt::Display for RunLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunLabel::Seed(s) => write!(f, "{s}"),
            RunLabel::Median => f.write_str("median"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub seed: RunLabel,
    pub checkpoint: usize,
    /// Mean |P̃/P − 1| against the ground truth.
    pub mean_err_truth: f64,
    /// Mean |P̃/P̂ − 1| against the exact-count MLE.
    pub mean_err_mle: f64,
    /// Fraction of test events with e^{−ε} ≤ P̃/P̂ ≤ e^{ε}. On median rows
    /// the ratio of each event is first replaced by its median across runs.
    pub band_fraction: f64,
    pub update_messages: f64,
    pub control_messages: f64,
    pub classification_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunStatus {
    Complete,
    /// Some runs failed; rows of the successful runs are kept.
    Failed { exit_code: i32, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub network: String,
    pub rows: Vec<ReportRow>,
    pub status: RunStatus,
}

impl ExperimentReport {
    pub fn empty(network: impl Into<String>) -> Self {
        ExperimentReport {
            network: network.into(),
            rows: Vec::new(),
            status: RunStatus::Complete,
        }
    }

    pub fn rows_for(&self, algorithm: Algorithm, seed: RunLabel) -> impl Iterator<Item = &ReportRow> {
        self.rows
            .iter()
            .filter(move |r| r.algorithm == algorithm && r.seed == seed)
    }

    pub fn row(&self, algorithm: Algorithm, seed: RunLabel, checkpoint: usize) -> Option<&ReportRow> {
        self.rows_for(algorithm, seed).find(|r| r.checkpoint == checkpoint)
    }
}

/// Loads the configured network and runs the experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(&config.network).map_err(|e| HarnessError::io(&config.network, e))?;
    let net = BayesNet::from_json(&text)?;
    run_experiment_on(Arc::new(net), config)
}

/// Shared inputs of every run: the test events and their true probabilities.
struct Workload {
    queries: Vec<Event>,
    truth: Vec<f64>,
}

/// One checkpoint of one algorithm in one run.
struct Measurement {
    row: ReportRow,
    ratios: Vec<f64>,
}

pub fn run_experiment_on(net: Arc<BayesNet>, config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut config = config.clone();
    if config.algorithms.contains(&Algorithm::NaiveBayes) {
        if let Err(e) = check_naive_bayes(&net) {
            log::warn!("skipping the naive Bayes tracker: {e}");
            config.algorithms.retain(|&a| a != Algorithm::NaiveBayes);
            if config.algorithms.is_empty() {
                return Err(e.into());
            }
        }
    }

    let queries = generate_test_queries(
        &net,
        config.test_queries,
        config.min_true_prob,
        mix_seed(config.seed, QUERY_DOMAIN),
    )?;
    let truth = queries.iter().map(|q| net.joint_prob_true(q)).collect();
    let workload = Workload { queries, truth };

    let seeds: Vec<u64> = config.run_seeds().collect();
    let runs = map_runs(&seeds, |&seed| run_one(&net, &config, &workload, seed));

    let mut report = ExperimentReport::empty(net.name());
    let mut completed = Vec::new();
    for run in runs {
        match run {
            Ok(m) => completed.push(m),
            Err(e) if report.status == RunStatus::Complete => {
                report.status = RunStatus::Failed {
                    exit_code: e.exit_code(),
                    message: e.to_string(),
                };
            }
            Err(_) => {}
        }
    }

    // Per algorithm: every run's rows, then the median rows.
    for (a, &algorithm) in config.algorithms.iter().enumerate() {
        for run in &completed {
            report.rows.extend(run[a].iter().map(|m| m.row.clone()));
        }
        if report.status == RunStatus::Complete {
            for c in 0..config.checkpoints.len() {
                let cell: Vec<&Measurement> = completed.iter().map(|run| &run[a][c]).collect();
                report.rows.push(median_row(algorithm, &cell, config.epsilon));
            }
        }
    }
    Ok(report)
}

#[cfg(feature = "parallel")]
fn map_runs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_runs<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

/// Prediction trials: a ground-truth event and the node to hide.
fn classification_trials(net: &BayesNet, count: usize, seed: u64) -> Vec<(Event, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, TRIAL_DOMAIN));
    (0..count)
        .map(|_| {
            let e = net.forward_sample(&mut rng);
            let node = rng.random_range(0..net.len());
            (e, node)
        })
        .collect()
}

/// Runs every algorithm over one seed's stream. Result indexed
/// `[algorithm][checkpoint]`.
fn run_one(
    net: &Arc<BayesNet>,
    config: &ExperimentConfig,
    workload: &Workload,
    seed: u64,
) -> Result<Vec<Vec<Measurement>>> {
    let tracker_seed = mix_seed(seed, TRACKER_DOMAIN);
    let eps = config.tracker_epsilon();
    let exact_config = TrackerConfig::new(Algorithm::Exact, eps, config.delta, config.sites, tracker_seed)?;
    let mut exact = Tracker::new(Arc::clone(net), exact_config)?;
    // `None` marks the exact algorithm, which reads the co-run exact tracker.
    let mut trackers: Vec<Option<Tracker>> = config
        .algorithms
        .iter()
        .map(|&a| {
            if a == Algorithm::Exact {
                return Ok(None);
            }
            let cfg = TrackerConfig::new(a, eps, config.delta, config.sites, tracker_seed)?;
            Ok(Some(Tracker::new(Arc::clone(net), cfg)?))
        })
        .collect::<Result<_>>()?;
    let trials = classification_trials(net, config.classify_trials, seed);

    let mut out: Vec<Vec<Measurement>> = config.algorithms.iter().map(|_| Vec::new()).collect();
    let mut next = 0;
    let stream = generate_stream(net, config.events, config.sites, mix_seed(seed, STREAM_DOMAIN));
    for (position, (event, site)) in stream.enumerate() {
        exact.update(&event, site);
        for t in trackers.iter_mut().flatten() {
            t.update(&event, site);
        }
        if next < config.checkpoints.len() && position + 1 == config.checkpoints[next] {
            let mle: Vec<f64> = workload.queries.iter().map(|q| exact.query(q)).collect();
            for (a, &algorithm) in config.algorithms.iter().enumerate() {
                let m = match &trackers[a] {
                    Some(t) => measure(algorithm, &t.snapshot(), t.ledger(), config, workload, &mle, &trials, seed),
                    None => measure(algorithm, &exact, exact.ledger(), config, workload, &mle, &trials, seed),
                };
                out[a].push(Measurement {
                    row: ReportRow {
                        checkpoint: config.checkpoints[next],
                        ..m.row
                    },
                    ratios: m.ratios,
                });
            }
            next += 1;
            if next == config.checkpoints.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// P̃/P̂, taking 0/0 as agreement.
fn ratio(estimate: f64, reference: f64) -> f64 {
    if reference == 0.0 && estimate == 0.0 {
        1.0
    } else {
        estimate / reference
    }
}

fn in_band(r: f64, eps: f64) -> bool {
    r >= (-eps).exp() && r <= eps.exp()
}

#[allow(clippy::too_many_arguments)]
fn measure<M: JointModel>(
    algorithm: Algorithm,
    model: &M,
    ledger: bnmon_core::MessageLedger,
    config: &ExperimentConfig,
    workload: &Workload,
    mle: &[f64],
    trials: &[(Event, usize)],
    seed: u64,
) -> Measurement {
    let estimates: Vec<f64> = workload.queries.iter().map(|q| model.joint(&q.0)).collect();
    let n = estimates.len() as f64;
    let ratios: Vec<f64> = estimates.iter().zip(mle).map(|(&e, &m)| ratio(e, m)).collect();
    let mean_err_truth = estimates
        .iter()
        .zip(&workload.truth)
        .map(|(e, t)| (e / t - 1.0).abs())
        .sum::<f64>()
        / n;
    let mean_err_mle = ratios.iter().map(|r| (r - 1.0).abs()).sum::<f64>() / n;
    let band_fraction = ratios.iter().filter(|&&r| in_band(r, config.epsilon)).count() as f64 / n;

    let classification_error = (!trials.is_empty()).then(|| {
        let wrong = trials
            .iter()
            .filter(|(event, node)| {
                let evidence: EvidenceSet = (0..event.0.len())
                    .filter(|i| i != node)
                    .map(|i| (i, event.0[i]))
                    .collect();
                let predicted = classify(model, &TargetSet(vec![*node]), &evidence)
                    .expect("single-node prediction stays within the enumeration cap");
                predicted[0] != event.0[*node]
            })
            .count();
        wrong as f64 / trials.len() as f64
    });

    Measurement {
        row: ReportRow {
            algorithm,
            seed: RunLabel::Seed(seed),
            checkpoint: 0,
            mean_err_truth,
            mean_err_mle,
            band_fraction,
            update_messages: ledger.update_messages as f64,
            control_messages: ledger.control_messages as f64,
            classification_error,
        },
        ratios,
    }
}

/// Median of a non-empty list; the mean of the middle pair for even lengths.
pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "median of an empty list");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

fn median_row(algorithm: Algorithm, cell: &[&Measurement], eps: f64) -> ReportRow {
    let pick = |f: fn(&ReportRow) -> f64| median(cell.iter().map(|m| f(&m.row)).collect());
    let events = cell[0].ratios.len();
    let inside = (0..events)
        .filter(|&q| in_band(median(cell.iter().map(|m| m.ratios[q]).collect()), eps))
        .count();
    ReportRow {
        algorithm,
        seed: RunLabel::Median,
        checkpoint: cell[0].row.checkpoint,
        mean_err_truth: pick(|r| r.mean_err_truth),
        mean_err_mle: pick(|r| r.mean_err_mle),
        band_fraction: inside as f64 / events as f64,
        update_messages: pick(|r| r.update_messages),
        control_messages: pick(|r| r.control_messages),
        classification_error: cell[0]
            .row
            .classification_error
            .map(|_| pick(|r| r.classification_error.unwrap_or(f64::NAN))),
    }
}
