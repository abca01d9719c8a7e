//! Distributed counters over `k` simulated sites.
//!
//! [`ExactCounter`] forwards every increment to the coordinator.
//! [`SampledCounter`] is a round-based randomized counter: during round `j`
//! every increment at a site is reported with probability
//! `p_j = min(1, √k / (ε′·2^j))`, the report carrying the site's count since
//! the round began. The coordinator estimates each site's contribution as
//! `last_report + (1 − p_j)/p_j` (zero if the site has not reported this round),
//! which is exactly unbiased, and the per-site variance is at most
//! `(1 − p_j)/p_j²`, so the total variance stays below `(ε′·2^j)² ≤ (ε′·C)²`.
//!
//! Round boundaries are driven by a deterministic progress signal: each site
//! sends a control message whenever its in-round count reaches a multiple of
//! a quantum `max(1, ⌊2^j / 2k⌋)`. The coordinator closes round `j` once the
//! signalled lower bound on the total reaches `2^{j+1}`, broadcasts the new
//! round and collects exact site counts. Because these boundaries depend only
//! on the increment schedule and never on the reporting coins, the estimator
//! stays unbiased at every point of the stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Message counts attributed to one or more counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageLedger {
    /// Site → coordinator counter updates.
    pub update_messages: u64,
    /// Round broadcasts, sync replies and progress signals.
    pub control_messages: u64,
}

impl MessageLedger {
    pub fn total(&self) -> u64 {
        self.update_messages + self.control_messages
    }
}

impl std::ops::AddAssign for MessageLedger {
    fn add_assign(&mut self, rhs: Self) {
        self.update_messages += rhs.update_messages;
        self.control_messages += rhs.control_messages;
    }
}

impl std::iter::Sum for MessageLedger {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(MessageLedger::default(), |mut acc, l| {
            acc += l;
            acc
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterConfig {
    pub epsilon_prime: f64,
    pub sites: usize,
    pub seed: u64,
}

impl CounterConfig {
    pub fn new(epsilon_prime: f64, sites: usize, seed: u64) -> Result<Self> {
        if !(epsilon_prime > 0.0 && epsilon_prime <= 1.0) {
            return Err(Error::Argument(format!(
                "counter accuracy factor must lie in (0, 1], got {epsilon_prime}"
            )));
        }
        if sites == 0 {
            return Err(Error::Argument("site count must be at least 1".into()));
        }
        if sites as f64 > 1.0 / (epsilon_prime * epsilon_prime) {
            log::warn!(
                "k = {sites} exceeds 1/ε′² = {:.1}; the counter's variance guarantee is loose",
                1.0 / (epsilon_prime * epsilon_prime)
            );
        }
        Ok(CounterConfig {
            epsilon_prime,
            sites,
            seed,
        })
    }
}

/// SplitMix64 finalizer; used to derive independent counter seeds.
pub fn mix_seed(seed: u64, id: u64) -> u64 {
    let mut z = seed ^ id.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExactCounter {
    sites: usize,
    total: u64,
    ledger: MessageLedger,
}

impl ExactCounter {
    pub fn new(sites: usize) -> Self {
        ExactCounter {
            sites,
            ..Default::default()
        }
    }

    pub fn increment(&mut self, site: usize) {
        debug_assert!(site < self.sites);
        self.total += 1;
        self.ledger.update_messages += 1;
    }

    pub fn estimate(&self) -> f64 {
        self.total as f64
    }

    pub fn true_total(&self) -> u64 {
        self.total
    }

    pub fn ledger(&self) -> MessageLedger {
        self.ledger
    }
}

#[derive(Debug, Clone)]
pub struct SampledCounter {
    epsilon_prime: f64,
    sites: usize,
    rng: ChaCha8Rng,
    /// Cumulative count per site.
    counts: Vec<u64>,
    /// Per-site count at the start of the current round.
    snapshot: Vec<u64>,
    /// Last in-round count reported by each site; 0 when none this round.
    reported: Vec<u64>,
    /// Last in-round count announced through a progress signal.
    signalled: Vec<u64>,
    round: u32,
    prob: f64,
    /// Exact total at the start of the current round.
    baseline: u64,
    /// Sum of `signalled` plus `baseline`.
    known: u64,
    quantum: u64,
    /// Fixed-probability mode never changes rounds.
    fixed: bool,
    total: u64,
    ledger: MessageLedger,
}

impl SampledCounter {
    pub fn new(config: CounterConfig) -> Self {
        let k = config.sites;
        let mut counter = SampledCounter {
            epsilon_prime: config.epsilon_prime,
            sites: k,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            counts: vec![0; k],
            snapshot: vec![0; k],
            reported: vec![0; k],
            signalled: vec![0; k],
            round: 0,
            prob: 1.0,
            baseline: 0,
            known: 0,
            quantum: 1,
            fixed: false,
            total: 0,
            ledger: MessageLedger::default(),
        };
        counter.prob = counter.round_probability(0);
        counter
    }

    /// A single-round counter with a constant reporting probability.
    pub fn with_fixed_probability(sites: usize, prob: f64, seed: u64) -> Result<Self> {
        if !(prob > 0.0 && prob <= 1.0) {
            return Err(Error::Argument(format!("probability must lie in (0, 1], got {prob}")));
        }
        let mut counter = SampledCounter::new(CounterConfig::new(1.0, sites, seed)?);
        counter.fixed = true;
        counter.prob = prob;
        Ok(counter)
    }

    pub fn epsilon_prime(&self) -> f64 {
        self.epsilon_prime
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn round(&self) -> u32 {
        self.round
    }

    /// Reporting probability of the current round.
    pub fn probability(&self) -> f64 {
        self.prob
    }

    pub fn true_total(&self) -> u64 {
        self.total
    }

    pub fn ledger(&self) -> MessageLedger {
        self.ledger
    }

    pub fn site_count(&self, site: usize) -> u64 {
        self.counts[site]
    }

    fn round_probability(&self, round: u32) -> f64 {
        let p = (self.sites as f64).sqrt() / (self.epsilon_prime * 2f64.powi(round as i32));
        p.min(1.0)
    }

    pub fn increment(&mut self, site: usize) {
        if self.prob >= 1.0 {
            self.increment_with(site, |_| true);
        } else {
            let p = self.prob;
            let report = self.rng.random_bool(p);
            self.increment_with(site, |_| report);
        }
    }

    /// Increments with an externally decided reporting coin. `coin` receives
    /// the current reporting probability and is only consulted when it is below 1.
    pub fn increment_with(&mut self, site: usize, coin: impl FnOnce(f64) -> bool) {
        assert!(site < self.sites, "site {site} out of range");
        self.counts[site] += 1;
        self.total += 1;
        let local = self.counts[site] - self.snapshot[site];

        if self.prob >= 1.0 || coin(self.prob) {
            self.reported[site] = local;
            self.ledger.update_messages += 1;
        }
        if self.fixed {
            return;
        }

        if self.prob >= 1.0 {
            // Every increment is reported, so the coordinator knows the exact total.
            self.known += 1;
        } else if local.is_multiple_of(self.quantum) {
            self.known += local - self.signalled[site];
            self.signalled[site] = local;
            self.ledger.control_messages += 1;
        }
        if self.known >= 1u64 << (self.round + 1) {
            self.next_round();
        }
    }

    fn next_round(&mut self) {
        let was_sampling = self.prob < 1.0;
        self.baseline = self.total;
        self.known = self.total;
        self.round = 63 - self.total.leading_zeros();
        self.prob = self.round_probability(self.round);
        self.quantum = ((1u64 << self.round) / (2 * self.sites as u64)).max(1);

        let k = self.sites as u64;
        if was_sampling {
            // Broadcast the new round, then every site replies with its exact count.
            self.ledger.control_messages += 2 * k;
        } else if self.prob < 1.0 {
            // Leaving exact mode: the coordinator already knows every count.
            self.ledger.control_messages += k;
        }
        self.snapshot.copy_from_slice(&self.counts);
        self.reported.fill(0);
        self.signalled.fill(0);
    }

    /// Coordinator-side unbiased estimate of the total.
    pub fn estimate(&self) -> f64 {
        let slack = (1.0 - self.prob) / self.prob;
        self.baseline as f64
            + self
                .reported
                .iter()
                .filter(|&&v| v > 0)
                .map(|&v| v as f64 + slack)
                .sum::<f64>()
    }
}

/// Either kind of counter.
// Most counters in a tracker are sampled, so boxing would only add indirection.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum Counter {
    Exact(ExactCounter),
    Sampled(SampledCounter),
}

impl Counter {
    /// A sampled counter for a positive factor, an exact counter otherwise.
    pub fn for_factor(epsilon_prime: f64, sites: usize, seed: u64) -> Result<Self> {
        if epsilon_prime > 0.0 {
            Ok(Counter::Sampled(SampledCounter::new(CounterConfig::new(
                epsilon_prime,
                sites,
                seed,
            )?)))
        } else {
            Ok(Counter::Exact(ExactCounter::new(sites)))
        }
    }

    #[inline]
    pub fn increment(&mut self, site: usize) {
        match self {
            Counter::Exact(c) => c.increment(site),
            Counter::Sampled(c) => c.increment(site),
        }
    }

    pub fn estimate(&self) -> f64 {
        match self {
            Counter::Exact(c) => c.estimate(),
            Counter::Sampled(c) => c.estimate(),
        }
    }

    pub fn true_total(&self) -> u64 {
        match self {
            Counter::Exact(c) => c.true_total(),
            Counter::Sampled(c) => c.true_total(),
        }
    }

    pub fn ledger(&self) -> MessageLedger {
        match self {
            Counter::Exact(c) => c.ledger(),
            Counter::Sampled(c) => c.ledger(),
        }
    }
}

/// Product of counter estimates next to the product of their true totals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductEstimate {
    pub estimate: f64,
    pub exact: f64,
}

impl ProductEstimate {
    pub fn ratio(&self) -> f64 {
        self.estimate / self.exact
    }
}

pub fn product_probe<'a>(counters: impl IntoIterator<Item = &'a SampledCounter>) -> ProductEstimate {
    counters.into_iter().fold(
        ProductEstimate {
            estimate: 1.0,
            exact: 1.0,
        },
        |acc, c| ProductEstimate {
            estimate: acc.estimate * c.estimate(),
            exact: acc.exact * c.true_total() as f64,
        },
    )
}
