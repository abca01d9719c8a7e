//! Training streams and test queries drawn from a network's ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bnmon_core::{BayesNet, Error, Event};

/// Rejected draws tolerated before test-query generation gives up.
pub const MAX_REJECTIONS: u64 = 10_000_000;

/// A lazily generated stream of `(event, site)` pairs: forward samples routed
/// to a uniformly chosen site. Deterministic given the seed.
#[derive(Debug, Clone)]
pub struct StreamSpec<'a> {
    net: &'a BayesNet,
    sites: usize,
    remaining: usize,
    rng: ChaCha8Rng,
}

impl Iterator for StreamSpec<'_> {
    type Item = (Event, usize);

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let event = self.net.forward_sample(&mut self.rng);
        let site = self.rng.random_range(0..self.sites);
        Some((event, site))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for StreamSpec<'_> {}

/// # Panics
/// If `sites` is zero.
pub fn generate_stream(net: &BayesNet, events: usize, sites: usize, seed: u64) -> StreamSpec<'_> {
    assert!(sites > 0, "a stream needs at least one site");
    StreamSpec {
        net,
        sites,
        remaining: events,
        rng: ChaCha8Rng::seed_from_u64(seed),
    }
}

/// Forward samples whose ground-truth probability is at least
/// `min_true_prob`, repeats allowed.
pub fn generate_test_queries(
    net: &BayesNet,
    count: usize,
    min_true_prob: f64,
    seed: u64,
) -> Result<Vec<Event>, Error> {
    generate_test_queries_capped(net, count, min_true_prob, seed, MAX_REJECTIONS)
}

pub fn generate_test_queries_capped(
    net: &BayesNet,
    count: usize,
    min_true_prob: f64,
    seed: u64,
    max_rejections: u64,
) -> Result<Vec<Event>, Error> {
    if count == 0 {
        return Err(Error::Argument("test query count must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&min_true_prob) {
        return Err(Error::Argument(format!(
            "minimum probability must lie in [0, 1), got {min_true_prob}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut rejected = 0u64;
    while out.len() < count {
        let event = net.forward_sample(&mut rng);
        if net.joint_prob_true(&event) >= min_true_prob {
            out.push(event);
        } else {
            rejected += 1;
            if rejected >= max_rejections {
                return Err(Error::Capacity(format!(
                    "only {} of {count} test events reached probability {min_true_prob} after {rejected} \
                     rejections; lower the minimum probability",
                    out.len()
                )));
            }
        }
    }
    Ok(out)
}
