//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a JSON string so the page needs no generated
//! TypeScript types; errors surface as JavaScript exceptions.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

use bnmon_core::counter::{CounterConfig, SampledCounter};
use bnmon_core::{allocate_budget, Algorithm, BayesNet, Event, JointModel, Tracker, TrackerConfig};

const ALARM: &str = include_str!("../../core/data/alarm.json");
const NEW_ALARM: &str = include_str!("../../core/data/new_alarm.json");

/// Largest stream the page may request; keeps the tab responsive.
pub const MAX_EVENTS: usize = 200_000;

fn fail(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(fail)
}

/// Source of a bundled network: `"alarm"` or `"new-alarm"`.
#[wasm_bindgen]
pub fn bundled_network(name: &str) -> Result<String, JsError> {
    match name {
        "alarm" => Ok(ALARM.to_string()),
        "new-alarm" => Ok(NEW_ALARM.to_string()),
        other => Err(fail(format!("no bundled network named {other:?}"))),
    }
}

#[derive(Debug, Serialize)]
pub struct NodeBudget {
    pub name: String,
    pub cardinality: usize,
    pub parent_configs: usize,
    pub nu: f64,
    pub mu: f64,
}

#[derive(Debug, Serialize)]
pub struct BudgetView {
    pub algorithm: String,
    pub objective: f64,
    pub nodes: Vec<NodeBudget>,
}

pub fn budget_view(net: &BayesNet, algorithm: Algorithm, epsilon: f64) -> bnmon_core::Result<BudgetView> {
    let alloc = allocate_budget(net, algorithm, epsilon)?;
    let nodes = net
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| NodeBudget {
            name: n.name().to_string(),
            cardinality: n.cardinality(),
            parent_configs: n.parent_configs(),
            nu: alloc.nu[i],
            mu: alloc.mu[i],
        })
        .collect();
    Ok(BudgetView {
        algorithm: algorithm.as_str().to_string(),
        objective: alloc.objective(net),
        nodes,
    })
}

/// Per-node accuracy factors of `algorithm` for the network in `network_json`.
#[wasm_bindgen]
pub fn allocate(network_json: &str, algorithm: &str, epsilon: f64) -> Result<String, JsError> {
    let net = BayesNet::from_json(network_json).map_err(fail)?;
    let algorithm: Algorithm = algorithm.parse().map_err(fail)?;
    to_json(&budget_view(&net, algorithm, epsilon).map_err(fail)?)
}

#[derive(Debug, Serialize, PartialEq)]
pub struct CounterPoint {
    pub count: u64,
    pub estimate: f64,
    pub messages: u64,
}

pub fn counter_trace(
    epsilon: f64,
    sites: usize,
    count: u64,
    points: usize,
    seed: u64,
) -> bnmon_core::Result<Vec<CounterPoint>> {
    let mut counter = SampledCounter::new(CounterConfig::new(epsilon, sites, seed)?);
    let mut routing = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let step = (count / points.max(1) as u64).max(1);
    let mut trace = Vec::with_capacity(points + 1);
    for i in 1..=count {
        counter.increment(routing.random_range(0..sites));
        if i % step == 0 || i == count {
            trace.push(CounterPoint {
                count: i,
                estimate: counter.estimate(),
                messages: counter.ledger().total(),
            });
        }
    }
    Ok(trace)
}

/// Estimate and message count of one sampled counter as it is incremented
/// `count` times from uniformly chosen sites.
#[wasm_bindgen]
pub fn simulate_counter(epsilon: f64, sites: usize, count: u32, seed: u32) -> Result<String, JsError> {
    to_json(&counter_trace(epsilon, sites, count as u64, 200, seed as u64).map_err(fail)?)
}

#[derive(Debug, Serialize)]
pub struct StreamSummary {
    pub algorithm: String,
    pub update_messages: u64,
    pub control_messages: u64,
    /// Fraction of probe events whose estimate is within e^{±ε} of the exact MLE.
    pub band_fraction: f64,
}

pub fn stream_summaries(
    net: Arc<BayesNet>,
    algorithms: &[Algorithm],
    epsilon: f64,
    sites: usize,
    events: usize,
    seed: u64,
) -> bnmon_core::Result<Vec<StreamSummary>> {
    if events > MAX_EVENTS {
        return Err(bnmon_core::Error::Argument(format!("at most {MAX_EVENTS} events in the browser")));
    }
    let tracker = |a| Tracker::new(net.clone(), TrackerConfig::new(a, epsilon, 0.25, sites, seed)?);
    let mut exact = tracker(Algorithm::Exact)?;
    let mut trackers = algorithms.iter().map(|&a| tracker(a)).collect::<bnmon_core::Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..events {
        let event = net.forward_sample(&mut rng);
        let site = rng.random_range(0..sites);
        exact.update(&event, site);
        for t in &mut trackers {
            t.update(&event, site);
        }
    }
    let probes: Vec<Event> = (0..200).map(|_| net.forward_sample(&mut rng)).collect();
    Ok(trackers
        .iter()
        .zip(algorithms)
        .map(|(t, a)| {
            let inside = probes
                .iter()
                .filter(|e| {
                    let (est, mle) = (t.joint(&e.0), exact.joint(&e.0));
                    if mle == 0.0 {
                        est == 0.0
                    } else {
                        (est / mle).ln().abs() <= epsilon
                    }
                })
                .count();
            let ledger = t.ledger();
            StreamSummary {
                algorithm: a.as_str().to_string(),
                update_messages: ledger.update_messages,
                control_messages: ledger.control_messages,
                band_fraction: inside as f64 / probes.len() as f64,
            }
        })
        .collect())
}

/// Streams `events` forward samples through one tracker per algorithm
/// (comma separated) and reports messages and accuracy against the exact MLE.
#[wasm_bindgen]
pub fn run_stream(
    network_json: &str,
    algorithms: &str,
    epsilon: f64,
    sites: usize,
    events: usize,
    seed: u32,
) -> Result<String, JsError> {
    let net = Arc::new(BayesNet::from_json(network_json).map_err(fail)?);
    let algorithms = algorithms
        .split(',')
        .map(|s| s.trim().parse::<Algorithm>())
        .collect::<bnmon_core::Result<Vec<_>>>()
        .map_err(fail)?;
    to_json(&stream_summaries(net, &algorithms, epsilon, sites, events, seed as u64).map_err(fail)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alarm() -> BayesNet {
        BayesNet::from_json(ALARM).unwrap()
    }

    #[test]
    fn budget_view_lists_every_node() {
        let view = budget_view(&alarm(), Algorithm::NonUniform, 0.1).unwrap();
        assert_eq!(view.nodes.len(), 37);
        let sphere: f64 = view.nodes.iter().map(|n| n.nu * n.nu + n.mu * n.mu).sum();
        assert!((sphere - 0.01 / 128.0).abs() < 1e-12);
    }

    #[test]
    fn counter_trace_ends_at_count_and_is_reproducible() {
        let a = counter_trace(0.1, 4, 10_000, 50, 3).unwrap();
        assert_eq!(a.last().unwrap().count, 10_000);
        assert_eq!(a, counter_trace(0.1, 4, 10_000, 50, 3).unwrap());
    }

    #[test]
    fn exact_stream_sends_two_messages_per_node_and_event() {
        let net = Arc::new(alarm());
        let s = stream_summaries(net, &[Algorithm::Exact, Algorithm::Uniform], 0.1, 5, 2_000, 1).unwrap();
        assert_eq!(s[0].update_messages, 2 * 37 * 2_000);
        assert_eq!(s[0].band_fraction, 1.0);
        assert!(s[1].update_messages <= s[0].update_messages);
    }
}
