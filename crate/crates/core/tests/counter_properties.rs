//! Unbiasedness, variance and message-growth properties of the counters.

use bnmon_core::counter::{CounterConfig, ExactCounter, SampledCounter};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact expectation of the estimate after every prefix of `schedule`,
/// obtained by branching on every reporting coin.
fn exhaustive_expectations(counter: SampledCounter, schedule: &[usize]) -> Vec<f64> {
    let mut expectations = vec![0.0; schedule.len()];
    let mut stack = vec![(counter, 0usize, 1.0f64)];
    while let Some((c, step, weight)) = stack.pop() {
        if step == schedule.len() {
            continue;
        }
        let site = schedule[step];
        let p = c.probability();
        let mut branches = Vec::with_capacity(2);
        if p >= 1.0 {
            let mut c1 = c;
            c1.increment_with(site, |_| true);
            branches.push((c1, weight));
        } else {
            let mut yes = c.clone();
            yes.increment_with(site, |_| true);
            let mut no = c;
            no.increment_with(site, |_| false);
            branches.push((yes, weight * p));
            branches.push((no, weight * (1.0 - p)));
        }
        for (b, w) in branches {
            expectations[step] += w * b.estimate();
            stack.push((b, step + 1, w));
        }
    }
    expectations
}

fn schedules(seed: u64) -> Vec<(usize, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![(1, vec![0; 12]), (2, [0, 1].repeat(6)), (2, [vec![0; 6], vec![1; 6]].concat())];
    for _ in 0..6 {
        let k = rng.random_range(1..=2);
        let len = rng.random_range(1..=12);
        out.push((k, (0..len).map(|_| rng.random_range(0..k)).collect()));
    }
    out
}

#[test]
fn fixed_probability_is_exactly_unbiased() {
    for (k, schedule) in schedules(1) {
        for p in [0.25, 0.5, 1.0] {
            let c = SampledCounter::with_fixed_probability(k, p, 0).unwrap();
            for (step, e) in exhaustive_expectations(c, &schedule).into_iter().enumerate() {
                let truth = (step + 1) as f64;
                assert!((e - truth).abs() <= 1e-12 * truth, "k={k} p={p} step={step}: {e}");
            }
        }
    }
}

#[test]
fn round_based_counter_is_exactly_unbiased() {
    // Large ε′ with small k drops below probability 1 within a dozen
    // increments, so the schedules cross round boundaries while sampling.
    for (k, schedule) in schedules(2) {
        for eps in [1.0, 0.9, 0.5] {
            let c = SampledCounter::new(CounterConfig::new(eps, k, 0).unwrap());
            for (step, e) in exhaustive_expectations(c, &schedule).into_iter().enumerate() {
                let truth = (step + 1) as f64;
                assert!((e - truth).abs() <= 1e-9 * truth, "k={k} ε′={eps} step={step}: {e}");
            }
        }
    }
}

#[test]
fn round_based_counter_samples_in_short_schedules() {
    // The enumeration above is only meaningful if some coins are actually flipped.
    let mut c = SampledCounter::new(CounterConfig::new(1.0, 1, 0).unwrap());
    for _ in 0..12 {
        c.increment(0);
    }
    assert!(c.probability() < 1.0);
}

#[test]
fn monte_carlo_moments_small_grid() {
    const TRIALS: u64 = 400;
    const C: u64 = 10_000;
    for k in [1usize, 4] {
        for eps in [0.2, 0.05] {
            let estimates: Vec<f64> = (0..TRIALS)
                .map(|t| {
                    let mut c = SampledCounter::new(CounterConfig::new(eps, k, 7_000 + t).unwrap());
                    let mut route = ChaCha8Rng::seed_from_u64(t);
                    for _ in 0..C {
                        c.increment(route.random_range(0..k));
                    }
                    c.estimate()
                })
                .collect();
            let mean = estimates.iter().sum::<f64>() / TRIALS as f64;
            let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (TRIALS - 1) as f64;
            let bound = (eps * C as f64).powi(2);
            assert!(var <= 1.2 * bound, "k={k} ε′={eps}: var {var} vs {bound}");
            let sigma = (var / TRIALS as f64).sqrt().max(1e-9);
            assert!((mean - C as f64).abs() <= 3.0 * sigma + 1e-9, "k={k} ε′={eps}: mean {mean}");
        }
    }
}

#[test]
fn update_messages_grow_logarithmically() {
    let k = 4;
    let eps = 0.1;
    let base = 100_000u64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut c = SampledCounter::new(CounterConfig::new(eps, k, 9).unwrap());
    let mut route = ChaCha8Rng::seed_from_u64(9);
    let mut done = 0;
    for t in 0..=6 {
        let target = base << t;
        while done < target {
            c.increment(route.random_range(0..k));
            done += 1;
        }
        xs.push((target as f64).log2());
        ys.push(c.ledger().update_messages as f64);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    assert!(r2 >= 0.9, "R² = {r2}, messages {ys:?}");
    // Per doubling the increase stays bounded rather than doubling.
    let steps: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
    let first = steps[0];
    assert!(steps.iter().all(|&s| s <= 2.0 * first), "{steps:?}");
    assert!(ys[6] < 2.0 * ys[0], "{ys:?}");
}

#[test]
fn exact_counter_is_exact() {
    let mut c = ExactCounter::new(5);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for n in 1..=5_000u64 {
        c.increment(rng.random_range(0..5));
        assert_eq!(c.estimate(), n as f64);
        assert_eq!(c.ledger().update_messages, n);
    }
}

#[test]
fn identical_inputs_give_identical_runs() {
    let run = || {
        let mut c = SampledCounter::new(CounterConfig::new(0.05, 16, 1234).unwrap());
        let mut trace = Vec::new();
        for i in 0..200_000usize {
            c.increment(i % 16);
            if i % 10_000 == 0 {
                trace.push(c.estimate());
            }
        }
        (trace, c.ledger())
    };
    assert_eq!(run(), run());
}
