#![allow(dead_code)]

use bwmin_core::{FlowProfile, FlowSet};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn set(raw: &[(f64, f64, f64)]) -> FlowSet {
    FlowSet::new(
        raw.iter()
            .map(|&(r, b, d)| FlowProfile::new(r, b, d).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Two flows: r, b ~ U(0.1, 10), d2 ~ U(0.05, 3), d1 = d2 + U(0.01, 2).
pub fn random_pair(rng: &mut ChaCha8Rng) -> (FlowProfile, FlowProfile) {
    let d2 = rng.random_range(0.05..3.0);
    let d1 = d2 + rng.random_range(0.01..2.0);
    let f1 =
        FlowProfile::new(rng.random_range(0.1..10.0), rng.random_range(0.1..10.0), d1).unwrap();
    let f2 =
        FlowProfile::new(rng.random_range(0.1..10.0), rng.random_range(0.1..10.0), d2).unwrap();
    (f1, f2)
}

/// `n` flows with distinct deadlines in (0.05, 3].
pub fn random_set(rng: &mut ChaCha8Rng, n: usize) -> FlowSet {
    loop {
        let flows: Vec<FlowProfile> = (0..n)
            .map(|_| {
                FlowProfile::new(
                    rng.random_range(0.1..10.0),
                    rng.random_range(0.1..10.0),
                    rng.random_range(0.05..3.0),
                )
                .unwrap()
            })
            .collect();
        if let Ok(fs) = FlowSet::new(flows) {
            return fs;
        }
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Static priority with reshaping, checked straight from the per-flow delay
/// bound: choose each flow's smallest admissible burst from the top priority
/// down and test the queueing term of every flow.
pub fn sp_greedy_feasible(fs: &FlowSet, r: f64) -> bool {
    if r < fs.total_rate() {
        return false;
    }
    let n = fs.len();
    let mut above = 0.0;
    for i in (0..n).rev() {
        let f = fs.flow(i);
        let residual = r - fs.rate_from(i + 1);
        if f.burst + above > f.deadline * residual * (1.0 + 1e-12) {
            return false;
        }
        let shaped = if i == 0 {
            f.burst
        } else {
            (f.burst - f.rate * (f.deadline - above / residual)).max(0.0)
        };
        above += shaped;
    }
    true
}

fn fifo_slack(fs: &FlowSet, r: f64, total: f64) -> f64 {
    let rates = fs.total_rate();
    let demand: f64 = fs
        .flows()
        .iter()
        .map(|f| {
            let own = r / (r + f.rate) * (f.burst - f.deadline * f.rate + f.rate * total / r);
            let agg = f.burst + f.rate * (total - r * f.deadline) / rates;
            own.max(agg).max(0.0)
        })
        .sum();
    demand - total
}

/// FIFO with reshaping: some total reshaped burst `B` in `[0, min(sum b, R d_n)]`
/// must cover the per-flow lower limits. The slack is convex piecewise linear
/// in `B`, so checking its breakpoints and the interval ends is exact.
pub fn fifo_convex_feasible(fs: &FlowSet, r: f64) -> bool {
    if r < fs.total_rate() {
        return false;
    }
    let hi = fs.total_burst().min(r * fs.min_deadline());
    let rates = fs.total_rate();
    let mut points = vec![0.0, hi];
    for f in fs.flows() {
        let h = f.burst - f.deadline * f.rate;
        // own(B) = (r h + r_i B)/(r + r_i), agg(B) = b + r_i (B - r d)/R_1
        let (a1, s1) = (r * h / (r + f.rate), f.rate / (r + f.rate));
        let (a2, s2) = (f.burst - f.rate * r * f.deadline / rates, f.rate / rates);
        points.push(-a1 / s1);
        points.push(-a2 / s2);
        if (s1 - s2).abs() > 1e-15 {
            points.push((a2 - a1) / (s1 - s2));
        }
    }
    let scale = fs.total_burst().max(1.0);
    points
        .into_iter()
        .filter(|p| p.is_finite() && *p >= 0.0 && *p <= hi)
        .any(|p| fifo_slack(fs, r, p) <= 1e-9 * scale)
}

/// Smallest feasible bandwidth of a monotone predicate by bisection.
pub fn bisect(mut lo: f64, mut hi: f64, ok: impl Fn(f64) -> bool) -> f64 {
    if ok(lo) {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
