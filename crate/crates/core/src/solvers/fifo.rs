use serde::Serialize;

use crate::delay_bounds::{fifo_delay_shaped, fifo_delay_unshaped};
use crate::error::{Error, Result};
use crate::flow_model::{FlowSet, ReshapingPlan, Scheduler, SolveResult};

use super::{bisect, clamp_noise, min_bw_edf};

/// Largest flow count accepted by the exact subset enumeration (`3^n` terms).
pub const FIFO_FLOW_LIMIT: usize = 14;

/// Minimum bandwidth under FIFO without reshaping.
pub fn min_bw_fifo(fs: &FlowSet) -> SolveResult {
    let r_min = fifo_upper(fs);
    SolveResult {
        scheduler: Scheduler::Fifo,
        r_min,
        plan: None,
        delays: fifo_delay_unshaped(fs, r_min).expect("r_min covers the rate sum"),
    }
}

fn fifo_upper(fs: &FlowSet) -> f64 {
    fs.total_rate().max(fs.total_burst() / fs.min_deadline())
}

fn fifo_lower(fs: &FlowSet) -> f64 {
    let weighted: f64 = fs.flows().iter().map(|f| f.rate * f.deadline).sum();
    fs.total_rate()
        .max(fs.total_burst() * fs.total_rate() / weighted)
}

/// Lower (`x`) and upper (`y`) limits on the total reshaped burst at a given
/// bandwidth. Some plan meets every deadline iff `x <= y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FifoBounds {
    pub x: f64,
    pub y: f64,
}

fn rounding(x: f64, y: f64) -> f64 {
    1e-12 * x.abs().max(y.abs()).max(1.0)
}

impl FifoBounds {
    pub fn feasible(&self) -> bool {
        self.x <= self.y + rounding(self.x, self.y)
    }
}

// Each flow either stays out, joins P1 (weight a1, c1) or joins P2 (a2, c2).
struct Terms {
    a1: Vec<f64>,
    c1: Vec<f64>,
    a2: Vec<f64>,
    c2: Vec<f64>,
    prefix_burst: Vec<f64>,
}

impl Terms {
    fn new(fs: &FlowSet, bandwidth: f64) -> Self {
        let total_rate = fs.total_rate();
        let n = fs.len();
        let mut t = Terms {
            a1: Vec::with_capacity(n),
            c1: Vec::with_capacity(n),
            a2: Vec::with_capacity(n),
            c2: Vec::with_capacity(n),
            prefix_burst: (0..n).map(|i| fs.burst_through(i)).collect(),
        };
        for f in fs.flows() {
            let h = f.burst - f.deadline * f.rate;
            t.a1.push(bandwidth * h / (bandwidth + f.rate));
            t.c1.push(f.rate / (bandwidth + f.rate));
            t.a2.push(f.burst - f.rate * f.deadline * bandwidth / total_rate);
            t.c2.push(f.rate / total_rate);
        }
        t
    }

    fn len(&self) -> usize {
        self.a1.len()
    }

    // min over nonempty assignments of the first k flows (1 <= k <= n-1)
    fn upper(&self, k: usize, num: f64, den: f64, used: bool, best: &mut f64) {
        if k > 0 && used {
            let v = (self.prefix_burst[k - 1] - num) / den;
            if v < *best {
                *best = v;
            }
        }
        if k + 1 >= self.len() {
            return;
        }
        self.upper(k + 1, num, den, used, best);
        self.upper(k + 1, num + self.a1[k], den + self.c1[k], true, best);
        self.upper(k + 1, num + self.a2[k], den + self.c2[k], true, best);
    }

    // max over full assignments with P2 a proper subset; stops early once
    // `stop_above` is exceeded
    fn lower(
        &self,
        k: usize,
        num: f64,
        den: f64,
        p2: usize,
        best: &mut f64,
        stop_above: f64,
    ) -> bool {
        if k == self.len() {
            if p2 < self.len() {
                let v = num / (1.0 - den);
                if v > *best {
                    *best = v;
                }
            }
            return *best > stop_above;
        }
        self.lower(k + 1, num, den, p2, best, stop_above)
            || self.lower(
                k + 1,
                num + self.a1[k],
                den + self.c1[k],
                p2,
                best,
                stop_above,
            )
            || self.lower(
                k + 1,
                num + self.a2[k],
                den + self.c2[k],
                p2 + 1,
                best,
                stop_above,
            )
    }
}

fn upper_limit(fs: &FlowSet, terms: &Terms, bandwidth: f64) -> f64 {
    let mut y = fs.total_burst().min(bandwidth * fs.min_deadline());
    terms.upper(0, 0.0, 0.0, false, &mut y);
    y
}

fn lower_limit(terms: &Terms, stop_above: f64) -> f64 {
    // the empty assignment contributes 0
    let mut x = 0.0;
    terms.lower(0, 0.0, 0.0, 0, &mut x, stop_above);
    x
}

fn check_size(fs: &FlowSet) -> Result<()> {
    if fs.len() > FIFO_FLOW_LIMIT {
        return Err(Error::TooManyFlows {
            count: fs.len(),
            limit: FIFO_FLOW_LIMIT,
        });
    }
    Ok(())
}

/// Exact `x` and `y` at `bandwidth` by enumerating all subset assignments.
pub fn fifo_bounds(fs: &FlowSet, bandwidth: f64) -> Result<FifoBounds> {
    check_size(fs)?;
    fs.check_bandwidth(bandwidth)?;
    let terms = Terms::new(fs, bandwidth);
    Ok(FifoBounds {
        x: lower_limit(&terms, f64::INFINITY),
        y: upper_limit(fs, &terms, bandwidth),
    })
}

fn fifo_shaped_feasible(fs: &FlowSet, bandwidth: f64) -> bool {
    let terms = Terms::new(fs, bandwidth);
    let y = upper_limit(fs, &terms, bandwidth);
    let allowed = y + rounding(y, y);
    if allowed < 0.0 {
        return false;
    }
    lower_limit(&terms, allowed) <= allowed
}

/// Minimum bandwidth under FIFO with optimal ingress reshaping, plus the plan
/// that attains it.
pub fn min_bw_fifo_shaped(fs: &FlowSet) -> Result<SolveResult> {
    check_size(fs)?;
    let lo = fifo_lower(fs).max(min_bw_edf(fs).r_min);
    let r_min = bisect(lo, fifo_upper(fs).max(lo), |r| fifo_shaped_feasible(fs, r));
    let plan = fifo_plan(fs, r_min);
    let delays = fifo_delay_shaped(fs, &plan, r_min)?;
    Ok(SolveResult {
        scheduler: Scheduler::FifoShaped,
        r_min,
        plan: Some(plan),
        delays,
    })
}

// Per-flow lower limit on b'_i once the total reshaped burst is fixed.
fn least_share(fs: &FlowSet, i: usize, total: f64, bandwidth: f64) -> f64 {
    let f = fs.flow(i);
    let h = f.burst - f.deadline * f.rate;
    let own = bandwidth / (bandwidth + f.rate) * (h + f.rate * total / bandwidth);
    let aggregate = f.burst + f.rate * (total - bandwidth * f.deadline) / fs.total_rate();
    own.max(aggregate).max(0.0)
}

// Fix the total at its lower limit, then walk the prefix sums downwards.
fn fifo_plan(fs: &FlowSet, bandwidth: f64) -> ReshapingPlan {
    let n = fs.len();
    let terms = Terms::new(fs, bandwidth);
    let total = lower_limit(&terms, f64::INFINITY);
    let shares: Vec<f64> = (0..n)
        .map(|i| least_share(fs, i, total, bandwidth))
        .collect();
    let mut prefix = vec![0.0; n];
    prefix[n - 1] = total;
    let mut share_sum: f64 = shares[..n - 1].iter().sum();
    for i in (0..n - 1).rev() {
        prefix[i] = share_sum.max(prefix[i + 1] - fs.flow(i + 1).burst);
        share_sum -= shares[i];
    }
    let shaped = (0..n)
        .map(|i| {
            let b = if i == 0 {
                prefix[0]
            } else {
                prefix[i] - prefix[i - 1]
            };
            clamp_noise(b).clamp(0.0, fs.flow(i).burst)
        })
        .collect();
    ReshapingPlan::new(fs, shaped).expect("plan entries are clamped into range")
}
