use crate::delay_bounds::{sp_delay_shaped, sp_delay_unshaped};
use crate::error::{Error, Result};
use crate::flow_model::{FlowSet, ReshapingPlan, Scheduler, SolveResult};

use super::{bisect, clamp_noise, min_bw_edf};

/// Largest flow count for which [`FeasibilitySet::build`] materializes the
/// `2^n - 1` elements. The solver itself uses a running minimum and has no
/// such limit.
pub const FEASIBILITY_SET_LIMIT: usize = 20;

/// Minimum bandwidth under static priority, deadline-monotonic order, no
/// reshaping.
pub fn min_bw_sp(fs: &FlowSet) -> SolveResult {
    let r_min = sp_upper(fs);
    SolveResult {
        scheduler: Scheduler::StaticPriority,
        r_min,
        plan: None,
        delays: sp_delay_unshaped(fs, r_min).expect("r_min covers the rate sum"),
    }
}

fn sp_upper(fs: &FlowSet) -> f64 {
    (0..fs.len()).fold(fs.total_rate(), |acc, h| {
        acc.max(fs.burst_from(h) / fs.flow(h).deadline + fs.rate_from(h + 1))
    })
}

// Per-flow coefficients at bandwidth R.
struct Coeffs {
    h: f64,
    pi: f64,
    v: f64,
}

fn coeffs(fs: &FlowSet, i: usize, bandwidth: f64) -> Coeffs {
    let f = fs.flow(i);
    let residual = bandwidth - fs.rate_from(i + 1);
    Coeffs {
        h: f.burst - f.deadline * f.rate,
        pi: (f.rate + residual) / residual,
        v: f.deadline * residual - f.burst,
    }
}

/// Whether some reshaping plan meets every deadline at `bandwidth`.
///
/// Tracks only the minimum of the feasibility set: the map
/// `s -> (s - H_i) / Pi_i` is increasing, so the new minimum depends on the
/// old one alone.
pub fn sp_shaped_feasible(fs: &FlowSet, bandwidth: f64) -> bool {
    if bandwidth < fs.total_rate() {
        return false;
    }
    let n = fs.len();
    // rounding allowance, so a closed-form bracket reads as feasible
    let slack = -1e-12 * fs.total_burst();
    let mut min = f64::INFINITY;
    for i in 0..n {
        let c = coeffs(fs, i, bandwidth);
        min = if i == 0 {
            c.v
        } else {
            min.min(c.v).min((min - c.h) / c.pi)
        };
        if min < slack {
            return false;
        }
    }
    true
}

/// Fully materialized feasibility set, for inspection and small `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilitySet {
    elements: Vec<f64>,
}

impl FeasibilitySet {
    pub fn build(fs: &FlowSet, bandwidth: f64) -> Result<Self> {
        if fs.len() > FEASIBILITY_SET_LIMIT {
            return Err(Error::TooManyFlows {
                count: fs.len(),
                limit: FEASIBILITY_SET_LIMIT,
            });
        }
        fs.check_bandwidth(bandwidth)?;
        let mut elements = Vec::with_capacity((1usize << fs.len()) - 1);
        for i in 0..fs.len() {
            let c = coeffs(fs, i, bandwidth);
            let mapped: Vec<f64> = elements.iter().map(|s| (s - c.h) / c.pi).collect();
            elements.push(c.v);
            elements.extend(mapped);
        }
        Ok(FeasibilitySet { elements })
    }

    pub fn elements(&self) -> &[f64] {
        &self.elements
    }

    pub fn min(&self) -> f64 {
        self.elements.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_feasible(&self) -> bool {
        self.min() >= 0.0
    }
}

/// Minimum bandwidth under static priority with optimal ingress reshaping,
/// plus the reshaping plan that attains it.
pub fn min_bw_sp_shaped(fs: &FlowSet) -> SolveResult {
    // no scheduler beats EDF, so its minimum is a valid lower bracket
    let lo = min_bw_edf(fs).r_min;
    let r_min = bisect(lo, sp_upper(fs).max(lo), |r| sp_shaped_feasible(fs, r));
    let plan = sp_plan(fs, r_min);
    let delays = sp_delay_shaped(fs, &plan, r_min).expect("r_min covers the rate sum");
    SolveResult {
        scheduler: Scheduler::StaticPriorityShaped,
        r_min,
        plan: Some(plan),
        delays,
    }
}

// Each flow gets the smallest burst that still lets its own shaper meet the
// deadline; the lowest-priority flow is left untouched.
fn sp_plan(fs: &FlowSet, bandwidth: f64) -> ReshapingPlan {
    let n = fs.len();
    let mut shaped = vec![0.0; n];
    let mut above = 0.0;
    for i in (1..n).rev() {
        let f = fs.flow(i);
        let residual = bandwidth - fs.rate_from(i + 1);
        let b = f.burst - f.rate * f.deadline + f.rate * above / residual;
        shaped[i] = clamp_noise(b).clamp(0.0, f.burst);
        above += shaped[i];
    }
    shaped[0] = fs.flow(0).burst;
    ReshapingPlan::new(fs, shaped).expect("plan entries are clamped into range")
}
