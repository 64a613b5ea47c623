//! Minimum-bandwidth solvers for every scheduler regime.

mod edf;
mod fifo;
mod static_priority;
mod two_flow;

pub use edf::{min_bw_edf, min_bw_edf_reshaped};
pub use fifo::{fifo_bounds, min_bw_fifo, min_bw_fifo_shaped, FifoBounds, FIFO_FLOW_LIMIT};
pub use static_priority::{
    min_bw_sp, min_bw_sp_shaped, sp_shaped_feasible, FeasibilitySet, FEASIBILITY_SET_LIMIT,
};
pub use two_flow::{fifo_beats_sp_two_flow, two_flow_closed_forms};

use serde::Serialize;

use crate::error::Result;
use crate::flow_model::{FlowSet, Scheduler, SolveResult};

/// The five minimum bandwidths of one flow set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minima {
    pub edf: f64,
    pub sp: f64,
    pub sp_shaped: f64,
    pub fifo: f64,
    pub fifo_shaped: f64,
}

impl Minima {
    pub fn get(&self, scheduler: Scheduler) -> f64 {
        match scheduler {
            Scheduler::Edf => self.edf,
            Scheduler::StaticPriority => self.sp,
            Scheduler::StaticPriorityShaped => self.sp_shaped,
            Scheduler::Fifo => self.fifo,
            Scheduler::FifoShaped => self.fifo_shaped,
        }
    }
}

pub fn solve(fs: &FlowSet, scheduler: Scheduler) -> Result<SolveResult> {
    match scheduler {
        Scheduler::Edf => Ok(min_bw_edf(fs)),
        Scheduler::StaticPriority => Ok(min_bw_sp(fs)),
        Scheduler::StaticPriorityShaped => Ok(min_bw_sp_shaped(fs)),
        Scheduler::Fifo => Ok(min_bw_fifo(fs)),
        Scheduler::FifoShaped => min_bw_fifo_shaped(fs),
    }
}

pub fn all_minima(fs: &FlowSet) -> Result<Minima> {
    Ok(Minima {
        edf: min_bw_edf(fs).r_min,
        sp: min_bw_sp(fs).r_min,
        sp_shaped: min_bw_sp_shaped(fs).r_min,
        fifo: min_bw_fifo(fs).r_min,
        fifo_shaped: min_bw_fifo_shaped(fs)?.r_min,
    })
}

/// Smallest `R` in `[lo, hi]` with `feasible(R)`, assuming `feasible` is
/// monotone and `feasible(hi)` holds. Returns the feasible endpoint.
pub(crate) fn bisect(mut lo: f64, mut hi: f64, feasible: impl Fn(f64) -> bool) -> f64 {
    if feasible(lo) {
        return lo;
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Snap values within rounding noise of zero to exactly zero.
pub(crate) fn clamp_noise(x: f64) -> f64 {
    if x < 0.0 && x > -1e-9 {
        0.0
    } else {
        x
    }
}
