//! Worst-case delay bounds in the fluid model.
//!
//! All functions take flows in [`FlowSet`] order (largest deadline first,
//! which is also lowest static priority first) and return one delay per flow.
//! Packet sizes are ignored here; see [`crate::packet_two_flow`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow_model::{FlowSet, ReshapingPlan};

/// Shifted token-bucket service curve: zero before `offset`, then
/// `burst + rate * (t - offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ServiceCurveSpec {
    pub offset: f64,
    pub burst: f64,
    pub rate: f64,
}

impl ServiceCurveSpec {
    pub fn eval(&self, t: f64) -> f64 {
        if t < self.offset {
            0.0
        } else {
            self.burst + self.rate * (t - self.offset)
        }
    }
}

/// Per-flow service curves an EDF link must honour for every flow to meet
/// its deadline.
pub fn edf_service_curves(fs: &FlowSet) -> Vec<ServiceCurveSpec> {
    fs.flows()
        .iter()
        .map(|f| ServiceCurveSpec {
            offset: f.deadline,
            burst: f.burst,
            rate: f.rate,
        })
        .collect()
}

/// Static priority without reshaping: flow `h` waits for its own burst plus
/// the bursts of every higher-priority flow, served at what is left after the
/// higher-priority rates.
pub fn sp_delay_unshaped(fs: &FlowSet, bandwidth: f64) -> Result<Vec<f64>> {
    fs.check_bandwidth(bandwidth)?;
    let n = fs.len();
    Ok((0..n)
        .map(|h| fs.burst_from(h) / (bandwidth - fs.rate_from(h + 1)))
        .collect())
}

/// Static priority with every flow reshaped to `(r_i, b'_i)` at ingress.
pub fn sp_delay_shaped(fs: &FlowSet, plan: &ReshapingPlan, bandwidth: f64) -> Result<Vec<f64>> {
    fs.check_bandwidth(bandwidth)?;
    check_plan(fs, plan)?;
    let n = fs.len();
    let mut delays = vec![0.0; n];
    // shaped burst of strictly higher-priority flows
    let mut above = 0.0;
    for i in (0..n).rev() {
        let f = fs.flow(i);
        let residual = bandwidth - fs.rate_from(i + 1);
        debug_assert!(residual > 0.0);
        let queued = (f.burst + above) / residual;
        let shaped = f.reshaping_delay(plan.bursts()[i]) + above / residual;
        delays[i] = queued.max(shaped);
        above += plan.bursts()[i];
    }
    Ok(delays)
}

/// FIFO with every flow reshaped to `(r_i, b'_i)` at ingress.
pub fn fifo_delay_shaped(fs: &FlowSet, plan: &ReshapingPlan, bandwidth: f64) -> Result<Vec<f64>> {
    fs.check_bandwidth(bandwidth)?;
    check_plan(fs, plan)?;
    let total_shaped = plan.total();
    let total_rate = fs.total_rate();
    Ok(fs
        .flows()
        .iter()
        .zip(plan.bursts())
        .map(|(f, &shaped)| {
            let held = f.reshaping_delay(shaped);
            let early = held + (total_shaped - shaped) / bandwidth;
            let late = total_shaped / bandwidth + held * total_rate / bandwidth;
            early.max(late)
        })
        .collect())
}

/// FIFO without reshaping: every flow sees the whole aggregate burst.
pub fn fifo_delay_unshaped(fs: &FlowSet, bandwidth: f64) -> Result<Vec<f64>> {
    fifo_delay_shaped(fs, &ReshapingPlan::identity(fs), bandwidth)
}

fn check_plan(fs: &FlowSet, plan: &ReshapingPlan) -> Result<()> {
    if plan.len() != fs.len() {
        return Err(Error::InvalidPlan(format!(
            "plan has {} entries for {} flows",
            plan.len(),
            fs.len()
        )));
    }
    Ok(())
}
