use crate::error::{Error, Result};
use crate::flow_model::{FlowSet, ReshapingPlan, Scheduler, SolveResult};

/// Scheduler-independent lower bound, attained by EDF.
///
/// For every deadline `d_h`, the flows with deadlines no later than `d_h`
/// must all have been served their guaranteed amount by `d_h`.
pub fn min_bw_edf(fs: &FlowSet) -> SolveResult {
    let n = fs.len();
    let mut r_min = fs.total_rate();
    for h in 0..n {
        let dh = fs.flow(h).deadline;
        let demand: f64 = fs.flows()[h..]
            .iter()
            .map(|f| f.burst + f.rate * (dh - f.deadline))
            .sum();
        r_min = r_min.max(demand / dh);
    }
    SolveResult {
        scheduler: Scheduler::Edf,
        r_min,
        plan: None,
        // the EDF service curves deliver every bit exactly by its deadline
        delays: fs.deadlines().collect(),
    }
}

/// EDF minimum once every flow has been reshaped to `(r_i, b'_i)`: each flow
/// now holds `b'_i + r_i (t - e_i)` from `e_i = d_i - (b_i - b'_i)/r_i` on.
pub fn min_bw_edf_reshaped(fs: &FlowSet, plan: &ReshapingPlan) -> Result<f64> {
    if plan.len() != fs.len() {
        return Err(Error::InvalidPlan(format!(
            "plan has {} entries for {} flows",
            plan.len(),
            fs.len()
        )));
    }
    let offsets: Vec<f64> = fs
        .flows()
        .iter()
        .zip(plan.bursts())
        .map(|(f, &s)| f.deadline - f.reshaping_delay(s))
        .collect();
    if let Some(flow) = offsets.iter().position(|&e| e <= 0.0) {
        return Err(Error::InfeasibleReshaping { flow });
    }
    let mut r_min = fs.total_rate();
    for &eh in &offsets {
        let demand: f64 = fs
            .flows()
            .iter()
            .zip(&offsets)
            .filter(|(_, &e)| e <= eh)
            .map(|(f, _)| f.burst + f.rate * (eh - f.deadline))
            .sum();
        r_min = r_min.max(demand / eh);
    }
    Ok(r_min)
}
