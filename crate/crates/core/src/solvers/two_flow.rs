use crate::error::{Error, Result};
use crate::flow_model::FlowProfile;

use super::Minima;

fn check_order(f1: &FlowProfile, f2: &FlowProfile) -> Result<()> {
    if !(f1.deadline > f2.deadline) {
        return Err(Error::InvalidProfile(format!(
            "first flow needs the larger deadline, got {} and {}",
            f1.deadline, f2.deadline
        )));
    }
    Ok(())
}

/// Closed-form minima for two flows, `f1` carrying the larger deadline.
pub fn two_flow_closed_forms(f1: &FlowProfile, f2: &FlowProfile) -> Result<Minima> {
    check_order(f1, f2)?;
    let (r1, b1, d1) = (f1.rate, f1.burst, f1.deadline);
    let (r2, b2, d2) = (f2.rate, f2.burst, f2.deadline);
    let rates = r1 + r2;

    let edf = rates.max(b2 / d2).max((b1 + b2 - r2 * d2) / d1 + r2);
    let sp = rates.max(b2 / d2).max((b1 + b2) / d1 + r2);
    let sp_shaped = if b2 / r2 >= b1 / r1 {
        edf
    } else {
        rates
            .max(b2 / d2)
            .max((b1 + (b2 - r2 * d2).max(0.0)) / d1 + r2)
    };
    let fifo = rates.max((b1 + b2) / d2);
    let lin = b1 + b2 - d1 * r1;
    let root = (lin + (lin * lin + 4.0 * r1 * d2 * b2).sqrt()) / (2.0 * d2);
    let fifo_shaped = rates
        .max(b2 / d2)
        .max((b1 + b2) * rates / (d1 * r1 + d2 * r2))
        .max(root);

    Ok(Minima {
        edf,
        sp,
        sp_shaped,
        fifo,
        fifo_shaped,
    })
}

/// Whether reshaped FIFO needs strictly less bandwidth than reshaped static
/// priority for this pair.
pub fn fifo_beats_sp_two_flow(f1: &FlowProfile, f2: &FlowProfile) -> Result<bool> {
    check_order(f1, f2)?;
    let (r1, b1, d1) = (f1.rate, f1.burst, f1.deadline);
    let (r2, b2, d2) = (f2.rate, f2.burst, f2.deadline);
    let d1_inside = b2 / r2 < d1 && d1 < b1 / r1;
    let d2_floor = (b1 + b2) * (r1 + r2) / (r2 * (b1 / d1 + r2)) - d1 * r1 / r2;
    Ok(d1_inside && d2_floor < d2 && d2 < d1)
}
