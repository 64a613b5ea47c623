//! Two flows under non-preemptive static priority with maximum packet sizes.
//!
//! Flow 1 (larger deadline) is low priority; flow 2 is high priority and may
//! be reshaped to `(r'_2, b'_2)`. Reshaping flow 1 never helps, so it is not
//! modelled.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow_model::FlowProfile;

/// Token-bucket reshaper on the high-priority flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketShaper {
    pub rate: f64,
    pub burst: f64,
}

impl PacketShaper {
    /// Shaper that leaves the flow untouched.
    pub fn identity(f2: &FlowProfile) -> Self {
        PacketShaper {
            rate: f2.rate,
            burst: f2.burst,
        }
    }

    fn validate(&self, f2: &FlowProfile) -> Result<()> {
        if !(self.rate >= f2.rate && self.rate.is_finite()) {
            return Err(Error::InvalidPlan(format!(
                "shaper rate {} below flow rate {}",
                self.rate, f2.rate
            )));
        }
        if !(self.burst >= f2.max_packet && self.burst <= f2.burst) {
            return Err(Error::InvalidPlan(format!(
                "shaper burst {} outside [{}, {}]",
                self.burst, f2.max_packet, f2.burst
            )));
        }
        Ok(())
    }
}

/// Which bound is active at the optimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PacketCase {
    /// The rate sum.
    RateSum,
    /// The high-priority burst plus one blocking packet.
    HighPriorityBurst,
    /// High-priority burst squeezed to one packet.
    MinimalBurst,
    /// Both deadlines tight; root of a quadratic.
    Balanced,
    /// Shaping does not lower the bandwidth.
    Unshaped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PacketSolution {
    pub bandwidth: f64,
    pub shaper: PacketShaper,
    pub case: PacketCase,
}

fn check_pair(f1: &FlowProfile, f2: &FlowProfile) -> Result<()> {
    if !(f1.deadline > f2.deadline) {
        return Err(Error::InvalidProfile(format!(
            "low-priority flow needs the larger deadline, got {} and {}",
            f1.deadline, f2.deadline
        )));
    }
    Ok(())
}

/// Minimum bandwidth without any shaper.
pub fn packet_sp_min_bw_unshaped(f1: &FlowProfile, f2: &FlowProfile) -> Result<f64> {
    check_pair(f1, f2)?;
    Ok((f1.rate + f2.rate)
        .max((f1.max_packet + f2.burst) / f2.deadline)
        .max((f1.burst + f2.burst) / f1.deadline + f2.rate))
}

/// Worst-case delay of the high-priority flow; `l1` is the largest
/// low-priority packet, which may block it once.
pub fn packet_high_priority_delay(
    f2: &FlowProfile,
    shaper: &PacketShaper,
    bandwidth: f64,
    l1: f64,
) -> Result<f64> {
    if !(bandwidth > f2.rate) {
        return Err(Error::InsufficientBandwidth {
            bandwidth,
            required: f2.rate,
        });
    }
    shaper.validate(f2)?;
    let blocked = (f2.burst + l1) / bandwidth;
    let shaped = (f2.burst - shaper.burst) / shaper.rate + (l1 + f2.max_packet) / bandwidth;
    Ok(blocked.max(shaped))
}

/// Worst-case delay of the low-priority flow.
pub fn packet_low_priority_delay(
    f1: &FlowProfile,
    f2: &FlowProfile,
    shaper: &PacketShaper,
    bandwidth: f64,
) -> Result<f64> {
    let rates = f1.rate + f2.rate;
    if !(bandwidth >= rates) {
        return Err(Error::InsufficientBandwidth {
            bandwidth,
            required: rates,
        });
    }
    shaper.validate(f2)?;
    let (r1, b1) = (f1.rate, f1.burst);
    let (r2, b2) = (f2.rate, f2.burst);
    let (rs, bs) = (shaper.rate, shaper.burst);
    if rs == r2 {
        return Ok((b1 + bs) / (bandwidth - r2));
    }
    // the two arrival-curve segments cross at (b2 - b'2)/(r'2 - r2)
    let gap = (bandwidth - rs) * (b2 - bs) / (rs - r2) - (b1 + bs);
    if gap < 0.0 {
        Ok((b1 + b2) / (bandwidth - r2))
    } else {
        let first = (b1 + bs) / (bandwidth - rs);
        let second = (b1 + b2) / r1 - (bandwidth - r1 - r2) * (b2 - bs) / (r1 * (rs - r2));
        Ok(first.max(second))
    }
}

/// Minimum bandwidth with an optimal shaper on the high-priority flow, and a
/// shaper attaining it.
///
/// The optimum is reached with `r'_2 = r_2`. The feasible `b'_2` then form an
/// interval; the bandwidth is the smallest at which it is nonempty, and the
/// witness is its lower end.
pub fn packet_sp_min_bw_shaped(f1: &FlowProfile, f2: &FlowProfile) -> Result<PacketSolution> {
    let unshaped = packet_sp_min_bw_unshaped(f1, f2)?;
    let (r1, b1, d1, l1) = (f1.rate, f1.burst, f1.deadline, f1.max_packet);
    let (r2, b2, d2, l2) = (f2.rate, f2.burst, f2.deadline, f2.max_packet);

    let lin = (d1 - d2) * r2 + b1 + b2;
    let root = (lin + (lin * lin + 4.0 * d1 * r2 * (l1 + l2)).sqrt()) / (2.0 * d1);
    let candidates = [
        (PacketCase::RateSum, r1 + r2),
        (PacketCase::HighPriorityBurst, (b2 + l1) / d2),
        (PacketCase::MinimalBurst, (b1 + l2) / d1 + r2),
        (PacketCase::Balanced, root),
    ];
    let shaped = candidates.iter().map(|c| c.1).fold(f64::MIN, f64::max);

    if shaped >= unshaped * (1.0 - 1e-12) {
        return Ok(PacketSolution {
            bandwidth: unshaped,
            shaper: PacketShaper::identity(f2),
            case: PacketCase::Unshaped,
        });
    }
    let case = candidates
        .iter()
        .find(|c| c.1 >= shaped * (1.0 - 1e-12))
        .map(|c| c.0)
        .expect("maximum is one of the candidates");
    let burst = (b2 - r2 * (d2 - (l1 + l2) / shaped)).clamp(l2, b2);
    Ok(PacketSolution {
        bandwidth: shaped,
        shaper: PacketShaper { rate: r2, burst },
        case,
    })
}
