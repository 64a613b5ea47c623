//! Flow profiles, deadline-ordered flow sets and reshaping plans.
//!
//! Flows are indexed by decreasing deadline: index 0 carries the largest
//! deadline and is the lowest static priority, the last index carries the
//! smallest deadline and is the highest priority. All sums the solvers need
//! (suffix rate sums, prefix burst sums) are cached at construction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token-bucket contract `(rate, burst)` of one flow plus its hard deadline.
///
/// `max_packet` is only read by the packet-based two-flow model; zero means
/// the fluid model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowProfile {
    #[serde(rename = "r")]
    pub rate: f64,
    #[serde(rename = "b")]
    pub burst: f64,
    #[serde(rename = "d")]
    pub deadline: f64,
    #[serde(rename = "l", default)]
    pub max_packet: f64,
}

impl FlowProfile {
    pub fn new(rate: f64, burst: f64, deadline: f64) -> Result<Self> {
        Self::with_packet(rate, burst, deadline, 0.0)
    }

    pub fn with_packet(rate: f64, burst: f64, deadline: f64, max_packet: f64) -> Result<Self> {
        let profile = FlowProfile {
            rate,
            burst,
            deadline,
            max_packet,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "rate must be finite and > 0, got {}",
                self.rate
            )));
        }
        if !(self.deadline.is_finite() && self.deadline > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "deadline must be finite and > 0, got {}",
                self.deadline
            )));
        }
        if !(self.max_packet.is_finite() && self.max_packet >= 0.0) {
            return Err(Error::InvalidProfile(format!(
                "max packet size must be finite and >= 0, got {}",
                self.max_packet
            )));
        }
        if !(self.burst.is_finite() && self.burst >= self.max_packet) {
            return Err(Error::InvalidProfile(format!(
                "burst must be finite and >= max packet size {}, got {}",
                self.max_packet, self.burst
            )));
        }
        Ok(())
    }

    /// Time for a greedy shaper at the flow's own rate to drain `burst - shaped`.
    pub fn reshaping_delay(&self, shaped_burst: f64) -> f64 {
        (self.burst - shaped_burst) / self.rate
    }
}

/// Deadline-ordered flows with cached aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSet {
    flows: Vec<FlowProfile>,
    // rate_suffix[i] = sum of rates of flows i..n, rate_suffix[n] = 0
    rate_suffix: Vec<f64>,
    // burst_prefix[i] = sum of bursts of flows 0..i, burst_prefix[0] = 0
    burst_prefix: Vec<f64>,
}

impl FlowSet {
    /// Validates every profile and sorts by strictly decreasing deadline.
    pub fn new(flows: Vec<FlowProfile>) -> Result<Self> {
        if flows.is_empty() {
            return Err(Error::EmptyFlowSet);
        }
        for flow in &flows {
            flow.validate()?;
        }
        let mut order: Vec<usize> = (0..flows.len()).collect();
        order.sort_by(|&a, &b| {
            flows[b]
                .deadline
                .total_cmp(&flows[a].deadline)
                .then(a.cmp(&b))
        });
        for pair in order.windows(2) {
            if flows[pair[0]].deadline == flows[pair[1]].deadline {
                return Err(Error::EqualDeadlines {
                    first: pair[0].min(pair[1]),
                    second: pair[0].max(pair[1]),
                    deadline: flows[pair[0]].deadline,
                });
            }
        }
        let sorted: Vec<FlowProfile> = order.into_iter().map(|i| flows[i]).collect();

        let n = sorted.len();
        let mut rate_suffix = vec![0.0; n + 1];
        for i in (0..n).rev() {
            rate_suffix[i] = rate_suffix[i + 1] + sorted[i].rate;
        }
        let mut burst_prefix = vec![0.0; n + 1];
        for i in 0..n {
            burst_prefix[i + 1] = burst_prefix[i] + sorted[i].burst;
        }
        Ok(FlowSet {
            flows: sorted,
            rate_suffix,
            burst_prefix,
        })
    }

    /// Parses `{"flows":[{"r":..,"b":..,"d":..,"l":..}, ...]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: FlowSetFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidProfile(format!("malformed flow-set JSON: {e}")))?;
        FlowSet::new(file.flows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FlowSetFile {
            flows: self.flows.clone(),
        })
        .expect("flow profiles always serialize")
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn flows(&self) -> &[FlowProfile] {
        &self.flows
    }

    pub fn flow(&self, i: usize) -> &FlowProfile {
        &self.flows[i]
    }

    pub fn rates(&self) -> impl Iterator<Item = f64> + '_ {
        self.flows.iter().map(|f| f.rate)
    }

    pub fn bursts(&self) -> impl Iterator<Item = f64> + '_ {
        self.flows.iter().map(|f| f.burst)
    }

    pub fn deadlines(&self) -> impl Iterator<Item = f64> + '_ {
        self.flows.iter().map(|f| f.deadline)
    }

    /// Sum of rates of flows `i..n`; zero for `i == n`.
    pub fn rate_from(&self, i: usize) -> f64 {
        self.rate_suffix[i]
    }

    /// Sum of bursts of flows `0..=i`.
    pub fn burst_through(&self, i: usize) -> f64 {
        self.burst_prefix[i + 1]
    }

    pub fn total_rate(&self) -> f64 {
        self.rate_suffix[0]
    }

    pub fn total_burst(&self) -> f64 {
        self.burst_prefix[self.flows.len()]
    }

    /// Sum of bursts of flows `i..n`.
    pub fn burst_from(&self, i: usize) -> f64 {
        self.total_burst() - self.burst_prefix[i]
    }

    pub fn min_deadline(&self) -> f64 {
        self.flows[self.flows.len() - 1].deadline
    }

    pub fn max_deadline(&self) -> f64 {
        self.flows[0].deadline
    }

    /// Copy with every rate and burst (and packet size) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        FlowSet::new(
            self.flows
                .iter()
                .map(|f| FlowProfile {
                    rate: f.rate * factor,
                    burst: f.burst * factor,
                    deadline: f.deadline,
                    max_packet: f.max_packet * factor,
                })
                .collect(),
        )
    }

    pub(crate) fn check_bandwidth(&self, bandwidth: f64) -> Result<()> {
        if !(bandwidth >= self.total_rate()) {
            return Err(Error::InsufficientBandwidth {
                bandwidth,
                required: self.total_rate(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FlowSetFile {
    flows: Vec<FlowProfile>,
}

/// Reshaped bursts `b'`, one per flow, in flow-set order. Rates are unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReshapingPlan {
    bursts: Vec<f64>,
}

impl ReshapingPlan {
    pub fn new(fs: &FlowSet, bursts: Vec<f64>) -> Result<Self> {
        if bursts.len() != fs.len() {
            return Err(Error::InvalidPlan(format!(
                "plan has {} entries for {} flows",
                bursts.len(),
                fs.len()
            )));
        }
        for (i, (&shaped, flow)) in bursts.iter().zip(fs.flows()).enumerate() {
            if !(shaped >= 0.0 && shaped <= flow.burst) {
                return Err(Error::InvalidPlan(format!(
                    "flow {i}: reshaped burst {shaped} outside [0, {}]",
                    flow.burst
                )));
            }
        }
        Ok(ReshapingPlan { bursts })
    }

    /// The no-op plan `b' = b`.
    pub fn identity(fs: &FlowSet) -> Self {
        ReshapingPlan {
            bursts: fs.bursts().collect(),
        }
    }

    pub fn bursts(&self) -> &[f64] {
        &self.bursts
    }

    pub fn len(&self) -> usize {
        self.bursts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bursts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.bursts.iter().sum()
    }

    /// Sum of reshaped bursts of flows `i..n`; zero for `i >= n`.
    pub fn shaped_from(&self, i: usize) -> f64 {
        self.bursts.get(i..).map_or(0.0, |s| s.iter().sum())
    }

    /// Sum of reshaped bursts of flows `0..=i`.
    pub fn shaped_through(&self, i: usize) -> f64 {
        self.bursts[..=i].iter().sum()
    }

    /// Reshaping delay `(b_i - b'_i) / r_i` of every flow.
    pub fn reshaping_delays(&self, fs: &FlowSet) -> Vec<f64> {
        fs.flows()
            .iter()
            .zip(&self.bursts)
            .map(|(f, &s)| f.reshaping_delay(s))
            .collect()
    }
}

/// Scheduler regimes covered by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheduler {
    Edf,
    StaticPriority,
    StaticPriorityShaped,
    Fifo,
    FifoShaped,
}

impl Scheduler {
    pub const ALL: [Scheduler; 5] = [
        Scheduler::Edf,
        Scheduler::StaticPriority,
        Scheduler::StaticPriorityShaped,
        Scheduler::Fifo,
        Scheduler::FifoShaped,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheduler::Edf => "edf",
            Scheduler::StaticPriority => "sp",
            Scheduler::StaticPriorityShaped => "sp-shaped",
            Scheduler::Fifo => "fifo",
            Scheduler::FifoShaped => "fifo-shaped",
        }
    }

    pub fn is_shaped(self) -> bool {
        matches!(
            self,
            Scheduler::StaticPriorityShaped | Scheduler::FifoShaped
        )
    }
}

impl std::str::FromStr for Scheduler {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Scheduler::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheduler '{s}'"))
    }
}

/// Outcome of a minimum-bandwidth solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub scheduler: Scheduler,
    pub r_min: f64,
    pub plan: Option<ReshapingPlan>,
    /// Worst-case delay of every flow at `r_min`, in flow-set order.
    pub delays: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(raw: &[(f64, f64, f64)]) -> Result<FlowSet> {
        FlowSet::new(
            raw.iter()
                .map(|&(r, b, d)| FlowProfile::new(r, b, d).unwrap())
                .collect(),
        )
    }

    #[test]
    fn two_flow_example_aggregates() {
        let fs = set(&[(1.0, 45.0, 10.0), (1.0, 5.0, 1.0)]).unwrap();
        assert_eq!(fs.rate_from(0), 2.0);
        assert_eq!(fs.rate_from(1), 1.0);
        assert_eq!(fs.rate_from(2), 0.0);
        assert_eq!(fs.burst_through(1), 50.0);
        assert_eq!(fs.burst_from(1), 5.0);
    }

    #[test]
    fn input_order_is_normalized() {
        let fs = set(&[(1.0, 5.0, 1.0), (1.0, 45.0, 10.0)]).unwrap();
        assert_eq!(fs.flow(0).deadline, 10.0);
        assert_eq!(fs.flow(1).deadline, 1.0);
    }

    #[test]
    fn singleton() {
        let fs = set(&[(3.0, 7.0, 2.0)]).unwrap();
        assert_eq!(fs.len(), 1);
        assert_eq!(fs.rate_from(0), 3.0);
    }

    #[test]
    fn equal_deadlines_rejected() {
        let err = set(&[(1.0, 1.0, 1.0), (1.0, 1.0, 1.0)]).unwrap_err();
        assert!(matches!(err, Error::EqualDeadlines { .. }), "{err:?}");
    }

    #[test]
    fn empty_rejected() {
        assert_eq!(FlowSet::new(vec![]).unwrap_err(), Error::EmptyFlowSet);
    }

    #[test]
    fn invalid_profiles() {
        assert!(FlowProfile::new(0.0, 1.0, 1.0).is_err());
        assert!(FlowProfile::new(-1.0, 1.0, 1.0).is_err());
        assert!(FlowProfile::new(1.0, -1.0, 1.0).is_err());
        assert!(FlowProfile::new(1.0, 1.0, 0.0).is_err());
        assert!(FlowProfile::new(1.0, 1.0, f64::INFINITY).is_err());
        assert!(FlowProfile::new(1.0, 1.0, f64::NAN).is_err());
        assert!(FlowProfile::with_packet(1.0, 1.0, 1.0, 2.0).is_err());
        // zero burst is a pure-rate flow
        assert!(FlowProfile::new(2.0, 0.0, 3.0).is_ok());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let fs =
            FlowSet::from_json(r#"{"flows":[{"r":1,"b":45,"d":10},{"r":1,"b":5,"d":1,"l":0.5}]}"#)
                .unwrap();
        assert_eq!(fs.flow(1).max_packet, 0.5);
        assert_eq!(FlowSet::from_json(&fs.to_json()).unwrap(), fs);
        let bad = FlowSet::from_json(r#"{"flows":[{"r":0,"b":45,"d":10}]}"#).unwrap_err();
        assert!(matches!(bad, Error::InvalidProfile(_)));
        let dup = FlowSet::from_json(r#"{"flows":[{"r":1,"b":1,"d":2},{"r":2,"b":1,"d":2}]}"#)
            .unwrap_err();
        assert!(matches!(dup, Error::EqualDeadlines { .. }));
    }

    #[test]
    fn plan_bounds() {
        let fs = set(&[(1.0, 5.0, 1.4), (4.0, 5.0, 1.25)]).unwrap();
        let plan = ReshapingPlan::new(&fs, vec![5.0, 0.0]).unwrap();
        assert_eq!(plan.shaped_from(1), 0.0);
        assert_eq!(plan.shaped_from(2), 0.0);
        assert_eq!(plan.shaped_through(1), 5.0);
        assert_eq!(plan.reshaping_delays(&fs), vec![0.0, 1.25]);
        assert!(ReshapingPlan::new(&fs, vec![5.0, 6.0]).is_err());
        assert!(ReshapingPlan::new(&fs, vec![-0.1, 0.0]).is_err());
        assert!(ReshapingPlan::new(&fs, vec![5.0]).is_err());
    }

    #[test]
    fn scheduler_names_round_trip() {
        for k in Scheduler::ALL {
            assert_eq!(k.name().parse::<Scheduler>().unwrap(), k);
        }
    }
}
