//! Monte Carlo and grid studies of the relative bandwidth savings between
//! schedulers.
//!
//! Trials draw `b_i ~ U(1, 10)` for every flow, then `r_i ~ U(0, sum b)`.
//! Trial `k` uses `ChaCha8Rng::seed_from_u64(seed)` switched to stream `k`,
//! so each trial is reproducible on its own and results do not depend on
//! how the trials are scheduled.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flow_model::{FlowProfile, FlowSet};
use crate::solvers::{all_minima, two_flow_closed_forms, Minima};

/// Critical value of the normal approximation behind the 95% interval.
const Z_95: f64 = 1.96;

/// A named vector of per-flow deadlines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeadlineScenario {
    pub name: String,
    pub deadlines: Vec<f64>,
}

const BUILTIN: [(&str, [f64; 10]); 8] = [
    ("d11", [1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1]),
    (
        "d21",
        [1.0, 0.95, 0.9, 0.85, 0.8, 0.3, 0.25, 0.2, 0.15, 0.1],
    ),
    (
        "d22",
        [1.0, 0.96, 0.93, 0.9, 0.86, 0.83, 0.8, 0.2, 0.15, 0.1],
    ),
    (
        "d23",
        [1.0, 0.95, 0.9, 0.3, 0.26, 0.23, 0.2, 0.16, 0.13, 0.1],
    ),
    (
        "d31",
        [1.0, 0.95, 0.9, 0.6, 0.55, 0.5, 0.45, 0.2, 0.15, 0.1],
    ),
    (
        "d32",
        [1.0, 0.68, 0.65, 0.62, 0.6, 0.57, 0.55, 0.53, 0.5, 0.1],
    ),
    (
        "d33",
        [1.0, 0.6, 0.28, 0.25, 0.23, 0.2, 0.17, 0.15, 0.12, 0.1],
    ),
    (
        "d34",
        [1.0, 0.97, 0.95, 0.93, 0.9, 0.88, 0.85, 0.82, 0.6, 0.1],
    ),
];

impl DeadlineScenario {
    /// Names of the built-in scenarios, in table order.
    pub const NAMES: [&'static str; 8] = ["d11", "d21", "d22", "d23", "d31", "d32", "d33", "d34"];

    /// One of the eight built-in ten-flow scenarios.
    pub fn builtin(name: &str) -> Option<Self> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(n, d)| DeadlineScenario {
                name: n.to_string(),
                deadlines: d.to_vec(),
            })
    }

    pub fn all() -> Vec<Self> {
        Self::NAMES
            .iter()
            .filter_map(|n| Self::builtin(n))
            .collect()
    }

    /// A user-supplied scenario; deadlines must be positive and distinct.
    pub fn custom(name: impl Into<String>, deadlines: Vec<f64>) -> Result<Self> {
        let scenario = DeadlineScenario {
            name: name.into(),
            deadlines,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Reads `{"name": .., "deadlines": [..]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: DeadlineScenario = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("scenario: {e}")))?;
        scenario.validate()?;
        Ok(scenario)
    }

    fn validate(&self) -> Result<()> {
        if self.deadlines.is_empty() {
            return Err(Error::EmptyFlowSet);
        }
        if let Some(d) = self
            .deadlines
            .iter()
            .find(|d| !(d.is_finite() && **d > 0.0))
        {
            return Err(Error::InvalidProfile(format!(
                "deadline {d} must be positive"
            )));
        }
        // FlowSet::new reports duplicates with their indices.
        let probe = self
            .deadlines
            .iter()
            .map(|&d| FlowProfile::new(1.0, 1.0, d))
            .collect::<Result<Vec<_>>>()?;
        FlowSet::new(probe).map(|_| ())
    }

    /// The flow set of trial `trial` under master seed `seed`.
    pub fn sample(&self, seed: u64, trial: u64) -> Result<FlowSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial);
        let bursts: Vec<f64> = self
            .deadlines
            .iter()
            .map(|_| rng.random_range(1.0..10.0))
            .collect();
        let total: f64 = bursts.iter().sum();
        let flows = bursts
            .iter()
            .zip(&self.deadlines)
            .map(|(&b, &d)| {
                // U(0, total) with the zero endpoint redrawn.
                let r = loop {
                    let r: f64 = rng.random_range(0.0..total);
                    if r > 0.0 {
                        break r;
                    }
                };
                FlowProfile::new(r, b, d)
            })
            .collect::<Result<Vec<_>>>()?;
        FlowSet::new(flows)
    }
}

/// Relative difference between two minimal bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// (SP shaped - EDF) / SP shaped.
    SpShapedVsEdf,
    /// (FIFO shaped - EDF) / FIFO shaped.
    FifoShapedVsEdf,
    /// (FIFO shaped - SP shaped) / FIFO shaped; may be negative.
    FifoShapedVsSpShaped,
    /// (SP - SP shaped) / SP.
    SpReshapingGain,
    /// (FIFO - FIFO shaped) / FIFO.
    FifoReshapingGain,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::SpShapedVsEdf,
        Metric::FifoShapedVsEdf,
        Metric::FifoShapedVsSpShaped,
        Metric::SpReshapingGain,
        Metric::FifoReshapingGain,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SpShapedVsEdf => "sp-shaped-vs-edf",
            Metric::FifoShapedVsEdf => "fifo-shaped-vs-edf",
            Metric::FifoShapedVsSpShaped => "fifo-shaped-vs-sp-shaped",
            Metric::SpReshapingGain => "sp-reshaping-gain",
            Metric::FifoReshapingGain => "fifo-reshaping-gain",
        }
    }

    pub fn eval(self, m: &Minima) -> f64 {
        let (num, den) = match self {
            Metric::SpShapedVsEdf => (m.sp_shaped - m.edf, m.sp_shaped),
            Metric::FifoShapedVsEdf => (m.fifo_shaped - m.edf, m.fifo_shaped),
            Metric::FifoShapedVsSpShaped => (m.fifo_shaped - m.sp_shaped, m.fifo_shaped),
            Metric::SpReshapingGain => (m.sp - m.sp_shaped, m.sp),
            Metric::FifoReshapingGain => (m.fifo - m.fifo_shaped, m.fifo),
        };
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown metric '{s}'")))
    }
}

/// Sample statistics of one metric over a scenario's trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioStats {
    pub metric: Metric,
    pub scenario: String,
    pub mean: f64,
    pub std: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
}

impl ScenarioStats {
    fn from_samples(metric: Metric, scenario: &str, xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let half = Z_95 * std / (n as f64).sqrt();
        ScenarioStats {
            metric,
            scenario: scenario.to_string(),
            mean,
            std,
            ci_lo: mean - half,
            ci_hi: mean + half,
            trials: n,
        }
    }
}

/// Minimal bandwidths of every scheduler for each trial, in trial order.
pub fn scenario_minima(
    scenario: &DeadlineScenario,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Minima>> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    scenario.validate()?;
    exec.map_range(trials, |t| all_minima(&scenario.sample(seed, t as u64)?))
        .into_iter()
        .collect()
}

/// One row per metric, in [`Metric::ALL`] order.
pub fn run_scenario(
    scenario: &DeadlineScenario,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ScenarioStats>> {
    let minima = scenario_minima(scenario, trials, seed, exec)?;
    Ok(Metric::ALL
        .into_iter()
        .map(|metric| {
            let xs: Vec<f64> = minima.iter().map(|m| metric.eval(m)).collect();
            ScenarioStats::from_samples(metric, &scenario.name, &xs)
        })
        .collect())
}

/// Sorted per-trial reshaping gains.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainCdf {
    pub scenario: String,
    pub sp: Vec<f64>,
    pub fifo: Vec<f64>,
}

pub fn reshaping_gain_cdf(
    scenario: &DeadlineScenario,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<GainCdf> {
    let minima = scenario_minima(scenario, trials, seed, exec)?;
    let sorted = |metric: Metric| {
        let mut xs: Vec<f64> = minima.iter().map(|m| metric.eval(m)).collect();
        xs.sort_by(f64::total_cmp);
        xs
    };
    Ok(GainCdf {
        scenario: scenario.name.clone(),
        sp: sorted(Metric::SpReshapingGain),
        fifo: sorted(Metric::FifoReshapingGain),
    })
}

/// `count` evenly spaced points `lo + (hi - lo) k / count`, `k = 1..=count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, count: usize) -> Self {
        Axis { lo, hi, count }
    }

    pub fn points(&self) -> Vec<f64> {
        (1..=self.count)
            .map(|k| self.lo + (self.hi - self.lo) * k as f64 / self.count as f64)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.count == 0 || !(self.lo >= 0.0 && self.hi > self.lo && self.hi.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "axis ({}, {}] with {} points",
                self.lo, self.hi, self.count
            )));
        }
        Ok(())
    }
}

impl Default for Axis {
    fn default() -> Self {
        Axis::new(0.0, 4.0, 100)
    }
}

/// Metric over a (d1, d2) grid; `cells[i][j]` belongs to `d1[i]`, `d2[j]`
/// and is `None` where `d2 >= d1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Heatmap {
    pub metric: Metric,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub cells: Vec<Vec<Option<f64>>>,
}

/// Two-flow grid study. `env1` and `env2` are the `(r, b)` envelopes of the
/// low- and high-priority flow.
pub fn heatmap(
    env1: (f64, f64),
    env2: (f64, f64),
    d1_axis: Axis,
    d2_axis: Axis,
    metric: Metric,
    exec: Execution,
) -> Result<Heatmap> {
    d1_axis.validate()?;
    d2_axis.validate()?;
    FlowProfile::new(env1.0, env1.1, 1.0)?;
    FlowProfile::new(env2.0, env2.1, 1.0)?;
    let d1 = d1_axis.points();
    let d2 = d2_axis.points();
    let rows: Result<Vec<Vec<Option<f64>>>> = exec
        .map_slice(&d1, |&a| {
            d2.iter()
                .map(|&b| {
                    if b >= a {
                        return Ok(None);
                    }
                    let f1 = FlowProfile::new(env1.0, env1.1, a)?;
                    let f2 = FlowProfile::new(env2.0, env2.1, b)?;
                    Ok(Some(metric.eval(&two_flow_closed_forms(&f1, &f2)?)))
                })
                .collect()
        })
        .into_iter()
        .collect();
    Ok(Heatmap {
        metric,
        d1,
        d2,
        cells: rows?,
    })
}

/// Shortest decimal that survives rounding to 10 significant digits.
pub fn sig10(x: f64) -> String {
    let rounded: f64 = format!("{x:.9e}").parse().unwrap_or(x);
    format!("{rounded}")
}

pub fn stats_csv(rows: &[ScenarioStats]) -> String {
    let mut out = String::from("metric,scenario,mean,std,ci_lo,ci_hi,trials\n");
    for s in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.metric,
            s.scenario,
            sig10(s.mean),
            sig10(s.std),
            sig10(s.ci_lo),
            sig10(s.ci_hi),
            s.trials
        );
    }
    out
}

impl Heatmap {
    /// Header row holds the d2 axis, first column the d1 axis.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d1\\d2");
        for b in &self.d2 {
            let _ = write!(out, ",{}", sig10(*b));
        }
        out.push('\n');
        for (a, row) in self.d1.iter().zip(&self.cells) {
            out.push_str(&sig10(*a));
            for cell in row {
                out.push(',');
                if let Some(v) = cell {
                    out.push_str(&sig10(*v));
                }
            }
            out.push('\n');
        }
        out
    }
}

impl GainCdf {
    /// One row per rank: `rank,quantile,sp,fifo`.
    pub fn to_csv(&self) -> String {
        let n = self.sp.len();
        let mut out = String::from("rank,quantile,sp,fifo\n");
        for (k, (s, f)) in self.sp.iter().zip(&self.fifo).enumerate() {
            let q = (k + 1) as f64 / n as f64;
            let _ = writeln!(out, "{},{},{},{}", k + 1, sig10(q), sig10(*s), sig10(*f));
        }
        out
    }
}
