//! Discretized fluid simulation of ingress shapers feeding one link.
//!
//! Time advances in steps of `dt`. Each flow emits its burst at its offset
//! and then `r * dt` per step. A greedy token-bucket shaper per flow releases
//! data to the link, which serves `R * dt` per step under strict priority,
//! EDF or FIFO. Every chunk of data carries its emission time, so per-bit
//! delays (shaper plus link) are exact up to the grid.

use std::collections::VecDeque;

use serde::Serialize;

use crate::delay_bounds::{fifo_delay_shaped, sp_delay_shaped};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::flow_model::{FlowSet, ReshapingPlan, Scheduler};
use crate::solvers::{min_bw_edf, min_bw_edf_reshaped};

/// Largest flow count accepted by an exhaustive offset grid.
pub const OFFSET_SEARCH_LIMIT: usize = 3;

/// Per-flow time at which the burst is emitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalPattern {
    pub offsets: Vec<f64>,
}

impl ArrivalPattern {
    /// Every flow bursts at time zero.
    pub fn synchronized(n: usize) -> Self {
        ArrivalPattern {
            offsets: vec![0.0; n],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.offsets.len() != n {
            return Err(Error::InvalidConfig(format!(
                "{} offsets for {n} flows",
                self.offsets.len()
            )));
        }
        if let Some(t) = self.offsets.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "offset {t} must be finite and >= 0"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scheduler: Scheduler,
    /// Reshaped bursts; `None` means no shapers.
    pub plan: Option<ReshapingPlan>,
    /// Defaults to the smallest deadline / 1000.
    pub dt: Option<f64>,
    /// Hard stop; defaults to a multiple of the busy-period estimate.
    pub horizon: Option<f64>,
}

impl SimConfig {
    pub fn new(scheduler: Scheduler) -> Self {
        SimConfig {
            scheduler,
            plan: None,
            dt: None,
            horizon: None,
        }
    }

    pub fn with_plan(mut self, plan: Option<ReshapingPlan>) -> Self {
        self.plan = plan;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn step(&self, fs: &FlowSet) -> f64 {
        self.dt.unwrap_or(fs.min_deadline() / 1000.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    /// Largest observed delay per flow.
    pub max_delay: Vec<f64>,
    pub dt: f64,
    pub steps: usize,
    /// Departures never exceeded `R t` nor the arrivals so far.
    pub conserved: bool,
    /// The horizon cut the run before the observed window drained.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy)]
struct Chunk {
    stamp: f64,
    amount: f64,
}

// FIFO service unit: everything released to the link in one step, served
// proportionally across flows.
struct Group {
    total: f64,
    progress: f64,
    members: Vec<Member>,
}

struct Member {
    flow: usize,
    stamp: f64,
    amount: f64,
    // fraction of the group's progress at which this chunk is done
    done_at: f64,
    done: bool,
}

enum LinkQueue {
    PerFlow(Vec<VecDeque<Chunk>>),
    Fifo(VecDeque<Group>),
}

struct Shaper {
    burst: Option<f64>,
    rate: f64,
    arrived: f64,
    released: f64,
    // min over past steps of (arrivals before step j) - r t_j
    floor: f64,
    queue: VecDeque<Chunk>,
}

impl Shaper {
    fn admit(&mut self, t: f64, amount: f64) {
        self.floor = self.floor.min(self.arrived - self.rate * t);
        if amount > 0.0 {
            self.arrived += amount;
            self.queue.push_back(Chunk { stamp: t, amount });
        }
    }

    fn release(&mut self, t: f64, out: &mut Vec<Chunk>) {
        let target = match self.burst {
            Some(b) => self.arrived.min(self.floor + b + self.rate * t),
            None => self.arrived,
        };
        let mut left = target - self.released;
        if left <= 0.0 {
            return;
        }
        self.released = target;
        while left > 0.0 {
            let Some(front) = self.queue.front_mut() else {
                break;
            };
            if front.amount <= left * (1.0 + 1e-12) {
                left -= front.amount;
                out.push(*front);
                self.queue.pop_front();
            } else {
                front.amount -= left;
                out.push(Chunk {
                    stamp: front.stamp,
                    amount: left,
                });
                left = 0.0;
            }
        }
    }
}

fn check_grid(fs: &FlowSet, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidConfig(format!("time step {dt} must be > 0")));
    }
    let max = fs.min_deadline() / 100.0;
    if dt > max {
        return Err(Error::GridTooCoarse { dt, max });
    }
    Ok(())
}

/// Runs one arrival pattern and reports the largest delay of every flow.
///
/// Delays are tracked for data emitted up to the last offset plus the
/// largest reshaping delay plus the largest deadline; the run stops once all
/// of it has left the link.
pub fn simulate(
    fs: &FlowSet,
    bandwidth: f64,
    cfg: &SimConfig,
    pattern: &ArrivalPattern,
) -> Result<SimReport> {
    fs.check_bandwidth(bandwidth)?;
    let n = fs.len();
    pattern.validate(n)?;
    let dt = cfg.step(fs);
    check_grid(fs, dt)?;
    if let Some(plan) = &cfg.plan {
        if plan.len() != n {
            return Err(Error::InvalidPlan(format!(
                "plan has {} entries for {n} flows",
                plan.len()
            )));
        }
    }

    let start: Vec<usize> = pattern
        .offsets
        .iter()
        .map(|t| (t / dt).round() as usize)
        .collect();
    let last_offset = pattern.offsets.iter().copied().fold(0.0, f64::max);
    let max_hold = cfg
        .plan
        .as_ref()
        .map(|p| p.reshaping_delays(fs).into_iter().fold(0.0, f64::max))
        .unwrap_or(0.0);
    let window_end = last_offset + max_hold + fs.max_deadline();
    let horizon = cfg.horizon.unwrap_or_else(|| {
        let gap = (bandwidth - fs.total_rate()).max(1e-2 * bandwidth);
        last_offset + max_hold + 3.0 * (fs.max_deadline() + fs.total_burst() / gap)
    });
    let max_steps = (horizon / dt).ceil() as usize + 1;

    let mut shapers: Vec<Shaper> = (0..n)
        .map(|i| Shaper {
            burst: cfg.plan.as_ref().map(|p| p.bursts()[i]),
            rate: fs.flow(i).rate,
            arrived: 0.0,
            released: 0.0,
            floor: 0.0,
            queue: VecDeque::new(),
        })
        .collect();
    let mut link = match cfg.scheduler {
        Scheduler::Fifo | Scheduler::FifoShaped => LinkQueue::Fifo(VecDeque::new()),
        _ => LinkQueue::PerFlow(vec![VecDeque::new(); n]),
    };
    let deadlines: Vec<f64> = fs.deadlines().collect();
    let mut track = Tracker {
        window_end,
        max_delay: vec![0.0; n],
        watched: vec![0.0; n],
        watched_out: vec![0.0; n],
    };
    let mut total_in = 0.0;
    let mut total_out = 0.0;
    let mut conserved = true;
    let mut released = Vec::new();
    let scale = fs.total_burst().max(1.0);

    let mut step = 0;
    let mut truncated = true;
    while step < max_steps {
        let t = step as f64 * dt;
        let mut groups: Vec<Member> = Vec::new();
        let mut group_total = 0.0;
        let mut per_flow_amount = vec![0.0; n];
        for i in 0..n {
            let f = fs.flow(i);
            let amount = if step == start[i] {
                f.burst
            } else if step > start[i] {
                f.rate * dt
            } else {
                0.0
            };
            if t <= window_end {
                track.watched[i] += amount;
            }
            total_in += amount;
            shapers[i].admit(t, amount);
            released.clear();
            shapers[i].release(t, &mut released);
            match &mut link {
                LinkQueue::PerFlow(queues) => queues[i].extend(released.iter().copied()),
                LinkQueue::Fifo(_) => {
                    for c in &released {
                        per_flow_amount[i] += c.amount;
                        groups.push(Member {
                            flow: i,
                            stamp: c.stamp,
                            amount: c.amount,
                            done_at: per_flow_amount[i],
                            done: false,
                        });
                        group_total += c.amount;
                    }
                }
            }
        }

        let mut capacity = bandwidth * dt;
        let mut clock = t;
        match &mut link {
            LinkQueue::Fifo(queue) => {
                if group_total > 0.0 {
                    for m in &mut groups {
                        m.done_at /= per_flow_amount[m.flow];
                    }
                    queue.push_back(Group {
                        total: group_total,
                        progress: 0.0,
                        members: groups,
                    });
                }
                while capacity > 0.0 {
                    let Some(g) = queue.front_mut() else { break };
                    let remaining = (1.0 - g.progress) * g.total;
                    let served = remaining.min(capacity);
                    let reach = if served >= remaining {
                        1.0
                    } else {
                        g.progress + served / g.total
                    };
                    for m in g
                        .members
                        .iter_mut()
                        .filter(|m| !m.done && m.done_at <= reach + 1e-12)
                    {
                        m.done = true;
                        let finish = clock + (m.done_at - g.progress) * g.total / bandwidth;
                        track.record(m.flow, m.stamp, m.amount, finish);
                    }
                    clock += served / bandwidth;
                    capacity -= served;
                    total_out += served;
                    g.progress = reach;
                    if reach >= 1.0 {
                        queue.pop_front();
                    }
                }
            }
            LinkQueue::PerFlow(queues) => {
                while capacity > 0.0 {
                    let pick = match cfg.scheduler {
                        Scheduler::Edf => {
                            (0..n).filter(|&i| !queues[i].is_empty()).min_by(|&a, &b| {
                                let ka = queues[a][0].stamp + deadlines[a];
                                let kb = queues[b][0].stamp + deadlines[b];
                                ka.total_cmp(&kb).then(b.cmp(&a))
                            })
                        }
                        _ => (0..n).rev().find(|&i| !queues[i].is_empty()),
                    };
                    let Some(i) = pick else { break };
                    let front = queues[i].front_mut().expect("picked a nonempty queue");
                    let served = front.amount.min(capacity);
                    clock += served / bandwidth;
                    capacity -= served;
                    total_out += served;
                    if served >= front.amount {
                        let c = queues[i].pop_front().expect("nonempty");
                        track.record(i, c.stamp, c.amount, clock);
                    } else {
                        front.amount -= served;
                        track.count(i, front.stamp, served);
                    }
                }
            }
        }

        if total_out > bandwidth * (t + dt) + 1e-9 * scale || total_out > total_in + 1e-9 * scale {
            conserved = false;
        }
        step += 1;
        if t >= window_end && track.drained() {
            truncated = false;
            break;
        }
    }

    Ok(SimReport {
        max_delay: track.max_delay,
        dt,
        steps: step,
        conserved,
        truncated,
    })
}

struct Tracker {
    window_end: f64,
    max_delay: Vec<f64>,
    // data emitted inside the window, and how much of it has departed
    watched: Vec<f64>,
    watched_out: Vec<f64>,
}

impl Tracker {
    /// `amount` of a chunk stamped `stamp` finished at `finish`.
    fn record(&mut self, flow: usize, stamp: f64, amount: f64, finish: f64) {
        if stamp <= self.window_end {
            self.max_delay[flow] = self.max_delay[flow].max(finish - stamp);
        }
        self.count(flow, stamp, amount);
    }

    /// Served data whose last bit is still queued.
    fn count(&mut self, flow: usize, stamp: f64, amount: f64) {
        if stamp <= self.window_end {
            self.watched_out[flow] += amount;
        }
    }

    fn drained(&self) -> bool {
        self.watched
            .iter()
            .zip(&self.watched_out)
            .all(|(w, o)| *o >= w * (1.0 - 1e-9) - 1e-12)
    }
}

/// Analytic per-flow delay bound the simulation is checked against.
///
/// EDF has no closed-form per-flow bound below the deadline; it guarantees
/// every deadline once the bandwidth reaches its (reshaped) minimum.
pub fn analytic_bound(
    fs: &FlowSet,
    bandwidth: f64,
    scheduler: Scheduler,
    plan: Option<&ReshapingPlan>,
) -> Result<Vec<f64>> {
    let identity = ReshapingPlan::identity(fs);
    let plan = plan.unwrap_or(&identity);
    match scheduler {
        Scheduler::Edf => {
            let required = if plan == &identity {
                min_bw_edf(fs).r_min
            } else {
                min_bw_edf_reshaped(fs, plan)?
            };
            if bandwidth < required * (1.0 - 1e-12) {
                return Err(Error::InsufficientBandwidth {
                    bandwidth,
                    required,
                });
            }
            Ok(fs.deadlines().collect())
        }
        Scheduler::StaticPriority | Scheduler::StaticPriorityShaped => {
            sp_delay_shaped(fs, plan, bandwidth)
        }
        Scheduler::Fifo | Scheduler::FifoShaped => fifo_delay_shaped(fs, plan, bandwidth),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchReport {
    pub max_delay: Vec<f64>,
    pub patterns: usize,
    pub conserved: bool,
    pub truncated: bool,
}

/// Candidate burst times for one flow: an even grid over the window plus
/// every flow's reshaping delay, where the worst cases line up.
fn candidate_offsets(fs: &FlowSet, plan: Option<&ReshapingPlan>, grid: usize) -> Vec<f64> {
    let holds = plan.map(|p| p.reshaping_delays(fs)).unwrap_or_default();
    let longest = holds.iter().copied().fold(0.0, f64::max);
    let width = if longest > 0.0 {
        longest
    } else {
        fs.max_deadline()
    };
    let mut points: Vec<f64> = (0..grid)
        .map(|k| width * k as f64 / (grid - 1) as f64)
        .chain(holds)
        .chain(std::iter::once(0.0))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    points
}

/// Worst observed delay per flow over a grid of burst offsets.
///
/// With `offset_grid <= 1` only the synchronized pattern is run. Larger grids
/// are exhaustive over all offset combinations and need at most
/// [`OFFSET_SEARCH_LIMIT`] flows.
pub fn adversarial_search(
    fs: &FlowSet,
    bandwidth: f64,
    cfg: &SimConfig,
    offset_grid: usize,
    exec: Execution,
) -> Result<SearchReport> {
    let n = fs.len();
    let patterns: Vec<ArrivalPattern> = if offset_grid <= 1 {
        vec![ArrivalPattern::synchronized(n)]
    } else {
        if n > OFFSET_SEARCH_LIMIT {
            return Err(Error::TooManyFlows {
                count: n,
                limit: OFFSET_SEARCH_LIMIT,
            });
        }
        let points = candidate_offsets(fs, cfg.plan.as_ref(), offset_grid);
        let mut all = vec![Vec::with_capacity(n)];
        for _ in 0..n {
            all = all
                .into_iter()
                .flat_map(|prefix: Vec<f64>| {
                    points.iter().map(move |&p| {
                        let mut next = prefix.clone();
                        next.push(p);
                        next
                    })
                })
                .collect();
        }
        // shifting every offset by the same amount changes nothing
        all.retain(|o| o.contains(&0.0));
        all.into_iter()
            .map(|offsets| ArrivalPattern { offsets })
            .collect()
    };
    let reports = exec.map_slice(&patterns, |p| simulate(fs, bandwidth, cfg, p));
    let mut out = SearchReport {
        max_delay: vec![0.0; n],
        patterns: patterns.len(),
        conserved: true,
        truncated: false,
    };
    for report in reports {
        let report = report?;
        for (m, d) in out.max_delay.iter_mut().zip(&report.max_delay) {
            *m = m.max(*d);
        }
        out.conserved &= report.conserved;
        out.truncated |= report.truncated;
    }
    Ok(out)
}
