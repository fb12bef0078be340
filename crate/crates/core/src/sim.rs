//! Event-driven simulation of the gossip process itself.
//!
//! All edge clocks are merged into one Poisson clock of rate `Λ = Σ λ_e`;
//! each ring picks edge `e` with probability `λ_e / Λ` and applies
//! `N_v ← max(N_v, N_u)`, the source carrying `N_0(t) = t`. This is equal in
//! law to running one clock per edge.

use rand::Rng;
use thiserror::Error;

use crate::exec::{derive_seed, Execution};
use crate::fpp::exponential;
use crate::moments::MAX_ORDER;
use crate::network::GossipNetwork;
use crate::stats::{batch_means_estimate, MomentAccumulator, MomentEstimate};
use crate::subset::{NodeId, NodeSubset, SOURCE};

/// Batches used by the time-average estimator.
pub const TIME_AVERAGE_BATCHES: usize = 30;

/// Pilot replicas used to pick a default burn-in.
pub const PILOT_REPLICAS: u64 = 1000;

/// Largest tolerated fraction of replicas whose subset was never reached
/// from the source by the horizon.
pub const MAX_PENDING_FRACTION: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("network has no edges, nothing can ever be delivered")]
    NoEdges,
    #[error("subset must be non-empty")]
    EmptySubset,
    #[error("subset {0} contains nodes outside the network")]
    UnknownNodes(String),
    #[error("moment order must be in 1..={MAX_ORDER}, got {0}")]
    OrderOutOfRange(usize),
    #[error("at least two replicas are required, got {0}")]
    TooFewReplicas(u64),
    #[error("horizon {horizon} lies before the current time {now}")]
    HorizonInPast { horizon: f64, now: f64 },
    #[error("averaging window [{burn_in}, {horizon}] is empty or invalid")]
    InvalidWindow { burn_in: f64, horizon: f64 },
    #[error("nodes {0} of the subset are unreachable from the source")]
    Unreachable(String),
    #[error("subset {subset}: {pending} of {replicas} replicas had not heard from the source by the horizon")]
    TooManyPending { subset: String, pending: u64, replicas: u64 },
}

/// Live state of one gossip trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    now: f64,
    // index 0 unused, the source timestamp is `now`
    timestamps: Vec<f64>,
    informed_at: Vec<Option<f64>>,
}

impl SimState {
    /// All timestamps zero at time zero.
    pub fn new(net: &GossipNetwork) -> Self {
        let n = net.node_count() + 1;
        SimState { now: 0.0, timestamps: vec![0.0; n], informed_at: vec![None; n] }
    }

    fn reset(&mut self) {
        self.now = 0.0;
        self.timestamps.fill(0.0);
        self.informed_at.fill(None);
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// `N_u(t)`.
    pub fn timestamp(&self, u: NodeId) -> f64 {
        if u == SOURCE {
            self.now
        } else {
            self.timestamps[u]
        }
    }

    /// `X_u(t) = t - N_u(t)`.
    pub fn age(&self, u: NodeId) -> f64 {
        self.now - self.timestamp(u)
    }

    pub fn received_from_source(&self, u: NodeId) -> bool {
        u == SOURCE || self.informed_at[u].is_some()
    }

    /// Time at which `u` first held a timestamp emitted by the source.
    pub fn informed_at(&self, u: NodeId) -> Option<f64> {
        if u == SOURCE {
            Some(0.0)
        } else {
            self.informed_at[u]
        }
    }
}

/// One ring of an edge clock.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub edge: usize,
    pub from: NodeId,
    pub to: NodeId,
    pub old_timestamp: f64,
    pub new_timestamp: f64,
}

/// Superposed clock of every edge in a network.
#[derive(Clone, Debug)]
pub struct EventClock<'a> {
    net: &'a GossipNetwork,
    cumulative: Vec<f64>,
    total: f64,
}

impl<'a> EventClock<'a> {
    pub fn new(net: &'a GossipNetwork) -> Result<Self, SimError> {
        let cumulative: Vec<f64> = net
            .edges()
            .iter()
            .scan(0.0, |acc, e| {
                *acc += e.rate;
                Some(*acc)
            })
            .collect();
        let total = *cumulative.last().ok_or(SimError::NoEdges)?;
        Ok(EventClock { net, cumulative, total })
    }

    pub fn network(&self) -> &'a GossipNetwork {
        self.net
    }

    /// `Λ`.
    pub fn total_rate(&self) -> f64 {
        self.total
    }

    /// Index of the ringing edge, `e` with probability `λ_e / Λ`.
    pub fn pick_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }

    fn fire(&self, state: &mut SimState, edge: usize, time: f64) -> Event {
        let e = self.net.edges()[edge];
        state.now = time;
        let delivered = state.timestamp(e.from);
        let old = state.timestamps[e.to];
        if delivered > old {
            state.timestamps[e.to] = delivered;
        }
        let new = state.timestamps[e.to];
        if new > 0.0 && state.informed_at[e.to].is_none() {
            state.informed_at[e.to] = Some(time);
        }
        Event { time, edge, from: e.from, to: e.to, old_timestamp: old, new_timestamp: new }
    }
}

/// Advances to the next ring: waits `Exp(Λ)`, picks an edge, applies the
/// max-update.
pub fn step<R: Rng + ?Sized>(state: &mut SimState, clock: &EventClock<'_>, rng: &mut R) -> Event {
    let time = state.now + exponential(rng, clock.total);
    let edge = clock.pick_edge(rng);
    clock.fire(state, edge, time)
}

/// Applies every ring before `horizon` and leaves the state at exactly
/// `horizon`. The first ring at or past the horizon is discarded, which is
/// harmless because the clock is memoryless.
pub fn run_until<R: Rng + ?Sized>(
    state: &mut SimState,
    clock: &EventClock<'_>,
    horizon: f64,
    rng: &mut R,
) -> Result<(), SimError> {
    run_until_with(state, clock, horizon, rng, |_| {})
}

/// [`run_until`] reporting every applied event to `on_event`.
pub fn run_until_with<R: Rng + ?Sized>(
    state: &mut SimState,
    clock: &EventClock<'_>,
    horizon: f64,
    rng: &mut R,
    mut on_event: impl FnMut(&Event),
) -> Result<(), SimError> {
    if horizon < state.now {
        return Err(SimError::HorizonInPast { horizon, now: state.now });
    }
    loop {
        let time = state.now + exponential(rng, clock.total);
        if time >= horizon {
            state.now = horizon;
            return Ok(());
        }
        let edge = clock.pick_edge(rng);
        let event = clock.fire(state, edge, time);
        on_event(&event);
    }
}

fn freshest(state: &SimState, subset: NodeSubset) -> f64 {
    subset.iter().map(|u| state.timestamps[u]).fold(0.0, f64::max)
}

/// Minimum age over `subset`, `t - max_{u∈S} N_u(t)`.
pub fn age_of(state: &SimState, subset: NodeSubset) -> f64 {
    state.now - freshest(state, subset)
}

/// First time every member of `subset` had heard from the source, or `None`
/// while some member is still pending.
pub fn detect_t0(state: &SimState, subset: NodeSubset) -> Option<f64> {
    subset.iter().try_fold(0.0, |t0: f64, u| state.informed_at[u].map(|t| t0.max(t)))
}

fn check_args(net: &GossipNetwork, subsets: &[NodeSubset], order: usize) -> Result<(), SimError> {
    if order == 0 || order > MAX_ORDER {
        return Err(SimError::OrderOutOfRange(order));
    }
    for &s in subsets {
        if s.is_empty() {
            return Err(SimError::EmptySubset);
        }
        if !net.contains_subset(s) {
            return Err(SimError::UnknownNodes(s.to_string()));
        }
    }
    Ok(())
}

fn check_reachable(net: &GossipNetwork, subset: NodeSubset) -> Result<(), SimError> {
    let missing: NodeSubset = subset.iter().filter(|&u| !net.reachable_from_source().contains(u)).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(SimError::Unreachable(missing.to_string()))
    }
}

/// Largest `t_0` of `subset` over `pilots` independent trajectories.
pub fn pilot_t0(
    net: &GossipNetwork,
    subset: NodeSubset,
    pilots: u64,
    seed: u64,
    exec: Execution,
) -> Result<f64, SimError> {
    check_args(net, &[subset], 1)?;
    check_reachable(net, subset)?;
    let clock = EventClock::new(net)?;
    Ok(exec.replicate(
        pilots,
        seed,
        || 0.0f64,
        |rng, _, worst| {
            let mut state = SimState::new(net);
            let t0 = loop {
                step(&mut state, &clock, rng);
                if let Some(t0) = detect_t0(&state, subset) {
                    break t0;
                }
            };
            *worst = worst.max(t0);
        },
        |a, b| *a = a.max(b),
    ))
}

/// Default burn-in: twice the largest pilot `t_0`, from
/// [`PILOT_REPLICAS`] trajectories on a seed derived from `seed`.
pub fn default_burn_in(net: &GossipNetwork, subset: NodeSubset, seed: u64, exec: Execution) -> Result<f64, SimError> {
    Ok(2.0 * pilot_t0(net, subset, PILOT_REPLICAS, derive_seed(seed, 0x70_696c_6f74), exec)?)
}

/// Replication estimate for one subset.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationResult {
    pub estimates: Vec<MomentEstimate>,
    /// Replicas in which some member had not heard from the source by the
    /// horizon; they do not enter the estimates.
    pub pending: u64,
    pub replicas: u64,
}

impl ReplicationResult {
    pub fn pending_fraction(&self) -> f64 {
        self.pending as f64 / self.replicas as f64
    }
}

struct ReplicaBatch {
    acc: Vec<MomentAccumulator>,
    pending: Vec<u64>,
    state: Option<SimState>,
}

/// Runs `replicas` independent trajectories to `horizon` and records
/// `X_S(horizon)^k` once per replica for each subset.
pub fn replication_subsets(
    net: &GossipNetwork,
    subsets: &[NodeSubset],
    order: usize,
    replicas: u64,
    horizon: f64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ReplicationResult>, SimError> {
    check_args(net, subsets, order)?;
    if replicas < 2 {
        return Err(SimError::TooFewReplicas(replicas));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SimError::HorizonInPast { horizon, now: 0.0 });
    }
    let clock = EventClock::new(net)?;
    let batch = exec.replicate(
        replicas,
        seed,
        || ReplicaBatch {
            acc: vec![MomentAccumulator::new(order); subsets.len()],
            pending: vec![0; subsets.len()],
            state: None,
        },
        |rng, _, b| {
            let state = b.state.get_or_insert_with(|| SimState::new(net));
            state.reset();
            run_until(state, &clock, horizon, rng).expect("horizon checked");
            for (i, &s) in subsets.iter().enumerate() {
                if detect_t0(state, s).is_some() {
                    b.acc[i].push(age_of(state, s));
                } else {
                    b.pending[i] += 1;
                }
            }
        },
        |total, part| {
            for (t, p) in total.acc.iter_mut().zip(&part.acc) {
                t.merge(p);
            }
            for (t, p) in total.pending.iter_mut().zip(&part.pending) {
                *t += p;
            }
        },
    );
    Ok(batch
        .acc
        .iter()
        .zip(batch.pending)
        .map(|(acc, pending)| ReplicationResult { estimates: acc.estimates(), pending, replicas })
        .collect())
}

/// Replication estimate of `v_S^k`, `k = 1..=K`. Fails when more than
/// [`MAX_PENDING_FRACTION`] of the replicas were still pending at the
/// horizon.
pub fn estimate_moments_replication(
    net: &GossipNetwork,
    subset: NodeSubset,
    order: usize,
    replicas: u64,
    horizon: f64,
    seed: u64,
    exec: Execution,
) -> Result<ReplicationResult, SimError> {
    let result = replication_subsets(net, &[subset], order, replicas, horizon, seed, exec)?.remove(0);
    if result.pending_fraction() > MAX_PENDING_FRACTION {
        return Err(SimError::TooManyPending {
            subset: subset.to_string(),
            pending: result.pending,
            replicas,
        });
    }
    Ok(result)
}

/// Time-average estimate along a single trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeAverage {
    pub estimates: Vec<MomentEstimate>,
    /// `t_0` of the subset on this trajectory, if reached before the horizon.
    pub t0: Option<f64>,
    /// Set when the averaging window opened before `t_0`.
    pub burn_in_before_t0: bool,
    pub events: u64,
}

/// `∫_0^Δ (a + s)^k ds`.
pub fn segment_integral(age: f64, duration: f64, k: usize) -> f64 {
    let p = (k + 1) as i32;
    ((age + duration).powi(p) - age.powi(p)) / p as f64
}

struct Window {
    start: f64,
    end: f64,
    width: f64,
    // integrals[j * order + (k - 1)]
    integrals: Vec<f64>,
    order: usize,
}

impl Window {
    fn boundary(&self, j: usize) -> f64 {
        if j >= TIME_AVERAGE_BATCHES {
            self.end
        } else {
            self.start + j as f64 * self.width
        }
    }

    /// Adds `∫ X^k dt` over `[a, b]`, where the age is `t - freshest`.
    fn add(&mut self, a: f64, b: f64, freshest: f64) {
        let mut lo = a.max(self.start);
        let end = b.min(self.end);
        if lo >= end {
            return;
        }
        let mut j = (((lo - self.start) / self.width) as usize).min(TIME_AVERAGE_BATCHES - 1);
        while j > 0 && lo < self.boundary(j) {
            j -= 1;
        }
        while j + 1 < TIME_AVERAGE_BATCHES && lo >= self.boundary(j + 1) {
            j += 1;
        }
        loop {
            // boundary(TIME_AVERAGE_BATCHES) == self.end >= end, so j stays in range
            let hi = end.min(self.boundary(j + 1));
            let age = lo - freshest;
            for k in 1..=self.order {
                self.integrals[j * self.order + k - 1] += segment_integral(age, hi - lo, k);
            }
            if hi >= end {
                break;
            }
            lo = hi;
            j += 1;
        }
    }
}

/// Time-weighted average of `X_S(t)^k` over `[burn_in, horizon]`, integrated
/// exactly between events, with batch-means standard errors over
/// [`TIME_AVERAGE_BATCHES`] equal windows.
pub fn estimate_moments_timeavg(
    net: &GossipNetwork,
    subset: NodeSubset,
    order: usize,
    horizon: f64,
    burn_in: f64,
    seed: u64,
) -> Result<TimeAverage, SimError> {
    estimate_moments_timeavg_with(net, subset, order, horizon, burn_in, seed, |_| {})
}

/// [`estimate_moments_timeavg`] reporting every applied event.
pub fn estimate_moments_timeavg_with(
    net: &GossipNetwork,
    subset: NodeSubset,
    order: usize,
    horizon: f64,
    burn_in: f64,
    seed: u64,
    mut on_event: impl FnMut(&Event),
) -> Result<TimeAverage, SimError> {
    check_args(net, &[subset], order)?;
    if !(burn_in >= 0.0 && horizon > burn_in && horizon.is_finite()) {
        return Err(SimError::InvalidWindow { burn_in, horizon });
    }
    let clock = EventClock::new(net)?;
    let mut rng = crate::exec::StreamFactory::new(seed).stream(0);
    let mut state = SimState::new(net);
    let mut window = Window {
        start: burn_in,
        end: horizon,
        width: (horizon - burn_in) / TIME_AVERAGE_BATCHES as f64,
        integrals: vec![0.0; TIME_AVERAGE_BATCHES * order],
        order,
    };
    let mut events = 0;
    loop {
        let next = state.now + exponential(&mut rng, clock.total);
        window.add(state.now, next.min(horizon), freshest(&state, subset));
        if next >= horizon {
            state.now = horizon;
            break;
        }
        let edge = clock.pick_edge(&mut rng);
        let event = clock.fire(&mut state, edge, next);
        events += 1;
        on_event(&event);
    }
    let t0 = detect_t0(&state, subset);
    let estimates = (1..=order)
        .map(|k| {
            let means: Vec<f64> = (0..TIME_AVERAGE_BATCHES)
                .map(|j| window.integrals[j * order + k - 1] / window.width)
                .collect();
            batch_means_estimate(k, &means, TIME_AVERAGE_BATCHES as u64)
        })
        .collect();
    Ok(TimeAverage {
        estimates,
        t0,
        burn_in_before_t0: t0.is_none_or(|t| burn_in < t),
        events,
    })
}
