//! Fragmentation chains, their time reversals, Poisson subordination and
//! coalescents with exponential holding times.

use serde::Serialize;

use crate::distributions::{sample_dirichlet_sym, sample_exp, sample_pd, DEFAULT_TAIL_TOL};
use crate::error::{invalid, Error, Result};
use crate::operators::{coag_a_record, coag_k, frag_inf_record, frag_k};
use crate::partition::{MassPartition, TruncatedRankedPartition};
use crate::rng::RngStream;

/// Default cap on stored trajectory length; longer runs should stream
/// through [`FragChainK`] or [`FragChainInf`].
pub const MAX_STORED_STEPS: usize = 64;
/// Default cap on the number of masses held across a stored trajectory.
pub const MAX_STORED_ATOMS: usize = 100_000;

/// Which chain produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Finite(usize),
    Infinite,
}

impl Serialize for ChainKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ChainKind::Finite(k) => s.serialize_u64(*k as u64),
            ChainKind::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Per-step metadata. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ChainEvent {
    /// A fragmentation of mass `I`, or a merge starting at `I`.
    Index {
        step: usize,
        #[serde(rename = "I")]
        index: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        split: Option<Vec<f64>>,
    },
    /// A `Coag_a` step that merged `merged` retained atoms.
    Marked { step: usize, a: f64, merged: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainTrajectory<P> {
    pub k: ChainKind,
    /// Initial PD parameter; 0 encodes the degenerate start `(1)`.
    pub theta: f64,
    pub states: Vec<P>,
    pub events: Vec<ChainEvent>,
}

impl<P> ChainTrajectory<P> {
    pub fn last(&self) -> &P {
        self.states.last().expect("trajectory holds its initial state")
    }
}

fn check_cap(steps: usize, atoms_per_state: impl Fn(usize) -> usize) -> Result<()> {
    if steps > MAX_STORED_STEPS {
        return Err(Error::ResourceLimit {
            what: "stored trajectory steps",
            requested: steps as f64,
            cap: MAX_STORED_STEPS as f64,
        });
    }
    let atoms: usize = (0..=steps).map(atoms_per_state).sum();
    if atoms > MAX_STORED_ATOMS {
        return Err(Error::ResourceLimit {
            what: "stored trajectory masses",
            requested: atoms as f64,
            cap: MAX_STORED_ATOMS as f64,
        });
    }
    Ok(())
}

/// Anything that can be multiplied through by a positive weight.
pub trait Scale {
    fn scale(&self, w: f64) -> Self;
}

impl Scale for MassPartition {
    fn scale(&self, w: f64) -> Self {
        self.scaled(w)
    }
}

impl Scale for TruncatedRankedPartition {
    fn scale(&self, w: f64) -> Self {
        self.scaled(w)
    }
}

/// A chain that can be advanced on demand.
pub trait ChainSource {
    type State: Clone + Scale;

    /// Number of steps taken so far.
    fn position(&self) -> usize;

    fn current(&self) -> &Self::State;

    fn step(&mut self) -> Result<()>;

    /// Advances to step `n` (which must not lie in the past).
    fn advance_to(&mut self, n: usize) -> Result<&Self::State> {
        if n < self.position() {
            return Err(invalid(format!("cannot rewind chain from {} to {n}", self.position())));
        }
        while self.position() < n {
            self.step()?;
        }
        Ok(self.current())
    }
}

/// Streaming `Frag_k` chain started from `(1)`.
#[derive(Debug, Clone)]
pub struct FragChainK {
    k: usize,
    position: usize,
    state: MassPartition,
    last_event: Option<ChainEvent>,
    rng: RngStream,
}

impl FragChainK {
    pub fn new(k: usize, rng: RngStream) -> Result<Self> {
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        Ok(Self {
            k,
            position: 0,
            state: MassPartition::unit(),
            last_event: None,
            rng,
        })
    }

    pub fn last_event(&self) -> Option<&ChainEvent> {
        self.last_event.as_ref()
    }
}

impl ChainSource for FragChainK {
    type State = MassPartition;

    fn position(&self) -> usize {
        self.position
    }

    fn current(&self) -> &MassPartition {
        &self.state
    }

    fn step(&mut self) -> Result<()> {
        let rec = frag_k(&self.state, self.k, &mut self.rng)?;
        self.last_event = Some(ChainEvent::Index {
            step: self.position,
            index: rec.chosen_index,
            split: Some(rec.split.into_masses()),
        });
        self.state = rec.output;
        self.position += 1;
        Ok(())
    }
}

/// Streaming `Frag_∞` chain.
#[derive(Debug, Clone)]
pub struct FragChainInf {
    theta: f64,
    tail_tol: f64,
    position: usize,
    state: TruncatedRankedPartition,
    last_event: Option<ChainEvent>,
    rng: RngStream,
}

impl FragChainInf {
    /// Starts from PD(theta), or from `(1)` when `theta == 0`.
    pub fn new(theta: f64, mut rng: RngStream) -> Result<Self> {
        let state = if theta == 0.0 {
            TruncatedRankedPartition::unit()
        } else if theta > 0.0 {
            sample_pd(theta, DEFAULT_TAIL_TOL, &mut rng)?
        } else {
            return Err(invalid(format!("theta must be nonnegative, got {theta}")));
        };
        Ok(Self::from_state(theta, state, rng))
    }

    /// Starts from a given state whose law the caller vouches for.
    pub fn from_state(theta: f64, state: TruncatedRankedPartition, rng: RngStream) -> Self {
        Self {
            theta,
            tail_tol: DEFAULT_TAIL_TOL,
            position: 0,
            state,
            last_event: None,
            rng,
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn last_event(&self) -> Option<&ChainEvent> {
        self.last_event.as_ref()
    }
}

impl ChainSource for FragChainInf {
    type State = TruncatedRankedPartition;

    fn position(&self) -> usize {
        self.position
    }

    fn current(&self) -> &TruncatedRankedPartition {
        &self.state
    }

    fn step(&mut self) -> Result<()> {
        let rec = frag_inf_record(&self.state, self.tail_tol, &mut self.rng)?;
        self.last_event = Some(ChainEvent::Index {
            step: self.position,
            index: rec.chosen_index,
            split: None,
        });
        self.state = rec.output;
        self.position += 1;
        Ok(())
    }
}

fn collect<C: ChainSource>(
    mut chain: C,
    k: ChainKind,
    theta: f64,
    steps: usize,
    last_event: impl Fn(&C) -> Option<ChainEvent>,
) -> Result<ChainTrajectory<C::State>> {
    let mut states = Vec::with_capacity(steps + 1);
    let mut events = Vec::with_capacity(steps);
    states.push(chain.current().clone());
    for _ in 0..steps {
        chain.step()?;
        states.push(chain.current().clone());
        events.extend(last_event(&chain));
    }
    Ok(ChainTrajectory {
        k,
        theta,
        states,
        events,
    })
}

/// `X^(k)(0..=steps)` from `(1)`; state `n` has `n k + 1` masses.
pub fn run_frag_chain_k(k: usize, steps: usize, rng: RngStream) -> Result<ChainTrajectory<MassPartition>> {
    check_cap(steps, |n| n * k + 1)?;
    let chain = FragChainK::new(k, rng)?;
    collect(chain, ChainKind::Finite(k), 0.0, steps, |c| c.last_event().cloned())
}

/// Repeated `Coag_k` from `start`, which needs at least `steps k + 1` masses.
pub fn run_coag_chain_k(
    start: &MassPartition,
    k: usize,
    steps: usize,
    rng: &mut RngStream,
) -> Result<ChainTrajectory<MassPartition>> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if start.len() < steps * k + 1 {
        return Err(invalid(format!(
            "{steps} Coag_{k} steps need at least {} masses, start has {}",
            steps * k + 1,
            start.len()
        )));
    }
    check_cap(steps, |n| start.len() - n * k)?;
    let mut states = vec![start.clone()];
    let mut events = Vec::with_capacity(steps);
    for step in 0..steps {
        let rec = coag_k(states.last().unwrap(), k, rng)?;
        events.push(ChainEvent::Index {
            step,
            index: rec.merge_start,
            split: None,
        });
        states.push(rec.output);
    }
    Ok(ChainTrajectory {
        k: ChainKind::Finite(k),
        theta: 0.0,
        states,
        events,
    })
}

/// `X^(∞)(0..=steps)` from PD(theta), or from `(1)` when `theta == 0`.
pub fn run_frag_chain_inf(theta: f64, steps: usize, rng: RngStream) -> Result<ChainTrajectory<TruncatedRankedPartition>> {
    check_cap(steps, |_| 0)?;
    let chain = FragChainInf::new(theta, rng)?;
    collect(chain, ChainKind::Infinite, theta, steps, |c| c.last_event().cloned())
}

/// Coagulation parameters used by the reversed infinite chain: step `m`
/// uses `1 / (start_index + theta - m)`.
pub fn reversed_coag_parameters(theta: f64, start_index: usize, steps: usize) -> Vec<f64> {
    (0..steps).map(|m| 1.0 / (start_index as f64 + theta - m as f64)).collect()
}

/// The reversed infinite chain from a state distributed as
/// PD(theta + start_index).
pub fn run_coag_chain_inf(
    start: &TruncatedRankedPartition,
    theta: f64,
    start_index: usize,
    steps: usize,
    rng: &mut RngStream,
) -> Result<ChainTrajectory<TruncatedRankedPartition>> {
    if !(theta >= 0.0) {
        return Err(invalid(format!("theta must be nonnegative, got {theta}")));
    }
    if steps > start_index {
        return Err(invalid(format!("{steps} steps exceed start index {start_index}")));
    }
    check_cap(steps, |_| 0)?;
    let mut states = vec![start.clone()];
    let mut events = Vec::with_capacity(steps);
    for (step, a) in reversed_coag_parameters(theta, start_index, steps).into_iter().enumerate() {
        let rec = coag_a_record(states.last().unwrap(), a, rng)?;
        events.push(ChainEvent::Marked {
            step,
            a,
            merged: rec.merged_count,
        });
        states.push(rec.output);
    }
    Ok(ChainTrajectory {
        k: ChainKind::Infinite,
        theta,
        states,
        events,
    })
}

/// One observation of a Poisson-subordinated chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubordinatedPoint<P> {
    pub time: f64,
    /// Value of the unit Poisson process at `w * time`.
    pub count: usize,
    /// `w` times the chain state at step `count`.
    pub state: P,
}

/// `(w X(N_{w t}))` at the times of `t_grid`, where `N` is a unit Poisson
/// process driven by `rng`, independent of the chain.
pub fn subordinated_path<C: ChainSource>(
    chain: &mut C,
    w: f64,
    t_grid: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<SubordinatedPoint<C::State>>> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(invalid(format!("weight must be positive, got {w}")));
    }
    if t_grid.windows(2).any(|p| p[1] <= p[0]) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(invalid("time grid must be nonnegative and strictly increasing"));
    }
    let mut next_arrival = rng.exp1();
    let mut count = 0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        while next_arrival <= w * t {
            count += 1;
            next_arrival += rng.exp1();
        }
        let state = chain.advance_to(count)?.scale(w);
        out.push(SubordinatedPoint { time: t, count, state });
    }
    Ok(out)
}

/// Path of a coalescent with exponential holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoalescentPath<P> {
    pub start: P,
    pub event_times: Vec<f64>,
    pub holds: Vec<f64>,
    pub hold_rates: Vec<f64>,
    pub states_after: Vec<P>,
}

impl<P> CoalescentPath<P> {
    pub fn final_state(&self) -> &P {
        self.states_after.last().unwrap_or(&self.start)
    }
}

/// Finite-k coalescent: from a state in `Δ_{nk}` hold `Exp(n)`, then apply
/// `Coag_k`, until a single mass remains.
pub fn run_coalescent_k(k: usize, start: &MassPartition, rng: &mut RngStream) -> Result<CoalescentPath<MassPartition>> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let len = start.len();
    if len < k + 1 || !(len - 1).is_multiple_of(k) {
        return Err(invalid(format!("start with {len} masses is not in Δ_(nk), n >= 1, for k = {k}")));
    }
    let mut index = (len - 1) / k;
    let mut path = CoalescentPath {
        start: start.clone(),
        event_times: Vec::with_capacity(index),
        holds: Vec::with_capacity(index),
        hold_rates: Vec::with_capacity(index),
        states_after: Vec::with_capacity(index),
    };
    let mut time = 0.0;
    let mut state = start.clone();
    while index > 0 {
        let rate = index as f64;
        let hold = sample_exp(rate, rng)?;
        time += hold;
        state = coag_k(&state, k, rng)?.output;
        path.event_times.push(time);
        path.holds.push(hold);
        path.hold_rates.push(rate);
        path.states_after.push(state.clone());
        index -= 1;
    }
    Ok(path)
}

/// Infinite coalescent: from a state with bookkeeping index `n` hold
/// `Exp(n)`, then apply `Coag_{1/(n+a)}`; runs for `events <= n` events.
pub fn run_coalescent_inf(
    a: f64,
    index: usize,
    start: &TruncatedRankedPartition,
    events: usize,
    rng: &mut RngStream,
) -> Result<CoalescentPath<TruncatedRankedPartition>> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(format!("a must be positive, got {a}")));
    }
    if events > index {
        return Err(invalid(format!("{events} events requested from index {index}")));
    }
    let mut path = CoalescentPath {
        start: start.clone(),
        event_times: Vec::with_capacity(events),
        holds: Vec::with_capacity(events),
        hold_rates: Vec::with_capacity(events),
        states_after: Vec::with_capacity(events),
    };
    let mut time = 0.0;
    let mut state = start.clone();
    for m in 0..events {
        let n = (index - m) as f64;
        let hold = sample_exp(n, rng)?;
        time += hold;
        state = coag_a_record(&state, 1.0 / (n + a), rng)?.output;
        path.event_times.push(time);
        path.holds.push(hold);
        path.hold_rates.push(n);
        path.states_after.push(state.clone());
    }
    Ok(path)
}

/// Start state for the finite coalescent drawn from Dir_{nk}(1/k).
pub fn dirichlet_start(n: usize, k: usize, rng: &mut RngStream) -> Result<MassPartition> {
    sample_dirichlet_sym(n * k + 1, 1.0 / k as f64, rng)
}
