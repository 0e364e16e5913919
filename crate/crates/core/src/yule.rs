//! Yule processes with `k + 1` offspring per death, the continuous-state
//! Yule process, and their genealogical decompositions of the terminal mass.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::Serialize;

use crate::distributions::{sample_dirichlet_sym, sample_gamma, sample_gamma_jumps, sample_negative_binomial};
use crate::error::{invalid, Error, Result};
use crate::partition::{MassPartition, TruncatedRankedPartition};
use crate::rng::RngStream;

/// Cap on the expected population size and on fragment counts.
pub const POPULATION_CAP: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum YuleKind {
    /// `Y^(k)`: each death produces `k + 1` children.
    Discrete { k: usize },
    /// Continuous-state process started from mass `a`.
    Continuous { a: f64 },
}

/// Piecewise-constant population path on `[0, t_max]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YulePath {
    pub kind: YuleKind,
    pub initial: f64,
    pub t_max: f64,
    pub jump_times: Vec<f64>,
    /// Population just after each jump.
    pub values: Vec<f64>,
}

impl YulePath {
    /// Population at time `t` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let j = self.jump_times.partition_point(|&s| s <= t);
        if j == 0 {
            self.initial
        } else {
            self.values[j - 1]
        }
    }

    pub fn final_value(&self) -> f64 {
        self.values.last().copied().unwrap_or(self.initial)
    }

    /// Size of each jump.
    pub fn increment(&self) -> f64 {
        match self.kind {
            YuleKind::Discrete { k } => k as f64,
            YuleKind::Continuous { .. } => 1.0,
        }
    }
}

fn check_growth(initial: f64, rate: f64, t: f64) -> Result<()> {
    let expected = initial * (rate * t).exp();
    if expected > POPULATION_CAP {
        return Err(Error::ResourceLimit {
            what: "expected Yule population",
            requested: expected,
            cap: POPULATION_CAP,
        });
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("time must be nonnegative and finite, got {t}")))
    }
}

/// Pure-birth path with rate `m` from state `m`, jumping by `step`.
fn birth_path(kind: YuleKind, initial: f64, step: f64, t_max: f64, rng: &mut RngStream) -> YulePath {
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut m = initial;
    let mut t = rng.exp1() / m;
    while t <= t_max {
        m += step;
        jump_times.push(t);
        values.push(m);
        t += rng.exp1() / m;
    }
    YulePath {
        kind,
        initial,
        t_max,
        jump_times,
        values,
    }
}

/// `Y^(k)` on `[0, t_max]` from one individual: from count `m` the next
/// death comes after `Exp(m)`, and the count becomes `m + k`.
pub fn simulate_yule_counts(k: usize, t_max: f64, rng: &mut RngStream) -> Result<YulePath> {
    simulate_yule_counts_from(k, 1, t_max, rng)
}

/// `Y^(k)` on `[0, t_max]` from `initial` individuals.
pub fn simulate_yule_counts_from(k: usize, initial: u64, t_max: f64, rng: &mut RngStream) -> Result<YulePath> {
    if k == 0 || initial == 0 {
        return Err(invalid("k and the initial population must be at least 1"));
    }
    if !(t_max > 0.0) {
        return Err(invalid(format!("t_max must be positive, got {t_max}")));
    }
    check_growth(initial as f64, k as f64, t_max)?;
    Ok(birth_path(YuleKind::Discrete { k }, initial as f64, k as f64, t_max, rng))
}

/// `Y^(k)_t` from `initial` individuals, simulated event by event without
/// storing the path.
pub fn yule_count_at(k: usize, initial: u64, t: f64, rng: &mut RngStream) -> Result<u64> {
    if k == 0 || initial == 0 {
        return Err(invalid("k and the initial population must be at least 1"));
    }
    check_time(t)?;
    check_growth(initial as f64, k as f64, t)?;
    let mut m = initial;
    let mut s = rng.exp1() / m as f64;
    while s <= t {
        m += k as u64;
        s += rng.exp1() / m as f64;
    }
    Ok(m)
}

/// Exact draw of the population `dt` after a time at which it equals `m`:
/// `(Y - m)/k` is negative binomial with size `m/k` and success probability
/// `e^{-k dt}`.
pub fn yule_count_ahead(k: usize, m: u64, dt: f64, rng: &mut RngStream) -> Result<u64> {
    if k == 0 || m == 0 {
        return Err(invalid("k and the population must be at least 1"));
    }
    check_time(dt)?;
    check_growth(m as f64, k as f64, dt)?;
    let kf = k as f64;
    let births = sample_negative_binomial(m as f64 / kf, (-kf * dt).exp(), rng)?;
    Ok(m + k as u64 * births)
}

/// Probability generating function `E[s^{Y^(k)_t}]`:
/// `s e^{-t} (1 - (1 - e^{-kt}) s^k)^{-1/k}`.
pub fn yule_pgf(k: usize, t: f64, s: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    check_time(t)?;
    if !(0.0..=1.0).contains(&s) {
        return Err(invalid(format!("s must lie in [0,1], got {s}")));
    }
    let kf = k as f64;
    let base = 1.0 + (-kf * t).exp_m1() * s.powi(k as i32);
    Ok(s * (-t).exp() * base.powf(-1.0 / kf))
}

/// Terminal population `W^(k) ~ Gamma(1/k, 1/k)`.
pub fn sample_w(k: usize, rng: &mut RngStream) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let a = 1.0 / k as f64;
    sample_gamma(a, a, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// `τ(t) = log(1 + k t)/k` (forward) or `(e^{k t} - 1)/k` (inverse).
pub fn time_change(k: usize, value: f64, direction: Direction) -> Result<f64> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    check_time(value)?;
    let kf = k as f64;
    Ok(match direction {
        Direction::Forward => (kf * value).ln_1p() / kf,
        Direction::Inverse => (kf * value).exp_m1() / kf,
    })
}

/// Decomposition of the terminal mass among the individuals alive at `time`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenealogySample {
    pub time: f64,
    /// Population size at `time`.
    pub population: f64,
    /// Total terminal mass: the weights plus the tail.
    pub total: f64,
    /// Explicit weights; in simulation order for the discrete process,
    /// decreasing for the continuous-state one.
    pub weights: Vec<f64>,
    /// Mass not carried by explicit weights (continuous-state only).
    pub tail: f64,
}

impl GenealogySample {
    pub fn largest(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }

    pub fn ranked(&self) -> TruncatedRankedPartition {
        TruncatedRankedPartition::from_unsorted(self.weights.clone(), self.tail, self.total)
    }

    pub fn normalized_largest(&self) -> f64 {
        self.largest() / self.total
    }
}

/// `G^(k)(t)`: simulate `Y^(k)_t`, then give each individual an independent
/// weight `e^{-kt} W_i` with `W_i ~ Gamma(1/k, 1/k)`.
pub fn genealogy_marginal_k(k: usize, t: f64, rng: &mut RngStream) -> Result<GenealogySample> {
    let population = yule_count_at(k, 1, t, rng)?;
    let scale = (-(k as f64) * t).exp();
    let weights = (0..population)
        .map(|_| sample_w(k, rng).map(|w| scale * w))
        .collect::<Result<Vec<_>>>()?;
    let total = weights.iter().sum();
    Ok(GenealogySample {
        time: t,
        population: population as f64,
        total,
        weights,
        tail: 0.0,
    })
}

/// One dislocation in a [`FragmentationPath`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dislocation {
    pub time: f64,
    /// Slot of the fragment that split; it keeps the first piece and the
    /// remaining pieces are appended as new slots.
    pub slot: usize,
    /// Split fractions, summing to one.
    pub fractions: Vec<f64>,
}

/// Self-similar fragmentation path started from a single mass `w`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragmentationPath {
    pub k: usize,
    pub w: f64,
    pub s_max: f64,
    pub events: Vec<Dislocation>,
}

impl FragmentationPath {
    /// Fragment masses (in slot order) at time `s`.
    pub fn state_at(&self, s: f64) -> MassPartition {
        let mut masses = vec![self.w];
        for ev in self.events.iter().take_while(|e| e.time <= s) {
            let x = masses[ev.slot];
            masses[ev.slot] = x * ev.fractions[0];
            masses.extend(ev.fractions[1..].iter().map(|f| x * f));
        }
        MassPartition::from_raw(masses, self.w)
    }

    pub fn first_event_time(&self) -> Option<f64> {
        self.events.first().map(|e| e.time)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Clock(f64, usize);

impl Eq for Clock {}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Clock {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Time-changed genealogy of `Y^(k)` given terminal mass `w`: each
/// fragment of mass `x` rings an independent `Exp(x)` clock and then splits
/// by `Dir_k(1/k)`. Recorded on `[0, s_max]`.
pub fn genealogy_path_k(k: usize, w: f64, s_max: f64, rng: &mut RngStream) -> Result<FragmentationPath> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if !(w > 0.0 && w.is_finite()) {
        return Err(invalid(format!("w must be positive, got {w}")));
    }
    check_time(s_max)?;
    // Fragments split at total rate w, k new ones per split.
    let expected = 1.0 + k as f64 * w * s_max;
    if expected > POPULATION_CAP {
        return Err(Error::ResourceLimit {
            what: "expected fragment count",
            requested: expected,
            cap: POPULATION_CAP,
        });
    }
    let alpha = 1.0 / k as f64;
    let mut masses = vec![w];
    let mut clocks = BinaryHeap::new();
    clocks.push(Reverse(Clock(rng.exp1() / w, 0)));
    let mut events = Vec::new();
    while let Some(Reverse(Clock(time, slot))) = clocks.pop() {
        if time > s_max {
            break;
        }
        if masses.len() + k > POPULATION_CAP as usize {
            return Err(Error::ResourceLimit {
                what: "fragment count",
                requested: (masses.len() + k) as f64,
                cap: POPULATION_CAP,
            });
        }
        let split = sample_dirichlet_sym(k + 1, alpha, rng)?.into_masses();
        let x = masses[slot];
        masses[slot] = x * split[0];
        for f in &split[1..] {
            masses.push(x * f);
        }
        let first_new = masses.len() - k;
        for s in std::iter::once(slot).chain(first_new..masses.len()) {
            if masses[s] > 0.0 {
                clocks.push(Reverse(Clock(time + rng.exp1() / masses[s], s)));
            }
        }
        events.push(Dislocation {
            time,
            slot,
            fractions: split,
        });
    }
    Ok(FragmentationPath { k, w, s_max, events })
}

/// Continuous-state Yule process from mass `a`: wait `Exp(m)`, jump to `m + 1`.
pub fn simulate_cs_yule(a: f64, t_max: f64, rng: &mut RngStream) -> Result<YulePath> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(format!("a must be positive, got {a}")));
    }
    if !(t_max > 0.0) {
        return Err(invalid(format!("t_max must be positive, got {t_max}")));
    }
    check_growth(a, 1.0, t_max)?;
    Ok(birth_path(YuleKind::Continuous { a }, a, 1.0, t_max, rng))
}

/// `Y(t, a)` simulated event by event without storing the path.
pub fn cs_yule_at(a: f64, t: f64, rng: &mut RngStream) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(invalid(format!("a must be positive, got {a}")));
    }
    check_time(t)?;
    check_growth(a, 1.0, t)?;
    let mut m = a;
    let mut s = rng.exp1() / m;
    while s <= t {
        m += 1.0;
        s += rng.exp1() / m;
    }
    Ok(m)
}

/// `G(t, a)`: simulate `Y(t, a)`, then take `e^{-t}` times the ranked jumps
/// above `epsilon` of an independent standard gamma subordinator on
/// `[0, Y(t, a)]`; the compensated small jumps form the tail.
pub fn genealogy_marginal_cont(a: f64, t: f64, epsilon: f64, rng: &mut RngStream) -> Result<GenealogySample> {
    let population = cs_yule_at(a, t, rng)?;
    let jumps = sample_gamma_jumps(population, epsilon, rng)?;
    let scale = (-t).exp();
    let weights: Vec<f64> = jumps.jumps.iter().map(|j| scale * j).collect();
    let tail = scale * jumps.small_jump_mass;
    let total = weights.iter().sum::<f64>() + tail;
    Ok(GenealogySample {
        time: t,
        population,
        total,
        weights,
        tail,
    })
}
