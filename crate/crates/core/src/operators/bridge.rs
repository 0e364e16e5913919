//! Compositions of elementary bridges with exchangeable increments.
//!
//! The elementary bridge at level `n` is
//! `b_n(t) = n/(n+1) t + 1/(n+1) 1{t > U_n}`. Every finite composition of
//! such maps has the form `drift * t + Σ size_j 1{t > loc_j}`, which is
//! stored exactly as a drift plus a list of jumps.
//!
//! Level `n` uses `b_N ∘ … ∘ b_{n+1} ∘ b_n`, i.e. `b_n` is applied first.
//! Going down one level precomposes with `b_n`, which merges every jump
//! lying in a window of width `1/(n+1)` into one: this is the `Coag_{1/(n+1)}`
//! step of the reversed chain, so the ranked jumps at level `n` approximate
//! PD(n).

use serde::Serialize;

use crate::partition::TruncatedRankedPartition;
use crate::rng::RngStream;

/// Nondecreasing map of `[0,1]` onto itself: `drift * t` plus jumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeFunction {
    pub drift: f64,
    /// `(location, size)` pairs sorted by location.
    pub jumps: Vec<(f64, f64)>,
}

impl BridgeFunction {
    pub fn elementary(n: u64, u: f64) -> Self {
        let n = n as f64;
        Self {
            drift: n / (n + 1.0),
            jumps: vec![(u, 1.0 / (n + 1.0))],
        }
    }

    /// Right-continuous-from-the-left evaluation: jumps count for `t > loc`.
    pub fn eval(&self, t: f64) -> f64 {
        self.drift * t + self.jumps.iter().filter(|(loc, _)| t > *loc).map(|(_, s)| s).sum::<f64>()
    }

    /// Breakpoints with the value just after each.
    pub fn breakpoints(&self) -> Vec<(f64, f64)> {
        self.jumps.iter().map(|&(loc, _)| (loc, self.eval(loc) + self.jump_at(loc))).collect()
    }

    fn jump_at(&self, loc: f64) -> f64 {
        self.jumps.iter().filter(|(l, _)| *l == loc).map(|(_, s)| s).sum()
    }

    pub fn jump_mass(&self) -> f64 {
        self.jumps.iter().map(|(_, s)| s).sum()
    }

    /// `self ∘ b_n` with `b_n` the elementary bridge at level `n`, jump at `u`.
    pub fn precompose_elementary(&self, n: u64, u: f64) -> Self {
        let c = n as f64 / (n as f64 + 1.0);
        let lo = c * u;
        let hi = lo + (1.0 - c);
        let mut merged = self.drift * (1.0 - c);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for &(loc, size) in &self.jumps {
            if loc < lo {
                left.push((loc / c, size));
            } else if loc > hi {
                right.push(((loc - (1.0 - c)) / c, size));
            } else {
                merged += size;
            }
        }
        left.push((u, merged));
        left.extend(right);
        Self {
            drift: self.drift * c,
            jumps: left,
        }
    }

    /// Ranked jump sizes, with the drift as the unrepresented tail.
    pub fn ranked_jumps(&self) -> TruncatedRankedPartition {
        let sizes = self.jumps.iter().map(|&(_, s)| s).collect();
        TruncatedRankedPartition::from_unsorted(sizes, self.drift, 1.0)
    }
}

/// Composition `b_{n+depth} ∘ … ∘ b_n` for a single level `n`.
pub fn bridge_level(n: u64, depth: u64, rng: &mut RngStream) -> BridgeFunction {
    let top = n + depth;
    let u: Vec<f64> = (n..=top).map(|_| rng.uniform()).collect();
    let mut f = BridgeFunction::elementary(top, u[depth as usize]);
    for m in (n..top).rev() {
        f = f.precompose_elementary(m, u[(m - n) as usize]);
    }
    f
}

/// Builds the compositions for levels `n_start + depth` down to `n_start`,
/// calling `visit(level, f)` for every level below the top.
pub fn bridge_compose(n_start: u64, depth: u64, rng: &mut RngStream, mut visit: impl FnMut(u64, &BridgeFunction)) {
    let top = n_start + depth;
    let u: Vec<f64> = (n_start..=top).map(|_| rng.uniform()).collect();
    let mut f = BridgeFunction::elementary(top, u[depth as usize]);
    for m in (n_start..top).rev() {
        f = f.precompose_elementary(m, u[(m - n_start) as usize]);
        visit(m, &f);
    }
}

/// Ranked jumps at every level `n_start .. n_start + depth`, each level
/// using the composition up to `b_{n_start + depth}`.
pub fn bridge_chain(n_start: u64, depth: u64, rng: &mut RngStream) -> Vec<TruncatedRankedPartition> {
    let mut levels = Vec::with_capacity(depth as usize);
    bridge_compose(n_start, depth, rng, |_, f| levels.push(f.ranked_jumps()));
    levels.reverse();
    levels
}
