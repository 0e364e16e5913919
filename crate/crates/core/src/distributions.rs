//! Samplers for gamma, symmetric Dirichlet and Poisson-Dirichlet laws, the
//! jumps of a standard gamma subordinator, and the atom-count estimator of
//! the Poisson-Dirichlet parameter.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::partition::{MassPartition, RankedPartition, TruncatedRankedPartition, SUM_TOLERANCE};
use crate::rng::RngStream;
use crate::special::{exp_integral_e1, exp_integral_inv};

/// Default stick-breaking remainder below which PD sampling stops.
pub const DEFAULT_TAIL_TOL: f64 = 1e-9;
/// Default lower cut-off for explicitly sampled subordinator jumps.
pub const DEFAULT_EPSILON: f64 = 1e-6;

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Gamma variate with density proportional to `x^{shape-1} e^{-rate x}`.
pub fn sample_gamma(shape: f64, rate: f64, rng: &mut RngStream) -> Result<f64> {
    positive("shape", shape)?;
    positive("rate", rate)?;
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| invalid(e.to_string()))?;
    Ok(g.sample(rng))
}

/// Exponential variate with the given rate.
pub fn sample_exp(rate: f64, rng: &mut RngStream) -> Result<f64> {
    positive("rate", rate)?;
    Ok(rng.exp1() / rate)
}

/// Beta(1, theta) variate by inversion: `1 - U^{1/theta}`.
pub fn sample_beta_one(theta: f64, rng: &mut RngStream) -> f64 {
    -(rng.uniform_open().ln() / theta).exp_m1()
}

/// Poisson variate with mean `mean >= 0`.
pub fn sample_poisson(mean: f64, rng: &mut RngStream) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    positive("mean", mean)?;
    let p = Poisson::new(mean).map_err(|e| invalid(e.to_string()))?;
    Ok(p.sample(rng) as u64)
}

/// Negative binomial failure count with real `size > 0` and success
/// probability `p`, via the Poisson-gamma mixture.
pub fn sample_negative_binomial(size: f64, p: f64, rng: &mut RngStream) -> Result<u64> {
    positive("size", size)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(invalid(format!("success probability {p} outside (0,1]")));
    }
    if p == 1.0 {
        return Ok(0);
    }
    let lambda = sample_gamma(size, p / (1.0 - p), rng)?;
    sample_poisson(lambda, rng)
}

/// Symmetric Dirichlet point on the simplex with `num_parts` coordinates,
/// obtained by normalising i.i.d. Gamma(alpha, 1) variables.
pub fn sample_dirichlet_sym(num_parts: usize, alpha: f64, rng: &mut RngStream) -> Result<MassPartition> {
    if num_parts == 0 {
        return Err(invalid("Dirichlet needs at least one coordinate"));
    }
    positive("alpha", alpha)?;
    if num_parts == 1 {
        return Ok(MassPartition::unit());
    }
    let g = Gamma::new(alpha, 1.0).map_err(|e| invalid(e.to_string()))?;
    loop {
        let gammas: Vec<f64> = (0..num_parts).map(|_| g.sample(rng)).collect();
        let sum: f64 = gammas.iter().sum();
        // All draws underflowing to zero is only possible for tiny alpha.
        if sum > 0.0 && sum.is_finite() {
            let masses = gammas.into_iter().map(|x| x / sum).collect();
            return Ok(MassPartition::from_raw(masses, 1.0));
        }
    }
}

/// Truncated Poisson-Dirichlet(theta) sample.
///
/// Sticks of the GEM(theta) size-biased representation are broken off until
/// the unbroken remainder drops below `tail_tol`; the sticks are then ranked
/// and the remainder becomes the tail mass.
pub fn sample_pd(theta: f64, tail_tol: f64, rng: &mut RngStream) -> Result<TruncatedRankedPartition> {
    positive("theta", theta)?;
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid(format!("tail_tol must lie in (0,1), got {tail_tol}")));
    }
    let mut remainder = 1.0;
    let mut sticks = Vec::new();
    while remainder >= tail_tol {
        let v = sample_beta_one(theta, rng);
        let piece = remainder * v;
        if piece > 0.0 {
            sticks.push(piece);
        }
        remainder *= 1.0 - v;
    }
    Ok(TruncatedRankedPartition::from_unsorted(sticks, remainder, 1.0))
}

/// Jumps of a standard gamma subordinator on `[0, theta]`, above `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaJumpSet {
    /// Decreasing jump sizes.
    pub jumps: Vec<f64>,
    /// Jump times in `[0, theta]`, paired with `jumps`.
    pub jump_times: Vec<f64>,
    /// Deterministic compensation for the jumps below `epsilon`.
    pub small_jump_mass: f64,
    pub theta: f64,
    pub epsilon: f64,
}

impl GammaJumpSet {
    /// The sampled value of the subordinator at time `theta`.
    pub fn value(&self) -> f64 {
        self.jumps.iter().sum::<f64>() + self.small_jump_mass
    }

    /// Jumps as a truncated ranked partition of total `value()`.
    pub fn to_partition(&self) -> TruncatedRankedPartition {
        TruncatedRankedPartition::from_raw(self.jumps.clone(), self.small_jump_mass, self.value())
    }

    /// Jumps divided by `value()`: a truncated PD(theta) sample.
    pub fn normalized(&self) -> TruncatedRankedPartition {
        let v = self.value();
        let atoms = self.jumps.iter().map(|j| j / v).collect();
        TruncatedRankedPartition::from_raw(atoms, self.small_jump_mass / v, 1.0)
    }
}

/// Samples the jumps larger than `epsilon` of a standard gamma subordinator
/// on `[0, theta]`.
///
/// The jump sizes form a Poisson process with intensity
/// `theta y^{-1} e^{-y} dy`. They are produced in decreasing order by
/// inverting the tail intensity `theta E1(y)` at the arrival times of a unit
/// Poisson process. Jumps below `epsilon` are replaced by their mean total
/// `theta (1 - e^{-epsilon})`.
pub fn sample_gamma_jumps(theta: f64, epsilon: f64, rng: &mut RngStream) -> Result<GammaJumpSet> {
    positive("theta", theta)?;
    positive("epsilon", epsilon)?;
    let tail_intensity = exp_integral_e1(epsilon);
    let mut jumps = Vec::new();
    let mut arrival = 0.0;
    loop {
        arrival += rng.exp1();
        let level = arrival / theta;
        if level >= tail_intensity {
            break;
        }
        let mut y = exp_integral_inv(level, epsilon);
        if let Some(&prev) = jumps.last() {
            y = y.min(prev);
        }
        jumps.push(y);
    }
    let jump_times = jumps.iter().map(|_| theta * rng.uniform()).collect();
    Ok(GammaJumpSet {
        jumps,
        jump_times,
        small_jump_mass: -theta * (-epsilon).exp_m1(),
        theta,
        epsilon,
    })
}

/// Ranked masses with a known bound on anything not represented.
pub trait RankedMasses {
    fn ranked_masses(&self) -> &[f64];
    /// Upper bound on every mass missing from `ranked_masses`.
    fn unrepresented_bound(&self) -> f64;
    fn mass_total(&self) -> f64;
}

impl RankedMasses for RankedPartition {
    fn ranked_masses(&self) -> &[f64] {
        self.masses()
    }
    fn unrepresented_bound(&self) -> f64 {
        0.0
    }
    fn mass_total(&self) -> f64 {
        self.total()
    }
}

impl RankedMasses for TruncatedRankedPartition {
    fn ranked_masses(&self) -> &[f64] {
        self.atoms()
    }
    fn unrepresented_bound(&self) -> f64 {
        self.tail_mass()
    }
    fn mass_total(&self) -> f64 {
        self.total()
    }
}

/// `max{n : x_n > epsilon} / log(1/epsilon)`.
///
/// For a truncated input every missing atom is at most the tail mass, so the
/// count is exact only when `epsilon >= tail_mass`.
pub fn estimate_theta<P: RankedMasses + ?Sized>(x: &P, epsilon: f64) -> Result<f64> {
    let total = x.mass_total();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(invalid(format!("estimator needs total 1, got {total}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let masses = x.ranked_masses();
    let largest = masses.first().copied().unwrap_or(0.0);
    if epsilon >= largest {
        return Err(invalid(format!("epsilon {epsilon} is not below the largest mass {largest}")));
    }
    let bound = x.unrepresented_bound();
    if epsilon < bound {
        return Err(Error::InsufficientResolution {
            epsilon,
            resolution: bound,
        });
    }
    let count = masses.partition_point(|&m| m > epsilon);
    Ok(count as f64 / (1.0 / epsilon).ln())
}

/// Uniform integer in `0..n`.
pub(crate) fn uniform_index(n: usize, rng: &mut RngStream) -> usize {
    rng.gen_range(0..n)
}
