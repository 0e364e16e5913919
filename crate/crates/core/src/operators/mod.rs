//! Random fragmentation and coagulation transformations.
//!
//! Finite operators act on positional simplex points and keep positional
//! form; ranking is a separate step. Infinite operators act on truncated
//! ranked partitions and return ranked output.

mod bridge;

pub use bridge::{bridge_chain, bridge_compose, bridge_level, BridgeFunction};

use rand::seq::index;
use serde::Serialize;

use crate::distributions::{sample_dirichlet_sym, sample_pd, uniform_index, DEFAULT_TAIL_TOL};
use crate::error::{invalid, Error, Result};
use crate::partition::{rank, size_biased_index, MassPartition, RankedPartition, TruncatedRankedPartition, SUM_TOLERANCE};
use crate::rng::RngStream;

/// Outcome of one `Frag_k` step. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragRecord {
    pub output: MassPartition,
    pub chosen_index: usize,
    /// The Dirichlet split applied to the chosen mass.
    pub split: MassPartition,
}

/// Outcome of one `Coag_k` step. `merge_start` is 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoagRecord {
    pub output: MassPartition,
    pub merge_start: usize,
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(invalid("k must be at least 1"))
    } else {
        Ok(())
    }
}

/// Replaces entry `index` of `x` in place by `x[index] * split[j]`.
pub fn split_at(x: &MassPartition, index: usize, split: &MassPartition) -> Result<MassPartition> {
    let m = x.masses();
    if index >= m.len() {
        return Err(invalid(format!("index {index} out of range for {} masses", m.len())));
    }
    let xi = m[index];
    let mut out = Vec::with_capacity(m.len() + split.len() - 1);
    out.extend_from_slice(&m[..index]);
    out.extend(split.masses().iter().map(|e| xi * e / split.total()));
    out.extend_from_slice(&m[index + 1..]);
    Ok(MassPartition::from_raw(out, x.total()))
}

/// Merges the `len` contiguous masses starting at `start` into one.
pub fn merge_block(x: &MassPartition, start: usize, len: usize) -> Result<MassPartition> {
    let m = x.masses();
    if len == 0 || start + len > m.len() {
        return Err(invalid(format!("block {start}..{} out of range for {} masses", start + len, m.len())));
    }
    let mut out = Vec::with_capacity(m.len() + 1 - len);
    out.extend_from_slice(&m[..start]);
    out.push(m[start..start + len].iter().sum());
    out.extend_from_slice(&m[start + len..]);
    Ok(MassPartition::from_raw(out, x.total()))
}

/// `Frag_k`: splits a size-biased mass of `x` by an independent
/// Dir_k(1/k) vector.
pub fn frag_k(x: &MassPartition, k: usize, rng: &mut RngStream) -> Result<FragRecord> {
    check_k(k)?;
    let chosen_index = size_biased_index(x.masses(), x.total(), rng.uniform())?;
    let split = sample_dirichlet_sym(k + 1, 1.0 / k as f64, rng)?;
    let output = split_at(x, chosen_index, &split)?;
    Ok(FragRecord {
        output,
        chosen_index,
        split,
    })
}

/// `Coag_k`: merges the `k+1` contiguous masses starting at a uniform
/// position among the `len - k` admissible ones.
pub fn coag_k(x: &MassPartition, k: usize, rng: &mut RngStream) -> Result<CoagRecord> {
    check_k(k)?;
    if x.len() < k + 1 {
        return Err(invalid(format!("Coag_{k} needs at least {} masses, got {}", k + 1, x.len())));
    }
    let merge_start = uniform_index(x.len() - k, rng);
    Ok(CoagRecord {
        output: merge_block(x, merge_start, k + 1)?,
        merge_start,
    })
}

/// Merges the masses at `indices` (distinct) and ranks the result.
pub fn merge_indices(x: &MassPartition, indices: &[usize]) -> Result<RankedPartition> {
    let m = x.masses();
    let mut chosen = vec![false; m.len()];
    for &i in indices {
        if i >= m.len() || chosen[i] {
            return Err(invalid(format!("bad merge index {i}")));
        }
        chosen[i] = true;
    }
    let merged: f64 = indices.iter().map(|&i| m[i]).sum();
    let mut out: Vec<f64> = m.iter().zip(&chosen).filter(|(_, &c)| !c).map(|(&v, _)| v).collect();
    out.push(merged);
    Ok(rank(&MassPartition::from_raw(out, x.total())))
}

/// Exchangeable variant of `Coag_k`: merges `k+1` masses chosen uniformly
/// without replacement, then ranks.
pub fn coag_k_tilde(x: &MassPartition, k: usize, rng: &mut RngStream) -> Result<RankedPartition> {
    check_k(k)?;
    if x.len() < k + 1 {
        return Err(invalid(format!("Coag_{k} needs at least {} masses, got {}", k + 1, x.len())));
    }
    let picked = index::sample(rng, x.len(), k + 1).into_vec();
    merge_indices(x, &picked)
}

/// Merges two decreasing sequences into one decreasing sequence.
fn merge_desc(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i] >= b[j] {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn check_unit_total(x: &TruncatedRankedPartition) -> Result<()> {
    if (x.total() - 1.0).abs() > SUM_TOLERANCE {
        Err(invalid(format!("operator needs total 1, got {}", x.total())))
    } else {
        Ok(())
    }
}

/// Outcome of one `Frag_∞` step; `chosen_index` indexes the input atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FragInfRecord {
    pub output: TruncatedRankedPartition,
    pub chosen_index: usize,
    pub chosen_mass: f64,
}

/// `Frag_∞` with the default PD tail tolerance.
pub fn frag_inf(x: &TruncatedRankedPartition, rng: &mut RngStream) -> Result<TruncatedRankedPartition> {
    frag_inf_record(x, DEFAULT_TAIL_TOL, rng).map(|r| r.output)
}

/// `Frag_∞`: splits a size-biased retained atom by an independent PD(1)
/// sample truncated at `tail_tol`.
///
/// The pick ignores the tail, so the input tail must not exceed
/// `10 * tail_tol`.
pub fn frag_inf_record(x: &TruncatedRankedPartition, tail_tol: f64, rng: &mut RngStream) -> Result<FragInfRecord> {
    check_unit_total(x)?;
    let bound = 10.0 * tail_tol;
    if x.tail_mass() > bound {
        return Err(Error::TailTooHeavy {
            tail: x.tail_mass(),
            bound,
        });
    }
    let atoms = x.atoms();
    let retained: f64 = atoms.iter().sum();
    let chosen_index = size_biased_index(atoms, retained, rng.uniform())?;
    let chosen_mass = atoms[chosen_index];
    let eta = sample_pd(1.0, tail_tol, rng)?;
    let pieces: Vec<f64> = eta.atoms().iter().map(|e| chosen_mass * e).collect();
    let rest: Vec<f64> = atoms[..chosen_index].iter().chain(&atoms[chosen_index + 1..]).copied().collect();
    let output = TruncatedRankedPartition::from_raw(
        merge_desc(&rest, &pieces),
        x.tail_mass() + chosen_mass * eta.tail_mass(),
        x.total(),
    );
    Ok(FragInfRecord {
        output,
        chosen_index,
        chosen_mass,
    })
}

/// Outcome of one `Coag_a` step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoagARecord {
    pub output: TruncatedRankedPartition,
    pub a: f64,
    /// Number of retained atoms that were marked and merged.
    pub merged_count: usize,
    pub merged_mass: f64,
}

pub fn coag_a(x: &TruncatedRankedPartition, a: f64, rng: &mut RngStream) -> Result<TruncatedRankedPartition> {
    coag_a_record(x, a, rng).map(|r| r.output)
}

/// `Coag_a`: each atom carries an independent uniform mark and the atoms
/// with mark below `a` merge into one. A fraction `a` of the tail joins the
/// merged atom, standing in for the unrepresented atoms.
pub fn coag_a_record(x: &TruncatedRankedPartition, a: f64, rng: &mut RngStream) -> Result<CoagARecord> {
    if !(0.0..=1.0).contains(&a) {
        return Err(invalid(format!("coagulation parameter {a} outside [0,1]")));
    }
    check_unit_total(x)?;
    let mut merged_mass = a * x.tail_mass();
    let mut merged_count = 0;
    let mut rest = Vec::with_capacity(x.len());
    for &atom in x.atoms() {
        if rng.uniform() < a {
            merged_mass += atom;
            merged_count += 1;
        } else {
            rest.push(atom);
        }
    }
    let tail = if a == 1.0 { 0.0 } else { (1.0 - a) * x.tail_mass() };
    if merged_mass > 0.0 {
        let pos = rest.partition_point(|&m| m >= merged_mass);
        rest.insert(pos, merged_mass);
    }
    Ok(CoagARecord {
        output: TruncatedRankedPartition::from_raw(rest, tail, x.total()),
        a,
        merged_count,
        merged_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::sample_dirichlet_sym;
    use crate::partition::Validate;
    use proptest::prelude::*;

    fn mp(xs: &[f64]) -> MassPartition {
        MassPartition::from_masses(xs.to_vec()).unwrap()
    }

    #[test]
    fn split_examples() {
        let out = split_at(&MassPartition::unit(), 0, &mp(&[0.3, 0.7])).unwrap();
        assert_eq!(out.masses(), &[0.3, 0.7]);

        let out = split_at(&mp(&[0.4, 0.6]), 1, &mp(&[0.1, 0.2, 0.7])).unwrap();
        let expect = [0.4, 0.06, 0.12, 0.42];
        for (a, b) in out.masses().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(out.is_valid());
    }

    #[test]
    fn frag_from_unit_picks_the_only_mass() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            let r = frag_k(&MassPartition::unit(), 1, &mut rng).unwrap();
            assert_eq!(r.chosen_index, 0);
            assert_eq!(r.output.masses(), r.split.masses());
        }
        assert!(frag_k(&MassPartition::unit(), 0, &mut rng).is_err());
    }

    #[test]
    fn merge_examples() {
        let out = merge_block(&mp(&[0.2, 0.3, 0.5]), 1, 2).unwrap();
        assert_eq!(out.masses(), &[0.2, 0.8]);

        let mut rng = RngStream::new(2, 0);
        let x = mp(&[0.1, 0.2, 0.3, 0.4]);
        let r = coag_k(&x, 3, &mut rng).unwrap();
        assert_eq!(r.merge_start, 0);
        assert!((r.output.masses()[0] - 1.0).abs() < 1e-15);
        assert!(coag_k(&mp(&[0.5, 0.5]), 2, &mut rng).is_err());
    }

    #[test]
    fn tilde_examples() {
        let mut rng = RngStream::new(3, 0);
        let all = coag_k_tilde(&mp(&[0.1, 0.2, 0.3, 0.4]), 3, &mut rng).unwrap();
        assert_eq!(all.len(), 1);
        assert!((all.masses()[0] - 1.0).abs() < 1e-15);

        let out = merge_indices(&mp(&[0.2, 0.3, 0.5]), &[0, 2]).unwrap();
        assert_eq!(out.masses(), &[0.7, 0.3]);
        assert!(coag_k_tilde(&mp(&[1.0]), 1, &mut rng).is_err());
    }

    #[test]
    fn frag_inf_from_unit_is_a_pd_one_draw() {
        let mut a = RngStream::new(4, 0);
        let r = frag_inf_record(&TruncatedRankedPartition::unit(), DEFAULT_TAIL_TOL, &mut a).unwrap();
        assert_eq!(r.chosen_index, 0);
        let mut b = RngStream::new(4, 0);
        b.uniform();
        let eta = sample_pd(1.0, DEFAULT_TAIL_TOL, &mut b).unwrap();
        assert_eq!(r.output, eta);
    }

    #[test]
    fn frag_inf_rejects_heavy_tail() {
        let mut rng = RngStream::new(5, 0);
        let x = TruncatedRankedPartition::new(vec![0.9], 0.1, 1.0).unwrap();
        assert!(matches!(frag_inf(&x, &mut rng), Err(Error::TailTooHeavy { .. })));
    }

    #[test]
    fn frag_inf_conserves_mass() {
        let mut rng = RngStream::new(6, 0);
        for _ in 0..2_000 {
            let x = sample_pd(1.5, DEFAULT_TAIL_TOL, &mut rng).unwrap();
            let y = frag_inf(&x, &mut rng).unwrap();
            assert!(y.is_valid(), "{:?}", y.violations());
            let s: f64 = y.atoms().iter().sum::<f64>() + y.tail_mass();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn coag_a_extremes() {
        let mut rng = RngStream::new(7, 0);
        let x = sample_pd(2.0, DEFAULT_TAIL_TOL, &mut rng).unwrap();
        assert_eq!(coag_a(&x, 0.0, &mut rng).unwrap(), x);
        let all = coag_a(&x, 1.0, &mut rng).unwrap();
        assert_eq!(all.len(), 1);
        assert!((all.atoms()[0] - 1.0).abs() < 1e-12);
        assert_eq!(all.tail_mass(), 0.0);
        assert!(coag_a(&x, 1.5, &mut rng).is_err());
        assert!(coag_a(&x, -0.1, &mut rng).is_err());
    }

    #[test]
    fn coag_a_conserves_mass() {
        let mut rng = RngStream::new(8, 0);
        for _ in 0..2_000 {
            let x = sample_pd(2.0, DEFAULT_TAIL_TOL, &mut rng).unwrap();
            let y = coag_a(&x, 0.5, &mut rng).unwrap();
            assert!(y.is_valid(), "{:?}", y.violations());
        }
    }

    #[test]
    fn round_trip_recovers_input() {
        let mut rng = RngStream::new(9, 0);
        for k in 1..5 {
            for n in 0..6 {
                let x = sample_dirichlet_sym(n + 1, 1.0 / k as f64, &mut rng).unwrap();
                let r = frag_k(&x, k, &mut rng).unwrap();
                let back = merge_block(&r.output, r.chosen_index, k + 1).unwrap();
                for (a, b) in back.masses().iter().zip(x.masses()) {
                    assert!((a - b).abs() <= 1e-15, "{a} vs {b}");
                }
            }
        }
    }

    fn arb_simplex() -> impl Strategy<Value = MassPartition> {
        prop::collection::vec(1e-6f64..1.0, 1..20).prop_map(|raw| {
            let s: f64 = raw.iter().sum();
            MassPartition::new(raw.iter().map(|r| r / s).collect(), 1.0).unwrap()
        })
    }

    proptest! {
        #[test]
        fn frag_coag_conserve_total(x in arb_simplex(), k in 1usize..5, seed in any::<u64>()) {
            let mut rng = RngStream::new(seed, 0);
            let f = frag_k(&x, k, &mut rng).unwrap();
            prop_assert_eq!(f.output.len(), x.len() + k);
            prop_assert!(f.output.is_valid());
            let c = coag_k(&f.output, k, &mut rng).unwrap();
            prop_assert_eq!(c.output.len(), x.len());
            prop_assert!(c.output.is_valid());
            // Untouched entries keep their position.
            let j = c.merge_start;
            prop_assert_eq!(&c.output.masses()[..j], &f.output.masses()[..j]);
            prop_assert_eq!(&c.output.masses()[j + 1..], &f.output.masses()[j + k + 1..]);
        }
    }
}
