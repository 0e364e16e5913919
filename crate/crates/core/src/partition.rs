//! Mass partitions: positional simplex points, ranked sequences and
//! truncated representations of infinite ranked sequences.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Relative tolerance on `|sum(masses) - total|`.
pub const SUM_TOLERANCE: f64 = 1e-12;

/// A single broken invariant, with the offending magnitude.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    NonFinite { index: usize, value: f64 },
    NonPositiveTotal { total: f64 },
    NegativeMass { index: usize, value: f64 },
    NonPositiveAtom { index: usize, value: f64 },
    NotDecreasing { index: usize, left: f64, right: f64 },
    NegativeTail { tail: f64 },
    SumMismatch { sum: f64, total: f64, diff: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "no masses"),
            Violation::NonFinite { index, value } => write!(f, "mass {index} is not finite ({value})"),
            Violation::NonPositiveTotal { total } => write!(f, "total {total} is not positive"),
            Violation::NegativeMass { index, value } => write!(f, "negative mass {value} at {index}"),
            Violation::NonPositiveAtom { index, value } => {
                write!(f, "atom {index} is not positive ({value})")
            }
            Violation::NotDecreasing { index, left, right } => {
                write!(f, "not decreasing at {index}: {left} < {right}")
            }
            Violation::NegativeTail { tail } => write!(f, "negative tail mass {tail}"),
            Violation::SumMismatch { sum, total, diff } => {
                write!(f, "sum {sum} differs from total {total} by {diff}")
            }
        }
    }
}

/// Invariant checking shared by all partition types. Violations are data:
/// an empty list means the value is valid.
pub trait Validate {
    fn violations(&self) -> Vec<Violation>;

    fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

fn check_masses(masses: &[f64], tail: f64, total: f64, strict_positive: bool) -> Vec<Violation> {
    let mut out = Vec::new();
    if masses.is_empty() && tail == 0.0 {
        out.push(Violation::Empty);
    }
    if !(total > 0.0 && total.is_finite()) {
        out.push(Violation::NonPositiveTotal { total });
    }
    for (index, &value) in masses.iter().enumerate() {
        if !value.is_finite() {
            out.push(Violation::NonFinite { index, value });
        } else if strict_positive && value <= 0.0 {
            out.push(Violation::NonPositiveAtom { index, value });
        } else if value < 0.0 {
            out.push(Violation::NegativeMass { index, value });
        }
    }
    if tail < 0.0 {
        out.push(Violation::NegativeTail { tail });
    }
    let sum: f64 = masses.iter().sum::<f64>() + tail;
    let diff = (sum - total).abs();
    if !(diff <= SUM_TOLERANCE * total.abs()) {
        out.push(Violation::SumMismatch { sum, total, diff });
    }
    out
}

fn check_decreasing(masses: &[f64]) -> Vec<Violation> {
    masses
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] < w[1])
        .map(|(index, w)| Violation::NotDecreasing {
            index,
            left: w[0],
            right: w[1],
        })
        .collect()
}

fn reject(violations: Vec<Violation>) -> Error {
    let msg: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    invalid(msg.join("; "))
}

fn desc(a: &f64, b: &f64) -> Ordering {
    b.total_cmp(a)
}

/// A point of a (possibly scaled) simplex, with position-significant masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct MassPartition {
    masses: Vec<f64>,
    total: f64,
}

impl MassPartition {
    pub fn new(masses: Vec<f64>, total: f64) -> Result<Self> {
        let p = Self::from_raw(masses, total);
        let v = p.violations();
        if v.is_empty() {
            Ok(p)
        } else {
            Err(reject(v))
        }
    }

    /// Builds a partition whose total is the sum of `masses`.
    pub fn from_masses(masses: Vec<f64>) -> Result<Self> {
        let total = masses.iter().sum();
        Self::new(masses, total)
    }

    /// Unchecked constructor; pair with [`Validate::violations`].
    pub fn from_raw(masses: Vec<f64>, total: f64) -> Self {
        Self { masses, total }
    }

    /// The single point `(1)` of the zero-dimensional simplex.
    pub fn unit() -> Self {
        Self {
            masses: vec![1.0],
            total: 1.0,
        }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn into_masses(self) -> Vec<f64> {
        self.masses
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// Multiplies every mass and the total by `w`.
    pub fn scaled(&self, w: f64) -> Self {
        Self {
            masses: self.masses.iter().map(|m| m * w).collect(),
            total: self.total * w,
        }
    }
}

impl Validate for MassPartition {
    fn violations(&self) -> Vec<Violation> {
        check_masses(&self.masses, 0.0, self.total, false)
    }
}

/// A decreasing sequence of nonnegative masses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct RankedPartition {
    masses: Vec<f64>,
    total: f64,
}

impl RankedPartition {
    pub fn new(masses: Vec<f64>, total: f64) -> Result<Self> {
        let p = Self { masses, total };
        let v = p.violations();
        if v.is_empty() {
            Ok(p)
        } else {
            Err(reject(v))
        }
    }

    pub fn from_raw(masses: Vec<f64>, total: f64) -> Self {
        Self { masses, total }
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.nth_largest(0)
    }

    /// `i`-th largest mass (0-based); zero past the end.
    pub fn nth_largest(&self, i: usize) -> f64 {
        self.masses.get(i).copied().unwrap_or(0.0)
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.masses.iter().map(|m| m * m).sum()
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            masses: self.masses.iter().map(|m| m * w).collect(),
            total: self.total * w,
        }
    }

    pub fn into_truncated(self) -> TruncatedRankedPartition {
        let total = self.total;
        let atoms: Vec<f64> = self.masses.into_iter().filter(|&m| m > 0.0).collect();
        TruncatedRankedPartition::from_raw(atoms, 0.0, total)
    }
}

impl Validate for RankedPartition {
    fn violations(&self) -> Vec<Violation> {
        let mut v = check_masses(&self.masses, 0.0, self.total, false);
        v.extend(check_decreasing(&self.masses));
        v
    }
}

/// Finite stand-in for a point of the infinite ranked simplex: the retained
/// atoms in decreasing order plus the total mass of everything not
/// represented. Every unrepresented atom is at most `tail_mass`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPartition", into = "RawPartition")]
pub struct TruncatedRankedPartition {
    atoms: Vec<f64>,
    tail_mass: f64,
    total: f64,
}

impl TruncatedRankedPartition {
    pub fn new(atoms: Vec<f64>, tail_mass: f64, total: f64) -> Result<Self> {
        let p = Self::from_raw(atoms, tail_mass, total);
        let v = p.violations();
        if v.is_empty() {
            Ok(p)
        } else {
            Err(reject(v))
        }
    }

    pub fn from_raw(atoms: Vec<f64>, tail_mass: f64, total: f64) -> Self {
        Self {
            atoms,
            tail_mass,
            total,
        }
    }

    /// Ranks `atoms` (dropping zeros) and attaches the tail.
    pub(crate) fn from_unsorted(mut atoms: Vec<f64>, tail_mass: f64, total: f64) -> Self {
        atoms.retain(|&a| a > 0.0);
        atoms.sort_by(desc);
        Self::from_raw(atoms, tail_mass, total)
    }

    /// The degenerate state `(1)`.
    pub fn unit() -> Self {
        Self::from_raw(vec![1.0], 0.0, 1.0)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.nth_largest(0)
    }

    pub fn nth_largest(&self, i: usize) -> f64 {
        self.atoms.get(i).copied().unwrap_or(0.0)
    }

    pub fn smallest_atom(&self) -> Option<f64> {
        self.atoms.last().copied()
    }

    /// Sum of squares of the retained atoms.
    pub fn sum_of_squares(&self) -> f64 {
        self.atoms.iter().map(|m| m * m).sum()
    }

    pub fn scaled(&self, w: f64) -> Self {
        Self {
            atoms: self.atoms.iter().map(|m| m * w).collect(),
            tail_mass: self.tail_mass * w,
            total: self.total * w,
        }
    }

    /// Divides through by the total so that it becomes one.
    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.total)
    }
}

impl Validate for TruncatedRankedPartition {
    fn violations(&self) -> Vec<Violation> {
        let mut v = check_masses(&self.atoms, self.tail_mass, self.total, true);
        v.extend(check_decreasing(&self.atoms));
        v
    }
}

/// Stable decreasing rearrangement. No arithmetic is performed on masses.
pub fn rank(x: &MassPartition) -> RankedPartition {
    let mut masses = x.masses.clone();
    masses.sort_by(desc);
    RankedPartition {
        masses,
        total: x.total,
    }
}

/// Smallest index `i` (0-based) whose normalised cumulative mass exceeds
/// `u`. For `u ~ Uniform[0,1)` this picks `i` with probability
/// `masses[i] / total`.
pub fn size_biased_index(masses: &[f64], total: f64, u: f64) -> Result<usize> {
    if !(total > 0.0) || masses.is_empty() {
        return Err(invalid(format!("size-biased pick needs positive total, got {total}")));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(invalid(format!("uniform variate {u} outside [0,1)")));
    }
    let mut cum = 0.0;
    for (i, &m) in masses.iter().enumerate() {
        cum += m;
        if cum / total > u {
            return Ok(i);
        }
    }
    // Rounding left the cumulative sum just short of `total`.
    masses
        .iter()
        .rposition(|&m| m > 0.0)
        .ok_or_else(|| invalid("size-biased pick over zero masses"))
}

impl MassPartition {
    pub fn size_biased_index(&self, u: f64) -> Result<usize> {
        size_biased_index(&self.masses, self.total, u)
    }
}

#[derive(Serialize, Deserialize)]
struct RawPartition {
    masses: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_mass: Option<f64>,
    total: f64,
}

impl TryFrom<RawPartition> for MassPartition {
    type Error = Error;

    fn try_from(r: RawPartition) -> Result<Self> {
        if r.tail_mass.is_some() {
            return Err(Error::Parse("finite partition carries a tail_mass".into()));
        }
        MassPartition::new(r.masses, r.total)
    }
}

impl From<MassPartition> for RawPartition {
    fn from(p: MassPartition) -> Self {
        RawPartition {
            masses: p.masses,
            tail_mass: None,
            total: p.total,
        }
    }
}

impl TryFrom<RawPartition> for RankedPartition {
    type Error = Error;

    fn try_from(r: RawPartition) -> Result<Self> {
        if r.tail_mass.is_some() {
            return Err(Error::Parse("finite partition carries a tail_mass".into()));
        }
        RankedPartition::new(r.masses, r.total)
    }
}

impl From<RankedPartition> for RawPartition {
    fn from(p: RankedPartition) -> Self {
        RawPartition {
            masses: p.masses,
            tail_mass: None,
            total: p.total,
        }
    }
}

impl TryFrom<RawPartition> for TruncatedRankedPartition {
    type Error = Error;

    fn try_from(r: RawPartition) -> Result<Self> {
        TruncatedRankedPartition::new(r.masses, r.tail_mass.unwrap_or(0.0), r.total)
    }
}

impl From<TruncatedRankedPartition> for RawPartition {
    fn from(p: TruncatedRankedPartition) -> Self {
        RawPartition {
            masses: p.atoms,
            tail_mass: Some(p.tail_mass),
            total: p.total,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn mp(xs: &[f64]) -> MassPartition {
        MassPartition::new(xs.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn rank_sorts_decreasing() {
        assert_eq!(rank(&mp(&[0.2, 0.5, 0.3])).masses(), &[0.5, 0.3, 0.2]);
        assert_eq!(rank(&mp(&[1.0])).masses(), &[1.0]);
    }

    #[test]
    fn rank_keeps_ties_in_encounter_order() {
        // Equal floats are indistinguishable, so check the comparator's
        // stability on (value, position) pairs.
        let x = mp(&[0.25, 0.25, 0.5]);
        let r = rank(&x);
        assert_eq!(r.masses(), &[0.5, 0.25, 0.25]);
        let mut tagged: Vec<(f64, usize)> = x.masses().iter().copied().zip(0..).collect();
        tagged.sort_by(|a, b| desc(&a.0, &b.0));
        assert_eq!(tagged.iter().map(|t| t.1).collect::<Vec<_>>(), vec![2, 0, 1]);
    }

    #[test]
    fn size_biased_index_inverse_cdf() {
        let x = mp(&[0.2, 0.3, 0.5]);
        assert_eq!(x.size_biased_index(0.45).unwrap(), 1);
        assert_eq!(x.size_biased_index(0.0).unwrap(), 0);
        assert_eq!(x.size_biased_index(0.999).unwrap(), 2);
        assert_eq!(mp(&[1.0]).size_biased_index(0.7).unwrap(), 0);
        // Strict inequality: cumulative 0.5 does not exceed 0.5.
        assert_eq!(mp(&[0.5, 0.5]).size_biased_index(0.5).unwrap(), 1);
    }

    #[test]
    fn size_biased_index_skips_zero_masses() {
        let x = mp(&[0.0, 0.4, 0.0, 0.6]);
        assert_eq!(x.size_biased_index(0.0).unwrap(), 1);
        assert_eq!(x.size_biased_index(0.4).unwrap(), 3);
    }

    #[test]
    fn size_biased_index_rejects_degenerate_input() {
        assert!(size_biased_index(&[0.0, 0.0], 0.0, 0.3).is_err());
        assert!(size_biased_index(&[], 1.0, 0.3).is_err());
        assert!(mp(&[1.0]).size_biased_index(1.0).is_err());
    }

    #[test]
    fn size_biased_index_frequencies() {
        let x = mp(&[0.1, 0.2, 0.3, 0.4]);
        let n = 100_000;
        let mut rng = RngStream::new(11, 0);
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[x.size_biased_index(rng.uniform()).unwrap()] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let p = x.masses()[i];
            let freq = c as f64 / n as f64;
            assert!((freq - p).abs() <= 5.0 * (p / n as f64).sqrt(), "{i}: {freq} vs {p}");
        }
    }

    #[test]
    fn validate_reports_violations() {
        assert!(MassPartition::from_raw(vec![0.5, 0.5], 1.0).is_valid());

        let v = MassPartition::from_raw(vec![0.5, -0.1, 0.6], 1.0).violations();
        assert_eq!(v, vec![Violation::NegativeMass { index: 1, value: -0.1 }]);

        let v = MassPartition::from_raw(vec![0.5, 0.4], 1.0).violations();
        match v.as_slice() {
            [Violation::SumMismatch { diff, .. }] => assert!((diff - 0.1).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_ranked_and_truncated() {
        let v = RankedPartition::from_raw(vec![0.3, 0.7], 1.0).violations();
        assert!(matches!(v.as_slice(), [Violation::NotDecreasing { index: 0, .. }]));

        assert!(TruncatedRankedPartition::from_raw(vec![0.6, 0.3], 0.1, 1.0).is_valid());
        let v = TruncatedRankedPartition::from_raw(vec![0.6, 0.0], 0.4, 1.0).violations();
        assert!(matches!(v.as_slice(), [Violation::NonPositiveAtom { index: 1, .. }]));
        let v = TruncatedRankedPartition::from_raw(vec![0.6], -0.1, 0.5).violations();
        assert!(v.contains(&Violation::NegativeTail { tail: -0.1 }));
    }

    #[test]
    fn json_layout() {
        let s = serde_json::to_string(&mp(&[0.25, 0.75])).unwrap();
        assert_eq!(s, r#"{"masses":[0.25,0.75],"total":1.0}"#);
        let t = TruncatedRankedPartition::new(vec![0.75, 0.25], 0.0, 1.0).unwrap();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"masses":[0.75,0.25],"tail_mass":0.0,"total":1.0}"#);
        let back: TruncatedRankedPartition = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<MassPartition>(r#"{"masses":[0.5,0.4],"total":1.0}"#).is_err());
    }

    fn arb_partition() -> impl Strategy<Value = MassPartition> {
        prop::collection::vec(0.0f64..10.0, 1..40).prop_filter_map("positive total", |raw| {
            let s: f64 = raw.iter().sum();
            (s > 0.0).then(|| MassPartition::from_masses(raw).unwrap())
        })
    }

    proptest! {
        #[test]
        fn rank_is_idempotent(x in arb_partition()) {
            let once = rank(&x);
            let twice = rank(&MassPartition::from_raw(once.masses().to_vec(), once.total()));
            prop_assert_eq!(&once, &twice);
            prop_assert!(once.is_valid());
        }

        #[test]
        fn rank_preserves_multiset_and_total(x in arb_partition()) {
            let r = rank(&x);
            prop_assert_eq!(r.total(), x.total());
            let mut a: Vec<u64> = x.masses().iter().map(|m| m.to_bits()).collect();
            let mut b: Vec<u64> = r.masses().iter().map(|m| m.to_bits()).collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }
    }
}
