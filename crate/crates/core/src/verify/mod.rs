//! Named verification scenarios and the multiple-seed pass rule.
//!
//! Every scenario runs on [`REPLICATES`] disjoint random streams derived
//! from one seed. Each replicate produces a list of sub-test outcomes; a
//! sub-test passes when at least [`REQUIRED_PASSES`] replicates meet its
//! threshold, and the scenario passes when every sub-test does.

mod scenarios;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::rng::{stream_id, RngStream};
use crate::stats::{normal_two_sided_p, ChiSquare, TestResult, Z_THRESHOLD};

pub use scenarios::SCENARIOS;

/// Significance threshold for KS and chi-square sub-tests.
pub const P_THRESHOLD: f64 = 0.01;
/// Disjoint seeds per scenario.
pub const REPLICATES: u64 = 3;
/// Replicates that must pass for a sub-test to pass.
pub const REQUIRED_PASSES: usize = 2;

/// One statistic from one replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatLine {
    pub name: String,
    pub value: f64,
    pub p: Option<f64>,
    pub pass: bool,
}

/// Aggregated verdict for a sub-test across replicates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubtestVerdict {
    pub name: String,
    pub passes: usize,
    pub replicates: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub params: BTreeMap<String, f64>,
    pub n: usize,
    pub seed: u64,
    pub stats: Vec<StatLine>,
    pub subtests: Vec<SubtestVerdict>,
    pub passed: bool,
    /// Wall-clock time; only filled in on request since it breaks
    /// byte-identical output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<u64>,
}

/// Outcome of one sub-test on one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub name: String,
    pub value: f64,
    pub p: Option<f64>,
    pub pass: bool,
}

impl Outcome {
    pub fn ks(name: impl Into<String>, r: TestResult) -> Self {
        Self {
            name: name.into(),
            value: r.statistic,
            p: Some(r.p_value),
            pass: r.p_value > P_THRESHOLD,
        }
    }

    pub fn chi(name: impl Into<String>, r: ChiSquare) -> Self {
        Self {
            name: name.into(),
            value: r.statistic,
            p: Some(r.p_value),
            pass: r.p_value > P_THRESHOLD,
        }
    }

    /// z-score sub-test: passes when `|z| <= 5`.
    pub fn z(name: impl Into<String>, z: f64) -> Self {
        Self {
            name: name.into(),
            value: z,
            p: Some(normal_two_sided_p(z)),
            pass: z.abs() <= Z_THRESHOLD,
        }
    }

    /// Sample correlation that must lie within `±5/sqrt(n)`.
    pub fn uncorrelated(name: impl Into<String>, r: f64, n: usize) -> Self {
        let z = r * (n as f64).sqrt();
        Self::z(name, z)
    }
}

/// Parameter declaration for a scenario.
#[derive(Debug, Clone, Copy)]
pub struct ParamSpec {
    pub name: &'static str,
    /// `None` marks a parameter whose default is derived from the others.
    pub default: Option<f64>,
    pub integer: bool,
}

/// A named scenario.
pub struct Scenario {
    pub name: &'static str,
    pub statement: &'static str,
    pub params: &'static [ParamSpec],
    pub default_samples: usize,
    pub(crate) run: fn(&Ctx) -> Result<Vec<Outcome>>,
}

impl std::fmt::Debug for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scenario").field("name", &self.name).finish()
    }
}

/// Names of all scenarios, in listing order.
pub fn list_scenarios() -> Vec<&'static str> {
    SCENARIOS.iter().map(|s| s.name).collect()
}

pub fn find_scenario(name: &str) -> Result<&'static Scenario> {
    SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

/// Everything a scenario needs for one replicate.
pub struct Ctx<'a> {
    scenario: &'a str,
    params: &'a BTreeMap<String, f64>,
    pub n: usize,
    seed: u64,
    replicate: u64,
}

impl Ctx<'_> {
    pub fn param(&self, name: &str) -> Result<f64> {
        self.params.get(name).copied().ok_or_else(|| Error::MissingParam {
            scenario: self.scenario.to_string(),
            param: name.to_string(),
        })
    }

    pub fn int_param(&self, name: &str) -> Result<usize> {
        Ok(self.param(name)? as usize)
    }

    /// `count` independent draws, each from its own stream keyed by the
    /// scenario, `tag`, replicate and draw index. The result does not depend
    /// on how the work is scheduled.
    pub fn draw<T, F>(&self, tag: &str, count: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut RngStream) -> Result<T> + Sync + Send,
    {
        let tag = format!("{}/{}/rep{}", self.scenario, tag, self.replicate);
        (0..count)
            .into_par_iter()
            .map(|i| f(&mut RngStream::new(self.seed, stream_id(&tag, i as u64))))
            .collect()
    }
}

/// Child stream for a sub-simulation that needs its own generator.
pub(crate) fn child(rng: &mut RngStream) -> RngStream {
    use rand::RngCore;
    RngStream::new(rng.seed(), rng.next_u64())
}

fn resolve_params(scenario: &Scenario, given: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    for key in given.keys() {
        if !scenario.params.iter().any(|p| p.name == key) {
            return Err(invalid(format!("scenario {} has no parameter {key:?}", scenario.name)));
        }
    }
    let mut out = BTreeMap::new();
    for p in scenario.params {
        if let Some(v) = given.get(p.name).copied().or(p.default) {
            if !v.is_finite() || (p.integer && (v.fract() != 0.0 || v < 0.0)) {
                return Err(invalid(format!("parameter {} = {v} is not valid", p.name)));
            }
            out.insert(p.name.to_string(), v);
        }
    }
    scenarios::derive_defaults(scenario.name, &mut out);
    for p in scenario.params {
        if !out.contains_key(p.name) {
            return Err(Error::MissingParam {
                scenario: scenario.name.to_string(),
                param: p.name.to_string(),
            });
        }
    }
    Ok(out)
}

/// Runs `scenario` with `n` samples per side (the scenario default when
/// `None`) on [`REPLICATES`] disjoint streams derived from `seed`.
pub fn run_verification(
    scenario: &str,
    params: &BTreeMap<String, f64>,
    n: Option<usize>,
    seed: u64,
) -> Result<VerificationReport> {
    let entry = find_scenario(scenario)?;
    let params = resolve_params(entry, params)?;
    let n = n.unwrap_or(entry.default_samples);
    if n < 100 {
        return Err(invalid(format!("need at least 100 samples, got {n}")));
    }
    let mut stats = Vec::new();
    let mut verdicts: Vec<SubtestVerdict> = Vec::new();
    for replicate in 0..REPLICATES {
        let ctx = Ctx {
            scenario: entry.name,
            params: &params,
            n,
            seed,
            replicate,
        };
        for o in (entry.run)(&ctx)? {
            match verdicts.iter_mut().find(|v| v.name == o.name) {
                Some(v) => {
                    v.replicates += 1;
                    v.passes += o.pass as usize;
                }
                None => verdicts.push(SubtestVerdict {
                    name: o.name.clone(),
                    passes: o.pass as usize,
                    replicates: 1,
                    passed: false,
                }),
            }
            stats.push(StatLine {
                name: format!("{}/rep{replicate}", o.name),
                value: o.value,
                p: o.p,
                pass: o.pass,
            });
        }
    }
    for v in &mut verdicts {
        v.passed = v.passes >= REQUIRED_PASSES;
    }
    let passed = !verdicts.is_empty() && verdicts.iter().all(|v| v.passed);
    Ok(VerificationReport {
        scenario: entry.name.to_string(),
        params,
        n,
        seed,
        stats,
        subtests: verdicts,
        passed,
        runtime_ms: None,
    })
}

/// [`run_verification`] with the wall-clock time recorded.
pub fn run_verification_timed(
    scenario: &str,
    params: &BTreeMap<String, f64>,
    n: Option<usize>,
    seed: u64,
) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut report = run_verification(scenario, params, n, seed)?;
    report.runtime_ms = Some(start.elapsed().as_millis() as u64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_is_complete_and_unique() {
        let names = list_scenarios();
        for expected in [
            "prop1",
            "prop1_reverse",
            "coag_tilde",
            "prop2",
            "prop2_reverse",
            "palm",
            "chain_k",
            "chain_inf",
            "bridge",
            "lemma1",
            "thm1",
            "kendall",
            "cor1",
            "lemma2",
            "thm2",
            "cor2",
        ] {
            assert!(names.contains(&expected), "{expected}");
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
    }

    #[test]
    fn unknown_scenario_and_param() {
        let empty = BTreeMap::new();
        assert!(matches!(
            run_verification("nope", &empty, None, 0),
            Err(Error::UnknownScenario(_))
        ));
        let mut bad = BTreeMap::new();
        bad.insert("zeta".to_string(), 1.0);
        assert!(run_verification("prop1", &bad, Some(200), 0).is_err());
        let mut frac = BTreeMap::new();
        frac.insert("k".to_string(), 1.5);
        assert!(run_verification("prop1", &frac, Some(200), 0).is_err());
    }

    #[test]
    fn reports_are_deterministic() {
        let empty = BTreeMap::new();
        let a = run_verification("prop1", &empty, Some(500), 9).unwrap();
        let b = run_verification("prop1", &empty, Some(500), 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.stats.len(), 3 * a.subtests.len());
        assert!(a.runtime_ms.is_none());
        let c = run_verification("prop1", &empty, Some(500), 10).unwrap();
        assert_ne!(a.stats, c.stats);
    }

    #[test]
    fn two_of_three_rule() {
        let empty = BTreeMap::new();
        let r = run_verification("cor1", &empty, Some(300), 1).unwrap();
        for v in &r.subtests {
            let passes = r
                .stats
                .iter()
                .filter(|s| s.name.rsplit_once('/').unwrap().0 == v.name && s.pass)
                .count();
            assert_eq!(passes, v.passes);
            assert_eq!(v.passed, passes >= 2);
        }
        assert_eq!(r.passed, r.subtests.iter().all(|v| v.passed));
    }
}
