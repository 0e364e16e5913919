//! The scenario battery: each entry pairs a sampler built from the library
//! with an independent sampler (or closed form) for the law it should have.

use std::collections::BTreeMap;

use super::{child, Ctx, Outcome, ParamSpec, Scenario};
use crate::chains::{dirichlet_start, run_coalescent_inf, run_coalescent_k, run_frag_chain_inf, run_frag_chain_k, subordinated_path, FragChainInf, FragChainK};
use crate::distributions::{sample_dirichlet_sym, sample_gamma, sample_gamma_jumps, sample_pd, DEFAULT_EPSILON, DEFAULT_TAIL_TOL};
use crate::error::{invalid, Result};
use crate::operators::{bridge_compose, coag_a, coag_k, coag_k_tilde, frag_inf, frag_k};
use crate::partition::{rank, TruncatedRankedPartition};
use crate::rng::RngStream;
use crate::stats::{chi_square_gof, correlation, exp_cdf, ks_one_sample, ks_two_sample, moment_check, poisson_cells};
use crate::yule::{
    cs_yule_at, genealogy_marginal_cont, genealogy_marginal_k, genealogy_path_k, sample_w, simulate_cs_yule, simulate_yule_counts_from,
    time_change, yule_count_ahead, yule_count_at, yule_pgf, Direction,
};

const fn int(name: &'static str, default: f64) -> ParamSpec {
    ParamSpec {
        name,
        default: Some(default),
        integer: true,
    }
}

const fn real(name: &'static str, default: f64) -> ParamSpec {
    ParamSpec {
        name,
        default: Some(default),
        integer: false,
    }
}

const fn derived(name: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        default: None,
        integer: false,
    }
}

pub static SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "prop1",
        statement: "Frag_k maps Dir_nk(1/k) to Dir_(n+1)k(1/k); the size-biased index is uniform",
        params: &[int("k", 1.0), int("n", 2.0)],
        default_samples: 20_000,
        run: prop1,
    },
    Scenario {
        name: "prop1_reverse",
        statement: "Coag_k maps Dir_(n+1)k(1/k) to Dir_nk(1/k), jointly reversing Frag_k",
        params: &[int("k", 1.0), int("n", 1.0)],
        default_samples: 20_000,
        run: prop1_reverse,
    },
    Scenario {
        name: "coag_tilde",
        statement: "for exchangeable input, ranked Coag_k and the uniform-subset merge agree jointly with the input",
        params: &[int("k", 2.0), int("n", 1.0)],
        default_samples: 20_000,
        run: coag_tilde,
    },
    Scenario {
        name: "prop2",
        statement: "Frag_inf maps PD(theta) to PD(theta+1)",
        params: &[real("theta", 1.0)],
        default_samples: 20_000,
        run: prop2,
    },
    Scenario {
        name: "prop2_reverse",
        statement: "Coag_1/(theta+1) maps PD(theta+1) to PD(theta)",
        params: &[real("theta", 1.0)],
        default_samples: 20_000,
        run: prop2_reverse,
    },
    Scenario {
        name: "palm",
        statement: "adding an Exp(1)-scaled PD(1) family to the gamma atoms of PD(theta) reproduces Frag_inf(PD(theta))",
        params: &[real("theta", 1.0)],
        default_samples: 20_000,
        run: palm,
    },
    Scenario {
        name: "chain_k",
        statement: "X^(k)(n) has law Dir_nk(1/k)",
        params: &[int("k", 2.0), int("steps", 3.0)],
        default_samples: 20_000,
        run: chain_k,
    },
    Scenario {
        name: "chain_inf",
        statement: "X^(inf)(n) started from PD(theta) has law PD(theta+n)",
        params: &[real("theta", 1.0), int("steps", 2.0)],
        default_samples: 20_000,
        run: chain_inf,
    },
    Scenario {
        name: "bridge",
        statement: "ranked jumps of the composed elementary bridges at level n have law PD(n)",
        params: &[int("depth", 200.0), int("level", 1.0)],
        default_samples: 10_000,
        run: bridge,
    },
    Scenario {
        name: "lemma1",
        statement: "e^(-kt) Y^(k)_t converges to Gamma(1/k,1/k); the pgf has the closed form",
        params: &[int("k", 1.0), derived("t")],
        default_samples: 20_000,
        run: lemma1,
    },
    Scenario {
        name: "thm1",
        statement: "the time-changed genealogy of Y^(k) is the Poisson-subordinated Frag_k chain scaled by W",
        params: &[int("k", 1.0), real("t", 0.7)],
        default_samples: 20_000,
        run: thm1,
    },
    Scenario {
        name: "kendall",
        statement: "given W, Y^(1) at log(1+s/W) is a unit Poisson process in s",
        params: &[real("horizon", 12.0), int("window", 10.0)],
        default_samples: 10_000,
        run: kendall,
    },
    Scenario {
        name: "cor1",
        statement: "the reversed genealogy holds Exp(n) in Delta_nk, then applies Coag_k",
        params: &[int("k", 1.0), int("n", 3.0)],
        default_samples: 10_000,
        run: cor1,
    },
    Scenario {
        name: "lemma2",
        statement: "the continuous-state Yule process normalizes to a standard gamma process",
        params: &[real("a", 1.0), real("t", 1.0)],
        default_samples: 20_000,
        run: lemma2,
    },
    Scenario {
        name: "thm2",
        statement: "the time-changed continuous-state genealogy is the Poisson-subordinated Frag_inf chain from PD(a)",
        params: &[real("a", 1.0), real("t", 1.0)],
        default_samples: 10_000,
        run: thm2,
    },
    Scenario {
        name: "cor2",
        statement: "the reversed continuous-state genealogy holds Exp(n), then applies Coag_1/(n+a)",
        params: &[real("a", 1.0), int("n", 3.0)],
        default_samples: 10_000,
        run: cor2,
    },
];

/// Fills in parameters whose default depends on the others.
pub(super) fn derive_defaults(scenario: &str, params: &mut BTreeMap<String, f64>) {
    if scenario == "lemma1" && !params.contains_key("t") {
        if let Some(&k) = params.get("k") {
            params.insert("t".to_string(), 8.0 / k);
        }
    }
}

fn ks(name: &str, xs: &[f64], ys: &[f64]) -> Result<Outcome> {
    Ok(Outcome::ks(name, ks_two_sample(xs, ys)?))
}

fn ks_exp(name: &str, xs: &[f64], rate: f64) -> Result<Outcome> {
    Ok(Outcome::ks(name, ks_one_sample(xs, exp_cdf(rate))?))
}

fn column<T>(rows: &[T], f: impl Fn(&T) -> f64) -> Vec<f64> {
    rows.iter().map(f).collect()
}

fn positive_int(ctx: &Ctx, name: &str) -> Result<usize> {
    let v = ctx.int_param(name)?;
    if v == 0 {
        return Err(invalid(format!("{name} must be at least 1")));
    }
    Ok(v)
}

fn positive_real(ctx: &Ctx, name: &str) -> Result<f64> {
    let v = ctx.param(name)?;
    if !(v > 0.0) {
        return Err(invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(v)
}

/// Largest, second largest and sum of squares of a ranked sample.
fn ranked_stats(masses: &[f64]) -> [f64; 3] {
    [
        masses.first().copied().unwrap_or(0.0),
        masses.get(1).copied().unwrap_or(0.0),
        masses.iter().map(|x| x * x).sum(),
    ]
}

fn uniform_counts(indices: impl Iterator<Item = usize>, cells: usize) -> Vec<u64> {
    let mut counts = vec![0u64; cells];
    for i in indices {
        counts[i] += 1;
    }
    counts
}

fn prop1(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let k = positive_int(ctx, "k")?;
    let n = ctx.int_param("n")?;
    let alpha = 1.0 / k as f64;
    let frag = ctx.draw("frag", ctx.n, |rng| {
        let x = sample_dirichlet_sym(n * k + 1, alpha, rng)?;
        let rec = frag_k(&x, k, rng)?;
        Ok((ranked_stats(rank(&rec.output).masses()), rec.chosen_index))
    })?;
    let target = ctx.draw("dirichlet", ctx.n, |rng| {
        Ok(ranked_stats(rank(&sample_dirichlet_sym((n + 1) * k + 1, alpha, rng)?).masses()))
    })?;
    let cells = n * k + 1;
    let counts = uniform_counts(frag.iter().map(|r| r.1), cells);
    Ok(vec![
        ks("ks_largest", &column(&frag, |r| r.0[0]), &column(&target, |r| r[0]))?,
        ks("ks_second", &column(&frag, |r| r.0[1]), &column(&target, |r| r[1]))?,
        Outcome::chi("chi2_index", chi_square_gof(&counts, &vec![1.0 / cells as f64; cells])?),
    ])
}

fn prop1_reverse(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let k = positive_int(ctx, "k")?;
    let n = ctx.int_param("n")?;
    let alpha = 1.0 / k as f64;
    // (xi, xi') from Coag_k on xi' ~ Dir_(n+1)k.
    let coag = ctx.draw("coag", ctx.n, |rng| {
        let y = sample_dirichlet_sym((n + 1) * k + 1, alpha, rng)?;
        let rec = coag_k(&y, k, rng)?;
        let first = rec.output.masses()[0];
        let largest = rank(&rec.output).largest();
        Ok((first, largest, largest - rank(&y).largest(), rec.merge_start))
    })?;
    let target = ctx.draw("dirichlet", ctx.n, |rng| {
        let x = sample_dirichlet_sym(n * k + 1, alpha, rng)?;
        Ok((x.masses()[0], rank(&x).largest()))
    })?;
    // (xi, xi') from Frag_k on xi ~ Dir_nk.
    let frag = ctx.draw("frag", ctx.n, |rng| {
        let x = sample_dirichlet_sym(n * k + 1, alpha, rng)?;
        let y = frag_k(&x, k, rng)?.output;
        Ok(rank(&x).largest() - rank(&y).largest())
    })?;
    let cells = n * k + 1;
    let counts = uniform_counts(coag.iter().map(|r| r.3), cells);
    Ok(vec![
        ks("ks_first", &column(&coag, |r| r.0), &column(&target, |r| r.0))?,
        ks("ks_largest", &column(&coag, |r| r.1), &column(&target, |r| r.1))?,
        ks("ks_pair_gap", &column(&coag, |r| r.2), &frag)?,
        Outcome::chi("chi2_merge_start", chi_square_gof(&counts, &vec![1.0 / cells as f64; cells])?),
    ])
}

fn coag_tilde(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let k = positive_int(ctx, "k")?;
    let n = ctx.int_param("n")?;
    let alpha = 1.0 / k as f64;
    let parts = n + k + 1;
    // The pair law is only invariant jointly with the ranked input: given
    // the ranked masses, exchangeability makes the contiguous block a
    // uniform subset, but a labelled coordinate sees the block's edges.
    let pair = |out: &[f64], x: &[f64]| {
        let top = x.iter().copied().fold(0.0, f64::max);
        (out[0], out[0] * top, out[0] - top)
    };
    let contiguous = ctx.draw("contiguous", ctx.n, |rng| {
        let x = sample_dirichlet_sym(parts, alpha, rng)?;
        let out = rank(&coag_k(&x, k, rng)?.output);
        Ok(pair(out.masses(), x.masses()))
    })?;
    let subset = ctx.draw("subset", ctx.n, |rng| {
        let x = sample_dirichlet_sym(parts, alpha, rng)?;
        let out = coag_k_tilde(&x, k, rng)?;
        Ok(pair(out.masses(), x.masses()))
    })?;
    Ok(vec![
        ks("ks_largest", &column(&contiguous, |r| r.0), &column(&subset, |r| r.0))?,
        ks("ks_largest_times_input_largest", &column(&contiguous, |r| r.1), &column(&subset, |r| r.1))?,
        ks("ks_largest_gain", &column(&contiguous, |r| r.2), &column(&subset, |r| r.2))?,
    ])
}

fn pd_stats(x: &TruncatedRankedPartition) -> [f64; 3] {
    ranked_stats(x.atoms())
}

fn pd_sample(theta: f64, rng: &mut RngStream) -> Result<[f64; 3]> {
    Ok(pd_stats(&sample_pd(theta, DEFAULT_TAIL_TOL, rng)?))
}

fn compare_pd(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<Vec<Outcome>> {
    Ok(vec![
        ks("ks_largest", &column(a, |r| r[0]), &column(b, |r| r[0]))?,
        ks("ks_sum_squares", &column(a, |r| r[2]), &column(b, |r| r[2]))?,
    ])
}

fn prop2(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let theta = positive_real(ctx, "theta")?;
    let frag = ctx.draw("frag", ctx.n, |rng| {
        let x = sample_pd(theta, DEFAULT_TAIL_TOL, rng)?;
        Ok(pd_stats(&frag_inf(&x, rng)?))
    })?;
    let target = ctx.draw("pd", ctx.n, |rng| pd_sample(theta + 1.0, rng))?;
    compare_pd(&frag, &target)
}

fn prop2_reverse(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let theta = positive_real(ctx, "theta")?;
    let coag = ctx.draw("coag", ctx.n, |rng| {
        let x = sample_pd(theta + 1.0, DEFAULT_TAIL_TOL, rng)?;
        Ok(pd_stats(&coag_a(&x, 1.0 / (theta + 1.0), rng)?))
    })?;
    let target = ctx.draw("pd", ctx.n, |rng| pd_sample(theta, rng))?;
    compare_pd(&coag, &target)
}

/// Normalized ranked atoms of `M + a' eta`, with `M` the gamma atoms of
/// PD(theta), `a' ~ Exp(1)` and `eta ~ PD(1)`.
fn palm_sample(theta: f64, rng: &mut RngStream) -> Result<TruncatedRankedPartition> {
    let m = sample_gamma_jumps(theta, DEFAULT_EPSILON, rng)?;
    let extra = rng.exp1();
    let eta = sample_pd(1.0, DEFAULT_TAIL_TOL, rng)?;
    let total = m.value() + extra;
    let mut atoms: Vec<f64> = m.jumps.iter().map(|j| j / total).collect();
    atoms.extend(eta.atoms().iter().map(|e| extra * e / total));
    let tail = (m.small_jump_mass + extra * eta.tail_mass()) / total;
    Ok(TruncatedRankedPartition::from_unsorted(atoms, tail, 1.0))
}

fn palm(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let theta = positive_real(ctx, "theta")?;
    let palm = ctx.draw("palm", ctx.n, |rng| Ok(pd_stats(&palm_sample(theta, rng)?)))?;
    let frag = ctx.draw("frag", ctx.n, |rng| {
        let x = sample_pd(theta, DEFAULT_TAIL_TOL, rng)?;
        Ok(pd_stats(&frag_inf(&x, rng)?))
    })?;
    compare_pd(&palm, &frag)
}

fn chain_k(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let k = positive_int(ctx, "k")?;
    let steps = ctx.int_param("steps")?;
    let chain = ctx.draw("chain", ctx.n, |rng| {
        let t = run_frag_chain_k(k, steps, child(rng))?;
        Ok(ranked_stats(rank(t.last()).masses()))
    })?;
    let target = ctx.draw("dirichlet", ctx.n, |rng| {
        Ok(ranked_stats(rank(&sample_dirichlet_sym(steps * k + 1, 1.0 / k as f64, rng)?).masses()))
    })?;
    Ok(vec![
        ks("ks_largest", &column(&chain, |r| r[0]), &column(&target, |r| r[0]))?,
        ks("ks_second", &column(&chain, |r| r[1]), &column(&target, |r| r[1]))?,
    ])
}

fn chain_inf(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let theta = ctx.param("theta")?;
    let steps = ctx.int_param("steps")?;
    if !(theta + steps as f64 > 0.0) || theta < 0.0 {
        return Err(invalid("need theta >= 0 and theta + steps > 0"));
    }
    let chain = ctx.draw("chain", ctx.n, |rng| {
        let t = run_frag_chain_inf(theta, steps, child(rng))?;
        Ok(pd_stats(t.last()))
    })?;
    let target = ctx.draw("pd", ctx.n, |rng| pd_sample(theta + steps as f64, rng))?;
    compare_pd(&chain, &target)
}

fn bridge(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let depth = positive_int(ctx, "depth")? as u64;
    let level = positive_int(ctx, "level")? as u64;
    let levels = ctx.draw("bridge", ctx.n, |rng| {
        let mut out = [0.0; 2];
        bridge_compose(level, depth, rng, |m, f| {
            if m <= level + 1 {
                out[(m - level) as usize] = f.ranked_jumps().largest();
            }
        });
        Ok(out)
    })?;
    let pd_level = ctx.draw("pd_level", ctx.n, |rng| pd_sample(level as f64, rng))?;
    let pd_next = ctx.draw("pd_next", ctx.n, |rng| pd_sample(level as f64 + 1.0, rng))?;
    let mut out = vec![ks("ks_largest_level", &column(&levels, |r| r[0]), &column(&pd_level, |r| r[0]))?];
    if depth > 1 {
        out.push(ks("ks_largest_next_level", &column(&levels, |r| r[1]), &column(&pd_next, |r| r[0]))?);
    }
    Ok(out)
}

fn lemma1(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let k = positive_int(ctx, "k")?;
    let t = ctx.param("t")?;
    let kf = k as f64;
    let scaled = ctx.draw("yule", ctx.n, |rng| Ok((-kf * t).exp() * yule_count_at(k, 1, t, rng)? as f64))?;
    let w = ctx.draw("w", ctx.n, |rng| sample_w(k, rng))?;
    let moments = moment_check(&scaled, 1.0, Some(kf))?;
    let t_pgf = 2f64.ln();
    let s = 0.5f64;
    let pgf_samples = ctx.draw("pgf", ctx.n, |rng| Ok(s.powi(yule_count_at(k, 1, t_pgf, rng)? as i32)))?;
    let pgf = moment_check(&pgf_samples, yule_pgf(k, t_pgf, s)?, None)?;
    Ok(vec![
        ks("ks_scaled_population_vs_w", &scaled, &w)?,
        Outcome::z("z_mean", moments.z_mean),
        Outcome::z("z_variance", moments.z_var.unwrap_or(0.0)),
        Outcome::z("z_pgf", pgf.z_mean),
    ])
}

fn thm1(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let k = positive_int(ctx, "k")?;
    let t = ctx.param("t")?;
    let s = time_change(k, t, Direction::Inverse)?;
    let summary = |masses: &[f64], total: f64| (total, masses.iter().copied().fold(0.0, f64::max), masses.len() as f64);
    let marginal = ctx.draw("marginal", ctx.n, |rng| {
        let g = genealogy_marginal_k(k, t, rng)?;
        Ok(summary(&g.weights, g.total))
    })?;
    let chain = ctx.draw("chain", ctx.n, |rng| {
        let w = sample_w(k, rng)?;
        let mut chain = FragChainK::new(k, child(rng))?;
        let p = subordinated_path(&mut chain, w, &[s], rng)?;
        Ok(summary(p[0].state.masses(), w))
    })?;
    let path = ctx.draw("path", ctx.n, |rng| {
        let w = sample_w(k, rng)?;
        let x = genealogy_path_k(k, w, s, rng)?.state_at(s);
        Ok(summary(x.masses(), w))
    })?;
    Ok(vec![
        ks("ks_total", &column(&marginal, |r| r.0), &column(&chain, |r| r.0))?,
        ks("ks_largest", &column(&marginal, |r| r.1), &column(&chain, |r| r.1))?,
        ks("ks_fragment_count", &column(&marginal, |r| r.2), &column(&chain, |r| r.2))?,
        ks("ks_path_largest", &column(&marginal, |r| r.1), &column(&path, |r| r.1))?,
        ks("ks_path_fragment_count", &column(&marginal, |r| r.2), &column(&path, |r| r.2))?,
    ])
}

/// Population at which exact event simulation hands over to the
/// negative-binomial jump-ahead in the Kendall scenario.
const KENDALL_HANDOVER: u64 = 2_000;

/// Counts `Y_{log(1+j/W)}` for `j = 0..=window`, with `W` estimated as
/// `e^{-horizon} Y_horizon`.
fn kendall_counts(horizon: f64, window: usize, rng: &mut RngStream) -> Result<Vec<u64>> {
    let mut jump_times = Vec::new();
    let mut m = 1u64;
    let mut time = rng.exp1();
    while time <= horizon && m < KENDALL_HANDOVER {
        m += 1;
        jump_times.push(time);
        time += rng.exp1() / m as f64;
    }
    let simulated_until = if m < KENDALL_HANDOVER { horizon } else { *jump_times.last().unwrap() };
    let y_h = yule_count_ahead(1, m, horizon - simulated_until, rng)?;
    let w = (-horizon).exp() * y_h as f64;
    let last = (window as f64 / w).ln_1p();
    if last > simulated_until {
        return Err(invalid(format!(
            "Kendall window reaches time {last}, beyond the simulated path ({simulated_until})"
        )));
    }
    Ok((0..=window)
        .map(|j| {
            let tj = (j as f64 / w).ln_1p();
            1 + jump_times.partition_point(|&s| s <= tj) as u64
        })
        .collect())
}

fn kendall(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let horizon = positive_real(ctx, "horizon")?;
    let window = positive_int(ctx, "window")?;
    let paths = ctx.draw("paths", ctx.n, |rng| kendall_counts(horizon, window, rng))?;
    const CELLS: usize = 7;
    let mut increments = vec![0u64; CELLS];
    let total_cells = 3 * window + 1;
    let mut totals = vec![0u64; total_cells];
    for counts in &paths {
        for pair in counts.windows(2) {
            increments[((pair[1] - pair[0]) as usize).min(CELLS - 1)] += 1;
        }
        totals[((counts[window] - counts[0]) as usize).min(total_cells - 1)] += 1;
    }
    Ok(vec![
        Outcome::chi("chi2_unit_increments", chi_square_gof(&increments, &poisson_cells(1.0, CELLS))?),
        Outcome::chi(
            "chi2_window_total",
            chi_square_gof(&totals, &poisson_cells(window as f64, total_cells))?,
        ),
    ])
}

fn cor1(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let k = positive_int(ctx, "k")?;
    let n = positive_int(ctx, "n")?;
    let paths = ctx.draw("coalescent", ctx.n, |rng| {
        let start = dirichlet_start(n, k, rng)?;
        let p = run_coalescent_k(k, &start, rng)?;
        let after_first = rank(&p.states_after[0]).largest();
        Ok((p.holds, after_first))
    })?;
    // Log-spacings of the arrival times T_1 < ... < T_(n+1) of a unit
    // Poisson process.
    let spacings = ctx.draw("poisson", ctx.n, |rng| {
        let mut t = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        for _ in 0..=n {
            acc += rng.exp1();
            t.push(acc);
        }
        Ok((1..=n).rev().map(|m| t[m].ln() - t[m - 1].ln()).collect::<Vec<f64>>())
    })?;
    let target = ctx.draw("dirichlet", ctx.n, |rng| Ok(rank(&dirichlet_start(n - 1, k, rng)?).largest()))?;
    let mut out = Vec::new();
    for (i, level) in (1..=n).rev().enumerate() {
        let holds = column(&paths, |p| p.0[i]);
        out.push(ks_exp(&format!("ks_hold_n{level}"), &holds, level as f64)?);
        let logs = column(&spacings, |s| s[i]);
        out.push(ks_exp(&format!("ks_log_spacing_n{level}"), &logs, level as f64)?);
    }
    let after = column(&paths, |p| p.1);
    out.push(ks("ks_largest_after_first_merge", &after, &target)?);
    let r = correlation(&column(&paths, |p| p.0[0]), &after)?;
    out.push(Outcome::uncorrelated("corr_hold_vs_state", r, ctx.n));
    Ok(out)
}

fn lemma2(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let a = positive_real(ctx, "a")?;
    let t = positive_real(ctx, "t")?;
    // First jump times, censored at t on both sides.
    let first = ctx.draw("first_jump", ctx.n, |rng| {
        let p = simulate_cs_yule(a, t, rng)?;
        Ok(p.jump_times.first().copied().unwrap_or(t))
    })?;
    let exp = ctx.draw("exp", ctx.n, |rng| Ok((rng.exp1() / a).min(t)))?;
    let values = ctx.draw("cs_yule", ctx.n, |rng| cs_yule_at(a, t, rng))?;
    let scaled: Vec<f64> = values.iter().map(|v| (-t).exp() * v).collect();
    let mut out = vec![
        ks("ks_first_jump", &first, &exp)?,
        Outcome::z("z_martingale_mean", moment_check(&scaled, a, None)?.z_mean),
    ];
    if a.fract() == 0.0 {
        let discrete = ctx.draw("discrete", ctx.n, |rng| {
            Ok(simulate_yule_counts_from(1, a as u64, t, rng)?.final_value())
        })?;
        out.push(ks("ks_integer_start_vs_yule", &values, &discrete)?);
    }
    let gamma = ctx.draw("gamma", ctx.n, |rng| sample_gamma(a, 1.0, rng))?;
    for (label, time) in [("t0", 0.0), ("t", t)] {
        let g = ctx.draw(&format!("genealogy_{label}"), ctx.n, |rng| {
            let g = genealogy_marginal_cont(a, time, DEFAULT_EPSILON, rng)?;
            Ok((g.total, g.normalized_largest()))
        })?;
        out.push(ks(&format!("ks_total_{label}"), &column(&g, |r| r.0), &gamma)?);
        if time == 0.0 {
            let pd = ctx.draw("pd", ctx.n, |rng| pd_sample(a, rng))?;
            out.push(ks("ks_normalized_largest_t0", &column(&g, |r| r.1), &column(&pd, |r| r[0]))?);
        }
    }
    Ok(out)
}

fn thm2(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let a = positive_real(ctx, "a")?;
    let t = positive_real(ctx, "t")?;
    let genealogy = ctx.draw("genealogy", ctx.n, |rng| {
        let g = genealogy_marginal_cont(a, t.ln_1p(), DEFAULT_EPSILON, rng)?;
        let ranked = g.ranked().normalized();
        Ok((g.total, ranked.largest(), ranked.sum_of_squares()))
    })?;
    let chain = ctx.draw("chain", ctx.n, |rng| {
        let g = sample_gamma(a, 1.0, rng)?;
        let mut chain = FragChainInf::new(a, child(rng))?;
        let p = subordinated_path(&mut chain, g, &[t], rng)?;
        let x = p[0].state.normalized();
        Ok((g, x.largest(), x.sum_of_squares()))
    })?;
    Ok(vec![
        ks("ks_normalized_largest", &column(&genealogy, |r| r.1), &column(&chain, |r| r.1))?,
        ks("ks_normalized_sum_squares", &column(&genealogy, |r| r.2), &column(&chain, |r| r.2))?,
        ks("ks_total", &column(&genealogy, |r| r.0), &column(&chain, |r| r.0))?,
    ])
}

fn cor2(ctx: &Ctx) -> Result<Vec<Outcome>> {
    let a = positive_real(ctx, "a")?;
    let n = positive_int(ctx, "n")?;
    let paths = ctx.draw("coalescent", ctx.n, |rng| {
        let start = sample_pd(n as f64 + a, DEFAULT_TAIL_TOL, rng)?;
        let p = run_coalescent_inf(a, n, &start, n, rng)?;
        Ok((p.holds, p.states_after[0].largest()))
    })?;
    let target = ctx.draw("pd", ctx.n, |rng| pd_sample(n as f64 - 1.0 + a, rng))?;
    let mut out = Vec::new();
    for (i, level) in (1..=n).rev().enumerate() {
        out.push(ks_exp(&format!("ks_hold_n{level}"), &column(&paths, |p| p.0[i]), level as f64)?);
    }
    let after = column(&paths, |p| p.1);
    out.push(ks("ks_largest_after_first_merge", &after, &column(&target, |r| r[0]))?);
    let r = correlation(&column(&paths, |p| p.0[0]), &after)?;
    out.push(Outcome::uncorrelated("corr_hold_vs_state", r, ctx.n));
    Ok(out)
}
