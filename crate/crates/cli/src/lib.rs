//! Command-line front end: argument parsing and dispatch into `fragcoag`.
//!
//! [`run_cli`] is the whole program minus process plumbing, so it can be
//! driven in-process by tests.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fragcoag::chains::{
    dirichlet_start, run_coag_chain_inf, run_coag_chain_k, run_coalescent_inf, run_coalescent_k, run_frag_chain_inf,
    run_frag_chain_k, CoalescentPath, MAX_STORED_STEPS,
};
use fragcoag::distributions::{sample_dirichlet_sym, sample_gamma_jumps, sample_pd, DEFAULT_EPSILON, DEFAULT_TAIL_TOL};
use fragcoag::io::{csv_row, format_f64, trajectory_csv, yule_path_csv};
use fragcoag::verify::{list_scenarios, run_verification, run_verification_timed, VerificationReport};
use fragcoag::yule::{
    genealogy_marginal_cont, genealogy_marginal_k, genealogy_path_k, sample_w, simulate_cs_yule, simulate_yule_counts,
    time_change, yule_pgf, Direction,
};
use fragcoag::{Error, RngStream};

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for invalid arguments or a failed operation.
pub const EXIT_USAGE: i32 = 1;
/// Exit code for a verification report with `passed = false`.
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "fragcoag", version, about = "Fragmentation/coagulation chains, Yule genealogies and their verification")]
pub struct Cli {
    /// Seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of samples (or independent replicates).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write output to this file instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw samples from a distribution.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Run a fragmentation or coagulation chain.
    #[command(subcommand)]
    Chain(ChainCmd),
    /// Simulate Yule processes and genealogies.
    #[command(subcommand)]
    Yule(YuleCmd),
    /// Run a named verification scenario.
    Verify(VerifyArgs),
    /// List the verification scenarios.
    ListScenarios,
}

#[derive(Debug, Subcommand)]
pub enum SampleCmd {
    /// Symmetric Dirichlet on the simplex with `parts` coordinates.
    Dirichlet {
        #[arg(long)]
        parts: usize,
        #[arg(long)]
        alpha: f64,
    },
    /// Truncated Poisson-Dirichlet by stick breaking.
    Pd {
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
        tail_tol: f64,
    },
    /// Ranked jumps above epsilon of a gamma subordinator on [0, theta].
    GammaJumps {
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Terminal Yule population W ~ Gamma(1/k, 1/k).
    W {
        #[arg(long)]
        k: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChainCmd {
    /// Frag_k chain from (1).
    FragK {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        steps: usize,
    },
    /// Coag_k chain from a Dir_nk(1/k) start.
    CoagK {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        steps: usize,
    },
    /// Frag_inf chain from PD(theta) ((1) when theta = 0).
    FragInf {
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long)]
        steps: usize,
    },
    /// Reversed infinite chain from PD(theta + start_index).
    CoagInf {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        start_index: usize,
        #[arg(long)]
        steps: usize,
    },
    /// Coalescent with Exp(n) holds: finite with --k, infinite with --a.
    /// CSV rows give the event time, the level after the event and the state.
    Coalescent {
        #[arg(long, conflicts_with = "a", required_unless_present = "a")]
        k: Option<usize>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum YuleCmd {
    /// Y^(k) path on [0, t_max].
    Counts {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t_max: f64,
    },
    /// Genealogical weights G^(k)(t).
    Genealogy {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: f64,
    },
    /// Time-changed genealogy path observed at --t (Yule time); W is sampled
    /// unless given.
    Path {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        w: Option<f64>,
    },
    /// Continuous-state Yule path on [0, t_max].
    CsCounts {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        t_max: f64,
    },
    /// Continuous-state genealogy G(t, a).
    CsGenealogy {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
    },
    /// Closed-form pgf E[s^{Y_t}].
    Pgf {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        s: f64,
    },
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Scenario name (see `list-scenarios`).
    pub scenario: String,
    #[arg(long)]
    pub k: Option<f64>,
    #[arg(long)]
    pub n: Option<f64>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub steps: Option<f64>,
    #[arg(long)]
    pub depth: Option<f64>,
    #[arg(long)]
    pub level: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub window: Option<f64>,
    /// Record wall-clock runtime in the report (output is then not
    /// reproducible byte for byte).
    #[arg(long)]
    pub timing: bool,
}

impl VerifyArgs {
    fn params(&self) -> BTreeMap<String, f64> {
        [
            ("k", self.k),
            ("n", self.n),
            ("theta", self.theta),
            ("steps", self.steps),
            ("depth", self.depth),
            ("level", self.level),
            ("t", self.t),
            ("a", self.a),
            ("horizon", self.horizon),
            ("window", self.window),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }
}

/// Everything a run produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn ok(stdout: String) -> Self {
        Self {
            code: EXIT_OK,
            stdout,
            stderr: String::new(),
        }
    }

    fn error(code: i32, stderr: String) -> Self {
        Self {
            code,
            stdout: String::new(),
            stderr,
        }
    }
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run_cli<I, T>(argv: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput::error(EXIT_USAGE, text)
            } else {
                CliOutput::ok(text)
            };
        }
    };
    let (code, body) = match execute(&cli) {
        Ok(r) => r,
        Err(e) => return CliOutput::error(EXIT_USAGE, format!("error: {e}\n")),
    };
    match &cli.out {
        Some(path) => match std::fs::write(path, &body) {
            Ok(()) => CliOutput {
                code,
                stdout: String::new(),
                stderr: String::new(),
            },
            Err(e) => CliOutput::error(EXIT_USAGE, format!("error: cannot write {}: {e}\n", path.display())),
        },
        None => CliOutput {
            code,
            stdout: body,
            stderr: String::new(),
        },
    }
}

type Outcome = Result<(i32, String), Error>;

fn execute(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Sample(cmd) => sample(cli, cmd).map(|s| (EXIT_OK, s)),
        Command::Chain(cmd) => chain(cli, cmd).map(|s| (EXIT_OK, s)),
        Command::Yule(cmd) => yule(cli, cmd).map(|s| (EXIT_OK, s)),
        Command::Verify(args) => verify(cli, args),
        Command::ListScenarios => Ok((EXIT_OK, list(cli))),
    }
}

fn json_line(v: &Value) -> String {
    format!("{v}\n")
}

fn replicates(cli: &Cli, default: usize) -> usize {
    cli.samples.unwrap_or(default)
}

fn stream(cli: &Cli, tag: &str, i: usize) -> RngStream {
    RngStream::for_replicate(cli.seed, tag, i as u64)
}

fn to_value<T: serde::Serialize>(x: &T) -> Result<Value, Error> {
    serde_json::to_value(x).map_err(|e| Error::Parse(e.to_string()))
}

/// Writes one CSV row per sample, or a JSON object wrapping all samples
/// with the seed, stream tag and parameters.
fn emit_rows(cli: &Cli, tag: &str, params: Value, rows: Vec<(Vec<f64>, Value)>) -> String {
    match cli.format {
        Format::Csv => rows.iter().map(|(r, _)| format!("{}\n", csv_row(r))).collect(),
        Format::Json => json_line(&json!({
            "seed": cli.seed,
            "stream": tag,
            "params": params,
            "samples": rows.into_iter().map(|(_, v)| v).collect::<Vec<_>>(),
        })),
    }
}

fn sample(cli: &Cli, cmd: &SampleCmd) -> Result<String, Error> {
    let n = replicates(cli, 1);
    match *cmd {
        SampleCmd::Dirichlet { parts, alpha } => {
            let tag = "sample/dirichlet";
            let rows = (0..n)
                .map(|i| {
                    let x = sample_dirichlet_sym(parts, alpha, &mut stream(cli, tag, i))?;
                    Ok((x.masses().to_vec(), to_value(&x)?))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(emit_rows(cli, tag, json!({"parts": parts, "alpha": alpha}), rows))
        }
        SampleCmd::Pd { theta, tail_tol } => {
            let tag = "sample/pd";
            let rows = (0..n)
                .map(|i| {
                    let x = sample_pd(theta, tail_tol, &mut stream(cli, tag, i))?;
                    Ok((x.atoms().to_vec(), to_value(&x)?))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(emit_rows(cli, tag, json!({"theta": theta, "tail_tol": tail_tol}), rows))
        }
        SampleCmd::GammaJumps { theta, epsilon } => {
            let tag = "sample/gamma-jumps";
            let rows = (0..n)
                .map(|i| {
                    let x = sample_gamma_jumps(theta, epsilon, &mut stream(cli, tag, i))?;
                    Ok((x.jumps.clone(), to_value(&x)?))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(emit_rows(cli, tag, json!({"theta": theta, "epsilon": epsilon}), rows))
        }
        SampleCmd::W { k } => {
            let tag = "sample/w";
            let rows = (0..n)
                .map(|i| {
                    let w = sample_w(k, &mut stream(cli, tag, i))?;
                    Ok((vec![w], json!(w)))
                })
                .collect::<Result<Vec<_>, Error>>()?;
            Ok(emit_rows(cli, tag, json!({"k": k}), rows))
        }
    }
}

/// Concatenates per-replicate CSV blocks, separated by comment lines when
/// there is more than one.
fn join_blocks(blocks: Vec<String>) -> String {
    if blocks.len() == 1 {
        return blocks.into_iter().next().unwrap();
    }
    let mut out = String::new();
    for (i, b) in blocks.into_iter().enumerate() {
        let _ = writeln!(out, "# replicate {i}");
        out.push_str(&b);
    }
    out
}

fn coalescent_json<P: serde::Serialize>(k: Value, path: &CoalescentPath<P>) -> Result<Value, Error> {
    let mut states = vec![to_value(&path.start)?];
    for s in &path.states_after {
        states.push(to_value(s)?);
    }
    let events: Vec<Value> = path
        .event_times
        .iter()
        .zip(&path.hold_rates)
        .map(|(t, r)| json!({"time": t, "rate": r}))
        .collect();
    Ok(json!({"k": k, "states": states, "events": events}))
}

fn coalescent_csv(path_rows: Vec<(f64, f64, Vec<f64>)>) -> String {
    let mut out = String::from("time,level,masses\n");
    for (t, r, m) in path_rows {
        let _ = writeln!(out, "{},{},{}", format_f64(t), format_f64(r), csv_row(&m));
    }
    out
}

fn chain(cli: &Cli, cmd: &ChainCmd) -> Result<String, Error> {
    let n = replicates(cli, 1);
    let mut csv = Vec::with_capacity(n);
    let mut json = String::new();
    for i in 0..n {
        match *cmd {
            ChainCmd::FragK { k, steps } => {
                let t = run_frag_chain_k(k, steps, stream(cli, "chain/frag-k", i))?;
                csv.push(trajectory_csv(&t, |s| s.masses()));
                json.push_str(&json_line(&to_value(&t)?));
            }
            ChainCmd::CoagK { k, n: level, steps } => {
                let mut rng = stream(cli, "chain/coag-k", i);
                let start = dirichlet_start(level, k, &mut rng)?;
                let t = run_coag_chain_k(&start, k, steps, &mut rng)?;
                csv.push(trajectory_csv(&t, |s| s.masses()));
                json.push_str(&json_line(&to_value(&t)?));
            }
            ChainCmd::FragInf { theta, steps } => {
                let t = run_frag_chain_inf(theta, steps, stream(cli, "chain/frag-inf", i))?;
                csv.push(trajectory_csv(&t, |s| s.atoms()));
                json.push_str(&json_line(&to_value(&t)?));
            }
            ChainCmd::CoagInf {
                theta,
                start_index,
                steps,
            } => {
                let mut rng = stream(cli, "chain/coag-inf", i);
                let start = sample_pd(theta + start_index as f64, DEFAULT_TAIL_TOL, &mut rng)?;
                let t = run_coag_chain_inf(&start, theta, start_index, steps, &mut rng)?;
                csv.push(trajectory_csv(&t, |s| s.atoms()));
                json.push_str(&json_line(&to_value(&t)?));
            }
            ChainCmd::Coalescent { k, a, n: level } => {
                let mut rng = stream(cli, "chain/coalescent", i);
                if level > MAX_STORED_STEPS {
                    return Err(Error::ResourceLimit {
                        what: "coalescent events",
                        requested: level as f64,
                        cap: MAX_STORED_STEPS as f64,
                    });
                }
                match (k, a) {
                    (Some(k), _) => {
                        let start = dirichlet_start(level, k, &mut rng)?;
                        let p = run_coalescent_k(k, &start, &mut rng)?;
                        let mut rows = vec![(0.0, level as f64, p.start.masses().to_vec())];
                        for (j, (t, s)) in p.event_times.iter().zip(&p.states_after).enumerate() {
                            rows.push((*t, (level - j - 1) as f64, s.masses().to_vec()));
                        }
                        csv.push(coalescent_csv(rows));
                        json.push_str(&json_line(&coalescent_json(json!(k), &p)?));
                    }
                    (None, Some(a)) => {
                        let start = sample_pd(level as f64 + a, DEFAULT_TAIL_TOL, &mut rng)?;
                        let p = run_coalescent_inf(a, level, &start, level, &mut rng)?;
                        let mut rows = vec![(0.0, level as f64, p.start.atoms().to_vec())];
                        for (j, (t, s)) in p.event_times.iter().zip(&p.states_after).enumerate() {
                            rows.push((*t, (level - j - 1) as f64, s.atoms().to_vec()));
                        }
                        csv.push(coalescent_csv(rows));
                        let mut v = coalescent_json(json!("inf"), &p)?;
                        v["a"] = json!(a);
                        json.push_str(&json_line(&v));
                    }
                    (None, None) => return Err(Error::InvalidInput("coalescent needs --k or --a".into())),
                }
            }
        }
    }
    Ok(match cli.format {
        Format::Csv => join_blocks(csv),
        Format::Json => json,
    })
}

fn genealogy_csv(time: f64, population: f64, total: f64, tail: f64, weights: &[f64]) -> String {
    format!(
        "time,population,total,tail\n{},{},{},{}\n{}\n",
        format_f64(time),
        format_f64(population),
        format_f64(total),
        format_f64(tail),
        csv_row(weights)
    )
}

fn yule(cli: &Cli, cmd: &YuleCmd) -> Result<String, Error> {
    if let YuleCmd::Pgf { k, t, s } = *cmd {
        let v = yule_pgf(k, t, s)?;
        return Ok(match cli.format {
            Format::Csv => format!("{}\n", format_f64(v)),
            Format::Json => json_line(&json!({"k": k, "t": t, "s": s, "value": v})),
        });
    }
    let n = replicates(cli, 1);
    let mut csv = Vec::with_capacity(n);
    let mut json = String::new();
    for i in 0..n {
        match *cmd {
            YuleCmd::Counts { k, t_max } => {
                let p = simulate_yule_counts(k, t_max, &mut stream(cli, "yule/counts", i))?;
                csv.push(yule_path_csv(&p));
                json.push_str(&json_line(&to_value(&p)?));
            }
            YuleCmd::CsCounts { a, t_max } => {
                let p = simulate_cs_yule(a, t_max, &mut stream(cli, "yule/cs-counts", i))?;
                csv.push(yule_path_csv(&p));
                json.push_str(&json_line(&to_value(&p)?));
            }
            YuleCmd::Genealogy { k, t } => {
                let g = genealogy_marginal_k(k, t, &mut stream(cli, "yule/genealogy", i))?;
                csv.push(genealogy_csv(g.time, g.population, g.total, g.tail, &g.weights));
                json.push_str(&json_line(&to_value(&g)?));
            }
            YuleCmd::CsGenealogy { a, t, epsilon } => {
                let g = genealogy_marginal_cont(a, t, epsilon, &mut stream(cli, "yule/cs-genealogy", i))?;
                csv.push(genealogy_csv(g.time, g.population, g.total, g.tail, &g.weights));
                json.push_str(&json_line(&to_value(&g)?));
            }
            YuleCmd::Path { k, t, w } => {
                let mut rng = stream(cli, "yule/path", i);
                let w = match w {
                    Some(w) => w,
                    None => sample_w(k, &mut rng)?,
                };
                let s = time_change(k, t, Direction::Inverse)?;
                let p = genealogy_path_k(k, w, s, &mut rng)?;
                let state = p.state_at(s);
                csv.push(genealogy_csv(t, state.len() as f64, w, 0.0, state.masses()));
                let mut v = to_value(&p)?;
                v["time"] = json!(t);
                v["state"] = to_value(&state)?;
                json.push_str(&json_line(&v));
            }
            YuleCmd::Pgf { .. } => unreachable!("handled above"),
        }
    }
    Ok(match cli.format {
        Format::Csv => join_blocks(csv),
        Format::Json => json,
    })
}

fn report_csv(r: &VerificationReport) -> String {
    let mut out = String::from("scenario,stat,value,p,pass\n");
    for s in &r.stats {
        let p = s.p.map(format_f64).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{p},{}", r.scenario, s.name, format_f64(s.value), s.pass);
    }
    let _ = writeln!(out, "{},passed,,,{}", r.scenario, r.passed);
    out
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Outcome {
    let params = args.params();
    let report = if args.timing {
        run_verification_timed(&args.scenario, &params, cli.samples, cli.seed)?
    } else {
        run_verification(&args.scenario, &params, cli.samples, cli.seed)?
    };
    let body = match cli.format {
        Format::Csv => report_csv(&report),
        Format::Json => json_line(&to_value(&report)?),
    };
    Ok((if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED }, body))
}

fn list(cli: &Cli) -> String {
    match cli.format {
        Format::Csv => list_scenarios().iter().map(|s| format!("{s}\n")).collect(),
        Format::Json => json_line(&json!(list_scenarios())),
    }
}
