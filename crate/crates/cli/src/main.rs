//! `qrefl`: verify identities, export exact matrices and simulate open chains.
//!
//! Exit status: 0 when everything passes, 1 on a failed check or a refused
//! simulation, 2 on an invalid configuration.

mod export;
mod report;
mod suites;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qrefl::boundary::Family;
use qrefl::chain::{generator, gillespie_simulate, hamiltonian_local, negative_rates, stationary_exact, ChainSpec, SimConfig};
use qrefl::qkit::enumerate_basis;
use qrefl::rmat::LSide;
use qrefl::{Budget, Error, ExactScalar, Field, Tamper};
use rayon::prelude::*;

use crate::export::{Format, Object};
use crate::suites::{Suite, SuiteConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "qrefl", version, about = "Exact checks for stochastic R- and K-matrices and their open chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite and write a JSON report.
    Verify(VerifyArgs),
    /// Build one matrix with exact entries.
    Build(BuildCmd),
    /// Simulate the boundary-driven chain with the Gillespie algorithm.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// ybe, unitarity, crossing, symmetries, reflection, dual, recurrences,
    /// starstar, sums, appendixB, appendixD, transfer, hamiltonian, nondiff or all
    suite: Suite,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "I", default_value_t = 1)]
    i: usize,
    #[arg(long = "J", default_value_t = 1)]
    j: usize,
    /// Third spin for the Yang-Baxter equation
    #[arg(long = "K", default_value_t = 1)]
    k: usize,
    /// Number of chain sites
    #[arg(long = "N", default_value_t = 2)]
    sites: usize,
    /// Component cap for lattice sums, sector cap for the non-difference model
    #[arg(long, default_value_t = 2)]
    cap: usize,
    #[arg(long, default_value = "right-upper")]
    right: Family,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    points: usize,
    /// Bound on sampled numerators and denominators
    #[arg(long, default_value_t = 20)]
    bound: u32,
    /// Perturb one entry, `ROW:COL:DELTA`, as a negative control
    #[arg(long)]
    perturb: Option<String>,
    /// Worker threads (0 = all cores)
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Report path; the report goes to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildCmd {
    /// S, Rbar, L, M, K, Kbar, Ktilde, T, H or generator
    object: Object,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "I", default_value_t = 1)]
    i: usize,
    #[arg(long = "J", default_value_t = 1)]
    j: usize,
    #[arg(long = "N", default_value_t = 2)]
    sites: usize,
    #[arg(long)]
    family: Option<Family>,
    /// first or second
    #[arg(long, value_parser = export::parse_side)]
    side: Option<LSide>,
    #[arg(long)]
    right: Option<Family>,
    #[arg(long)]
    q: Option<ExactScalar>,
    #[arg(long)]
    u: Option<ExactScalar>,
    #[arg(long)]
    x: Option<ExactScalar>,
    #[arg(long)]
    w: Option<ExactScalar>,
    #[arg(long)]
    nu: Option<ExactScalar>,
    #[arg(long = "nu-r")]
    nu_r: Option<ExactScalar>,
    #[arg(long = "nu-l")]
    nu_l: Option<ExactScalar>,
    #[arg(long, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "J", default_value_t = 1)]
    j: usize,
    #[arg(long = "N", default_value_t = 2)]
    sites: usize,
    #[arg(long)]
    q: ExactScalar,
    /// Boundary parameter for both ends unless `--nu-r`/`--nu-l` are given
    #[arg(long)]
    nu: Option<ExactScalar>,
    #[arg(long = "nu-r")]
    nu_r: Option<ExactScalar>,
    #[arg(long = "nu-l")]
    nu_l: Option<ExactScalar>,
    #[arg(long, default_value = "right-lower")]
    right: Family,
    #[arg(long, default_value_t = f64::INFINITY)]
    tmax: f64,
    #[arg(long, default_value_t = 100_000)]
    events: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    initial: usize,
    /// Trajectory CSV `time,state`; the histogram goes to `<stem>.hist.csv` beside it
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with its exit status.
struct Exit(u8, String);

impl From<Error> for Exit {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::InvalidConfig(_)) { EXIT_CONFIG } else { EXIT_FAIL };
        Exit(code, e.to_string())
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Exit {
    Exit(EXIT_FAIL, format!("{}: {}", path.display(), e))
}

fn config_err(msg: impl Into<String>) -> Exit {
    Exit(EXIT_CONFIG, msg.into())
}

fn parse_perturb(s: &str) -> Result<Tamper, Exit> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || config_err(format!("--perturb expects ROW:COL:DELTA, got '{}'", s));
    if parts.len() != 3 {
        return Err(bad());
    }
    let delta: ExactScalar = parts[2].parse().map_err(|_| bad())?;
    if delta.is_zero() {
        return Err(config_err("--perturb needs a nonzero delta"));
    }
    Ok(Tamper { row: parts[0].parse().map_err(|_| bad())?, col: parts[1].parse().map_err(|_| bad())?, delta })
}

fn write_output(path: Option<&Path>, bytes: &[u8]) -> Result<(), Exit> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| io_err(p, e)),
        None => io::stdout().write_all(bytes).map_err(|e| Exit(EXIT_FAIL, e.to_string())),
    }
}

fn verify(a: VerifyArgs) -> Result<u8, Exit> {
    let start = Instant::now();
    let tamper = a.perturb.as_deref().map(parse_perturb).transpose()?;
    let cfg = SuiteConfig {
        n: a.n,
        i: a.i,
        j: a.j,
        k: a.k,
        sites: a.sites,
        cap: a.cap,
        right: a.right,
        budget: Budget { points: a.points, bound: a.bound, seed: a.seed },
        tamper,
    };
    let jobs = suites::jobs(a.suite, &cfg)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs).build().map_err(|e| Exit(EXIT_FAIL, e.to_string()))?;
    let records: Vec<_> = pool.install(|| jobs.par_iter().map(|j| j()).collect::<Vec<_>>()).into_iter().flatten().collect();
    for r in &records {
        eprintln!("{}", r);
    }
    let rep = report::report(a.suite, &cfg.budget, &records, start.elapsed());
    let mut bytes = serde_json::to_vec_pretty(&rep).expect("report serializes");
    bytes.push(b'\n');
    write_output(a.out.as_deref(), &bytes)?;
    Ok(if records.iter().all(|r| r.passed()) { 0 } else { EXIT_FAIL })
}

fn build(a: BuildCmd) -> Result<u8, Exit> {
    let args = export::BuildArgs {
        n: a.n,
        i: a.i,
        j: a.j,
        sites: a.sites,
        family: a.family,
        side: a.side,
        right: a.right,
        q: a.q,
        u: a.u,
        x: a.x,
        w: a.w,
        nu: a.nu,
        nu_r: a.nu_r,
        nu_l: a.nu_l,
    };
    let built = export::build(a.object, &args)?;
    let bytes = match a.format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&export::to_json(&built)).expect("matrix serializes");
            b.push(b'\n');
            b
        }
        Format::Csv => {
            let mut b = Vec::new();
            export::write_csv(&built, &mut b).map_err(|e| Exit(EXIT_FAIL, e.to_string()))?;
            b
        }
    };
    write_output(a.out.as_deref(), &bytes)?;
    Ok(0)
}

/// `(s_1)(s_2)...` with each site's occupation tuple.
fn state_label(ordinal: usize, n: usize, spin: usize, sites: usize) -> String {
    let b = enumerate_basis(n, spin);
    let d = b.len();
    (0..sites)
        .map(|k| {
            let digit = ordinal / d.pow((sites - 1 - k) as u32) % d;
            format!("({})", b.index(digit).iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
        })
        .collect()
}

fn simulate(a: SimulateArgs) -> Result<u8, Exit> {
    let nu_r = a.nu_r.or_else(|| a.nu.clone()).ok_or_else(|| config_err("--nu or --nu-r is required"))?;
    let nu_l = a.nu_l.or_else(|| a.nu.clone()).ok_or_else(|| config_err("--nu or --nu-l is required"))?;
    if a.tmax.is_nan() || a.tmax <= 0.0 {
        return Err(config_err("--tmax must be positive"));
    }
    let spec = ChainSpec::new(a.n, a.j, a.sites, a.q, nu_r, nu_l)?.with_right(a.right)?;
    let m = generator(&hamiltonian_local(&spec)?);
    let neg = negative_rates(&m);
    if !neg.is_empty() {
        let list: Vec<String> = neg.iter().map(|(f, t, r)| format!("{} -> {}: {}", f, t, r)).collect();
        return Err(Exit(EXIT_FAIL, format!("negative rates, refusing to simulate:\n  {}", list.join("\n  "))));
    }
    let cfg = SimConfig { t_max: a.tmax, max_events: a.events, seed: a.seed, initial_state: a.initial, record_jumps: a.out.is_some() };
    let sim = gillespie_simulate(&m, &cfg)?;
    let exact = stationary_exact(&m).ok();

    if let Some(path) = &a.out {
        let mut w = csv::Writer::from_writer(File::create(path).map_err(|e| io_err(path, e))?);
        w.write_record(["time", "state"]).map_err(|e| io_err(path, e))?;
        for (t, s) in &sim.jumps {
            w.write_record([format!("{:.12e}", t), s.to_string()]).map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    let mut hist = csv::Writer::from_writer(Vec::new());
    let werr = |e: csv::Error| Exit(EXIT_FAIL, e.to_string());
    hist.write_record(["state", "configuration", "occupancy", "exact"]).map_err(werr)?;
    for (s, occ) in sim.occupancy.iter().enumerate() {
        let ex = exact.as_ref().map_or(String::new(), |p| p[s].to_fraction_string());
        hist.write_record([s.to_string(), state_label(s, a.n, a.j, a.sites), format!("{:.6}", occ), ex]).map_err(werr)?;
    }
    let bytes = hist.into_inner().map_err(|e| Exit(EXIT_FAIL, e.to_string()))?;
    match &a.out {
        Some(path) => {
            let hp = path.with_extension("hist.csv");
            std::fs::write(&hp, &bytes).map_err(|e| io_err(&hp, e))?;
        }
        None => io::stdout().write_all(&bytes).map_err(|e| Exit(EXIT_FAIL, e.to_string()))?,
    }
    eprintln!("{} events, simulated time {:.6}, wall {:?}", sim.events, sim.total_time, sim.wall);
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Build(a) => build(a),
        Command::Simulate(a) => simulate(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(Exit(code, msg)) => {
            eprintln!("qrefl: {}", msg);
            ExitCode::from(code)
        }
    }
}
