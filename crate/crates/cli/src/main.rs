//! `disperse`: run, sweep and replay dispersion experiments.

mod experiment;
mod record;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use disperse_core::runtime::RunOutcome;
use disperse_core::{RunError, SchedulerPolicy};

use experiment::{read, write, Algo, CliError, Experiment, Setup};

#[derive(Debug, Parser)]
#[command(name = "disperse", version, about = "Dispersion of mobile agents on port-labeled graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and print its metrics.
    Run(RunArgs),
    /// Run a grid of experiments over k, schedulers and seeds.
    Sweep(SweepArgs),
    /// Re-execute a recorded trace and compare it event for event.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    #[command(flatten)]
    setup: Setup,
    /// Number of agents; defaults to the placement size or n.
    #[arg(long)]
    k: Option<usize>,
    /// `round_robin`, `random` or `adversarial:B`.
    #[arg(long, default_value = "round_robin")]
    sched: SchedulerPolicy,
    /// Seeds random graphs, random IDs, root choice and the scheduler.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full event trace here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON metrics record here.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

impl RunArgs {
    fn to_args(&self) -> Vec<String> {
        let mut a = self.setup.to_args();
        if let Some(k) = self.k {
            a.extend(["--k".into(), k.to_string()]);
        }
        a.extend(["--sched".into(), self.sched.to_string(), "--seed".into(), self.seed.to_string()]);
        a
    }
}

/// A `run` command line read back from a trace header; later flags win.
#[derive(Debug, Parser)]
#[command(name = "run", args_override_self = true)]
struct RunLine {
    #[command(flatten)]
    args: RunArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    setup: Setup,
    /// Agent counts, e.g. 8,16,32. A graph given without a size gets n = k.
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "round_robin")]
    scheds: Vec<SchedulerPolicy>,
    /// `0,1,2` or a range `0..4`.
    #[arg(long, default_value = "0")]
    seeds: String,
    /// Append one JSON record per run here.
    #[arg(long)]
    metrics: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Trace written by `disperse run --trace`.
    trace: PathBuf,
    /// `run` flags that override the recorded ones, e.g. `--seed 3`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Replay(a) => cmd_replay(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

/// The outcome of a run that got past configuration, failed or not.
fn outcome_of(r: &Result<RunOutcome, RunError>) -> Option<&RunOutcome> {
    match r {
        Ok(out) => Some(out),
        Err(e) => e.outcome(),
    }
}

fn exit_code(r: &Result<RunOutcome, RunError>) -> u8 {
    match r {
        Ok(_) => 0,
        Err(e) => CliError::Run(e.clone()).exit_code(),
    }
}

fn cmd_run(a: &RunArgs) -> Result<(), CliError> {
    let exp = Experiment::new(&a.setup, a.k, a.sched, a.seed, a.trace.is_some())?;
    if matches!(exp.algo, Algo::Dfs | Algo::Centralized) {
        return tree_run(a, &exp);
    }
    let result = exp.simulate();
    if let Err(RunError::InvalidConfig(_)) = &result {
        return result.map(drop).map_err(CliError::Run);
    }
    let out = outcome_of(&result).expect("past configuration");
    if let Some(path) = &a.trace {
        let header = serde_json::to_string(&a.to_args()).expect("strings serialize");
        write(path, &format!("# disperse trace\n# args {header}\n{}", out.trace.dump()))?;
    }
    let code = exit_code(&result);
    let rec = record::record(&a.setup.graph, &exp.algo.to_string(), exp.opts.policy, a.seed, code, &out.metrics);
    print!("{}", out.metrics.to_text());
    println!("{rec}");
    if let Some(path) = &a.metrics {
        write(path, &format!("{rec}\n"))?;
    }
    result.map(drop).map_err(CliError::Run)
}

fn tree_run(a: &RunArgs, exp: &Experiment) -> Result<(), CliError> {
    let (tree, text) = exp.tree()?;
    print!("{text}");
    let rec = serde_json::json!({
        "graph": a.setup.graph,
        "algo": exp.algo.to_string(),
        "n": exp.n(),
        "root": tree.root,
        "edges": tree.edges().len(),
        "valid": true,
    });
    println!("{rec}");
    if let Some(path) = &a.trace {
        write(path, &text)?;
    }
    if let Some(path) = &a.metrics {
        write(path, &format!("{rec}\n"))?;
    }
    Ok(())
}

fn parse_seeds(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Spec(format!("bad seed list {s:?}"));
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi): (u64, u64) = (lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?);
        if lo >= hi {
            return Err(bad());
        }
        return Ok((lo..hi).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    if matches!(a.setup.algo(), Algo::Dfs | Algo::Centralized) {
        return Err(CliError::Spec("sweep runs the dispersion algorithms only".into()));
    }
    let seeds = parse_seeds(&a.seeds)?;
    let mut sink = match &a.metrics {
        Some(p) => Some(std::fs::File::create(p).map_err(|source| CliError::Io { path: p.clone(), source })?),
        None => None,
    };
    println!(
        "{:>6} {:>6} {:>14} {:>6} {:>8} {:>9} {:>8} {:>9} {:>9}",
        "k", "n", "sched", "seed", "epochs", "moves", "max_bits", "bits/log", "max_probe"
    );
    let mut points: Vec<(SchedulerPolicy, f64, f64)> = Vec::new();
    let (mut worst_ratio, mut probe_by_k) = (0.0f64, Vec::new());
    for &sched in &a.scheds {
        for &k in &a.ks {
            for &seed in &seeds {
                let exp = Experiment::new(&a.setup, Some(k), sched, seed, false)?;
                let result = exp.simulate();
                if let Err(RunError::InvalidConfig(_)) = &result {
                    return result.map(drop).map_err(CliError::Run);
                }
                let m = &outcome_of(&result).expect("past configuration").metrics;
                let code = exit_code(&result);
                let rec = record::record(&a.setup.graph, &exp.algo.to_string(), exp.opts.policy, seed, code, m);
                if let Some(f) = sink.as_mut() {
                    writeln!(f, "{rec}").map_err(|source| CliError::Io { path: a.metrics.clone().unwrap(), source })?;
                }
                if let Err(e) = result {
                    println!("aborted: k={k} {sched} seed {seed} failed");
                    return Err(CliError::Run(e));
                }
                let ratio = record::bits_per_log(m);
                println!(
                    "{:>6} {:>6} {:>14} {:>6} {:>8} {:>9} {:>8} {:>9.2} {:>9}",
                    k,
                    m.n,
                    sched.to_string(),
                    seed,
                    m.epochs,
                    m.total_moves(),
                    m.max_memory_bits,
                    ratio,
                    m.max_probe_epochs()
                );
                worst_ratio = worst_ratio.max(ratio);
                probe_by_k.push((k, m.max_probe_epochs()));
                points.push((sched, k as f64, m.epochs as f64));
            }
        }
    }
    for &sched in &a.scheds {
        let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 == sched).map(|p| (p.1, p.2)).collect();
        match record::linear_fit(&pts) {
            Some((slope, intercept, r2)) => {
                println!("fit {sched}: epochs vs k slope {slope:.4} intercept {intercept:.2} R2 {r2:.5}")
            }
            None => println!("fit {sched}: needs two or more distinct k"),
        }
    }
    let probe_max = probe_by_k.iter().map(|p| p.1).max().unwrap_or(0);
    println!("max bits/log2(k+delta) = {worst_ratio:.2}, max probe epochs = {probe_max}");
    Ok(())
}

fn cmd_replay(a: &ReplayArgs) -> Result<(), CliError> {
    let text = read(&a.trace)?;
    let header = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# args "))
        .ok_or_else(|| CliError::Spec(format!("{} has no `# args` header", a.trace.display())))?;
    let recorded: Vec<String> =
        serde_json::from_str(header).map_err(|e| CliError::Spec(format!("bad trace header: {e}")))?;
    let argv = std::iter::once("run".to_string()).chain(recorded).chain(a.overrides.iter().cloned());
    let args = RunLine::try_parse_from(argv).map_err(|e| CliError::Spec(e.to_string()))?.args;
    let exp = Experiment::new(&args.setup, args.k, args.sched, args.seed, true)?;
    let result = exp.simulate();
    let Some(out) = outcome_of(&result) else {
        return result.map(drop).map_err(CliError::Run);
    };
    let produced = out.trace.dump();
    let want = text.lines().filter(|l| !l.starts_with('#'));
    let mut got = produced.lines();
    let mut same = 0usize;
    for line in want {
        match got.next() {
            Some(g) if g == line => same += 1,
            Some(g) => {
                let msg = format!("event {same}: trace has `{line}`, run gives `{g}`");
                println!("first divergence at {msg}");
                return Err(CliError::Diverged(msg));
            }
            None => {
                let msg = format!("event {same}: run ended, trace continues with `{line}`");
                println!("first divergence at {msg}");
                return Err(CliError::Diverged(msg));
            }
        }
    }
    if let Some(g) = got.next() {
        let msg = format!("event {same}: trace ends, run continues with `{g}`");
        println!("first divergence at {msg}");
        return Err(CliError::Diverged(msg));
    }
    println!("replayed {same} events, identical");
    Ok(())
}
