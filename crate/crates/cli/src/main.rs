use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tdroute_core::bench_io::{
    default_profiles, evaluate_under, flatten, generate_td, load_instance, parse_profiles, parse_solution, write_native,
    write_solution, BenchOptions, FlattenMode, TdOptions, SLACK_BUCKETS,
};
use tdroute_core::scheduler::{AGGRESSIVE_SOFT_BRACKETS, SOFT_BRACKETS};
use tdroute_core::solver::{solve, validate, Config, Instance, Mode, Plan};

/// Environment variable holding the default worker count.
const THREADS_ENV: &str = "TDROUTE_THREADS";

#[derive(Parser)]
#[command(name = "tdroute", version, about = "Time-dependent vehicle routing with pickups, deliveries and windows")]
struct Cli {
    #[command(flatten)]
    bench: BenchArgs,
    #[command(subcommand)]
    command: Command,
}

/// Options applied when reading Solomon, Homberger or Li–Lim files.
#[derive(Args)]
struct BenchArgs {
    /// Cost per used vehicle for benchmark files.
    #[arg(long, global = true, default_value_t = 200.0)]
    fixed_cost: f64,
    /// Penalty per unserved customer for benchmark files.
    #[arg(long, global = true, default_value_t = 1e5)]
    penalty: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Plan tours for an instance.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Default)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Parallel workers; defaults to $TDROUTE_THREADS or 1.
        #[arg(long, env = THREADS_ENV, default_value_t = 1)]
        workers: usize,
        /// Random-walk iterations per worker.
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        /// Wall-time cap in seconds. Results then depend on machine speed.
        #[arg(long)]
        time_limit: Option<f64>,
        /// `standard`, `aggressive` or a list such as `15:1,10:2,5:4`
        /// (minutes before the deadline : dollars).
        #[arg(long)]
        soft_windows: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a solution against an instance.
    Validate { instance: PathBuf, solution: PathBuf },
    /// Derive a time-dependent instance from a benchmark instance.
    GenerateTd {
        base: PathBuf,
        /// File with one line of hourly speed multipliers per profile.
        #[arg(long)]
        profiles: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Keep the base windows instead of drawing new ones.
        #[arg(long)]
        keep_windows: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replace time-dependent travel times by constants.
    Flatten {
        instance: PathBuf,
        #[arg(long, value_enum)]
        mode: FlattenArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Replay a solution under the instance's travel times.
    Evaluate {
        instance: PathBuf,
        solution: PathBuf,
        /// Print the slack histogram as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Solve every instance file in a directory.
    Bench {
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportArg::Csv)]
        report: ReportArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2000)]
        iterations: usize,
        /// Instances solved concurrently; defaults to $TDROUTE_THREADS or 1.
        #[arg(long, env = THREADS_ENV, default_value_t = 1)]
        jobs: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Default,
    HighEffort,
}

#[derive(Clone, Copy, ValueEnum)]
enum FlattenArg {
    Worst,
    Average,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportArg {
    Csv,
}

/// Failure with its exit code.
enum Failure {
    Violations(String),
    Usage(String),
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = BenchOptions { fixed_cost: cli.bench.fixed_cost, unserved_penalty: cli.bench.penalty };
    match run(cli.command, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Violations(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn read_instance(path: &Path, opts: &BenchOptions) -> Result<Instance, Failure> {
    load_instance(path, opts).map_err(usage)
}

fn read_plan(path: &Path) -> Result<(String, Plan), Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_solution(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_soft(text: &str) -> Result<Vec<(f64, f64)>, Failure> {
    match text {
        "standard" => return Ok(SOFT_BRACKETS.to_vec()),
        "aggressive" => return Ok(AGGRESSIVE_SOFT_BRACKETS.to_vec()),
        "none" => return Ok(Vec::new()),
        _ => {}
    }
    text.split(',')
        .map(|part| {
            let (m, d) = part.split_once(':').ok_or_else(|| usage(format!("bad soft window bracket `{part}`")))?;
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| usage(format!("bad number `{s}` in `{part}`")));
            Ok((num(m)?, num(d)?))
        })
        .collect()
}

fn check_name(inst: &Instance, name: &str) {
    if inst.name != name {
        eprintln!("warning: solution was written for `{name}`, instance is `{}`", inst.name);
    }
}

fn run(command: Command, opts: &BenchOptions) -> Outcome {
    match command {
        Command::Solve { instance, mode, seed, workers, iterations, time_limit, soft_windows, output } => {
            let inst = read_instance(&instance, opts)?;
            let soft = soft_windows.as_deref().map(parse_soft).transpose()?;
            let time_limit = match time_limit {
                Some(s) if !(s.is_finite() && s >= 0.0) => return Err(usage(format!("bad time limit {s}"))),
                other => other.map(Duration::from_secs_f64),
            };
            let config = Config {
                workers,
                iterations,
                time_limit,
                seed,
                mode: match mode {
                    ModeArg::Default => Mode::Default,
                    ModeArg::HighEffort => Mode::HighEffort,
                },
                soft_windows: soft,
            };
            let started = Instant::now();
            let sol = solve(&inst, &config);
            let plan = sol.plan();
            eprintln!(
                "{}: {} tours, {} unserved, cost {:.2} in {:.2}s",
                inst.name,
                plan.tours.len(),
                plan.unserved.len(),
                sol.cost,
                started.elapsed().as_secs_f64()
            );
            emit(output.as_deref(), &write_solution(&inst.name, &plan))
        }
        Command::Validate { instance, solution } => {
            let inst = read_instance(&instance, opts)?;
            let (name, plan) = read_plan(&solution)?;
            check_name(&inst, &name);
            let report = validate(&inst, &plan);
            if report.is_feasible() {
                println!("feasible, cost {:.6}", report.cost);
                if (report.cost - plan.cost).abs() > 1e-6 * (1.0 + plan.cost.abs()) {
                    eprintln!("warning: file states cost {:.6}", plan.cost);
                }
                Ok(())
            } else {
                let mut msg = format!("{} violation(s):", report.violations.len());
                for v in &report.violations {
                    let _ = write!(msg, "\n  {v}");
                }
                Err(Failure::Violations(msg))
            }
        }
        Command::GenerateTd { base, profiles, seed, keep_windows, output } => {
            let inst = read_instance(&base, opts)?;
            let profiles = match profiles {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
                    parse_profiles(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
                }
                None => default_profiles(),
            };
            let td_opts = TdOptions { regenerate_windows: !keep_windows, ..TdOptions::default() };
            emit(output.as_deref(), &write_native(&generate_td(&inst, &profiles, seed, &td_opts)))
        }
        Command::Flatten { instance, mode, output } => {
            let inst = read_instance(&instance, opts)?;
            let mode = match mode {
                FlattenArg::Worst => FlattenMode::Worst,
                FlattenArg::Average => FlattenMode::Average,
                FlattenArg::Mixed => FlattenMode::Mixed,
            };
            emit(output.as_deref(), &write_native(&flatten(&inst, mode)))
        }
        Command::Evaluate { instance, solution, csv } => {
            let inst = read_instance(&instance, opts)?;
            let (name, plan) = read_plan(&solution)?;
            check_name(&inst, &name);
            let r = evaluate_under(&inst, &plan);
            if csv {
                println!("bucket_min,bucket_max,count");
                for (&(lo, hi), n) in SLACK_BUCKETS.iter().zip(r.slack) {
                    println!("{lo},{hi},{n}");
                }
                println!("late,,{}", r.slack[3]);
            } else {
                println!("tours {}", r.tours);
                println!("deliveries {}", r.deliveries);
                println!("cost {:.6}", r.cost);
                println!("late {}", r.late);
                println!("max_delay_s {:.3}", r.max_delay);
                for (&(lo, hi), n) in SLACK_BUCKETS.iter().zip(r.slack) {
                    println!("slack_{lo}_{hi}_min {n}");
                }
            }
            Ok(())
        }
        Command::Bench { dir, report: ReportArg::Csv, seed, iterations, jobs, output } => {
            bench(&dir, opts, seed, iterations, jobs.max(1), output.as_deref())
        }
    }
}

struct Row {
    instance: String,
    tours: usize,
    cost: f64,
    time_s: f64,
    feasible: bool,
}

fn bench_one(path: &Path, opts: &BenchOptions, config: &Config) -> Result<Row, Failure> {
    let inst = read_instance(path, opts)?;
    let started = Instant::now();
    let sol = solve(&inst, config);
    let time_s = started.elapsed().as_secs_f64();
    let plan = sol.plan();
    let report = validate(&inst, &plan);
    Ok(Row {
        instance: inst.name.clone(),
        tours: plan.tours.len(),
        cost: sol.cost,
        time_s,
        feasible: report.is_feasible() && plan.unserved.is_empty(),
    })
}

fn bench(dir: &Path, opts: &BenchOptions, seed: u64, iterations: usize, jobs: usize, output: Option<&Path>) -> Outcome {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| usage(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("{}: no instance files", dir.display())));
    }
    let config = Config { seed, iterations, ..Config::default() };
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut results: Vec<(usize, Result<Row, Failure>)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs.min(files.len()))
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let k = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        let Some(path) = files.get(k) else { break };
                        done.push((k, bench_one(path, opts, &config)));
                    }
                    done
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("bench worker panicked")).collect()
    });
    results.sort_by_key(|(k, _)| *k);
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["instance", "tours", "cost", "time_s"]).map_err(usage)?;
    let mut infeasible = Vec::new();
    for (_, row) in results {
        let row = row?;
        if !row.feasible {
            infeasible.push(row.instance.clone());
        }
        writer
            .write_record([row.instance, row.tours.to_string(), format!("{:.2}", row.cost), format!("{:.3}", row.time_s)])
            .map_err(usage)?;
    }
    let bytes = writer.into_inner().map_err(usage)?;
    emit(output, &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    if infeasible.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violations(format!("infeasible or incomplete: {}", infeasible.join(", "))))
    }
}
