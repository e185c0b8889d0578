use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bspe::analysis::{factors, minimize_ratio};
use bspe::harness::{
    check_bounds, generate_profile, load_profile_file, revenue_summary, trial_revenues, verify, ProfileFile,
    ProfileKind, VerifyKind, VerifyOptions,
};
use bspe::{Environment, SamplingBias, ValuationProfile};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map};

#[derive(Parser)]
#[command(name = "bspe", version, about = "Simulate and verify the BSPE random-sampling auction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo revenue of the mechanism on one profile, checked against
    /// the lower bounds.
    Simulate(SimulateArgs),
    /// Approximation factors over a grid of sampling biases.
    SweepP(SweepArgs),
    /// The bias minimising the approximation factor.
    MinimizeRatio(MinimizeArgs),
    /// Seeded verification experiments.
    Verify(VerifyArgs),
    /// Writes a generated profile file.
    Generate(GenerateArgs),
}

/// A profile file, or a generated profile.
#[derive(Args)]
struct ProfileArgs {
    /// Profile file `{"values": [...], "units": k}`.
    #[arg(long, value_name = "FILE", conflicts_with = "kind")]
    values: Option<PathBuf>,
    /// Generator kind, used instead of `--values`.
    #[arg(long, required_unless_present = "values")]
    kind: Option<ProfileKind>,
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    scale: u64,
    /// Generator seed (defaults to `--seed`).
    #[arg(long)]
    profile_seed: Option<u64>,
    /// Number of units; overrides the file (default for generated
    /// profiles: n).
    #[arg(long)]
    k: Option<usize>,
}

impl ProfileArgs {
    fn load(&self, seed: u64) -> Result<(ValuationProfile, Environment)> {
        let (profile, env) = match (&self.values, self.kind) {
            (Some(path), _) => load_profile_file(path)?,
            (None, Some(kind)) => {
                let profile = generate_profile(kind, self.n, self.profile_seed.unwrap_or(seed), self.scale)?;
                (profile, Environment::digital_goods(self.n.max(1)))
            }
            (None, None) => bail!("either --values or --kind is required"),
        };
        let env = match self.k {
            Some(k) => Environment::new(k)?,
            None => env,
        };
        Ok((profile, env))
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    #[arg(long, default_value_t = 0.26)]
    p: f64,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON summary destination (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-trial CSV `trial,revenue`.
    #[arg(long, value_name = "PATH")]
    raw: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 0.05)]
    p_min: f64,
    #[arg(long, default_value_t = 0.38)]
    p_max: f64,
    #[arg(long, default_value_t = 34)]
    steps: usize,
    /// Also simulate this profile at every grid point.
    #[arg(long, value_name = "FILE")]
    values: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MinimizeArgs {
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 0.05)]
    lo: f64,
    #[arg(long, default_value_t = 0.38)]
    hi: f64,
}

#[derive(Args)]
struct VerifyArgs {
    kind: VerifyKind,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Monte Carlo trials per experiment.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    extractor_instances: Option<u64>,
    #[arg(long)]
    ic_instances: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    kind: ProfileKind,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    scale: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Units written to the file (default n).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn to_json(value: &impl serde::Serialize) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn exit_code(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn simulate(args: SimulateArgs) -> Result<ExitCode> {
    if args.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let (profile, env) = args.profile.load(args.seed)?;
    let bias = SamplingBias::new(args.p)?;
    let report = check_bounds(&profile, &env, bias, args.trials, args.seed);

    if let Some(path) = &args.raw {
        let mut csv = String::from("trial,revenue\n");
        for (t, revenue) in trial_revenues(&profile, &env, bias, args.seed, args.trials).iter().enumerate() {
            csv.push_str(&format!("{t},{revenue}\n"));
        }
        fs::write(path, csv).with_context(|| format!("writing {}", path.display()))?;
    }

    let mut bounds = Map::new();
    let mut pass = Map::new();
    for row in &report.rows {
        bounds.insert(row.name.into(), json!(row.bound));
        pass.insert(row.name.into(), json!(row.pass));
    }
    let summary = json!({
        "mean": report.revenue.mean,
        "stddev": report.revenue.stddev,
        "stderr": report.revenue.stderr,
        "lower_3sigma": report.revenue.lower_3sigma,
        "upper_3sigma": report.revenue.upper_3sigma,
        "bounds": bounds,
        "pass": pass,
        "factors": report.factors,
        "n": profile.len(),
        "units": env.units(),
        "seed": args.seed,
        "trials": args.trials,
    });
    emit(args.out.as_deref(), &to_json(&summary)?)?;
    Ok(exit_code(report.pass))
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    SamplingBias::new(args.p_min)?;
    SamplingBias::new(args.p_max)?;
    if args.steps < 2 || args.p_min >= args.p_max {
        bail!("need --steps >= 2 and --p-min < --p-max");
    }
    let instance = match &args.values {
        Some(path) => {
            let (profile, env) = load_profile_file(path)?;
            let env = match args.k {
                Some(k) => Environment::new(k)?,
                None => env,
            };
            Some((profile, env))
        }
        None => None,
    };
    let mut csv = String::from("p,r1,r2,ratio");
    if instance.is_some() {
        csv.push_str(",mean,stderr,theorem_bound,pass");
    }
    csv.push('\n');
    let mut all_pass = true;
    for i in 0..args.steps {
        let p = args.p_min + (args.p_max - args.p_min) * i as f64 / (args.steps - 1) as f64;
        let f = factors(p);
        csv.push_str(&format!("{p},{},{},{}", f.r1, f.r2, f.ratio));
        if let Some((profile, env)) = &instance {
            let bias = SamplingBias::new(p)?;
            let summary = revenue_summary(profile, env, bias, args.seed, args.trials);
            let bound = bspe::benchmark::efo_revenue(&profile.v_super2(), env).as_f64() / f.ratio;
            let pass = summary.mean >= bound - 3.0 * summary.stderr;
            all_pass &= pass;
            csv.push_str(&format!(",{},{},{bound},{pass}", summary.mean, summary.stderr));
        }
        csv.push('\n');
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(exit_code(all_pass))
}

fn minimize(args: MinimizeArgs) -> Result<ExitCode> {
    let m = minimize_ratio(args.lo, args.hi, args.tol)?;
    let f = factors(m.p_star);
    let out = json!({
        "p_star": m.p_star,
        "ratio_star": m.ratio_star,
        "r1": f.r1,
        "r2": f.r2,
        "lo": args.lo,
        "hi": args.hi,
        "tol": args.tol,
    });
    emit(None, &to_json(&out)?)?;
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    let mut options = VerifyOptions::new(args.seed);
    if let Some(trials) = args.trials {
        options = options.with_trials(trials);
    }
    if let Some(n) = args.extractor_instances {
        options.extractor_instances = n;
    }
    if let Some(n) = args.ic_instances {
        options.ic_instances = n;
    }
    let report = verify(args.kind, &options)?;
    emit(args.out.as_deref(), &to_json(&report)?)?;
    Ok(exit_code(report.pass))
}

fn generate(args: GenerateArgs) -> Result<ExitCode> {
    let profile = generate_profile(args.kind, args.n, args.seed, args.scale)?;
    let file = ProfileFile {
        values: profile.entries().iter().map(|b| b.value.amount()).collect(),
        units: args.k.unwrap_or(args.n.max(1)),
    };
    Environment::new(file.units)?;
    emit(args.out.as_deref(), &(serde_json::to_string(&file)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => simulate(args),
        Command::SweepP(args) => sweep(args),
        Command::MinimizeRatio(args) => minimize(args),
        Command::Verify(args) => run_verify(args),
        Command::Generate(args) => generate(args),
    };
    result.unwrap_or_else(|err| {
        eprintln!("error: {err:#}");
        ExitCode::from(2)
    })
}
