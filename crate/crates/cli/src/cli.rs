use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use amdplab_core::hard::{build_hard_instance, random_mixing_model, HardInstanceSpec, MAX_EPS};
use amdplab_core::mdp::{
    gain, induce_chain, mixing_time, model_mixing_time_with, policy_discounted_values, Policy,
    DEFAULT_ENUMERATION_CAP,
};
use amdplab_core::reduction::{reduction_parameters, AmdpOptions, solve_amdp_on};
use amdplab_core::solver::DEFAULT_C_SAMPLE;
use amdplab_core::Exec;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::config::{ExperimentConfig, InstanceSource};
use crate::error::{CliError, CliResult};
use crate::experiments::calibrate::{calibrate, CalibrationConfig};
use crate::experiments::lower::run_lower_experiment;
use crate::experiments::upper::{run_upper_experiment, RESULT_COLUMNS};
use crate::experiments::{rows_to_csv, LOWER_COLUMNS, MIXING_MAX_T};
use crate::io::{model_hash, read_model, read_policy, to_json_pretty, write_json, write_text};

#[derive(Debug, Parser)]
#[command(name = "amdplab", version, about = "Sample-based solving of mixing average-reward MDPs")]
pub struct Cli {
    /// Worker threads for data-parallel sections.
    #[arg(long, global = true, env = "AMDPLAB_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an average-reward model from generative samples.
    Solve(SolveArgs),
    /// Generate a lower-bound instance and its ground truth.
    GenHard(GenHardArgs),
    /// Generate a random model with a guaranteed mixing bound.
    GenRandom(GenRandomArgs),
    /// Measure the mixing time of one policy or of the whole model.
    Mixing(MixingArgs),
    /// Evaluate a policy's gain and, optionally, its discounted values.
    Eval(EvalArgs),
    /// Run the upper-bound experiment grid.
    ExpUb(ExpArgs),
    /// Run the lower-bound experiment grid.
    ExpLb(ExpArgs),
    /// Search for the smallest sample-budget constant meeting the success rate.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Target average-reward accuracy, in (0, 1).
    #[arg(long)]
    pub eps: f64,
    /// Failure probability, in (0, 1).
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Mixing-time bound for every deterministic policy.
    #[arg(long)]
    pub tmix: u64,
    /// Master seed for sampling and reward perturbation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Constant in front of the sample-budget formula.
    #[arg(long, default_value_t = DEFAULT_C_SAMPLE)]
    pub c_sample: f64,
    /// Fixed per-pair budget in place of the formula.
    #[arg(long)]
    pub samples_per_pair: Option<u64>,
    /// Policy output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the run report here (it always goes to stdout).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Record wall-clock time in the report (makes output nondeterministic).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct GenHardArgs {
    /// First-level state count.
    #[arg(long)]
    pub n: usize,
    /// Arms per first-level state.
    #[arg(long)]
    pub k: usize,
    /// Restart parameter in [1/2, 1).
    #[arg(long)]
    pub gamma: f64,
    /// Gap parameter in (0, 1/32].
    #[arg(long, default_value_t = MAX_EPS)]
    pub eps: f64,
    /// Seed for the planted cases and arms.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth output path.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenRandomArgs {
    #[arg(long)]
    pub states: usize,
    /// Actions per state.
    #[arg(long)]
    pub actions: usize,
    /// Restart weight in (0, 1]; every policy mixes within ⌈ln 4/β⌉ steps.
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MixingArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Maximize over all deterministic policies.
    #[arg(long, conflicts_with = "policy")]
    pub enumerate: bool,
    /// Measure a single policy instead.
    #[arg(long)]
    pub policy: Option<PathBuf>,
    /// Largest t to try.
    #[arg(long, default_value_t = MIXING_MAX_T)]
    pub max_t: usize,
    /// Largest number of policies to enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
    /// Also report discounted values at this discount.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    /// Experiment configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output path; defaults to the config's `output`, else stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Fill the wallclock_ms column (makes output nondeterministic).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 0.8)]
    pub gamma: f64,
    /// Gap parameter of the calibration instance.
    #[arg(long, default_value_t = MAX_EPS)]
    pub instance_eps: f64,
    #[arg(long, default_value_t = 0)]
    pub instance_seed: u64,
    /// Average-reward accuracy.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Seeds per candidate constant.
    #[arg(long, default_value_t = 50)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 40)]
    pub max_doublings: u32,
    /// Report output path (it always goes to stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn set_threads(n: usize) -> CliResult<()> {
    if n == 0 {
        return Err(CliError::validation("threads must be positive"));
    }
    #[cfg(feature = "parallel")]
    {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("reading {}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    // Instance paths are relative to the config file.
    if let Some(InstanceSource::File { path: p }) = &mut config.instance {
        if p.is_relative() {
            if let Some(dir) = path.parent() {
                *p = dir.join(&*p);
            }
        }
    }
    Ok(config)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn solve(args: &SolveArgs) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let params = reduction_parameters(args.eps, args.tmix, args.delta)?;
    let started = Instant::now();
    let opts = AmdpOptions {
        c_sample: args.c_sample,
        samples_per_pair: args.samples_per_pair,
        exec: Exec::Parallel,
    };
    let (report, _) = solve_amdp_on(&model, &params, opts, args.seed)?;
    let wallclock_ms = if args.timing { started.elapsed().as_millis() as u64 } else { 0 };
    let mut policy = report.policy.clone();
    policy.meta = Some(json!({
        "gamma": params.gamma,
        "eps_dmdp": params.eps_dmdp,
        "seed": args.seed,
    }));
    write_json(&args.out, &policy)?;
    let summary = json!({
        "model_hash": model_hash(&model),
        "eps": params.eps,
        "delta": params.delta,
        "t_mix": params.t_mix,
        "gamma": params.gamma,
        "eps_dmdp": params.eps_dmdp,
        "c_sample": report.c_sample,
        "samples_per_pair": report.samples_per_pair,
        "total_samples": report.total_samples,
        "vi_iterations": report.vi_iterations,
        "seed": args.seed,
        "wallclock_ms": wallclock_ms,
    });
    let text = to_json_pretty(&summary);
    if let Some(p) = &args.report {
        write_text(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

fn gen_hard(args: &GenHardArgs) -> CliResult<()> {
    let spec = HardInstanceSpec::random(args.n, args.k, args.gamma, args.eps, args.seed)?;
    let (model, truth) = build_hard_instance(&spec)?;
    write_text(&args.out, &format!("{}\n", model.to_json()))?;
    if let Some(p) = &args.truth {
        write_json(p, &truth)?;
    }
    print!("{}", to_json_pretty(&json!({
        "num_states": model.num_states(),
        "total_actions": model.total_actions(),
        "optimal_action": truth.optimal_action,
        "optimal_gain": truth.optimal_gain,
    })));
    Ok(())
}

fn gen_random(args: &GenRandomArgs) -> CliResult<()> {
    let model = random_mixing_model(args.seed, args.states, &vec![args.actions; args.states], args.beta)?;
    write_text(&args.out, &format!("{}\n", model.to_json()))
}

fn mixing(args: &MixingArgs) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let out = if args.enumerate {
        let r = model_mixing_time_with(&model, args.max_t, args.cap, Exec::Parallel)?;
        json!({
            "t_mix": r.report.mixing_time,
            "policy": r.policy.action_index,
            "worst_start_state": r.report.worst_start_state,
            "policies_checked": r.policies_checked,
        })
    } else if let Some(p) = &args.policy {
        let policy = read_policy(p)?;
        policy.check(&model)?;
        let r = mixing_time(&induce_chain(&model, &policy)?, args.max_t)?;
        json!({
            "t_mix": r.mixing_time,
            "worst_start_state": r.worst_start_state,
        })
    } else {
        return Err(CliError::validation("mixing needs --enumerate or --policy"));
    };
    print!("{}", to_json_pretty(&out));
    Ok(())
}

fn eval(args: &EvalArgs) -> CliResult<()> {
    let model = read_model(&args.model)?;
    let policy = read_policy(&args.policy)?;
    policy.check(&model)?;
    let mut out = json!({ "gain": gain(&model, &policy)? });
    if let Some(g) = args.gamma {
        out["gamma"] = json!(g);
        out["discounted_values"] = json!(policy_discounted_values(&model, &policy, g, false)?.values);
        out["rescaled_values"] = json!(policy_discounted_values(&model, &policy, g, true)?.values);
    }
    print!("{}", to_json_pretty(&out));
    Ok(())
}

fn exp_ub(args: &ExpArgs, threads_given: bool) -> CliResult<()> {
    let config = load_config(&args.config)?;
    if let (false, Some(t)) = (threads_given, config.threads) {
        set_threads(t)?;
    }
    let rows = run_upper_experiment(&config, Exec::Parallel, args.timing)?;
    let text = rows_to_csv(&RESULT_COLUMNS, &rows)?;
    emit(args.out.as_deref().or(config.output.as_deref()), &text)
}

fn exp_lb(args: &ExpArgs, threads_given: bool) -> CliResult<()> {
    let config = load_config(&args.config)?;
    if let (false, Some(t)) = (threads_given, config.threads) {
        set_threads(t)?;
    }
    let rows = run_lower_experiment(&config, Exec::Parallel)?;
    let text = rows_to_csv(&LOWER_COLUMNS, &rows)?;
    emit(args.out.as_deref().or(config.output.as_deref()), &text)
}

fn run_calibrate(args: &CalibrateArgs) -> CliResult<()> {
    let config = CalibrationConfig {
        n: args.n,
        k: args.k,
        gamma_lb: args.gamma,
        instance_eps: args.instance_eps,
        instance_seed: args.instance_seed,
        eps: args.eps,
        delta: args.delta,
        seeds: args.seeds,
        master_seed: args.seed,
        max_doublings: args.max_doublings,
    };
    let report = calibrate(&config, Exec::Parallel)?;
    let text = to_json_pretty(&report);
    if let Some(p) = &args.out {
        write_text(p, &text)?;
    }
    print!("{text}");
    Ok(())
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    if let Some(t) = cli.threads {
        set_threads(t)?;
    }
    let threads_given = cli.threads.is_some();
    match &cli.command {
        Command::Solve(a) => solve(a),
        Command::GenHard(a) => gen_hard(a),
        Command::GenRandom(a) => gen_random(a),
        Command::Mixing(a) => mixing(a),
        Command::Eval(a) => eval(a),
        Command::ExpUb(a) => exp_ub(a, threads_given),
        Command::ExpLb(a) => exp_lb(a, threads_given),
        Command::Calibrate(a) => run_calibrate(a),
    }
}

/// Parses `argv`, runs the command, and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
