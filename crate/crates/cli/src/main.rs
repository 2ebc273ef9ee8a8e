use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use log::error;
use metro_recovery::ctm::parse_routes;
use metro_recovery::model::{load_scenario, save_scenario, validate_scenario};
use metro_recovery::pipeline::{run_pipeline, PipelineError, RunOptions, Stage};
use metro_recovery::synth::{case_scenario, toy_scenario, ToyLimits};

#[derive(Parser)]
#[command(name = "metro-recovery", version, about = "Metro disruption recovery: timetable rescheduling and bus bridging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline or a single stage on the artifacts already in --out.
    Run(RunArgs),
    /// Check a scenario file and list every violation.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Write a synthetic scenario as JSON.
    Generate {
        #[arg(long, value_enum, default_value_t = Kind::Case)]
        kind: Kind,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Case,
    Toy,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    All,
    Reschedule,
    Map,
    Sodta,
    Baseline,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = StageArg::All)]
    stage: StageArg,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Also write the stage-1 model as stage1.mps.
    #[arg(long)]
    export_mps: bool,
    /// Also write the indicator set as indicators.csv.
    #[arg(long)]
    dump_indicators: bool,
    /// Fixed route for a class, `class=cell,cell,...`; repeatable.
    #[arg(long = "baseline-route")]
    baseline_route: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(args),
        Command::Validate { scenario } => validate(scenario),
        Command::Generate { kind, seed, out } => match generate(kind, seed, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                error!("{:#}", e);
                ExitCode::from(4)
            }
        },
    }
}

fn run(args: RunArgs) -> ExitCode {
    let mut routes = BTreeMap::new();
    for spec in &args.baseline_route {
        match parse_routes(spec) {
            Ok(r) => routes.extend(r),
            Err(e) => {
                error!("baseline: {}", e);
                return ExitCode::from(5);
            }
        }
    }
    let opts = RunOptions {
        stage: match args.stage {
            StageArg::All => Stage::All,
            StageArg::Reschedule => Stage::Reschedule,
            StageArg::Map => Stage::Map,
            StageArg::Sodta => Stage::Sodta,
            StageArg::Baseline => Stage::Baseline,
        },
        seed: args.seed,
        threads: args.threads,
        eps: args.eps,
        export_mps: args.export_mps,
        dump_indicators: args.dump_indicators,
        baseline_routes: routes,
        ..RunOptions::new(args.scenario, args.out)
    };
    match run_pipeline(&opts) {
        Ok(_) => {
            if let Ok(text) = std::fs::read_to_string(opts.out_dir.join(metro_recovery::pipeline::SUMMARY)) {
                print!("{}", text);
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &PipelineError) -> ExitCode {
    error!("{}", e);
    ExitCode::from(e.exit_code() as u8)
}

fn validate(path: PathBuf) -> ExitCode {
    let s = match load_scenario(&path) {
        Ok(s) => s,
        Err(e) => return fail(&PipelineError::from(e)),
    };
    let report = validate_scenario(&s);
    if report.is_empty() {
        println!("{}: ok", path.display());
        ExitCode::SUCCESS
    } else {
        for v in &report.violations {
            println!("{}", v);
        }
        ExitCode::from(5)
    }
}

fn generate(kind: Kind, seed: u64, out: &PathBuf) -> anyhow::Result<()> {
    let s = match kind {
        Kind::Case => case_scenario(seed),
        Kind::Toy => toy_scenario(seed, ToyLimits::default()),
    };
    save_scenario(&s, out).with_context(|| format!("writing {}", out.display()))
}
