use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sprk::experiments::kepler::trajectory_error;
use sprk::experiments::{
    classify, gen_classification, gen_kepler, run_classification_on, run_convergence, run_kepler_on,
    run_verify, write_convergence_csv, ClassificationDataset, Defaults, Outcome, TrainConfig,
};
use sprk::integrator::Trajectory;
use sprk::tableau::{builtin_by_name, PrkTableau, TableauKind};
use sprk::{Error, NetParams, Result};

#[derive(Parser)]
#[command(name = "sprk", version, about = "Symplectic partitioned Runge-Kutta networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a tableau: exact symplectic, node and order residuals plus the measured order.
    VerifyTableau {
        /// Tableau JSON file with keys s, b, B, a, A.
        #[arg(long, conflicts_with = "name")]
        file: Option<PathBuf>,
        /// Built-in tableau (euler1, sprk2, sprk3, sprk4).
        #[arg(long)]
        name: Option<String>,
        /// Write the parsed tableau back out as JSON.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Convergence slopes of the built-in tableaux on the non-autonomous test system.
    Convergence {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a classifier on the concentric-circles data.
    TrainClassify(TrainArgs),
    /// Learn the Kepler force from trajectory data.
    TrainKepler(TrainArgs),
    /// Evaluate a saved model on a classification or trajectory CSV.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// JSON or TOML config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for metrics, model, report and data.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Fill the seconds column of the metrics file.
    #[arg(long)]
    timing: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::VerifyTableau { file, name, emit } => verify(file, name, emit),
        Command::Convergence { out } => {
            let rows = run_convergence()?;
            match out {
                Some(path) => write_convergence_csv(&rows, BufWriter::new(File::create(path)?))?,
                None => write_convergence_csv(&rows, io::stdout().lock())?,
            }
            Ok(if rows.iter().all(|r| r.slope.is_some()) { 0 } else { 1 })
        }
        Command::TrainClassify(args) => {
            let cfg = load_config(&args)?.resolve(&Defaults::CLASSIFICATION)?;
            let data = gen_classification(cfg.seed);
            let outcome = run_classification_on(&cfg, &data)?;
            finish(&outcome, &args)?;
            data.write_csv(BufWriter::new(File::create(args.out.join("train.csv"))?), &data.train)?;
            data.write_csv(BufWriter::new(File::create(args.out.join("test.csv"))?), &data.test)?;
            Ok(0)
        }
        Command::TrainKepler(args) => {
            let cfg = load_config(&args)?.resolve(&Defaults::KEPLER)?;
            let data = gen_kepler(cfg.seed)?;
            let outcome = run_kepler_on(&cfg, &data)?;
            finish(&outcome, &args)?;
            data.test.write_csv(BufWriter::new(File::create(args.out.join("test_trajectory.csv"))?))?;
            let mut w = BufWriter::new(File::create(args.out.join("train_trajectories.csv"))?);
            writeln!(w, "trajectory,t,q1,q2,p1,p2")?;
            for (k, traj) in data.trajectories.iter().enumerate() {
                for (t, z) in traj.times.iter().zip(&traj.states) {
                    writeln!(w, "{k},{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", z.q[0], z.q[1], z.p[0], z.p[1])?;
                }
            }
            Ok(0)
        }
        Command::Eval { model, data } => eval(&model, &data),
    }
}

fn load_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::load(&args.config)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    Ok(cfg)
}

fn finish(outcome: &Outcome, args: &TrainArgs) -> Result<()> {
    outcome.write_to(&args.out, args.timing)?;
    println!("{}", serde_json::to_string(&outcome.report)?);
    Ok(())
}

fn verify(file: Option<PathBuf>, name: Option<String>, emit: Option<PathBuf>) -> Result<u8> {
    let (tableau, builtin): (PrkTableau, Option<TableauKind>) = match (file, name) {
        (Some(path), None) => (PrkTableau::from_json_str(&std::fs::read_to_string(path)?)?, None),
        (None, Some(name)) => (builtin_by_name(&name)?, Some(name.parse()?)),
        _ => return Err(Error::InvalidArgument("pass exactly one of --file or --name".into())),
    };
    if let Some(path) = emit {
        std::fs::write(path, serde_json::to_string_pretty(&tableau.to_json())? + "\n")?;
    }
    let cert = run_verify(&tableau, builtin)?;
    println!("{cert}");
    Ok(if cert.passed { 0 } else { 1 })
}

fn eval(model: &Path, data: &Path) -> Result<u8> {
    let net = NetParams::load(model)?;
    let text = std::fs::read_to_string(data)?;
    let header = text.lines().next().unwrap_or_default().trim();
    if header == "x1,x2,label" {
        let set = ClassificationDataset::from_csv_str(&text)?;
        let acc = classify::accuracy(&net, &set, &set.test)?;
        println!("{{\"metric\": \"accuracy\", \"value\": {acc}}}");
    } else {
        let traj = Trajectory::from_csv_str(&text)?;
        if traj.len() < 2 {
            return Err(Error::InvalidArgument("trajectory needs at least two points".into()));
        }
        let err = trajectory_error(&net, &traj)?;
        println!("{{\"metric\": \"l2_error\", \"value\": {err}}}");
    }
    Ok(0)
}
