use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chowliu::experiments::{
    run_failure_experiment, run_latent_experiment, run_scaling_experiment, run_structure_experiment,
    ExperimentConfig, ExperimentKind,
};
use chowliu::{io, learn_ferro_model_with_partition, learn_lwr_bdd_model, loctv2, loctv_k_exact, Error};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

mod verify;

const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_CONTRACT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "clpp", version, about = "Learn tree Ising models that are accurate in local total variation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn a tree model from a correlation matrix (CSV).
    Learn {
        #[arg(long)]
        corr: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Where to write the model JSON (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write report.json (defaults to report.json next to --out).
        #[arg(long)]
        report: Option<PathBuf>,
        /// Ground-truth model for computing the error against the truth.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Dump the weak-edge block partition as JSON.
        #[arg(long)]
        dump_partition: Option<PathBuf>,
    },
    /// Draw samples from a model; writes CSV rows of +-1.
    Sample {
        #[arg(long)]
        model: PathBuf,
        #[arg(short = 'm', long = "samples")]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare two models in local total variation.
    Eval {
        #[arg(long)]
        model_a: PathBuf,
        #[arg(long)]
        model_b: PathBuf,
        /// Also compute the exact order-k local TV (n <= 15).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Run one of the experiments from a JSON config.
    Experiment {
        kind: Kind,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run oracle cross-checks; exit code 3 if a contract is violated.
        #[arg(long)]
        verify: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Failure,
    Structure,
    Scaling,
    Latent,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Failure => ExperimentKind::Failure,
            Kind::Structure => ExperimentKind::Structure,
            Kind::Scaling => ExperimentKind::Scaling,
            Kind::Latent => ExperimentKind::Latent,
        }
    }
}

enum Failure {
    Input(Error),
    Contract(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID_INPUT)
        }
        Err(Failure::Contract(violations)) => {
            for v in &violations {
                eprintln!("contract violation: {v}");
            }
            ExitCode::from(EXIT_CONTRACT_VIOLATION)
        }
    }
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Learn { corr, eps, out, report, truth, dump_partition } => {
            learn(&corr, eps, out.as_deref(), report, truth.as_deref(), dump_partition.as_deref())
        }
        Command::Sample { model, m, seed, out } => {
            let model = io::read_model(model)?;
            let samples = model.sample(m, seed)?;
            match out {
                Some(path) => io::write_samples_csv(std::fs::File::create(path)?, &samples)?,
                None => io::write_samples_csv(std::io::stdout().lock(), &samples)?,
            }
            Ok(())
        }
        Command::Eval { model_a, model_b, k } => {
            let a = io::read_model(model_a)?;
            let b = io::read_model(model_b)?;
            let mut report = json!({ "loctv2": loctv2(&a.pairwise_correlations(), &b.pairwise_correlations())? });
            if let Some(k) = k {
                report["k"] = json!(k);
                report["loctv_k"] = json!(loctv_k_exact(&a, &b, k)?);
            }
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::Experiment { kind, config, verify } => experiment(kind.into(), config.as_deref(), verify),
    }
}

fn learn(
    corr: &Path,
    eps: f64,
    out: Option<&Path>,
    report_path: Option<PathBuf>,
    truth: Option<&Path>,
    dump_partition: Option<&Path>,
) -> Result<(), Failure> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("--eps must be positive, got {eps}")).into());
    }
    let mu = io::read_correlation_csv(corr)?;
    let start = Instant::now();
    let model = chowliu::learn_model(&mu, eps)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    if let Some(path) = dump_partition {
        let (_, partition) = learn_ferro_model_with_partition(&mu.abs(), eps, learn_lwr_bdd_model)?;
        write_json(path, &serde_json::to_value(&partition)?)?;
    }
    let learned = model.pairwise_correlations();
    let mut report = json!({ "eps": eps, "runtime_ms": runtime_ms });
    let reference = match truth {
        Some(path) => {
            let truth = io::read_model(path)?.pairwise_correlations();
            report["loctv2_vs_truth"] = json!(loctv2(&learned, &truth)?);
            truth
        }
        None => mu.clone(),
    };
    report["constant_C_observed"] = json!(learned.max_abs_diff(&reference)? / eps);

    match out {
        Some(path) => {
            io::write_model(path, &model)?;
            let report_path = report_path
                .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).join("report.json"));
            write_json(&report_path, &report)?;
        }
        None => {
            println!("{}", io::model_to_json(&model)?);
            if let Some(path) = report_path {
                write_json(&path, &report)?;
            }
        }
    }
    Ok(())
}

fn experiment(kind: ExperimentKind, config: Option<&Path>, verify: bool) -> Result<(), Failure> {
    let raw = match config {
        Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    let cfg = raw.resolve(kind)?;
    let mut files: Vec<(&str, String)> = Vec::new();
    let (report, violations) = match kind {
        ExperimentKind::Failure => {
            let r = run_failure_experiment(&cfg)?;
            let mut csv = String::from("delta,n,chow_liu_loctv2,chow_liu_certificate,chow_liu_pp_loctv2\n");
            for p in &r.points {
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    p.delta, p.n, p.chow_liu_loctv2, p.chow_liu_certificate, p.chow_liu_pp_loctv2
                ));
            }
            files.push(("failure.csv", csv));
            let v = if verify { verify::failure(&r) } else { Vec::new() };
            (serde_json::to_value(&r)?, v)
        }
        ExperimentKind::Latent => {
            let r = run_latent_experiment(&cfg)?;
            let v = if verify { verify::latent(&r) } else { Vec::new() };
            (serde_json::to_value(&r)?, v)
        }
        ExperimentKind::Structure => {
            let r = run_structure_experiment(&cfg)?;
            let v = if verify { verify::structure(&r) } else { Vec::new() };
            (serde_json::to_value(&r)?, v)
        }
        ExperimentKind::Scaling => {
            let r = run_scaling_experiment(&cfg)?;
            files.push(("scaling.csv", r.to_csv()));
            (serde_json::to_value(&r)?, Vec::new())
        }
    };
    let mut violations = violations;
    if verify {
        violations.extend(verify::oracles(cfg.seed)?);
    }
    let report = json!({ "config": cfg, "report": report, "verified": verify, "violations": violations });
    if let Some(dir) = &raw.output_dir {
        std::fs::create_dir_all(dir)?;
        write_json(&dir.join("report.json"), &report)?;
        for (name, body) in files {
            std::fs::write(dir.join(name), body)?;
        }
    }
    println!("{}", serde_json::to_string_pretty(&report)?);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Contract(violations))
    }
}
