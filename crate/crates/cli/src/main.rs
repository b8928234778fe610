mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use s2c_core::config::{Overrides, RunConfig};
use s2c_core::scene::SceneKind;

#[derive(Parser, Debug)]
#[command(name = "s2c", version, about = "Sparse-view scene completion toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// JSON run configuration; missing fields keep their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for internal parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reduce gradients in a fixed order for bit-reproducible output.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic scene bundle with ground truth.
    GenScene {
        #[arg(long)]
        kind: Option<SceneKind>,
    },
    /// Seed Gaussians from the bundle point cloud and fit the input views.
    Init {
        #[arg(long)]
        scene: PathBuf,
    },
    /// Plan a camera trajectory that extends the input cameras.
    Plan {
        #[arg(long)]
        scene: PathBuf,
    },
    /// Perturb and thin a Gaussian set.
    Degrade {
        #[arg(long)]
        gaussians: PathBuf,
    },
    /// Refine Gaussians along a trajectory with a repair oracle.
    Refine {
        #[arg(long)]
        gaussians: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        /// Scene bundle providing ground truth for the oracle and metrics.
        #[arg(long)]
        scene: Option<PathBuf>,
    },
    /// PSNR and SSIM between two image directories, or between renderings of
    /// a Gaussian set and a view directory.
    Eval {
        /// Directory of predicted images.
        #[arg(long, conflicts_with = "gaussians")]
        pred: Option<PathBuf>,
        /// Gaussians to render at the cameras of `gt`.
        #[arg(long)]
        gaussians: Option<PathBuf>,
        /// Reference images; with --gaussians it must hold cameras.json.
        #[arg(long)]
        gt: PathBuf,
    },
    /// Write the coverage samples colored by which cameras see them.
    ExportCoverage {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::GenScene { .. } => "gen-scene",
            Command::Init { .. } => "init",
            Command::Plan { .. } => "plan",
            Command::Degrade { .. } => "degrade",
            Command::Refine { .. } => "refine",
            Command::Eval { .. } => "eval",
            Command::ExportCoverage { .. } => "export-coverage",
        }
    }
}

/// Failure reported on stderr as `{code, message, context}`.
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
    pub context: Value,
}

impl CliError {
    fn envelope(&self) -> Value {
        json!({"code": self.code, "message": self.message, "context": self.context})
    }
}

impl From<s2c_core::Error> for CliError {
    fn from(e: s2c_core::Error) -> Self {
        let context = match &e {
            s2c_core::Error::Io { path, .. } | s2c_core::Error::Parse { path, .. } => {
                json!({"path": path})
            }
            _ => json!({}),
        };
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
            context,
        }
    }
}

fn fail(err: &CliError) -> ExitCode {
    eprintln!("{}", err.envelope());
    ExitCode::from(1)
}

fn run(cli: Cli) -> Result<Value, CliError> {
    let g = &cli.global;
    let overrides = Overrides {
        seed: g.seed,
        threads: g.threads,
        deterministic: g.deterministic,
        output_dir: g.out.clone(),
    };
    let cfg = RunConfig::resolve(g.config.as_deref(), &overrides)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| CliError {
                code: "thread_pool".into(),
                message: e.to_string(),
                context: json!({"threads": cfg.threads}),
            })?;
    }
    commands::prepare_out(&cfg)?;
    match &cli.command {
        Command::GenScene { kind } => commands::gen_scene(&cfg, kind.unwrap_or(cfg.scene_kind)),
        Command::Init { scene } => commands::init(&cfg, scene),
        Command::Plan { scene } => commands::plan(&cfg, scene),
        Command::Degrade { gaussians } => commands::degrade(&cfg, gaussians),
        Command::Refine {
            gaussians,
            trajectory,
            scene,
        } => commands::refine(&cfg, gaussians, trajectory, scene.as_deref()),
        Command::Eval {
            pred,
            gaussians,
            gt,
        } => commands::eval(&cfg, pred.as_deref(), gaussians.as_deref(), gt),
        Command::ExportCoverage { scene, trajectory } => {
            commands::export_coverage(&cfg, scene, trajectory)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("S2C_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            return fail(&CliError {
                code: "usage".into(),
                message: e.kind().to_string(),
                context: json!({"detail": e.to_string().trim()}),
            });
        }
    };
    let name = cli.command.name();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(mut e) => {
            if let Value::Object(m) = &mut e.context {
                m.insert("command".into(), json!(name));
            }
            fail(&e)
        }
    }
}
