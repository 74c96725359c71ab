mod commands;
mod diag;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dnspace::synthetic::Shape;
use dnspace::Activation;

#[derive(Parser, Debug)]
#[command(name = "dnspace", version, about = "Vector-space reasoning over descriptions and situations")]
struct Cli {
    /// Output style: aligned text or JSON.
    #[arg(long, value_enum, default_value_t = Format::Human, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Heaviside,
    Relu,
}

impl From<ModeArg> for Activation {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Heaviside => Activation::Heaviside,
            ModeArg::Relu => Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShapeArg {
    Chain,
    Tree,
    Dense,
}

impl From<ShapeArg> for Shape {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Chain => Shape::Chain,
            ShapeArg::Tree => Shape::Tree,
            ShapeArg::Dense => Shape::Dense,
        }
    }
}

#[derive(Args, Debug)]
struct InferenceArgs {
    /// Ontology file (`.sandra` DSL or structured JSON); `-` reads stdin.
    ontology: PathBuf,
    /// Situation file (JSON); `-` reads stdin.
    situation: PathBuf,
    /// Step activation (exact) or ReLU (differentiable, unclamped).
    #[arg(long, value_enum, default_value_t = ModeArg::Heaviside)]
    mode: ModeArg,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check an ontology and compile every description basis.
    Validate { ontology: PathBuf },
    /// Print the vector of a situation, or of one ontology element.
    Encode {
        ontology: PathBuf,
        situation: Option<PathBuf>,
        /// Encode this role or description instead of a situation.
        #[arg(long, conflicts_with = "situation")]
        element: Option<String>,
    },
    /// Satisfaction probability of every description for a situation.
    Infer {
        #[command(flatten)]
        io: InferenceArgs,
        /// Display min(p, 1); only matters in ReLU mode.
        #[arg(long)]
        clamp: bool,
    },
    /// Per-component breakdown of one description against a situation.
    Explain {
        #[command(flatten)]
        io: InferenceArgs,
        /// Name of the description to break down.
        description: String,
    },
    /// Compare geometric inference with the symbolic check on every small situation.
    Verify {
        ontology: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_entities: usize,
        #[arg(long, default_value_t = 2)]
        max_depth: usize,
        /// Counterexamples to print in human output.
        #[arg(long, default_value_t = 10)]
        show: usize,
    },
    /// Compare the analytic Jacobian with central finite differences.
    Gradcheck {
        ontology: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Time basis construction on synthetic ontologies.
    Bench {
        #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [32, 64, 128, 256])]
        sizes: Vec<usize>,
        #[arg(long, value_enum, default_value_t = ShapeArg::Chain)]
        shape: ShapeArg,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Repetitions per size; the fastest is kept.
        #[arg(long, default_value_t = 5)]
        trials: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Validate { ontology } => commands::validate(&ontology),
        Command::Encode { ontology, situation, element } => {
            commands::encode(&ontology, situation.as_deref(), element.as_deref())
        }
        Command::Infer { io, clamp } => commands::infer(&io.ontology, &io.situation, io.mode.into(), clamp),
        Command::Explain { io, description } => {
            commands::explain(&io.ontology, &io.situation, &description, io.mode.into())
        }
        Command::Verify { ontology, max_entities, max_depth, show } => {
            commands::verify(&ontology, max_entities, max_depth, show)
        }
        Command::Gradcheck { ontology, trials, seed } => commands::gradcheck(&ontology, trials, seed),
        Command::Bench { sizes, shape, seed, trials } => commands::bench(&sizes, shape.into(), seed, trials),
    };
    match result {
        Ok(report) => {
            match cli.format {
                Format::Human => print!("{}", report.human),
                Format::Machine => println!("{}", serde_json::to_string(&report.machine).expect("json value")),
            }
            ExitCode::from(if report.success { 0 } else { 1 })
        }
        Err(failure) => {
            match cli.format {
                Format::Human => {
                    for d in failure.diagnostics() {
                        eprintln!("{d}");
                    }
                }
                Format::Machine => {
                    let out = serde_json::json!({ "ok": false, "diagnostics": failure.diagnostics() });
                    println!("{out}");
                }
            }
            ExitCode::from(failure.exit_code())
        }
    }
}
