use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use multibell_cli::{
    cmd_condition, cmd_generate, cmd_lhv, cmd_maximize, cmd_scan, cmd_tensor, parse_kind, CliError, CliResult,
    Output, ScanSpec, TensorSource, EXIT_INPUT,
};
use multibell_core::{ConditionKind, OptimizerOptions};

#[derive(Parser)]
#[command(name = "multibell", version, about = "Multisetting Bell inequalities and quantum violation conditions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the result here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizerArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
}

impl OptimizerArgs {
    fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            seed: self.seed,
            restarts: self.restarts,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct StateArgs {
    /// Named state: "singlet", "ghz:N=3,alpha=0.3", "noise:v=0.8(singlet)".
    #[arg(long, conflicts_with = "tensor")]
    state: Option<String>,
    /// Correlation tensor JSON file ("-" for stdin).
    #[arg(long)]
    tensor: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Correlation tensor of a named state.
    Tensor {
        spec: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Local hidden-variable model for a correlation table, or a certificate.
    Lhv {
        /// Table JSON file; stdin when omitted or "-".
        input: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Correlation-function Bell inequality from sign functions.
    Generate {
        /// Settings per party, e.g. "4x4x2".
        #[arg(long)]
        layout: String,
        /// Sign function as a 2^arity bitstring (1 = -1); repeat in tree order.
        #[arg(long = "sign-fn")]
        sign_fn: Vec<String>,
        /// Also verify that the inequality defines a facet.
        #[arg(long)]
        check_tight: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// CSV of violation conditions over a GHZ-family grid.
    Scan {
        #[arg(long, default_value = "ghz")]
        family: String,
        /// Party counts, comma separated or repeated.
        #[arg(long = "n", value_delimiter = ',', required = true)]
        parties: Vec<usize>,
        /// Number of alpha values from 0 to pi/4 inclusive.
        #[arg(long, default_value_t = 21)]
        steps: usize,
        /// Conditions: two-qubit, two-setting, cn (default two-setting and cn).
        #[arg(long = "kind", value_delimiter = ',')]
        kinds: Vec<String>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Violation conditions for a single state.
    Condition {
        #[command(flatten)]
        state: StateArgs,
        /// Conditions: two-qubit, two-setting, cn (default all that apply).
        #[arg(long = "kind", value_delimiter = ',')]
        kinds: Vec<String>,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Quantum value of a Bell inequality over measurement settings.
    Maximize {
        #[command(flatten)]
        state: StateArgs,
        /// Inequality JSON file ("-" for stdin).
        #[arg(long)]
        inequality: PathBuf,
        #[command(flatten)]
        optimizer: OptimizerArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

fn read_input(path: Option<&PathBuf>) -> CliResult<String> {
    let mut text = String::new();
    match path {
        Some(p) if p.as_os_str() != "-" => {
            text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
        }
        _ => {
            io::stdin()
                .read_to_string(&mut text)
                .map_err(|e| CliError::Input(format!("stdin: {e}")))?;
        }
    }
    Ok(text)
}

fn tensor_source(args: &StateArgs) -> CliResult<TensorSource> {
    match (&args.state, &args.tensor) {
        (Some(s), _) => Ok(TensorSource::Spec(s.clone())),
        (None, Some(p)) => Ok(TensorSource::Json(read_input(Some(p))?)),
        (None, None) => Err(CliError::Input("give --state or --tensor".into())),
    }
}

fn parse_kinds(kinds: &[String]) -> CliResult<Vec<ConditionKind>> {
    kinds.iter().map(|k| parse_kind(k)).collect()
}

fn run(command: Command) -> CliResult<(Output, Option<PathBuf>)> {
    Ok(match command {
        Command::Tensor { spec, output } => (cmd_tensor(&spec)?, output.out),
        Command::Lhv { input, output } => (cmd_lhv(&read_input(input.as_ref())?)?, output.out),
        Command::Generate {
            layout,
            sign_fn,
            check_tight,
            output,
        } => (cmd_generate(&layout, &sign_fn, check_tight)?, output.out),
        Command::Scan {
            family,
            parties,
            steps,
            kinds,
            optimizer,
            output,
        } => {
            let mut kinds = parse_kinds(&kinds)?;
            if kinds.is_empty() {
                kinds = vec![ConditionKind::TwoSettingN, ConditionKind::MultisettingCn];
            }
            let spec = ScanSpec {
                family,
                parties,
                steps,
                kinds,
            };
            (cmd_scan(&spec, &optimizer.options())?, output.out)
        }
        Command::Condition {
            state,
            kinds,
            optimizer,
            output,
        } => (
            cmd_condition(&tensor_source(&state)?, &parse_kinds(&kinds)?, &optimizer.options())?,
            output.out,
        ),
        Command::Maximize {
            state,
            inequality,
            optimizer,
            output,
        } => {
            let source = tensor_source(&state)?;
            let ineq = read_input(Some(&inequality))?;
            (cmd_maximize(&source, &ineq, &optimizer.options())?, output.out)
        }
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli.command) {
        Ok((output, out)) => {
            let written = match out {
                Some(p) => std::fs::write(&p, &output.text).map_err(|e| format!("{}: {e}", p.display())),
                None => io::stdout().write_all(output.text.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                eprintln!("multibell: {e}");
                return ExitCode::from(EXIT_INPUT as u8);
            }
            ExitCode::from(output.code as u8)
        }
        Err(e) => {
            eprintln!("multibell: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
