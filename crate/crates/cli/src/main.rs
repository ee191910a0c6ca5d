use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use dirheat_cli::{
    dump_j, dump_p, envelope_dump, parse_config, run_suite, simulate, to_csv, to_json, Config, Header, RunError, Suite,
};
use dirheat_core::harness;

#[derive(Parser)]
#[command(name = "dirheat", version = dirheat_cli::VERSION, about = "Dirichlet heat kernel estimates and their verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the standing conditions on the kernel and the domain.
    CheckConditions(Io),
    /// Jump kernel and free density tables.
    Kernel {
        #[command(subcommand)]
        what: KernelCommand,
    },
    /// Envelope tables.
    Envelope {
        #[command(subcommand)]
        what: EnvelopeCommand,
    },
    /// Histogram estimate of the Dirichlet heat kernel.
    Simulate(Io),
    /// Run a verification suite and write its report.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[command(flatten)]
        io: Io,
        /// CSV sidecar path; defaults to the report path with a .csv extension.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Record wall-clock runtime in the report.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Subcommand)]
enum KernelCommand {
    DumpJ(Io),
    DumpP(Io),
}

#[derive(Subcommand)]
enum EnvelopeCommand {
    Dump(Io),
}

#[derive(clap::Args)]
struct Io {
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(path: &Path) -> Result<Config, RunError> {
    let text = std::fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    let cfg = parse_config(&text)?;
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), RunError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| RunError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn table(io: &Io, f: fn(&Config) -> Result<String, RunError>) -> Result<i32, RunError> {
    let cfg = load(&io.config)?;
    let rows = f(&cfg)?;
    emit(io.out.as_deref(), &to_csv(&rows, &Header::for_config(&cfg)))?;
    Ok(0)
}

fn run(cli: Cli) -> Result<i32, RunError> {
    match cli.command {
        Command::CheckConditions(io) => {
            let cfg = load(&io.config)?;
            let domain = cfg.domain_or("intervals:(-1,1)")?;
            let report = harness::conditions_report(&cfg.kernel, &domain)?;
            emit(io.out.as_deref(), &to_json(&report, &Header::for_config(&cfg))?)?;
            Ok(report.status.exit_code())
        }
        Command::Kernel { what } => match what {
            KernelCommand::DumpJ(io) => table(&io, dump_j),
            KernelCommand::DumpP(io) => table(&io, dump_p),
        },
        Command::Envelope {
            what: EnvelopeCommand::Dump(io),
        } => table(&io, envelope_dump),
        Command::Simulate(io) => table(&io, simulate),
        Command::Verify { suite, io, csv, timing } => {
            let cfg = load(&io.config)?;
            let start = Instant::now();
            let mut report = run_suite(suite, &cfg)?;
            if timing {
                report.runtime_s = Some(start.elapsed().as_secs_f64());
            }
            let header = Header::for_config(&cfg);
            emit(io.out.as_deref(), &to_json(&report, &header)?)?;
            let sidecar = csv.or_else(|| io.out.as_ref().map(|p| p.with_extension("csv")));
            if let Some(p) = sidecar {
                emit(Some(&p), &to_csv(&report.csv_rows(), &header))?;
            }
            eprintln!("{}: {}", suite.name(), report.status.label());
            Ok(report.status.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("dirheat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
