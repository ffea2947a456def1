//! `ubrsim`: run single scenarios, sweeps and the built-in experiment grids.
//!
//! Exit status is 0 on success, 1 for invalid input (bad files, arguments
//! or output paths) and 2 when a run aborted on an internal invariant.

use std::fs;
use std::io::{self, Write};
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ubrsim::config::{parse_scenario, parse_sweep};
use ubrsim::network::simulate;
use ubrsim::output::{emit_results, write_trace, Format, ResultRow};
use ubrsim::sweep::{run_sweep, SweepOutcome, SweepSpec};
use ubrsim::{build_scenario, Error, ScenarioParams};

#[derive(Parser)]
#[command(name = "ubrsim", version, about = "TCP over ATM-UBR switch simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Run every point of a sweep file.
    Sweep {
        file: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        jobs: JobArgs,
    },
    /// Zero-loss buffer requirements with infinite buffers.
    Table1(PresetArgs),
    /// Policy comparison grid (efficiency column of interest).
    Table2(PresetArgs),
    /// Policy comparison grid (fairness column of interest).
    Table3(PresetArgs),
    /// Emit per-connection CWND traces as `time_ns,cwnd_bytes` lines.
    Trace {
        file: PathBuf,
        /// Only this connection, without section headers.
        #[arg(long)]
        conn: Option<u32>,
        /// Directory receiving one `conn_<i>.csv` file per connection.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JobArgs {
    /// Worker threads; defaults to the available cores.
    #[arg(long)]
    jobs: Option<NonZeroUsize>,
}

#[derive(Args)]
struct PresetArgs {
    #[command(flatten)]
    out: OutputArgs,
    #[command(flatten)]
    jobs: JobArgs,
}

impl JobArgs {
    fn count(&self) -> usize {
        self.jobs
            .or_else(|| std::thread::available_parallelism().ok())
            .map_or(1, NonZeroUsize::get)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Sim(_) => 2,
        Error::Config(_) | Error::Io { .. } | Error::Output(_) => 1,
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn describe(p: &ScenarioParams) -> String {
    let mut s = format!("{}/{}/{}/{}", p.config, p.n_sources, p.buffer, p.policy);
    if let Some(r) = p.r_fraction {
        s.push_str(&format!(" r={r}"));
    }
    if let Some(z) = p.z {
        s.push_str(&format!(" z={z}"));
    }
    s
}

/// Emits the successful rows and reports failures. The worst failure
/// decides the exit status.
fn finish(outcomes: Vec<SweepOutcome>, out: &OutputArgs) -> Result<u8, Error> {
    let mut rows = Vec::with_capacity(outcomes.len());
    let mut status = 0;
    for o in outcomes {
        match o.result {
            Ok(row) => rows.push(row),
            Err(e) => {
                eprintln!("error: {}: {e}", describe(&o.params));
                status = status.max(exit_code(&e));
            }
        }
    }
    emit_results(&rows, out.format, out.out.as_deref())?;
    Ok(status)
}

fn sweep(spec: &SweepSpec, out: &OutputArgs, jobs: &JobArgs) -> Result<u8, Error> {
    let n = spec.cardinality();
    let jobs = jobs.count();
    eprintln!(
        "running {n} scenario{} on {jobs} thread{}",
        plural(n),
        plural(jobs)
    );
    finish(run_sweep(spec, jobs), out)
}

fn plural(n: usize) -> &'static str {
    if n == 1 {
        ""
    } else {
        "s"
    }
}

fn trace(file: &Path, conn: Option<u32>, out: Option<&Path>) -> Result<u8, Error> {
    let scenario = build_scenario(&parse_scenario(&read(file)?)?)?;
    if let Some(c) = conn {
        if c >= scenario.n_sources {
            return Err(ubrsim::ConfigError::invalid(
                "conn",
                format!("scenario has {} connections", scenario.n_sources),
            )
            .into());
        }
    }
    let sim = simulate(&scenario, true)?;
    let traces = sim.traces.expect("tracing was enabled");
    let selected: Vec<(usize, _)> = traces
        .iter()
        .enumerate()
        .filter(|(i, _)| conn.is_none_or(|c| *i == c as usize))
        .collect();
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path, source }
    };
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            for (i, t) in selected {
                let path = dir.join(format!("conn_{i}.csv"));
                let file = fs::File::create(&path).map_err(io_err(&path))?;
                write_trace(t, io::BufWriter::new(file)).map_err(io_err(&path))?;
            }
        }
        None => {
            let stdout = Path::new("<stdout>");
            let mut w = io::BufWriter::new(io::stdout().lock());
            for (i, t) in selected {
                if conn.is_none() {
                    writeln!(w, "# conn {i}").map_err(io_err(stdout))?;
                }
                write_trace(t, &mut w).map_err(io_err(stdout))?;
            }
        }
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Run { file, out } => {
            let scenario = build_scenario(&parse_scenario(&read(&file)?)?)?;
            let result = ubrsim::run_scenario(&scenario)?;
            emit_results(
                &[ResultRow::new(&scenario, &result)],
                out.format,
                out.out.as_deref(),
            )?;
            Ok(0)
        }
        Command::Sweep { file, out, jobs } => {
            let spec = parse_sweep(&read(&file)?)?;
            sweep(&spec, &out, &jobs)
        }
        Command::Table1(a) => sweep(&SweepSpec::table1(), &a.out, &a.jobs),
        Command::Table2(a) | Command::Table3(a) => {
            sweep(&SweepSpec::policy_comparison(), &a.out, &a.jobs)
        }
        Command::Trace { file, conn, out } => trace(&file, conn, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
