//! `qpq`: runs experiment configs and writes traces, summaries and tables.

use std::fs;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use qpq_core::experiment::{
    run_experiment, table1_configs, table1_report, ExperimentConfig, Report,
};
use qpq_core::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportArg {
    Trace,
    Summary,
    Table1,
    Rejections,
}

impl From<ReportArg> for Report {
    fn from(r: ReportArg) -> Self {
        match r {
            ReportArg::Trace => Report::Trace,
            ReportArg::Summary => Report::Summary,
            ReportArg::Table1 => Report::Table1,
            ReportArg::Rejections => Report::Rejections,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qpq",
    version,
    about = "Payment-free task allocation simulator"
)]
struct Args {
    /// Experiment config (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Override the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of rounds.
    #[arg(long)]
    rounds: Option<u64>,
    /// Override the output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Artifacts to produce; repeatable. Defaults to trace, summary and rejections.
    #[arg(long, value_enum)]
    report: Vec<ReportArg>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Parse(_) => 2,
        Error::Divergence { .. } => 3,
        _ => 1,
    }
}

fn execute(args: Args) -> qpq_core::Result<()> {
    let mut config = ExperimentConfig::load(&args.config).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", args.config.display())),
        other => other,
    })?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(rounds) = args.rounds {
        config.rounds = rounds;
    }
    if let Some(dir) = args.output {
        config.output_dir = dir;
    }
    config.validate()?;

    let mut reports: Vec<Report> = args.report.into_iter().map(Report::from).collect();
    if reports.is_empty() {
        reports = vec![Report::Trace, Report::Summary, Report::Rejections];
    }
    reports.dedup();

    let files: Vec<Report> = reports
        .iter()
        .copied()
        .filter(|r| *r != Report::Table1)
        .collect();
    if !files.is_empty() {
        let out = run_experiment(&config, &files)?;
        for p in &out.summary.players {
            println!(
                "{:<16} utility {:.6} ± {:.6}  executed {:.6}  rejected {:.6}",
                p.label,
                p.utility.mean,
                p.utility.stderr,
                p.executed_share.mean,
                p.rejection_rate.mean
            );
        }
        for path in &out.written {
            eprintln!("wrote {}", path.display());
        }
    }
    if reports.contains(&Report::Table1) {
        let table = table1_report(&table1_configs(&config))?;
        print!("{table}");
        fs::create_dir_all(&config.output_dir)?;
        let path = config.output_dir.join("table1.csv");
        table.write_csv(&mut BufWriter::new(fs::File::create(&path)?))?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let _ = io::Write::flush(&mut io::stdout());
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
