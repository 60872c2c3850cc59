//! Experiment configuration files and the artifacts written for them.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! rounds = 1000
//! mode = "implementable"      # raw | analytic | implementable
//! history_window = 50
//! delta = 2.0
//! regeneration = "hash"       # hash | lottery
//! seed = 7
//! repetitions = 20
//! output_dir = "out"
//!
//! [[players]]
//! behavior = "honest_known_cdf"
//! cost = { kind = "uniform01" }
//!
//! [[players]]
//! behavior = "distort"
//! cost = { kind = "uniform01" }
//! publish = { kind = "beta", alpha = 1.0, beta = 0.7 }
//! ```

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{
    cumulative_rejections, expected_dishonest_utility, expected_honest_utility, summarize,
    TraceSummary,
};
use crate::error::{Error, Result};
use crate::mechanism::{MechanismConfig, Mode, Regeneration};
use crate::players::{sub_seed, Behavior, PlayerSpec};
use crate::protocol::{run, SimConfig, SimulationTrace};
use crate::stats::{DistributionSpec, SampleHistory};

fn default_window() -> usize {
    SampleHistory::DEFAULT_WINDOW
}

fn default_delta() -> f64 {
    MechanismConfig::DEFAULT_DELTA
}

fn default_repetitions() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub rounds: u64,
    pub mode: Mode,
    #[serde(default = "default_window")]
    pub history_window: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default)]
    pub regeneration: Regeneration,
    pub seed: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub players: Vec<PlayerSpec>,
}

impl ExperimentConfig {
    pub fn new(players: Vec<PlayerSpec>, rounds: u64, seed: u64) -> Self {
        ExperimentConfig {
            rounds,
            mode: Mode::Implementable,
            history_window: default_window(),
            delta: default_delta(),
            regeneration: Regeneration::Hash,
            seed,
            repetitions: default_repetitions(),
            output_dir: default_output_dir(),
            players,
        }
    }

    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::config("rounds must be positive"));
        }
        if self.repetitions == 0 {
            return Err(Error::config("repetitions must be at least 1"));
        }
        self.mechanism().validate()?;
        self.players.iter().try_for_each(PlayerSpec::validate)
    }

    pub fn mechanism(&self) -> MechanismConfig {
        MechanismConfig {
            n_players: self.players.len(),
            mode: self.mode,
            history_window: self.history_window,
            delta: self.delta,
            regeneration: self.regeneration,
        }
    }

    /// Simulation for repetition `rep`, seeded independently of the others.
    pub fn sim_config(&self, rep: usize) -> SimConfig {
        SimConfig {
            mechanism: self.mechanism(),
            players: self.players.clone(),
            rounds: self.rounds,
            seed: sub_seed(self.seed, rep as u64),
        }
    }
}

/// Artifact selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Report {
    Trace,
    Summary,
    Table1,
    Rejections,
}

impl std::str::FromStr for Report {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(Report::Trace),
            "summary" => Ok(Report::Summary),
            "table1" => Ok(Report::Table1),
            "rejections" => Ok(Report::Rejections),
            other => Err(Error::config(format!("unknown report {other:?}"))),
        }
    }
}

/// Mean and standard error over repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stderr = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatePlayer {
    pub label: String,
    pub honest: bool,
    pub utility: Estimate,
    pub work: Estimate,
    pub executed_share: Estimate,
    pub rejection_rate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub rounds: u64,
    pub repetitions: usize,
    pub mode: Mode,
    pub seed: u64,
    pub players: Vec<AggregatePlayer>,
    pub per_repetition: Vec<TraceSummary>,
}

pub struct ExperimentOutput {
    pub traces: Vec<SimulationTrace>,
    pub summary: ExperimentSummary,
    /// Cumulative rejection fraction `[round][player]`, averaged over repetitions.
    pub rejections: Vec<Vec<f64>>,
    pub written: Vec<PathBuf>,
}

/// Runs every repetition (in parallel) without touching the filesystem.
pub fn simulate(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let traces = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| run(&config.sim_config(rep)))
        .collect::<Result<Vec<_>>>()?;
    let per_repetition = traces.iter().map(summarize).collect::<Result<Vec<_>>>()?;
    let players = (0..config.players.len())
        .map(|j| {
            let column = |f: &dyn Fn(&TraceSummary) -> f64| {
                Estimate::of(&per_repetition.iter().map(f).collect::<Vec<_>>())
            };
            AggregatePlayer {
                label: config.players[j].label(),
                honest: config.players[j].behavior.is_honest(),
                utility: column(&|s| s.players[j].mean_utility),
                work: column(&|s| s.players[j].mean_work),
                executed_share: column(&|s| s.players[j].executed_share),
                rejection_rate: column(&|s| s.players[j].rejection_rate),
            }
        })
        .collect();
    let rejections = mean_rejection_series(&traces);
    Ok(ExperimentOutput {
        summary: ExperimentSummary {
            rounds: config.rounds,
            repetitions: config.repetitions,
            mode: config.mode,
            seed: config.seed,
            players,
            per_repetition,
        },
        traces,
        rejections,
        written: Vec::new(),
    })
}

fn mean_rejection_series(traces: &[SimulationTrace]) -> Vec<Vec<f64>> {
    let series: Vec<Vec<Vec<f64>>> = traces.iter().map(cumulative_rejections).collect();
    let reps = series.len() as f64;
    let rounds = series.first().map_or(0, Vec::len);
    (0..rounds)
        .map(|r| {
            let n = series[0][r].len();
            (0..n)
                .map(|j| series.iter().map(|s| s[r][j]).sum::<f64>() / reps)
                .collect()
        })
        .collect()
}

/// Runs the experiment and writes the selected artifacts to `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig, reports: &[Report]) -> Result<ExperimentOutput> {
    let mut output = simulate(config)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir)?;
    if reports.contains(&Report::Trace) {
        for (rep, trace) in output.traces.iter().enumerate() {
            let path = dir.join(format!("trace_{rep:03}.csv"));
            write_trace_csv(trace, &mut io::BufWriter::new(fs::File::create(&path)?))?;
            output.written.push(path);
        }
    }
    if reports.contains(&Report::Summary) {
        let path = dir.join("summary.json");
        fs::write(&path, summary_json(&output.summary)?)?;
        output.written.push(path);
    }
    if reports.contains(&Report::Rejections) {
        let path = dir.join("rejections.csv");
        write_rejections_csv(
            &output.rejections,
            &mut io::BufWriter::new(fs::File::create(&path)?),
        )?;
        output.written.push(path);
    }
    Ok(output)
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

/// One row per round: `round`, then per player `published, effective,
/// accepted, utility, work`, then `decision`. Rounds are numbered from 1.
pub fn write_trace_csv(trace: &SimulationTrace, out: &mut impl Write) -> io::Result<()> {
    let mut header = vec!["round".to_string()];
    for j in 0..trace.n_players {
        for field in ["published", "effective", "accepted", "utility", "work"] {
            header.push(format!("p{j}_{field}"));
        }
    }
    header.push("decision".into());
    writeln!(out, "{}", header.join(","))?;
    for rec in &trace.records {
        let mut row = vec![(rec.round + 1).to_string()];
        for j in 0..trace.n_players {
            row.push(fixed(rec.published[j]));
            row.push(fixed(rec.effective[j]));
            row.push(u8::from(rec.accepted[j]).to_string());
            row.push(fixed(rec.utility[j]));
            row.push(fixed(rec.work[j]));
        }
        row.push(rec.decision.to_string());
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()
}

/// `round, p0, p1, ...`: cumulative rejected fraction up to each round.
pub fn write_rejections_csv(series: &[Vec<f64>], out: &mut impl Write) -> io::Result<()> {
    let n = series.first().map_or(0, Vec::len);
    let mut header = vec!["round".to_string()];
    header.extend((0..n).map(|j| format!("p{j}")));
    writeln!(out, "{}", header.join(","))?;
    for (r, row) in series.iter().enumerate() {
        let cells: Vec<String> = std::iter::once((r + 1).to_string())
            .chain(row.iter().map(|&v| fixed(v)))
            .collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    out.flush()
}

fn round6(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            let r = (x * 1e6).round() / 1e6;
            serde_json::Number::from_f64(if r == 0.0 { 0.0 } else { r })
                .map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round6).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round6(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every real rounded to 6 decimals.
pub fn summary_json(summary: &ExperimentSummary) -> Result<String> {
    let value = round6(serde_json::to_value(summary)?);
    Ok(serde_json::to_string_pretty(&value)? + "\n")
}

/// One line of the honest-versus-other payoff comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub label: String,
    pub honest_utility: Estimate,
    pub other_utility: Estimate,
    pub honest_reference: f64,
    pub other_reference: f64,
    pub other_rejection_rate: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub rounds: u64,
    pub repetitions: usize,
    pub rows: Vec<Table1Row>,
}

/// The five opponents of the payoff table: honest, random, Beta(1, 0.9),
/// Beta(1, 0.7) and the truncated normal, each against an honest uniform player.
pub fn table1_configs(base: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let opponents = [
        PlayerSpec::honest_uniform(),
        PlayerSpec::random_uniform(),
        PlayerSpec::distort_uniform(DistributionSpec::Beta {
            alpha: 1.0,
            beta: 0.9,
        }),
        PlayerSpec::distort_uniform(DistributionSpec::Beta {
            alpha: 1.0,
            beta: 0.7,
        }),
        PlayerSpec::distort_uniform(DistributionSpec::dishonest_normal()),
    ];
    opponents
        .into_iter()
        .map(|other| ExperimentConfig {
            players: vec![PlayerSpec::honest_uniform(), other],
            ..base.clone()
        })
        .collect()
}

fn is_honest_uniform(p: &PlayerSpec) -> bool {
    p.behavior.is_honest() && p.cost == DistributionSpec::Uniform01
}

pub fn table1_report(configs: &[ExperimentConfig]) -> Result<Table1> {
    let first = configs
        .first()
        .ok_or_else(|| Error::config("payoff table needs at least one row"))?;
    let mut rows = Vec::with_capacity(configs.len());
    for config in configs {
        if config.players.len() != 2 || !is_honest_uniform(&config.players[0]) {
            return Err(Error::config(
                "payoff table rows need exactly 2 players, the first honest uniform",
            ));
        }
        let out = simulate(config)?;
        let other = &config.players[1];
        let honest_reference = expected_honest_utility(2)?;
        let other_reference = match other.behavior {
            Behavior::HonestKnownCdf | Behavior::HonestEmpirical => honest_reference,
            _ => expected_dishonest_utility(2)?,
        };
        rows.push(Table1Row {
            label: format!("uniform vs {}", other.label()),
            honest_utility: out.summary.players[0].utility,
            other_utility: out.summary.players[1].utility,
            honest_reference,
            other_reference,
            other_rejection_rate: out.summary.players[1].rejection_rate,
        });
    }
    Ok(Table1 {
        rounds: first.rounds,
        repetitions: first.repetitions,
        rows,
    })
}

impl Table1 {
    pub fn write_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(
            out,
            "distributions,u1_mean,u1_stderr,u2_mean,u2_stderr,u1_reference,u2_reference,u2_rejection_rate"
        )?;
        for r in &self.rows {
            writeln!(
                out,
                "\"{}\",{},{},{},{},{},{},{}",
                r.label,
                fixed(r.honest_utility.mean),
                fixed(r.honest_utility.stderr),
                fixed(r.other_utility.mean),
                fixed(r.other_utility.stderr),
                fixed(r.honest_reference),
                fixed(r.other_reference),
                fixed(r.other_rejection_rate.mean)
            )?;
        }
        out.flush()
    }
}

impl fmt::Display for Table1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "Normalized utilities, {} rounds x {} repetitions",
            self.rounds, self.repetitions
        )?;
        writeln!(
            f,
            "{:<28} {:>17} {:>17} {:>8} {:>8} {:>9}",
            "distributions", "U1 (± se)", "U2 (± se)", "U1 ref", "U2 ref", "U2 rej"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<28} {:>8.3} ± {:<6.3} {:>8.3} ± {:<6.3} {:>8.3} {:>8.3} {:>8.1}%",
                r.label,
                r.honest_utility.mean,
                r.honest_utility.stderr,
                r.other_utility.mean,
                r.other_utility.stderr,
                r.honest_reference,
                r.other_reference,
                100.0 * r.other_rejection_rate.mean
            )?;
        }
        Ok(())
    }
}
