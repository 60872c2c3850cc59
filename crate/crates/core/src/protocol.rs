//! Lockstep execution over independent node replicas.
//!
//! Each node owns one player and a full copy of the mechanism state. A round
//! has three phases separated by barriers: every node publishes without
//! reading, the bus delivers all publications to all nodes, and every node
//! runs the round locally. After the round the replicas are compared field by
//! field; any difference aborts the simulation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{
    MechanismConfig, MechanismState, Mode, Regeneration, RoundInput, RoundOutcome, RoundRecord,
};
use crate::players::{build_profiles, PlayerProfile, PlayerSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub mechanism: MechanismConfig,
    pub players: Vec<PlayerSpec>,
    pub rounds: u64,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(mode: Mode, players: Vec<PlayerSpec>, rounds: u64, seed: u64) -> Self {
        SimConfig {
            mechanism: MechanismConfig::new(players.len(), mode),
            players,
            rounds,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mechanism.validate()?;
        if self.players.len() != self.mechanism.n_players {
            return Err(Error::config(format!(
                "mechanism expects {} players but {} are declared",
                self.mechanism.n_players,
                self.players.len()
            )));
        }
        self.players.iter().try_for_each(PlayerSpec::validate)
    }
}

/// What a node broadcasts in one round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Publication {
    pub sender: usize,
    pub value: f64,
    pub lottery_share: Option<f64>,
    /// Perfect goodness-of-fit verdict, only consulted in analytic mode.
    pub conforming: bool,
}

/// Per-round mailbox with reliable, all-to-all delivery.
#[derive(Debug, Clone)]
pub struct BroadcastBus {
    n: usize,
    round: u64,
    mailbox: Vec<Option<Publication>>,
    posted: usize,
    deliveries: u64,
    early_reads: u64,
}

impl BroadcastBus {
    pub fn new(n: usize) -> Self {
        BroadcastBus {
            n,
            round: 0,
            mailbox: vec![None; n],
            posted: 0,
            deliveries: 0,
            early_reads: 0,
        }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn post(&mut self, publication: Publication) -> Result<()> {
        let slot = self
            .mailbox
            .get_mut(publication.sender)
            .ok_or_else(|| Error::domain(format!("unknown sender {}", publication.sender)))?;
        if slot.is_some() {
            return Err(Error::domain(format!(
                "sender {} already posted in round {}",
                publication.sender, self.round
            )));
        }
        *slot = Some(publication);
        self.posted += 1;
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.posted == self.n
    }

    /// All publications of the round in sender order. Fails, and counts the
    /// attempt, while any node has yet to post.
    pub fn deliver(&mut self) -> Result<Vec<Publication>> {
        if !self.is_complete() {
            self.early_reads += 1;
            return Err(Error::domain(format!(
                "round {} read with {}/{} publications posted",
                self.round, self.posted, self.n
            )));
        }
        self.deliveries += 1;
        Ok(self
            .mailbox
            .iter()
            .map(|p| p.expect("complete mailbox"))
            .collect())
    }

    /// Clears the mailbox for the next round.
    pub fn advance(&mut self) {
        self.mailbox.iter_mut().for_each(|p| *p = None);
        self.posted = 0;
        self.round += 1;
    }

    /// Successful deliveries so far (one per node per round).
    pub fn deliveries(&self) -> u64 {
        self.deliveries
    }

    /// Delivery attempts made before the round's publications were complete.
    pub fn early_reads(&self) -> u64 {
        self.early_reads
    }
}

/// One node: its own player and its own copy of the mechanism state.
#[derive(Debug, Clone)]
pub struct NodeReplica {
    index: usize,
    profile: PlayerProfile,
    state: MechanismState,
}

impl NodeReplica {
    pub fn index(&self) -> usize {
        self.index
    }

    pub fn profile(&self) -> &PlayerProfile {
        &self.profile
    }

    pub fn state(&self) -> &MechanismState {
        &self.state
    }
}

/// Private values a node keeps to itself for one round.
#[derive(Debug, Clone, Copy)]
struct Private {
    raw: f64,
    normalized: f64,
}

/// Ordered round records plus agreement bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub n_players: usize,
    pub mode: Mode,
    pub seed: u64,
    pub player_labels: Vec<String>,
    pub honest: Vec<bool>,
    /// Replica 0's record of each round, stored after agreement was checked.
    pub records: Vec<RoundRecord>,
    /// Rounds on which every replica was confirmed identical.
    pub agreed_rounds: u64,
}

impl SimulationTrace {
    pub fn rounds(&self) -> usize {
        self.records.len()
    }
}

pub struct Simulation {
    config: SimConfig,
    replicas: Vec<NodeReplica>,
    bus: BroadcastBus,
    agreed_rounds: u64,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let profiles = build_profiles(&config.players, config.seed)?;
        let replicas = profiles
            .into_iter()
            .enumerate()
            .map(|(index, profile)| {
                Ok(NodeReplica {
                    index,
                    profile,
                    state: MechanismState::new(config.mechanism.clone())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let bus = BroadcastBus::new(replicas.len());
        Ok(Simulation {
            config,
            replicas,
            bus,
            agreed_rounds: 0,
        })
    }

    /// Gives node `index` its own mechanism configuration, e.g. to model a
    /// misconfigured deployment. Only allowed before the first round.
    pub fn with_replica_config(mut self, index: usize, mechanism: MechanismConfig) -> Result<Self> {
        if self.bus.round() != 0 {
            return Err(Error::config(
                "replica configuration is fixed once the simulation started",
            ));
        }
        if mechanism.n_players != self.config.mechanism.n_players {
            return Err(Error::config("replica must agree on the number of players"));
        }
        let replica = self
            .replicas
            .get_mut(index)
            .ok_or_else(|| Error::config(format!("no replica {index}")))?;
        replica.state = MechanismState::new(mechanism)?;
        Ok(self)
    }

    pub fn replicas(&self) -> &[NodeReplica] {
        &self.replicas
    }

    pub fn bus(&self) -> &BroadcastBus {
        &self.bus
    }

    /// Advances every replica by one round and returns each replica's record.
    pub fn step(&mut self) -> Result<Vec<RoundRecord>> {
        let mode = self.config.mechanism.mode;
        let lottery = self.config.mechanism.regeneration == Regeneration::Lottery;

        // phase 1: publish, no reads
        let mut private = Vec::with_capacity(self.replicas.len());
        for replica in &mut self.replicas {
            let profile = &mut replica.profile;
            let raw = profile.next_cost();
            let (normalized, value) = if mode == Mode::Raw {
                let value = if profile.behavior().is_honest() {
                    raw
                } else {
                    profile.publish(raw)
                };
                (raw, value)
            } else {
                let normalized = profile.normalize(raw);
                (normalized, profile.publish(normalized))
            };
            let lottery_share = lottery.then(|| profile.lottery_share());
            self.bus.post(Publication {
                sender: replica.index,
                value,
                lottery_share,
                conforming: profile.conforms(),
            })?;
            private.push(Private { raw, normalized });
        }

        // phase 2: deliver to every node
        let mut inboxes = Vec::with_capacity(self.replicas.len());
        for _ in &self.replicas {
            inboxes.push(self.bus.deliver()?);
        }

        // phase 3: every node runs the round on its own copy
        let true_costs: Vec<f64> = private.iter().map(|p| p.raw).collect();
        let true_normalized: Vec<f64> = private.iter().map(|p| p.normalized).collect();
        let mut outcomes = Vec::with_capacity(self.replicas.len());
        for (replica, inbox) in self.replicas.iter_mut().zip(inboxes) {
            let input = RoundInput {
                published: inbox.iter().map(|p| p.value).collect(),
                conforming: (mode == Mode::Analytic)
                    .then(|| inbox.iter().map(|p| p.conforming).collect()),
                lottery_shares: lottery.then(|| {
                    inbox
                        .iter()
                        .map(|p| p.lottery_share.unwrap_or(0.0))
                        .collect()
                }),
            };
            outcomes.push(replica.state.process(&input)?);
        }
        let round = self.bus.round();
        self.bus.advance();
        self.check_agreement(round, &outcomes)?;
        self.agreed_rounds += 1;

        outcomes
            .into_iter()
            .map(|o| RoundRecord::score(o, true_costs.clone(), true_normalized.clone()))
            .collect()
    }

    fn check_agreement(&self, round: u64, outcomes: &[RoundOutcome]) -> Result<()> {
        let reference = &outcomes[0];
        let reference_state = &self.replicas[0].state;
        let mut report = Vec::new();
        for (i, (outcome, replica)) in outcomes.iter().zip(&self.replicas).enumerate().skip(1) {
            report.extend(
                diff_outcomes(reference, outcome)
                    .into_iter()
                    .map(|d| format!("replica {i}: {d}")),
            );
            report.extend(
                diff_states(reference_state, &replica.state)
                    .into_iter()
                    .map(|d| format!("replica {i}: {d}")),
            );
        }
        if report.is_empty() {
            Ok(())
        } else {
            Err(Error::Divergence {
                round,
                report: report.join("\n"),
            })
        }
    }

    /// Runs the remaining rounds of the configuration.
    pub fn run_to_end(mut self) -> Result<SimulationTrace> {
        let mut records = Vec::with_capacity(self.config.rounds as usize);
        while (records.len() as u64) < self.config.rounds {
            let mut per_replica = self.step()?;
            records.push(per_replica.swap_remove(0));
        }
        Ok(SimulationTrace {
            n_players: self.replicas.len(),
            mode: self.config.mechanism.mode,
            seed: self.config.seed,
            player_labels: self.config.players.iter().map(PlayerSpec::label).collect(),
            honest: self
                .config
                .players
                .iter()
                .map(|p| p.behavior.is_honest())
                .collect(),
            records,
            agreed_rounds: self.agreed_rounds,
        })
    }
}

/// Runs `config` from scratch.
pub fn run(config: &SimConfig) -> Result<SimulationTrace> {
    Simulation::new(config.clone())?.run_to_end()
}

fn diff_outcomes(a: &RoundOutcome, b: &RoundOutcome) -> Vec<String> {
    let mut out = Vec::new();
    if a.decision != b.decision {
        out.push(format!("decision {} != {}", b.decision, a.decision));
    }
    for (j, (x, y)) in a.accepted.iter().zip(&b.accepted).enumerate() {
        if x != y {
            out.push(format!("accepted[{j}] {y} != {x}"));
        }
    }
    for (j, (x, y)) in a.effective.iter().zip(&b.effective).enumerate() {
        if x.to_bits() != y.to_bits() {
            out.push(format!("effective[{j}] {y} != {x}"));
        }
    }
    if a.thresholds != b.thresholds {
        out.push(format!(
            "thresholds {:?} != {:?}",
            b.thresholds, a.thresholds
        ));
    }
    if a.p_values != b.p_values {
        out.push(format!("p-values {:?} != {:?}", b.p_values, a.p_values));
    }
    out
}

fn diff_states(a: &MechanismState, b: &MechanismState) -> Vec<String> {
    let mut out = Vec::new();
    if a.round() != b.round() {
        out.push(format!("round counter {} != {}", b.round(), a.round()));
    }
    for j in 0..a.config().n_players {
        if a.history(j) != b.history(j) {
            out.push(format!("history[{j}] differs"));
        }
        if a.utility_mean(j).to_bits() != b.utility_mean(j).to_bits() {
            out.push(format!(
                "utility mean[{j}] {} != {}",
                b.utility_mean(j),
                a.utility_mean(j)
            ));
        }
    }
    if a.config() != b.config() {
        out.push("mechanism configuration differs".to_string());
    }
    out
}
