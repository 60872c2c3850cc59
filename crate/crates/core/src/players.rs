//! Strategy profiles: how a player draws its private cost and what it publishes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::mix64;
use crate::stats::{pit_empirical, Dist, DistributionSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "behavior", rename_all = "snake_case")]
pub enum Behavior {
    /// Publishes the transform of its cost through the cost law's own CDF.
    HonestKnownCdf,
    /// Publishes the randomized empirical transform against its own past costs.
    HonestEmpirical,
    /// Publishes fresh U(0,1) draws unrelated to its costs.
    RandomPublisher,
    /// Publishes fresh draws from `publish`, unrelated to its costs.
    Distort { publish: DistributionSpec },
}

impl Behavior {
    pub fn is_honest(&self) -> bool {
        matches!(self, Behavior::HonestKnownCdf | Behavior::HonestEmpirical)
    }
}

/// Declarative player: behavior plus true cost law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSpec {
    #[serde(flatten)]
    pub behavior: Behavior,
    pub cost: DistributionSpec,
}

impl PlayerSpec {
    pub fn honest_uniform() -> Self {
        PlayerSpec {
            behavior: Behavior::HonestKnownCdf,
            cost: DistributionSpec::Uniform01,
        }
    }

    pub fn random_uniform() -> Self {
        PlayerSpec {
            behavior: Behavior::RandomPublisher,
            cost: DistributionSpec::Uniform01,
        }
    }

    pub fn distort_uniform(publish: DistributionSpec) -> Self {
        PlayerSpec {
            behavior: Behavior::Distort { publish },
            cost: DistributionSpec::Uniform01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.cost.validate()?;
        if let Behavior::Distort { publish } = &self.behavior {
            publish.validate()?;
        }
        Ok(())
    }

    /// Short label used in reports, e.g. `beta(1, 0.7)`.
    pub fn label(&self) -> String {
        match &self.behavior {
            Behavior::HonestKnownCdf | Behavior::HonestEmpirical => "uniform".into(),
            Behavior::RandomPublisher => "random".into(),
            Behavior::Distort { publish } => match publish {
                DistributionSpec::Uniform01 => "uniform".into(),
                DistributionSpec::Beta { alpha, beta } => format!("beta({alpha}, {beta})"),
                DistributionSpec::Normal { mean, sd } => format!("normal({mean}, {sd})"),
                DistributionSpec::Exponential { rate } => format!("exponential({rate})"),
                DistributionSpec::Empirical { samples } => format!("empirical[{}]", samples.len()),
            },
        }
    }
}

/// Independent stream seed for `index` under a master `seed`.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

/// A live player with its private random stream.
#[derive(Debug, Clone)]
pub struct PlayerProfile {
    id: usize,
    spec: PlayerSpec,
    cost: Dist,
    publish_law: Option<Dist>,
    rng: ChaCha8Rng,
    raw_history: Vec<f64>,
}

impl PlayerProfile {
    pub fn new(id: usize, spec: PlayerSpec, seed: u64) -> Result<Self> {
        let cost = spec.cost.compile()?;
        let publish_law = match &spec.behavior {
            Behavior::Distort { publish } => Some(publish.compile()?),
            _ => None,
        };
        Ok(PlayerProfile {
            id,
            spec,
            cost,
            publish_law,
            rng: ChaCha8Rng::seed_from_u64(seed),
            raw_history: Vec::new(),
        })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn spec(&self) -> &PlayerSpec {
        &self.spec
    }

    pub fn behavior(&self) -> &Behavior {
        &self.spec.behavior
    }

    /// iid draw from the true cost law.
    pub fn next_cost(&mut self) -> f64 {
        self.cost.sample(&mut self.rng)
    }

    /// The player's true normalized cost for `raw`, used for scoring.
    ///
    /// Empirical players transform against their own earlier raw costs and
    /// then remember `raw`; everyone else uses the known law.
    pub fn normalize(&mut self, raw: f64) -> f64 {
        match self.spec.behavior {
            Behavior::HonestEmpirical => {
                let lambda: f64 = self.rng.random();
                let z = pit_empirical(&self.raw_history, raw, lambda)
                    .expect("lambda drawn from [0, 1)");
                self.raw_history.push(raw);
                z
            }
            _ if self.cost.is_continuous() => self.cost.cdf(raw),
            _ => {
                let lambda: f64 = self.rng.random();
                self.cost.pit(raw, lambda)
            }
        }
    }

    /// Value sent to the other players. Never sees anyone else's value.
    pub fn publish(&mut self, true_normalized: f64) -> f64 {
        match &self.publish_law {
            Some(law) => law.sample(&mut self.rng),
            None if self.spec.behavior == Behavior::RandomPublisher => self.rng.random(),
            None => true_normalized,
        }
    }

    /// Random contribution to jointly controlled lotteries.
    pub fn lottery_share(&mut self) -> f64 {
        match &self.publish_law {
            Some(law) => law.sample(&mut self.rng).rem_euclid(1.0),
            None => self.rng.random(),
        }
    }

    /// Whether a perfect goodness-of-fit test would accept this player's
    /// publications: true when they are U(0,1) distributed.
    pub fn conforms(&self) -> bool {
        match &self.spec.behavior {
            Behavior::HonestKnownCdf | Behavior::HonestEmpirical | Behavior::RandomPublisher => {
                true
            }
            Behavior::Distort { publish } => matches!(
                publish,
                DistributionSpec::Uniform01
                    | DistributionSpec::Beta {
                        alpha: 1.0,
                        beta: 1.0
                    }
            ),
        }
    }

    pub fn raw_history(&self) -> &[f64] {
        &self.raw_history
    }
}

/// Profiles for `specs` with per-player sub-seeds of `seed`.
pub fn build_profiles(specs: &[PlayerSpec], seed: u64) -> Result<Vec<PlayerProfile>> {
    if specs.len() < 2 {
        return Err(Error::config(format!(
            "need at least 2 players, got {}",
            specs.len()
        )));
    }
    specs
        .iter()
        .enumerate()
        .map(|(i, s)| PlayerProfile::new(i, s.clone(), sub_seed(seed, i as u64)))
        .collect()
}
