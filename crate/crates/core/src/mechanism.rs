//! The round engine.
//!
//! A round takes the vector of published normalized costs, polices each entry,
//! replaces rejected entries with a value every node derives identically,
//! appends the resulting effective values to the per-player histories and
//! assigns the task to the smallest effective value. Nothing here depends on
//! private information, so replicas fed the same published values stay
//! bit-identical.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{ks_test_uniform, KsResult, SampleHistory};

/// How published values are policed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Costs are published as-is and every finite value is accepted.
    Raw,
    /// Perfect goodness-of-fit: acceptance comes from an oracle flag per player.
    Analytic,
    /// Windowed KS test with the round-dependent elastic threshold.
    Implementable,
}

/// Source of replacement values for rejected publications.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regeneration {
    /// Hash of the round, the player and the other players' current values.
    #[default]
    Hash,
    /// Jointly controlled lottery over random shares sent by the other players.
    Lottery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub n_players: usize,
    pub mode: Mode,
    pub history_window: usize,
    pub delta: f64,
    pub regeneration: Regeneration,
}

impl MechanismConfig {
    pub const DEFAULT_DELTA: f64 = 2.0;

    pub fn new(n_players: usize, mode: Mode) -> Self {
        MechanismConfig {
            n_players,
            mode,
            history_window: SampleHistory::DEFAULT_WINDOW,
            delta: Self::DEFAULT_DELTA,
            regeneration: Regeneration::Hash,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_players < 2 {
            return Err(Error::config(format!(
                "need at least 2 players, got {}",
                self.n_players
            )));
        }
        if self.history_window == 0 {
            return Err(Error::config("history window must be at least 1"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::config(format!(
                "delta must be finite and > 0, got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

/// Everything the nodes see of one round.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RoundInput {
    pub published: Vec<f64>,
    /// Oracle acceptance flags, required in [`Mode::Analytic`].
    pub conforming: Option<Vec<bool>>,
    /// Per-player lottery shares, required with [`Regeneration::Lottery`].
    pub lottery_shares: Option<Vec<f64>>,
}

impl RoundInput {
    pub fn published(published: Vec<f64>) -> Self {
        RoundInput {
            published,
            ..Default::default()
        }
    }
}

/// The publicly computable part of a round; identical at every replica.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub round: u64,
    pub published: Vec<f64>,
    pub accepted: Vec<bool>,
    pub effective: Vec<f64>,
    pub decision: usize,
    pub thresholds: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
}

/// A round outcome scored against the players' private costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    pub published: Vec<f64>,
    pub accepted: Vec<bool>,
    pub effective: Vec<f64>,
    pub decision: usize,
    pub thresholds: Vec<Option<f64>>,
    pub p_values: Vec<Option<f64>>,
    pub true_costs: Vec<f64>,
    pub true_normalized: Vec<f64>,
    pub utility: Vec<f64>,
    pub work: Vec<f64>,
}

impl RoundRecord {
    /// Utility is the normalized cost of a task someone else executes; work is
    /// the normalized cost of a task the player executes itself.
    pub fn score(
        outcome: RoundOutcome,
        true_costs: Vec<f64>,
        true_normalized: Vec<f64>,
    ) -> Result<Self> {
        let n = outcome.effective.len();
        if true_costs.len() != n || true_normalized.len() != n {
            return Err(Error::domain(format!(
                "expected {n} true costs, got {} raw and {} normalized",
                true_costs.len(),
                true_normalized.len()
            )));
        }
        let d = outcome.decision;
        let utility = true_normalized
            .iter()
            .enumerate()
            .map(|(j, &c)| if j == d { 0.0 } else { c })
            .collect();
        let work = true_normalized
            .iter()
            .enumerate()
            .map(|(j, &c)| if j == d { c } else { 0.0 })
            .collect();
        Ok(RoundRecord {
            round: outcome.round,
            published: outcome.published,
            accepted: outcome.accepted,
            effective: outcome.effective,
            decision: d,
            thresholds: outcome.thresholds,
            p_values: outcome.p_values,
            true_costs,
            true_normalized,
            utility,
            work,
        })
    }

    pub fn n_players(&self) -> usize {
        self.effective.len()
    }
}

/// Replicated mechanism state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismState {
    config: MechanismConfig,
    histories: Vec<SampleHistory>,
    utility_means: Vec<f64>,
    round: u64,
    expected_utility: f64,
}

impl MechanismState {
    pub fn new(config: MechanismConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_players;
        let histories = vec![SampleHistory::new(config.history_window)?; n];
        let expected_utility = expected_round_utility(n);
        Ok(MechanismState {
            histories,
            utility_means: vec![expected_utility; n],
            round: 0,
            expected_utility,
            config,
        })
    }

    pub fn config(&self) -> &MechanismConfig {
        &self.config
    }

    /// Number of completed rounds.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn history(&self, player: usize) -> &SampleHistory {
        &self.histories[player]
    }

    /// Mean observer-visible utility over completed rounds (the honest
    /// expectation before the first round).
    pub fn utility_mean(&self, player: usize) -> f64 {
        self.utility_means[player]
    }

    pub fn expected_utility(&self) -> f64 {
        self.expected_utility
    }

    /// Runs the public part of a round and advances the state.
    pub fn process(&mut self, input: &RoundInput) -> Result<RoundOutcome> {
        let n = self.config.n_players;
        if input.published.len() != n {
            return Err(Error::domain(format!(
                "expected {n} published values, got {}",
                input.published.len()
            )));
        }
        let conforming = match (self.config.mode, &input.conforming) {
            (Mode::Analytic, Some(flags)) if flags.len() == n => Some(flags),
            (Mode::Analytic, _) => {
                return Err(Error::config(format!(
                    "analytic mode needs {n} conformity flags"
                )));
            }
            _ => None,
        };
        let shares = match (self.config.regeneration, &input.lottery_shares) {
            (Regeneration::Lottery, Some(s)) if s.len() == n => Some(s),
            (Regeneration::Lottery, _) => {
                return Err(Error::config(format!(
                    "lottery regeneration needs {n} shares"
                )));
            }
            _ => None,
        };

        let k = self.round + 1;
        let mut effective = input.published.clone();
        let mut accepted = vec![false; n];
        let mut thresholds = vec![None; n];
        let mut p_values = vec![None; n];

        // In-place, index order: a replacement for j sees already-fixed values
        // for players before j and published values for players after j.
        for j in 0..n {
            let value = effective[j];
            let admissible = match self.config.mode {
                Mode::Raw => value.is_finite(),
                _ => value.is_finite() && (0.0..=1.0).contains(&value),
            };
            let ok = admissible
                && match self.config.mode {
                    Mode::Raw => true,
                    Mode::Analytic => conforming.is_some_and(|f| f[j]),
                    Mode::Implementable => {
                        let th = adaptive_threshold(
                            k,
                            self.config.delta,
                            self.utility_means[j],
                            self.expected_utility,
                        );
                        let (ks, pass) = gof_accept(value, &self.histories[j], th);
                        thresholds[j] = Some(th);
                        p_values[j] = Some(ks.p_value);
                        pass
                    }
                };
            if !ok {
                effective[j] = match shares {
                    Some(s) => lottery_for(j, s),
                    None => {
                        let others: Vec<f64> = effective
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != j)
                            .map(|(_, &v)| v)
                            .collect();
                        regenerate(self.round, j, &others)
                    }
                };
            }
            accepted[j] = ok;
            self.histories[j].push(effective[j]);
        }

        let decision = decide(&effective)?;
        let completed = (self.round + 1) as f64;
        for (j, mean) in self.utility_means.iter_mut().enumerate() {
            let visible = if j == decision { 0.0 } else { effective[j] };
            *mean += (visible - *mean) / completed;
        }
        let outcome = RoundOutcome {
            round: self.round,
            published: input.published.clone(),
            accepted,
            effective,
            decision,
            thresholds,
            p_values,
        };
        self.round += 1;
        Ok(outcome)
    }

    /// [`MechanismState::process`] followed by [`RoundRecord::score`].
    pub fn run_round(
        &mut self,
        input: &RoundInput,
        true_costs: Vec<f64>,
        true_normalized: Vec<f64>,
    ) -> Result<RoundRecord> {
        let n = self.config.n_players;
        if true_costs.len() != n || true_normalized.len() != n {
            return Err(Error::domain(format!("expected {n} true costs per round")));
        }
        let outcome = self.process(input)?;
        RoundRecord::score(outcome, true_costs, true_normalized)
    }
}

/// `1/2 - 1/(n + n^2)`, the honest per-round normalized utility.
pub fn expected_round_utility(n: usize) -> f64 {
    let n = n as f64;
    0.5 - 1.0 / (n + n * n)
}

/// Elastic acceptance threshold `1 / ln(k+1)^(delta * (1 - (mu_k - mu) * sqrt(k)))`,
/// clamped to `[0, 1]`. Stricter when the player's running utility `mu_k`
/// is above the honest expectation `mu`.
pub fn adaptive_threshold(k: u64, delta: f64, mu_k: f64, mu: f64) -> f64 {
    let kf = k as f64;
    let exponent = delta * (1.0 - (mu_k - mu) * kf.sqrt());
    let raw = (kf + 1.0).ln().powf(-exponent);
    if raw.is_nan() {
        1.0
    } else {
        raw.clamp(0.0, 1.0)
    }
}

/// KS-tests `history + value` against U(0,1); accepts iff `p >= threshold`.
pub fn gof_accept(value: f64, history: &SampleHistory, threshold: f64) -> (KsResult, bool) {
    let mut candidate = history.to_vec();
    candidate.push(value);
    let ks = ks_test_uniform(&candidate).expect("candidate sample is never empty");
    (ks, ks.p_value >= threshold)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn canonical_bits(v: f64) -> u64 {
    if v.is_nan() {
        f64::NAN.to_bits()
    } else if v == 0.0 {
        0
    } else {
        v.to_bits()
    }
}

/// Deterministic replacement for player `player`'s value in `round`.
///
/// Folds the round, the player index and the canonical bit patterns of
/// `others` (in index order) through the SplitMix64 finalizer; the top 53
/// bits of the result scaled by 2^-53 give a value in `[0, 1)`.
pub fn regenerate(round: u64, player: usize, others: &[f64]) -> f64 {
    let mut h = mix64(round ^ GOLDEN);
    h = mix64(h ^ (player as u64).wrapping_add(GOLDEN));
    for &v in others {
        h = mix64(h.wrapping_add(GOLDEN) ^ canonical_bits(v));
    }
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Two-party lottery `(a + b) mod 1`: uniform whenever either input is.
pub fn jointly_controlled_lottery(a: f64, b: f64) -> f64 {
    let s = a + b;
    if s >= 1.0 {
        s - 1.0
    } else {
        s
    }
}

fn lottery_for(player: usize, shares: &[f64]) -> f64 {
    shares
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != player)
        .map(|(_, &s)| {
            if s.is_finite() {
                s.rem_euclid(1.0)
            } else {
                0.0
            }
        })
        .fold(0.0, jointly_controlled_lottery)
}

/// Index of the smallest value; ties go to the lowest index.
pub fn decide(effective: &[f64]) -> Result<usize> {
    if effective.is_empty() {
        return Err(Error::domain("cannot decide over zero players"));
    }
    let mut best = 0;
    for (i, v) in effective.iter().enumerate().skip(1) {
        if v.total_cmp(&effective[best]).is_lt() {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_pvalue, ks_statistic, uniform_cdf};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn threshold_examples() {
        let mu = expected_round_utility(2);
        let t = adaptive_threshold(10, 2.0, mu, mu);
        assert!((t - 1.0 / 11f64.ln().powi(2)).abs() < 1e-15);
        assert!((t - 0.1739).abs() < 1e-4);
        assert_eq!(adaptive_threshold(100, 2.0, mu + 0.2, mu), 1.0);
        assert_eq!(adaptive_threshold(1, 2.0, mu, mu), 1.0);
        // losing players get a laxer test
        assert!(adaptive_threshold(100, 2.0, mu - 0.05, mu) < adaptive_threshold(100, 2.0, mu, mu));
        // k = 0 degenerates to the strictest test
        assert_eq!(adaptive_threshold(0, 2.0, mu, mu), 1.0);
    }

    #[test]
    fn gof_zero_threshold_accepts_anything() {
        let mut h = SampleHistory::new(50).unwrap();
        for _ in 0..49 {
            h.push(0.99);
        }
        assert!(gof_accept(0.99, &h, 0.0).1);
        assert!(gof_accept(0.5, &SampleHistory::default(), 0.0).1);
    }

    #[test]
    fn gof_rejects_a_degenerate_history() {
        let mut h = SampleHistory::new(50).unwrap();
        for _ in 0..49 {
            h.push(0.99);
        }
        let (ks, pass) = gof_accept(0.99, &h, 0.05);
        assert!(!pass);
        assert!((ks.d_statistic - 0.99).abs() < 1e-12);
        assert!(ks.p_value < 1e-12);
        assert_eq!(ks.sample_count, 50);
    }

    #[test]
    fn gof_null_rejection_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let trials = 10_000;
        let mut accepted = 0;
        for _ in 0..trials {
            let mut h = SampleHistory::new(50).unwrap();
            for _ in 0..49 {
                h.push(rng.random());
            }
            if gof_accept(rng.random(), &h, 0.05).1 {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        assert!((rate - 0.95).abs() <= 0.015, "acceptance rate {rate}");
    }

    #[test]
    fn regeneration_is_deterministic_and_in_range() {
        let others = [0.25, 0.5, 0.125];
        assert_eq!(
            regenerate(7, 1, &others).to_bits(),
            regenerate(7, 1, &others).to_bits()
        );
        assert_ne!(regenerate(7, 1, &others), regenerate(8, 1, &others));
        assert_ne!(regenerate(7, 1, &others), regenerate(7, 2, &others));
        assert_eq!(regenerate(3, 0, &[0.0]), regenerate(3, 0, &[-0.0]));
        assert_eq!(
            regenerate(3, 0, &[f64::NAN]),
            regenerate(3, 0, &[-f64::NAN])
        );
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for r in 0..10_000 {
            let v: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            let x = regenerate(r, (r % 5) as usize, &v);
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn regeneration_is_uniform() {
        // fixed others, varying rounds: the worst case for a weak mixer
        let values: Vec<f64> = (0..100_000u64).map(|r| regenerate(r, 1, &[0.5])).collect();
        let d = ks_statistic(&values, uniform_cdf).unwrap();
        assert!(ks_pvalue(d, values.len()) > 0.01, "d = {d}");
    }

    #[test]
    fn lottery_examples() {
        assert!((jointly_controlled_lottery(0.3, 0.4) - 0.7).abs() < 1e-15);
        assert!((jointly_controlled_lottery(0.8, 0.7) - 0.5).abs() < 1e-15);
        for x in [0.0, 0.1, 0.5, 0.999] {
            assert_eq!(jointly_controlled_lottery(x, 0.0), x);
        }
    }

    #[test]
    fn lottery_stays_uniform_against_a_biased_party() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let values: Vec<f64> = (0..20_000)
            .map(|_| jointly_controlled_lottery(rng.random(), 0.9 + 0.05 * rng.random::<f64>()))
            .collect();
        let d = ks_statistic(&values, uniform_cdf).unwrap();
        assert!(ks_pvalue(d, values.len()) > 0.01);
    }

    #[test]
    fn decide_examples() {
        assert_eq!(decide(&[0.3, 0.1, 0.7]).unwrap(), 1);
        assert_eq!(decide(&[0.5, 0.5]).unwrap(), 0);
        assert!(matches!(decide(&[]), Err(Error::Domain(_))));
        assert!(matches!(
            MechanismState::new(MechanismConfig::new(1, Mode::Raw)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn raw_round_scores_by_eq_one() {
        let mut state = MechanismState::new(MechanismConfig::new(2, Mode::Raw)).unwrap();
        let rec = state
            .run_round(
                &RoundInput::published(vec![0.2, 0.8]),
                vec![0.2, 0.8],
                vec![0.2, 0.8],
            )
            .unwrap();
        assert_eq!(rec.decision, 0);
        assert_eq!(rec.utility, vec![0.0, 0.8]);
        assert_eq!(rec.work, vec![0.2, 0.0]);
        assert_eq!(rec.accepted, vec![true, true]);
        assert_eq!(state.round(), 1);
        assert_eq!(state.history(0).to_vec(), vec![0.2]);
        assert_eq!(state.utility_mean(0), 0.0);
        assert_eq!(state.utility_mean(1), 0.8);
    }

    #[test]
    fn non_finite_publications_are_replaced() {
        for mode in [Mode::Raw, Mode::Implementable] {
            let mut state = MechanismState::new(MechanismConfig::new(3, mode)).unwrap();
            let out = state
                .process(&RoundInput::published(vec![f64::NAN, 0.4, f64::INFINITY]))
                .unwrap();
            assert!(!out.accepted[0] && !out.accepted[2]);
            assert!(out.effective.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(state.history(0).iter().all(f64::is_finite));
        }
        let mut state = MechanismState::new(MechanismConfig::new(2, Mode::Analytic)).unwrap();
        let input = RoundInput {
            conforming: Some(vec![true, true]),
            ..RoundInput::published(vec![1.5, 0.4])
        };
        let out = state.process(&input).unwrap();
        assert_eq!(out.accepted, vec![false, true]);
    }

    #[test]
    fn analytic_mode_requires_flags() {
        let mut state = MechanismState::new(MechanismConfig::new(2, Mode::Analytic)).unwrap();
        assert!(matches!(
            state.process(&RoundInput::published(vec![0.1, 0.2])),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            state.process(&RoundInput::published(vec![0.1])),
            Err(Error::Domain(_))
        ));
        assert_eq!(state.round(), 0);
    }

    #[test]
    fn lottery_regeneration_uses_other_shares() {
        let config = MechanismConfig {
            regeneration: Regeneration::Lottery,
            ..MechanismConfig::new(3, Mode::Analytic)
        };
        let mut state = MechanismState::new(config).unwrap();
        let input = RoundInput {
            published: vec![0.9, 0.2, 0.3],
            conforming: Some(vec![false, true, true]),
            lottery_shares: Some(vec![0.99, 0.6, 0.7]),
        };
        let out = state.process(&input).unwrap();
        assert!((out.effective[0] - 0.3).abs() < 1e-12);
        assert_eq!(out.decision, 1);
    }

    fn honest_run(n: usize, mode: Mode, rounds: usize, seed: u64) -> Vec<RoundRecord> {
        let mut state = MechanismState::new(MechanismConfig::new(n, mode)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..rounds)
            .map(|_| {
                let c: Vec<f64> = (0..n).map(|_| rng.random()).collect();
                let input = RoundInput {
                    conforming: Some(vec![true; n]),
                    ..RoundInput::published(c.clone())
                };
                state.run_round(&input, c.clone(), c).unwrap()
            })
            .collect()
    }

    #[test]
    fn implementable_two_honest_players_share_work() {
        let records = honest_run(2, Mode::Implementable, 10_000, 31);
        let executed = records.iter().filter(|r| r.decision == 0).count();
        assert!(
            (executed as i64 - 5000).abs() <= 150,
            "player 0 executed {executed}"
        );
    }

    #[test]
    fn identical_inputs_give_identical_records() {
        let a = honest_run(3, Mode::Implementable, 500, 5);
        let b = honest_run(3, Mode::Implementable, 500, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn analytic_honest_assignment_is_optimal() {
        for rec in honest_run(4, Mode::Analytic, 2_000, 17) {
            let total: f64 = rec.work.iter().sum();
            // every alternative single assignee does at least as much work
            for alt in 0..4 {
                assert!(total <= rec.true_normalized[alt]);
            }
            let worker_count = rec.work.iter().filter(|&&w| w > 0.0).count();
            assert!(worker_count <= 1);
        }
    }

    #[test]
    fn accounting_identity_holds_every_round() {
        for rec in honest_run(3, Mode::Implementable, 2_000, 23) {
            for j in 0..3 {
                assert!((rec.utility[j] + rec.work[j] - rec.true_normalized[j]).abs() <= 1e-12);
                assert!(rec.utility[j] == 0.0 || rec.work[j] == 0.0);
                assert_eq!(
                    rec.accepted[j],
                    rec.effective[j].to_bits() == rec.published[j].to_bits()
                );
            }
        }
    }

    #[test]
    fn histories_stay_aligned() {
        let mut state = MechanismState::new(MechanismConfig {
            history_window: 7,
            ..MechanismConfig::new(3, Mode::Implementable)
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for r in 1..=20 {
            let c: Vec<f64> = (0..3).map(|_| rng.random()).collect();
            state.process(&RoundInput::published(c)).unwrap();
            let lens: Vec<usize> = (0..3).map(|j| state.history(j).len()).collect();
            assert!(lens.iter().all(|&l| l == r.min(7)));
            assert_eq!(state.expected_utility(), expected_round_utility(3));
        }
    }

    proptest! {
        #[test]
        fn decide_is_invariant_under_increasing_maps(values in prop::collection::vec(0.0f64..1.0, 1..12), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let d = decide(&values).unwrap();
            let affine: Vec<f64> = values.iter().map(|v| v * scale + shift).collect();
            let cubic: Vec<f64> = values.iter().map(|v| v.powi(3)).collect();
            let logit: Vec<f64> = values.iter().map(|v| (v / (1.0 - v)).ln()).collect();
            prop_assert_eq!(decide(&affine).unwrap(), d);
            prop_assert_eq!(decide(&cubic).unwrap(), d);
            prop_assert_eq!(decide(&logit).unwrap(), d);
        }

        #[test]
        fn threshold_is_a_probability(k in 0u64..100_000, delta in 0.1f64..5.0, mu_k in 0.0f64..1.0) {
            let t = adaptive_threshold(k, delta, mu_k, expected_round_utility(2));
            prop_assert!((0.0..=1.0).contains(&t));
        }

        #[test]
        fn lottery_output_in_range(a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let x = jointly_controlled_lottery(a, b);
            prop_assert!((0.0..1.0).contains(&x));
        }
    }
}
