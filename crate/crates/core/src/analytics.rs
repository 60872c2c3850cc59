//! Closed-form expectations and summaries of simulated traces.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::SimulationTrace;
use crate::stats::DistributionSpec;

fn check_players(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::domain(format!("need n >= 2 players, got {n}")));
    }
    Ok(n as f64)
}

/// Expected normalized work per round of an honest player: `1/(n + n^2)`.
pub fn expected_honest_work(n: usize) -> Result<f64> {
    let n = check_players(n)?;
    Ok(1.0 / (n + n * n))
}

/// Expected normalized work of a player whose effective values are
/// independent of its costs: `1/(2n)`.
pub fn expected_dishonest_work(n: usize) -> Result<f64> {
    let n = check_players(n)?;
    Ok(1.0 / (2.0 * n))
}

/// Expected work of the aggregate of the other `n - 1` players: `(n-1)/(n + n^2)`.
pub fn aggregated_work(n: usize) -> Result<f64> {
    let n = check_players(n)?;
    Ok((n - 1.0) / (n + n * n))
}

pub fn expected_honest_utility(n: usize) -> Result<f64> {
    Ok(0.5 - expected_honest_work(n)?)
}

pub fn expected_dishonest_utility(n: usize) -> Result<f64> {
    Ok(0.5 - expected_dishonest_work(n)?)
}

/// Ratio of `mean_utility` to the ideal `(n^2 - 1)/(2n^2)` reached when a
/// player executes exactly its cheapest `1/n` of the tasks.
pub fn efficiency(n: usize, mean_utility: f64) -> Result<f64> {
    let nf = check_players(n)?;
    if !(0.0..=0.5).contains(&mean_utility) {
        return Err(Error::domain(format!(
            "mean utility must lie in [0, 1/2], got {mean_utility}"
        )));
    }
    Ok(2.0 * nf * nf * mean_utility / (nf * nf - 1.0))
}

/// Efficiency of the mechanism with all players honest.
pub fn honest_efficiency(n: usize) -> Result<f64> {
    efficiency(n, expected_honest_utility(n)?)
}

/// Real (not normalized) expected utility of a player with cost law `cost`
/// among `n` players: `integral of x f(x) (1 - (1 - F(x))^(n-1)) dx` over the
/// support, by adaptive Gauss-Kronrod quadrature to absolute tolerance 1e-6.
/// Unbounded supports are cut where the remaining mass of `x f(x)` is below 1e-9.
pub fn real_expected_utility(cost: &DistributionSpec, n: usize) -> Result<f64> {
    check_players(n)?;
    let dist = cost.compile()?;
    if !dist.is_continuous() {
        return Err(Error::Numeric(
            "real expected utility needs a continuous cost law".into(),
        ));
    }
    let (lo, mut hi) = dist.support();
    if hi.is_infinite() {
        let rate = dist
            .rate()
            .ok_or_else(|| Error::Numeric("unbounded support without a tail bound".into()))?;
        // tail of x f(x) beyond u is (u + 1/rate) e^{-rate u}
        hi = dist.upper_quantile(1e-9);
        while (hi + 1.0 / rate) * (-rate * hi).exp() >= 1e-9 {
            hi *= 1.25;
        }
    }
    let exponent = n as i32 - 1;
    let integrand = |x: f64| {
        let f = dist.pdf(x).unwrap_or(0.0);
        x * f * (1.0 - (1.0 - dist.cdf(x)).powi(exponent))
    };
    integrate(integrand, lo, hi, 1e-6)
}

/// Adaptive Gauss-Kronrod (7/15) quadrature with absolute tolerance `tol`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Numeric(format!(
            "integration limits must be finite, got [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let value = adapt(&f, a, b, tol, 0)?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Numeric("integrand is not integrable".into()))
    }
}

const MAX_DEPTH: u32 = 60;

fn adapt(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Result<f64> {
    let (estimate, error) = gauss_kronrod(f, a, b);
    if !estimate.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    if error <= tol || depth >= MAX_DEPTH || (b - a).abs() < 1e-15 {
        return Ok(estimate);
    }
    let mid = 0.5 * (a + b);
    Ok(adapt(f, a, mid, 0.5 * tol, depth + 1)? + adapt(f, mid, b, 0.5 * tol, depth + 1)?)
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[i] * sum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSummary {
    pub label: String,
    pub honest: bool,
    pub mean_utility: f64,
    pub mean_work: f64,
    pub mean_true_normalized: f64,
    pub executed_share: f64,
    pub rejection_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub rounds: usize,
    pub players: Vec<PlayerSummary>,
    pub total_work: f64,
    /// Efficiency of the mean per-player utility; `None` if it falls outside [0, 1/2].
    pub efficiency: Option<f64>,
}

pub fn summarize(trace: &SimulationTrace) -> Result<TraceSummary> {
    let rounds = trace.records.len();
    if rounds == 0 {
        return Err(Error::domain("cannot summarize an empty trace"));
    }
    let n = trace.n_players;
    let len = rounds as f64;
    let players: Vec<PlayerSummary> = (0..n)
        .map(|j| {
            let mut utility = 0.0;
            let mut work = 0.0;
            let mut normalized = 0.0;
            let mut executed = 0usize;
            let mut rejected = 0usize;
            for r in &trace.records {
                utility += r.utility[j];
                work += r.work[j];
                normalized += r.true_normalized[j];
                executed += usize::from(r.decision == j);
                rejected += usize::from(!r.accepted[j]);
            }
            PlayerSummary {
                label: trace.player_labels.get(j).cloned().unwrap_or_default(),
                honest: trace.honest.get(j).copied().unwrap_or(false),
                mean_utility: utility / len,
                mean_work: work / len,
                mean_true_normalized: normalized / len,
                executed_share: executed as f64 / len,
                rejection_rate: rejected as f64 / len,
            }
        })
        .collect();
    let total_work = trace
        .records
        .iter()
        .map(|r| r.work.iter().sum::<f64>())
        .sum();
    let mean_utility = players.iter().map(|p| p.mean_utility).sum::<f64>() / n as f64;
    Ok(TraceSummary {
        rounds,
        players,
        total_work,
        efficiency: efficiency(n, mean_utility).ok(),
    })
}

/// Cumulative fraction of rejected publications per round, indexed
/// `[round][player]`.
pub fn cumulative_rejections(trace: &SimulationTrace) -> Vec<Vec<f64>> {
    let mut counts = vec![0usize; trace.n_players];
    trace
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            counts
                .iter_mut()
                .zip(&r.accepted)
                .for_each(|(c, &a)| *c += usize::from(!a));
            counts.iter().map(|&c| c as f64 / (i + 1) as f64).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::Mode;
    use crate::players::PlayerSpec;
    use crate::protocol::{run, SimConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn closed_forms() {
        assert!((expected_honest_work(2).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((expected_honest_utility(2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(expected_honest_work(10).unwrap(), 1.0 / 110.0);
        assert_eq!(expected_dishonest_work(2).unwrap(), 0.25);
        assert_eq!(expected_dishonest_work(10).unwrap(), 0.05);
        assert!((aggregated_work(3).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        for n in 2..=20 {
            let h = expected_honest_work(n).unwrap();
            assert!(h < expected_dishonest_work(n).unwrap());
            assert!((h + aggregated_work(n).unwrap() - 1.0 / (n as f64 + 1.0)).abs() < 1e-15);
        }
        let big = expected_honest_work(10_000).unwrap();
        assert!((big * 1e8 - 1.0).abs() < 1e-3);
        assert!(expected_honest_work(1).is_err());
        assert!(aggregated_work(0).is_err());
    }

    #[test]
    fn efficiency_definition() {
        for n in 2..=20 {
            let nf = n as f64;
            assert!(
                (efficiency(n, (nf * nf - 1.0) / (2.0 * nf * nf)).unwrap() - 1.0).abs() < 1e-14
            );
            let e = honest_efficiency(n).unwrap();
            assert!(e > (nf * nf - 2.0) / (nf * nf - 1.0));
            assert!((e - (nf * nf - 2.0 * nf / (nf + 1.0)) / (nf * nf - 1.0)).abs() < 1e-14);
        }
        assert!((honest_efficiency(10).unwrap() - 0.9917355371900827).abs() < 1e-12);
        assert!(efficiency(3, 0.6).is_err());
        assert!(efficiency(1, 0.3).is_err());
    }

    #[test]
    fn quadrature_of_polynomials_and_exponentials() {
        assert!((integrate(|x| x * x, 0.0, 1.0, 1e-10).unwrap() - 1.0 / 3.0).abs() < 1e-14);
        assert!((integrate(f64::exp, 0.0, 2.0, 1e-10).unwrap() - (2f64.exp() - 1.0)).abs() < 1e-10);
        // integrable endpoint singularity
        assert!((integrate(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-8).unwrap() - 2.0).abs() < 1e-6);
        assert!(integrate(|x| x, 0.0, f64::INFINITY, 1e-6).is_err());
    }

    #[test]
    fn real_utility_of_uniform_costs() {
        for n in 2..=20 {
            // integral of x (1 - (1-x)^{n-1}) = 1/2 - B(2, n)
            let oracle = 0.5 - 1.0 / (n as f64 * (n as f64 + 1.0));
            let v = real_expected_utility(&DistributionSpec::Uniform01, n).unwrap();
            assert!((v - oracle).abs() <= 1e-6, "n = {n}: {v} vs {oracle}");
        }
    }

    #[test]
    fn real_utility_of_exponential_costs() {
        // integral of x r e^{-rx} (1 - e^{-(n-1) r x}) = (1 - 1/n^2) / r
        for (rate, n) in [(1.0, 2), (1.0, 5), (2.5, 3), (0.2, 10)] {
            let oracle = (1.0 - 1.0 / (n as f64).powi(2)) / rate;
            let v = real_expected_utility(&DistributionSpec::Exponential { rate }, n).unwrap();
            assert!(
                (v - oracle).abs() <= 1e-6,
                "rate {rate}, n {n}: {v} vs {oracle}"
            );
        }
        let v = real_expected_utility(&DistributionSpec::Exponential { rate: 1.0 }, 2).unwrap();
        assert!((v - 0.75).abs() <= 1e-6);
        // approaches the full mean cost as n grows
        let many =
            real_expected_utility(&DistributionSpec::Exponential { rate: 1.0 }, 200).unwrap();
        assert!((many - 1.0).abs() < 1e-4);
    }

    #[test]
    fn real_utility_matches_simulated_auction() {
        // honest players with Beta(2, 3) costs; utility is the own raw cost
        // whenever someone else holds the smallest transformed cost
        let spec = DistributionSpec::Beta {
            alpha: 2.0,
            beta: 3.0,
        };
        let dist = spec.compile().unwrap();
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let trials = 200_000;
        let mut total = 0.0;
        let mut total_sq = 0.0;
        for _ in 0..trials {
            let own = dist.sample(&mut rng);
            let others_min = (0..n - 1).map(|_| rng.random::<f64>()).fold(1.0, f64::min);
            let u = if others_min <= dist.cdf(own) {
                own
            } else {
                0.0
            };
            total += u;
            total_sq += u * u;
        }
        let mean = total / trials as f64;
        let se = ((total_sq / trials as f64 - mean * mean) / trials as f64).sqrt();
        let v = real_expected_utility(&spec, n).unwrap();
        assert!((v - mean).abs() < 4.0 * se, "{v} vs {mean} ± {se}");
    }

    #[test]
    fn real_utility_rejects_atomic_laws() {
        let spec = DistributionSpec::Empirical {
            samples: vec![1.0, 2.0],
        };
        assert!(matches!(
            real_expected_utility(&spec, 2),
            Err(Error::Numeric(_))
        ));
        assert!(real_expected_utility(&DistributionSpec::Uniform01, 1).is_err());
    }

    #[test]
    fn summary_shares_and_identities() {
        let trace = run(&SimConfig::new(
            Mode::Implementable,
            vec![PlayerSpec::honest_uniform(); 2],
            10_000,
            4,
        ))
        .unwrap();
        let s = summarize(&trace).unwrap();
        let share_sum: f64 = s.players.iter().map(|p| p.executed_share).sum();
        assert!((share_sum - 1.0).abs() < 1e-12);
        for p in &s.players {
            assert!((p.executed_share - 0.5).abs() <= 0.015, "{p:?}");
            assert!((p.mean_utility + p.mean_work - p.mean_true_normalized).abs() <= 1e-12);
        }
        let total: f64 = s.players.iter().map(|p| p.mean_work).sum::<f64>() * s.rounds as f64;
        assert!((total - s.total_work).abs() < 1e-6);
        assert!(s.efficiency.is_some());
    }

    #[test]
    fn summary_of_a_one_sided_trace() {
        let mut trace = run(&SimConfig::new(
            Mode::Raw,
            vec![PlayerSpec::honest_uniform(); 3],
            50,
            1,
        ))
        .unwrap();
        for r in &mut trace.records {
            r.decision = 2;
        }
        let s = summarize(&trace).unwrap();
        assert_eq!(s.players[2].executed_share, 1.0);
        assert_eq!(s.players[0].executed_share, 0.0);
        assert_eq!(s.players[1].executed_share, 0.0);
        trace.records.clear();
        assert!(summarize(&trace).is_err());
    }

    #[test]
    fn rejection_series_is_cumulative() {
        let trace = run(&SimConfig::new(
            Mode::Implementable,
            vec![PlayerSpec::honest_uniform(); 2],
            200,
            6,
        ))
        .unwrap();
        let series = cumulative_rejections(&trace);
        assert_eq!(series.len(), 200);
        // the first round is always rejected: the threshold starts at 1
        assert_eq!(series[0], vec![1.0, 1.0]);
        let rejected = trace.records.iter().filter(|r| !r.accepted[1]).count();
        assert!((series[199][1] - rejected as f64 / 200.0).abs() < 1e-15);
    }
}
