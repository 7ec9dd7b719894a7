//! Exact oracles by exhaustive enumeration of setting sequences.
//!
//! Settings are uniform and independent, so every one of the 4^N joint
//! setting sequences is equally likely. A deterministic strategy turns each
//! sequence into one transcript, and exact expectations are plain averages
//! over the sequences.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::domain::{AliceSetting, BobSetting, Outcome, PairCounts, SettingPair, Side, Transcript};
use crate::error::{Error, Result};
use crate::exec::{fold_indexed, Execution};
use crate::rational::{integer, log10_abs, Rational};
use crate::statistics::{chsh_value, round_score, x_from_counts, y_from_counts};
use crate::strategies::{model_101, CollectiveStrategy, DeterministicAssignment, Model101, RoundResponder, StochasticLhv};

pub const DEFAULT_CAP: usize = 10;
/// 4^31 still fits in a u64 index.
pub const HARD_CAP: usize = 31;

/// Plays `settings` through a deterministic responder.
pub fn playout(model: &dyn RoundResponder, settings: &[SettingPair]) -> Result<Transcript> {
    if !model.is_deterministic() {
        return Err(Error::input(format!(
            "{} is randomised; exact playout needs a deterministic strategy",
            model.name()
        )));
    }
    // never consulted by a deterministic responder; seeded so a misbehaving
    // one is still reproducible
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    playout_with_rng(model, settings, &mut rng)
}

pub fn playout_with_rng(
    model: &dyn RoundResponder,
    settings: &[SettingPair],
    rng: &mut dyn RngCore,
) -> Result<Transcript> {
    let mut t = Transcript::with_capacity(settings.len());
    for &pair in settings {
        let (a, b) = model.respond(pair, &t, rng)?;
        t.push(pair, a, b);
    }
    Ok(t)
}

/// Joint playout of a collective strategy: each side answers its whole
/// setting list at once.
pub fn collective_playout(strategy: &dyn CollectiveStrategy, settings: &[SettingPair]) -> Result<Transcript> {
    let alice: Vec<AliceSetting> = settings.iter().map(|p| p.alice).collect();
    let bob: Vec<BobSetting> = settings.iter().map(|p| p.bob).collect();
    let a = strategy.respond_alice(&alice)?;
    let b = strategy.respond_bob(&bob)?;
    if a.len() != settings.len() || b.len() != settings.len() {
        return Err(Error::Invariant(format!(
            "{} returned {} / {} outcomes for {} rounds",
            strategy.name(),
            a.len(),
            b.len(),
            settings.len()
        )));
    }
    Ok(Transcript::from_rounds(
        settings.iter().zip(a).zip(b).map(|((&p, a), b)| (p, a, b)),
    ))
}

/// The `index`-th of the 4^n setting sequences; round 1 is the most
/// significant base-4 digit.
pub fn decode_sequence(index: u64, n: usize) -> Vec<SettingPair> {
    (0..n)
        .map(|k| SettingPair::from_index(((index >> (2 * (n - 1 - k))) & 3) as usize))
        .collect()
}

/// Settings for the exhaustive runs.
#[derive(Debug, Clone, Copy)]
pub struct Enumerator {
    pub cap: usize,
    pub execution: Execution,
}

impl Default for Enumerator {
    fn default() -> Self {
        Enumerator {
            cap: DEFAULT_CAP,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DistributionPoint {
    pub y: Rational,
    pub x: Option<Rational>,
    /// Number of equally likely setting sequences with this outcome.
    pub sequences: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub n: usize,
    /// 4^n.
    pub sequences: u64,
    pub e_y: Rational,
    /// E(X_N | X_N defined); absent if X_N is never defined.
    pub e_x_conditional: Option<Rational>,
    pub p_undefined: Rational,
    pub distribution: Vec<DistributionPoint>,
}

impl ExactResult {
    pub fn probability(&self, point: &DistributionPoint) -> Rational {
        Rational::new(BigInt::from(point.sequences), BigInt::from(self.sequences))
    }

    /// P(Y_N > threshold).
    pub fn p_y_exceeds(&self, threshold: &Rational) -> Rational {
        let hits: u64 = self
            .distribution
            .iter()
            .filter(|p| &p.y > threshold)
            .map(|p| p.sequences)
            .sum();
        Rational::new(BigInt::from(hits), BigInt::from(self.sequences))
    }

    pub fn total_probability(&self) -> Rational {
        self.distribution.iter().map(|p| self.probability(p)).sum()
    }
}

impl Enumerator {
    pub fn new(cap: usize) -> Self {
        Enumerator {
            cap,
            ..Default::default()
        }
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    fn check_n(&self, n: usize) -> Result<u64> {
        if n == 0 {
            return Err(Error::input("N must be at least 1"));
        }
        let cap = self.cap.min(HARD_CAP);
        if n > cap {
            return Err(Error::ResourceLimit(format!(
                "N = {n} exceeds the enumeration cap of {cap} (4^N playouts); use Monte Carlo instead"
            )));
        }
        Ok(1u64 << (2 * n))
    }

    /// Exact E(Y_N), E(X_N | defined) and P(X_N undefined) over uniformly
    /// random settings.
    pub fn exact_expectations(&self, model: &dyn RoundResponder, n: usize) -> Result<ExactResult> {
        let total = self.check_n(n)?;
        if !model.is_deterministic() {
            return Err(Error::input(format!(
                "{} is randomised; exact enumeration needs a deterministic strategy",
                model.name()
            )));
        }
        let tallies = fold_indexed(
            self.execution,
            0..total,
            || Ok(BTreeMap::new()),
            |acc: Result<BTreeMap<PairCounts, u64>>, index| {
                let mut acc = acc?;
                let t = playout(model, &decode_sequence(index, n))?;
                *acc.entry(*t.counts()).or_insert(0) += 1;
                Ok(acc)
            },
            merge_tallies,
        )?;
        Ok(summarise(n, total, tallies))
    }

    /// Distribution of the per-round score vector of a collective strategy.
    pub fn exact_collective(&self, strategy: &dyn CollectiveStrategy, n: usize) -> Result<CollectiveExact> {
        let total = self.check_n(n)?;
        if let Some(r) = strategy.rounds() {
            if r != n {
                return Err(Error::input(format!(
                    "{} is defined for N = {r}, not {n}",
                    strategy.name()
                )));
            }
        }
        let mut patterns = BTreeMap::new();
        for index in 0..total {
            let t = collective_playout(strategy, &decode_sequence(index, n))?;
            let scores: Vec<u8> = t.rounds().iter().map(round_score).collect();
            *patterns.entry(scores).or_insert(0u64) += 1;
        }
        Ok(CollectiveExact {
            n,
            sequences: total,
            patterns,
        })
    }
}

fn merge_tallies(
    a: Result<BTreeMap<PairCounts, u64>>,
    b: Result<BTreeMap<PairCounts, u64>>,
) -> Result<BTreeMap<PairCounts, u64>> {
    let (mut a, b) = (a?, b?);
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    Ok(a)
}

fn summarise(n: usize, total: u64, tallies: BTreeMap<PairCounts, u64>) -> ExactResult {
    let mut points: BTreeMap<(Rational, Option<Rational>), u64> = BTreeMap::new();
    for (counts, mult) in tallies {
        let y = y_from_counts(&counts).expect("n >= 1");
        *points.entry((y, x_from_counts(&counts))).or_insert(0) += mult;
    }
    let mut y_sum = Rational::zero();
    let mut x_sum = Rational::zero();
    let mut defined = 0u64;
    let mut distribution = Vec::with_capacity(points.len());
    for ((y, x), sequences) in points {
        let m = integer(sequences as i64);
        y_sum += &y * &m;
        if let Some(x) = &x {
            x_sum += x * &m;
            defined += sequences;
        }
        distribution.push(DistributionPoint { y, x, sequences });
    }
    let total_r = integer(total as i64);
    ExactResult {
        n,
        sequences: total,
        e_y: y_sum / &total_r,
        e_x_conditional: (defined > 0).then(|| x_sum / integer(defined as i64)),
        p_undefined: integer((total - defined) as i64) / total_r,
        distribution,
    }
}

/// Convenience wrapper with the default cap.
pub fn exact_expectations(model: &dyn RoundResponder, n: usize) -> Result<ExactResult> {
    Enumerator::default().exact_expectations(model, n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CollectiveExact {
    pub n: usize,
    pub sequences: u64,
    /// Score vector (one 0/1 entry per round) to number of sequences.
    pub patterns: BTreeMap<Vec<u8>, u64>,
}

impl CollectiveExact {
    pub fn count(&self, pattern: &[u8]) -> u64 {
        self.patterns.get(pattern).copied().unwrap_or(0)
    }

    pub fn probability(&self, pattern: &[u8]) -> Rational {
        Rational::new(BigInt::from(self.count(pattern)), BigInt::from(self.sequences))
    }

    pub fn p_all_score(&self) -> Rational {
        self.probability(&vec![1; self.n])
    }

    /// (3/4)^N: the most any model with independent rounds can reach.
    pub fn independent_ceiling(&self) -> Rational {
        num_traits::pow(Rational::new(BigInt::from(3), BigInt::from(4)), self.n)
    }
}

/// The four events (Y_2^1, Y_2^2) ∈ {0,1}² for a two-round collective model.
pub fn exact_collective_n2(strategy: &dyn CollectiveStrategy) -> Result<CollectiveExact> {
    Enumerator::new(2).exact_collective(strategy, 2)
}

/// Maximum of P_CHSH over the 16 deterministic assignments, with maximisers.
pub fn chsh_exhaustive_max() -> (Rational, Vec<DeterministicAssignment>) {
    let scored: Vec<_> = DeterministicAssignment::all()
        .map(|a| (chsh_value(&StochasticLhv::point(a)), a))
        .collect();
    let max = scored
        .iter()
        .map(|(v, _)| v.clone())
        .max()
        .expect("16 assignments");
    let argmax = scored
        .into_iter()
        .filter(|(v, _)| *v == max)
        .map(|(_, a)| a)
        .collect();
    (max, argmax)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model101Exact {
    /// Probability that the first 100 rounds have counts (33, 33, 33, 1).
    pub p_trigger: Rational,
    pub log10_p_trigger: f64,
    /// X_101 for each possible round-101 pair, given the trigger.
    pub branches: Vec<(SettingPair, Rational)>,
    /// E(X_101 | trigger).
    pub e_conditional: Rational,
    /// E(X_101) − 3 = p_trigger · (E(X_101 | trigger) − 3).
    pub e_x_excess: Rational,
}

fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// Exact analysis of the 101-round model.
pub fn model101_exact() -> Result<Model101Exact> {
    let counts = Model101::TRIGGER_COUNTS;
    let rounds: u64 = counts.iter().sum();
    let multinomial = counts
        .iter()
        .fold(factorial(rounds), |acc, &c| acc / factorial(c));
    let p_trigger = Rational::new(multinomial, num_traits::pow(BigInt::from(4), rounds as usize));

    // outside the trigger the model is constant +1, so X_101 = 3 whenever
    // defined; only the triggered branch moves the expectation
    let model = model_101();
    let mut history = Vec::with_capacity(Model101::TRIGGER_ROUNDS + 1);
    for (i, &c) in counts.iter().enumerate() {
        history.extend(std::iter::repeat(SettingPair::ALL[i]).take(c as usize));
    }
    let mut branches = Vec::with_capacity(4);
    for pair in SettingPair::ALL {
        let mut settings = history.clone();
        settings.push(pair);
        let t = playout(&model, &settings)?;
        let x = x_from_counts(t.counts())
            .ok_or_else(|| Error::Invariant("X_101 undefined after trigger".into()))?;
        branches.push((pair, x));
    }
    let e_conditional = branches.iter().map(|(_, x)| x.clone()).sum::<Rational>() / integer(4);
    let e_x_excess = &p_trigger * (&e_conditional - integer(3));
    Ok(Model101Exact {
        log10_p_trigger: log10_abs(&p_trigger),
        p_trigger,
        branches,
        e_conditional,
        e_x_excess,
    })
}

/// A concrete signalling witness: same history, same own setting, different
/// far-side setting, different own outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub history: Vec<SettingPair>,
    pub round: usize,
    pub side: Side,
    /// The two joint settings that were compared.
    pub settings: [SettingPair; 2],
    pub outcomes: [Outcome; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", rename_all = "lowercase")]
pub enum NoSignaling {
    Pass { n: usize, comparisons: u64 },
    Fail { counterexample: Counterexample },
}

impl NoSignaling {
    pub fn passed(&self) -> bool {
        matches!(self, NoSignaling::Pass { .. })
    }
}

/// For every history of up to n − 1 rounds and every own setting, checks that
/// toggling the other side's current setting leaves the own outcome fixed.
pub fn no_signaling_check(model: &dyn RoundResponder, n: usize, cap: usize) -> Result<NoSignaling> {
    Enumerator::new(cap).check_n(n)?;
    if !model.is_deterministic() {
        return Err(Error::input(format!(
            "{} is randomised; the exhaustive no-signalling check needs a deterministic strategy",
            model.name()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut comparisons = 0u64;
    for round in 1..=n {
        let prefixes = 1u64 << (2 * (round - 1));
        for index in 0..prefixes {
            let history_settings = decode_sequence(index, round - 1);
            let history = playout(model, &history_settings)?;
            let mut reply = |p: SettingPair| model.respond(p, &history, &mut rng);
            for a in AliceSetting::ALL {
                let s = [SettingPair::new(a, BobSetting::B1), SettingPair::new(a, BobSetting::B2)];
                let o = [reply(s[0])?.0, reply(s[1])?.0];
                comparisons += 1;
                if o[0] != o[1] {
                    return Ok(NoSignaling::Fail {
                        counterexample: Counterexample {
                            history: history_settings,
                            round,
                            side: Side::Alice,
                            settings: s,
                            outcomes: o,
                        },
                    });
                }
            }
            for b in BobSetting::ALL {
                let s = [SettingPair::new(AliceSetting::A1, b), SettingPair::new(AliceSetting::A2, b)];
                let o = [reply(s[0])?.1, reply(s[1])?.1];
                comparisons += 1;
                if o[0] != o[1] {
                    return Ok(NoSignaling::Fail {
                        counterexample: Counterexample {
                            history: history_settings,
                            round,
                            side: Side::Bob,
                            settings: s,
                            outcomes: o,
                        },
                    });
                }
            }
        }
    }
    Ok(NoSignaling::Pass { n, comparisons })
}

/// Collective analogue: one side's N outcomes must not change when only the
/// other side's setting sequence changes.
pub fn collective_no_signaling_check(strategy: &dyn CollectiveStrategy, n: usize) -> Result<NoSignaling> {
    let total = Enumerator::new(HARD_CAP).check_n(n)?;
    let side_total = 1u64 << n;
    let side_settings = |bits: u64| -> Vec<bool> { (0..n).map(|k| (bits >> (n - 1 - k)) & 1 == 1).collect() };
    let join = |alice: &[bool], bob: &[bool]| -> Vec<SettingPair> {
        alice
            .iter()
            .zip(bob)
            .map(|(&a, &b)| {
                SettingPair::new(
                    if a { AliceSetting::A2 } else { AliceSetting::A1 },
                    if b { BobSetting::B2 } else { BobSetting::B1 },
                )
            })
            .collect()
    };
    let mut comparisons = 0;
    for own in 0..side_total {
        let own_bits = side_settings(own);
        for side in [Side::Alice, Side::Bob] {
            let mut reference: Option<(Vec<SettingPair>, Vec<Outcome>)> = None;
            for other in 0..side_total {
                let other_bits = side_settings(other);
                let settings = match side {
                    Side::Alice => join(&own_bits, &other_bits),
                    Side::Bob => join(&other_bits, &own_bits),
                };
                let t = collective_playout(strategy, &settings)?;
                let outs: Vec<Outcome> = t
                    .rounds()
                    .iter()
                    .map(|r| if side == Side::Alice { r.a } else { r.b })
                    .collect();
                comparisons += 1;
                match &reference {
                    None => reference = Some((settings, outs)),
                    Some((ref_settings, ref_outs)) => {
                        if let Some(k) = (0..n).find(|&k| ref_outs[k] != outs[k]) {
                            return Ok(NoSignaling::Fail {
                                counterexample: Counterexample {
                                    history: Vec::new(),
                                    round: k + 1,
                                    side,
                                    settings: [ref_settings[k], settings[k]],
                                    outcomes: [ref_outs[k], outs[k]],
                                },
                            });
                        }
                    }
                }
            }
        }
    }
    debug_assert_eq!(comparisons, 2 * total);
    Ok(NoSignaling::Pass { n, comparisons })
}
