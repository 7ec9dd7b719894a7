//! Response models: memoryless and memory-exploiting local hidden variable
//! strategies, collective strategies, and a quantum singlet sampler.
//!
//! Local strategies implement [`SequentialStrategy`]. Each side answers
//! through its own responder, which is handed only its own current setting and
//! a [`MemoryView`] cut to the strategy's [`MemoryClass`]. The blanket
//! [`RoundResponder`] impl is the only way such a strategy is driven, so the
//! locality and memory restrictions hold by construction.

use std::fmt;
use std::io;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, RngCore};

use crate::domain::{
    memory_view, AliceSetting, BobSetting, MemoryClass, MemoryView, Outcome, PairCounts,
    SettingPair, Side, Transcript,
};
use crate::error::{Error, Result};
use crate::rational::{parse_rational, Rational};

/// One point hidden variable: the answer each side gives to each setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DeterministicAssignment {
    pub a1: Outcome,
    pub a2: Outcome,
    pub b1: Outcome,
    pub b2: Outcome,
}

impl DeterministicAssignment {
    pub const fn new(a1: Outcome, a2: Outcome, b1: Outcome, b2: Outcome) -> Self {
        DeterministicAssignment { a1, a2, b1, b2 }
    }

    pub const fn constant(o: Outcome) -> Self {
        Self::new(o, o, o, o)
    }

    /// All 16 assignments, `+1` before `-1` in each slot, a1 most significant.
    pub fn all() -> impl Iterator<Item = DeterministicAssignment> {
        (0..16u8).map(|bits| {
            let o = |shift: u8| {
                if (bits >> shift) & 1 == 0 {
                    Outcome::Plus
                } else {
                    Outcome::Minus
                }
            };
            DeterministicAssignment::new(o(3), o(2), o(1), o(0))
        })
    }

    pub fn alice(&self, s: AliceSetting) -> Outcome {
        match s {
            AliceSetting::A1 => self.a1,
            AliceSetting::A2 => self.a2,
        }
    }

    pub fn bob(&self, s: BobSetting) -> Outcome {
        match s {
            BobSetting::B1 => self.b1,
            BobSetting::B2 => self.b2,
        }
    }

    /// Whether measuring `pair` on this assignment satisfies that pair's CHSH term.
    pub fn scores(&self, pair: SettingPair) -> bool {
        let same = self.alice(pair.alice) == self.bob(pair.bob);
        same != pair.wants_anticorrelation()
    }

    /// Number of satisfied CHSH terms (the assignment's P_CHSH).
    pub fn chsh_terms(&self) -> u8 {
        SettingPair::ALL.iter().filter(|&&p| self.scores(p)).count() as u8
    }
}

impl fmt::Display for DeterministicAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{},{})", self.a1, self.a2, self.b1, self.b2)
    }
}

/// The assignment that satisfies every CHSH term except the one for `target`,
/// normalised to `a1 = +1`.
///
/// With `a1 = +1` the terms for (A1,B1), (A1,B2) and (A2,B1) fix b1, b2 and a2
/// in turn; the (A2,B2) term is then decided by parity, and flipping exactly
/// one term's requirement is what makes the system consistent.
pub fn solve_sabotage_assignment(target: SettingPair) -> DeterministicAssignment {
    // required product a*b per pair: +1 for "same", -1 for "different"
    let want = |p: SettingPair| -> i8 {
        let mut same = !p.wants_anticorrelation();
        if p == target {
            same = !same;
        }
        if same {
            1
        } else {
            -1
        }
    };
    let out = |v: i8| if v > 0 { Outcome::Plus } else { Outcome::Minus };
    let a1 = 1i8;
    let b1 = a1 * want(SettingPair::ALL[0]);
    let b2 = a1 * want(SettingPair::ALL[1]);
    let a2 = b1 * want(SettingPair::ALL[2]);
    DeterministicAssignment::new(out(a1), out(a2), out(b1), out(b2))
}

/// A finite mixture of deterministic assignments with exact weights.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticLhv {
    support: Vec<(Rational, DeterministicAssignment)>,
}

impl StochasticLhv {
    pub fn new(support: Vec<(Rational, DeterministicAssignment)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::input("hidden variable support is empty"));
        }
        if let Some((w, _)) = support.iter().find(|(w, _)| w.is_negative()) {
            return Err(Error::input(format!("negative weight {w}")));
        }
        let total: Rational = support.iter().map(|(w, _)| w.clone()).sum();
        if !total.is_one() {
            return Err(Error::input(format!("weights sum to {total}, not 1")));
        }
        Ok(StochasticLhv { support })
    }

    pub fn point(a: DeterministicAssignment) -> Self {
        StochasticLhv {
            support: vec![(Rational::one(), a)],
        }
    }

    pub fn uniform_all() -> Self {
        let w = Rational::new(BigInt::one(), BigInt::from(16));
        StochasticLhv {
            support: DeterministicAssignment::all().map(|a| (w.clone(), a)).collect(),
        }
    }

    pub fn support(&self) -> &[(Rational, DeterministicAssignment)] {
        &self.support
    }

    /// Reads a `weight,a1,a2,b1,b2` CSV; weights may be `p/q` or decimals.
    pub fn read_csv<R: io::Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr
            .headers()
            .map_err(|e| Error::input(format!("weights file: {e}")))?
            .clone();
        let expected = ["weight", "a1", "a2", "b1", "b2"];
        if headers.iter().ne(expected) {
            return Err(Error::input(format!(
                "weights file header must be {}",
                expected.join(",")
            )));
        }
        let mut support = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::input(format!("weights file: {e}")))?;
            let weight = parse_rational(&rec[0])?;
            let a = DeterministicAssignment::new(
                rec[1].parse()?,
                rec[2].parse()?,
                rec[3].parse()?,
                rec[4].parse()?,
            );
            support.push((weight, a));
        }
        StochasticLhv::new(support)
    }
}

/// Shared per-round hidden variable, drawn before settings are revealed.
/// Its meaning is private to the strategy that drew it.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HiddenVariable(pub u64);

/// A local responder pair with a declared memory class.
pub trait SequentialStrategy: Send + Sync {
    fn name(&self) -> &str;

    fn memory_class(&self) -> MemoryClass;

    /// True when neither the hidden-variable draw nor the responders consult
    /// randomness.
    fn is_deterministic(&self) -> bool {
        true
    }

    fn draw_hidden(&self, _rng: &mut dyn RngCore) -> HiddenVariable {
        HiddenVariable::default()
    }

    fn respond_alice(
        &self,
        setting: AliceSetting,
        view: &MemoryView<'_>,
        hidden: HiddenVariable,
    ) -> Result<Outcome>;

    fn respond_bob(
        &self,
        setting: BobSetting,
        view: &MemoryView<'_>,
        hidden: HiddenVariable,
    ) -> Result<Outcome>;
}

/// Anything that can produce one round's outcome pair given the settings and
/// the history. This is the interface playouts and checks are written against;
/// it is deliberately more general than a local strategy.
pub trait RoundResponder: Send + Sync {
    fn name(&self) -> &str;

    fn is_deterministic(&self) -> bool;

    /// Whether the responder is a local hidden variable model.
    fn is_local(&self) -> bool;

    fn respond(
        &self,
        pair: SettingPair,
        history: &Transcript,
        rng: &mut dyn RngCore,
    ) -> Result<(Outcome, Outcome)>;
}

impl<S: SequentialStrategy + ?Sized> RoundResponder for S {
    fn name(&self) -> &str {
        SequentialStrategy::name(self)
    }

    fn is_deterministic(&self) -> bool {
        SequentialStrategy::is_deterministic(self)
    }

    fn is_local(&self) -> bool {
        true
    }

    fn respond(
        &self,
        pair: SettingPair,
        history: &Transcript,
        rng: &mut dyn RngCore,
    ) -> Result<(Outcome, Outcome)> {
        let hidden = self.draw_hidden(rng);
        let class = self.memory_class();
        let upto = history.len();
        let alice_view = memory_view(history, class, Side::Alice, upto)?;
        let bob_view = memory_view(history, class, Side::Bob, upto)?;
        let a = self.respond_alice(pair.alice, &alice_view, hidden)?;
        let b = self.respond_bob(pair.bob, &bob_view, hidden)?;
        Ok((a, b))
    }
}

/// Memoryless strategy that always answers from one fixed assignment.
#[derive(Debug, Clone)]
pub struct FixedAssignment {
    name: String,
    assignment: DeterministicAssignment,
}

impl FixedAssignment {
    pub fn new(name: impl Into<String>, assignment: DeterministicAssignment) -> Self {
        FixedAssignment {
            name: name.into(),
            assignment,
        }
    }

    pub fn assignment(&self) -> DeterministicAssignment {
        self.assignment
    }
}

impl SequentialStrategy for FixedAssignment {
    fn name(&self) -> &str {
        &self.name
    }

    fn memory_class(&self) -> MemoryClass {
        MemoryClass::None
    }

    fn respond_alice(&self, s: AliceSetting, _: &MemoryView<'_>, _: HiddenVariable) -> Result<Outcome> {
        Ok(self.assignment.alice(s))
    }

    fn respond_bob(&self, s: BobSetting, _: &MemoryView<'_>, _: HiddenVariable) -> Result<Outcome> {
        Ok(self.assignment.bob(s))
    }
}

/// Answers `+1` to every measurement.
pub fn constant_plus() -> FixedAssignment {
    FixedAssignment::new("constant-plus", DeterministicAssignment::constant(Outcome::Plus))
}

/// Rule for picking among pairs that share the highest count.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TieBreak {
    /// First in canonical order (A1,B1), (A1,B2), (A2,B1), (A2,B2).
    #[default]
    EarliestCanonical,
    LatestCanonical,
}

impl TieBreak {
    pub fn most_measured(self, counts: &PairCounts) -> SettingPair {
        let max = *counts.total.iter().max().unwrap_or(&0);
        let mut candidates = SettingPair::ALL.iter().filter(|p| counts.total(**p) == max);
        let pick = match self {
            TieBreak::EarliestCanonical => candidates.next(),
            TieBreak::LatestCanonical => candidates.last(),
        };
        *pick.expect("at least one pair attains the maximum")
    }
}

/// Two-sided memory model that sabotages the pair measured most so far.
///
/// Round 1 answers `+1` everywhere. Afterwards it plays the assignment that
/// fails only the most-measured pair's term, betting that this pair ends up
/// with the largest denominator in X_N.
#[derive(Debug, Clone, Default)]
pub struct GuessingModel {
    tie_break: TieBreak,
}

impl GuessingModel {
    pub fn new(tie_break: TieBreak) -> Self {
        GuessingModel { tie_break }
    }

    pub fn tie_break(&self) -> TieBreak {
        self.tie_break
    }

    fn assignment(&self, view: &MemoryView<'_>) -> Result<DeterministicAssignment> {
        if view.is_empty() {
            return Ok(DeterministicAssignment::constant(Outcome::Plus));
        }
        let counts = view.pair_counts()?;
        Ok(solve_sabotage_assignment(self.tie_break.most_measured(&counts)))
    }
}

pub fn guessing_model() -> GuessingModel {
    GuessingModel::default()
}

impl SequentialStrategy for GuessingModel {
    fn name(&self) -> &str {
        "guessing"
    }

    fn memory_class(&self) -> MemoryClass {
        MemoryClass::Full
    }

    fn respond_alice(&self, s: AliceSetting, view: &MemoryView<'_>, _: HiddenVariable) -> Result<Outcome> {
        Ok(self.assignment(view)?.alice(s))
    }

    fn respond_bob(&self, s: BobSetting, view: &MemoryView<'_>, _: HiddenVariable) -> Result<Outcome> {
        Ok(self.assignment(view)?.bob(s))
    }
}

/// Constant `+1`, except after exactly 100 rounds with pair counts
/// (33, 33, 33, 1): then Bob answers `-1` to B2.
#[derive(Debug, Clone, Copy, Default)]
pub struct Model101;

impl Model101 {
    pub const TRIGGER_ROUNDS: usize = 100;
    pub const TRIGGER_COUNTS: [u64; 4] = [33, 33, 33, 1];
    pub const TRIGGERED: DeterministicAssignment =
        DeterministicAssignment::new(Outcome::Plus, Outcome::Plus, Outcome::Plus, Outcome::Minus);

    fn assignment(&self, view: &MemoryView<'_>) -> Result<DeterministicAssignment> {
        if view.len() == Self::TRIGGER_ROUNDS && view.pair_counts()?.total == Self::TRIGGER_COUNTS {
            Ok(Self::TRIGGERED)
        } else {
            Ok(DeterministicAssignment::constant(Outcome::Plus))
        }
    }
}

pub fn model_101() -> Model101 {
    Model101
}

impl SequentialStrategy for Model101 {
    fn name(&self) -> &str {
        "model101"
    }

    fn memory_class(&self) -> MemoryClass {
        MemoryClass::Full
    }

    fn respond_alice(&self, s: AliceSetting, view: &MemoryView<'_>, _: HiddenVariable) -> Result<Outcome> {
        Ok(self.assignment(view)?.alice(s))
    }

    fn respond_bob(&self, s: BobSetting, view: &MemoryView<'_>, _: HiddenVariable) -> Result<Outcome> {
        Ok(self.assignment(view)?.bob(s))
    }
}

/// Memoryless mixture: each round draws one assignment by weight.
#[derive(Debug, Clone)]
pub struct StochasticStrategy {
    lhv: StochasticLhv,
    sampler: WeightSampler,
}

#[derive(Debug, Clone)]
enum WeightSampler {
    /// Cumulative integer numerators over a common denominator.
    Exact { cumulative: Vec<u64>, denominator: u64 },
    Float { cumulative: Vec<f64> },
}

impl StochasticStrategy {
    pub fn new(lhv: StochasticLhv) -> Self {
        let sampler = Self::exact_sampler(&lhv).unwrap_or_else(|| {
            let mut acc = 0.0;
            let cumulative = lhv
                .support
                .iter()
                .map(|(w, _)| {
                    acc += w.to_f64().unwrap_or(0.0);
                    acc
                })
                .collect();
            WeightSampler::Float { cumulative }
        });
        StochasticStrategy { lhv, sampler }
    }

    fn exact_sampler(lhv: &StochasticLhv) -> Option<WeightSampler> {
        let den = lhv
            .support
            .iter()
            .fold(BigInt::one(), |acc, (w, _)| acc.lcm(w.denom()));
        let denominator = den.to_u64()?;
        let mut acc = BigInt::zero();
        let mut cumulative = Vec::with_capacity(lhv.support.len());
        for (w, _) in &lhv.support {
            acc += w.numer() * (&den / w.denom());
            cumulative.push(acc.to_u64()?);
        }
        Some(WeightSampler::Exact {
            cumulative,
            denominator,
        })
    }

    pub fn lhv(&self) -> &StochasticLhv {
        &self.lhv
    }

    fn assignment(&self, hidden: HiddenVariable) -> DeterministicAssignment {
        self.lhv.support[hidden.0 as usize].1
    }
}

pub fn from_stochastic(lhv: StochasticLhv) -> StochasticStrategy {
    StochasticStrategy::new(lhv)
}

impl SequentialStrategy for StochasticStrategy {
    fn name(&self) -> &str {
        "stochastic-lhv"
    }

    fn memory_class(&self) -> MemoryClass {
        MemoryClass::None
    }

    fn is_deterministic(&self) -> bool {
        self.lhv.support.iter().filter(|(w, _)| !w.is_zero()).count() <= 1
    }

    fn draw_hidden(&self, rng: &mut dyn RngCore) -> HiddenVariable {
        let index = match &self.sampler {
            WeightSampler::Exact {
                cumulative,
                denominator,
            } => {
                if self.lhv.support.len() == 1 {
                    0
                } else {
                    let u = rng.gen_range(0..*denominator);
                    cumulative.partition_point(|&c| c <= u)
                }
            }
            WeightSampler::Float { cumulative } => {
                let u: f64 = rng.gen();
                cumulative
                    .partition_point(|&c| c <= u)
                    .min(cumulative.len() - 1)
            }
        };
        HiddenVariable(index as u64)
    }

    fn respond_alice(&self, s: AliceSetting, _: &MemoryView<'_>, h: HiddenVariable) -> Result<Outcome> {
        Ok(self.assignment(h).alice(s))
    }

    fn respond_bob(&self, s: BobSetting, _: &MemoryView<'_>, h: HiddenVariable) -> Result<Outcome> {
        Ok(self.assignment(h).bob(s))
    }
}

/// Correlated coin flips reproducing the singlet's optimal CHSH statistics.
/// Not a local model: Bob's answer depends on Alice's setting and outcome.
#[derive(Debug, Clone, Copy, Default)]
pub struct QuantumSinglet;

impl QuantumSinglet {
    /// Probability that a round satisfies its CHSH term: (2 + √2) / 4.
    pub fn term_probability() -> f64 {
        (2.0 + std::f64::consts::SQRT_2) / 4.0
    }
}

pub fn quantum_singlet_sampler() -> QuantumSinglet {
    QuantumSinglet
}

impl RoundResponder for QuantumSinglet {
    fn name(&self) -> &str {
        "quantum"
    }

    fn is_deterministic(&self) -> bool {
        false
    }

    fn is_local(&self) -> bool {
        false
    }

    fn respond(
        &self,
        pair: SettingPair,
        _history: &Transcript,
        rng: &mut dyn RngCore,
    ) -> Result<(Outcome, Outcome)> {
        let a = if rng.gen::<bool>() {
            Outcome::Plus
        } else {
            Outcome::Minus
        };
        let hit = rng.gen_bool(Self::term_probability());
        let same = hit != pair.wants_anticorrelation();
        Ok((a, if same { a } else { -a }))
    }
}

/// A model in which each side answers all of its N settings at once.
pub trait CollectiveStrategy: Send + Sync {
    fn name(&self) -> &str;

    /// Number of rounds the strategy is defined for, if fixed.
    fn rounds(&self) -> Option<usize>;

    fn respond_alice(&self, settings: &[AliceSetting]) -> Result<Vec<Outcome>>;

    fn respond_bob(&self, settings: &[BobSetting]) -> Result<Vec<Outcome>>;
}

/// Two-round collective model: Alice answers (+1,-1) to (A1,A2) and Bob
/// answers (-1,+1) to (B2,B1); every other sequence gets (+1,+1).
#[derive(Debug, Clone, Copy, Default)]
pub struct CollectiveN2;

pub fn collective_n2() -> CollectiveN2 {
    CollectiveN2
}

fn check_two(len: usize) -> Result<()> {
    if len != 2 {
        return Err(Error::input(format!(
            "collective-n2 is defined for exactly 2 rounds, got {len}"
        )));
    }
    Ok(())
}

impl CollectiveStrategy for CollectiveN2 {
    fn name(&self) -> &str {
        "collective-n2"
    }

    fn rounds(&self) -> Option<usize> {
        Some(2)
    }

    fn respond_alice(&self, settings: &[AliceSetting]) -> Result<Vec<Outcome>> {
        check_two(settings.len())?;
        Ok(match settings {
            [AliceSetting::A1, AliceSetting::A2] => vec![Outcome::from_bit(1), Outcome::from_bit(0)],
            _ => vec![Outcome::from_bit(1), Outcome::from_bit(1)],
        })
    }

    fn respond_bob(&self, settings: &[BobSetting]) -> Result<Vec<Outcome>> {
        check_two(settings.len())?;
        Ok(match settings {
            [BobSetting::B2, BobSetting::B1] => vec![Outcome::from_bit(0), Outcome::from_bit(1)],
            _ => vec![Outcome::from_bit(1), Outcome::from_bit(1)],
        })
    }
}

/// Collective model answering `+1` everywhere, for any N.
#[derive(Debug, Clone, Copy, Default)]
pub struct CollectiveConstant;

impl CollectiveStrategy for CollectiveConstant {
    fn name(&self) -> &str {
        "collective-constant"
    }

    fn rounds(&self) -> Option<usize> {
        None
    }

    fn respond_alice(&self, settings: &[AliceSetting]) -> Result<Vec<Outcome>> {
        Ok(vec![Outcome::Plus; settings.len()])
    }

    fn respond_bob(&self, settings: &[BobSetting]) -> Result<Vec<Outcome>> {
        Ok(vec![Outcome::Plus; settings.len()])
    }
}

/// A catalogued model, ready to be played.
pub enum Model {
    Sequential(Box<dyn RoundResponder>),
    Collective(Box<dyn CollectiveStrategy>),
}

impl Model {
    pub const NAMES: [&'static str; 6] = [
        "constant-plus",
        "stochastic-lhv",
        "guessing",
        "model101",
        "collective-n2",
        "quantum",
    ];

    /// Looks a model up by its CLI name. `stochastic-lhv` needs `lhv`.
    pub fn from_name(name: &str, lhv: Option<StochasticLhv>) -> Result<Model> {
        Ok(match name {
            "constant-plus" => Model::Sequential(Box::new(constant_plus())),
            "stochastic-lhv" => {
                let lhv = lhv.ok_or_else(|| {
                    Error::input("stochastic-lhv needs a weights file (weight,a1,a2,b1,b2)")
                })?;
                Model::Sequential(Box::new(from_stochastic(lhv)))
            }
            "guessing" => Model::Sequential(Box::new(guessing_model())),
            "model101" => Model::Sequential(Box::new(model_101())),
            "collective-n2" => Model::Collective(Box::new(collective_n2())),
            "quantum" => Model::Sequential(Box::new(quantum_singlet_sampler())),
            other => {
                return Err(Error::input(format!(
                    "unknown strategy {other:?}; valid names: {}",
                    Model::NAMES.join(", ")
                )))
            }
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Model::Sequential(s) => s.name(),
            Model::Collective(c) => c.name(),
        }
    }

    pub fn sequential(&self) -> Result<&dyn RoundResponder> {
        match self {
            Model::Sequential(s) => Ok(s.as_ref()),
            Model::Collective(c) => Err(Error::input(format!(
                "{} is a collective strategy; it has no round-by-round playout",
                c.name()
            ))),
        }
    }
}

impl fmt::Debug for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Model").field(&self.name()).finish()
    }
}
