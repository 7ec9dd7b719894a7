//! Settings, outcomes, rounds, transcripts and memory views.
//!
//! A [`Transcript`] is an append-only record of rounds. Strategies never see a
//! transcript directly: the playout engine hands each side a [`MemoryView`]
//! that exposes only what the strategy's [`MemoryClass`] permits.

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AliceSetting {
    A1,
    A2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BobSetting {
    B1,
    B2,
}

impl AliceSetting {
    pub const ALL: [AliceSetting; 2] = [AliceSetting::A1, AliceSetting::A2];

    pub fn other(self) -> Self {
        match self {
            AliceSetting::A1 => AliceSetting::A2,
            AliceSetting::A2 => AliceSetting::A1,
        }
    }
}

impl BobSetting {
    pub const ALL: [BobSetting; 2] = [BobSetting::B1, BobSetting::B2];

    pub fn other(self) -> Self {
        match self {
            BobSetting::B1 => BobSetting::B2,
            BobSetting::B2 => BobSetting::B1,
        }
    }
}

impl fmt::Display for AliceSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AliceSetting::A1 => "A1",
            AliceSetting::A2 => "A2",
        })
    }
}

impl fmt::Display for BobSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BobSetting::B1 => "B1",
            BobSetting::B2 => "B2",
        })
    }
}

impl FromStr for AliceSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A1" => Ok(AliceSetting::A1),
            "A2" => Ok(AliceSetting::A2),
            other => Err(Error::input(format!("unknown Alice setting {other:?}"))),
        }
    }
}

impl FromStr for BobSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "B1" => Ok(BobSetting::B1),
            "B2" => Ok(BobSetting::B2),
            other => Err(Error::input(format!("unknown Bob setting {other:?}"))),
        }
    }
}

/// A two-valued measurement result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    /// Maps the `1`/`0` outcome notation used for collective models.
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Outcome::Minus
        } else {
            Outcome::Plus
        }
    }
}

impl std::ops::Neg for Outcome {
    type Output = Outcome;

    fn neg(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "+1" | "1" => Ok(Outcome::Plus),
            "-1" => Ok(Outcome::Minus),
            other => Err(Error::input(format!("unknown outcome {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    Alice,
    Bob,
}

/// Joint setting choice for one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SettingPair {
    pub alice: AliceSetting,
    pub bob: BobSetting,
}

impl SettingPair {
    /// Canonical order: (A1,B1), (A1,B2), (A2,B1), (A2,B2).
    pub const ALL: [SettingPair; 4] = [
        SettingPair::new(AliceSetting::A1, BobSetting::B1),
        SettingPair::new(AliceSetting::A1, BobSetting::B2),
        SettingPair::new(AliceSetting::A2, BobSetting::B1),
        SettingPair::new(AliceSetting::A2, BobSetting::B2),
    ];

    pub const fn new(alice: AliceSetting, bob: BobSetting) -> Self {
        SettingPair { alice, bob }
    }

    /// Position in the canonical order.
    pub fn index(self) -> usize {
        let a = match self.alice {
            AliceSetting::A1 => 0,
            AliceSetting::A2 => 2,
        };
        let b = match self.bob {
            BobSetting::B1 => 0,
            BobSetting::B2 => 1,
        };
        a + b
    }

    pub fn from_index(i: usize) -> Self {
        SettingPair::ALL[i]
    }

    /// The pair whose CHSH term rewards anticorrelation.
    pub fn wants_anticorrelation(self) -> bool {
        self == SettingPair::new(AliceSetting::A2, BobSetting::B2)
    }
}

impl fmt::Display for SettingPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.alice, self.bob)
    }
}

/// One measured pair. `index` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Round {
    pub index: usize,
    pub pair: SettingPair,
    pub a: Outcome,
    pub b: Outcome,
}

impl Round {
    pub fn correlated(&self) -> bool {
        self.a == self.b
    }
}

/// Per-pair tallies: number of rounds, and how many of those were correlated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PairCounts {
    pub total: [u64; 4],
    pub correlated: [u64; 4],
}

impl PairCounts {
    pub fn record(&mut self, pair: SettingPair, a: Outcome, b: Outcome) {
        let i = pair.index();
        self.total[i] += 1;
        if a == b {
            self.correlated[i] += 1;
        }
    }

    pub fn total(&self, pair: SettingPair) -> u64 {
        self.total[pair.index()]
    }

    pub fn correlated(&self, pair: SettingPair) -> u64 {
        self.correlated[pair.index()]
    }

    pub fn anticorrelated(&self, pair: SettingPair) -> u64 {
        let i = pair.index();
        self.total[i] - self.correlated[i]
    }

    /// `(#, #_c, #_a)` for `pair`.
    pub fn triple(&self, pair: SettingPair) -> (u64, u64, u64) {
        (
            self.total(pair),
            self.correlated(pair),
            self.anticorrelated(pair),
        )
    }

    pub fn rounds(&self) -> u64 {
        self.total.iter().sum()
    }

    /// Rounds whose outcome pattern matches the CHSH target.
    pub fn scoring_rounds(&self) -> u64 {
        SettingPair::ALL
            .iter()
            .map(|&p| {
                if p.wants_anticorrelation() {
                    self.anticorrelated(p)
                } else {
                    self.correlated(p)
                }
            })
            .sum()
    }

    pub fn merge(&mut self, other: &PairCounts) {
        for i in 0..4 {
            self.total[i] += other.total[i];
            self.correlated[i] += other.correlated[i];
        }
    }
}

/// Ordered record of rounds with cached per-pair counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    rounds: Vec<Round>,
    counts: PairCounts,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Transcript {
            rounds: Vec::with_capacity(n),
            counts: PairCounts::default(),
        }
    }

    /// Appends a round in place; its index is the new length.
    pub fn push(&mut self, pair: SettingPair, a: Outcome, b: Outcome) {
        let index = self.rounds.len() + 1;
        self.rounds.push(Round { index, pair, a, b });
        self.counts.record(pair, a, b);
    }

    /// Value-style append: returns a new transcript with one more round.
    pub fn record_round(&self, pair: SettingPair, a: Outcome, b: Outcome) -> Transcript {
        let mut next = self.clone();
        next.push(pair, a, b);
        next
    }

    pub fn from_rounds<I>(rounds: I) -> Self
    where
        I: IntoIterator<Item = (SettingPair, Outcome, Outcome)>,
    {
        let mut t = Transcript::new();
        for (pair, a, b) in rounds {
            t.push(pair, a, b);
        }
        t
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn counts(&self) -> &PairCounts {
        &self.counts
    }

    pub fn recount(&self) -> PairCounts {
        let mut c = PairCounts::default();
        for r in &self.rounds {
            c.record(r.pair, r.a, r.b);
        }
        c
    }

    pub fn settings(&self) -> Vec<SettingPair> {
        self.rounds.iter().map(|r| r.pair).collect()
    }

    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["round", "alice_setting", "bob_setting", "a", "b"])
            .map_err(csv_err)?;
        for r in &self.rounds {
            w.write_record([
                r.index.to_string(),
                r.pair.alice.to_string(),
                r.pair.bob.to_string(),
                r.a.to_string(),
                r.b.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::input(e.to_string()))
    }

    /// Parses the `round,alice_setting,bob_setting,a,b` format. Round numbers
    /// must run 1..N in order.
    pub fn read_csv<R: io::Read>(input: R) -> Result<Transcript> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let expected = ["round", "alice_setting", "bob_setting", "a", "b"];
        if headers.iter().map(str::trim).ne(expected) {
            return Err(Error::input(format!(
                "transcript header must be {}",
                expected.join(",")
            )));
        }
        let mut t = Transcript::new();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let index: usize = rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("bad round number {:?}", &rec[0])))?;
            if index != t.len() + 1 {
                return Err(Error::input(format!(
                    "round {index} out of order, expected {}",
                    t.len() + 1
                )));
            }
            let pair = SettingPair::new(rec[1].parse()?, rec[2].parse()?);
            t.push(pair, rec[3].parse()?, rec[4].parse()?);
        }
        Ok(t)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::input(format!("csv: {e}"))
}

/// How much past information a responder may consult.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MemoryClass {
    None,
    OwnSide,
    Full,
}

/// History as seen by one side at the start of a round.
///
/// Only rounds `1..=upto` are reachable, and accessors refuse to hand out
/// anything the class does not grant.
#[derive(Debug, Clone, Copy)]
pub struct MemoryView<'a> {
    class: MemoryClass,
    side: Side,
    rounds: &'a [Round],
    counts: Option<&'a PairCounts>,
}

impl<'a> MemoryView<'a> {
    /// A view with nothing in it.
    pub fn empty(class: MemoryClass, side: Side) -> Self {
        MemoryView {
            class,
            side,
            rounds: &[],
            counts: None,
        }
    }

    pub fn class(&self) -> MemoryClass {
        self.class
    }

    pub fn side(&self) -> Side {
        self.side
    }

    /// Number of past rounds visible to this view.
    pub fn len(&self) -> usize {
        match self.class {
            MemoryClass::None => 0,
            _ => self.rounds.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn require(&self, requested: MemoryClass, side: Side) -> Result<()> {
        let granted = match self.class {
            MemoryClass::Full => true,
            MemoryClass::OwnSide => requested == MemoryClass::OwnSide && side == self.side,
            MemoryClass::None => false,
        };
        if granted {
            Ok(())
        } else {
            Err(Error::ViewRestricted {
                side: self.side,
                requested,
                granted: self.class,
            })
        }
    }

    /// Alice's past settings and outcomes.
    pub fn alice_history(&self) -> Result<impl Iterator<Item = (AliceSetting, Outcome)> + 'a> {
        self.require(MemoryClass::OwnSide, Side::Alice)?;
        Ok(self.rounds.iter().map(|r| (r.pair.alice, r.a)))
    }

    /// Bob's past settings and outcomes.
    pub fn bob_history(&self) -> Result<impl Iterator<Item = (BobSetting, Outcome)> + 'a> {
        self.require(MemoryClass::OwnSide, Side::Bob)?;
        Ok(self.rounds.iter().map(|r| (r.pair.bob, r.b)))
    }

    /// Both sides' past rounds; needs two-sided memory.
    pub fn rounds(&self) -> Result<&'a [Round]> {
        self.require(MemoryClass::Full, self.side)?;
        Ok(self.rounds)
    }

    /// Joint pair counts over the visible rounds; needs two-sided memory.
    pub fn pair_counts(&self) -> Result<PairCounts> {
        self.require(MemoryClass::Full, self.side)?;
        Ok(match self.counts {
            Some(c) => *c,
            None => Transcript::from_rounds(self.rounds.iter().map(|r| (r.pair, r.a, r.b)))
                .recount(),
        })
    }

    /// Everything the view exposes, as serializable entries.
    pub fn entries(&self) -> Vec<ViewEntry> {
        match (self.class, self.side) {
            (MemoryClass::None, _) => Vec::new(),
            (MemoryClass::OwnSide, Side::Alice) => self
                .rounds
                .iter()
                .map(|r| ViewEntry::Alice {
                    setting: r.pair.alice,
                    outcome: r.a,
                })
                .collect(),
            (MemoryClass::OwnSide, Side::Bob) => self
                .rounds
                .iter()
                .map(|r| ViewEntry::Bob {
                    setting: r.pair.bob,
                    outcome: r.b,
                })
                .collect(),
            (MemoryClass::Full, _) => self.rounds.iter().map(|r| ViewEntry::Joint(*r)).collect(),
        }
    }
}

impl Serialize for MemoryView<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self.entries();
        let mut seq = serializer.serialize_seq(Some(entries.len()))?;
        for e in &entries {
            seq.serialize_element(e)?;
        }
        seq.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViewEntry {
    Alice { setting: AliceSetting, outcome: Outcome },
    Bob { setting: BobSetting, outcome: Outcome },
    Joint(Round),
}

/// Builds the view of rounds `1..=upto` for `side` under `class`.
pub fn memory_view(
    transcript: &Transcript,
    class: MemoryClass,
    side: Side,
    upto: usize,
) -> Result<MemoryView<'_>> {
    if upto > transcript.len() {
        return Err(Error::input(format!(
            "view upto {upto} exceeds transcript length {}",
            transcript.len()
        )));
    }
    let rounds = match class {
        MemoryClass::None => &[][..],
        _ => &transcript.rounds[..upto],
    };
    let counts = (upto == transcript.len()).then_some(&transcript.counts);
    Ok(MemoryView {
        class,
        side,
        rounds,
        counts,
    })
}
