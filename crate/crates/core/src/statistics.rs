//! The CHSH statistics X_N and Y_N, computed exactly.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::domain::{PairCounts, Round, SettingPair, Transcript};
use crate::error::{Error, Result};
use crate::rational::{integer, Rational};
use crate::strategies::StochasticLhv;

/// 1 if the round matches its CHSH term: equal outcomes on (A1,B1), (A1,B2),
/// (A2,B1), different outcomes on (A2,B2).
pub fn round_score(round: &Round) -> u8 {
    u8::from(round.correlated() != round.pair.wants_anticorrelation())
}

/// Y_N = (4/N) · Σ round scores.
pub fn y_statistic(transcript: &Transcript) -> Result<Rational> {
    y_from_counts(transcript.counts())
        .ok_or_else(|| Error::input("Y_N is not defined for an empty transcript"))
}

pub fn y_from_counts(counts: &PairCounts) -> Option<Rational> {
    let n = counts.rounds();
    if n == 0 {
        return None;
    }
    Some(Rational::new(
        BigInt::from(4 * counts.scoring_rounds()),
        BigInt::from(n),
    ))
}

/// X_N, the sum of the four conditional frequencies; `None` when some pair
/// was never measured.
pub fn x_statistic(transcript: &Transcript) -> Option<Rational> {
    x_from_counts(transcript.counts())
}

pub fn x_from_counts(counts: &PairCounts) -> Option<Rational> {
    let mut x = Rational::zero();
    for pair in SettingPair::ALL {
        let total = counts.total(pair);
        if total == 0 {
            return None;
        }
        let hits = if pair.wants_anticorrelation() {
            counts.anticorrelated(pair)
        } else {
            counts.correlated(pair)
        };
        x += Rational::new(BigInt::from(hits), BigInt::from(total));
    }
    Some(x)
}

/// P_CHSH of a mixture: the weighted number of satisfied terms.
pub fn chsh_value(lhv: &StochasticLhv) -> Rational {
    lhv.support()
        .iter()
        .map(|(w, a)| w * integer(i64::from(a.chsh_terms())))
        .sum()
}

/// Summary of one transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchStatistics {
    pub n: u64,
    pub y_value: Rational,
    pub x_value: Option<Rational>,
    pub counts: PairCounts,
}

impl BatchStatistics {
    pub fn from_counts(counts: PairCounts) -> Result<Self> {
        let y_value = y_from_counts(&counts)
            .ok_or_else(|| Error::input("statistics of an empty transcript"))?;
        Ok(BatchStatistics {
            n: counts.rounds(),
            x_value: x_from_counts(&counts),
            y_value,
            counts,
        })
    }

    pub fn from_transcript(t: &Transcript) -> Result<Self> {
        Self::from_counts(*t.counts())
    }
}
