use bellmem_core::enumerator::playout;
use bellmem_core::rational::{integer, Rational};
use bellmem_core::statistics::{chsh_value, x_statistic, y_statistic};
use bellmem_core::strategies::{
    guessing_model, DeterministicAssignment, FixedAssignment, RoundResponder, StochasticLhv,
};
use bellmem_core::{memory_view, MemoryClass, Outcome, SettingPair, Side, Transcript};
use num_bigint::BigInt;
use proptest::prelude::*;

fn round() -> impl Strategy<Value = (SettingPair, Outcome, Outcome)> {
    (0usize..4, any::<bool>(), any::<bool>()).prop_map(|(i, a, b)| {
        (
            SettingPair::from_index(i),
            Outcome::from_bit(u8::from(a)),
            Outcome::from_bit(u8::from(b)),
        )
    })
}

fn transcript(max: usize) -> impl Strategy<Value = Transcript> {
    prop::collection::vec(round(), 1..max).prop_map(Transcript::from_rounds)
}

fn assignment() -> impl Strategy<Value = DeterministicAssignment> {
    (0usize..16).prop_map(|i| DeterministicAssignment::all().nth(i).unwrap())
}

proptest! {
    #[test]
    fn counts_are_conserved(t in transcript(200)) {
        let c = t.counts();
        let total: u64 = SettingPair::ALL.iter().map(|&p| c.total(p)).sum();
        prop_assert_eq!(total, t.len() as u64);
        for p in SettingPair::ALL {
            prop_assert_eq!(c.correlated(p) + c.anticorrelated(p), c.total(p));
        }
        prop_assert_eq!(*c, t.recount());
    }

    #[test]
    fn statistics_stay_in_range(t in transcript(200)) {
        let y = y_statistic(&t).unwrap();
        prop_assert!(y >= integer(0) && y <= integer(4));
        if let Some(x) = x_statistic(&t) {
            prop_assert!(x >= integer(0) && x <= integer(4));
        }
    }

    #[test]
    fn y_is_length_weighted_on_concatenation(a in transcript(60), b in transcript(60)) {
        let joined = Transcript::from_rounds(
            a.rounds().iter().chain(b.rounds()).map(|r| (r.pair, r.a, r.b)),
        );
        let (na, nb) = (a.len() as i64, b.len() as i64);
        let expected = (y_statistic(&a).unwrap() * integer(na) + y_statistic(&b).unwrap() * integer(nb))
            / integer(na + nb);
        prop_assert_eq!(y_statistic(&joined).unwrap(), expected);
    }

    #[test]
    fn views_grow_by_prefix(t in transcript(40), cut in 0usize..40) {
        let upto = cut.min(t.len());
        for side in [Side::Alice, Side::Bob] {
            let short = memory_view(&t, MemoryClass::Full, side, upto).unwrap();
            let long = memory_view(&t, MemoryClass::Full, side, t.len()).unwrap();
            let (s, l) = (short.entries(), long.entries());
            prop_assert_eq!(&l[..s.len()], &s[..]);

            let own = memory_view(&t, MemoryClass::OwnSide, side, upto).unwrap();
            prop_assert_eq!(own.len(), upto);
            prop_assert!(own.rounds().is_err());
            let none = memory_view(&t, MemoryClass::None, side, upto).unwrap();
            prop_assert!(none.entries().is_empty());
        }
        prop_assert!(memory_view(&t, MemoryClass::Full, Side::Alice, t.len() + 1).is_err());
    }

    #[test]
    fn mixtures_never_beat_three(weights in prop::collection::vec(0u32..20, 16)) {
        prop_assume!(weights.iter().any(|&w| w > 0));
        let sum: u32 = weights.iter().sum();
        let support = weights
            .iter()
            .zip(DeterministicAssignment::all())
            .filter(|(w, _)| **w > 0)
            .map(|(&w, a)| (Rational::new(BigInt::from(w), BigInt::from(sum)), a))
            .collect();
        let lhv = StochasticLhv::new(support).unwrap();
        prop_assert!(chsh_value(&lhv) <= integer(3));
    }

    #[test]
    fn memoryless_answers_ignore_history(a in assignment(), t in transcript(30), i in 0usize..4) {
        let s = FixedAssignment::new("fixed", a);
        let pair = SettingPair::from_index(i);
        let mut rng = rand::rngs::mock::StepRng::new(0, 1);
        let with_history = s.respond(pair, &t, &mut rng).unwrap();
        let fresh = s.respond(pair, &Transcript::new(), &mut rng).unwrap();
        prop_assert_eq!(with_history, fresh);
        prop_assert_eq!(with_history, (a.alice(pair.alice), a.bob(pair.bob)));
    }

    #[test]
    fn guessing_never_scores_on_its_target(settings in prop::collection::vec(0usize..4, 2..12)) {
        let settings: Vec<SettingPair> = settings.into_iter().map(SettingPair::from_index).collect();
        let t = playout(&guessing_model(), &settings).unwrap();
        // first round is all +1; afterwards each round misses only the most-measured pair
        prop_assert!(t.rounds()[0].a == Outcome::Plus && t.rounds()[0].b == Outcome::Plus);
        for k in 1..t.len() {
            let prefix = Transcript::from_rounds(t.rounds()[..k].iter().map(|r| (r.pair, r.a, r.b)));
            let target = bellmem_core::strategies::TieBreak::EarliestCanonical.most_measured(prefix.counts());
            let r = &t.rounds()[k];
            let scored = bellmem_core::statistics::round_score(r) == 1;
            prop_assert_eq!(scored, r.pair != target);
        }
    }
}
