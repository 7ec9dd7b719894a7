use bellmem_core::enumerator::{
    exact_expectations, no_signaling_check, playout, Enumerator, DEFAULT_CAP,
};
use bellmem_core::montecarlo::{estimate, SimulationPlan};
use bellmem_core::rational::{integer, ratio, to_f64};
use bellmem_core::strategies::{
    constant_plus, guessing_model, model_101, DeterministicAssignment, FixedAssignment,
    GuessingModel, HiddenVariable, Model, RoundResponder, SequentialStrategy, TieBreak,
};
use bellmem_core::{
    AliceSetting, BobSetting, Error, Execution, MemoryClass, MemoryView, Outcome, SettingPair,
};

/// One-sided memory: each side repeats its previous outcome, flipped when the
/// current setting differs from the previous one.
struct Echo;

impl SequentialStrategy for Echo {
    fn name(&self) -> &str {
        "echo"
    }
    fn memory_class(&self) -> MemoryClass {
        MemoryClass::OwnSide
    }
    fn respond_alice(&self, s: AliceSetting, view: &MemoryView<'_>, _: HiddenVariable) -> bellmem_core::Result<Outcome> {
        Ok(match view.alice_history()?.last() {
            Some((prev, o)) if prev == s => o,
            Some((_, o)) => -o,
            None => Outcome::Plus,
        })
    }
    fn respond_bob(&self, s: BobSetting, view: &MemoryView<'_>, _: HiddenVariable) -> bellmem_core::Result<Outcome> {
        Ok(match view.bob_history()?.last() {
            Some((prev, o)) if prev == s => o,
            Some((_, o)) => -o,
            None => Outcome::Plus,
        })
    }
}

/// Declares one-sided memory but tries to read the joint record.
struct Peeker;

impl SequentialStrategy for Peeker {
    fn name(&self) -> &str {
        "peeker"
    }
    fn memory_class(&self) -> MemoryClass {
        MemoryClass::OwnSide
    }
    fn respond_alice(&self, _: AliceSetting, view: &MemoryView<'_>, _: HiddenVariable) -> bellmem_core::Result<Outcome> {
        Ok(if view.rounds()?.is_empty() { Outcome::Plus } else { Outcome::Minus })
    }
    fn respond_bob(&self, _: BobSetting, _: &MemoryView<'_>, _: HiddenVariable) -> bellmem_core::Result<Outcome> {
        Ok(Outcome::Plus)
    }
}

fn catalogue() -> Vec<Box<dyn RoundResponder>> {
    let mut v: Vec<Box<dyn RoundResponder>> = vec![
        Box::new(constant_plus()),
        Box::new(guessing_model()),
        Box::new(GuessingModel::new(TieBreak::LatestCanonical)),
        Box::new(model_101()),
        Box::new(Echo),
    ];
    for a in DeterministicAssignment::all() {
        v.push(Box::new(FixedAssignment::new(a.to_string(), a)));
    }
    v
}

#[test]
fn one_sided_view_blocks_joint_access() {
    let settings = [SettingPair::ALL[0], SettingPair::ALL[3]];
    match playout(&Peeker, &settings) {
        Err(Error::ViewRestricted { requested, granted, .. }) => {
            assert_eq!(requested, MemoryClass::Full);
            assert_eq!(granted, MemoryClass::OwnSide);
        }
        other => panic!("expected a view restriction, got {other:?}"),
    }
}

#[test]
fn catalogue_is_non_signalling() {
    for model in catalogue() {
        for n in 1..=6 {
            let r = no_signaling_check(model.as_ref(), n, DEFAULT_CAP).unwrap();
            assert!(r.passed(), "{} signals at n={n}: {r:?}", model.name());
        }
    }
}

#[test]
fn expected_y_never_exceeds_three() {
    for model in catalogue() {
        for n in 1..=6 {
            let r = exact_expectations(model.as_ref(), n).unwrap();
            assert!(r.e_y <= integer(3), "{} E(Y_{n}) = {}", model.name(), r.e_y);
            assert_eq!(r.total_probability(), integer(1));
            let undefined: u64 = r.distribution.iter().filter(|p| p.x.is_none()).map(|p| p.sequences).sum();
            assert_eq!(ratio(undefined as i64, r.sequences as i64), r.p_undefined);
        }
    }
}

#[test]
fn guessing_conditional_x_exceeds_three() {
    let e = Enumerator::new(10);
    for n in 4..=10 {
        let r = e.exact_expectations(&guessing_model(), n).unwrap();
        let x = r.e_x_conditional.clone().unwrap();
        assert!(x > integer(3), "n={n}: {x}");
        assert!(r.e_y <= integer(3));
        if n == 4 {
            assert_eq!(x, ratio(15, 4));
        }
    }
}

#[test]
fn below_four_rounds_x_is_never_defined() {
    for n in 1..=3 {
        let r = exact_expectations(&guessing_model(), n).unwrap();
        assert_eq!(r.e_x_conditional, None);
        assert_eq!(r.p_undefined, integer(1));
    }
}

#[test]
fn execution_modes_agree() {
    let par = Enumerator::new(8).with_execution(Execution::Parallel);
    let seq = Enumerator::new(8).with_execution(Execution::Sequential);
    for n in [4, 7] {
        assert_eq!(
            par.exact_expectations(&guessing_model(), n).unwrap(),
            seq.exact_expectations(&guessing_model(), n).unwrap()
        );
    }
}

#[test]
fn monte_carlo_matches_enumeration() {
    for name in ["constant-plus", "guessing"] {
        let model = Model::from_name(name, None).unwrap();
        let exact = exact_expectations(model.sequential().unwrap(), 5).unwrap();
        let plan = SimulationPlan::new(5, 20_000, 7, 0.1).unwrap();
        let est = estimate(&model, &plan, Execution::Parallel).unwrap();
        let diff = (est.mean_y - to_f64(&exact.e_y)).abs();
        assert!(diff <= 4.0 * est.se_y, "{name}: {} vs {}", est.mean_y, exact.e_y);
    }
}
