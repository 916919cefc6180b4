//! The checks must catch mechanisms that are broken on purpose.

use bfm_core::harness::{
    check_budget_ir_transfers, check_outcome, check_universal_truthfulness, generate_instances,
    GenKind, OverBudget, PayYourBid, ViolationKind,
};
use bfm_core::mechanisms::{build, run, BuildOptions, MechanismId};
use bfm_core::{CoinTape, Coins, Instance, Valuation};

const SEEDS: [u64; 8] = [0, 1, 2, 3, 4, 5, 6, 7];

fn instances() -> Vec<Instance> {
    let mut out = generate_instances(GenKind::Additive, 5, 3, 4).unwrap();
    out.extend(generate_instances(GenKind::Xos, 5, 4, 4).unwrap());
    out
}

#[test]
fn first_price_payments_are_not_truthful() {
    let mut found = 0;
    for (k, instance) in instances().iter().enumerate() {
        for id in [
            MechanismId::Additive,
            MechanismId::XosMain,
            MechanismId::SaMain,
        ] {
            let m = PayYourBid(build(id, instance, BuildOptions::default()).unwrap());
            let report =
                check_universal_truthfulness(&m, instance.costs(), &SEEDS, 9, &format!("{id}/{k}"))
                    .unwrap();
            found += report.count(ViolationKind::Truthfulness);
        }
    }
    assert!(
        found > 0,
        "pay-your-bid slipped through the truthfulness check"
    );
}

#[test]
fn overpaying_breaks_the_budget() {
    let mut exercised = 0;
    for (k, instance) in instances().iter().enumerate() {
        let m = OverBudget(build(MechanismId::XosMain, instance, BuildOptions::default()).unwrap());
        let report =
            check_budget_ir_transfers(&m, instance.costs(), &SEEDS, &format!("xos-main/{k}"))
                .unwrap();
        let any_winner = SEEDS.iter().any(|&s| {
            !run(&m, instance.costs(), &CoinTape::new(s))
                .unwrap()
                .winners
                .is_empty()
        });
        if any_winner {
            assert!(report.count(ViolationKind::Budget) > 0, "{report:?}");
            exercised += 1;
        }
    }
    assert!(exercised > 0);
}

#[test]
fn doctored_outcomes_are_flagged() {
    let instance = Instance::new(
        Valuation::additive(vec![1.0, 2.0, 3.0]).unwrap(),
        vec![0.3, 0.3, 0.3],
        1.0,
    )
    .unwrap();
    let m = build(MechanismId::Additive, &instance, BuildOptions::default()).unwrap();
    let honest = run(m.as_ref(), instance.costs(), &CoinTape::new(1)).unwrap();
    assert!(check_outcome(&honest, instance.costs(), 1.0, "honest", 1).is_empty());

    let loser = (0..3).find(|&i| !honest.winners.contains(i));
    if let Some(i) = loser {
        let mut paid_loser = honest.clone();
        paid_loser.payments[i] = 0.01;
        let found = check_outcome(&paid_loser, instance.costs(), 1.0, "transfer", 1);
        assert!(found
            .iter()
            .any(|v| v.kind == ViolationKind::Transfer && v.agent == Some(i)));
    }

    let winner = honest.winners.iter().next().expect("someone wins");
    let mut underpaid = honest.clone();
    underpaid.payments[winner] = instance.costs()[winner] / 2.0;
    let found = check_outcome(&underpaid, instance.costs(), 1.0, "ir", 1);
    assert!(found
        .iter()
        .any(|v| v.kind == ViolationKind::IndividualRationality));
}

#[test]
fn posted_price_must_be_paid_exactly() {
    let instance = Instance::new(
        Valuation::additive(vec![1.0, 2.0, 3.0]).unwrap(),
        vec![0.3, 0.3, 0.3],
        1.0,
    )
    .unwrap();
    let m = build(MechanismId::XosMain, &instance, BuildOptions::default()).unwrap();
    // a tape whose first bit sends the run to the max-item branch
    let tape = (0..).map(CoinTape::new).find(|t| !t.bit(0)).unwrap();
    let mut outcome = run(m.as_ref(), instance.costs(), &tape).unwrap();
    let winner = outcome.winners.iter().next().expect("max item wins");
    assert_eq!(outcome.payments[winner], 1.0);
    outcome.payments[winner] = 0.9;
    let found = check_outcome(&outcome, instance.costs(), 1.0, "posted", 0);
    assert!(found.iter().any(|v| v.kind == ViolationKind::PostedPrice));
}
