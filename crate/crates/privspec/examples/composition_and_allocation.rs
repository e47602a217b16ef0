//! Budget accounting: compose two releases of one flavor, check the
//! composition bound empirically on the product mechanism, and divide the
//! total across projects.

use num_bigint::BigInt;
use num_rational::BigRational;
use privspec::accountant::check_composition_bound;
use privspec::{
    allocate, make_domain, product, randomized_response, tightest_epsilon, BudgetLedger,
    BudgetMap, DomainMode, ExtReal, Flavor, InputPremetric, Multiverse, OutputDivergence,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn main() {
    let domain = make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap();
    let flavor = Flavor {
        multiverse: Multiverse::full(&domain, "D"),
        domain: domain.clone(),
        premetric: InputPremetric::BoundedHamming,
        divergence: OutputDivergence::MaxDivergence,
    };
    let fingerprint = flavor.fingerprint();

    // Two independent releases: RR(3/4) worth ln 3, RR(2/3) worth ln 2.
    let ledger = BudgetLedger::new(fingerprint.clone())
        .compose(
            "morning release",
            &fingerprint,
            BudgetMap::uniform(&flavor.multiverse, ExtReal::ln_of_rational(&rat(3, 1)).unwrap()),
        )
        .unwrap()
        .compose(
            "evening release",
            &fingerprint,
            BudgetMap::uniform(&flavor.multiverse, ExtReal::ln_of_rational(&rat(2, 1)).unwrap()),
        )
        .unwrap();
    let total = ledger.total.get("D").unwrap();
    println!("composed total: {total} ≈ {:.6}", total.to_f64());

    // The verifier agrees: the joint mechanism costs exactly ln 6.
    let m1 = randomized_response(&domain, &rat(3, 4)).unwrap();
    let m2 = randomized_response(&domain, &rat(2, 3)).unwrap();
    let joint = product(&m1, &m2).unwrap();
    let eps = tightest_epsilon(&joint, &flavor).unwrap();
    println!("ε*(joint release): {}", eps.get("D").unwrap());

    let bound = check_composition_bound(&m1, &m2, &flavor).unwrap();
    for row in &bound.rows {
        println!(
            "universe {}: ε*(product) = {}, budget sum = {}, slack = {:.2e}{}",
            row.universe,
            row.product_epsilon,
            row.budget_sum,
            row.slack,
            if row.exact_equal { " (exact equality)" } else { "" }
        );
    }

    // Split the total 2:1 between two projects; shares recombine exactly.
    let shares = allocate(
        &ledger.total,
        &[("census tables".into(), rat(2, 1)), ("research file".into(), rat(1, 1))],
    )
    .unwrap();
    for (label, budget) in &shares {
        let v = budget.get("D").unwrap();
        println!("{label}: {v} ≈ {:.6}", v.to_f64());
    }
    let back = shares
        .iter()
        .fold(BudgetMap::new(), |acc, (_, b)| acc.plus(b));
    assert_eq!(back.get("D").unwrap(), total);
    println!("shares sum back to the total exactly");
}
