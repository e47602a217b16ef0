//! Invariants: release a total exactly, scope protection to its level sets,
//! and see precisely what the invariant leaks by construction.

use num_bigint::BigInt;
use num_rational::BigRational;
use privspec::invariants::invariant_margin_report;
use privspec::{
    exact_release, make_domain, partition_by_invariant, product, tightest_epsilon,
    verify_invariant_release, BudgetMap, DomainMode, DpSpecification, ExtReal, Flavor,
    InputPremetric, InvariantStatistic, Multiverse, OutputDivergence,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn main() {
    // Three households, each reporting 0 or 1 occupants of some group; the
    // jurisdiction total is published exactly, like a mandated population
    // count.
    let domain = make_domain(&["0", "1"], 3, DomainMode::FixedSize).unwrap();
    let total = |d: &privspec::DatasetDomain, id| {
        let s: u32 = d.dataset(id).unwrap().iter().sum();
        s.to_string()
    };
    let statistic = InvariantStatistic::from_fn(&domain, "total", total);
    let release = exact_release(&domain, total).unwrap();

    let partition = partition_by_invariant(&domain, &statistic).unwrap();
    println!("level sets of the exact total:");
    for u in &partition.universes {
        let members: Vec<String> = u.members.iter().map(|&m| domain.render_dataset(m)).collect();
        println!("  {}: {}", u.id, members.join(" "));
    }

    let full_flavor = Flavor {
        multiverse: Multiverse::full(&domain, "everyone"),
        domain: domain.clone(),
        premetric: InputPremetric::BoundedHamming,
        divergence: OutputDivergence::MaxDivergence,
    };

    // Unscoped, the exact release is hopeless: ε* = ∞.
    let eps = tightest_epsilon(&release, &full_flavor).unwrap();
    println!("ε* of the exact release over the full universe: {}", eps.get("everyone").unwrap());

    // Scoped to the invariant's multiverse it costs nothing.
    let base = DpSpecification {
        flavor: full_flavor.clone(),
        budget: BudgetMap::uniform(&full_flavor.multiverse, ExtReal::zero()),
    };
    let scoped = verify_invariant_release(&release, &statistic, &base).unwrap();
    println!(
        "scoped to the level sets: {} (ε* = 0 everywhere: {})",
        if scoped.satisfied { "satisfied" } else { "not satisfied" },
        scoped.per_universe_tightest.values().all(|v| v.is_zero()),
    );

    // Publishing the exact total next to a noisy bit costs only the noise.
    let noisy_first = privspec::geometric_count(
        &domain,
        |d, id| i64::from(d.dataset(id).unwrap()[0]),
        &rat(1, 3),
        0..=1,
    )
    .unwrap();
    let joint = product(&release, &noisy_first).unwrap();
    let base_ln3 = DpSpecification {
        flavor: full_flavor,
        budget: BudgetMap::uniform(
            &base.flavor.multiverse,
            ExtReal::ln_of_rational(&rat(3, 1)).unwrap(),
        ),
    };
    let result = verify_invariant_release(&joint, &statistic, &base_ln3).unwrap();
    println!(
        "exact total × noisy bit, scoped, at ε = ln(3): {}",
        if result.satisfied { "satisfied" } else { "not satisfied" }
    );

    // The margin report quantifies what the invariant gives away: across
    // level sets the rows are perfectly distinguishable.
    let margins = invariant_margin_report(&joint, &statistic).unwrap();
    for row in &margins.cross_universe_min {
        println!(
            "between {} and {}: minimum divergence {}",
            row.first, row.second, row.min_divergence
        );
    }
    for (u, v) in &margins.within_universe_max {
        println!("within {u}: worst divergence {v}");
    }
}
