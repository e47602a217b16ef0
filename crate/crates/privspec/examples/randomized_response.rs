//! Verify binary randomized response: the tightest supportable budget is
//! exactly ln(keep/(1−keep)), met with equality.

use num_bigint::BigInt;
use num_rational::BigRational;
use privspec::{
    make_domain, randomized_response, satisfies, tightest_epsilon, BudgetMap, DomainMode,
    DpSpecification, ExtReal, Flavor, InputPremetric, Multiverse, OutputDivergence,
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

    // Report the true bit with probability 3/4.
    let mechanism = randomized_response(&domain, &rat(3, 4)).unwrap();
    for id in domain.ids() {
        let row: Vec<String> = mechanism
            .row(id)
            .unwrap()
            .probs()
            .iter()
            .map(privspec::value::format_rational)
            .collect();
        println!("row {}: ({})", domain.render_dataset(id), row.join(", "));
    }

    let tight = tightest_epsilon(&mechanism, &flavor).unwrap();
    let eps = tight.get("D").unwrap();
    println!("tightest budget: {eps} ≈ {:.6}", eps.to_f64());

    // Satisfied with equality at ln 3…
    let at_boundary = DpSpecification {
        budget: BudgetMap::uniform(&flavor.multiverse, eps.clone()),
        flavor: flavor.clone(),
    };
    println!(
        "at ε = {eps}: {}",
        if satisfies(&mechanism, &at_boundary).unwrap().satisfied {
            "satisfied"
        } else {
            "not satisfied"
        }
    );

    // …but not at ε = 1 (< ln 3), and the verifier says why.
    let below = DpSpecification {
        budget: BudgetMap::uniform(&flavor.multiverse, ExtReal::from_integer(1)),
        flavor,
    };
    let result = satisfies(&mechanism, &below).unwrap();
    println!("at ε = 1: {}", if result.satisfied { "satisfied" } else { "not satisfied" });
    if let Some(w) = result.witness {
        println!(
            "  witness: pair {} → {} has divergence {} > allowance {}",
            w.x, w.x_prime, w.lhs, w.rhs
        );
    }
}
