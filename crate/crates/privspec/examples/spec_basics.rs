//! Build a specification from scratch, validate it, and round-trip it
//! through its file form.

use num_rational::BigRational;
use privspec::{
    make_domain, validate_spec, BudgetMap, DomainMode, DpSpecification, ExtReal, Flavor,
    InputPremetric, Multiverse, OutputDivergence,
};

fn main() {
    // All datasets of two binary records, e.g. two survey respondents.
    let domain = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
    println!("domain: {} datasets", domain.len());
    for id in domain.ids() {
        println!("  {id}: {}", domain.render_dataset(id));
    }

    // One universe covering everything, unit Hamming granularity, pure
    // worst-case-ratio guarantee, budget ln(3) ≈ 1.0986.
    let flavor = Flavor {
        multiverse: Multiverse::full(&domain, "everyone"),
        domain,
        premetric: InputPremetric::BoundedHamming,
        divergence: OutputDivergence::MaxDivergence,
    };
    let spec = DpSpecification {
        budget: BudgetMap::uniform(
            &flavor.multiverse,
            ExtReal::ln_of_rational(&BigRational::from_integer(3.into())).unwrap(),
        ),
        flavor,
    };

    let report = validate_spec(&spec);
    println!("validation: {report}");

    // The file form keeps rationals exact ("3/4", "ln(3)", "inf") and
    // re-enumerates the domain deterministically on load.
    let text = serde_json::to_string_pretty(&spec).unwrap();
    println!("{text}");
    let reloaded: DpSpecification = serde_json::from_str(&text).unwrap();
    assert_eq!(spec, reloaded);
    println!("round-trip: ok");
}
