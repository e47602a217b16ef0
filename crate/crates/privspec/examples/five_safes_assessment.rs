//! Situate a verified guarantee inside a Five Safes assessment: start from a
//! reference regime, attach verifier output as evidence on data and outputs,
//! read the regime as contextual-integrity norms, and render the report.

use num_bigint::BigInt;
use num_rational::BigRational;
use privspec::{
    assess, attach_dp, make_domain, map_to_ci, preset, randomized_response, satisfies, BudgetMap,
    DomainMode, DpSpecification, ExtReal, Flavor, InputPremetric, Multiverse, OutputDivergence,
    PresetKind,
};

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn main() {
    // The reference paradigms and their contextual-integrity reading.
    for kind in PresetKind::ALL {
        for regime in preset(kind) {
            let ci = map_to_ci(&regime).unwrap();
            println!("{:<48} flow {:<20} recipient: {}", regime.name, regime.flow.to_string(), ci.recipient);
        }
    }
    println!();

    // Verify randomized response at its exact boundary…
    let domain = make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap();
    let flavor = Flavor {
        multiverse: Multiverse::full(&domain, "respondents"),
        domain: domain.clone(),
        premetric: InputPremetric::BoundedHamming,
        divergence: OutputDivergence::MaxDivergence,
    };
    let spec = DpSpecification {
        budget: BudgetMap::uniform(
            &flavor.multiverse,
            ExtReal::ln_of_rational(&rat(3, 1)).unwrap(),
        ),
        flavor,
    };
    let mechanism = randomized_response(&domain, &rat(3, 4)).unwrap();
    let result = satisfies(&mechanism, &spec).unwrap();

    // …and attach the outcome to the open-data regime. Only the data and
    // outputs dimensions gain evidence; people, projects and settings are
    // untouched, and the two caveats ride along.
    let regime = preset(PresetKind::OpenData).remove(0);
    let with_evidence = attach_dp(&regime, &result, spec.flavor.fingerprint()).unwrap();
    let report = assess(&with_evidence).unwrap();
    println!("{report}");
}
