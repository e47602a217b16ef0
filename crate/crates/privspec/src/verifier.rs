//! Exhaustive decision of whether a mechanism satisfies a specification.
//!
//! The check is literal: for every ordered pair of datasets inside every data
//! universe, the output divergence of the two kernel rows is compared against
//! budget × input distance. Quantifying over *ordered* pairs makes
//! asymmetric divergences and asymmetric premetrics well-defined without
//! extra axioms. Universes may overlap; each is checked independently.
//!
//! Conventions at the degenerate corners:
//!
//! * a pair at input distance 0 (other than a dataset with itself) forces the
//!   divergence to be exactly 0, otherwise no finite budget helps (ε* = ∞);
//! * `0 · ∞ = 0`: a zero budget constrains pairs at infinite distance, and an
//!   infinite budget does not excuse divergence on zero-distance pairs — the
//!   choice is flagged in the result notes whenever it bites;
//! * pairs at infinite input distance demand no budget; the tightest value is
//!   the infimum over satisfying budgets, which such a pair can render
//!   unattained (also noted).
//!
//! Numerical policy: "satisfied" is never reported due to rounding. Equality
//! cases resolve symbolically in the exact value domain; everything else is
//! decided with outward-rounded intervals, and an undecidable boundary counts
//! against satisfaction.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::invariants::{partition_by_invariant, InvariantStatistic};
use crate::mechanisms::Mechanism;
use crate::privacy_core::{
    validate_flavor, validate_spec, BudgetMap, DatasetId, DpSpecification, Flavor,
};
use crate::value::ExtReal;

/// The lexicographically first violating comparison, kept so the failure can
/// be reproduced: `lhs ≤ rhs` does not hold for this ordered pair.
#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub universe: String,
    pub x: DatasetId,
    pub x_prime: DatasetId,
    pub lhs: ExtReal,
    pub rhs: ExtReal,
}

/// Outcome of [`satisfies`]: the decision, the tightest budget the mechanism
/// would support per universe, and the first witness when the decision is
/// negative.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationResult {
    pub satisfied: bool,
    pub per_universe_tightest: BTreeMap<String, ExtReal>,
    pub witness: Option<Witness>,
    /// Convention flags raised during this verification (0·∞ products,
    /// infinite-distance pairs).
    pub notes: Vec<String>,
}

fn check_domain(mechanism: &Mechanism, flavor: &Flavor) -> Result<()> {
    if mechanism.domain() != &flavor.domain {
        return Err(Error::DomainMismatch(
            "mechanism and specification enumerate different dataset domains".into(),
        ));
    }
    Ok(())
}

/// Divergence-to-distance ratio; exact whenever the distance is rational.
fn divide_by_distance(lhs: &ExtReal, d: &ExtReal) -> ExtReal {
    match d.as_rational() {
        Some(r) => lhs.div_rational(r),
        None => {
            if lhs.is_infinite() {
                ExtReal::Infinity
            } else {
                let df = d.to_f64();
                let v = lhs.to_f64() / df;
                ExtReal::approx(v, (v.abs() + 1.0) * 1e-9)
            }
        }
    }
}

struct Sweep {
    tightest: BTreeMap<String, ExtReal>,
    witness: Option<Witness>,
    satisfied: bool,
    notes: Vec<String>,
}

/// One pass over every (universe, ordered pair): computes the tightest
/// supportable budget, and — when `budget` is given — the satisfaction
/// decision with its first witness.
fn sweep(mechanism: &Mechanism, flavor: &Flavor, budget: Option<&BudgetMap>) -> Result<Sweep> {
    let domain = &flavor.domain;
    let mut out = Sweep {
        tightest: BTreeMap::new(),
        witness: None,
        satisfied: true,
        notes: Vec::new(),
    };
    let mut saw_infinite_distance = false;
    let mut saw_zero_times_infinity = false;
    for universe in &flavor.multiverse.universes {
        let eps = budget.map(|b| {
            b.get(&universe.id)
                .cloned()
                .expect("validated budget covers every universe")
        });
        let mut sup = ExtReal::zero();
        for &x in &universe.members {
            for &y in &universe.members {
                if x == y {
                    continue;
                }
                let d = flavor.premetric.distance(domain, x, y)?;
                let lhs = flavor
                    .divergence
                    .evaluate(mechanism.row(x)?, mechanism.row(y)?)?;

                // Contribution to the tightest budget.
                let needed = if d.is_zero() {
                    if lhs.is_zero() {
                        ExtReal::zero()
                    } else {
                        ExtReal::Infinity
                    }
                } else if d.is_infinite() {
                    saw_infinite_distance = true;
                    ExtReal::zero()
                } else {
                    divide_by_distance(&lhs, &d)
                };
                if needed.gt_certain(&sup) {
                    sup = needed;
                }

                // Budget check, outward-rounded against satisfaction.
                if let Some(eps) = &eps {
                    if (eps.is_zero() && d.is_infinite()) || (eps.is_infinite() && d.is_zero()) {
                        saw_zero_times_infinity = true;
                    }
                    let rhs = eps.saturating_mul(&d);
                    if !lhs.le_certain(&rhs) {
                        out.satisfied = false;
                        if out.witness.is_none() {
                            out.witness = Some(Witness {
                                universe: universe.id.clone(),
                                x,
                                x_prime: y,
                                lhs: lhs.clone(),
                                rhs,
                            });
                        }
                    }
                }
            }
        }
        out.tightest.entry(universe.id.clone()).or_insert(sup);
    }
    if saw_zero_times_infinity {
        out.notes.push(
            "a zero budget or zero distance met an infinite counterpart; the product 0·inf is \
             taken as 0, so the pair is constrained to divergence 0"
                .into(),
        );
    }
    if saw_infinite_distance {
        out.notes.push(
            "some pairs lie at infinite input distance; they require no budget, and the tightest \
             value is an infimum that such a pair can leave unattained"
                .into(),
        );
    }
    Ok(out)
}

/// Tightest per-universe budget the mechanism supports: the supremum over
/// ordered in-universe pairs of divergence / distance, with zero-distance
/// pairs demanding divergence 0 on pain of ε* = ∞.
///
/// For every finite entry, using it as the budget satisfies the
/// specification and no smaller value at that universe does — except in two
/// corners: the flagged infimum case for infinite-distance pairs, and
/// divergences whose values are only known approximately (Rényi at
/// non-integer orders), where a boundary equality cannot be certified and
/// the satisfaction check conservatively rejects it. Every exact-valued
/// divergence path (max, smoothed-max, total variation, integer Rényi
/// orders) certifies its own boundary symbolically.
pub fn tightest_epsilon(
    mechanism: &Mechanism,
    flavor: &Flavor,
) -> Result<BTreeMap<String, ExtReal>> {
    Ok(tightest_epsilon_with_notes(mechanism, flavor)?.0)
}

/// [`tightest_epsilon`] plus the convention flags raised along the way, for
/// reports that must surface them.
pub fn tightest_epsilon_with_notes(
    mechanism: &Mechanism,
    flavor: &Flavor,
) -> Result<(BTreeMap<String, ExtReal>, Vec<String>)> {
    let report = validate_flavor(flavor);
    if !report.is_pass() {
        return Err(Error::InvalidSpec(report.to_string()));
    }
    check_domain(mechanism, flavor)?;
    let sweep = sweep(mechanism, flavor, None)?;
    Ok((sweep.tightest, sweep.notes))
}

/// Decide whether the mechanism satisfies the specification.
pub fn satisfies(mechanism: &Mechanism, spec: &DpSpecification) -> Result<VerificationResult> {
    let report = validate_spec(spec);
    if !report.is_pass() {
        return Err(Error::InvalidSpec(report.to_string()));
    }
    check_domain(mechanism, &spec.flavor)?;
    let sweep = sweep(mechanism, &spec.flavor, Some(&spec.budget))?;
    Ok(VerificationResult {
        satisfied: sweep.satisfied,
        per_universe_tightest: sweep.tightest,
        witness: sweep.witness,
        notes: sweep.notes,
    })
}

/// Convenience wrapper for invariant releases: replace the multiverse by the
/// partition induced by `statistic` and run [`satisfies`] there. Cross-level
/// pairs are never examined by construction.
///
/// The budget is re-keyed: an induced universe keeps the base entry with the
/// same id when one exists; otherwise, when the base budget is uniform, that
/// uniform value applies everywhere; otherwise the call is rejected.
pub fn verify_invariant_release(
    mechanism: &Mechanism,
    statistic: &InvariantStatistic,
    base_spec: &DpSpecification,
) -> Result<VerificationResult> {
    let partition = partition_by_invariant(&base_spec.flavor.domain, statistic)?;
    let mut uniform: Option<&ExtReal> = None;
    let mut is_uniform = true;
    for v in base_spec.budget.per_universe.values() {
        match uniform {
            None => uniform = Some(v),
            Some(u) if u == v => {}
            Some(_) => is_uniform = false,
        }
    }
    let mut budget = BudgetMap::new();
    for u in &partition.universes {
        let value = match base_spec.budget.get(&u.id) {
            Some(v) => v.clone(),
            None if is_uniform && uniform.is_some() => uniform.unwrap().clone(),
            _ => {
                return Err(Error::InvalidSpec(format!(
                    "cannot re-key budget for induced universe {:?}: base budget is not uniform \
                     and has no entry with that id",
                    u.id
                )))
            }
        };
        budget = budget.set(u.id.clone(), value);
    }
    let spec = DpSpecification {
        flavor: Flavor {
            domain: base_spec.flavor.domain.clone(),
            multiverse: partition,
            premetric: base_spec.flavor.premetric.clone(),
            divergence: base_spec.flavor.divergence.clone(),
        },
        budget,
    };
    satisfies(mechanism, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::OutputDivergence;
    use crate::mechanisms::{
        exact_release, kernel_from_document, mechanism_to_document, product, randomized_response,
    };
    use crate::privacy_core::{
        make_domain, DataUniverse, DomainMode, InputPremetric, Multiverse,
    };
    use crate::value::{ratio_to_f64, ValueCmp};
    use num_bigint::BigInt;
    use num_rational::BigRational;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn rr_flavor() -> Flavor {
        let domain = make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap();
        let multiverse = Multiverse::full(&domain, "D");
        Flavor {
            domain,
            multiverse,
            premetric: InputPremetric::BoundedHamming,
            divergence: OutputDivergence::MaxDivergence,
        }
    }

    #[test]
    fn randomized_response_tightest_is_ln3() {
        let flavor = rr_flavor();
        let m = randomized_response(&flavor.domain, &rat(3, 4)).unwrap();
        let tight = tightest_epsilon(&m, &flavor).unwrap();
        let expected = ExtReal::ln_of_rational(&rat(3, 1)).unwrap();
        assert_eq!(tight.get("D").unwrap(), &expected);
        assert_eq!(tight.get("D").unwrap().to_string(), "ln(3)");
    }

    #[test]
    fn keep_prob_nine_tenths_gives_ln9() {
        let flavor = rr_flavor();
        let m = randomized_response(&flavor.domain, &rat(9, 10)).unwrap();
        let tight = tightest_epsilon(&m, &flavor).unwrap();
        assert_eq!(
            tight.get("D").unwrap(),
            &ExtReal::ln_of_rational(&rat(9, 1)).unwrap()
        );
    }

    #[test]
    fn constant_mechanism_is_free() {
        let flavor = rr_flavor();
        let m = exact_release(&flavor.domain, |_, _| "c".into()).unwrap();
        let tight = tightest_epsilon(&m, &flavor).unwrap();
        assert!(tight.get("D").unwrap().is_zero());
    }

    #[test]
    fn geometric_count_unit_neighbors_cost_ln_inverse_decay() {
        // Over unit-Hamming neighbors whose counts differ by at most one,
        // a truncated geometric row pair has worst ratio 1/decay.
        let flavor = rr_flavor();
        let m = crate::mechanisms::geometric_count(
            &flavor.domain,
            |d, id| i64::from(d.dataset(id).unwrap()[0]),
            &rat(1, 3),
            0..=1,
        )
        .unwrap();
        let tight = tightest_epsilon(&m, &flavor).unwrap();
        assert_eq!(
            tight.get("D").unwrap(),
            &ExtReal::ln_of_rational(&rat(3, 1)).unwrap()
        );
    }

    #[test]
    fn exact_release_on_full_universe_is_infinite() {
        let domain = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        let flavor = Flavor {
            multiverse: Multiverse::full(&domain, "D"),
            domain: domain.clone(),
            premetric: InputPremetric::BoundedHamming,
            divergence: OutputDivergence::MaxDivergence,
        };
        let m = exact_release(&domain, |d, id| {
            let s: u32 = d.dataset(id).unwrap().iter().sum();
            (s % 2).to_string()
        })
        .unwrap();
        assert!(tightest_epsilon(&m, &flavor).unwrap().get("D").unwrap().is_infinite());
    }

    #[test]
    fn satisfies_at_the_exact_boundary() {
        let flavor = rr_flavor();
        let m = randomized_response(&flavor.domain, &rat(3, 4)).unwrap();
        let spec = DpSpecification {
            budget: BudgetMap::uniform(
                &flavor.multiverse,
                ExtReal::ln_of_rational(&rat(3, 1)).unwrap(),
            ),
            flavor,
        };
        let result = satisfies(&m, &spec).unwrap();
        assert!(result.satisfied, "equality case must verify: {result:?}");
        assert!(result.witness.is_none());
    }

    #[test]
    fn fails_below_ln3_with_first_witness() {
        let flavor = rr_flavor();
        let m = randomized_response(&flavor.domain, &rat(3, 4)).unwrap();
        let spec = DpSpecification {
            budget: BudgetMap::uniform(&flavor.multiverse, ExtReal::from_integer(1)),
            flavor,
        };
        let result = satisfies(&m, &spec).unwrap();
        assert!(!result.satisfied);
        let w = result.witness.expect("witness on failure");
        assert_eq!((w.universe.as_str(), w.x, w.x_prime), ("D", DatasetId(0), DatasetId(1)));
        assert!((w.lhs.to_f64() - 3f64.ln()).abs() < 1e-9);
        // The witness reproduces lhs ≰ rhs, both as stored and recomputed
        // from scratch out of the mechanism and specification.
        assert!(!w.lhs.le_certain(&w.rhs));
        let lhs = spec
            .flavor
            .divergence
            .evaluate(m.row(w.x).unwrap(), m.row(w.x_prime).unwrap())
            .unwrap();
        let d = spec
            .flavor
            .premetric
            .distance(&spec.flavor.domain, w.x, w.x_prime)
            .unwrap();
        let rhs = spec.budget.get(&w.universe).unwrap().saturating_mul(&d);
        assert_eq!(lhs, w.lhs);
        assert_eq!(rhs, w.rhs);
        assert!(!lhs.le_certain(&rhs));
    }

    #[test]
    fn infinite_budget_is_unconstrained() {
        let domain = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        let flavor = Flavor {
            multiverse: Multiverse::full(&domain, "D"),
            domain: domain.clone(),
            premetric: InputPremetric::BoundedHamming,
            divergence: OutputDivergence::MaxDivergence,
        };
        let m = exact_release(&domain, |_, id| id.to_string()).unwrap();
        let spec = DpSpecification {
            budget: BudgetMap::uniform(&flavor.multiverse, ExtReal::infinity()),
            flavor,
        };
        assert!(satisfies(&m, &spec).unwrap().satisfied);
    }

    #[test]
    fn invariant_release_scopes_protection() {
        let domain = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        let statistic = InvariantStatistic::from_fn(&domain, "sum", |d, id| {
            let s: u32 = d.dataset(id).unwrap().iter().sum();
            s.to_string()
        });
        let m = exact_release(&domain, |d, id| {
            let s: u32 = d.dataset(id).unwrap().iter().sum();
            s.to_string()
        })
        .unwrap();
        let base = DpSpecification {
            flavor: Flavor {
                multiverse: Multiverse::full(&domain, "D"),
                domain: domain.clone(),
                premetric: InputPremetric::BoundedHamming,
                divergence: OutputDivergence::MaxDivergence,
            },
            budget: BudgetMap::new().set("D", ExtReal::zero()),
        };
        // Scoped to the invariant's level sets: satisfied with ε* = 0.
        let scoped = verify_invariant_release(&m, &statistic, &base).unwrap();
        assert!(scoped.satisfied);
        assert!(scoped.per_universe_tightest.values().all(|v| v.is_zero()));
        // Over the single full universe the same release is hopeless.
        let full = satisfies(&m, &base).unwrap();
        assert!(!full.satisfied);
        assert!(full.per_universe_tightest.get("D").unwrap().is_infinite());
    }

    #[test]
    fn invariant_plus_noise_costs_the_noise() {
        let domain = make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap();
        let statistic = InvariantStatistic::from_fn(&domain, "k", |_, _| "all".into());
        let release = exact_release(&domain, |_, _| "all".into()).unwrap();
        let rr = randomized_response(&domain, &rat(3, 4)).unwrap();
        let joint = product(&release, &rr).unwrap();
        let base = DpSpecification {
            flavor: Flavor {
                multiverse: Multiverse::full(&domain, "D"),
                domain: domain.clone(),
                premetric: InputPremetric::BoundedHamming,
                divergence: OutputDivergence::MaxDivergence,
            },
            budget: BudgetMap::new().set("D", ExtReal::ln_of_rational(&rat(3, 1)).unwrap()),
        };
        let result = verify_invariant_release(&joint, &statistic, &base).unwrap();
        assert!(result.satisfied);
        assert_eq!(
            result.per_universe_tightest.get("k=all").unwrap(),
            &ExtReal::ln_of_rational(&rat(3, 1)).unwrap()
        );
    }

    #[test]
    fn enlarging_a_universe_never_decreases_tightest() {
        let domain = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        let m = crate::mechanisms::geometric_count(
            &domain,
            |d, id| d.dataset(id).unwrap().iter().sum::<u32>() as i64,
            &rat(1, 3),
            0..=2,
        )
        .unwrap();
        let small = Flavor {
            multiverse: Multiverse::new(vec![DataUniverse::new(
                "U",
                vec![DatasetId(0), DatasetId(1)],
            )]),
            domain: domain.clone(),
            premetric: InputPremetric::BoundedHamming,
            divergence: OutputDivergence::MaxDivergence,
        };
        let large = Flavor {
            multiverse: Multiverse::new(vec![DataUniverse::new(
                "U",
                vec![DatasetId(0), DatasetId(1), DatasetId(3)],
            )]),
            ..small.clone()
        };
        let a = tightest_epsilon(&m, &small).unwrap();
        let b = tightest_epsilon(&m, &large).unwrap();
        assert!(a.get("U").unwrap().le_certain(b.get("U").unwrap()));
    }

    #[test]
    fn zero_probability_outputs_do_not_change_tightest() {
        let flavor = rr_flavor();
        let m = randomized_response(&flavor.domain, &rat(3, 4)).unwrap();
        let mut doc = mechanism_to_document(&m);
        doc.outputs.push("ghost".into());
        let padded = kernel_from_document(&flavor.domain, &doc).unwrap();
        assert_eq!(
            tightest_epsilon(&m, &flavor).unwrap(),
            tightest_epsilon(&padded, &flavor).unwrap()
        );
    }

    #[test]
    fn doubling_distances_halves_tightest_exactly() {
        let m = randomized_response(
            &make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap(),
            &rat(3, 4),
        )
        .unwrap();
        let rr_domain = m.domain().clone();
        let unit = InputPremetric::ExplicitMatrix {
            matrix: vec![
                vec![ExtReal::zero(), ExtReal::from_integer(1)],
                vec![ExtReal::from_integer(1), ExtReal::zero()],
            ],
        };
        let doubled = InputPremetric::ExplicitMatrix {
            matrix: vec![
                vec![ExtReal::zero(), ExtReal::from_integer(2)],
                vec![ExtReal::from_integer(2), ExtReal::zero()],
            ],
        };
        let mk = |pm: InputPremetric| Flavor {
            multiverse: Multiverse::full(&rr_domain, "D"),
            domain: rr_domain.clone(),
            premetric: pm,
            divergence: OutputDivergence::MaxDivergence,
        };
        let e1 = tightest_epsilon(&m, &mk(unit)).unwrap();
        let e2 = tightest_epsilon(&m, &mk(doubled)).unwrap();
        assert_eq!(
            e2.get("D").unwrap(),
            &e1.get("D").unwrap().scale(&rat(1, 2))
        );
    }

    #[test]
    fn refining_the_invariant_never_increases_tightest() {
        // sum refines parity: equal sums imply equal parities. Every level
        // set of sum sits inside one level set of parity, so the scoped
        // tightest budget can only shrink.
        let domain = make_domain(&["0", "1"], 3, DomainMode::FixedSize).unwrap();
        let coarse = InvariantStatistic::from_fn(&domain, "parity", |d, id| {
            let s: u32 = d.dataset(id).unwrap().iter().sum();
            (s % 2).to_string()
        });
        let fine = InvariantStatistic::from_fn(&domain, "sum", |d, id| {
            let s: u32 = d.dataset(id).unwrap().iter().sum();
            s.to_string()
        });
        let m = crate::mechanisms::geometric_count(
            &domain,
            |d, id| d.dataset(id).unwrap().iter().sum::<u32>() as i64,
            &rat(1, 3),
            0..=3,
        )
        .unwrap();
        let flavor_for = |mv| Flavor {
            multiverse: mv,
            domain: domain.clone(),
            premetric: InputPremetric::BoundedHamming,
            divergence: OutputDivergence::MaxDivergence,
        };
        let coarse_mv = partition_by_invariant(&domain, &coarse).unwrap();
        let fine_mv = partition_by_invariant(&domain, &fine).unwrap();
        let coarse_eps = tightest_epsilon(&m, &flavor_for(coarse_mv.clone())).unwrap();
        let fine_eps = tightest_epsilon(&m, &flavor_for(fine_mv.clone())).unwrap();
        for fine_u in &fine_mv.universes {
            let parent = coarse_mv
                .universes
                .iter()
                .find(|c| fine_u.members.iter().all(|m| c.members.contains(m)))
                .expect("refinement nests level sets");
            let f = fine_eps.get(&fine_u.id).unwrap();
            let c = coarse_eps.get(&parent.id).unwrap();
            assert!(f.le_certain(c), "{} > {} for {}", f.to_f64(), c.to_f64(), fine_u.id);
        }
    }

    #[test]
    fn zero_distance_pair_with_divergence_is_hopeless() {
        let domain = make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap();
        let m = randomized_response(&domain, &rat(3, 4)).unwrap();
        let zero_matrix = InputPremetric::ExplicitMatrix {
            matrix: vec![
                vec![ExtReal::zero(), ExtReal::zero()],
                vec![ExtReal::zero(), ExtReal::zero()],
            ],
        };
        let flavor = Flavor {
            multiverse: Multiverse::full(&domain, "D"),
            domain: domain.clone(),
            premetric: zero_matrix,
            divergence: OutputDivergence::MaxDivergence,
        };
        let tight = tightest_epsilon(&m, &flavor).unwrap();
        assert!(tight.get("D").unwrap().is_infinite());
        // Even an infinite budget does not satisfy: 0·∞ = 0.
        let spec = DpSpecification {
            budget: BudgetMap::uniform(&flavor.multiverse, ExtReal::infinity()),
            flavor,
        };
        let result = satisfies(&m, &spec).unwrap();
        assert!(!result.satisfied);
        assert!(!result.notes.is_empty());
    }

    // ---- randomized tightness and oracle agreement ----

    fn arb_mechanism() -> impl Strategy<Value = Mechanism> {
        (1usize..=2, 2usize..=5).prop_flat_map(|(bits, outputs)| {
            let domain = make_domain(&["0", "1"], bits, DomainMode::FixedSize).unwrap();
            let n = domain.len();
            proptest::collection::vec(proptest::collection::vec(0u32..=12, outputs), n).prop_map(
                move |rows| {
                    let dists = rows
                        .into_iter()
                        .map(|mut w| {
                            if w.iter().all(|&x| x == 0) {
                                w[0] = 1;
                            }
                            let total: u32 = w.iter().sum();
                            crate::divergences::Distribution::new(
                                w.into_iter().map(|x| rat(x as i64, total as i64)).collect(),
                            )
                            .unwrap()
                        })
                        .collect();
                    Mechanism::new(
                        domain.clone(),
                        (0..outputs).map(|i| i.to_string()).collect(),
                        dists,
                    )
                    .unwrap()
                },
            )
        })
    }

    fn full_flavor(m: &Mechanism) -> Flavor {
        Flavor {
            multiverse: Multiverse::full(m.domain(), "D"),
            domain: m.domain().clone(),
            premetric: InputPremetric::BoundedHamming,
            divergence: OutputDivergence::MaxDivergence,
        }
    }

    /// Independent oracle: floating-point loop over ordered pairs.
    fn brute_force_epsilon(m: &Mechanism) -> f64 {
        let domain = m.domain();
        let mut sup: f64 = 0.0;
        for x in domain.ids() {
            for y in domain.ids() {
                if x == y {
                    continue;
                }
                let dx = domain.dataset(x).unwrap();
                let dy = domain.dataset(y).unwrap();
                let dist = dx.iter().zip(dy).filter(|(a, b)| a != b).count() as f64;
                let px = m.row(x).unwrap().probs();
                let py = m.row(y).unwrap().probs();
                let mut worst: f64 = 0.0;
                for (a, b) in px.iter().zip(py.iter()) {
                    let (af, bf) = (ratio_to_f64(a), ratio_to_f64(b));
                    if af > 0.0 {
                        if bf == 0.0 {
                            worst = f64::INFINITY;
                        } else {
                            worst = worst.max((af / bf).ln());
                        }
                    }
                }
                sup = sup.max(worst / dist);
            }
        }
        sup
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn tightest_budget_is_tight(m in arb_mechanism()) {
            let flavor = full_flavor(&m);
            let tight = tightest_epsilon(&m, &flavor).unwrap();
            let eps = tight.get("D").unwrap().clone();

            let spec = DpSpecification {
                budget: BudgetMap::uniform(&flavor.multiverse, eps.clone()),
                flavor: flavor.clone(),
            };
            prop_assert!(satisfies(&m, &spec).unwrap().satisfied);

            if !eps.is_infinite() && !eps.is_zero() {
                let lowered = ExtReal::from_f64_exact((eps.to_f64() - 1e-6).max(0.0)).unwrap();
                let lowered_spec = DpSpecification {
                    budget: BudgetMap::uniform(&flavor.multiverse, lowered),
                    flavor: flavor.clone(),
                };
                prop_assert!(!satisfies(&m, &lowered_spec).unwrap().satisfied);
            }
        }

        #[test]
        fn agrees_with_float_oracle(m in arb_mechanism()) {
            let flavor = full_flavor(&m);
            let tight = tightest_epsilon(&m, &flavor).unwrap();
            let ours = tight.get("D").unwrap();
            let oracle = brute_force_epsilon(&m);
            if oracle.is_infinite() {
                prop_assert!(ours.is_infinite());
            } else {
                prop_assert!((ours.to_f64() - oracle).abs() <= 1e-9,
                    "ours {} vs oracle {}", ours.to_f64(), oracle);
            }
        }

        #[test]
        fn sup_selection_is_deterministic(m in arb_mechanism()) {
            let flavor = full_flavor(&m);
            let a = tightest_epsilon(&m, &flavor).unwrap();
            let b = tightest_epsilon(&m, &flavor).unwrap();
            prop_assert_eq!(a.get("D").unwrap().compare(b.get("D").unwrap()), ValueCmp::Equal);
        }
    }
}
