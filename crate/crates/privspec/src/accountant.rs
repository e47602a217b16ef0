//! Budget arithmetic: composing protection-loss budgets within one flavor
//! and dividing a total across projects.
//!
//! Composition is only meaningful between guarantees of the same flavor —
//! same domain, multiverse, premetric and divergence. Cross-flavor
//! composition is refused outright rather than approximated. Within a
//! flavor, budgets add per universe (basic composition); the claim is checked
//! empirically on product mechanisms by [`check_composition_bound`] rather
//! than assumed in any stronger form.

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{product, Mechanism};
use crate::privacy_core::{BudgetMap, Flavor, FlavorFingerprint};
use crate::value::{ExtReal, ValueCmp};
use crate::verifier::tightest_epsilon;

/// One composed guarantee: a label and its per-universe budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub budget: BudgetMap,
}

/// An append-only ledger of same-flavor budgets with their running total.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub fingerprint: FlavorFingerprint,
    pub entries: Vec<LedgerEntry>,
    pub total: BudgetMap,
}

impl BudgetLedger {
    /// An empty ledger for the given flavor; totals start at zero on every
    /// universe the fingerprint lists.
    pub fn new(fingerprint: FlavorFingerprint) -> Self {
        let mut total = BudgetMap::new();
        for (id, _) in &fingerprint.universes {
            total = total.set(id.clone(), ExtReal::zero());
        }
        BudgetLedger {
            fingerprint,
            entries: Vec::new(),
            total,
        }
    }

    /// Append a budget of the same flavor, returning the extended ledger.
    /// Budgets of a different flavor are refused, mirroring the fact that
    /// only formal guarantees of one flavor compose.
    pub fn compose(
        &self,
        label: impl Into<String>,
        fingerprint: &FlavorFingerprint,
        budget: BudgetMap,
    ) -> Result<BudgetLedger> {
        if fingerprint != &self.fingerprint {
            return Err(Error::CompositionRefused(describe_mismatch(
                &self.fingerprint,
                fingerprint,
            )));
        }
        for (id, _) in &self.fingerprint.universes {
            if budget.get(id).is_none() {
                return Err(Error::CompositionRefused(format!(
                    "budget has no entry for universe {id:?}"
                )));
            }
        }
        let mut out = self.clone();
        out.total = out.total.plus(&budget);
        out.entries.push(LedgerEntry {
            label: label.into(),
            budget,
        });
        Ok(out)
    }
}

fn describe_mismatch(a: &FlavorFingerprint, b: &FlavorFingerprint) -> String {
    if a.divergence != b.divergence {
        format!(
            "flavors differ in output divergence ({} vs {})",
            a.divergence, b.divergence
        )
    } else if a.premetric != b.premetric {
        "flavors differ in input premetric".into()
    } else if a.universes != b.universes {
        "flavors differ in multiverse".into()
    } else {
        "flavors differ in dataset domain".into()
    }
}

/// Divide a total budget across projects in proportion to nonnegative
/// weights. Shares are exact rationals, so the per-universe shares sum back
/// to the total exactly; an infinite total allocates infinity to every
/// positively weighted project (and zero to zero-weight ones).
pub fn allocate(
    total: &BudgetMap,
    weights: &[(String, BigRational)],
) -> Result<Vec<(String, BudgetMap)>> {
    if weights.is_empty() {
        return Err(Error::Parameter("no projects to allocate to".into()));
    }
    let mut sum = BigRational::zero();
    for (label, w) in weights {
        if w.is_negative() {
            return Err(Error::Parameter(format!(
                "weight for {label:?} is negative"
            )));
        }
        sum += w;
    }
    if sum.is_zero() {
        return Err(Error::Parameter("weights must not all be zero".into()));
    }
    Ok(weights
        .iter()
        .map(|(label, w)| (label.clone(), total.scale(&(w / &sum))))
        .collect())
}

/// Per-universe comparison of ε*(product(M1, M2)) against ε*(M1) + ε*(M2).
#[derive(Clone, Debug, Serialize)]
pub struct CompositionRow {
    pub universe: String,
    pub product_epsilon: ExtReal,
    pub budget_sum: ExtReal,
    /// budget_sum − product_epsilon in floating point (0 for ∞ = ∞).
    pub slack: f64,
    pub exact_equal: bool,
}

/// Empirical composition check; informational.
#[derive(Clone, Debug, Serialize)]
pub struct CompositionReport {
    pub rows: Vec<CompositionRow>,
    pub note: Option<String>,
}

/// Check ε*(product(M1, M2)) ≤ ε*(M1) + ε*(M2) per universe, via the
/// verifier. Only the worst-case log-ratio flavor carries this additivity
/// claim; for other divergences the question is surfaced in the report note
/// instead of being answered.
pub fn check_composition_bound(
    m1: &Mechanism,
    m2: &Mechanism,
    flavor: &Flavor,
) -> Result<CompositionReport> {
    if !matches!(
        flavor.divergence,
        crate::divergences::OutputDivergence::MaxDivergence
    ) {
        return Ok(CompositionReport {
            rows: Vec::new(),
            note: Some(format!(
                "additive composition is only checked for the max divergence; whether {} budgets \
                 compose additively is left open and not asserted",
                flavor.divergence.describe()
            )),
        });
    }
    let joint = product(m1, m2)?;
    let e1 = tightest_epsilon(m1, flavor)?;
    let e2 = tightest_epsilon(m2, flavor)?;
    let ep = tightest_epsilon(&joint, flavor)?;
    let mut rows = Vec::new();
    for universe in &flavor.multiverse.universes {
        let a = e1.get(&universe.id).expect("verified");
        let b = e2.get(&universe.id).expect("verified");
        let p = ep.get(&universe.id).expect("verified");
        let sum = a.plus(b);
        let exact_equal = matches!(p.compare(&sum), ValueCmp::Equal);
        let slack = if p.is_infinite() && sum.is_infinite() {
            0.0
        } else {
            sum.to_f64() - p.to_f64()
        };
        rows.push(CompositionRow {
            universe: universe.id.clone(),
            product_epsilon: p.clone(),
            budget_sum: sum,
            slack,
            exact_equal,
        });
    }
    Ok(CompositionReport { rows, note: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::OutputDivergence;
    use crate::mechanisms::{exact_release, randomized_response};
    use crate::privacy_core::{make_domain, DomainMode, InputPremetric, Multiverse};
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn ln(n: i64) -> ExtReal {
        ExtReal::ln_of_rational(&rat(n, 1)).unwrap()
    }

    fn rr_flavor() -> Flavor {
        let domain = make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap();
        Flavor {
            multiverse: Multiverse::full(&domain, "D"),
            domain,
            premetric: InputPremetric::BoundedHamming,
            divergence: OutputDivergence::MaxDivergence,
        }
    }

    #[test]
    fn composing_ln3_and_ln2_totals_ln6() {
        let flavor = rr_flavor();
        let fp = flavor.fingerprint();
        let ledger = BudgetLedger::new(fp.clone())
            .compose("first", &fp, BudgetMap::uniform(&flavor.multiverse, ln(3)))
            .unwrap()
            .compose("second", &fp, BudgetMap::uniform(&flavor.multiverse, ln(2)))
            .unwrap();
        assert_eq!(ledger.total.get("D").unwrap(), &ln(6));

        // Cross-check against the verifier on the product mechanism.
        let m1 = randomized_response(&flavor.domain, &rat(3, 4)).unwrap();
        let m2 = randomized_response(&flavor.domain, &rat(2, 3)).unwrap();
        let joint = product(&m1, &m2).unwrap();
        let tight = tightest_epsilon(&joint, &flavor).unwrap();
        assert_eq!(tight.get("D").unwrap(), ledger.total.get("D").unwrap());
    }

    #[test]
    fn zero_budget_is_identity_and_infinity_saturates() {
        let flavor = rr_flavor();
        let fp = flavor.fingerprint();
        let eps = BudgetMap::uniform(&flavor.multiverse, ln(3));
        let with_zero = BudgetLedger::new(fp.clone())
            .compose("eps", &fp, eps.clone())
            .unwrap()
            .compose("zero", &fp, BudgetMap::uniform(&flavor.multiverse, ExtReal::zero()))
            .unwrap();
        assert_eq!(with_zero.total.get("D").unwrap(), &ln(3));

        let with_inf = with_zero
            .compose("inf", &fp, BudgetMap::uniform(&flavor.multiverse, ExtReal::infinity()))
            .unwrap();
        assert!(with_inf.total.get("D").unwrap().is_infinite());
    }

    #[test]
    fn cross_flavor_composition_is_refused() {
        let flavor = rr_flavor();
        let mut other = flavor.clone();
        other.divergence = OutputDivergence::Renyi { alpha: rat(2, 1) };
        let err = BudgetLedger::new(flavor.fingerprint())
            .compose(
                "renyi",
                &other.fingerprint(),
                BudgetMap::uniform(&flavor.multiverse, ln(3)),
            )
            .unwrap_err();
        assert!(matches!(err, Error::CompositionRefused(_)));
        assert!(err.to_string().contains("divergence"));
    }

    #[test]
    fn allocation_is_proportional_and_exact() {
        let flavor = rr_flavor();
        // Even split of ln 6.
        let total = BudgetMap::uniform(&flavor.multiverse, ln(6));
        let parts = allocate(
            &total,
            &[("a".into(), rat(1, 1)), ("b".into(), rat(1, 1))],
        )
        .unwrap();
        assert_eq!(parts[0].1.get("D").unwrap(), &ln(6).scale(&rat(1, 2)));
        let recombined = parts[0].1.plus(&parts[1].1);
        assert_eq!(recombined.get("D").unwrap(), &ln(6));

        // 2:1 split of 3.
        let total = BudgetMap::uniform(&flavor.multiverse, ExtReal::from_integer(3));
        let parts = allocate(
            &total,
            &[("a".into(), rat(2, 1)), ("b".into(), rat(1, 1))],
        )
        .unwrap();
        assert_eq!(parts[0].1.get("D").unwrap(), &ExtReal::from_integer(2));
        assert_eq!(parts[1].1.get("D").unwrap(), &ExtReal::from_integer(1));

        // Thirds of 1 sum back exactly.
        let total = BudgetMap::uniform(&flavor.multiverse, ExtReal::from_integer(1));
        let parts = allocate(
            &total,
            &[
                ("a".into(), rat(1, 1)),
                ("b".into(), rat(1, 1)),
                ("c".into(), rat(1, 1)),
            ],
        )
        .unwrap();
        let sum = parts
            .iter()
            .fold(BudgetMap::new(), |acc, (_, b)| acc.plus(b));
        assert_eq!(sum.get("D").unwrap(), &ExtReal::from_integer(1));
    }

    #[test]
    fn allocation_edge_cases() {
        let flavor = rr_flavor();
        let total = BudgetMap::uniform(&flavor.multiverse, ExtReal::infinity());
        let parts = allocate(
            &total,
            &[("a".into(), rat(1, 1)), ("b".into(), rat(0, 1))],
        )
        .unwrap();
        assert!(parts[0].1.get("D").unwrap().is_infinite());
        assert!(parts[1].1.get("D").unwrap().is_zero());

        assert!(allocate(&total, &[("a".into(), rat(0, 1))]).is_err());
        assert!(allocate(&total, &[("a".into(), rat(-1, 1))]).is_err());
    }

    #[test]
    fn composition_bound_examples() {
        let flavor = rr_flavor();
        let m1 = randomized_response(&flavor.domain, &rat(3, 4)).unwrap();
        let m2 = randomized_response(&flavor.domain, &rat(2, 3)).unwrap();
        let report = check_composition_bound(&m1, &m2, &flavor).unwrap();
        assert_eq!(report.rows.len(), 1);
        assert!(report.rows[0].exact_equal, "independent products compose with equality");
        assert_eq!(report.rows[0].slack, 0.0);

        // Composing with a constant mechanism costs nothing.
        let constant = exact_release(&flavor.domain, |_, _| "c".into()).unwrap();
        let report = check_composition_bound(&m1, &constant, &flavor).unwrap();
        assert_eq!(report.rows[0].product_epsilon, ln(3));
        assert!(report.rows[0].exact_equal);

        // Exact release on the full universe saturates both sides.
        let identity = exact_release(&flavor.domain, |_, id| id.to_string()).unwrap();
        let report = check_composition_bound(&identity, &m1, &flavor).unwrap();
        assert!(report.rows[0].product_epsilon.is_infinite());
        assert!(report.rows[0].budget_sum.is_infinite());
        assert_eq!(report.rows[0].slack, 0.0);
    }

    #[test]
    fn non_max_divergence_surfaces_the_open_question() {
        let mut flavor = rr_flavor();
        flavor.divergence = OutputDivergence::SmoothedMax { delta: rat(1, 100) };
        let m = randomized_response(&flavor.domain, &rat(3, 4)).unwrap();
        let report = check_composition_bound(&m, &m, &flavor).unwrap();
        assert!(report.rows.is_empty());
        assert!(report.note.unwrap().contains("smoothed-max"));
    }

    #[test]
    fn ledger_round_trips_through_json() {
        let flavor = rr_flavor();
        let fp = flavor.fingerprint();
        let ledger = BudgetLedger::new(fp.clone())
            .compose("q1", &fp, BudgetMap::uniform(&flavor.multiverse, ln(3)))
            .unwrap();
        let text = serde_json::to_string_pretty(&ledger).unwrap();
        let back: BudgetLedger = serde_json::from_str(&text).unwrap();
        assert_eq!(ledger, back);
    }

    proptest! {
        #[test]
        fn compose_is_order_independent(perm in proptest::sample::select(vec![
            vec![0usize, 1, 2], vec![0, 2, 1], vec![1, 0, 2],
            vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0],
        ])) {
            let flavor = rr_flavor();
            let fp = flavor.fingerprint();
            let budgets = [ln(2), ln(3), ExtReal::from_rational(rat(1, 7)).unwrap()];
            let mut ledger = BudgetLedger::new(fp.clone());
            for &i in &perm {
                ledger = ledger
                    .compose(format!("b{i}"), &fp, BudgetMap::uniform(&flavor.multiverse, budgets[i].clone()))
                    .unwrap();
            }
            let expected = ln(6).plus(&ExtReal::from_rational(rat(1, 7)).unwrap());
            prop_assert_eq!(ledger.total.get("D").unwrap(), &expected);
        }

        #[test]
        fn products_never_exceed_summed_budgets(
            w1 in proptest::collection::vec(0u32..=8, 4),
            w2 in proptest::collection::vec(0u32..=8, 4),
        ) {
            let flavor = rr_flavor();
            let mk = |w: Vec<u32>| {
                let rows: Vec<_> = w
                    .chunks(2)
                    .map(|pair| {
                        let mut pair = pair.to_vec();
                        if pair.iter().all(|&x| x == 0) { pair[0] = 1; }
                        let total: u32 = pair.iter().sum();
                        crate::divergences::Distribution::new(
                            pair.into_iter().map(|x| rat(x as i64, total as i64)).collect(),
                        )
                        .unwrap()
                    })
                    .collect();
                Mechanism::new(flavor.domain.clone(), vec!["0".into(), "1".into()], rows).unwrap()
            };
            let m1 = mk(w1);
            let m2 = mk(w2);
            let report = check_composition_bound(&m1, &m2, &flavor).unwrap();
            for row in report.rows {
                prop_assert!(row.slack >= -1e-9, "slack {} in {}", row.slack, row.universe);
            }
        }
    }
}
