//! Finite data-release mechanisms as exact stochastic kernels.
//!
//! A mechanism assigns every dataset of a domain one exact output
//! distribution over a shared finite output set. No sampling is implemented
//! anywhere: verification concerns distributions, not realizations. Three
//! constructor families cover the motivating cases — randomized response
//! (the local model), truncated geometric noise on a counting query, and
//! exact release of a statistic — plus independent products for composition
//! experiments and a validated file loader.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::divergences::Distribution;
use crate::error::{Error, Result};
use crate::privacy_core::{DatasetDomain, DatasetId, DomainMode};
use crate::value::{format_rational, parse_rational};

/// A finite stochastic kernel: one output distribution per dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    domain: DatasetDomain,
    outputs: Vec<String>,
    rows: Vec<Distribution>,
}

impl Mechanism {
    /// Build and validate a kernel: one row per dataset, all rows over the
    /// same output set, every row an exact distribution.
    pub fn new(domain: DatasetDomain, outputs: Vec<String>, rows: Vec<Distribution>) -> Result<Self> {
        if outputs.is_empty() {
            return Err(Error::Parameter("mechanism needs at least one output".into()));
        }
        if rows.len() != domain.len() {
            return Err(Error::Parameter(format!(
                "kernel has {} rows for {} datasets",
                rows.len(),
                domain.len()
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != outputs.len() {
                return Err(Error::NonStochasticRow {
                    dataset: i,
                    reason: format!("row has {} entries for {} outputs", row.len(), outputs.len()),
                });
            }
        }
        Ok(Mechanism { domain, outputs, rows })
    }

    pub fn domain(&self) -> &DatasetDomain {
        &self.domain
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn row(&self, id: DatasetId) -> Result<&Distribution> {
        self.rows.get(id.0).ok_or(Error::UnknownDataset {
            id: id.0,
            size: self.rows.len(),
        })
    }

    pub fn rows(&self) -> &[Distribution] {
        &self.rows
    }
}

/// Binary randomized response over a single-record {0,1} domain: report the
/// true value with probability `keep_prob`, the flipped value otherwise.
pub fn randomized_response(domain: &DatasetDomain, keep_prob: &BigRational) -> Result<Mechanism> {
    if domain.mode() != DomainMode::FixedSize
        || domain.max_size() != 1
        || domain.alphabet().len() != 2
    {
        return Err(Error::Parameter(
            "randomized response needs a fixed-size domain over a binary alphabet with max_size 1"
                .into(),
        ));
    }
    let half = BigRational::new(1.into(), 2.into());
    if keep_prob <= &half || keep_prob >= &BigRational::one() {
        return Err(Error::Parameter(format!(
            "keep_prob must lie strictly between 1/2 and 1, got {}",
            format_rational(keep_prob)
        )));
    }
    let flip = BigRational::one() - keep_prob;
    let outputs: Vec<String> = domain.alphabet().to_vec();
    let mut rows = Vec::with_capacity(domain.len());
    for id in domain.ids() {
        let value = domain.dataset(id)?[0] as usize;
        let probs = (0..outputs.len())
            .map(|j| if j == value { keep_prob.clone() } else { flip.clone() })
            .collect();
        rows.push(Distribution::new(probs)?);
    }
    Mechanism::new(domain.clone(), outputs, rows)
}

/// Truncated geometric noise around a counting query: the row at `x` is
/// proportional to `decay^{|t − query(x)|}` over the clamp range,
/// renormalized exactly. Renormalization (rather than piling clipped mass on
/// the endpoints) keeps every row strictly positive.
pub fn geometric_count(
    domain: &DatasetDomain,
    query: impl Fn(&DatasetDomain, DatasetId) -> i64,
    decay: &BigRational,
    clamp: RangeInclusive<i64>,
) -> Result<Mechanism> {
    if !decay.is_positive() || decay >= &BigRational::one() {
        return Err(Error::Parameter(format!(
            "decay must lie strictly between 0 and 1, got {}",
            format_rational(decay)
        )));
    }
    let (lo, hi) = (*clamp.start(), *clamp.end());
    if lo > hi {
        return Err(Error::Parameter("clamp range is empty".into()));
    }
    let outputs: Vec<String> = (lo..=hi).map(|t| t.to_string()).collect();
    let mut rows = Vec::with_capacity(domain.len());
    for id in domain.ids() {
        let center = query(domain, id);
        if center < lo || center > hi {
            return Err(Error::Parameter(format!(
                "query value {center} for dataset {id} lies outside the clamp range {lo}..={hi}"
            )));
        }
        let weights: Vec<BigRational> = (lo..=hi)
            .map(|t| num_traits::pow::pow(decay.clone(), t.abs_diff(center) as usize))
            .collect();
        let total: BigRational = weights.iter().sum();
        rows.push(Distribution::new(
            weights.into_iter().map(|w| w / &total).collect(),
        )?);
    }
    Mechanism::new(domain.clone(), outputs, rows)
}

/// Release a statistic exactly: the row at `x` is the point mass on
/// `statistic(x)`. Output labels are the sorted distinct statistic values.
pub fn exact_release(
    domain: &DatasetDomain,
    statistic: impl Fn(&DatasetDomain, DatasetId) -> String,
) -> Result<Mechanism> {
    let values: Vec<String> = domain.ids().map(|id| statistic(domain, id)).collect();
    let mut outputs: Vec<String> = values.clone();
    outputs.sort();
    outputs.dedup();
    let rows = values
        .iter()
        .map(|v| {
            let index = outputs.binary_search(v).expect("value is listed");
            Distribution::point_mass(outputs.len(), index)
        })
        .collect();
    Mechanism::new(domain.clone(), outputs, rows)
}

/// Independent joint release of two mechanisms over the same domain. The
/// output set is the Cartesian product of the label sets.
pub fn product(m1: &Mechanism, m2: &Mechanism) -> Result<Mechanism> {
    if m1.domain() != m2.domain() {
        return Err(Error::DomainMismatch(
            "product requires both mechanisms to share one dataset domain".into(),
        ));
    }
    let mut outputs = Vec::with_capacity(m1.outputs.len() * m2.outputs.len());
    for a in &m1.outputs {
        for b in &m2.outputs {
            outputs.push(format!("({a},{b})"));
        }
    }
    let rows = m1
        .rows
        .iter()
        .zip(m2.rows.iter())
        .map(|(r1, r2)| r1.product(r2))
        .collect();
    Mechanism::new(m1.domain.clone(), outputs, rows)
}

// ---------------------------------------------------------------------------
// Kernel files
// ---------------------------------------------------------------------------

/// On-disk form of a kernel: output labels plus one probability map per
/// dataset id. Probabilities are `"p/q"` strings; omitted outputs are zero.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelDocument {
    pub outputs: Vec<String>,
    pub rows: BTreeMap<String, BTreeMap<String, String>>,
}

/// Validate a kernel document against a domain and build the mechanism.
pub fn kernel_from_document(domain: &DatasetDomain, doc: &KernelDocument) -> Result<Mechanism> {
    if doc.outputs.is_empty() {
        return Err(Error::schema(None, "kernel lists no outputs"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for o in &doc.outputs {
        if !seen.insert(o) {
            return Err(Error::schema(None, format!("duplicate output label {o:?}")));
        }
    }
    let mut rows = Vec::with_capacity(domain.len());
    for id in domain.ids() {
        let key = id.to_string();
        let entries = doc.rows.get(&key).ok_or_else(|| {
            Error::schema(None, format!("missing kernel row for dataset {key}"))
        })?;
        for label in entries.keys() {
            if !doc.outputs.contains(label) {
                return Err(Error::schema(
                    None,
                    format!("row {key} mentions unknown output {label:?}"),
                ));
            }
        }
        let mut probs = Vec::with_capacity(doc.outputs.len());
        let mut total = BigRational::zero();
        for label in &doc.outputs {
            let p = match entries.get(label) {
                Some(raw) => parse_rational(raw)?,
                None => BigRational::zero(),
            };
            if p.is_negative() {
                return Err(Error::NonStochasticRow {
                    dataset: id.0,
                    reason: format!("negative probability for output {label:?}"),
                });
            }
            total += &p;
            probs.push(p);
        }
        if !total.is_one() {
            return Err(Error::NonStochasticRow {
                dataset: id.0,
                reason: format!("probabilities sum to {}", format_rational(&total)),
            });
        }
        rows.push(Distribution::new(probs)?);
    }
    for key in doc.rows.keys() {
        let parsed: std::result::Result<usize, _> = key.parse();
        match parsed {
            Ok(i) if i < domain.len() => {}
            _ => {
                return Err(Error::schema(
                    None,
                    format!("kernel row key {key:?} is not a dataset id of the domain"),
                ))
            }
        }
    }
    Mechanism::new(domain.clone(), doc.outputs.clone(), rows)
}

/// Render a mechanism as a kernel document.
pub fn mechanism_to_document(m: &Mechanism) -> KernelDocument {
    let rows = m
        .domain()
        .ids()
        .map(|id| {
            let row = m.row(id).expect("row exists");
            let entries = m
                .outputs()
                .iter()
                .zip(row.probs().iter())
                .filter(|(_, p)| !p.is_zero())
                .map(|(o, p)| (o.clone(), format_rational(p)))
                .collect();
            (id.to_string(), entries)
        })
        .collect();
    KernelDocument {
        outputs: m.outputs().to_vec(),
        rows,
    }
}

/// Count occurrences of the `value`-th alphabet symbol in a dataset; the
/// standard counting query for the examples and tests.
pub fn count_of_value(domain: &DatasetDomain, id: DatasetId, value: u32) -> i64 {
    domain
        .dataset(id)
        .map(|ds| ds.iter().filter(|&&v| v == value).count() as i64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::privacy_core::make_domain;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn binary_domain() -> DatasetDomain {
        make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap()
    }

    #[test]
    fn randomized_response_rows() {
        let m = randomized_response(&binary_domain(), &rat(3, 4)).unwrap();
        assert_eq!(m.row(DatasetId(0)).unwrap().probs(), &[rat(3, 4), rat(1, 4)]);
        assert_eq!(m.row(DatasetId(1)).unwrap().probs(), &[rat(1, 4), rat(3, 4)]);
    }

    #[test]
    fn randomized_response_boundary_rejected() {
        assert!(randomized_response(&binary_domain(), &rat(1, 2)).is_err());
        assert!(randomized_response(&binary_domain(), &rat(1, 1)).is_err());
        let wide = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        assert!(randomized_response(&wide, &rat(3, 4)).is_err());
    }

    #[test]
    fn geometric_count_two_point_row() {
        let d = binary_domain();
        let m = geometric_count(&d, |dom, id| count_of_value(dom, id, 1), &rat(1, 3), 0..=1)
            .unwrap();
        // weights at query 0: (1, 1/3) → (3/4, 1/4)
        assert_eq!(m.row(DatasetId(0)).unwrap().probs(), &[rat(3, 4), rat(1, 4)]);
        assert_eq!(m.row(DatasetId(1)).unwrap().probs(), &[rat(1, 4), rat(3, 4)]);
    }

    #[test]
    fn geometric_count_constant_query_gives_identical_rows() {
        let d = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        let m = geometric_count(&d, |_, _| 1, &rat(1, 2), 0..=2).unwrap();
        let first = m.row(DatasetId(0)).unwrap().clone();
        for id in d.ids() {
            assert_eq!(m.row(id).unwrap(), &first);
        }
    }

    #[test]
    fn geometric_count_rejects_bad_parameters() {
        let d = binary_domain();
        let empty = RangeInclusive::new(1, 0);
        assert!(geometric_count(&d, |_, _| 0, &rat(1, 3), empty).is_err());
        assert!(geometric_count(&d, |_, _| 0, &rat(3, 2), 0..=1).is_err());
        assert!(geometric_count(&d, |_, _| 5, &rat(1, 3), 0..=1).is_err());
    }

    #[test]
    fn exact_release_point_masses() {
        let d = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        let m = exact_release(&d, |dom, id| {
            let sum: u32 = dom.dataset(id).unwrap().iter().sum();
            if sum.is_multiple_of(2) { "even".into() } else { "odd".into() }
        })
        .unwrap();
        assert_eq!(m.outputs(), &["even".to_string(), "odd".to_string()]);
        // (0,0) and (1,1) are even; (0,1) and (1,0) are odd.
        assert_eq!(m.row(DatasetId(0)).unwrap().probs(), &[rat(1, 1), rat(0, 1)]);
        assert_eq!(m.row(DatasetId(1)).unwrap().probs(), &[rat(0, 1), rat(1, 1)]);
        assert_eq!(m.row(DatasetId(0)).unwrap(), m.row(DatasetId(3)).unwrap());
    }

    #[test]
    fn product_multiplies_rows() {
        let d = binary_domain();
        let m = randomized_response(&d, &rat(3, 4)).unwrap();
        let mm = product(&m, &m).unwrap();
        assert_eq!(mm.outputs().len(), 4);
        assert_eq!(
            mm.row(DatasetId(0)).unwrap().probs(),
            &[rat(9, 16), rat(3, 16), rat(3, 16), rat(1, 16)]
        );
        assert_eq!(
            mm.row(DatasetId(1)).unwrap().probs(),
            &[rat(1, 16), rat(3, 16), rat(3, 16), rat(9, 16)]
        );
    }

    #[test]
    fn product_requires_shared_domain() {
        let m1 = randomized_response(&binary_domain(), &rat(3, 4)).unwrap();
        let other = make_domain(&["a", "b"], 1, DomainMode::FixedSize).unwrap();
        let m2 = randomized_response(&other, &rat(3, 4)).unwrap();
        assert!(matches!(product(&m1, &m2), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn product_is_associative_on_rows() {
        let d = binary_domain();
        let a = randomized_response(&d, &rat(3, 4)).unwrap();
        let b = randomized_response(&d, &rat(2, 3)).unwrap();
        let c = geometric_count(&d, |dom, id| count_of_value(dom, id, 1), &rat(1, 3), 0..=1)
            .unwrap();
        let left = product(&product(&a, &b).unwrap(), &c).unwrap();
        let right = product(&a, &product(&b, &c).unwrap()).unwrap();
        // Row-major product indexing makes the two bracketings agree entry by
        // entry; only the label nesting differs.
        assert_eq!(left.rows(), right.rows());
    }

    #[test]
    fn kernel_document_round_trip_and_defects() {
        let d = binary_domain();
        let m = randomized_response(&d, &rat(3, 4)).unwrap();
        let doc = mechanism_to_document(&m);
        let back = kernel_from_document(&d, &doc).unwrap();
        assert_eq!(m, back);

        let mut bad = doc.clone();
        bad.rows.get_mut("0").unwrap().insert("0".into(), "13/20".into());
        let err = kernel_from_document(&d, &bad).unwrap_err();
        match err {
            Error::NonStochasticRow { dataset, reason } => {
                assert_eq!(dataset, 0);
                assert!(reason.contains("9/10"));
            }
            other => panic!("unexpected {other:?}"),
        }

        let mut negative = doc;
        negative.rows.get_mut("1").unwrap().insert("0".into(), "-1/4".into());
        negative.rows.get_mut("1").unwrap().insert("1".into(), "5/4".into());
        assert!(matches!(
            kernel_from_document(&d, &negative),
            Err(Error::NonStochasticRow { dataset: 1, .. })
        ));
    }

    #[test]
    fn geometric_rows_share_ratio_structure_under_shifts() {
        // Exact ratio invariance: within the clamp, the weight ratio between
        // two outputs depends only on their offsets from the query value.
        let d = make_domain(&["0", "1", "2"], 2, DomainMode::FixedSize).unwrap();
        let m = geometric_count(&d, |dom, id| count_of_value(dom, id, 1), &rat(2, 5), 0..=4)
            .unwrap();
        let q = |id: usize| count_of_value(&d, DatasetId(id), 1);
        for a in d.ids() {
            for b in d.ids() {
                let (qa, qb) = (q(a.0), q(b.0));
                let shift = qb - qa;
                let ra = m.row(a).unwrap().probs();
                let rb = m.row(b).unwrap().probs();
                for t in 0..ra.len() as i64 {
                    for u in 0..ra.len() as i64 {
                        let (ts, us) = (t + shift, u + shift);
                        if ts < 0 || us < 0 || ts >= ra.len() as i64 || us >= ra.len() as i64 {
                            continue;
                        }
                        let lhs = &ra[t as usize] * &rb[us as usize];
                        let rhs = &ra[u as usize] * &rb[ts as usize];
                        assert_eq!(lhs, rhs, "ratio shift broke at {a},{b},{t},{u}");
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn constructors_produce_stochastic_rows(keep_n in 7u32..12, decay_n in 1u32..9) {
            let d = binary_domain();
            let keep = rat(keep_n as i64, 12);
            if keep > rat(1, 2) && keep < rat(1, 1) {
                let m = randomized_response(&d, &keep).unwrap();
                for id in d.ids() {
                    let total: BigRational = m.row(id).unwrap().probs().iter().sum();
                    prop_assert!(total.is_one());
                }
            }
            let decay = rat(decay_n as i64, 10);
            let m = geometric_count(&d, |dom, id| count_of_value(dom, id, 1), &decay, 0..=3).unwrap();
            for id in d.ids() {
                let total: BigRational = m.row(id).unwrap().probs().iter().sum();
                prop_assert!(total.is_one());
            }
        }
    }
}
