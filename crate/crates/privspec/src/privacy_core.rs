//! Dataset domains, universes, input premetrics, budgets and specifications.
//!
//! A specification fixes five components: the finite domain of datasets that
//! are eligible for protection, the multiverse of data universes over which
//! the guarantee is quantified, the input premetric grading how different two
//! datasets are, the output divergence grading how different two release
//! distributions are, and a per-universe protection-loss budget. A mechanism
//! satisfies the specification when, within every universe, the divergence of
//! any two rows is at most budget × input distance.
//!
//! Domains are explicitly finite and enumerable (with a hard cap) so that the
//! universal quantifier over dataset pairs is realized by exhaustive
//! iteration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::divergences::OutputDivergence;
use crate::error::{Error, Result};
use crate::value::ExtReal;

/// Default cap on the number of datasets a domain enumeration may produce.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Identifier of an enumerated dataset: its index in the domain enumeration.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct DatasetId(pub usize);

impl fmt::Display for DatasetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Whether datasets are ordered tuples of exactly `max_size` records or
/// multisets of at most `max_size` records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainMode {
    #[serde(rename = "fixed-size")]
    FixedSize,
    #[serde(rename = "up-to-size")]
    UpToSize,
}

/// The finite set of all datasets eligible for protection.
///
/// Records take values in a finite ordered alphabet. Enumeration is
/// deterministic (lexicographic over alphabet indices, sizes ascending in
/// up-to-size mode), so dataset ids are stable across constructions with
/// equal arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetDomain {
    alphabet: Vec<String>,
    max_size: usize,
    mode: DomainMode,
    datasets: Vec<Vec<u32>>,
}

impl DatasetDomain {
    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn mode(&self) -> DomainMode {
        self.mode
    }

    /// Number of enumerated datasets.
    pub fn len(&self) -> usize {
        self.datasets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.datasets.is_empty()
    }

    /// Record value indices of a dataset (sorted in up-to-size mode).
    pub fn dataset(&self, id: DatasetId) -> Result<&[u32]> {
        self.datasets
            .get(id.0)
            .map(|v| v.as_slice())
            .ok_or(Error::UnknownDataset {
                id: id.0,
                size: self.datasets.len(),
            })
    }

    pub fn ids(&self) -> impl Iterator<Item = DatasetId> {
        (0..self.datasets.len()).map(DatasetId)
    }

    /// Human-readable rendering: `(0,1)` for tuples, `{0,1}` for multisets.
    pub fn render_dataset(&self, id: DatasetId) -> String {
        let Ok(ds) = self.dataset(id) else {
            return format!("<unknown {id}>");
        };
        let body: Vec<&str> = ds.iter().map(|&i| self.alphabet[i as usize].as_str()).collect();
        match self.mode {
            DomainMode::FixedSize => format!("({})", body.join(",")),
            DomainMode::UpToSize => format!("{{{}}}", body.join(",")),
        }
    }

    /// Count of each alphabet value in the dataset, for multiset views.
    fn counts(&self, ds: &[u32]) -> Vec<u64> {
        let mut c = vec![0u64; self.alphabet.len()];
        for &v in ds {
            c[v as usize] += 1;
        }
        c
    }
}

/// Enumerate the domain of all datasets over `alphabet` with the default cap.
pub fn make_domain(alphabet: &[&str], max_size: usize, mode: DomainMode) -> Result<DatasetDomain> {
    make_domain_with_cap(alphabet, max_size, mode, DEFAULT_ENUMERATION_CAP)
}

/// Enumerate the domain of all datasets over `alphabet`, failing when the
/// enumeration would exceed `cap` datasets.
pub fn make_domain_with_cap(
    alphabet: &[&str],
    max_size: usize,
    mode: DomainMode,
    cap: u128,
) -> Result<DatasetDomain> {
    if alphabet.is_empty() {
        return Err(Error::Parameter("alphabet must be nonempty".into()));
    }
    if max_size == 0 {
        return Err(Error::Parameter("max_size must be at least 1".into()));
    }
    let distinct: BTreeSet<&&str> = alphabet.iter().collect();
    if distinct.len() != alphabet.len() {
        return Err(Error::Parameter("alphabet values must be distinct".into()));
    }
    let required = enumeration_size(alphabet.len() as u128, max_size as u32, mode)
        .unwrap_or(u128::MAX);
    if required > cap {
        return Err(Error::EnumerationTooLarge { required, cap });
    }
    let a = alphabet.len() as u32;
    let mut datasets = Vec::with_capacity(required as usize);
    match mode {
        DomainMode::FixedSize => enumerate_tuples(a, max_size, &mut datasets),
        DomainMode::UpToSize => {
            for size in 0..=max_size {
                enumerate_multisets(a, size, &mut datasets);
            }
        }
    }
    Ok(DatasetDomain {
        alphabet: alphabet.iter().map(|s| s.to_string()).collect(),
        max_size,
        mode,
        datasets,
    })
}

fn enumeration_size(alphabet: u128, max_size: u32, mode: DomainMode) -> Option<u128> {
    match mode {
        DomainMode::FixedSize => alphabet.checked_pow(max_size),
        DomainMode::UpToSize => {
            // Σ_{k ≤ max_size} multiset coefficient C(a + k - 1, k)
            let mut total: u128 = 0;
            for k in 0..=max_size as u128 {
                let n = alphabet.checked_add(k)?.checked_sub(1)?;
                total = total.checked_add(binomial(n, k)?)?;
            }
            Some(total)
        }
    }
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)?;
        acc /= i + 1;
    }
    Some(acc)
}

fn enumerate_tuples(alphabet: u32, size: usize, out: &mut Vec<Vec<u32>>) {
    let mut cur = vec![0u32; size];
    loop {
        out.push(cur.clone());
        // lexicographic odometer
        let mut pos = size;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            if cur[pos] + 1 < alphabet {
                cur[pos] += 1;
                for c in cur.iter_mut().skip(pos + 1) {
                    *c = 0;
                }
                break;
            }
        }
    }
}

fn enumerate_multisets(alphabet: u32, size: usize, out: &mut Vec<Vec<u32>>) {
    // nondecreasing tuples of the given size, lexicographic
    fn rec(alphabet: u32, size: usize, start: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for v in start..alphabet {
            cur.push(v);
            rec(alphabet, size, v, cur, out);
            cur.pop();
        }
    }
    let mut cur = Vec::with_capacity(size);
    rec(alphabet, size, 0, &mut cur, out);
}

// ---------------------------------------------------------------------------
// Universes and multiverses
// ---------------------------------------------------------------------------

/// A nonempty set of dataset ids that the guarantee quantifies over jointly.
/// Members are kept sorted and deduplicated, so pair iteration — and with it
/// witness selection — is deterministic by id order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DataUniverse {
    pub id: String,
    pub members: Vec<DatasetId>,
}

impl DataUniverse {
    pub fn new(id: impl Into<String>, mut members: Vec<DatasetId>) -> Self {
        members.sort();
        members.dedup();
        DataUniverse {
            id: id.into(),
            members,
        }
    }
}

impl<'de> Deserialize<'de> for DataUniverse {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            id: String,
            members: Vec<DatasetId>,
        }
        let r = Repr::deserialize(d)?;
        Ok(DataUniverse::new(r.id, r.members))
    }
}

/// The collection of data universes of a specification. Universes may
/// overlap; invariant-induced multiverses are partitions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Multiverse {
    pub universes: Vec<DataUniverse>,
}

impl Multiverse {
    pub fn new(universes: Vec<DataUniverse>) -> Self {
        Multiverse { universes }
    }

    /// The single universe containing the entire domain.
    pub fn full(domain: &DatasetDomain, id: impl Into<String>) -> Self {
        Multiverse {
            universes: vec![DataUniverse::new(id, domain.ids().collect())],
        }
    }
}

// ---------------------------------------------------------------------------
// Input premetrics
// ---------------------------------------------------------------------------

/// The input "distance" grading how different two datasets are.
///
/// `d(x, x) = 0` always; symmetry and the triangle inequality are not
/// required (explicit matrices may be asymmetric — the verifier quantifies
/// over ordered pairs, which subsumes symmetry).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum InputPremetric {
    /// Number of positions at which two equal-length tuples differ.
    /// Requires a fixed-size domain.
    #[serde(rename = "bounded-hamming")]
    BoundedHamming,
    /// Size of the multiset symmetric difference.
    #[serde(rename = "unbounded-symmetric-difference")]
    UnboundedSymmetricDifference,
    /// Explicit table of nonnegative extended-real distances, indexed by
    /// dataset id; the diagonal must be zero.
    #[serde(rename = "explicit-matrix")]
    ExplicitMatrix { matrix: Vec<Vec<ExtReal>> },
}

impl InputPremetric {
    /// Distance between two datasets of `domain`.
    pub fn distance(
        &self,
        domain: &DatasetDomain,
        x: DatasetId,
        y: DatasetId,
    ) -> Result<ExtReal> {
        match self {
            InputPremetric::BoundedHamming => {
                if domain.mode() != DomainMode::FixedSize {
                    return Err(Error::ModeMismatch(
                        "bounded-hamming requires a fixed-size domain".into(),
                    ));
                }
                let a = domain.dataset(x)?;
                let b = domain.dataset(y)?;
                let differing = a.iter().zip(b.iter()).filter(|(u, v)| u != v).count();
                Ok(ExtReal::from_integer(differing as u64))
            }
            InputPremetric::UnboundedSymmetricDifference => {
                let a = domain.counts(domain.dataset(x)?);
                let b = domain.counts(domain.dataset(y)?);
                let total: u64 = a
                    .iter()
                    .zip(b.iter())
                    .map(|(u, v)| u.abs_diff(*v))
                    .sum();
                Ok(ExtReal::from_integer(total))
            }
            InputPremetric::ExplicitMatrix { matrix } => {
                let row = matrix.get(x.0).ok_or(Error::UnknownDataset {
                    id: x.0,
                    size: matrix.len(),
                })?;
                let entry = row.get(y.0).ok_or(Error::UnknownDataset {
                    id: y.0,
                    size: row.len(),
                })?;
                domain.dataset(x)?;
                domain.dataset(y)?;
                Ok(entry.clone())
            }
        }
    }
}

/// Free-function form of [`InputPremetric::distance`].
pub fn input_distance(
    premetric: &InputPremetric,
    domain: &DatasetDomain,
    x: DatasetId,
    y: DatasetId,
) -> Result<ExtReal> {
    premetric.distance(domain, x, y)
}

// ---------------------------------------------------------------------------
// Budgets
// ---------------------------------------------------------------------------

/// Per-universe protection-loss budget. `inf` means the universe is
/// unconstrained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct BudgetMap {
    pub per_universe: BTreeMap<String, ExtReal>,
}

impl BudgetMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn uniform(multiverse: &Multiverse, value: ExtReal) -> Self {
        BudgetMap {
            per_universe: multiverse
                .universes
                .iter()
                .map(|u| (u.id.clone(), value.clone()))
                .collect(),
        }
    }

    pub fn set(mut self, universe: impl Into<String>, value: ExtReal) -> Self {
        self.per_universe.insert(universe.into(), value);
        self
    }

    pub fn get(&self, universe: &str) -> Option<&ExtReal> {
        self.per_universe.get(universe)
    }

    /// Per-universe saturating sum.
    pub fn plus(&self, other: &BudgetMap) -> BudgetMap {
        let mut out = self.per_universe.clone();
        for (k, v) in &other.per_universe {
            let merged = match out.get(k) {
                Some(cur) => cur.plus(v),
                None => v.clone(),
            };
            out.insert(k.clone(), merged);
        }
        BudgetMap { per_universe: out }
    }

    /// Per-universe scaling by a nonnegative rational (`0·inf = 0`).
    pub fn scale(&self, k: &BigRational) -> BudgetMap {
        BudgetMap {
            per_universe: self
                .per_universe
                .iter()
                .map(|(id, v)| (id.clone(), v.scale(k)))
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Flavor and specification
// ---------------------------------------------------------------------------

/// The qualitative shape of a guarantee: everything but the budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flavor {
    #[serde(with = "domain_serde")]
    pub domain: DatasetDomain,
    pub multiverse: Multiverse,
    pub premetric: InputPremetric,
    pub divergence: OutputDivergence,
}

/// A complete differential-privacy specification: flavor plus budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpSpecification {
    #[serde(flatten)]
    pub flavor: Flavor,
    pub budget: BudgetMap,
}

/// Structural identity of a flavor, used to refuse cross-flavor composition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlavorFingerprint {
    pub alphabet: Vec<String>,
    pub max_size: usize,
    pub mode: DomainMode,
    pub universes: Vec<(String, Vec<usize>)>,
    pub premetric: String,
    pub divergence: String,
}

impl Flavor {
    pub fn fingerprint(&self) -> FlavorFingerprint {
        FlavorFingerprint {
            alphabet: self.domain.alphabet().to_vec(),
            max_size: self.domain.max_size(),
            mode: self.domain.mode(),
            universes: self
                .multiverse
                .universes
                .iter()
                .map(|u| (u.id.clone(), u.members.iter().map(|m| m.0).collect()))
                .collect(),
            premetric: match &self.premetric {
                InputPremetric::BoundedHamming => "bounded-hamming".into(),
                InputPremetric::UnboundedSymmetricDifference => {
                    "unbounded-symmetric-difference".into()
                }
                InputPremetric::ExplicitMatrix { matrix } => {
                    let rows: Vec<String> = matrix
                        .iter()
                        .map(|r| {
                            r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
                        })
                        .collect();
                    format!("explicit-matrix[{}]", rows.join(";"))
                }
            },
            divergence: self.divergence.describe(),
        }
    }
}

// Domains serialize as their construction arguments; the dataset enumeration
// is rebuilt deterministically on load, which keeps ids stable.
mod domain_serde {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        alphabet: Vec<String>,
        max_size: usize,
        mode: DomainMode,
    }

    pub fn serialize<S: serde::Serializer>(
        d: &DatasetDomain,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        Repr {
            alphabet: d.alphabet().to_vec(),
            max_size: d.max_size(),
            mode: d.mode(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(
        de: D,
    ) -> std::result::Result<DatasetDomain, D::Error> {
        let repr = Repr::deserialize(de)?;
        let alphabet: Vec<&str> = repr.alphabet.iter().map(|s| s.as_str()).collect();
        make_domain(&alphabet, repr.max_size, repr.mode).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// One structural defect found by [`validate_spec`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpecViolation {
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for SpecViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

/// Result of structural validation; empty means pass.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<SpecViolation>,
}

impl ValidationReport {
    pub fn is_pass(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: &'static str, message: String) {
        self.violations.push(SpecViolation { code, message });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_pass() {
            return write!(f, "pass");
        }
        let lines: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        write!(f, "{}", lines.join("; "))
    }
}

/// Validate the flavor components (everything except the budget).
pub fn validate_flavor(flavor: &Flavor) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = flavor.domain.len();

    if flavor.multiverse.universes.is_empty() {
        report.push("empty-multiverse", "multiverse has no universes".into());
    }
    let mut seen = BTreeSet::new();
    for u in &flavor.multiverse.universes {
        if !seen.insert(&u.id) {
            report.push("duplicate-universe", format!("universe id {:?} repeats", u.id));
        }
        if u.members.is_empty() {
            report.push("empty-universe", format!("universe {:?} has no members", u.id));
        }
        for m in &u.members {
            if m.0 >= n {
                report.push(
                    "dangling-dataset-id",
                    format!("universe {:?} references dataset {} outside the domain", u.id, m),
                );
            }
        }
    }

    match &flavor.premetric {
        InputPremetric::BoundedHamming => {
            if flavor.domain.mode() != DomainMode::FixedSize {
                report.push(
                    "premetric-mode-mismatch",
                    "bounded-hamming requires a fixed-size domain".into(),
                );
            }
        }
        InputPremetric::UnboundedSymmetricDifference => {}
        InputPremetric::ExplicitMatrix { matrix } => {
            if matrix.len() != n {
                report.push(
                    "premetric-shape",
                    format!("premetric matrix has {} rows, domain has {} datasets", matrix.len(), n),
                );
            }
            for (i, row) in matrix.iter().enumerate() {
                if row.len() != n {
                    report.push(
                        "premetric-shape",
                        format!("premetric row {} has {} entries, domain has {} datasets", i, row.len(), n),
                    );
                    continue;
                }
                if i < n && !row[i].is_zero() {
                    report.push(
                        "premetric-diagonal-nonzero",
                        format!("premetric diagonal nonzero at dataset {i}"),
                    );
                }
            }
        }
    }

    if let Err(e) = flavor.divergence.validate() {
        report.push("divergence-parameter", e.to_string());
    }

    report
}

/// Validate a full specification: flavor structure plus budget coverage.
pub fn validate_spec(spec: &DpSpecification) -> ValidationReport {
    let mut report = validate_flavor(&spec.flavor);
    for u in &spec.flavor.multiverse.universes {
        if spec.budget.get(&u.id).is_none() {
            report.push(
                "missing-budget",
                format!("budget missing for universe {:?}", u.id),
            );
        }
    }
    for (id, value) in &spec.budget.per_universe {
        if !spec.flavor.multiverse.universes.iter().any(|u| &u.id == id) {
            report.push(
                "budget-unknown-universe",
                format!("budget entry for unknown universe {id:?}"),
            );
        }
        if let Some(r) = value.as_rational() {
            if r < &BigRational::zero() {
                report.push("negative-budget", format!("budget for {id:?} is negative"));
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergences::OutputDivergence;
    use num_bigint::BigInt;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn fixed_size_enumeration_is_lexicographic() {
        let d = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        let listed: Vec<&[u32]> = d.ids().map(|i| d.dataset(i).unwrap()).collect();
        assert_eq!(listed, vec![&[0, 0][..], &[0, 1], &[1, 0], &[1, 1]]);
    }

    #[test]
    fn singleton_alphabet_fixed() {
        let d = make_domain(&["a"], 3, DomainMode::FixedSize).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.dataset(DatasetId(0)).unwrap(), &[0, 0, 0]);
    }

    #[test]
    fn up_to_size_enumeration_matches_brute_force() {
        // Independent oracle: for each size, generate every tuple over the
        // alphabet, canonicalize to a sorted multiset, dedup.
        let mut expected: Vec<Vec<u32>> = Vec::new();
        for size in 0..=2usize {
            let mut tuples: Vec<Vec<u32>> = vec![Vec::new()];
            for _ in 0..size {
                let mut next = Vec::new();
                for t in &tuples {
                    for v in 0..2u32 {
                        let mut t2 = t.clone();
                        t2.push(v);
                        next.push(t2);
                    }
                }
                tuples = next;
            }
            let mut canon: Vec<Vec<u32>> = tuples
                .into_iter()
                .map(|mut t| {
                    t.sort_unstable();
                    t
                })
                .collect();
            canon.sort();
            canon.dedup();
            expected.extend(canon);
        }
        assert_eq!(expected.len(), 6);
        let d = make_domain(&["0", "1"], 2, DomainMode::UpToSize).unwrap();
        let listed: Vec<Vec<u32>> = d.ids().map(|i| d.dataset(i).unwrap().to_vec()).collect();
        assert_eq!(listed, expected);
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let err = make_domain_with_cap(&["0", "1"], 30, DomainMode::FixedSize, 1_000_000)
            .unwrap_err();
        match err {
            Error::EnumerationTooLarge { required, cap } => {
                assert_eq!(required, 1u128 << 30);
                assert_eq!(cap, 1_000_000);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn hamming_distances() {
        let d = make_domain(&["0", "1"], 2, DomainMode::FixedSize).unwrap();
        let pm = InputPremetric::BoundedHamming;
        // (0,1) is id 1, (0,0) is id 0
        assert_eq!(
            pm.distance(&d, DatasetId(1), DatasetId(0)).unwrap(),
            ExtReal::from_integer(1)
        );
        assert_eq!(
            pm.distance(&d, DatasetId(1), DatasetId(1)).unwrap(),
            ExtReal::zero()
        );
    }

    #[test]
    fn hamming_rejects_up_to_size() {
        let d = make_domain(&["0", "1"], 2, DomainMode::UpToSize).unwrap();
        let pm = InputPremetric::BoundedHamming;
        assert!(matches!(
            pm.distance(&d, DatasetId(0), DatasetId(1)),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn symmetric_difference_distance() {
        let d = make_domain(&["0", "1"], 2, DomainMode::UpToSize).unwrap();
        // enumeration: {}, {0}, {1}, {0,0}, {0,1}, {1,1}
        let pm = InputPremetric::UnboundedSymmetricDifference;
        let dist = pm.distance(&d, DatasetId(4), DatasetId(1)).unwrap(); // {0,1} vs {0}
        assert_eq!(dist, ExtReal::from_integer(1));
    }

    #[test]
    fn hamming_triangle_inequality_exhaustive() {
        // Exhaustive on domains of ≤ 30 datasets.
        for (alphabet, size) in [(vec!["0", "1"], 3usize), (vec!["a", "b", "c"], 3)] {
            let d = make_domain(&alphabet, size, DomainMode::FixedSize).unwrap();
            if d.len() > 30 {
                continue;
            }
            let pm = InputPremetric::BoundedHamming;
            let dist = |x: DatasetId, y: DatasetId| {
                pm.distance(&d, x, y)
                    .unwrap()
                    .as_rational()
                    .unwrap()
                    .clone()
            };
            for x in d.ids() {
                for y in d.ids() {
                    for z in d.ids() {
                        assert!(dist(x, z) <= dist(x, y) + dist(y, z));
                    }
                }
            }
        }
    }

    fn small_spec() -> DpSpecification {
        let domain = make_domain(&["0", "1"], 1, DomainMode::FixedSize).unwrap();
        let multiverse = Multiverse::full(&domain, "D");
        DpSpecification {
            flavor: Flavor {
                domain,
                multiverse,
                premetric: InputPremetric::BoundedHamming,
                divergence: OutputDivergence::MaxDivergence,
            },
            budget: BudgetMap::new().set("D", ExtReal::ln_of_rational(&rat(3, 1)).unwrap()),
        }
    }

    #[test]
    fn well_formed_spec_passes() {
        assert!(validate_spec(&small_spec()).is_pass());
    }

    #[test]
    fn missing_budget_names_the_universe() {
        let mut spec = small_spec();
        spec.budget = BudgetMap::new();
        let report = validate_spec(&spec);
        assert!(!report.is_pass());
        assert!(report.to_string().contains("\"D\""));
    }

    #[test]
    fn nonzero_diagonal_is_flagged() {
        let mut spec = small_spec();
        spec.flavor.premetric = InputPremetric::ExplicitMatrix {
            matrix: vec![
                vec![ExtReal::from_integer(1), ExtReal::from_integer(1)],
                vec![ExtReal::from_integer(1), ExtReal::zero()],
            ],
        };
        let report = validate_spec(&spec);
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == "premetric-diagonal-nonzero"));
    }

    #[test]
    fn spec_file_round_trip() {
        let spec = small_spec();
        let text = serde_json::to_string_pretty(&spec).unwrap();
        let back: DpSpecification = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
        // Schema keys are exactly the documented five.
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["budget", "divergence", "domain", "multiverse", "premetric"]);
    }

    proptest! {
        #[test]
        fn builtin_premetrics_are_symmetric(alpha_size in 2usize..4, max_size in 1usize..4, seed in 0u64..500) {
            let names = ["a", "b", "c", "d"];
            let alphabet: Vec<&str> = names[..alpha_size].to_vec();
            for mode in [DomainMode::FixedSize, DomainMode::UpToSize] {
                let Ok(domain) = make_domain_with_cap(&alphabet, max_size, mode, 100) else { continue };
                let n = domain.len();
                if n == 0 { continue; }
                let x = DatasetId((seed as usize) % n);
                let y = DatasetId((seed as usize / 7) % n);
                let pm = match mode {
                    DomainMode::FixedSize => InputPremetric::BoundedHamming,
                    DomainMode::UpToSize => InputPremetric::UnboundedSymmetricDifference,
                };
                let d1 = pm.distance(&domain, x, y).unwrap();
                let d2 = pm.distance(&domain, y, x).unwrap();
                prop_assert_eq!(d1.clone(), d2);
                // zero iff identical
                prop_assert_eq!(d1.is_zero(), x == y);
            }
        }

        #[test]
        fn enumeration_is_deterministic(alpha_size in 1usize..4, max_size in 1usize..4) {
            let names = ["a", "b", "c"];
            let alphabet: Vec<&str> = names[..alpha_size].to_vec();
            for mode in [DomainMode::FixedSize, DomainMode::UpToSize] {
                let a = make_domain_with_cap(&alphabet, max_size, mode, 1000);
                let b = make_domain_with_cap(&alphabet, max_size, mode, 1000);
                match (a, b) {
                    (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                    (Err(_), Err(_)) => {}
                    _ => prop_assert!(false, "inconsistent cap behaviour"),
                }
            }
        }
    }
}
