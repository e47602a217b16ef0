//! Invariant statistics and the multiverses they induce.
//!
//! An invariant is an exact statistic that is released without protection.
//! Its level sets partition the domain into universes: protection is scoped
//! within each level set, and pairs that the invariant already distinguishes
//! are never constrained. Datasets whose invariant value is unique end up in
//! singleton universes and impose no constraint at all. (The alternative of
//! adding an unconstrained cross-universe pseudo-universe with an infinite
//! budget is deliberately not taken: exempted comparisons are simply absent
//! from the multiverse.)

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::divergences::max_divergence;
use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::privacy_core::{DataUniverse, DatasetDomain, DatasetId, Multiverse};
use crate::value::ExtReal;

/// A total labeling of the domain by an exact statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantStatistic {
    pub label: String,
    values: Vec<String>,
}

impl InvariantStatistic {
    /// Materialize a statistic by evaluating a function on every dataset.
    pub fn from_fn(
        domain: &DatasetDomain,
        label: impl Into<String>,
        f: impl Fn(&DatasetDomain, DatasetId) -> String,
    ) -> Self {
        InvariantStatistic {
            label: label.into(),
            values: domain.ids().map(|id| f(domain, id)).collect(),
        }
    }

    /// Build from the file form, requiring total coverage of the domain.
    pub fn from_document(domain: &DatasetDomain, doc: &StatisticDocument) -> Result<Self> {
        let mut values = Vec::with_capacity(domain.len());
        for id in domain.ids() {
            let key = id.to_string();
            let v = doc.map.get(&key).ok_or_else(|| {
                Error::schema(None, format!("statistic is missing dataset {key}"))
            })?;
            values.push(v.clone());
        }
        for key in doc.map.keys() {
            match key.parse::<usize>() {
                Ok(i) if i < domain.len() => {}
                _ => {
                    return Err(Error::schema(
                        None,
                        format!("statistic key {key:?} is not a dataset id of the domain"),
                    ))
                }
            }
        }
        Ok(InvariantStatistic {
            label: doc.label.clone(),
            values,
        })
    }

    pub fn value(&self, id: DatasetId) -> Result<&str> {
        self.values
            .get(id.0)
            .map(|s| s.as_str())
            .ok_or(Error::UnknownDataset {
                id: id.0,
                size: self.values.len(),
            })
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }
}

/// File form of a statistic: dataset id → value label.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatisticDocument {
    pub label: String,
    pub map: BTreeMap<String, String>,
}

impl StatisticDocument {
    pub fn from_statistic(s: &InvariantStatistic) -> Self {
        StatisticDocument {
            label: s.label.clone(),
            map: s
                .values
                .iter()
                .enumerate()
                .map(|(i, v)| (i.to_string(), v.clone()))
                .collect(),
        }
    }
}

/// Partition the domain into the nonempty level sets of a statistic.
/// Universe ids are `label=value`, ordered by value label.
pub fn partition_by_invariant(
    domain: &DatasetDomain,
    s: &InvariantStatistic,
) -> Result<Multiverse> {
    if s.values.len() != domain.len() {
        return Err(Error::Parameter(format!(
            "statistic covers {} datasets, domain has {}",
            s.values.len(),
            domain.len()
        )));
    }
    let mut levels: BTreeMap<&String, Vec<DatasetId>> = BTreeMap::new();
    for id in domain.ids() {
        levels.entry(&s.values[id.0]).or_default().push(id);
    }
    let universes = levels
        .into_iter()
        .map(|(value, members)| DataUniverse::new(format!("{}={}", s.label, value), members))
        .collect();
    Ok(Multiverse::new(universes))
}

/// What an invariant leaks by construction: for each pair of universes, the
/// smallest worst-case log likelihood ratio between rows across the pair
/// (in either direction), plus the largest within each universe.
/// Informational only — there is no pass/fail here.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantMarginReport {
    pub within_universe_max: BTreeMap<String, ExtReal>,
    pub cross_universe_min: Vec<CrossUniverseMargin>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossUniverseMargin {
    pub first: String,
    pub second: String,
    pub min_divergence: ExtReal,
}

pub fn invariant_margin_report(
    m: &Mechanism,
    s: &InvariantStatistic,
) -> Result<InvariantMarginReport> {
    let multiverse = partition_by_invariant(m.domain(), s)?;
    let mut within = BTreeMap::new();
    for u in &multiverse.universes {
        let mut sup = ExtReal::zero();
        for &x in &u.members {
            for &y in &u.members {
                if x == y {
                    continue;
                }
                let d = max_divergence(m.row(x)?, m.row(y)?)?;
                if d.gt_certain(&sup) {
                    sup = d;
                }
            }
        }
        within.insert(u.id.clone(), sup);
    }
    let mut cross = Vec::new();
    for (i, a) in multiverse.universes.iter().enumerate() {
        for b in multiverse.universes.iter().skip(i + 1) {
            let mut min: Option<ExtReal> = None;
            for &x in &a.members {
                for &y in &b.members {
                    for d in [
                        max_divergence(m.row(x)?, m.row(y)?)?,
                        max_divergence(m.row(y)?, m.row(x)?)?,
                    ] {
                        if min.as_ref().is_none_or(|cur| cur.gt_certain(&d)) {
                            min = Some(d);
                        }
                    }
                }
            }
            cross.push(CrossUniverseMargin {
                first: a.id.clone(),
                second: b.id.clone(),
                min_divergence: min.unwrap_or_else(ExtReal::zero),
            });
        }
    }
    Ok(InvariantMarginReport {
        within_universe_max: within,
        cross_universe_min: cross,
    })
}
