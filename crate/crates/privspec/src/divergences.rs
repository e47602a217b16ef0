//! Output "distances" between exact finite probability distributions.
//!
//! Four divergence families grade how far apart two release distributions
//! are: worst-case log likelihood ratio (pure guarantees), the hockey-stick
//! divergence and its induced smoothed-max divergence (approximate
//! guarantees), Rényi divergence (concentrated guarantees), and total
//! variation as a cross-check baseline.
//!
//! Conventions for zero probabilities: terms with `P(t) = 0` contribute
//! nothing; `P(t) > 0` where `Q(t) = 0` yields `+∞`. Ratios and sums are kept
//! in exact rationals; logarithms are taken once at the boundary. Divergences
//! are directional — symmetry is not imposed, because verification quantifies
//! over ordered dataset pairs.
//!
//! No divergence is provided for "probabilistic DP": the criterion has no
//! agreed distance form on finite output spaces, so it is deliberately
//! absent rather than guessed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::value::{rational_string, ratio_ln_f64, ratio_to_f64, ExtReal};

/// Largest integer Rényi order evaluated in exact rational arithmetic;
/// larger or non-integer orders use tracked-error log-space evaluation.
/// The power sums grow with the order, so the exact path stops where the
/// bigint cost stops buying anything a tracked error bound does not.
const RENYI_EXACT_INTEGER_LIMIT: u64 = 512;

/// An exact probability distribution over a finite, positionally indexed
/// output set. Entries are nonnegative rationals summing to exactly one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Distribution {
    probs: Vec<BigRational>,
}

impl Distribution {
    pub fn new(probs: Vec<BigRational>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Parameter("distribution over empty output set".into()));
        }
        let mut total = BigRational::zero();
        for (i, p) in probs.iter().enumerate() {
            if p.is_negative() {
                return Err(Error::Parameter(format!(
                    "probability at output {i} is negative"
                )));
            }
            total += p;
        }
        if !total.is_one() {
            return Err(Error::Parameter(format!(
                "probabilities sum to {}, not 1",
                crate::value::format_rational(&total)
            )));
        }
        Ok(Distribution { probs })
    }

    /// Point mass on one output.
    pub fn point_mass(outputs: usize, index: usize) -> Self {
        let mut probs = vec![BigRational::zero(); outputs];
        probs[index] = BigRational::one();
        Distribution { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[BigRational] {
        &self.probs
    }

    /// Independent product distribution, indexed `self`-major.
    pub fn product(&self, other: &Distribution) -> Distribution {
        let mut probs = Vec::with_capacity(self.len() * other.len());
        for p in &self.probs {
            for q in &other.probs {
                probs.push(p * q);
            }
        }
        Distribution { probs }
    }
}

fn check_same_outputs(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::OutputSpaceMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

/// A parameterized family of output distances.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum OutputDivergence {
    /// Worst-case log likelihood ratio `max_t ln(P(t)/Q(t))`.
    #[serde(rename = "max")]
    MaxDivergence,
    /// Least `ε ≥ 0` with hockey-stick divergence at level `e^ε` at most δ.
    #[serde(rename = "smoothed-max")]
    SmoothedMax {
        #[serde(with = "rational_string")]
        delta: BigRational,
    },
    /// Rényi divergence of order α > 1.
    #[serde(rename = "renyi")]
    Renyi {
        #[serde(with = "rational_string")]
        alpha: BigRational,
    },
    /// Total variation distance.
    #[serde(rename = "tv")]
    TotalVariation,
}

impl OutputDivergence {
    /// Check the parameter constraints (δ ∈ [0,1), α > 1).
    pub fn validate(&self) -> Result<()> {
        match self {
            OutputDivergence::SmoothedMax { delta }
                if delta.is_negative() || delta >= &BigRational::one() =>
            {
                Err(Error::Parameter(format!(
                    "delta must lie in [0, 1), got {}",
                    crate::value::format_rational(delta)
                )))
            }
            OutputDivergence::Renyi { alpha } if alpha <= &BigRational::one() => {
                Err(Error::Parameter(format!(
                    "alpha must be greater than 1, got {}",
                    crate::value::format_rational(alpha)
                )))
            }
            _ => Ok(()),
        }
    }

    /// Stable textual identity, used in flavor fingerprints.
    pub fn describe(&self) -> String {
        match self {
            OutputDivergence::MaxDivergence => "max".into(),
            OutputDivergence::SmoothedMax { delta } => {
                format!("smoothed-max(delta={})", crate::value::format_rational(delta))
            }
            OutputDivergence::Renyi { alpha } => {
                format!("renyi(alpha={})", crate::value::format_rational(alpha))
            }
            OutputDivergence::TotalVariation => "tv".into(),
        }
    }

    /// Evaluate the selected divergence.
    pub fn evaluate(&self, p: &Distribution, q: &Distribution) -> Result<ExtReal> {
        match self {
            OutputDivergence::MaxDivergence => max_divergence(p, q),
            OutputDivergence::SmoothedMax { delta } => smoothed_max_divergence(p, q, delta),
            OutputDivergence::Renyi { alpha } => renyi_divergence(p, q, alpha),
            OutputDivergence::TotalVariation => {
                Ok(ExtReal::from_rational(total_variation(p, q)?).expect("tv is nonnegative"))
            }
        }
    }
}

/// `max_t: P(t)>0 ln(P(t)/Q(t))`: zero iff `P = Q` on the support comparison,
/// `+∞` iff some output has `P(t) > 0, Q(t) = 0`. The maximal ratio is found
/// in exact rationals; the logarithm is deferred to the symbolic value.
pub fn max_divergence(p: &Distribution, q: &Distribution) -> Result<ExtReal> {
    check_same_outputs(p, q)?;
    let mut best: Option<BigRational> = None;
    for (pt, qt) in p.probs.iter().zip(q.probs.iter()) {
        if pt.is_zero() {
            continue;
        }
        if qt.is_zero() {
            return Ok(ExtReal::Infinity);
        }
        let ratio = pt / qt;
        if best.as_ref().is_none_or(|b| &ratio > b) {
            best = Some(ratio);
        }
    }
    match best {
        None => Ok(ExtReal::zero()),
        Some(r) => ExtReal::ln_of_rational(&r.max(BigRational::one())),
    }
}

/// Hockey-stick divergence `Σ_t max(P(t) − e^ε·Q(t), 0)`.
///
/// `e^ε` is taken exactly when `ε` carries an exact log form (in particular
/// ε = 0 and ε = ln r); otherwise the threshold is the IEEE rounding of
/// `exp(ε)` and the summation is still exact at that threshold.
pub fn hockey_stick(p: &Distribution, q: &Distribution, eps: &ExtReal) -> Result<BigRational> {
    check_same_outputs(p, q)?;
    if eps.is_infinite() {
        // The limit: only mass outside Q's support survives.
        let mut acc = BigRational::zero();
        for (pt, qt) in p.probs.iter().zip(q.probs.iter()) {
            if qt.is_zero() {
                acc += pt;
            }
        }
        return Ok(acc);
    }
    let lambda = match eps.as_ln_of_rational() {
        Some(l) => l,
        None => BigRational::from_float(eps.to_f64().exp())
            .ok_or_else(|| Error::Parameter("epsilon is too large to exponentiate".into()))?,
    };
    let mut acc = BigRational::zero();
    for (pt, qt) in p.probs.iter().zip(q.probs.iter()) {
        let gap = pt - &lambda * qt;
        if gap.is_positive() {
            acc += gap;
        }
    }
    Ok(acc)
}

/// The least `ε ≥ 0` with `hockey_stick(P, Q, ε) ≤ δ`, or `+∞` when no level
/// suffices. Computed exactly: the hockey-stick is piecewise linear in
/// `λ = e^ε` with breakpoints at the likelihood ratios, so the crossing is
/// the solution of one linear equation between sorted candidate ratios.
pub fn smoothed_max_divergence(
    p: &Distribution,
    q: &Distribution,
    delta: &BigRational,
) -> Result<ExtReal> {
    check_same_outputs(p, q)?;
    if delta.is_negative() || delta >= &BigRational::one() {
        return Err(Error::Parameter(format!(
            "delta must lie in [0, 1), got {}",
            crate::value::format_rational(delta)
        )));
    }
    // Mass that survives any threshold: P where Q vanishes.
    let mut mass_outside = BigRational::zero();
    let mut groups: Vec<(BigRational, BigRational, BigRational)> = Vec::new(); // ratio, p, q
    for (pt, qt) in p.probs.iter().zip(q.probs.iter()) {
        if pt.is_zero() {
            continue;
        }
        if qt.is_zero() {
            mass_outside += pt;
        } else {
            groups.push((pt / qt, pt.clone(), qt.clone()));
        }
    }
    if &mass_outside > delta {
        return Ok(ExtReal::Infinity);
    }
    groups.sort_by(|a, b| b.0.cmp(&a.0));
    let mut p_acc = BigRational::zero();
    let mut q_acc = BigRational::zero();
    let mut i = 0;
    let mut lambda_star = BigRational::zero();
    while i < groups.len() {
        let ratio = groups[i].0.clone();
        while i < groups.len() && groups[i].0 == ratio {
            p_acc += &groups[i].1;
            q_acc += &groups[i].2;
            i += 1;
        }
        let next = if i < groups.len() {
            groups[i].0.clone()
        } else {
            BigRational::zero()
        };
        // On λ ∈ [next, ratio]: H(λ) = mass_outside + p_acc − λ·q_acc.
        let solved = (&mass_outside + &p_acc - delta) / &q_acc;
        if solved >= next {
            lambda_star = solved;
            break;
        }
    }
    let clamped = lambda_star.max(BigRational::one());
    ExtReal::ln_of_rational(&clamped)
}

/// Rényi divergence `D_α(P‖Q) = ln(Σ_t P(t)^α Q(t)^{1−α}) / (α−1)` for α > 1.
///
/// Integer orders up to a desk-scale bound are evaluated in exact rationals
/// (the logarithm stays symbolic); other orders are evaluated in log space
/// with a tracked absolute error bound.
pub fn renyi_divergence(
    p: &Distribution,
    q: &Distribution,
    alpha: &BigRational,
) -> Result<ExtReal> {
    check_same_outputs(p, q)?;
    if alpha <= &BigRational::one() {
        return Err(Error::Parameter(format!(
            "alpha must be greater than 1, got {}",
            crate::value::format_rational(alpha)
        )));
    }
    if p == q {
        return Ok(ExtReal::zero());
    }
    for (pt, qt) in p.probs.iter().zip(q.probs.iter()) {
        if !pt.is_zero() && qt.is_zero() {
            return Ok(ExtReal::Infinity);
        }
    }
    let integer_order = alpha
        .denom()
        .is_one()
        .then(|| alpha.numer().magnitude().to_u64())
        .flatten();
    if let Some(a) = integer_order.filter(|a| *a <= RENYI_EXACT_INTEGER_LIMIT) {
        // Σ P^a / Q^{a-1} exactly; result = ln(Σ)/(a−1).
        let mut sum = BigRational::zero();
        for (pt, qt) in p.probs.iter().zip(q.probs.iter()) {
            if pt.is_zero() {
                continue;
            }
            let num = num_traits::pow::pow(pt.clone(), a as usize);
            let den = num_traits::pow::pow(qt.clone(), (a - 1) as usize);
            sum += num / den;
        }
        let coeff = BigRational::new(BigInt::one(), BigInt::from(a - 1));
        return ExtReal::scaled_ln(&sum.max(BigRational::one()), &coeff);
    }
    // Log-space evaluation: ℓ_t = α·ln P(t) + (1−α)·ln Q(t), then log-sum-exp.
    let alpha_f = ratio_to_f64(alpha);
    if alpha_f > 9e15 {
        // Beyond float-resolvable orders the value is pinned to the α → ∞
        // limit: D_∞ ≥ D_α ≥ D_∞ + ln(P(t*))/(α−1), a gap below 1e-13 here.
        let limit = max_divergence(p, q)?;
        let worst_log = p
            .probs
            .iter()
            .zip(q.probs.iter())
            .filter(|(pt, qt)| !pt.is_zero() && !qt.is_zero())
            .map(|(pt, qt)| ratio_ln_f64(pt).abs() + ratio_ln_f64(qt).abs())
            .fold(0.0f64, f64::max);
        return Ok(ExtReal::approx(limit.to_f64(), worst_log / alpha_f + 1e-12));
    }
    let mut logs: Vec<f64> = Vec::new();
    for (pt, qt) in p.probs.iter().zip(q.probs.iter()) {
        if pt.is_zero() {
            continue;
        }
        logs.push(alpha_f * ratio_ln_f64(pt) + (1.0 - alpha_f) * ratio_ln_f64(qt));
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    let value = (log_sum / (alpha_f - 1.0)).max(0.0);
    Ok(ExtReal::approx(value, (alpha_f.abs() + 2.0) * 1e-13))
}

/// Total variation distance `½ Σ_t |P(t) − Q(t)|`, exactly.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<BigRational> {
    check_same_outputs(p, q)?;
    let mut acc = BigRational::zero();
    for (pt, qt) in p.probs.iter().zip(q.probs.iter()) {
        acc += (pt - qt).abs();
    }
    Ok(acc / BigRational::from_integer(BigInt::from(2)))
}
