//! Exact nonnegative extended reals.
//!
//! Budgets, input distances and divergence values all live in the extended
//! nonnegative reals. The values that arise from finite mechanisms have the
//! closed form `q + Σᵢ cᵢ·ln(aᵢ)` with rational `q`, rational coefficients
//! `cᵢ` and integer atoms `aᵢ ≥ 2`: probability-ratio logarithms, their
//! rational multiples, and rational offsets. [`ExtReal`] keeps that form
//! symbolically, so `ln 3 + ln 2 = ln 6` holds exactly, budgets such as
//! `ln(3)` can be met with equality, and division by an input distance stays
//! exact.
//!
//! Comparisons are resolved in three tiers: structural equality on the
//! canonical form, a fast floating-point interval, and — when the interval
//! cannot separate the operands — a high-precision rational interval for the
//! logarithms. A comparison that still cannot be separated is reported as
//! [`ValueCmp::Ambiguous`] and callers must round against themselves.
//!
//! Serialized form is a small expression grammar: `"0"`, `"3/4"`, `"inf"`,
//! `"ln(3)"`, `"1/2*ln(6)"`, `"1/2 + ln(3)"`.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Rational helpers
// ---------------------------------------------------------------------------

/// Parse `"p/q"` or `"n"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    BigRational::from_str(t).map_err(|e| Error::ValueParse {
        input: s.to_string(),
        message: e.to_string(),
    })
}

/// Canonical string form of a rational: `"n"` or `"p/q"`.
pub fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// serde adapter: rationals as `"p/q"` strings (integers allowed on input).
pub mod rational_string {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let raw = RationalRepr::deserialize(d)?;
        match raw {
            RationalRepr::Str(s) => parse_rational(&s).map_err(serde::de::Error::custom),
            RationalRepr::Int(i) => Ok(BigRational::from_integer(i.into())),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum RationalRepr {
        Str(String),
        Int(i64),
    }
}

/// Convert a big rational to `f64` without overflowing intermediate integer
/// conversions; saturates to `±inf` outside the representable range.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let sign = if r.is_negative() { -1.0 } else { 1.0 };
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    // Scale so the integer quotient carries ~64 significant bits.
    let shift = 64 - (nb - db);
    let q = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    sign * qf * pow2_f64(-shift)
}

fn pow2_f64(e: i64) -> f64 {
    if e >= 1024 {
        f64::INFINITY
    } else if e <= -1075 {
        0.0
    } else {
        2f64.powi(e as i32)
    }
}

/// Natural log of a big unsigned integer, accurate to a few ulp.
pub fn biguint_ln_f64(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 53 {
        return (n.to_u64().expect("fits") as f64).ln();
    }
    let top = (n >> (bits - 53)).to_u64().expect("53 bits fit") as f64;
    top.ln() + ((bits - 53) as f64) * std::f64::consts::LN_2
}

/// Natural log of a positive rational, accurate to a few ulp of the result
/// plus a few ulp of ln(num) and ln(den) individually.
pub fn ratio_ln_f64(r: &BigRational) -> f64 {
    debug_assert!(r.is_positive());
    biguint_ln_f64(r.numer().magnitude()) - biguint_ln_f64(r.denom().magnitude())
}

// ---------------------------------------------------------------------------
// Factoring
// ---------------------------------------------------------------------------

/// Factor `n ≥ 1` by trial division. Primes below 10^4 are removed; a
/// remaining cofactor below 10^8 is necessarily prime; a larger cofactor is
/// kept whole as an opaque atom (sound for equality: merging is incomplete,
/// never wrong).
fn factor(n: &BigUint) -> BTreeMap<BigUint, u64> {
    let mut out: BTreeMap<BigUint, u64> = BTreeMap::new();
    let mut rest = n.clone();
    if rest.is_one() || rest.is_zero() {
        return out;
    }
    let mut p: u64 = 2;
    while p < 10_000 {
        let pb = BigUint::from(p);
        if (&pb * &pb) > rest {
            break;
        }
        while (&rest % &pb).is_zero() {
            *out.entry(pb.clone()).or_insert(0) += 1;
            rest /= &pb;
        }
        p = if p == 2 { 3 } else { p + 2 };
    }
    if !rest.is_one() {
        *out.entry(rest).or_insert(0) += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// High-precision log intervals
// ---------------------------------------------------------------------------

/// Rational interval enclosing ln 2, width below 10^-80.
fn ln2_interval() -> &'static (BigRational, BigRational) {
    static LN2: OnceLock<(BigRational, BigRational)> = OnceLock::new();
    LN2.get_or_init(|| atanh_interval(&BigRational::new(BigInt::one(), BigInt::from(3)), 96))
}

/// `2·atanh(u)` as a rational interval for `0 ≤ u ≤ 1/3`, `terms` series terms.
fn atanh_interval(u: &BigRational, terms: usize) -> (BigRational, BigRational) {
    if u.is_zero() {
        return (BigRational::zero(), BigRational::zero());
    }
    let u2 = u * u;
    let mut term = u.clone();
    let mut sum = BigRational::zero();
    for j in 0..terms {
        sum += &term / BigRational::from_integer(BigInt::from(2 * j as u64 + 1));
        term *= &u2;
    }
    // tail ≤ u^{2N+1} / ((2N+1)(1-u²))
    let tail = &term
        / (BigRational::from_integer(BigInt::from(2 * terms as u64 + 1))
            * (BigRational::one() - &u2));
    let lo = &sum * BigRational::from_integer(BigInt::from(2));
    let hi = &lo + tail * BigRational::from_integer(BigInt::from(2));
    (lo, hi)
}

/// Dyadic lower/upper bounds for a positive rational, ~`bits` significant bits.
fn dyadic_bounds(z: &BigRational, bits: u64) -> (BigRational, BigRational) {
    let num = z.numer().magnitude();
    let den = z.denom().magnitude();
    let s: i64 = bits as i64 - (num.bits() as i64 - den.bits() as i64);
    let (sn, sd) = if s >= 0 {
        (num << s as u64, den.clone())
    } else {
        (num.clone(), den << (-s) as u64)
    };
    let q = &sn / &sd;
    let exact = &q * &sd == sn;
    let lo = dyadic(&q, -s);
    if exact {
        (lo.clone(), lo)
    } else {
        (lo, dyadic(&(q + BigUint::one()), -s))
    }
}

/// The rational `m · 2^e`.
fn dyadic(m: &BigUint, e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::from(m << e as u64))
    } else {
        BigRational::new(BigInt::from(m.clone()), BigInt::from(BigUint::one() << (-e) as u64))
    }
}

/// Rational interval enclosing ln(z) for z > 0, width around 10^-50.
fn ln_interval(z: &BigRational) -> (BigRational, BigRational) {
    debug_assert!(z.is_positive());
    let (zlo, zhi) = dyadic_bounds(z, 192);
    (ln_interval_small(&zlo).0, ln_interval_small(&zhi).1)
}

/// ln of a positive rational with small numerator/denominator, via
/// `ln z = k·ln 2 + 2·atanh((m-1)/(m+1))` with `m = z·2^{-k} ∈ [1, 2)`.
fn ln_interval_small(z: &BigRational) -> (BigRational, BigRational) {
    let mut k: i64 = z.numer().magnitude().bits() as i64 - z.denom().magnitude().bits() as i64;
    let mut m = z * dyadic(&BigUint::one(), -k);
    if m < BigRational::one() {
        m *= BigRational::from_integer(BigInt::from(2));
        k -= 1;
    }
    debug_assert!(m >= BigRational::one() && m < BigRational::from_integer(BigInt::from(2)));
    let u = (&m - BigRational::one()) / (&m + BigRational::one());
    let (alo, ahi) = atanh_interval(&u, 64);
    let (l2lo, l2hi) = ln2_interval();
    let kq = BigRational::from_integer(BigInt::from(k));
    if k >= 0 {
        (&alo + &kq * l2lo, &ahi + &kq * l2hi)
    } else {
        (&alo + &kq * l2hi, &ahi + &kq * l2lo)
    }
}

// ---------------------------------------------------------------------------
// ExactReal: linear + Σ c·ln(atom)
// ---------------------------------------------------------------------------

/// Canonical symbolic form `linear + Σ exponent·ln(atom)`.
///
/// Atoms are integers ≥ 2 (primes, or unfactored large cofactors) and
/// exponents are nonzero rationals. The form may be negative; [`ExtReal`]
/// enforces nonnegativity at its public boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactReal {
    linear: BigRational,
    logs: BTreeMap<BigUint, BigRational>,
}

impl ExactReal {
    fn zero() -> Self {
        ExactReal {
            linear: BigRational::zero(),
            logs: BTreeMap::new(),
        }
    }

    fn from_rational(r: BigRational) -> Self {
        ExactReal {
            linear: r,
            logs: BTreeMap::new(),
        }
    }

    /// Add `coeff·ln(base)` for a positive rational base.
    fn push_log(&mut self, base: &BigRational, coeff: &BigRational) {
        if coeff.is_zero() || base.is_one() {
            return;
        }
        for (atom, e) in factor(base.numer().magnitude()) {
            self.bump(atom, coeff * BigRational::from_integer(BigInt::from(e)));
        }
        for (atom, e) in factor(base.denom().magnitude()) {
            self.bump(atom, -(coeff * BigRational::from_integer(BigInt::from(e))));
        }
    }

    fn bump(&mut self, atom: BigUint, delta: BigRational) {
        if delta.is_zero() {
            return;
        }
        let now_zero = {
            let entry = self.logs.entry(atom.clone()).or_insert_with(BigRational::zero);
            *entry += delta;
            entry.is_zero()
        };
        if now_zero {
            self.logs.remove(&atom);
        }
    }

    fn is_zero(&self) -> bool {
        self.linear.is_zero() && self.logs.is_empty()
    }

    fn add(&self, other: &ExactReal) -> ExactReal {
        let mut out = self.clone();
        out.linear += &other.linear;
        for (atom, e) in &other.logs {
            out.bump(atom.clone(), e.clone());
        }
        out
    }

    fn neg(&self) -> ExactReal {
        ExactReal {
            linear: -&self.linear,
            logs: self.logs.iter().map(|(a, e)| (a.clone(), -e)).collect(),
        }
    }

    fn scale(&self, k: &BigRational) -> ExactReal {
        if k.is_zero() {
            return ExactReal::zero();
        }
        ExactReal {
            linear: &self.linear * k,
            logs: self.logs.iter().map(|(a, e)| (a.clone(), e * k)).collect(),
        }
    }

    /// Floating evaluation with a conservative absolute error bound.
    fn eval(&self) -> (f64, f64) {
        let mut value = ratio_to_f64(&self.linear);
        let mut mag = value.abs();
        for (atom, e) in &self.logs {
            let term = ratio_to_f64(e) * biguint_ln_f64(atom);
            value += term;
            mag += term.abs();
        }
        (value, (mag + 1.0) * 1e-13)
    }

    /// Sign decision: structural zero, then float interval, then
    /// high-precision rational interval. `None` means undecidable.
    fn sign(&self) -> Option<Ordering> {
        if self.is_zero() {
            return Some(Ordering::Equal);
        }
        if self.logs.is_empty() {
            return Some(self.linear.cmp(&BigRational::zero()));
        }
        let (v, err) = self.eval();
        if v > err {
            return Some(Ordering::Greater);
        }
        if v < -err {
            return Some(Ordering::Less);
        }
        // High-precision tier.
        let mut lo = self.linear.clone();
        let mut hi = self.linear.clone();
        for (atom, e) in &self.logs {
            let (llo, lhi) = ln_interval(&BigRational::from_integer(BigInt::from(atom.clone())));
            if e.is_positive() {
                lo += e * &llo;
                hi += e * &lhi;
            } else {
                lo += e * &lhi;
                hi += e * &llo;
            }
        }
        if lo.is_positive() {
            Some(Ordering::Greater)
        } else if hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }
}

// ---------------------------------------------------------------------------
// ExtReal
// ---------------------------------------------------------------------------

/// Outcome of comparing two extended reals.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueCmp {
    Less,
    Equal,
    Greater,
    /// The operands could not be separated at the available precision and are
    /// not structurally equal. Callers must round against themselves.
    Ambiguous,
}

/// A nonnegative extended real: an exact symbolic value, a floating
/// approximation with a tracked error bound, or +∞.
#[derive(Clone, Debug)]
pub enum ExtReal {
    Finite(ExactReal),
    /// Only produced where the exact closed form does not exist (Rényi
    /// divergence at non-integer orders). Never used for budgets or
    /// distances.
    Approx { value: f64, abs_err: f64 },
    Infinity,
}

impl ExtReal {
    pub fn zero() -> Self {
        ExtReal::Finite(ExactReal::zero())
    }

    pub fn infinity() -> Self {
        ExtReal::Infinity
    }

    /// Exact nonnegative rational value.
    pub fn from_rational(r: BigRational) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::Parameter(format!(
                "extended real must be nonnegative, got {}",
                format_rational(&r)
            )));
        }
        Ok(ExtReal::Finite(ExactReal::from_rational(r)))
    }

    pub fn from_integer(n: u64) -> Self {
        ExtReal::Finite(ExactReal::from_rational(BigRational::from_integer(
            BigInt::from(n),
        )))
    }

    /// The exact value `ln r` for a rational `r ≥ 1`.
    pub fn ln_of_rational(r: &BigRational) -> Result<Self> {
        if !r.is_positive() || r < &BigRational::one() {
            return Err(Error::Parameter(format!(
                "ln argument must be ≥ 1 for a nonnegative value, got {}",
                format_rational(r)
            )));
        }
        let mut e = ExactReal::zero();
        e.push_log(r, &BigRational::one());
        Ok(ExtReal::Finite(e))
    }

    /// `coeff·ln(base)` for `base ≥ 1`, `coeff ≥ 0`.
    pub fn scaled_ln(base: &BigRational, coeff: &BigRational) -> Result<Self> {
        if coeff.is_negative() {
            return Err(Error::Parameter("log coefficient must be ≥ 0".into()));
        }
        match Self::ln_of_rational(base)? {
            ExtReal::Finite(l) => Ok(ExtReal::Finite(l.scale(coeff))),
            _ => unreachable!("ln of a rational is finite"),
        }
    }

    /// An approximate value with an absolute error bound.
    pub fn approx(value: f64, abs_err: f64) -> Self {
        ExtReal::Approx {
            value: value.max(0.0),
            abs_err: abs_err.abs(),
        }
    }

    /// Exact conversion of a finite nonnegative float (binary value taken
    /// literally).
    pub fn from_f64_exact(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Parameter(format!(
                "expected a finite nonnegative float, got {x}"
            )));
        }
        let r = BigRational::from_float(x).expect("finite");
        Self::from_rational(r)
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtReal::Infinity)
    }

    /// Exactly zero (approximate values never are).
    pub fn is_zero(&self) -> bool {
        matches!(self, ExtReal::Finite(e) if e.is_zero())
    }

    /// The exact rational value, when the form carries no logarithms.
    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            ExtReal::Finite(e) if e.logs.is_empty() => Some(&e.linear),
            _ => None,
        }
    }

    /// When the value is exactly `ln b` for a rational `b`, return `b`.
    pub fn as_ln_of_rational(&self) -> Option<BigRational> {
        match self {
            ExtReal::Finite(e) if e.linear.is_zero() => {
                let mut num = BigUint::one();
                let mut den = BigUint::one();
                for (atom, exp) in &e.logs {
                    if !exp.denom().is_one() {
                        return None;
                    }
                    let k = exp.numer().magnitude().to_u64()?;
                    let pow = num_traits::pow::pow(atom.clone(), k as usize);
                    if exp.is_positive() {
                        num *= pow;
                    } else {
                        den *= pow;
                    }
                }
                Some(BigRational::new(BigInt::from(num), BigInt::from(den)))
            }
            _ => None,
        }
    }

    /// Floating-point rendering (∞ maps to `f64::INFINITY`).
    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::Finite(e) => e.eval().0,
            ExtReal::Approx { value, .. } => *value,
            ExtReal::Infinity => f64::INFINITY,
        }
    }

    fn interval(&self) -> (f64, f64) {
        match self {
            ExtReal::Finite(e) => {
                let (v, err) = e.eval();
                (v - err, v + err)
            }
            ExtReal::Approx { value, abs_err } => (value - abs_err, value + abs_err),
            ExtReal::Infinity => (f64::INFINITY, f64::INFINITY),
        }
    }

    /// Saturating addition.
    pub fn plus(&self, other: &ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Infinity, _) | (_, ExtReal::Infinity) => ExtReal::Infinity,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a.add(b)),
            (a, b) => {
                let (av, ae) = approx_parts(a);
                let (bv, be) = approx_parts(b);
                ExtReal::Approx {
                    value: av + bv,
                    abs_err: ae + be,
                }
            }
        }
    }

    /// Scale by a nonnegative rational. `0 · ∞ = 0`.
    pub fn scale(&self, k: &BigRational) -> ExtReal {
        debug_assert!(!k.is_negative());
        if k.is_zero() {
            return ExtReal::zero();
        }
        match self {
            ExtReal::Infinity => ExtReal::Infinity,
            ExtReal::Finite(e) => ExtReal::Finite(e.scale(k)),
            ExtReal::Approx { value, abs_err } => {
                let kf = ratio_to_f64(k);
                ExtReal::Approx {
                    value: value * kf,
                    abs_err: abs_err * kf + value.abs() * kf * 1e-15,
                }
            }
        }
    }

    /// Divide by a positive rational.
    pub fn div_rational(&self, k: &BigRational) -> ExtReal {
        debug_assert!(k.is_positive());
        self.scale(&k.recip())
    }

    /// The product `a·b` under the budget·distance convention: an exact zero
    /// on either side dominates (`0·∞ = ∞·0 = 0`), infinity otherwise
    /// saturates. Exact when either factor is a plain rational.
    pub fn saturating_mul(&self, other: &ExtReal) -> ExtReal {
        if self.is_zero() || other.is_zero() {
            return ExtReal::zero();
        }
        if self.is_infinite() || other.is_infinite() {
            return ExtReal::Infinity;
        }
        if let Some(r) = other.as_rational() {
            return self.scale(r);
        }
        if let Some(r) = self.as_rational() {
            return other.scale(r);
        }
        let (av, ae) = approx_parts(self);
        let (bv, be) = approx_parts(other);
        ExtReal::Approx {
            value: av * bv,
            abs_err: ae * bv.abs() + be * av.abs() + ae * be,
        }
    }

    /// Three-tier comparison (structural, float interval, high-precision
    /// rational interval).
    pub fn compare(&self, other: &ExtReal) -> ValueCmp {
        match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => ValueCmp::Equal,
            (ExtReal::Infinity, _) => ValueCmp::Greater,
            (_, ExtReal::Infinity) => ValueCmp::Less,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => match a.add(&b.neg()).sign() {
                Some(Ordering::Less) => ValueCmp::Less,
                Some(Ordering::Equal) => ValueCmp::Equal,
                Some(Ordering::Greater) => ValueCmp::Greater,
                None => ValueCmp::Ambiguous,
            },
            (a, b) => {
                let (alo, ahi) = a.interval();
                let (blo, bhi) = b.interval();
                if ahi < blo {
                    ValueCmp::Less
                } else if alo > bhi {
                    ValueCmp::Greater
                } else {
                    ValueCmp::Ambiguous
                }
            }
        }
    }

    /// True only when the value is certainly ≤ `other`.
    pub fn le_certain(&self, other: &ExtReal) -> bool {
        matches!(self.compare(other), ValueCmp::Less | ValueCmp::Equal)
    }

    /// True only when the value is certainly > `other`.
    pub fn gt_certain(&self, other: &ExtReal) -> bool {
        matches!(self.compare(other), ValueCmp::Greater)
    }
}

fn approx_parts(v: &ExtReal) -> (f64, f64) {
    match v {
        ExtReal::Finite(e) => e.eval(),
        ExtReal::Approx { value, abs_err } => (*value, *abs_err),
        ExtReal::Infinity => (f64::INFINITY, 0.0),
    }
}

impl PartialEq for ExtReal {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ExtReal::Infinity, ExtReal::Infinity) => true,
            (ExtReal::Finite(a), ExtReal::Finite(b)) => a == b,
            (
                ExtReal::Approx { value: a, abs_err: ae },
                ExtReal::Approx { value: b, abs_err: be },
            ) => a == b && ae == be,
            _ => false,
        }
    }
}

// ---------------------------------------------------------------------------
// Rendering and parsing
// ---------------------------------------------------------------------------

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Infinity => write!(f, "inf"),
            ExtReal::Approx { value, .. } => write!(f, "~{value:e}"),
            ExtReal::Finite(e) => {
                let terms = render_terms(e);
                if terms.is_empty() {
                    return write!(f, "0");
                }
                let mut out = String::new();
                for (i, (positive, text)) in terms.iter().enumerate() {
                    if i == 0 {
                        if !positive {
                            out.push('-');
                        }
                    } else {
                        out.push_str(if *positive { " + " } else { " - " });
                    }
                    out.push_str(text);
                }
                write!(f, "{out}")
            }
        }
    }
}

/// Split the canonical form into display terms. Integer parts of exponents are
/// folded into a single `ln(N/D)` term; fractional residues are grouped by
/// coefficient into `c*ln(b)` terms.
fn render_terms(e: &ExactReal) -> Vec<(bool, String)> {
    let mut terms: Vec<(bool, String)> = Vec::new();
    if !e.linear.is_zero() {
        terms.push((e.linear.is_positive(), format_rational(&e.linear.abs())));
    }
    let mut unit_num = BigUint::one();
    let mut unit_den = BigUint::one();
    let mut groups: BTreeMap<BigRational, (BigUint, BigUint)> = BTreeMap::new();
    for (atom, exp) in &e.logs {
        let int_part = exp.trunc();
        let frac = exp - &int_part;
        if !int_part.is_zero() {
            let k = int_part
                .numer()
                .magnitude()
                .to_u64()
                .unwrap_or(u64::MAX) as usize;
            let pow = num_traits::pow::pow(atom.clone(), k);
            if int_part.is_positive() {
                unit_num *= pow;
            } else {
                unit_den *= pow;
            }
        }
        if !frac.is_zero() {
            let key = frac.abs();
            let slot = groups
                .entry(key)
                .or_insert_with(|| (BigUint::one(), BigUint::one()));
            if frac.is_positive() {
                slot.0 *= atom.clone();
            } else {
                slot.1 *= atom.clone();
            }
        }
    }
    if !(unit_num.is_one() && unit_den.is_one()) {
        // Base ≥ 1 by flipping sign when needed.
        let positive = unit_num >= unit_den;
        let (n, d) = if positive {
            (unit_num, unit_den)
        } else {
            (unit_den, unit_num)
        };
        let body = if d.is_one() {
            format!("ln({n})")
        } else {
            format!("ln({n}/{d})")
        };
        terms.push((positive, body));
    }
    for (coeff, (n, d)) in groups {
        let positive = n >= d;
        let (n, d) = if positive { (n, d) } else { (d, n) };
        let arg = if d.is_one() {
            format!("{n}")
        } else {
            format!("{n}/{d}")
        };
        terms.push((positive, format!("{}*ln({arg})", format_rational(&coeff))));
    }
    // Positive terms first, so sums do not lead with a minus sign.
    terms.sort_by_key(|(positive, _)| !positive);
    terms
}

impl FromStr for ExtReal {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.is_empty() {
            return Err(Error::ValueParse {
                input: s.into(),
                message: "empty value".into(),
            });
        }
        if t == "inf" {
            return Ok(ExtReal::Infinity);
        }
        if let Some(rest) = t.strip_prefix('~') {
            let v: f64 = rest.parse().map_err(|e| Error::ValueParse {
                input: s.into(),
                message: format!("bad approximate literal: {e}"),
            })?;
            return Ok(ExtReal::approx(v, (v.abs() + 1.0) * 1e-9));
        }
        let mut acc = ExactReal::zero();
        for (sign, term) in split_signed_terms(t) {
            parse_term(term, sign, &mut acc).map_err(|message| Error::ValueParse {
                input: s.into(),
                message,
            })?;
        }
        let value = ExtReal::Finite(acc);
        if matches!(
            value.compare(&ExtReal::zero()),
            ValueCmp::Less
        ) {
            return Err(Error::ValueParse {
                input: s.into(),
                message: "value is negative".into(),
            });
        }
        Ok(value)
    }
}

/// Split `"a + b - c"` on top-level ` + ` / ` - ` separators.
fn split_signed_terms(t: &str) -> Vec<(bool, &str)> {
    let mut out = Vec::new();
    let mut rest = t;
    let mut sign = true;
    if let Some(r) = rest.strip_prefix('-') {
        sign = false;
        rest = r.trim_start();
    }
    loop {
        let plus = rest.find(" + ");
        let minus = rest.find(" - ");
        match (plus, minus) {
            (None, None) => {
                out.push((sign, rest.trim()));
                return out;
            }
            (p, m) => {
                let (idx, next_sign) = match (p, m) {
                    (Some(p), Some(m)) if p < m => (p, true),
                    (Some(_), Some(m)) => (m, false),
                    (Some(p), None) => (p, true),
                    (None, Some(m)) => (m, false),
                    _ => unreachable!(),
                };
                out.push((sign, rest[..idx].trim()));
                rest = &rest[idx + 3..];
                sign = next_sign;
            }
        }
    }
}

fn parse_term(term: &str, positive: bool, acc: &mut ExactReal) -> std::result::Result<(), String> {
    let apply_sign = |r: BigRational| if positive { r } else { -r };
    if let Some(inner) = term.strip_prefix("ln(").and_then(|r| r.strip_suffix(')')) {
        let base = BigRational::from_str(inner).map_err(|e| format!("bad ln argument: {e}"))?;
        if !base.is_positive() {
            return Err("ln argument must be positive".into());
        }
        acc.push_log(&base, &apply_sign(BigRational::one()));
        return Ok(());
    }
    if let Some((coeff, lnpart)) = term.split_once("*ln(") {
        let c = BigRational::from_str(coeff.trim()).map_err(|e| format!("bad coefficient: {e}"))?;
        let inner = lnpart
            .strip_suffix(')')
            .ok_or_else(|| "unclosed ln(...)".to_string())?;
        let base = BigRational::from_str(inner).map_err(|e| format!("bad ln argument: {e}"))?;
        if !base.is_positive() {
            return Err("ln argument must be positive".into());
        }
        acc.push_log(&base, &apply_sign(c));
        return Ok(());
    }
    let r = BigRational::from_str(term).map_err(|e| format!("bad rational: {e}"))?;
    acc.linear += apply_sign(r);
    Ok(())
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Int(u64),
        }
        match Repr::deserialize(d)? {
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Int(i) => Ok(ExtReal::from_integer(i)),
        }
    }
}
