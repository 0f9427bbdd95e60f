//! Finite atomic measure spaces and the function lattices built on them.
//!
//! Every space here is a finite set of atoms with strictly positive
//! weights, so "almost everywhere" is plain pointwise equality and every
//! lattice is order complete. Norms are weighted `p`-norms and their
//! `p`-convexifications, `‖f‖_{X^(p)} = ‖ |f|^p ‖_X^{1/p}`.

use std::fmt;
use std::ops::Deref;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative tolerance for norm comparisons.
pub const NORM_REL_TOL: f64 = 1e-12;
/// Absolute floor paired with [`NORM_REL_TOL`].
pub const NORM_ABS_FLOOR: f64 = 1e-15;

/// `a <= b` up to the crate-wide norm tolerance.
pub fn le_tol(a: f64, b: f64) -> bool {
    a <= b + NORM_REL_TOL * a.abs().max(b.abs()) + NORM_ABS_FLOOR
}

/// `a == b` up to the crate-wide norm tolerance.
pub fn eq_tol(a: f64, b: f64) -> bool {
    le_tol(a, b) && le_tol(b, a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpace {
    weights: Vec<f64>,
}

impl MeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::domain("a measure space needs at least one atom"));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::domain(format!("atom {i} has invalid weight {w}")));
        }
        Ok(Self { weights })
    }

    /// `n` atoms of weight one.
    pub fn counting(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// All atoms carry the same weight.
    pub fn is_uniform(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|&w| w == w0)
    }

    pub(crate) fn check(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), found: f.len() });
        }
        Ok(())
    }
}

/// A real function on the atoms of a [`MeasureSpace`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct LatticeVector(Vec<f64>);

impl<'de> Deserialize<'de> for LatticeVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        LatticeVector::new(values).map_err(de::Error::custom)
    }
}

impl Deref for LatticeVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<LatticeVector> for Vec<f64> {
    fn from(v: LatticeVector) -> Self {
        v.0
    }
}

impl LatticeVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::domain(format!("entry {i} is not finite ({v})")));
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    /// Indicator of a single atom.
    pub fn indicator(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        Self(v)
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|&v| v >= 0.0)
    }

    pub fn abs(&self) -> Self {
        Self(self.0.iter().map(|v| v.abs()).collect())
    }

    /// Pointwise multiplication by a unimodular (±1) function.
    pub fn sign_multiply(&self, signs: &[f64]) -> Result<Self> {
        if signs.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), found: signs.len() });
        }
        if let Some(s) = signs.iter().find(|&&s| s != 1.0 && s != -1.0) {
            return Err(Error::domain(format!("sign entries must be ±1, found {s}")));
        }
        Ok(Self(self.0.iter().zip(signs).map(|(v, s)| v * s).collect()))
    }

    /// `|f|^p` pointwise.
    pub fn abs_pow(&self, p: f64) -> Self {
        Self(self.0.iter().map(|v| v.abs().powf(p)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn pointwise_max(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, f64::max)
    }

    /// `f·χ_E` where `E` is given as a boolean mask.
    pub fn restrict(&self, mask: &[bool]) -> Self {
        Self(self.0.iter().zip(mask).map(|(&v, &m)| if m { v } else { 0.0 }).collect())
    }

    /// `{i : f_i != 0}`.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect()
    }

    /// Componentwise `self <= other`.
    pub fn le(&self, other: &Self) -> bool {
        self.len() == other.len() && self.0.iter().zip(other.iter()).all(|(a, b)| a <= b)
    }

    fn zip_with(&self, other: &Self, op: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if other.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), found: other.len() });
        }
        Ok(Self(self.0.iter().zip(other.iter()).map(|(&a, &b)| op(a, b)).collect()))
    }
}

/// A norm exponent in `[1, ∞]`; `∞` is its own variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// The finite value, if any.
    pub fn finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }

    /// Product of exponents, as produced by nested convexification.
    pub fn times(self, p: f64) -> Exponent {
        match self {
            Exponent::Finite(q) => Exponent::Finite(q * p),
            Exponent::Infinity => Exponent::Infinity,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => other
                .parse::<f64>()
                .map(Exponent::Finite)
                .map_err(|_| Error::Format(format!("invalid exponent {other:?}"))),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(p) => s.serialize_f64(*p),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct ExponentVisitor;

        impl Visitor<'_> for ExponentVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a real number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                v.parse().map_err(E::custom)
            }
        }

        d.deserialize_any(ExponentVisitor)
    }
}

/// A lattice norm over the weights of a [`MeasureSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NormSpec {
    /// `(Σ wᵢ|fᵢ|^p)^{1/p}`, or `max |fᵢ|` for `p = ∞`.
    WeightedP { p: Exponent },
    /// `‖ |f|^p ‖_base^{1/p}` with `p ∈ (1, ∞)`.
    Convexified { base: Box<NormSpec>, p: f64 },
}

impl NormSpec {
    pub fn weighted_p(p: Exponent) -> Result<Self> {
        let spec = NormSpec::WeightedP { p };
        spec.validate()?;
        Ok(spec)
    }

    pub fn l1() -> Self {
        NormSpec::WeightedP { p: Exponent::Finite(1.0) }
    }

    pub fn linf() -> Self {
        NormSpec::WeightedP { p: Exponent::Infinity }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            NormSpec::WeightedP { p: Exponent::Finite(p) } if !(p.is_finite() && *p >= 1.0) => {
                Err(Error::domain(format!("weighted norm exponent must lie in [1, inf], got {p}")))
            }
            NormSpec::WeightedP { .. } => Ok(()),
            NormSpec::Convexified { base, p } => {
                check_convexification_exponent(*p)?;
                base.validate()
            }
        }
    }

    /// The `p`-convexification of this norm.
    pub fn convexify(&self, p: f64) -> Result<NormSpec> {
        check_convexification_exponent(p)?;
        Ok(NormSpec::Convexified { base: Box::new(self.clone()), p })
    }

    pub fn norm(&self, space: &MeasureSpace, f: &[f64]) -> Result<f64> {
        space.check(f)?;
        Ok(self.norm_unchecked(space.weights(), f))
    }

    pub(crate) fn norm_unchecked(&self, weights: &[f64], f: &[f64]) -> f64 {
        match self {
            NormSpec::WeightedP { p } => weighted_lr_norm(weights, f, *p),
            NormSpec::Convexified { base, p } => {
                let powered: Vec<f64> = f.iter().map(|v| v.abs().powf(*p)).collect();
                base.norm_unchecked(weights, &powered).powf(1.0 / p)
            }
        }
    }

    /// Exponent `r` of the weighted `ℓ^r` norm this spec is equal to.
    ///
    /// Convexifying `ℓ^q(w)` by `p` gives `ℓ^{pq}(w)`, so every spec in this
    /// family collapses to a single weighted norm.
    pub fn effective_exponent(&self) -> Exponent {
        match self {
            NormSpec::WeightedP { p } => *p,
            NormSpec::Convexified { base, p } => base.effective_exponent().times(*p),
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::WeightedP { p } => write!(f, "l^{p}"),
            NormSpec::Convexified { base, p } => write!(f, "({base})^({p})"),
        }
    }
}

fn check_convexification_exponent(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("convexification exponent must lie in (1, inf), got {p}")))
    }
}

/// Weighted `ℓ^r` norm, scaled by the largest entry to avoid overflow.
pub(crate) fn weighted_lr_norm(weights: &[f64], f: &[f64], r: Exponent) -> f64 {
    let m = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    match r {
        _ if m == 0.0 => 0.0,
        Exponent::Infinity => m,
        Exponent::Finite(r) if r == 1.0 => weights.iter().zip(f).map(|(w, v)| w * v.abs()).sum(),
        Exponent::Finite(r) => {
            let s: f64 = weights.iter().zip(f).map(|(w, v)| w * (v.abs() / m).powf(r)).sum();
            m * s.powf(1.0 / r)
        }
    }
}

/// A pair of lattice norms on one measure space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Couple {
    pub space: MeasureSpace,
    pub norm0: NormSpec,
    pub norm1: NormSpec,
    /// Calderón constant `C`, when known.
    pub c_constant: Option<f64>,
}

impl Couple {
    pub fn new(space: MeasureSpace, norm0: NormSpec, norm1: NormSpec, c_constant: Option<f64>) -> Result<Self> {
        norm0.validate()?;
        norm1.validate()?;
        if let Some(c) = c_constant {
            if !(c.is_finite() && c >= 1.0) {
                return Err(Error::domain(format!("Calderón constant must be >= 1, got {c}")));
            }
        }
        Ok(Self { space, norm0, norm1, c_constant })
    }

    /// `(ℓ¹(w), ℓ∞)`, a positive 1-Calderón couple.
    pub fn l1_linf(space: MeasureSpace) -> Self {
        Self { space, norm0: NormSpec::l1(), norm1: NormSpec::linf(), c_constant: Some(1.0) }
    }

    /// `(X₀^(p), X₁^(p))`. The Calderón constant is not carried over.
    pub fn convexify(&self, p: f64) -> Result<Couple> {
        Ok(Couple {
            space: self.space.clone(),
            norm0: self.norm0.convexify(p)?,
            norm1: self.norm1.convexify(p)?,
            c_constant: None,
        })
    }

    /// `(X₁, X₀)`.
    pub fn swapped(&self) -> Couple {
        Couple {
            space: self.space.clone(),
            norm0: self.norm1.clone(),
            norm1: self.norm0.clone(),
            c_constant: self.c_constant,
        }
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    /// Both norms reduce to `ℓ¹(w)` and `ℓ∞` respectively.
    pub fn is_l1_linf(&self) -> bool {
        self.norm0.effective_exponent() == Exponent::Finite(1.0) && self.norm1.effective_exponent().is_infinite()
    }

    pub fn norm0(&self, f: &[f64]) -> Result<f64> {
        self.norm0.norm(&self.space, f)
    }

    pub fn norm1(&self, f: &[f64]) -> Result<f64> {
        self.norm1.norm(&self.space, f)
    }
}

/// Least upper bound of a finite family: the pointwise maximum.
pub fn lub(family: &[LatticeVector]) -> Result<LatticeVector> {
    let (first, rest) = family
        .split_first()
        .ok_or_else(|| Error::domain("least upper bound of an empty family"))?;
    rest.iter().try_fold(first.clone(), |acc, v| acc.pointwise_max(v))
}

/// Least upper bound assembled from the two pieces `lub{aχ_E}` and
/// `lub{aχ_{Ω∖E}}`, as when a sum lattice is split along a set `E`.
pub fn lub_by_split(family: &[LatticeVector], mask: &[bool]) -> Result<LatticeVector> {
    let n = family.first().map(|v| v.len()).unwrap_or(0);
    if mask.len() != n {
        return Err(Error::Dimension { expected: n, found: mask.len() });
    }
    let complement: Vec<bool> = mask.iter().map(|m| !m).collect();
    let on_e: Vec<_> = family.iter().map(|a| a.restrict(mask)).collect();
    let off_e: Vec<_> = family.iter().map(|a| a.restrict(&complement)).collect();
    lub(&on_e)?.add(&lub(&off_e)?)
}

/// Least upper bound via the nonnegative family `{max(g, g₀) − g₀}`,
/// shifted back by the anchor `g₀ = family[anchor]`.
pub fn lub_by_nonnegative_shift(family: &[LatticeVector], anchor: usize) -> Result<LatticeVector> {
    let g0 = family
        .get(anchor)
        .ok_or_else(|| Error::domain(format!("anchor {anchor} outside family of {}", family.len())))?;
    let shifted = family
        .iter()
        .map(|g| g.pointwise_max(g0)?.sub(g0))
        .collect::<Result<Vec<_>>>()?;
    lub(&shifted)?.add(g0)
}

/// Least upper bound of a nonnegative family bounded by multiples of `f0`,
/// computed in the `L∞(supp f0)` picture: `f0 · lub{χ_{supp f0}·u/f0}`.
pub fn lub_by_localization(family: &[LatticeVector], f0: &LatticeVector) -> Result<LatticeVector> {
    if !f0.is_nonnegative() {
        return Err(Error::domain("localizing element must be nonnegative"));
    }
    for u in family {
        if u.len() != f0.len() {
            return Err(Error::Dimension { expected: f0.len(), found: u.len() });
        }
        if !u.is_nonnegative() || u.iter().zip(f0.iter()).any(|(&a, &b)| b == 0.0 && a != 0.0) {
            return Err(Error::domain("family must be nonnegative and vanish off supp f0"));
        }
    }
    let quotients: Vec<_> = family
        .iter()
        .map(|u| {
            LatticeVector::from_vec_unchecked(
                u.iter().zip(f0.iter()).map(|(&a, &b)| if b > 0.0 { a / b } else { 0.0 }).collect(),
            )
        })
        .collect();
    let u0 = lub(&quotients)?;
    Ok(LatticeVector::from_vec_unchecked(u0.iter().zip(f0.iter()).map(|(u, b)| u * b).collect()))
}

/// `lub{a^p : a ∈ A}` for a nonnegative family.
pub fn lub_of_powers(family: &[LatticeVector], p: f64) -> Result<LatticeVector> {
    if family.iter().any(|a| !a.is_nonnegative()) {
        return Err(Error::domain("power identity needs a nonnegative family"));
    }
    let powered: Vec<_> = family.iter().map(|a| a.abs_pow(p)).collect();
    lub(&powered)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> LatticeVector {
        LatticeVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn norm_examples() {
        let space = MeasureSpace::counting(2).unwrap();
        assert_eq!(NormSpec::l1().norm(&space, &[3.0, 4.0]).unwrap(), 7.0);
        let conv = NormSpec::l1().convexify(2.0).unwrap();
        assert!((conv.norm(&space, &[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(conv.norm(&space, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(NormSpec::linf().norm(&space, &[-3.0, 2.0]).unwrap(), 3.0);
    }

    #[test]
    fn norm_rejects_wrong_dimension() {
        let space = MeasureSpace::counting(3).unwrap();
        assert!(matches!(
            NormSpec::l1().norm(&space, &[1.0]),
            Err(Error::Dimension { expected: 3, found: 1 })
        ));
    }

    #[test]
    fn convexify_domain() {
        assert!(NormSpec::l1().convexify(1.0).is_err());
        assert!(NormSpec::l1().convexify(f64::INFINITY).is_err());
        assert!(NormSpec::l1().convexify(0.5).is_err());
        assert!(NormSpec::weighted_p(Exponent::Finite(0.5)).is_err());
    }

    #[test]
    fn convexified_indicator_is_normalized() {
        let space = MeasureSpace::new(vec![1.0, 3.0]).unwrap();
        let spec = NormSpec::l1().convexify(3.0).unwrap();
        assert_eq!(spec.norm(&space, &[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn effective_exponent_nests() {
        let s = NormSpec::weighted_p(Exponent::Finite(1.5)).unwrap().convexify(2.0).unwrap().convexify(3.0).unwrap();
        assert_eq!(s.effective_exponent(), Exponent::Finite(9.0));
        assert_eq!(NormSpec::linf().convexify(2.0).unwrap().effective_exponent(), Exponent::Infinity);
    }

    #[test]
    fn abs_and_signs() {
        assert_eq!(v(&[1.0, -3.0, 2.0]).abs(), v(&[1.0, 3.0, 2.0]));
        let f = v(&[1.0, -3.0, 2.0]);
        assert_eq!(f.sign_multiply(&[1.0, 1.0, 1.0]).unwrap(), f);
        assert!(f.sign_multiply(&[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn lub_examples() {
        assert_eq!(lub(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap(), v(&[1.0, 1.0]));
        assert_eq!(lub(&[v(&[2.0, -1.0])]).unwrap(), v(&[2.0, -1.0]));
        assert!(lub(&[]).is_err());
    }

    #[test]
    fn support_examples() {
        assert_eq!(v(&[0.0, 5.0, 0.0]).support(), vec![1]);
        assert!(LatticeVector::zeros(4).support().is_empty());
    }

    #[test]
    fn exponent_parsing() {
        let e: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(e, Exponent::Infinity);
        let e: Exponent = serde_json::from_str("2").unwrap();
        assert_eq!(e, Exponent::Finite(2.0));
        let spec: NormSpec = serde_json::from_str(r#"{"type":"weighted_p","p":"inf"}"#).unwrap();
        assert_eq!(spec, NormSpec::linf());
        let spec: NormSpec =
            serde_json::from_str(r#"{"type":"convexified","p":2.0,"base":{"type":"weighted_p","p":1}}"#).unwrap();
        assert_eq!(spec.effective_exponent(), Exponent::Finite(2.0));
    }

    #[test]
    fn measure_space_invariants() {
        assert!(MeasureSpace::new(vec![]).is_err());
        assert!(MeasureSpace::new(vec![1.0, 0.0]).is_err());
        assert!(MeasureSpace::new(vec![1.0, f64::INFINITY]).is_err());
        assert!(LatticeVector::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn couple_constant_bounds() {
        let space = MeasureSpace::counting(2).unwrap();
        assert!(Couple::new(space.clone(), NormSpec::l1(), NormSpec::linf(), Some(0.5)).is_err());
        assert!(Couple::new(space, NormSpec::l1(), NormSpec::linf(), Some(1.0)).is_ok());
    }
}
