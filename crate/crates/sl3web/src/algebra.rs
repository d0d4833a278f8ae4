//! Exact sparse multivariate polynomial arithmetic over the integers.
//!
//! Every identity check in this crate bottoms out here, so coefficients are
//! arbitrary-precision integers and all operations are exact. The generic
//! [`Poly`] allows integer (possibly negative) exponents; the main instance
//! [`IntPolynomial`] uses [`CoordVar`] variables with nonnegative exponents,
//! while the cluster machinery reuses the same core as a Laurent ring over
//! symbolic cluster variables.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("division by the zero polynomial")]
    ZeroDivisor,
    #[error("malformed polynomial text: {0}")]
    Parse(String),
}

/// Kind of a coordinate variable: `x` components of a vector argument or
/// `y` components of a covector argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarKind {
    X,
    Y,
}

/// A coordinate variable `x_axis(vertex)` or `y_axis(vertex)`.
///
/// Ordering is lexicographic on (kind, vertex, axis), which fixes the
/// canonical term order used in the text serialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CoordVar {
    pub kind: VarKind,
    pub vertex: u32,
    pub axis: u8,
}

impl CoordVar {
    pub fn x(axis: u8, vertex: u32) -> Self {
        debug_assert!((1..=3).contains(&axis));
        CoordVar { kind: VarKind::X, vertex, axis }
    }

    pub fn y(axis: u8, vertex: u32) -> Self {
        debug_assert!((1..=3).contains(&axis));
        CoordVar { kind: VarKind::Y, vertex, axis }
    }
}

impl fmt::Display for CoordVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            VarKind::X => 'x',
            VarKind::Y => 'y',
        };
        write!(f, "{}{}({})", k, self.axis, self.vertex)
    }
}

/// A monomial: finite map from variables to nonzero exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial<V: Ord>(BTreeMap<V, i64>);

impl<V: Ord + Clone> Monomial<V> {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(v: V) -> Self {
        Monomial(BTreeMap::from_iter([(v, 1)]))
    }

    pub fn from_exponents(it: impl IntoIterator<Item = (V, i64)>) -> Self {
        let mut m = BTreeMap::new();
        for (v, e) in it {
            if e != 0 {
                *m.entry(v).or_insert(0) += e;
            }
        }
        m.retain(|_, e| *e != 0);
        Monomial(m)
    }

    pub fn exponents(&self) -> impl Iterator<Item = (&V, i64)> {
        self.0.iter().map(|(v, e)| (v, *e))
    }

    pub fn exponent(&self, v: &V) -> i64 {
        self.0.get(v).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> i64 {
        self.0.values().sum()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            let slot = m.entry(v.clone()).or_insert(0);
            *slot += e;
            if *slot == 0 {
                m.remove(v);
            }
        }
        Monomial(m)
    }

    /// Quotient monomial, requiring the result to have nonnegative exponents.
    pub fn div_nonneg(&self, other: &Self) -> Option<Self> {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            let slot = m.entry(v.clone()).or_insert(0);
            *slot -= e;
            if *slot == 0 {
                m.remove(v);
            }
        }
        if m.values().any(|e| *e < 0) {
            None
        } else {
            Some(Monomial(m))
        }
    }

    /// Quotient monomial in the Laurent sense (exponents may go negative).
    pub fn div_laurent(&self, other: &Self) -> Self {
        let mut m = self.0.clone();
        for (v, e) in &other.0 {
            let slot = m.entry(v.clone()).or_insert(0);
            *slot -= e;
            if *slot == 0 {
                m.remove(v);
            }
        }
        Monomial(m)
    }
}

impl<V: Ord + Clone> PartialOrd for Monomial<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded order: total degree first, then lexicographic on the exponent maps.
impl<V: Ord + Clone> Ord for Monomial<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| {
                let a: Vec<_> = self.0.iter().collect();
                let b: Vec<_> = other.0.iter().collect();
                // Lexicographic on (variable, exponent) pairs; earlier
                // variables with higher exponents compare larger.
                for ((va, ea), (vb, eb)) in a.iter().zip(b.iter()) {
                    match va.cmp(vb) {
                        std::cmp::Ordering::Less => return std::cmp::Ordering::Greater,
                        std::cmp::Ordering::Greater => return std::cmp::Ordering::Less,
                        std::cmp::Ordering::Equal => match ea.cmp(eb) {
                            std::cmp::Ordering::Equal => continue,
                            ord => return ord,
                        },
                    }
                }
                a.len().cmp(&b.len())
            })
    }
}

/// A sparse polynomial with `BigInt` coefficients.
///
/// Invariant: no zero coefficients are stored. Values are immutable in
/// spirit: all operations return fresh polynomials, so sharing across
/// threads needs no synchronization.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly<V: Ord + Clone> {
    terms: BTreeMap<Monomial<V>, BigInt>,
}

/// The main coefficient ring used across the crate: exact integer
/// polynomials in the boundary coordinates `x_i(v)`, `y_i(v)`.
pub type IntPolynomial = Poly<CoordVar>;

pub enum Division<V: Ord + Clone> {
    Exact(Poly<V>),
    NotDivisible,
}

impl<V: Ord + Clone> Poly<V> {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(BigInt::one())
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(v: V) -> Self {
        Poly {
            terms: BTreeMap::from_iter([(Monomial::var(v), BigInt::one())]),
        }
    }

    pub fn monomial(m: Monomial<V>, c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<V>, &BigInt)> {
        self.terms.iter()
    }

    /// The constant value, if the polynomial is constant.
    pub fn as_constant(&self) -> Option<BigInt> {
        if self.terms.is_empty() {
            return Some(BigInt::zero());
        }
        if self.terms.len() == 1 {
            let (m, c) = self.terms.iter().next().unwrap();
            if m.degree() == 0 && m.exponents().next().is_none() {
                return Some(c.clone());
            }
        }
        None
    }

    pub fn add_term(&mut self, m: Monomial<V>, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(BigInt::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), &(ca * cb));
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial<V>, c: &BigInt) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(ma, ca)| (ma.mul(m), ca * c))
                .collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one();
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    fn leading(&self) -> Option<(&Monomial<V>, &BigInt)> {
        self.terms.iter().next_back()
    }

    /// Exact division: returns `Exact(r)` with `q * r == self`, or
    /// `NotDivisible`. Fails with [`AlgebraError::ZeroDivisor`] if `q` is
    /// zero. The quotient search runs leading-term elimination in the graded
    /// order, so it terminates on every input.
    pub fn divide_exact(&self, q: &Self) -> Result<Division<V>, AlgebraError> {
        if q.is_zero() {
            return Err(AlgebraError::ZeroDivisor);
        }
        let (qm, qc) = q.leading().unwrap();
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some((rm, rc)) = rem.leading() {
            let Some(m) = rm.div_nonneg(qm) else {
                return Ok(Division::NotDivisible);
            };
            let (c, r) = num_integer::div_rem(rc.clone(), qc.clone());
            if !r.is_zero() {
                return Ok(Division::NotDivisible);
            }
            quot.add_term(m.clone(), &c);
            rem = rem.sub(&q.mul_monomial(&m, &c));
        }
        Ok(Division::Exact(quot))
    }

    /// Exact division in the Laurent ring: exponents of the quotient may be
    /// negative. Both operands are shifted into the ordinary polynomial ring
    /// first, so this is exact and complete.
    pub fn divide_exact_laurent(&self, q: &Self) -> Result<Division<V>, AlgebraError> {
        if q.is_zero() {
            return Err(AlgebraError::ZeroDivisor);
        }
        if self.is_zero() {
            return Ok(Division::Exact(Self::zero()));
        }
        let shift_a = self.min_exponent_monomial();
        let shift_b = q.min_exponent_monomial();
        let a = self.shift_down(&shift_a);
        let b = q.shift_down(&shift_b);
        match a.divide_exact(&b)? {
            Division::NotDivisible => Ok(Division::NotDivisible),
            Division::Exact(r) => {
                let shift = shift_a.div_laurent(&shift_b);
                Ok(Division::Exact(r.mul_monomial(&shift, &BigInt::one())))
            }
        }
    }

    /// Monomial of per-variable minimum exponents, clamped at 0 from above:
    /// dividing by it clears all negative exponents.
    fn min_exponent_monomial(&self) -> Monomial<V> {
        let mut mins: BTreeMap<V, i64> = BTreeMap::new();
        for (i, (m, _)) in self.terms.iter().enumerate() {
            let mut seen: BTreeMap<&V, i64> = BTreeMap::new();
            for (v, e) in m.exponents() {
                seen.insert(v, e);
            }
            if i == 0 {
                for (v, e) in seen {
                    mins.insert(v.clone(), e.min(0));
                }
            } else {
                for (v, e) in mins.iter_mut() {
                    *e = (*e).min(seen.get(v).copied().unwrap_or(0));
                }
                for (v, e) in seen {
                    mins.entry(v.clone()).or_insert_with(|| e.min(0));
                }
            }
        }
        mins.retain(|_, e| *e != 0);
        Monomial::from_exponents(mins)
    }

    fn shift_down(&self, shift: &Monomial<V>) -> Self {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.div_laurent(shift), c.clone()))
                .collect(),
        }
    }

    /// Per-variable minimum exponent over all terms (for variables that
    /// appear); used by the Laurent-denominator checks.
    pub fn min_exponents(&self) -> BTreeMap<V, i64> {
        let mut mins: BTreeMap<V, i64> = BTreeMap::new();
        let mut first = true;
        for (m, _) in self.terms.iter() {
            let mut seen: BTreeMap<V, i64> = BTreeMap::new();
            for (v, e) in m.exponents() {
                seen.insert(v.clone(), e);
            }
            if first {
                mins = seen;
                first = false;
            } else {
                let keys: Vec<V> = mins.keys().cloned().collect();
                for v in keys {
                    let e = seen.get(&v).copied().unwrap_or(0);
                    let slot = mins.get_mut(&v).unwrap();
                    *slot = (*slot).min(e);
                }
                for (v, e) in seen {
                    mins.entry(v).or_insert_with(|| e.min(0));
                }
            }
        }
        mins
    }
}

impl IntPolynomial {
    /// Canonical text form: terms in descending graded-lex order, each as
    /// `coef * x1(2) * y3(4)^2`. Used by golden-file tests and the CLI.
    pub fn canonical_text(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let mut parts = Vec::new();
        for (m, c) in self.terms.iter().rev() {
            let mut piece = c.to_string();
            for (v, e) in m.exponents() {
                piece.push_str(" * ");
                piece.push_str(&v.to_string());
                if e != 1 {
                    piece.push_str(&format!("^{}", e));
                }
            }
            parts.push(piece);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_text())
    }
}

impl FromStr for IntPolynomial {
    type Err = AlgebraError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "0" {
            return Ok(IntPolynomial::zero());
        }
        let mut out = IntPolynomial::zero();
        for term in s.split(" + ") {
            let mut coef: Option<BigInt> = None;
            let mut mono: Vec<(CoordVar, i64)> = Vec::new();
            for factor in term.split(" * ") {
                let factor = factor.trim();
                if factor.is_empty() {
                    return Err(AlgebraError::Parse(format!("empty factor in `{term}`")));
                }
                if factor.starts_with(|c: char| c == 'x' || c == 'y') {
                    let (var, exp) = parse_var_power(factor)?;
                    mono.push((var, exp));
                } else if coef.is_none() {
                    coef = Some(
                        factor
                            .parse::<BigInt>()
                            .map_err(|e| AlgebraError::Parse(format!("bad coefficient `{factor}`: {e}")))?,
                    );
                } else {
                    return Err(AlgebraError::Parse(format!("unexpected factor `{factor}`")));
                }
            }
            let coef = coef.ok_or_else(|| AlgebraError::Parse(format!("term `{term}` lacks a coefficient")))?;
            out.add_term(Monomial::from_exponents(mono), &coef);
        }
        Ok(out)
    }
}

fn parse_var_power(s: &str) -> Result<(CoordVar, i64), AlgebraError> {
    let err = || AlgebraError::Parse(format!("bad variable `{s}`"));
    let (base, exp) = match s.split_once('^') {
        Some((b, e)) => (b, e.parse::<i64>().map_err(|_| err())?),
        None => (s, 1),
    };
    let kind = match base.as_bytes().first() {
        Some(b'x') => VarKind::X,
        Some(b'y') => VarKind::Y,
        _ => return Err(err()),
    };
    let rest = &base[1..];
    let open = rest.find('(').ok_or_else(err)?;
    let axis: u8 = rest[..open].parse().map_err(|_| err())?;
    let close = rest.find(')').ok_or_else(err)?;
    let vertex: u32 = rest[open + 1..close].parse().map_err(|_| err())?;
    Ok((CoordVar { kind, vertex, axis }, exp))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(axis: u8, vertex: u32) -> IntPolynomial {
        IntPolynomial::var(CoordVar::x(axis, vertex))
    }

    fn y(axis: u8, vertex: u32) -> IntPolynomial {
        IntPolynomial::var(CoordVar::y(axis, vertex))
    }

    #[test]
    fn additive_identity_and_inverse() {
        let p = x(1, 1).mul(&y(2, 3)).add(&IntPolynomial::constant(7));
        assert_eq!(p.add(&IntPolynomial::zero()), p);
        assert!(p.add(&p.neg()).is_zero());
    }

    #[test]
    fn coefficient_addition() {
        let p = x(1, 1).add(&x(1, 1));
        assert_eq!(p, x(1, 1).scale(&BigInt::from(2)));
    }

    #[test]
    fn monomial_product() {
        let p = x(1, 1).mul(&y(1, 2));
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.canonical_text(), "1 * x1(1) * y1(2)");
    }

    #[test]
    fn exact_division_roundtrip() {
        let p = x(1, 1).add(&y(2, 2).scale(&BigInt::from(-3)));
        let q = x(3, 4).mul(&x(3, 4)).add(&IntPolynomial::constant(5));
        let prod = p.mul(&q);
        match prod.divide_exact(&q).unwrap() {
            Division::Exact(r) => assert_eq!(r, p),
            Division::NotDivisible => panic!("expected exact division"),
        }
    }

    #[test]
    fn disjoint_supports_not_divisible() {
        let p = x(1, 1);
        let q = y(1, 1);
        match p.divide_exact(&q).unwrap() {
            Division::NotDivisible => {}
            Division::Exact(_) => panic!("x1(1)/y1(1) should not divide"),
        }
    }

    #[test]
    fn zero_divisor_is_an_error() {
        let p = x(1, 1);
        assert_eq!(
            p.divide_exact(&IntPolynomial::zero()).unwrap_err(),
            AlgebraError::ZeroDivisor
        );
    }

    #[test]
    fn text_roundtrip() {
        let p = x(1, 2)
            .mul(&x(1, 2))
            .scale(&BigInt::from(-4))
            .add(&y(3, 1).mul(&x(2, 5)))
            .add(&IntPolynomial::constant(11));
        let text = p.canonical_text();
        let q: IntPolynomial = text.parse().unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn laurent_division_shifts() {
        // (x + y) * x^{-1} in the Laurent ring.
        let xv = CoordVar::x(1, 1);
        let yv = CoordVar::y(1, 1);
        let p = IntPolynomial::var(xv).add(&IntPolynomial::var(yv));
        let q = IntPolynomial::var(xv);
        match p.divide_exact_laurent(&q).unwrap() {
            Division::Exact(r) => {
                let expect = IntPolynomial::one().add(&IntPolynomial::monomial(
                    Monomial::from_exponents([(yv, 1), (xv, -1)]),
                    1,
                ));
                assert_eq!(r, expect);
            }
            Division::NotDivisible => panic!("Laurent division should succeed"),
        }
    }
}
