//! Exact arithmetic in the cyclotomic field `Q(ζ_k)`, `ζ = exp(2πi/k)`.
//!
//! A [`FieldElement`] is a point of the plane written in the power basis
//! `1, ζ, …, ζ^{φ(k)-1}`. Every input is reduced modulo the k-th cyclotomic
//! polynomial, so two elements are equal exactly when their coefficient
//! vectors are equal. Rotations by multiples of `2π/k`, reflections, scaling by
//! rationals and all vertex coordinates of a nested fractal with `k` essential
//! fixed points stay inside this field.

use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational number, always in lowest terms with a positive denominator.
pub type Rational = BigRational;

/// Parses `p/q` or `p` into a [`Rational`].
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let r: Rational = t
        .parse()
        .map_err(|_| Error::Parse(format!("not a rational number: {s:?}")))?;
    Ok(r)
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rational_to_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Precomputed data of `Q(ζ_k)`.
#[derive(Debug)]
pub struct Cyclotomic {
    order: u32,
    degree: usize,
    /// `powers[j]` is `ζ^j` in the canonical basis, `0 <= j < k`.
    powers: Vec<Vec<i64>>,
    /// Exponents `t` coprime to `k`, excluding 1: the non-trivial Galois automorphisms `ζ ↦ ζ^t`.
    galois: Vec<u32>,
    cos_sin: Vec<(f64, f64)>,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Integer coefficients (lowest degree first) of the n-th cyclotomic polynomial.
fn cyclotomic_poly(n: u32) -> Vec<i64> {
    // x^n - 1 divided by Φ_d for every proper divisor d of n.
    let mut p = vec![0i64; n as usize + 1];
    p[0] = -1;
    p[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            p = poly_div_exact(&p, &cyclotomic_poly(d));
        }
    }
    p
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let nd = num.len() - 1;
    let mut q = vec![0i64; nd - dd + 1];
    for i in (0..=nd - dd).rev() {
        // den is monic
        let c = rem[i + dd];
        q[i] = c;
        for (j, &dc) in den.iter().enumerate() {
            rem[i + j] -= c * dc;
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    q
}

impl Cyclotomic {
    fn new(order: u32) -> Self {
        assert!(order >= 1, "cyclotomic order must be positive");
        let phi = cyclotomic_poly(order);
        let degree = phi.len() - 1;
        let k = order as usize;
        // ζ^j for j < degree is a basis vector; higher powers reduce via Φ_k.
        let mut powers = Vec::with_capacity(k);
        let mut cur = vec![0i64; degree];
        cur[0] = 1;
        for _ in 0..k {
            powers.push(cur.clone());
            // multiply by ζ
            let top = cur[degree - 1];
            let mut next = vec![0i64; degree];
            next[1..degree].copy_from_slice(&cur[..(degree - 1)]);
            for i in 0..degree {
                next[i] -= top * phi[i];
            }
            cur = next;
        }
        let galois = (2..order.max(2))
            .filter(|&t| gcd(t, order) == 1)
            .collect::<Vec<_>>();
        let cos_sin = (0..k)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                (a.cos(), a.sin())
            })
            .collect();
        Cyclotomic {
            order,
            degree,
            powers,
            galois,
            cos_sin,
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `φ(k)`, the dimension over `Q`.
    pub fn degree(&self) -> usize {
        self.degree
    }
}

/// Shared handle to the field of order `k`.
pub fn cyclotomic(order: u32) -> Arc<Cyclotomic> {
    static FIELDS: OnceLock<Mutex<HashMap<u32, Arc<Cyclotomic>>>> = OnceLock::new();
    let map = FIELDS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().expect("field registry poisoned");
    guard
        .entry(order)
        .or_insert_with(|| Arc::new(Cyclotomic::new(order)))
        .clone()
}

/// Exact element of `Q(ζ_k)` in canonical form.
#[derive(Clone)]
pub struct FieldElement {
    field: Arc<Cyclotomic>,
    coeffs: Vec<Rational>,
}

impl PartialEq for FieldElement {
    fn eq(&self, other: &Self) -> bool {
        self.field.order == other.field.order && self.coeffs == other.coeffs
    }
}

impl Eq for FieldElement {}

/// Lexicographic on canonical coefficients; no geometric meaning, used for
/// deterministic ordering.
impl Ord for FieldElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.field
            .order
            .cmp(&other.field.order)
            .then_with(|| self.coeffs.cmp(&other.coeffs))
    }
}

impl PartialOrd for FieldElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Hash for FieldElement {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.field.order.hash(state);
        self.coeffs.hash(state);
    }
}

/// Serialized as the `k` padded coefficient strings, so the order is implied
/// by the length.
impl serde::Serialize for FieldElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.to_coeff_strings())
    }
}

impl<'de> serde::Deserialize<'de> for FieldElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<String> = serde::Deserialize::deserialize(d)?;
        if v.len() < 3 {
            return Err(serde::de::Error::custom(
                "field element needs k >= 3 coefficients",
            ));
        }
        FieldElement::from_coeff_strs(v.len() as u32, &v).map_err(serde::de::Error::custom)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", rational_to_string(c))?;
        }
        write!(f, "]")
    }
}

impl FieldElement {
    pub fn zero(order: u32) -> Self {
        let field = cyclotomic(order);
        let coeffs = vec![Rational::zero(); field.degree];
        FieldElement { field, coeffs }
    }

    pub fn one(order: u32) -> Self {
        Self::from_rational(order, Rational::one())
    }

    pub fn from_rational(order: u32, r: Rational) -> Self {
        let mut x = Self::zero(order);
        x.coeffs[0] = r;
        x
    }

    pub fn from_int(order: u32, n: i64) -> Self {
        Self::from_rational(order, Rational::from_integer(BigInt::from(n)))
    }

    /// `ζ^j`, with `j` taken modulo `k`.
    pub fn zeta_pow(order: u32, j: i64) -> Self {
        let field = cyclotomic(order);
        let jj = j.rem_euclid(order as i64) as usize;
        let coeffs = field.powers[jj]
            .iter()
            .map(|&c| Rational::from_integer(BigInt::from(c)))
            .collect();
        FieldElement { field, coeffs }
    }

    /// Builds `Σ c_j ζ^j` from arbitrarily many coefficients (indices taken mod k) and reduces it.
    pub fn from_coeffs(order: u32, coeffs: &[Rational]) -> Self {
        let field = cyclotomic(order);
        let mut out = vec![Rational::zero(); field.degree];
        let k = order as usize;
        for (j, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(&field.powers[j % k]) {
                if p != 0 {
                    *o += c * Rational::from_integer(BigInt::from(p));
                }
            }
        }
        FieldElement { field, coeffs: out }
    }

    pub fn from_coeff_strs<S: AsRef<str>>(order: u32, coeffs: &[S]) -> Result<Self> {
        let cs = coeffs
            .iter()
            .map(|s| parse_rational(s.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_coeffs(order, &cs))
    }

    /// Parses `"c0,c1,..."`, optionally wrapped in brackets.
    pub fn parse(order: u32, s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('[').trim_end_matches(']');
        let parts: Vec<&str> = t
            .split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .collect();
        if parts.is_empty() {
            return Err(Error::Parse(format!("empty field element {s:?}")));
        }
        Self::from_coeff_strs(order, &parts)
    }

    pub fn order(&self) -> u32 {
        self.field.order
    }

    /// Canonical coefficients; length `φ(k)`.
    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// Canonical coefficients padded with zeros to length `k`, as `p/q` strings.
    pub fn to_coeff_strings(&self) -> Vec<String> {
        let mut v: Vec<String> = self.coeffs.iter().map(rational_to_string).collect();
        v.resize(self.field.order as usize, "0".to_string());
        v
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// True when the element is a rational number.
    pub fn as_rational(&self) -> Option<&Rational> {
        if self.coeffs[1..].iter().all(Zero::is_zero) {
            Some(&self.coeffs[0])
        } else {
            None
        }
    }

    fn same_field(&self, other: &Self) {
        assert_eq!(
            self.field.order, other.field.order,
            "mixing elements of different cyclotomic fields"
        );
    }

    pub fn scale(&self, r: &Rational) -> Self {
        FieldElement {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|c| c * r).collect(),
        }
    }

    /// The Galois automorphism `ζ ↦ ζ^t`.
    pub fn galois(&self, t: i64) -> Self {
        let k = self.field.order as i64;
        let mut out = vec![Rational::zero(); self.field.degree];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let idx = ((i as i64) * t).rem_euclid(k) as usize;
            for (o, &p) in out.iter_mut().zip(&self.field.powers[idx]) {
                if p != 0 {
                    *o += c * Rational::from_integer(BigInt::from(p));
                }
            }
        }
        FieldElement {
            field: self.field.clone(),
            coeffs: out,
        }
    }

    /// Complex conjugation, `ζ ↦ ζ^{k-1}`.
    pub fn conj(&self) -> Self {
        self.galois(self.field.order as i64 - 1)
    }

    /// Multiplicative inverse; fails on zero.
    pub fn inverse(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::domain("division by zero in cyclotomic field"));
        }
        // a * Π_{t≠1} σ_t(a) is the field norm, a rational number.
        let mut cof = FieldElement::one(self.field.order);
        for &t in &self.field.galois {
            cof = &cof * &self.galois(t as i64);
        }
        let norm = self * &cof;
        let n = norm
            .as_rational()
            .ok_or_else(|| Error::integrity("field norm is not rational"))?
            .clone();
        Ok(cof.scale(&n.recip()))
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self> {
        self.same_field(other);
        Ok(self * &other.inverse()?)
    }

    /// `|z|^2 = z · conj(z)`, an element of the real subfield.
    pub fn norm_sq(&self) -> Self {
        self * &self.conj()
    }

    /// Floating-point shadow `(re, im)`. Never used for equality.
    pub fn to_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        for (c, &(cs, sn)) in self.coeffs.iter().zip(&self.field.cos_sin) {
            if c.is_zero() {
                continue;
            }
            let v = c.to_f64().unwrap_or(f64::NAN);
            re += v * cs;
            im += v * sn;
        }
        (re, im)
    }

    /// Real part of the floating shadow; meaningful for elements of the real subfield.
    pub fn to_f64(&self) -> f64 {
        self.to_complex().0
    }

    pub fn abs_f64(&self) -> f64 {
        let (x, y) = self.to_complex();
        x.hypot(y)
    }

    /// Sign of a real element decided exactly where possible.
    pub fn is_negative_real(&self) -> bool {
        match self.as_rational() {
            Some(r) => r.is_negative(),
            None => self.to_f64() < 0.0,
        }
    }
}

impl<'a> Add<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: &'a FieldElement) -> FieldElement {
        self.same_field(rhs);
        FieldElement {
            field: self.field.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: &'a FieldElement) -> FieldElement {
        self.same_field(rhs);
        FieldElement {
            field: self.field.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            field: self.field.clone(),
            coeffs: self.coeffs.iter().map(|a| -a).collect(),
        }
    }
}

impl<'a> Mul<&'a FieldElement> for &'a FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: &'a FieldElement) -> FieldElement {
        self.same_field(rhs);
        let d = self.field.degree;
        let mut prod = vec![Rational::zero(); 2 * d - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                prod[i + j] += a * b;
            }
        }
        let k = self.field.order as usize;
        let mut out = vec![Rational::zero(); d];
        for (j, c) in prod.into_iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if j < d {
                out[j] += c;
                continue;
            }
            for (o, &p) in out.iter_mut().zip(&self.field.powers[j % k]) {
                if p != 0 {
                    *o += &c * Rational::from_integer(BigInt::from(p));
                }
            }
        }
        FieldElement {
            field: self.field.clone(),
            coeffs: out,
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: FieldElement) -> FieldElement {
                (&self).$m(&rhs)
            }
        }
        impl<'a> $tr<&'a FieldElement> for FieldElement {
            type Output = FieldElement;
            fn $m(self, rhs: &'a FieldElement) -> FieldElement {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        -&self
    }
}

/// The arithmetic operations exposed on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Div,
    Conj,
}

/// Applies `op` to `a` (and `b`, ignored for conjugation).
pub fn field_arith(a: &FieldElement, b: &FieldElement, op: FieldOp) -> Result<FieldElement> {
    Ok(match op {
        FieldOp::Add => a + b,
        FieldOp::Sub => a - b,
        FieldOp::Mul => a * b,
        FieldOp::Div => {
            let q = a.checked_div(b)?;
            if &(&q * b) != a {
                return Err(Error::integrity("division check (a/b)*b = a failed"));
            }
            q
        }
        FieldOp::Conj => a.conj(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn z(k: u32, j: i64) -> FieldElement {
        FieldElement::zeta_pow(k, j)
    }

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(cyclotomic_poly(9).len(), 7);
    }

    #[test]
    fn i_squared_is_minus_one() {
        let i = z(4, 1);
        let sq = field_arith(&i, &i, FieldOp::Mul).unwrap();
        assert_eq!(sq, FieldElement::from_int(4, -1));
        assert_eq!(sq, z(4, 2));
    }

    #[test]
    fn conjugate_of_i() {
        let c = field_arith(&z(4, 1), &z(4, 0), FieldOp::Conj).unwrap();
        assert_eq!(c, z(4, 3));
        assert_eq!(c, -z(4, 1));
    }

    #[test]
    fn cube_roots_sum_to_zero() {
        let s = &(&z(3, 0) + &z(3, 1)) + &z(3, 2);
        assert!(s.is_zero());
    }

    #[test]
    fn division_by_zero_is_domain_error() {
        let e = field_arith(&z(5, 1), &FieldElement::zero(5), FieldOp::Div).unwrap_err();
        assert!(matches!(e, Error::Domain(_)));
    }

    #[test]
    fn float_shadow_of_zeta() {
        let (x, y) = z(6, 1).to_complex();
        assert!((x - 0.5).abs() < 1e-15);
        assert!((y - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn parse_round_trip() {
        let a = FieldElement::parse(6, "[1/2, -3, 0, 0, 7/5, 0]").unwrap();
        let b = FieldElement::from_coeff_strs(6, &a.to_coeff_strings()).unwrap();
        assert_eq!(a, b);
    }

    fn elem(k: u32) -> impl Strategy<Value = FieldElement> {
        proptest::collection::vec((-20i64..20, 1i64..9), k as usize).prop_map(move |cs| {
            let rs: Vec<Rational> = cs.into_iter().map(|(n, d)| rat(n, d)).collect();
            FieldElement::from_coeffs(k, &rs)
        })
    }

    proptest! {
        #[test]
        fn division_inverts_multiplication(
            (a, b) in prop::sample::select(vec![3u32, 4, 5, 6, 8, 9]).prop_flat_map(|k| (elem(k), elem(k)))
        ) {
            prop_assume!(!b.is_zero());
            let q = field_arith(&a, &b, FieldOp::Div).unwrap();
            prop_assert_eq!(&q * &b, a);
        }

        #[test]
        fn serialization_round_trip(a in elem(6)) {
            let s = a.to_string();
            prop_assert_eq!(&FieldElement::parse(6, &s).unwrap(), &a);
            let j = serde_json::to_string(&a).unwrap();
            prop_assert_eq!(serde_json::from_str::<FieldElement>(&j).unwrap(), a);
        }

        #[test]
        fn conj_is_multiplicative(a in elem(5), b in elem(5)) {
            prop_assert_eq!((&a * &b).conj(), &a.conj() * &b.conj());
            prop_assert_eq!(a.conj().conj(), a);
        }
    }
}
