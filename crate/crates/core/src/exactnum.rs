//! Exact scalars over Q, F_p and F_{p^k}.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(String, String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("{0} is not a prime power")]
    NotPrimePower(u64),
    #[error("bad field spec `{0}`")]
    BadFieldSpec(String),
}

/// Which field we compute in. Extension fields carry their modulus
/// (low degree first, monic, length k+1).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Characteristic0,
    PrimeField(u64),
    ExtensionField { p: u64, k: u32, modulus: Vec<u64> },
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 {
        return false;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Splits q = p^k, or None if q is not a prime power.
pub fn prime_power(q: u64) -> Option<(u64, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2;
    while p * p <= q && q % p != 0 {
        p += 1;
    }
    if q % p != 0 {
        p = q;
    }
    let (mut r, mut k) = (q, 0u32);
    while r % p == 0 {
        r /= p;
        k += 1;
    }
    if r == 1 && is_prime(p) {
        Some((p, k))
    } else {
        None
    }
}

// --- polynomials over F_p, coefficient vectors low degree first ---

fn poly_trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    // m monic
    let mut r = poly_trim(a.to_vec());
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        for (i, &c) in m.iter().enumerate() {
            let t = r[shift + i] + p - (lead * c) % p;
            r[shift + i] = t % p;
        }
        r = poly_trim(r);
    }
    r
}

fn poly_mul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x * y) % p;
        }
    }
    out
}

/// Enumerates monic polynomials of degree d in the order used for the
/// canonical modulus: the non-leading coefficients compared from the top down.
fn monic_polys(d: u32, p: u64) -> impl Iterator<Item = Vec<u64>> {
    let count = p.pow(d);
    (0..count).map(move |mut idx| {
        // idx read with the x^{d-1} coefficient most significant
        let mut coeffs = vec![0u64; d as usize + 1];
        coeffs[d as usize] = 1;
        for i in 0..d as usize {
            coeffs[i] = idx % p;
            idx /= p;
        }
        coeffs
    })
}

fn is_irreducible(f: &[u64], p: u64) -> bool {
    let deg = (f.len() - 1) as u32;
    for d in 1..=deg / 2 {
        for g in monic_polys(d, p) {
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Lexicographically least monic irreducible polynomial of degree k over F_p.
pub fn canonical_modulus(p: u64, k: u32) -> Vec<u64> {
    monic_polys(k, p)
        .find(|f| is_irreducible(f, p))
        .expect("irreducible polynomials exist in every degree")
}

impl FieldSpec {
    pub fn rational() -> Self {
        FieldSpec::Characteristic0
    }

    pub fn prime(p: u64) -> Result<Self, NumError> {
        if is_prime(p) {
            Ok(FieldSpec::PrimeField(p))
        } else {
            Err(NumError::NotPrime(p))
        }
    }

    /// F_q for a prime power q.
    pub fn finite(q: u64) -> Result<Self, NumError> {
        let (p, k) = prime_power(q).ok_or(NumError::NotPrimePower(q))?;
        if k == 1 {
            Ok(FieldSpec::PrimeField(p))
        } else {
            Ok(FieldSpec::ExtensionField { p, k, modulus: canonical_modulus(p, k) })
        }
    }

    pub fn characteristic(&self) -> u64 {
        match self {
            FieldSpec::Characteristic0 => 0,
            FieldSpec::PrimeField(p) => *p,
            FieldSpec::ExtensionField { p, .. } => *p,
        }
    }

    /// Number of elements, None for Q.
    pub fn order(&self) -> Option<u64> {
        match self {
            FieldSpec::Characteristic0 => None,
            FieldSpec::PrimeField(p) => Some(*p),
            FieldSpec::ExtensionField { p, k, .. } => Some(p.pow(*k)),
        }
    }

    pub fn zero(&self) -> Elem {
        match self {
            FieldSpec::Characteristic0 => Elem::Rat(BigRational::zero()),
            _ => Elem::Fin(0),
        }
    }

    pub fn one(&self) -> Elem {
        self.from_i64(1)
    }

    pub fn from_i64(&self, v: i64) -> Elem {
        match self {
            FieldSpec::Characteristic0 => Elem::Rat(BigRational::from_integer(BigInt::from(v))),
            _ => {
                let p = self.characteristic() as i64;
                Elem::Fin(v.rem_euclid(p) as u64)
            }
        }
    }

    pub fn from_bigint(&self, v: &BigInt) -> Elem {
        match self {
            FieldSpec::Characteristic0 => Elem::Rat(BigRational::from_integer(v.clone())),
            _ => {
                let p = BigInt::from(self.characteristic());
                Elem::Fin(v.mod_floor(&p).to_u64().unwrap())
            }
        }
    }

    /// Fraction num/den; fails in char p when p divides den.
    pub fn from_ratio(&self, num: i64, den: i64) -> Result<Elem, NumError> {
        let d = self.from_i64(den);
        let di = self.inv(&d)?;
        Ok(self.mul(&self.from_i64(num), &di))
    }

    /// All elements of a finite field, in encoding order.
    pub fn elements(&self) -> Vec<Elem> {
        match self.order() {
            Some(q) => (0..q).map(Elem::Fin).collect(),
            None => panic!("Q has no element list"),
        }
    }

    /// The polynomial x in F_{p^k} (or 1 in a prime field).
    pub fn generator(&self) -> Elem {
        match self {
            FieldSpec::ExtensionField { p, .. } => Elem::Fin(*p),
            _ => self.one(),
        }
    }

    fn decode(&self, v: u64) -> Vec<u64> {
        let (p, k) = match self {
            FieldSpec::ExtensionField { p, k, .. } => (*p, *k),
            _ => unreachable!(),
        };
        let mut out = Vec::with_capacity(k as usize);
        let mut v = v;
        for _ in 0..k {
            out.push(v % p);
            v /= p;
        }
        out
    }

    fn encode(&self, c: &[u64]) -> u64 {
        let p = self.characteristic();
        c.iter().rev().fold(0u64, |acc, &x| acc * p + x)
    }

    pub fn add(&self, a: &Elem, b: &Elem) -> Elem {
        match (self, a, b) {
            (FieldSpec::Characteristic0, Elem::Rat(x), Elem::Rat(y)) => Elem::Rat(x + y),
            (FieldSpec::PrimeField(p), Elem::Fin(x), Elem::Fin(y)) => Elem::Fin((x + y) % p),
            (FieldSpec::ExtensionField { p, .. }, Elem::Fin(x), Elem::Fin(y)) => {
                let (cx, cy) = (self.decode(*x), self.decode(*y));
                let s: Vec<u64> = cx.iter().zip(&cy).map(|(u, v)| (u + v) % p).collect();
                Elem::Fin(self.encode(&s))
            }
            _ => panic!("element does not belong to {self}"),
        }
    }

    pub fn neg(&self, a: &Elem) -> Elem {
        match (self, a) {
            (FieldSpec::Characteristic0, Elem::Rat(x)) => Elem::Rat(-x),
            (FieldSpec::PrimeField(p), Elem::Fin(x)) => Elem::Fin((p - x) % p),
            (FieldSpec::ExtensionField { p, .. }, Elem::Fin(x)) => {
                let c: Vec<u64> = self.decode(*x).iter().map(|u| (p - u) % p).collect();
                Elem::Fin(self.encode(&c))
            }
            _ => panic!("element does not belong to {self}"),
        }
    }

    pub fn sub(&self, a: &Elem, b: &Elem) -> Elem {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &Elem, b: &Elem) -> Elem {
        match (self, a, b) {
            (FieldSpec::Characteristic0, Elem::Rat(x), Elem::Rat(y)) => Elem::Rat(x * y),
            (FieldSpec::PrimeField(p), Elem::Fin(x), Elem::Fin(y)) => Elem::Fin(x * y % p),
            (FieldSpec::ExtensionField { p, modulus, .. }, Elem::Fin(x), Elem::Fin(y)) => {
                let prod = poly_mul(&self.decode(*x), &self.decode(*y), *p);
                let mut r = poly_rem(&prod, modulus, *p);
                r.resize(modulus.len() - 1, 0);
                Elem::Fin(self.encode(&r))
            }
            _ => panic!("element does not belong to {self}"),
        }
    }

    pub fn pow(&self, a: &Elem, mut e: u64) -> Elem {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem, NumError> {
        if a.is_zero() {
            return Err(NumError::DivisionByZero);
        }
        Ok(match (self, a) {
            (FieldSpec::Characteristic0, Elem::Rat(x)) => Elem::Rat(x.recip()),
            // a^(q-2) in any finite field
            _ => self.pow(a, self.order().unwrap() - 2),
        })
    }

    pub fn div(&self, a: &Elem, b: &Elem) -> Result<Elem, NumError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    pub fn format_elem(&self, a: &Elem) -> String {
        match (self, a) {
            (FieldSpec::ExtensionField { .. }, Elem::Fin(v)) => {
                let c = self.decode(*v);
                let mut terms = vec![];
                for (i, &ci) in c.iter().enumerate().rev() {
                    if ci == 0 {
                        continue;
                    }
                    let mono = match i {
                        0 => String::new(),
                        1 => "x".to_string(),
                        _ => format!("x^{i}"),
                    };
                    terms.push(match (ci, mono.is_empty()) {
                        (_, true) => ci.to_string(),
                        (1, false) => mono,
                        (_, false) => format!("{ci}{mono}"),
                    });
                }
                if terms.is_empty() {
                    "0".into()
                } else {
                    terms.join("+")
                }
            }
            (_, Elem::Fin(v)) => v.to_string(),
            (_, Elem::Rat(r)) => {
                if r.is_integer() {
                    r.numer().to_string()
                } else {
                    format!("{}/{}", r.numer(), r.denom())
                }
            }
        }
    }

    /// Parses "3", "-1/2", and for extension fields "x+1", "2x^2+1".
    pub fn parse_elem(&self, s: &str) -> Result<Elem, NumError> {
        let bad = || NumError::BadFieldSpec(s.to_string());
        let s = s.trim();
        match self {
            FieldSpec::Characteristic0 => {
                let r = if let Some((n, d)) = s.split_once('/') {
                    let n: BigInt = n.trim().parse().map_err(|_| bad())?;
                    let d: BigInt = d.trim().parse().map_err(|_| bad())?;
                    if d.is_zero() {
                        return Err(NumError::DivisionByZero);
                    }
                    BigRational::new(n, d)
                } else {
                    BigRational::from_integer(s.parse().map_err(|_| bad())?)
                };
                Ok(Elem::Rat(r))
            }
            FieldSpec::PrimeField(_) => {
                if let Some((n, d)) = s.split_once('/') {
                    let n: i64 = n.trim().parse().map_err(|_| bad())?;
                    let d: i64 = d.trim().parse().map_err(|_| bad())?;
                    self.from_ratio(n, d)
                } else {
                    Ok(self.from_i64(s.parse().map_err(|_| bad())?))
                }
            }
            FieldSpec::ExtensionField { p, k, .. } => {
                let mut c = vec![0u64; *k as usize];
                for term in s.split('+') {
                    let term = term.trim();
                    let (coef, deg) = match term.find('x') {
                        None => (term.parse::<u64>().map_err(|_| bad())?, 0usize),
                        Some(i) => {
                            let coef = if i == 0 { 1 } else { term[..i].parse().map_err(|_| bad())? };
                            let rest = &term[i + 1..];
                            let deg = if rest.is_empty() {
                                1
                            } else {
                                rest.strip_prefix('^').ok_or_else(bad)?.parse().map_err(|_| bad())?
                            };
                            (coef, deg)
                        }
                    };
                    if deg >= *k as usize {
                        return Err(bad());
                    }
                    c[deg] = (c[deg] + coef) % p;
                }
                Ok(Elem::Fin(self.encode(&c)))
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldSpec::Characteristic0 => write!(f, "0"),
            FieldSpec::PrimeField(p) => write!(f, "{p}"),
            FieldSpec::ExtensionField { p, k, .. } => write!(f, "{p}^{k}"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = NumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || NumError::BadFieldSpec(s.to_string());
        let s = s.trim();
        if s == "0" {
            return Ok(FieldSpec::Characteristic0);
        }
        if let Some((p, k)) = s.split_once('^') {
            let p: u64 = p.parse().map_err(|_| bad())?;
            let k: u32 = k.parse().map_err(|_| bad())?;
            if !is_prime(p) {
                return Err(NumError::NotPrime(p));
            }
            if k == 0 || p.checked_pow(k).map_or(true, |q| q >= 1 << 31) {
                return Err(bad());
            }
            return FieldSpec::finite(p.pow(k));
        }
        let p: u64 = s.parse().map_err(|_| bad())?;
        if p >= 1 << 31 {
            return Err(bad());
        }
        FieldSpec::prime(p)
    }
}

/// Raw field element; meaningless without its FieldSpec.
/// Finite field elements are integers whose base-p digits are the
/// polynomial coefficients, low degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Elem {
    Rat(BigRational),
    Fin(u64),
}

impl Elem {
    pub fn is_zero(&self) -> bool {
        match self {
            Elem::Rat(r) => r.is_zero(),
            Elem::Fin(v) => *v == 0,
        }
    }
}

/// A field element together with its field.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    pub field: FieldSpec,
    pub value: Elem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Mul,
    Neg,
    Inv,
}

impl Scalar {
    pub fn new(field: &FieldSpec, value: Elem) -> Self {
        Scalar { field: field.clone(), value }
    }

    pub fn from_i64(field: &FieldSpec, v: i64) -> Self {
        Scalar::new(field, field.from_i64(v))
    }

    pub fn zero(field: &FieldSpec) -> Self {
        Scalar::new(field, field.zero())
    }

    pub fn one(field: &FieldSpec) -> Self {
        Scalar::new(field, field.one())
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    fn check(&self, other: &Scalar) -> Result<(), NumError> {
        if self.field != other.field {
            return Err(NumError::FieldMismatch(self.field.to_string(), other.field.to_string()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Scalar) -> Result<Scalar, NumError> {
        self.check(other)?;
        Ok(Scalar::new(&self.field, self.field.add(&self.value, &other.value)))
    }

    pub fn mul(&self, other: &Scalar) -> Result<Scalar, NumError> {
        self.check(other)?;
        Ok(Scalar::new(&self.field, self.field.mul(&self.value, &other.value)))
    }

    pub fn neg(&self) -> Scalar {
        Scalar::new(&self.field, self.field.neg(&self.value))
    }

    pub fn inv(&self) -> Result<Scalar, NumError> {
        Ok(Scalar::new(&self.field, self.field.inv(&self.value)?))
    }
}

/// Single entry point mirroring the four basic operations.
pub fn arith(op: ArithOp, a: &Scalar, b: Option<&Scalar>) -> Result<Scalar, NumError> {
    match op {
        ArithOp::Add => a.add(b.expect("add takes two operands")),
        ArithOp::Mul => a.mul(b.expect("mul takes two operands")),
        ArithOp::Neg => Ok(a.neg()),
        ArithOp::Inv => a.inv(),
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.field.format_elem(&self.value))
    }
}

pub fn binomial(l: u64, k: u64) -> BigUint {
    if k > l {
        return BigUint::zero();
    }
    let k = k.min(l - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(l - i) / BigUint::from(i + 1);
    }
    acc
}

/// Binomial coefficient mod p by Lucas' theorem.
pub fn binomial_mod(l: u64, k: u64, p: u64) -> Result<Scalar, NumError> {
    let field = FieldSpec::prime(p)?;
    let (mut l, mut k) = (l, k);
    let mut acc = 1u64;
    while l > 0 || k > 0 {
        let (li, ki) = (l % p, k % p);
        if ki > li {
            acc = 0;
            break;
        }
        acc = acc * (binomial(li, ki) % BigUint::from(p)).to_u64().unwrap() % p;
        l /= p;
        k /= p;
    }
    Ok(Scalar::from_i64(&field, acc as i64))
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |a, i| a * BigUint::from(i))
}

/// (p-1)! = -1 mod p.
pub fn wilson_holds(p: u64) -> bool {
    let f = factorial(p - 1) % BigUint::from(p);
    f == BigUint::from(p - 1)
}

/// Sign helper for char-0 values: used by pretty printers.
pub fn is_negative(f: &FieldSpec, a: &Elem) -> bool {
    match (f, a) {
        (FieldSpec::Characteristic0, Elem::Rat(r)) => r.is_negative(),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_two_mod_five() {
        let f = FieldSpec::prime(5).unwrap();
        let two = Scalar::from_i64(&f, 2);
        assert_eq!(arith(ArithOp::Inv, &two, None).unwrap(), Scalar::from_i64(&f, 3));
    }

    #[test]
    fn halves_and_thirds() {
        let q = FieldSpec::rational();
        let a = Scalar::new(&q, q.parse_elem("1/2").unwrap());
        let b = Scalar::new(&q, q.parse_elem("1/3").unwrap());
        assert_eq!(a.add(&b).unwrap().to_string(), "5/6");
    }

    #[test]
    fn f4_x_squared() {
        let f: FieldSpec = "2^2".parse().unwrap();
        assert_eq!(f, FieldSpec::ExtensionField { p: 2, k: 2, modulus: vec![1, 1, 1] });
        let x = f.generator();
        let xx = f.mul(&x, &x);
        assert_eq!(xx, f.parse_elem("x+1").unwrap());
        assert_eq!(f.format_elem(&xx), "x+1");
    }

    #[test]
    fn canonical_moduli() {
        assert_eq!(canonical_modulus(2, 3), vec![1, 1, 0, 1]); // x^3+x+1
        assert_eq!(canonical_modulus(3, 2), vec![1, 0, 1]); // x^2+1
        assert_eq!(canonical_modulus(2, 4), vec![1, 1, 0, 0, 1]);
    }

    #[test]
    fn mismatch_and_zero_division() {
        let a = Scalar::from_i64(&FieldSpec::PrimeField(3), 1);
        let b = Scalar::from_i64(&FieldSpec::PrimeField(5), 1);
        assert!(matches!(a.add(&b), Err(NumError::FieldMismatch(..))));
        let z = Scalar::zero(&FieldSpec::PrimeField(7));
        assert_eq!(z.inv(), Err(NumError::DivisionByZero));
        assert_eq!(Scalar::zero(&FieldSpec::rational()).inv(), Err(NumError::DivisionByZero));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(6, 3) / BigUint::from(4u32), BigUint::from(5u32));
        assert_eq!(binomial(4, 7), BigUint::zero());
        assert!(binomial_mod(5, 2, 5).unwrap().is_zero());
        assert!(binomial_mod(6, 2, 3).unwrap().is_zero());
        assert_eq!(binomial_mod(4, 2, 5).unwrap(), Scalar::from_i64(&FieldSpec::PrimeField(5), 1));
        assert_eq!(binomial_mod(4, 2, 4), Err(NumError::NotPrime(4)));
    }

    #[test]
    fn wilson() {
        for p in [2, 3, 5, 7, 11] {
            assert!(wilson_holds(p));
        }
        assert!(!wilson_holds(9));
    }

    #[test]
    fn field_strings() {
        assert_eq!("0".parse::<FieldSpec>().unwrap(), FieldSpec::Characteristic0);
        assert_eq!("7".parse::<FieldSpec>().unwrap(), FieldSpec::PrimeField(7));
        assert!("6".parse::<FieldSpec>().is_err());
        assert!("4^2".parse::<FieldSpec>().is_err());
        assert!("x".parse::<FieldSpec>().is_err());
        assert_eq!("3^2".parse::<FieldSpec>().unwrap().order(), Some(9));
    }

    #[test]
    fn primes() {
        let small: Vec<u64> = (0..30).filter(|&n| is_prime(n)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        assert!(is_prime(2147483647));
        assert_eq!(prime_power(8), Some((2, 3)));
        assert_eq!(prime_power(12), None);
    }
}
