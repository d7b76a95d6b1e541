//! Arithmetic over GF(2^m) for 2 <= m <= 10.
//!
//! Elements are stored as their m-bit vector representation: bit `i-1` of the
//! value is the coordinate gamma_i. Addition is XOR; multiplication goes
//! through discrete log / antilog tables built from a primitive polynomial.
//!
//! The set of "bad" cycle parameters, [`FieldParams::bad_cycle_params`], is
//! the union of all proper multiplicative subgroups, i.e. every nonzero element
//! whose order is below 2^m - 1. Listed as exponents of the primitive element
//! it does not depend on which primitive polynomial was used to build the field.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_DEGREE: u32 = 2;
pub const MAX_DEGREE: u32 = 10;

/// Conventional primitive polynomials (bit masks including the x^m term).
const DEFAULT_POLYS: [u32; 11] = [
    0, 0, 0b111,          // x^2 + x + 1
    0b1011,               // x^3 + x + 1
    0b1_0011,             // x^4 + x + 1
    0b10_0101,            // x^5 + x^2 + 1
    0b100_0011,           // x^6 + x + 1
    0b1000_0011,          // x^7 + x + 1
    0b1_0001_1101,        // x^8 + x^4 + x^3 + x^2 + 1
    0b10_0001_0001,       // x^9 + x^4 + 1
    0b100_0000_1001,      // x^10 + x^3 + 1
];

/// An element of GF(2^m) in bit-vector form. `FieldElement(0)` is zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct FieldElement(pub u16);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    #[inline]
    pub fn value(self) -> u16 {
        self.0
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Coordinate gamma_i (1-based `i`) of the bit representation.
    #[inline]
    pub fn bit(self, i: u32) -> bool {
        (self.0 >> (i - 1)) & 1 == 1
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#b}", self.0)
    }
}

/// Field description together with its log/antilog tables.
///
/// Immutable once built; share freely between threads.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldParams {
    m: u32,
    q: usize,
    prim_poly: u32,
    /// `log[x]` for nonzero x; `log[0]` is unused.
    log: Vec<u16>,
    /// `antilog[k] = alpha^k` for k in 0..2(q-1), doubled to skip a reduction in `mul`.
    antilog: Vec<u16>,
}

impl fmt::Debug for FieldParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldParams")
            .field("m", &self.m)
            .field("q", &self.q)
            .field("prim_poly", &format_args!("{:#x}", self.prim_poly))
            .finish()
    }
}

impl FieldParams {
    /// GF(2^m) with the conventional primitive polynomial for `m`.
    pub fn new(m: u32) -> Result<Self> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&m) {
            return Err(Error::Config(format!(
                "extension degree m={m} outside {MIN_DEGREE}..={MAX_DEGREE}"
            )));
        }
        Self::with_poly(m, DEFAULT_POLYS[m as usize])
    }

    /// GF(2^m) generated by `prim_poly`, which must be primitive of degree `m`.
    pub fn with_poly(m: u32, prim_poly: u32) -> Result<Self> {
        if !(MIN_DEGREE..=MAX_DEGREE).contains(&m) {
            return Err(Error::Config(format!(
                "extension degree m={m} outside {MIN_DEGREE}..={MAX_DEGREE}"
            )));
        }
        if prim_poly >> m != 1 {
            return Err(Error::Config(format!(
                "polynomial {prim_poly:#x} does not have degree {m}"
            )));
        }
        let q = 1usize << m;
        let mut log = vec![0u16; q];
        let mut antilog = vec![0u16; 2 * (q - 1)];
        let mut seen = vec![false; q];
        let mut x: u32 = 1;
        for k in 0..q - 1 {
            if seen[x as usize] {
                return Err(Error::Config(format!(
                    "polynomial {prim_poly:#x} is not primitive for m={m}"
                )));
            }
            seen[x as usize] = true;
            antilog[k] = x as u16;
            log[x as usize] = k as u16;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= prim_poly;
            }
        }
        if x != 1 {
            return Err(Error::Config(format!(
                "polynomial {prim_poly:#x} is not primitive for m={m}"
            )));
        }
        for k in q - 1..2 * (q - 1) {
            antilog[k] = antilog[k - (q - 1)];
        }
        Ok(Self { m, q, prim_poly, log, antilog })
    }

    pub fn is_default_poly(&self) -> bool {
        self.prim_poly == DEFAULT_POLYS[self.m as usize]
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    /// Field size 2^m.
    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    /// Order of the multiplicative group, 2^m - 1.
    #[inline]
    pub fn group_order(&self) -> usize {
        self.q - 1
    }

    pub fn prim_poly(&self) -> u32 {
        self.prim_poly
    }

    /// Builds an element from its bit representation.
    pub fn element(&self, value: u16) -> Result<FieldElement> {
        if (value as usize) < self.q {
            Ok(FieldElement(value))
        } else {
            Err(Error::Domain(format!("value {value} not in GF({})", self.q)))
        }
    }

    /// The primitive element alpha.
    pub fn alpha(&self) -> FieldElement {
        FieldElement(self.antilog[1])
    }

    /// alpha^k, with k reduced modulo 2^m - 1.
    #[inline]
    pub fn alpha_pow(&self, k: usize) -> FieldElement {
        FieldElement(self.antilog[k % (self.q - 1)])
    }

    /// Discrete logarithm base alpha.
    pub fn log(&self, a: FieldElement) -> Result<usize> {
        if a.is_zero() {
            return Err(Error::Domain("logarithm of zero".into()));
        }
        Ok(self.log[a.index()] as usize)
    }

    /// Nonzero elements in power order alpha^0, alpha^1, ...
    pub fn nonzero_elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        self.antilog[..self.q - 1].iter().map(|&v| FieldElement(v))
    }

    #[inline]
    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(a.0 ^ b.0)
    }

    #[inline]
    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        let k = self.log[a.index()] as usize + self.log[b.index()] as usize;
        FieldElement(self.antilog[k])
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.is_zero() {
            return Err(Error::Domain("inverse of zero".into()));
        }
        let k = self.log[a.index()] as usize;
        Ok(FieldElement(self.antilog[(self.q - 1 - k) % (self.q - 1)]))
    }

    /// a^k for k >= 0; 0^0 = 1.
    pub fn pow(&self, a: FieldElement, k: u64) -> FieldElement {
        if a.is_zero() {
            return if k == 0 { FieldElement::ONE } else { FieldElement::ZERO };
        }
        let n = (self.q - 1) as u64;
        let e = (self.log[a.index()] as u64 * (k % n)) % n;
        FieldElement(self.antilog[e as usize])
    }

    /// Multiplicative order: the least k >= 1 with b^k = 1.
    pub fn order(&self, b: FieldElement) -> Result<usize> {
        if b.is_zero() {
            return Err(Error::Domain("order of zero".into()));
        }
        let n = self.q - 1;
        let k = self.log[b.index()] as usize;
        Ok(n / gcd(n, k))
    }

    /// True iff `b` generates the whole multiplicative group.
    pub fn is_max_order(&self, b: FieldElement) -> Result<bool> {
        Ok(self.order(b)? == self.q - 1)
    }

    /// Union over proper divisors r of 2^m - 1 of the subgroups
    /// {alpha^(i (2^m-1)/r) : i = 0..r-1}, sorted by exponent.
    pub fn bad_cycle_params(&self) -> Vec<FieldElement> {
        let n = self.q - 1;
        let mut member = vec![false; n];
        for r in (1..n).filter(|r| n % r == 0) {
            let step = n / r;
            for i in 0..r {
                member[i * step] = true;
            }
        }
        member
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| self.alpha_pow(k))
            .collect()
    }

    /// Exponents of [`bad_cycle_params`](Self::bad_cycle_params).
    pub fn bad_cycle_exponents(&self) -> Vec<usize> {
        self.bad_cycle_params()
            .into_iter()
            .map(|b| self.log[b.index()] as usize)
            .collect()
    }

    /// Multiplication table row: `row[y] = h * y`.
    pub fn mul_row(&self, h: FieldElement) -> Vec<u16> {
        (0..self.q as u16).map(|y| self.mul(h, FieldElement(y)).0).collect()
    }

    /// "α^k" notation, with alpha^0 written as "1" and zero as "0".
    pub fn power_notation(&self, a: FieldElement) -> String {
        match a.0 {
            0 => "0".into(),
            _ => match self.log[a.index()] {
                0 => "1".into(),
                1 => "α".into(),
                k => format!("α^{k}"),
            },
        }
    }
}

pub(crate) fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Carry-less multiply then reduce; independent of the tables.
    fn poly_mul(a: u16, b: u16, poly: u32, m: u32) -> u16 {
        let mut acc: u32 = 0;
        for i in 0..m {
            if (b >> i) & 1 == 1 {
                acc ^= (a as u32) << i;
            }
        }
        for bit in (m..2 * m).rev() {
            if acc & (1 << bit) != 0 {
                acc ^= poly << (bit - m);
            }
        }
        acc as u16
    }

    fn totient(mut n: usize) -> usize {
        let mut out = n;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                while n % p == 0 {
                    n /= p;
                }
                out -= out / p;
            }
            p += 1;
        }
        if n > 1 {
            out -= out / n;
        }
        out
    }

    fn brute_order(f: &FieldParams, b: FieldElement) -> usize {
        let mut x = b;
        let mut k = 1;
        while x != FieldElement::ONE {
            x = f.mul(x, b);
            k += 1;
        }
        k
    }

    #[test]
    fn add_examples() {
        let f = FieldParams::new(4).unwrap();
        let a = f.alpha();
        assert_eq!(f.add(a, a), FieldElement::ZERO);
        assert_eq!(f.add(a, FieldElement::ONE), FieldElement(0b0011));
        assert_eq!(f.add(FieldElement::ZERO, a), a);
    }

    #[test]
    fn pow_alpha_wraps() {
        let f = FieldParams::new(4).unwrap();
        let a = f.alpha();
        let mut x = FieldElement::ONE;
        for _ in 0..15 {
            x = f.mul(x, a);
        }
        assert_eq!(x, FieldElement::ONE);
        assert_eq!(f.pow(a, 15), FieldElement::ONE);
        assert_eq!(f.pow(a, 17), f.pow(a, 2));
        assert_eq!(f.pow(FieldElement::ZERO, 0), FieldElement::ONE);
    }

    #[test]
    fn zero_is_rejected() {
        let f = FieldParams::new(3).unwrap();
        assert!(matches!(f.inv(FieldElement::ZERO), Err(Error::Domain(_))));
        assert!(matches!(f.order(FieldElement::ZERO), Err(Error::Domain(_))));
        assert!(f.is_max_order(FieldElement::ZERO).is_err());
        assert_eq!(f.mul(FieldElement::ZERO, f.alpha()), FieldElement::ZERO);
    }

    #[test]
    fn orders_in_gf16() {
        let f = FieldParams::new(4).unwrap();
        assert_eq!(f.order(FieldElement::ONE).unwrap(), 1);
        assert_eq!(f.order(f.alpha()).unwrap(), 15);
        assert_eq!(f.order(f.alpha_pow(3)).unwrap(), 5);
        for b in f.nonzero_elements() {
            assert_eq!(f.order(b).unwrap(), brute_order(&f, b));
        }
        assert!(f.is_max_order(f.alpha()).unwrap());
        assert!(!f.is_max_order(FieldElement::ONE).unwrap());
    }

    #[test]
    fn bad_params_table() {
        let exps = |m| FieldParams::new(m).unwrap().bad_cycle_exponents();
        assert_eq!(exps(2), vec![0]);
        assert_eq!(exps(3), vec![0]);
        assert_eq!(exps(4), vec![0, 3, 5, 6, 9, 10, 12]);
        assert_eq!(exps(5), vec![0]);
        let g64 = FieldParams::new(6).unwrap();
        assert!(!g64.is_max_order(g64.alpha_pow(3)).unwrap());
    }

    #[test]
    fn bad_params_match_order_and_totient() {
        for m in MIN_DEGREE..=MAX_DEGREE {
            let f = FieldParams::new(m).unwrap();
            let bad = f.bad_cycle_params();
            let n = f.group_order();
            assert_eq!(bad.len(), n - totient(n), "m={m}");
            for b in f.nonzero_elements() {
                assert_eq!(f.is_max_order(b).unwrap(), !bad.contains(&b), "m={m} b={b}");
            }
            let prime = n - totient(n) == 1;
            assert_eq!(prime, [2, 3, 5, 7].contains(&m));
        }
    }

    #[test]
    fn tables_agree_with_polynomial_multiplication() {
        for m in MIN_DEGREE..=MAX_DEGREE {
            let f = FieldParams::new(m).unwrap();
            let q = f.q() as u16;
            let step = if m > 6 { 7 } else { 1 };
            for a in (0..q).step_by(step) {
                for b in (0..q).step_by(step) {
                    assert_eq!(
                        f.mul(FieldElement(a), FieldElement(b)).0,
                        poly_mul(a, b, f.prim_poly(), m)
                    );
                }
            }
            for a in f.nonzero_elements() {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), FieldElement::ONE);
            }
        }
    }

    #[test]
    fn non_primitive_polynomial_rejected() {
        // x^4 + x^3 + x^2 + x + 1 is irreducible but alpha has order 5.
        assert!(FieldParams::with_poly(4, 0b11111).is_err());
        assert!(FieldParams::with_poly(4, 0b1011).is_err());
        assert!(FieldParams::new(11).is_err());
        // x^4 + x^3 + 1 is primitive too.
        let f = FieldParams::with_poly(4, 0b11001).unwrap();
        assert_eq!(f.bad_cycle_exponents(), vec![0, 3, 5, 6, 9, 10, 12]);
    }

    proptest! {
        #[test]
        fn field_axioms(m in 2u32..=8, a in any::<u16>(), b in any::<u16>(), c in any::<u16>()) {
            let f = FieldParams::new(m).unwrap();
            let mask = (f.q() - 1) as u16;
            let (a, b, c) = (FieldElement(a & mask), FieldElement(b & mask), FieldElement(c & mask));
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.add(a, b).0, a.0 ^ b.0);
            prop_assert_eq!(f.mul(a, b), f.mul(b, a));
        }
    }
}
