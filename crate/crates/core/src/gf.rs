//! Finite fields GF(q) for the ten supported orders, backed by lookup tables.
//!
//! An element is stored as its code: the coefficients of its residue
//! polynomial read as base-p digits, constant term least significant.
//! In GF(4) the code 2 is the class of `x`, so `2 * 2 = 3`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub const SUPPORTED_ORDERS: [usize; 10] = [2, 3, 4, 5, 7, 8, 9, 11, 13, 16];

/// (p, m, modulus coefficients low to high). Prime fields use `x`.
fn field_params(q: usize) -> Option<(usize, usize, Vec<u8>)> {
    let params = match q {
        2 | 3 | 5 | 7 | 11 | 13 => (q, 1, vec![0, 1]),
        4 => (2, 2, vec![1, 1, 1]),
        8 => (2, 3, vec![1, 1, 0, 1]),
        9 => (3, 2, vec![1, 0, 1]),
        16 => (2, 4, vec![1, 1, 0, 0, 1]),
        _ => return None,
    };
    Some(params)
}

struct Tables {
    p: usize,
    m: usize,
    q: usize,
    modulus: Vec<u8>,
    add: Vec<u8>,
    mul: Vec<u8>,
    neg: Vec<u8>,
    inv: Vec<u8>,
    // frob[j][a] = a^(p^j)
    frob: Vec<Vec<u8>>,
}

/// Shared handle to the tables of one field. Cloning is cheap.
#[derive(Clone)]
pub struct Field {
    t: Arc<Tables>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        // One fixed modulus per order.
        self.t.q == other.t.q
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.t.q)
    }
}

fn to_digits(mut code: usize, p: usize, m: usize) -> Vec<u8> {
    let mut d = vec![0u8; m];
    for slot in d.iter_mut() {
        *slot = (code % p) as u8;
        code /= p;
    }
    d
}

fn from_digits(d: &[u8], p: usize) -> usize {
    d.iter().rev().fold(0, |acc, &c| acc * p + c as usize)
}

fn poly_mulmod(a: &[u8], b: &[u8], modulus: &[u8], p: usize) -> Vec<u8> {
    let m = modulus.len() - 1;
    let mut prod = vec![0usize; 2 * m];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as usize * y as usize) % p;
        }
    }
    // modulus is monic
    for deg in (m..2 * m).rev() {
        let c = prod[deg];
        if c == 0 {
            continue;
        }
        for (i, &mc) in modulus.iter().enumerate() {
            let idx = deg - m + i;
            prod[idx] = (prod[idx] + p * p - c * mc as usize % p) % p;
        }
    }
    prod[..m].iter().map(|&c| c as u8).collect()
}

/// Remainder of `a` modulo monic `b` over GF(p); coefficients low to high.
fn poly_rem(a: &[u8], b: &[u8], p: usize) -> Vec<u8> {
    let mut r: Vec<usize> = a.iter().map(|&c| c as usize).collect();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        if lead != 0 {
            for (i, &bc) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p * p - lead * bc as usize % p) % p;
            }
        }
        r.pop();
    }
    r.into_iter().map(|c| c as u8).collect()
}

/// Trial division by every monic polynomial of degree 1..=deg/2.
fn is_irreducible(modulus: &[u8], p: usize) -> bool {
    let deg = modulus.len() - 1;
    for d in 1..=deg / 2 {
        for low in 0..p.pow(d as u32) {
            let mut cand = to_digits(low, p, d);
            cand.push(1);
            if poly_rem(modulus, &cand, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

impl Field {
    pub fn new(q: usize) -> Result<Field> {
        let (p, m, modulus) = field_params(q).ok_or(Error::UnsupportedOrder(q))?;
        if !is_irreducible(&modulus, p) {
            return Err(Error::ReducibleModulus(q));
        }
        let digits: Vec<Vec<u8>> = (0..q).map(|c| to_digits(c, p, m)).collect();
        let mut add = vec![0u8; q * q];
        let mut mul = vec![0u8; q * q];
        for a in 0..q {
            for b in 0..q {
                let s: Vec<u8> = digits[a]
                    .iter()
                    .zip(&digits[b])
                    .map(|(&x, &y)| ((x as usize + y as usize) % p) as u8)
                    .collect();
                add[a * q + b] = from_digits(&s, p) as u8;
                let pr = if m == 1 {
                    vec![((a * b) % p) as u8]
                } else {
                    poly_mulmod(&digits[a], &digits[b], &modulus, p)
                };
                mul[a * q + b] = from_digits(&pr, p) as u8;
            }
        }
        let mut neg = vec![0u8; q];
        let mut inv = vec![0u8; q];
        for a in 0..q {
            neg[a] = (0..q).find(|&b| add[a * q + b] == 0).unwrap() as u8;
            if a != 0 {
                inv[a] = (0..q)
                    .find(|&b| mul[a * q + b] == 1)
                    .ok_or(Error::ReducibleModulus(q))? as u8;
            }
        }
        let mut frob = Vec::with_capacity(m);
        frob.push((0..q as u8).collect::<Vec<u8>>());
        for j in 1..m {
            let prev: &Vec<u8> = &frob[j - 1];
            let next: Vec<u8> = prev
                .iter()
                .map(|&x| {
                    let mut acc = 1u8;
                    for _ in 0..p {
                        acc = mul[acc as usize * q + x as usize];
                    }
                    acc
                })
                .collect();
            frob.push(next);
        }
        Ok(Field {
            t: Arc::new(Tables {
                p,
                m,
                q,
                modulus,
                add,
                mul,
                neg,
                inv,
                frob,
            }),
        })
    }

    pub fn q(&self) -> usize {
        self.t.q
    }

    pub fn p(&self) -> usize {
        self.t.p
    }

    /// Degree over the prime field, which is also the number of automorphisms.
    pub fn m(&self) -> usize {
        self.t.m
    }

    pub fn modulus(&self) -> &[u8] {
        &self.t.modulus
    }

    #[inline]
    pub fn add(&self, a: u8, b: u8) -> u8 {
        self.t.add[a as usize * self.t.q + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: u8, b: u8) -> u8 {
        self.add(a, self.t.neg[b as usize])
    }

    #[inline]
    pub fn mul(&self, a: u8, b: u8) -> u8 {
        self.t.mul[a as usize * self.t.q + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: u8) -> u8 {
        self.t.neg[a as usize]
    }

    /// Inverse of a nonzero element. Zero maps to zero.
    #[inline]
    pub fn inv(&self, a: u8) -> u8 {
        debug_assert!(a != 0, "inverse of zero");
        self.t.inv[a as usize]
    }

    pub fn checked_inv(&self, a: u8) -> Result<u8> {
        if a == 0 {
            Err(Error::DivisionByZero)
        } else {
            Ok(self.t.inv[a as usize])
        }
    }

    #[inline]
    pub fn div(&self, a: u8, b: u8) -> u8 {
        self.mul(a, self.inv(b))
    }

    /// `a^(p^j)`, with `j` taken modulo m.
    #[inline]
    pub fn frob(&self, j: usize, a: u8) -> u8 {
        self.t.frob[j % self.t.m][a as usize]
    }

    /// Inverse of `frob(j, -)`.
    #[inline]
    pub fn frob_inv(&self, j: usize, a: u8) -> u8 {
        let m = self.t.m;
        self.t.frob[(m - j % m) % m][a as usize]
    }

    pub fn pow(&self, a: u8, e: usize) -> u8 {
        let mut acc = 1u8;
        for _ in 0..e {
            acc = self.mul(acc, a);
        }
        acc
    }

    pub fn contains(&self, code: usize) -> bool {
        code < self.t.q
    }

    pub fn element(&self, code: usize) -> Result<FieldElement> {
        if code >= self.t.q {
            return Err(Error::InvalidElement { code, q: self.t.q });
        }
        Ok(FieldElement {
            field: self.clone(),
            code: code as u8,
        })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            code: 0,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            field: self.clone(),
            code: 1,
        }
    }

    /// Frobenius powers `x -> x^(p^j)` for j in 0..m, identity first.
    pub fn automorphisms(&self) -> Vec<FieldAutomorphism> {
        (0..self.t.m)
            .map(|exp| FieldAutomorphism {
                field: self.clone(),
                exp,
            })
            .collect()
    }

    /// Exponent of the unique involution, if m is even.
    pub fn involution(&self) -> Option<usize> {
        self.t.m.is_multiple_of(2).then_some(self.t.m / 2)
    }
}

/// A field element tied to its field; operations check that both sides agree.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: Field,
    code: u8,
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@GF({})", self.code, self.field.q())
    }
}

impl FieldElement {
    pub fn code(&self) -> u8 {
        self.code
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    fn same(&self, other: &FieldElement) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::SpecMismatch)
        }
    }

    fn wrap(&self, code: u8) -> FieldElement {
        FieldElement {
            field: self.field.clone(),
            code,
        }
    }

    pub fn add(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same(other)?;
        Ok(self.wrap(self.field.add(self.code, other.code)))
    }

    pub fn sub(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same(other)?;
        Ok(self.wrap(self.field.sub(self.code, other.code)))
    }

    pub fn mul(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same(other)?;
        Ok(self.wrap(self.field.mul(self.code, other.code)))
    }

    pub fn neg(&self) -> FieldElement {
        self.wrap(self.field.neg(self.code))
    }

    pub fn inv(&self) -> Result<FieldElement> {
        Ok(self.wrap(self.field.checked_inv(self.code)?))
    }

    pub fn div(&self, other: &FieldElement) -> Result<FieldElement> {
        self.same(other)?;
        let inv = self.field.checked_inv(other.code)?;
        Ok(self.wrap(self.field.mul(self.code, inv)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Inv,
}

/// Binary ops use both operands; unary ops ignore `b`.
pub fn field_arith(op: ArithOp, a: &FieldElement, b: Option<&FieldElement>) -> Result<FieldElement> {
    let rhs = || b.ok_or_else(|| Error::Precondition("binary op needs two operands".into()));
    match op {
        ArithOp::Add => a.add(rhs()?),
        ArithOp::Sub => a.sub(rhs()?),
        ArithOp::Mul => a.mul(rhs()?),
        ArithOp::Div => a.div(rhs()?),
        ArithOp::Neg => Ok(a.neg()),
        ArithOp::Inv => a.inv(),
    }
}

/// `x -> x^(p^exp)`.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldAutomorphism {
    field: Field,
    exp: usize,
}

impl fmt::Debug for FieldAutomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Frob^{}@GF({})", self.exp, self.field.q())
    }
}

impl FieldAutomorphism {
    pub fn new(field: &Field, exp: usize) -> FieldAutomorphism {
        FieldAutomorphism {
            field: field.clone(),
            exp: exp % field.m(),
        }
    }

    pub fn exp(&self) -> usize {
        self.exp
    }

    pub fn is_identity(&self) -> bool {
        self.exp == 0
    }

    pub fn is_involution(&self) -> bool {
        self.exp != 0 && (2 * self.exp).is_multiple_of(self.field.m())
    }

    pub fn apply(&self, a: &FieldElement) -> Result<FieldElement> {
        if a.field != self.field {
            return Err(Error::SpecMismatch);
        }
        Ok(a.wrap(self.field.frob(self.exp, a.code)))
    }

    pub fn compose(&self, other: &FieldAutomorphism) -> Result<FieldAutomorphism> {
        if self.field != other.field {
            return Err(Error::SpecMismatch);
        }
        Ok(FieldAutomorphism::new(&self.field, self.exp + other.exp))
    }

    pub fn inverse(&self) -> FieldAutomorphism {
        let m = self.field.m();
        FieldAutomorphism::new(&self.field, m - self.exp)
    }
}
