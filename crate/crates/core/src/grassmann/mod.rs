//! Subspaces of F^n, their canonical enumeration, and the incidence
//! structure of the Grassmannians G_k^n.

mod families;
mod space;

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::gf::Field;
use crate::linalg::{vector_code, Matrix};

pub use families::{maximal_adjacent_families, AdjacentFamily, FamilyKind};
pub use space::{Lattice, PlaneSet, Space, MAX_PLANES};

/// Largest ambient dimension supported by enumeration.
pub const MAX_N: usize = 6;

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// Number of k-dimensional subspaces of F_q^n.
pub fn gaussian_binomial(n: usize, k: usize, q: usize) -> u128 {
    if k > n {
        return 0;
    }
    let q = q as u128;
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..k {
        num *= q.pow((n - i) as u32) - 1;
        den *= q.pow((i + 1) as u32) - 1;
    }
    num / den
}

/// A subspace stored by its reduced row echelon basis.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    n: usize,
    basis: Matrix,
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for r in 0..self.dim() {
            if r > 0 {
                write!(f, ", ")?;
            }
            for x in self.basis.row(r) {
                write!(f, "{x}")?;
            }
        }
        write!(f, ">")
    }
}

impl PartialOrd for Subspace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Subspace {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.dim(), self.basis.data()).cmp(&(other.dim(), other.basis.data()))
    }
}

impl Subspace {
    /// Span of the given vectors.
    pub fn new(field: &Field, n: usize, vectors: &[Vec<u8>]) -> Result<Subspace> {
        let m = Matrix::from_rows(field, n, vectors)?;
        Ok(Subspace::span_of(&m))
    }

    /// Row space of a matrix.
    pub fn span_of(m: &Matrix) -> Subspace {
        let r = m.rref();
        Subspace {
            n: m.cols(),
            basis: r.matrix.submatrix_rows(0..r.rank),
        }
    }

    /// Caller guarantees `basis` is in RREF with full row rank.
    pub(crate) fn from_rref_unchecked(basis: Matrix) -> Subspace {
        Subspace {
            n: basis.cols(),
            basis,
        }
    }

    pub fn origin(field: &Field, n: usize) -> Subspace {
        Subspace::from_rref_unchecked(Matrix::zeros(field, 0, n))
    }

    pub fn whole(field: &Field, n: usize) -> Subspace {
        Subspace::from_rref_unchecked(Matrix::identity(field, n))
    }

    pub fn field(&self) -> &Field {
        self.basis.field()
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn ambient(&self) -> usize {
        self.n
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<Vec<u8>> {
        self.basis.row_vecs()
    }

    /// Flattened RREF codes; the canonical key.
    pub fn key(&self) -> &[u8] {
        self.basis.data()
    }

    /// Annihilating constraints: rows `c` with `c . x = 0` on the subspace.
    pub fn constraints(&self) -> Matrix {
        self.basis.kernel()
    }

    pub fn contains_vector(&self, v: &[u8]) -> bool {
        if v.len() != self.n {
            return false;
        }
        let c = self.constraints();
        c.mul_vec(v).map(|r| r.iter().all(|&x| x == 0)).unwrap_or(false)
    }

    pub fn contains(&self, other: &Subspace) -> bool {
        other.n == self.n
            && other.dim() <= self.dim()
            && (0..other.dim()).all(|r| self.contains_vector(other.basis.row(r)))
    }

    /// Every vector of the subspace, sorted by code.
    pub fn vectors(&self) -> Vec<Vec<u8>> {
        let f = self.field();
        let q = f.q();
        let k = self.dim();
        let rows: Vec<&[u8]> = (0..k).map(|r| self.basis.row(r)).collect();
        let mut out: Vec<Vec<u8>> = (0..q.pow(k as u32))
            .map(|c| {
                let coeffs = crate::linalg::vector_from_code(q, k, c);
                if k == 0 {
                    vec![0u8; self.n]
                } else {
                    crate::linalg::combine(f, &rows, &coeffs)
                }
            })
            .collect();
        out.sort_by_key(|v| vector_code(q, v));
        out
    }

    fn check_pair(&self, other: &Subspace) -> Result<()> {
        if self.n != other.n {
            return Err(Error::AmbientMismatch);
        }
        if self.field() != other.field() {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }
}

pub fn join(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    a.check_pair(b)?;
    Ok(Subspace::span_of(&a.basis.stack(&b.basis)?))
}

pub fn meet(a: &Subspace, b: &Subspace) -> Result<Subspace> {
    a.check_pair(b)?;
    let c = a.constraints().stack(&b.constraints())?;
    Ok(Subspace::from_rref_unchecked(c.kernel()))
}

/// Distance on G_k: `k - dim(a meet b)`.
pub fn distance(a: &Subspace, b: &Subspace) -> Result<usize> {
    a.check_pair(b)?;
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch(format!("{} vs {}", a.dim(), b.dim())));
    }
    Ok(a.dim() - meet(a, b)?.dim())
}

/// Rows of `extra` that extend `base` to a basis of `base + extra`, greedily.
fn complement_rows(base: &Matrix, extra: &Matrix) -> Vec<Vec<u8>> {
    let mut cur = base.clone();
    let mut rank = cur.rank();
    let mut out = Vec::new();
    for r in 0..extra.rows() {
        let row = extra.submatrix_rows(r..r + 1);
        let next = cur.stack(&row).expect("same width");
        let nr = next.rank();
        if nr > rank {
            out.push(extra.row(r).to_vec());
            cur = next;
            rank = nr;
        }
    }
    out
}

/// Shortest path `a = l_0, ..., l_i = b` of pairwise adjacent planes.
pub fn geodesic(a: &Subspace, b: &Subspace) -> Result<Vec<Subspace>> {
    let i = distance(a, b)?;
    let k = a.dim();
    let m = meet(a, b)?;
    let w = m.basis_vectors();
    let u = complement_rows(m.basis(), a.basis());
    let v = complement_rows(m.basis(), b.basis());
    debug_assert_eq!(u.len(), i);
    debug_assert_eq!(v.len(), i);
    // x = u_1..u_i, w_1..w_{k-i}, v_1..v_i; l_j spans x_{j+1}..x_{k+j}.
    let x: Vec<Vec<u8>> = u.into_iter().chain(w).chain(v).collect();
    (0..=i)
        .map(|j| Subspace::new(a.field(), a.ambient(), &x[j..j + k]))
        .collect()
}

/// Sorted list of G_k^n with reverse lookup by RREF key.
pub struct GrassmannianIndex {
    field: Field,
    n: usize,
    k: usize,
    planes: Vec<Subspace>,
    lookup: HashMap<Vec<u8>, u32>,
}

impl fmt::Debug for GrassmannianIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "G_{}^{}({}) [{} planes]",
            self.k,
            self.n,
            self.field.q(),
            self.planes.len()
        )
    }
}

impl GrassmannianIndex {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.planes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.planes.is_empty()
    }

    pub fn planes(&self) -> &[Subspace] {
        &self.planes
    }

    pub fn get(&self, i: usize) -> &Subspace {
        &self.planes[i]
    }

    pub fn index_of(&self, s: &Subspace) -> Option<u32> {
        if s.ambient() != self.n || s.dim() != self.k {
            return None;
        }
        self.lookup.get(s.key()).copied()
    }
}

/// All k-subspaces of F_q^n in canonical order.
pub fn enumerate(n: usize, k: usize, field: &Field) -> Result<GrassmannianIndex> {
    if n > MAX_N {
        return Err(Error::TooLarge(format!("n = {n} exceeds {MAX_N}")));
    }
    if k > n {
        return Err(Error::OutOfRange(format!("k = {k} > n = {n}")));
    }
    let q = field.q();
    let count = gaussian_binomial(n, k, q);
    if count > MAX_PLANES as u128 {
        return Err(Error::TooLarge(format!(
            "G_{k}^{n}({q}) has {count} planes"
        )));
    }
    let mut keys: Vec<Vec<u8>> = Vec::with_capacity(count as usize);
    for pivots in (0..n).combinations(k) {
        let mut free = Vec::new();
        for (row, &p) in pivots.iter().enumerate() {
            for c in p + 1..n {
                if !pivots.contains(&c) {
                    free.push(row * n + c);
                }
            }
        }
        let mut base = vec![0u8; k * n];
        for (row, &p) in pivots.iter().enumerate() {
            base[row * n + p] = 1;
        }
        let fills = q.pow(free.len() as u32);
        for code in 0..fills {
            let mut m = base.clone();
            let digits = crate::linalg::vector_from_code(q, free.len(), code);
            for (&pos, &d) in free.iter().zip(&digits) {
                m[pos] = d;
            }
            keys.push(m);
        }
    }
    keys.sort_unstable();
    debug_assert_eq!(keys.len() as u128, count);
    let mut lookup = HashMap::with_capacity(keys.len());
    let planes: Vec<Subspace> = keys
        .into_iter()
        .enumerate()
        .map(|(i, key)| {
            let m = Matrix::new(field, k, n, key.clone()).expect("codes in range");
            lookup.insert(key, i as u32);
            Subspace::from_rref_unchecked(m)
        })
        .collect();
    Ok(GrassmannianIndex {
        field: field.clone(),
        n,
        k,
        planes,
        lookup,
    })
}

/// Planes inside `s` when `dim s > k`, planes containing `s` when `dim s < k`.
pub fn star_top(space: &Space, s: &Subspace, k: usize) -> Result<PlaneSet> {
    if s.ambient() != space.n() {
        return Err(Error::AmbientMismatch);
    }
    if k > space.n() {
        return Err(Error::OutOfRange(format!("k = {k} > n = {}", space.n())));
    }
    if s.dim() == k {
        return Err(Error::EqualDimension(k));
    }
    let idx = space.index_of(s)?;
    space.incident(s.dim(), idx, k)
}
