//! Semilinear maps of F^n and the permutations they induce on Grassmannians.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::BilinearForm;
use crate::gf::Field;
use crate::grassmann::{PlaneSet, Space, Subspace};
use crate::linalg::Matrix;

/// `v -> M * sigma(v)` with `sigma = x -> x^(p^sigma)` applied entrywise.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SemilinearMap {
    sigma: usize,
    matrix: Matrix,
}

impl fmt::Debug for SemilinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Semilinear(sigma={}, {:?})", self.sigma, self.matrix)
    }
}

impl SemilinearMap {
    pub fn new(matrix: Matrix, sigma: usize) -> Result<SemilinearMap> {
        if matrix.rows() != matrix.cols() {
            return Err(Error::ShapeMismatch("semilinear map needs a square matrix".into()));
        }
        if !matrix.is_invertible() {
            return Err(Error::SingularMatrix);
        }
        let m = matrix.field().m();
        Ok(SemilinearMap {
            sigma: sigma % m,
            matrix,
        })
    }

    pub fn linear(matrix: Matrix) -> Result<SemilinearMap> {
        SemilinearMap::new(matrix, 0)
    }

    pub fn identity(field: &Field, n: usize) -> SemilinearMap {
        SemilinearMap {
            sigma: 0,
            matrix: Matrix::identity(field, n),
        }
    }

    pub fn field(&self) -> &Field {
        self.matrix.field()
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn sigma(&self) -> usize {
        self.sigma
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, v: &[u8]) -> Vec<u8> {
        let f = self.field();
        let s: Vec<u8> = v.iter().map(|&x| f.frob(self.sigma, x)).collect();
        self.matrix.mul_vec(&s).expect("vector length matches")
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &SemilinearMap) -> Result<SemilinearMap> {
        if self.field() != first.field() {
            return Err(Error::SpecMismatch);
        }
        if self.n() != first.n() {
            return Err(Error::ShapeMismatch("maps on different spaces".into()));
        }
        let matrix = self.matrix.mul(&first.matrix.frobenius(self.sigma))?;
        Ok(SemilinearMap {
            sigma: (self.sigma + first.sigma) % self.field().m(),
            matrix,
        })
    }

    pub fn inverse(&self) -> SemilinearMap {
        let inv = self.matrix.inverse().expect("invertible by construction");
        let m = self.field().m();
        SemilinearMap {
            sigma: (m - self.sigma) % m,
            matrix: inv.frobenius_inv(self.sigma),
        }
    }

    /// Scaled so the first nonzero entry (row-major) is 1.
    pub fn normalized(&self) -> SemilinearMap {
        let lead = self
            .matrix
            .data()
            .iter()
            .copied()
            .find(|&x| x != 0)
            .expect("invertible matrix is nonzero");
        SemilinearMap {
            sigma: self.sigma,
            matrix: self.matrix.scale(self.field().inv(lead)),
        }
    }

    /// Equal as projective maps: same automorphism, matrices proportional.
    pub fn same_projective(&self, other: &SemilinearMap) -> bool {
        self.normalized() == other.normalized()
    }

    pub fn image(&self, s: &Subspace) -> Subspace {
        let rows: Vec<Vec<u8>> = s.basis_vectors().iter().map(|v| self.apply(v)).collect();
        Subspace::new(self.field(), self.n(), &rows).expect("rows have width n")
    }

    /// The transformation `f_k` of G_k induced by this map.
    pub fn induced_map(&self, space: &Space, k: usize) -> Result<GrassmannMap> {
        if space.field() != self.field() {
            return Err(Error::SpecMismatch);
        }
        if space.n() != self.n() {
            return Err(Error::AmbientMismatch);
        }
        let g = space.grassmannian(k)?;
        let table = g
            .planes()
            .iter()
            .map(|p| {
                g.index_of(&self.image(p))
                    .expect("image of a k-plane is a k-plane")
            })
            .collect();
        Ok(GrassmannMap {
            q: space.q(),
            n: space.n(),
            k_dom: k,
            k_cod: k,
            table,
        })
    }
}

/// A bijection G_k -> G_k' stored as a table of codomain indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GrassmannMap {
    q: usize,
    n: usize,
    k_dom: usize,
    k_cod: usize,
    table: Vec<u32>,
}

impl GrassmannMap {
    pub fn new(space: &Space, k_dom: usize, k_cod: usize, table: Vec<u32>) -> Result<GrassmannMap> {
        let nd = space.grassmannian(k_dom)?.len();
        let nc = space.grassmannian(k_cod)?.len();
        if table.len() != nd {
            return Err(Error::ShapeMismatch(format!(
                "table has {} entries, G_{k_dom} has {nd}",
                table.len()
            )));
        }
        if nd != nc {
            return Err(Error::NotBijective(format!("|G_{k_dom}| = {nd} but |G_{k_cod}| = {nc}")));
        }
        let mut seen = vec![false; nc];
        for &t in &table {
            let slot = seen
                .get_mut(t as usize)
                .ok_or_else(|| Error::OutOfRange(format!("codomain index {t}")))?;
            if *slot {
                return Err(Error::NotBijective(format!("index {t} hit twice")));
            }
            *slot = true;
        }
        Ok(GrassmannMap {
            q: space.q(),
            n: space.n(),
            k_dom,
            k_cod,
            table,
        })
    }

    pub fn identity(space: &Space, k: usize) -> GrassmannMap {
        GrassmannMap {
            q: space.q(),
            n: space.n(),
            k_dom: k,
            k_cod: k,
            table: (0..space.size(k) as u32).collect(),
        }
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_dom(&self) -> usize {
        self.k_dom
    }

    pub fn k_cod(&self) -> usize {
        self.k_cod
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn is_transformation(&self) -> bool {
        self.k_dom == self.k_cod
    }

    #[inline]
    pub fn apply(&self, p: u32) -> u32 {
        self.table[p as usize]
    }

    pub fn check_space(&self, space: &Space) -> Result<()> {
        if self.q != space.q() || self.n != space.n() {
            return Err(Error::AmbientMismatch);
        }
        Ok(())
    }

    pub fn apply_set(&self, space: &Space, s: &PlaneSet) -> Result<PlaneSet> {
        self.check_space(space)?;
        if s.k() != self.k_dom {
            return Err(Error::DomainMismatch(format!(
                "set in G_{} against map on G_{}",
                s.k(),
                self.k_dom
            )));
        }
        PlaneSet::new(space, self.k_cod, s.iter().map(|p| self.apply(p)).collect())
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &GrassmannMap) -> Result<GrassmannMap> {
        if self.q != first.q || self.n != first.n {
            return Err(Error::AmbientMismatch);
        }
        if first.k_cod != self.k_dom {
            return Err(Error::DomainMismatch(format!(
                "G_{} -> G_{} then G_{} -> G_{}",
                first.k_dom, first.k_cod, self.k_dom, self.k_cod
            )));
        }
        Ok(GrassmannMap {
            q: self.q,
            n: self.n,
            k_dom: first.k_dom,
            k_cod: self.k_cod,
            table: first.table.iter().map(|&p| self.table[p as usize]).collect(),
        })
    }

    pub fn inverse(&self) -> GrassmannMap {
        let mut inv = vec![0u32; self.table.len()];
        for (i, &t) in self.table.iter().enumerate() {
            inv[t as usize] = i as u32;
        }
        GrassmannMap {
            q: self.q,
            n: self.n,
            k_dom: self.k_cod,
            k_cod: self.k_dom,
            table: inv,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.k_dom == self.k_cod && self.table.iter().enumerate().all(|(i, &t)| i as u32 == t)
    }

    /// Replaces one entry; the result need not be a bijection. For tests of rejection paths.
    pub fn with_entry(&self, at: usize, value: u32) -> GrassmannMap {
        let mut m = self.clone();
        m.table[at] = value;
        m
    }

    /// Swaps two entries.
    pub fn with_swap(&self, a: usize, b: usize) -> GrassmannMap {
        let mut m = self.clone();
        m.table.swap(a, b);
        m
    }
}

/// Whether `f` carries every incidence set G_k(s), s in G_m, onto an incidence
/// set G_k(s'), and the same for `f^{-1}`. Returns the induced map on G_m.
pub fn induces(space: &Space, f: &GrassmannMap, m: usize) -> Result<Option<GrassmannMap>> {
    f.check_space(space)?;
    if !f.is_transformation() {
        return Err(Error::DomainMismatch("induces needs a transformation of G_k".into()));
    }
    let k = f.k_dom();
    if m == k || m == 0 || m >= space.n() {
        return Err(Error::OutOfRange(format!(
            "target dimension {m} must differ from k = {k} and lie in 1..n"
        )));
    }
    let inc = space.incidence(m, k)?;
    let lookup: HashMap<&[u32], u32> = inc
        .iter()
        .enumerate()
        .map(|(i, v)| (v.as_slice(), i as u32))
        .collect();
    let finv = f.inverse();
    let mut table = Vec::with_capacity(inc.len());
    for set in inc.iter() {
        for (dir, map) in [(0, f), (1, &finv)] {
            let mut img: Vec<u32> = set.iter().map(|&p| map.apply(p)).collect();
            img.sort_unstable();
            match lookup.get(img.as_slice()) {
                Some(&t) => {
                    if dir == 0 {
                        table.push(t);
                    }
                }
                None => return Ok(None),
            }
        }
    }
    Ok(Some(GrassmannMap::new(space, m, m, table)?))
}

/// `f^*(Omega)(x, y) = Omega(f x, f y)` for a linear `f`.
pub fn pullback_form(f: &SemilinearMap, form: &BilinearForm) -> Result<BilinearForm> {
    if f.sigma() != 0 {
        return Err(Error::NonIdentityAutomorphism);
    }
    if f.field() != form.field() {
        return Err(Error::SpecMismatch);
    }
    if f.n() != form.n() {
        return Err(Error::ShapeMismatch("map and form on different spaces".into()));
    }
    let m = f.matrix();
    let gram = m
        .frobenius(form.sigma1())
        .transpose()
        .mul(form.gram())?
        .mul(&m.frobenius(form.sigma2()))?;
    BilinearForm::new(gram, form.sigma1(), form.sigma2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::distance;

    fn gf(q: usize) -> Field {
        Field::new(q).unwrap()
    }

    fn mat(f: &Field, n: usize, rows: &[&[u8]]) -> Matrix {
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
        Matrix::from_rows(f, n, &rows).unwrap()
    }

    #[test]
    fn identity_induces_identity() {
        let s = Space::with_order(2, 4).unwrap();
        let id = SemilinearMap::identity(s.field(), 4);
        assert!(id.induced_map(&s, 2).unwrap().is_identity());
    }

    #[test]
    fn scalar_matrices_act_trivially() {
        let s = Space::with_order(3, 3).unwrap();
        let two = Matrix::identity(s.field(), 3).scale(2);
        let f = SemilinearMap::linear(two).unwrap();
        assert!(f.induced_map(&s, 1).unwrap().is_identity());
        assert!(f.same_projective(&SemilinearMap::identity(s.field(), 3)));
    }

    #[test]
    fn composition_and_inverse_match_tables() {
        let f4 = gf(4);
        let s = Space::new(&f4, 3).unwrap();
        let a = SemilinearMap::new(mat(&f4, 3, &[&[1, 2, 0], &[0, 1, 3], &[2, 0, 1]]), 1).unwrap();
        let b = SemilinearMap::new(mat(&f4, 3, &[&[0, 1, 0], &[2, 0, 0], &[0, 0, 3]]), 1).unwrap();
        let ab = a.compose(&b).unwrap();
        assert_eq!(ab.sigma(), 0);
        let v = vec![1, 2, 3];
        assert_eq!(ab.apply(&v), a.apply(&b.apply(&v)));
        assert_eq!(a.inverse().apply(&a.apply(&v)), v);
        let ta = a.induced_map(&s, 1).unwrap();
        let tb = b.induced_map(&s, 1).unwrap();
        assert_eq!(ab.induced_map(&s, 1).unwrap(), ta.compose(&tb).unwrap());
        assert_eq!(a.inverse().induced_map(&s, 1).unwrap(), ta.inverse());
    }

    #[test]
    fn induced_maps_preserve_distance() {
        let f3 = gf(3);
        let s = Space::new(&f3, 4).unwrap();
        let a = SemilinearMap::linear(mat(
            &f3,
            4,
            &[&[1, 1, 0, 0], &[0, 1, 2, 0], &[0, 0, 1, 1], &[1, 0, 0, 1]],
        ))
        .unwrap();
        let t = a.induced_map(&s, 2).unwrap();
        let g = s.grassmannian(2).unwrap();
        for i in (0..g.len()).step_by(7) {
            for j in (0..g.len()).step_by(11) {
                let d0 = distance(g.get(i), g.get(j)).unwrap();
                let d1 = distance(g.get(t.apply(i as u32) as usize), g.get(t.apply(j as u32) as usize)).unwrap();
                assert_eq!(d0, d1);
            }
        }
    }

    #[test]
    fn induced_transformations_induce_on_every_level() {
        let s = Space::with_order(2, 4).unwrap();
        let f2 = s.field().clone();
        let a = SemilinearMap::linear(mat(
            &f2,
            4,
            &[&[1, 1, 0, 0], &[0, 1, 1, 0], &[0, 0, 1, 1], &[0, 0, 0, 1]],
        ))
        .unwrap();
        let t2 = a.induced_map(&s, 2).unwrap();
        let t1 = induces(&s, &t2, 1).unwrap().unwrap();
        assert_eq!(t1, a.induced_map(&s, 1).unwrap());
        let t3 = induces(&s, &t2, 3).unwrap().unwrap();
        assert_eq!(t3, a.induced_map(&s, 3).unwrap());
        // A transposition of two planes breaks incidence.
        assert!(induces(&s, &t2.with_swap(0, 1), 1).unwrap().is_none());
    }

    #[test]
    fn grassmann_map_validation() {
        let s = Space::with_order(2, 3).unwrap();
        assert!(GrassmannMap::new(&s, 1, 1, vec![0; 7]).is_err());
        assert!(GrassmannMap::new(&s, 1, 1, (0..6).collect()).is_err());
        assert!(GrassmannMap::new(&s, 1, 2, (0..7).collect()).is_ok());
        let id = GrassmannMap::identity(&s, 1);
        let other = GrassmannMap::identity(&s, 2);
        assert!(matches!(id.compose(&other), Err(Error::DomainMismatch(_))));
    }

    #[test]
    fn pullback_rejects_field_automorphisms() {
        let f4 = gf(4);
        let form = BilinearForm::dot(&f4, 2);
        let m = SemilinearMap::new(Matrix::identity(&f4, 2), 1).unwrap();
        assert_eq!(pullback_form(&m, &form).unwrap_err(), Error::NonIdentityAutomorphism);
    }
}
