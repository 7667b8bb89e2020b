//! Sesquilinear forms `(x, y) -> sum g_ij sigma1(x_i) sigma2(y_j)` and the
//! complement bijections they induce between G_k and G_{n-k}.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::Field;
use crate::grassmann::{meet, PlaneSet, Space, Subspace};
use crate::linalg::{vector_from_code, Matrix};
use crate::maps::GrassmannMap;

/// Above this many vectors, predicates switch from pair scans to Gram criteria.
pub const EXHAUSTIVE_VECTORS: usize = 4096;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BilinearForm {
    gram: Matrix,
    sigma1: usize,
    sigma2: usize,
}

impl fmt::Debug for BilinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Form(sigma1={}, sigma2={}, {:?})",
            self.sigma1, self.sigma2, self.gram
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormPredicates {
    pub nonsingular: bool,
    pub reflexive: bool,
    pub symmetric: bool,
    pub skew_symmetric: bool,
    pub symplectic: bool,
    pub hermitian: bool,
    pub skew_hermitian: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReflexiveClass {
    Symmetric,
    /// Alternating forms land here, including in characteristic 2.
    SkewSymmetric,
    /// `a * Omega` is hermitian for this nonzero `a`.
    ScaledHermitian(u8),
    NotReflexive,
}

impl BilinearForm {
    pub fn new(gram: Matrix, sigma1: usize, sigma2: usize) -> Result<BilinearForm> {
        if gram.rows() != gram.cols() {
            return Err(Error::ShapeMismatch("Gram matrix must be square".into()));
        }
        let m = gram.field().m();
        Ok(BilinearForm {
            gram,
            sigma1: sigma1 % m,
            sigma2: sigma2 % m,
        })
    }

    pub fn bilinear(gram: Matrix) -> Result<BilinearForm> {
        BilinearForm::new(gram, 0, 0)
    }

    /// `sum x_i y_i`.
    pub fn dot(field: &Field, n: usize) -> BilinearForm {
        BilinearForm {
            gram: Matrix::identity(field, n),
            sigma1: 0,
            sigma2: 0,
        }
    }

    /// `sum x_i sigma(y_i)` for the involution of an even-degree field.
    pub fn hermitian_dot(field: &Field, n: usize) -> Result<BilinearForm> {
        let j = field
            .involution()
            .ok_or_else(|| Error::Unsupported(format!("GF({}) has no involution", field.q())))?;
        Ok(BilinearForm {
            gram: Matrix::identity(field, n),
            sigma1: 0,
            sigma2: j,
        })
    }

    /// Gram of x_1..x_k, y_1..y_k with `Omega(x_i, y_i) = 1 = -Omega(y_i, x_i)`.
    pub fn standard_symplectic(field: &Field, n: usize) -> Result<BilinearForm> {
        if !n.is_multiple_of(2) {
            return Err(Error::NotNonsingular);
        }
        let k = n / 2;
        let mut g = Matrix::zeros(field, n, n);
        for i in 0..k {
            g.set(i, k + i, 1);
            g.set(k + i, i, field.neg(1));
        }
        BilinearForm::bilinear(g)
    }

    pub fn field(&self) -> &Field {
        self.gram.field()
    }

    pub fn n(&self) -> usize {
        self.gram.rows()
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn sigma1(&self) -> usize {
        self.sigma1
    }

    pub fn sigma2(&self) -> usize {
        self.sigma2
    }

    /// Coefficients `c_j = sum_i g_ij sigma1(x_i)`, so `Omega(x, y) = sum c_j sigma2(y_j)`.
    pub fn left_row(&self, x: &[u8]) -> Vec<u8> {
        let f = self.field();
        let n = self.n();
        let mut c = vec![0u8; n];
        for (i, &xi) in x.iter().enumerate() {
            let a = f.frob(self.sigma1, xi);
            if a == 0 {
                continue;
            }
            for (j, cj) in c.iter_mut().enumerate() {
                *cj = f.add(*cj, f.mul(a, self.gram.get(i, j)));
            }
        }
        c
    }

    pub fn eval(&self, x: &[u8], y: &[u8]) -> u8 {
        let f = self.field();
        self.left_row(x)
            .iter()
            .zip(y)
            .fold(0u8, |acc, (&c, &yj)| f.add(acc, f.mul(c, f.frob(self.sigma2, yj))))
    }

    pub fn try_eval(&self, x: &[u8], y: &[u8]) -> Result<u8> {
        if x.len() != self.n() || y.len() != self.n() {
            return Err(Error::ShapeMismatch("vector length differs from form dimension".into()));
        }
        Ok(self.eval(x, y))
    }

    /// `a * Omega`.
    pub fn scaled(&self, a: u8) -> BilinearForm {
        BilinearForm {
            gram: self.gram.scale(a),
            sigma1: self.sigma1,
            sigma2: self.sigma2,
        }
    }

    /// `(x, y) -> Omega(y, x)`, a (sigma2, sigma1)-form.
    pub fn swapped(&self) -> BilinearForm {
        BilinearForm {
            gram: self.gram.transpose(),
            sigma1: self.sigma2,
            sigma2: self.sigma1,
        }
    }

    /// `sigma1^{-1} o Omega`, which has identity first automorphism.
    pub fn normalized(&self) -> BilinearForm {
        let m = self.field().m();
        BilinearForm {
            gram: self.gram.frobenius_inv(self.sigma1),
            sigma1: 0,
            sigma2: (self.sigma2 + m - self.sigma1) % m,
        }
    }

    pub fn is_nonsingular(&self) -> bool {
        self.gram.is_invertible()
    }

    /// Right orthogonal complement `{y : Omega(x, y) = 0 for all x in U}`.
    pub fn orth_complement(&self, u: &Subspace) -> Result<Subspace> {
        if !self.is_nonsingular() {
            return Err(Error::SingularForm);
        }
        self.right_perp(u)
    }

    /// As `orth_complement` without the nonsingularity requirement.
    pub fn right_perp(&self, u: &Subspace) -> Result<Subspace> {
        if u.ambient() != self.n() {
            return Err(Error::AmbientMismatch);
        }
        if u.field() != self.field() {
            return Err(Error::SpecMismatch);
        }
        let rows: Vec<Vec<u8>> = u.basis_vectors().iter().map(|x| self.left_row(x)).collect();
        let a = Matrix::from_rows(self.field(), self.n(), &rows)?;
        let z = a.kernel();
        Ok(Subspace::span_of(&z.frobenius_inv(self.sigma2)))
    }

    /// Matrix `Omega(u_i, u_j)` over the basis of `u`.
    pub fn restricted_gram(&self, u: &Subspace) -> Matrix {
        let b = u.basis_vectors();
        let k = b.len();
        let mut g = Matrix::zeros(self.field(), k, k);
        for i in 0..k {
            for j in 0..k {
                g.set(i, j, self.eval(&b[i], &b[j]));
            }
        }
        g
    }

    pub fn predicates(&self) -> FormPredicates {
        let q = self.field().q();
        let total = q.checked_pow(self.n() as u32).unwrap_or(usize::MAX);
        let mut p = if total <= EXHAUSTIVE_VECTORS {
            self.predicates_by_pairs()
        } else {
            self.predicates_by_gram()
        };
        p.nonsingular = self.is_nonsingular();
        if total > EXHAUSTIVE_VECTORS {
            p.reflexive = self.reflexive_by_lines();
        }
        p
    }

    fn hermitian_sigma(&self) -> Option<usize> {
        let m = self.field().m();
        (self.sigma1 == 0 && self.sigma2 != 0 && (2 * self.sigma2).is_multiple_of(m)).then_some(self.sigma2)
    }

    /// Definitional checks over every pair of vectors.
    pub fn predicates_by_pairs(&self) -> FormPredicates {
        let f = self.field();
        let n = self.n();
        let q = f.q();
        let total = q.pow(n as u32);
        let vecs: Vec<Vec<u8>> = (0..total).map(|c| vector_from_code(q, n, c)).collect();
        let rows: Vec<Vec<u8>> = vecs.iter().map(|x| self.left_row(x)).collect();
        let s2: Vec<Vec<u8>> = vecs
            .iter()
            .map(|y| y.iter().map(|&v| f.frob(self.sigma2, v)).collect())
            .collect();
        let val = |x: usize, y: usize| -> u8 {
            rows[x]
                .iter()
                .zip(&s2[y])
                .fold(0u8, |acc, (&c, &v)| f.add(acc, f.mul(c, v)))
        };
        let herm = self.hermitian_sigma();
        let flags = (0..total)
            .into_par_iter()
            .map(|x| {
                let mut fl = [true; 6];
                if val(x, x) != 0 {
                    fl[3] = false;
                }
                for y in x..total {
                    let a = val(x, y);
                    let b = val(y, x);
                    fl[0] &= (a == 0) == (b == 0);
                    fl[1] &= a == b;
                    fl[2] &= a == f.neg(b);
                    if let Some(j) = herm {
                        let sb = f.frob(j, b);
                        let sa = f.frob(j, a);
                        fl[4] &= a == sb && b == sa;
                        fl[5] &= a == f.neg(sb) && b == f.neg(sa);
                    }
                }
                fl
            })
            .reduce(|| [true; 6], |a, b| {
                let mut o = [true; 6];
                for i in 0..6 {
                    o[i] = a[i] && b[i];
                }
                o
            });
        FormPredicates {
            nonsingular: self.is_nonsingular(),
            reflexive: flags[0],
            symmetric: flags[1],
            skew_symmetric: flags[2],
            symplectic: flags[3],
            hermitian: herm.is_some() && flags[4],
            skew_hermitian: herm.is_some() && flags[5],
        }
    }

    /// Criteria on the Gram matrix; reflexivity through complements of lines.
    pub fn predicates_by_gram(&self) -> FormPredicates {
        let f = self.field();
        let g = &self.gram;
        let n = self.n();
        let zero = g.is_zero();
        let all = |pred: &dyn Fn(usize, usize) -> bool| (0..n).all(|i| (0..n).all(|j| pred(i, j)));
        let same = self.sigma1 == self.sigma2;
        let symmetric = if same { all(&|i, j| g.get(i, j) == g.get(j, i)) } else { zero };
        let skew = if same {
            all(&|i, j| g.get(i, j) == f.neg(g.get(j, i)))
        } else {
            zero
        };
        let symplectic = if same { skew && (0..n).all(|i| g.get(i, i) == 0) } else { zero };
        let herm = self.hermitian_sigma();
        let (hermitian, skew_hermitian) = match herm {
            Some(j) => (
                all(&|a, b| g.get(a, b) == f.frob(j, g.get(b, a))),
                all(&|a, b| g.get(a, b) == f.neg(f.frob(j, g.get(b, a)))),
            ),
            None => (false, false),
        };
        FormPredicates {
            nonsingular: self.is_nonsingular(),
            reflexive: self.reflexive_by_lines(),
            symmetric,
            skew_symmetric: skew,
            symplectic,
            hermitian,
            skew_hermitian,
        }
    }

    /// Reflexive iff every line `U` lies in the complement of its complement.
    pub fn reflexive_by_lines(&self) -> bool {
        let f = self.field();
        let n = self.n();
        let q = f.q();
        let total = q.pow(n as u32);
        (1..total).into_par_iter().all(|c| {
            let x = vector_from_code(q, n, c);
            // Only lines with leading coordinate 1.
            if x.iter().find(|&&v| v != 0) != Some(&1) {
                return true;
            }
            let u = Subspace::new(f, n, &[x]).unwrap();
            let perp = self.right_perp(&u).unwrap();
            let back = self.right_perp(&perp).unwrap();
            back.contains(&u)
        })
    }

    pub fn is_reflexive(&self) -> bool {
        self.predicates().reflexive
    }

    pub fn classify_reflexive(&self) -> Result<ReflexiveClass> {
        if self.sigma1 != 0 {
            return Err(Error::Unsupported(
                "first automorphism must be the identity; use normalized()".into(),
            ));
        }
        let p = self.predicates();
        if !p.reflexive {
            return Ok(ReflexiveClass::NotReflexive);
        }
        if self.sigma2 == 0 {
            if p.symplectic || (p.skew_symmetric && !p.symmetric) {
                return Ok(ReflexiveClass::SkewSymmetric);
            }
            if p.symmetric {
                return Ok(ReflexiveClass::Symmetric);
            }
        } else if let Some(a) = (1..self.field().q() as u8).find(|&a| self.scaled(a).predicates().hermitian) {
            return Ok(ReflexiveClass::ScaledHermitian(a));
        }
        Err(Error::Unsupported(
            "reflexive form outside the symmetric/alternating/hermitian classes".into(),
        ))
    }
}

/// Dual coordinates of the annihilator of `U` in V*.
pub fn annihilator(u: &Subspace) -> Subspace {
    Subspace::span_of(&u.constraints())
}

/// The bijection `s -> s^perp` from G_k onto G_{n-k}.
pub fn form_map(space: &Space, form: &BilinearForm, k: usize) -> Result<GrassmannMap> {
    if form.field() != space.field() {
        return Err(Error::SpecMismatch);
    }
    if form.n() != space.n() {
        return Err(Error::AmbientMismatch);
    }
    if !form.is_nonsingular() {
        return Err(Error::SingularForm);
    }
    let g = space.grassmannian(k)?;
    let target = space.grassmannian(space.n() - k)?;
    let table = g
        .planes()
        .par_iter()
        .map(|s| {
            let perp = form.right_perp(s).expect("same ambient");
            target.index_of(&perp).expect("complement has dimension n-k")
        })
        .collect();
    GrassmannMap::new(space, k, space.n() - k, table)
}

/// Basis `x_1..x_k, y_1..y_k` with `Omega(x_i, y_j) = delta_ij`, `Omega(x_i, x_j) = Omega(y_i, y_j) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymplecticBasis {
    pub xs: Vec<Vec<u8>>,
    pub ys: Vec<Vec<u8>>,
}

impl SymplecticBasis {
    /// Rows x_1..x_k then y_1..y_k.
    pub fn matrix(&self, field: &Field) -> Matrix {
        let n = self.xs.len() * 2;
        let rows: Vec<Vec<u8>> = self.xs.iter().chain(&self.ys).cloned().collect();
        Matrix::from_rows(field, n, &rows).expect("rows of width n")
    }

    /// Gram matrix of `form` in this basis.
    pub fn gram_in_basis(&self, form: &BilinearForm) -> Matrix {
        let rows: Vec<&Vec<u8>> = self.xs.iter().chain(&self.ys).collect();
        let n = rows.len();
        let mut g = Matrix::zeros(form.field(), n, n);
        for i in 0..n {
            for j in 0..n {
                g.set(i, j, form.eval(rows[i], rows[j]));
            }
        }
        g
    }
}

/// Builds a symplectic basis by repeatedly splitting off a hyperbolic pair.
pub fn symplectic_basis(form: &BilinearForm) -> Result<SymplecticBasis> {
    if !form.is_nonsingular() {
        return Err(Error::NotNonsingular);
    }
    if !form.predicates().symplectic {
        return Err(Error::NotSymplectic);
    }
    let f = form.field();
    let n = form.n();
    let mut w = Subspace::whole(f, n);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    while w.dim() > 0 {
        let vecs = w.vectors();
        let x = vecs.iter().find(|v| v.iter().any(|&c| c != 0)).unwrap().clone();
        let (y, c) = vecs
            .iter()
            .find_map(|y| {
                let c = form.eval(&x, y);
                (c != 0).then(|| (y.clone(), c))
            })
            .ok_or(Error::NotNonsingular)?;
        // Omega(x, a y) = sigma2(a) c, so take a = sigma2^{-1}(c^{-1}).
        let a = f.frob_inv(form.sigma2(), f.inv(c));
        let y: Vec<u8> = y.iter().map(|&v| f.mul(a, v)).collect();
        let pair = Subspace::new(f, n, &[x.clone(), y.clone()])?;
        w = meet(&w, &form.right_perp(&pair)?)?;
        xs.push(x);
        ys.push(y);
    }
    Ok(SymplecticBasis { xs, ys })
}

/// All k-planes on which the restricted form is singular.
pub fn singular_restriction_set(space: &Space, form: &BilinearForm, k: usize) -> Result<PlaneSet> {
    if form.field() != space.field() {
        return Err(Error::SpecMismatch);
    }
    if form.n() != space.n() {
        return Err(Error::AmbientMismatch);
    }
    let g = space.grassmannian(k)?;
    let members = g
        .planes()
        .iter()
        .enumerate()
        .filter(|(_, p)| form.restricted_gram(p).rank() < k)
        .map(|(i, _)| i as u32)
        .collect();
    Ok(PlaneSet::from_sorted(space, k, members))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(q: usize) -> Field {
        Field::new(q).unwrap()
    }

    fn gram(f: &Field, rows: &[&[u8]]) -> Matrix {
        let n = rows.len();
        let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
        Matrix::from_rows(f, n, &rows).unwrap()
    }

    #[test]
    fn complement_of_first_basis_vector_under_standard_symplectic() {
        let f = gf(2);
        let w = BilinearForm::standard_symplectic(&f, 4).unwrap();
        let u = Subspace::new(&f, 4, &[vec![1, 0, 0, 0]]).unwrap();
        let perp = w.orth_complement(&u).unwrap();
        let expect = Subspace::new(&f, 4, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 0, 1]]).unwrap();
        assert_eq!(perp, expect);
    }

    #[test]
    fn classify_examples() {
        let f3 = gf(3);
        assert_eq!(BilinearForm::dot(&f3, 3).classify_reflexive().unwrap(), ReflexiveClass::Symmetric);
        let w = BilinearForm::standard_symplectic(&f3, 4).unwrap();
        assert_eq!(w.classify_reflexive().unwrap(), ReflexiveClass::SkewSymmetric);
        let f2 = gf(2);
        let w2 = BilinearForm::standard_symplectic(&f2, 4).unwrap();
        assert_eq!(w2.classify_reflexive().unwrap(), ReflexiveClass::SkewSymmetric);
        assert_eq!(BilinearForm::dot(&f2, 3).classify_reflexive().unwrap(), ReflexiveClass::Symmetric);
        let f4 = gf(4);
        let h = BilinearForm::hermitian_dot(&f4, 2).unwrap().scaled(2);
        // a = omega^{-1} = omega^2, code 3.
        assert_eq!(h.classify_reflexive().unwrap(), ReflexiveClass::ScaledHermitian(3));
        let twisted = BilinearForm::new(Matrix::identity(&f4, 2), 1, 0).unwrap();
        assert!(matches!(twisted.classify_reflexive(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn non_reflexive_form_is_detected() {
        let f3 = gf(3);
        let g = gram(&f3, &[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]);
        let w = BilinearForm::bilinear(g).unwrap();
        assert_eq!(w.classify_reflexive().unwrap(), ReflexiveClass::NotReflexive);
        assert!(!w.reflexive_by_lines());
    }

    #[test]
    fn skew_but_not_symplectic_in_characteristic_two() {
        let f2 = gf(2);
        // x_1 orthogonal to a symplectic plane, with Omega(x_1, x_1) = 1.
        let g = gram(&f2, &[&[1, 0, 0], &[0, 0, 1], &[0, 1, 0]]);
        let w = BilinearForm::bilinear(g).unwrap();
        let p = w.predicates();
        assert!(p.skew_symmetric && !p.symplectic && p.nonsingular);
        assert_eq!(symplectic_basis(&w).unwrap_err(), Error::NotSymplectic);
    }

    #[test]
    fn symplectic_basis_gives_standard_gram() {
        let f3 = gf(3);
        let g = gram(&f3, &[&[0, 1, 2, 0], &[2, 0, 1, 1], &[1, 2, 0, 1], &[0, 2, 2, 0]]);
        let w = BilinearForm::bilinear(g).unwrap();
        assert!(w.is_nonsingular());
        let b = symplectic_basis(&w).unwrap();
        let std = BilinearForm::standard_symplectic(&f3, 4).unwrap();
        assert_eq!(b.gram_in_basis(&w), *std.gram());
        assert!(b.matrix(&f3).is_invertible());
    }

    #[test]
    fn odd_dimension_is_rejected() {
        let f3 = gf(3);
        let g = gram(&f3, &[&[0, 1, 0], &[2, 0, 1], &[0, 2, 0]]);
        let w = BilinearForm::bilinear(g).unwrap();
        assert_eq!(symplectic_basis(&w).unwrap_err(), Error::NotNonsingular);
    }

    #[test]
    fn singular_restrictions_of_standard_symplectic() {
        let s = Space::with_order(2, 4).unwrap();
        let w = BilinearForm::standard_symplectic(s.field(), 4).unwrap();
        assert_eq!(singular_restriction_set(&s, &w, 2).unwrap().len(), 15);
        assert_eq!(singular_restriction_set(&s, &w, 1).unwrap().len(), 15);
        assert_eq!(singular_restriction_set(&s, &w, 3).unwrap().len(), 15);
    }

    #[test]
    fn pair_and_gram_predicates_agree() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for q in [2usize, 3, 4, 9] {
            let f = gf(q);
            for n in 1..=3 {
                for _ in 0..40 {
                    let data: Vec<u8> = (0..n * n).map(|_| rng.gen_range(0..q as u8)).collect();
                    let mut g = Matrix::new(&f, n, n, data).unwrap();
                    // Bias toward structured forms so the positive cases occur.
                    match rng.gen_range(0..4) {
                        0 => {
                            for i in 0..n {
                                for j in 0..i {
                                    g.set(i, j, g.get(j, i));
                                }
                            }
                        }
                        1 => {
                            for i in 0..n {
                                g.set(i, i, 0);
                                for j in 0..i {
                                    g.set(i, j, f.neg(g.get(j, i)));
                                }
                            }
                        }
                        2 if f.involution().is_some() => {
                            let j0 = f.involution().unwrap();
                            for i in 0..n {
                                g.set(i, i, f.frob(j0, g.get(i, i)));
                                for j in 0..i {
                                    g.set(i, j, f.frob(j0, g.get(j, i)));
                                }
                            }
                        }
                        _ => {}
                    }
                    for s1 in 0..f.m() {
                        for s2 in 0..f.m() {
                            let w = BilinearForm::new(g.clone(), s1, s2).unwrap();
                            let a = w.predicates_by_pairs();
                            let b = w.predicates_by_gram();
                            assert_eq!(a, b, "q={q} n={n} {w:?}");
                        }
                    }
                }
            }
        }
    }
}
