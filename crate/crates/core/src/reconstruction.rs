//! Recovering semilinear maps from the transformations they induce.
//!
//! Line transformations go through the fundamental theorem of projective
//! geometry; transformations of G_k with 1 < k < n-1 descend to lines through
//! star images; hyperplane transformations are conjugated to lines by a form.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::{form_map, BilinearForm};
use crate::grassmann::{join, meet, Space};
use crate::linalg::Matrix;
use crate::maps::{GrassmannMap, SemilinearMap};
use crate::regularity::CoordinateSystem;

fn check_lines(space: &Space, f: &GrassmannMap) -> Result<()> {
    f.check_space(space)?;
    if f.k_dom() != 1 || f.k_cod() != 1 {
        return Err(Error::DomainMismatch("expected a transformation of G_1".into()));
    }
    if space.n() < 3 {
        return Err(Error::Precondition("line transformations need n >= 3".into()));
    }
    Ok(())
}

/// A hyperplane whose line set is not carried onto the line set of a
/// hyperplane, by `f` (`false`) or by `f^{-1}` (`true`).
pub fn independence_witness(space: &Space, f: &GrassmannMap) -> Result<Option<(u32, bool)>> {
    check_lines(space, f)?;
    let n = space.n();
    let inc = space.incidence(n - 1, 1)?;
    let finv = f.inverse();
    for (inverse, map) in [(false, f), (true, &finv)] {
        let bad = inc.par_iter().position_first(|lines| {
            let img: Vec<u32> = lines.iter().map(|&l| map.apply(l)).collect();
            space.span_lines(&img).map(|(d, _)| d != n - 1).unwrap_or(true)
        });
        if let Some(h) = bad {
            return Ok(Some((h as u32, inverse)));
        }
    }
    Ok(None)
}

/// `f` and `f^{-1}` send the lines of every hyperplane into a hyperplane,
/// which for bijections is the same as preserving line independence.
pub fn is_independence_preserving(space: &Space, f: &GrassmannMap) -> Result<bool> {
    Ok(independence_witness(space, f)?.is_none())
}

fn line_vector(space: &Space, l: u32) -> Result<Vec<u8>> {
    Ok(space.subspace(1, l)?.basis().row(0).to_vec())
}

// Coefficients (b, c) with w = b * y1 + c * yi.
fn coords2(space: &Space, y1: &[u8], yi: &[u8], w: &[u8]) -> Result<(u8, u8)> {
    let n = space.n();
    let rows: Vec<Vec<u8>> = (0..n).map(|r| vec![y1[r], yi[r]]).collect();
    let a = Matrix::from_rows(space.field(), 2, &rows)?;
    match a.solve(w)? {
        Some(x) => Ok((x[0], x[1])),
        None => Err(Error::VerificationFailed("image line left the expected plane".into())),
    }
}

/// The semilinear map whose induced line transformation is `f`.
pub fn ftpg_reconstruct(space: &Space, f: &GrassmannMap) -> Result<SemilinearMap> {
    if let Some((h, inverse)) = independence_witness(space, f)? {
        return Err(Error::NotIndependencePreserving { hyperplane: h, inverse });
    }
    let field = space.field();
    let n = space.n();
    let unit = |i: usize, a: u8| -> Vec<u8> { (0..n).map(|j| if j == i { a } else { 0 }).collect() };
    let img = |v: &[u8]| -> Result<Vec<u8>> { line_vector(space, f.apply(space.line_of(v)?)) };

    // Images of the basis lines, rescaled against the images of l(x_1 + x_i).
    let y1 = img(&unit(0, 1))?;
    let mut ys = vec![y1.clone()];
    for i in 1..n {
        let yi = img(&unit(i, 1))?;
        let mut v = unit(0, 1);
        v[i] = 1;
        let (b, c) = coords2(space, &y1, &yi, &img(&v)?)?;
        if b == 0 || c == 0 {
            return Err(Error::VerificationFailed("diagonal line mapped onto an axis".into()));
        }
        let a = field.div(c, b);
        ys.push(yi.iter().map(|&x| field.mul(a, x)).collect());
    }

    // sigma(a) from l(x_1 + a x_2) -> l(y_1 + sigma(a) y_2).
    let mut pointwise = vec![0u8; field.q()];
    for a in 1..field.q() as u8 {
        let mut v = unit(0, 1);
        v[1] = a;
        let (b, c) = coords2(space, &ys[0], &ys[1], &img(&v)?)?;
        if b == 0 {
            return Err(Error::VerificationFailed("diagonal line mapped onto an axis".into()));
        }
        pointwise[a as usize] = field.div(c, b);
    }
    let sigma = (0..field.m())
        .find(|&j| (0..field.q() as u8).all(|a| field.frob(j, a) == pointwise[a as usize]))
        .ok_or(Error::AutomorphismMismatch)?;

    let rows: Vec<Vec<u8>> = (0..n).map(|r| ys.iter().map(|y| y[r]).collect()).collect();
    let g = SemilinearMap::new(Matrix::from_rows(field, n, &rows)?, sigma)?;
    if g.induced_map(space, 1)? != *f {
        return Err(Error::VerificationFailed("reconstructed map induces a different line table".into()));
    }
    Ok(g)
}

/// A pair whose adjacency `f` fails to preserve in one direction or the other.
pub fn distance_witness(space: &Space, f: &GrassmannMap) -> Result<Option<(u32, u32)>> {
    f.check_space(space)?;
    if !f.is_transformation() {
        return Err(Error::DomainMismatch("expected a transformation of G_k".into()));
    }
    let k = f.k_dom();
    let lat = space.lattice()?;
    let size = space.size(k) as u32;
    let adj = (0..size)
        .into_par_iter()
        .find_map_first(|a| {
            (a + 1..size)
                .find(|&b| (lat.distance(k, a, b) == 1) != (lat.distance(k, f.apply(a), f.apply(b)) == 1))
                .map(|b| (a, b))
        });
    let full = (0..size)
        .into_par_iter()
        .find_map_first(|a| {
            (a + 1..size)
                .find(|&b| lat.distance(k, a, b) != lat.distance(k, f.apply(a), f.apply(b)))
                .map(|b| (a, b))
        });
    // Adjacency preserved both ways forces every distance to be preserved.
    if adj.is_none() != full.is_none() {
        return Err(Error::VerificationFailed(
            "adjacency and distance preservation disagree".into(),
        ));
    }
    Ok(full.or(adj))
}

pub fn is_distance_preserving(space: &Space, f: &GrassmannMap) -> Result<bool> {
    Ok(distance_witness(space, f)?.is_none())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    /// Two planes whose distance is not preserved.
    Pair(u32, u32),
    /// A hyperplane whose lines are not sent into a hyperplane.
    Hyperplane { index: u32, inverse: bool },
    /// A coordinate system whose maximal regular set is not sent to one.
    System { lines: Vec<u32>, inverse: bool },
    /// No classification exists in this case.
    Degenerate(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    /// `f = L_k(h)`.
    Linear(SemilinearMap),
    /// `f = L_k(h) ∘ F(form)` with `F(form)` the complement map of a form; only for n = 2k.
    FormComposed { form: BilinearForm, map: SemilinearMap },
    NotClassifiable(Witness),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationResult {
    pub variant: Classification,
    /// The recovered map reproduces the input table exactly.
    pub verified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StarImage {
    Star(u32),
    Top(u32),
}

// For each (j-1)-subspace s, what f does to the planes through s.
fn star_images(space: &Space, f: &GrassmannMap) -> Result<Vec<StarImage>> {
    let j = f.k_dom();
    let stars = space.incidence(j - 1, j)?;
    let tops = space.incidence(j + 1, j)?;
    stars
        .par_iter()
        .map(|members| {
            let mut img: Vec<u32> = members.iter().map(|&p| f.apply(p)).collect();
            img.sort_unstable();
            let a = space.subspace(j, img[0])?;
            let b = space.subspace(j, img[1])?;
            let (c, t) = (meet(&a, &b)?, join(&a, &b)?);
            if c.dim() + 1 != j {
                return Err(Error::VerificationFailed("star image members are not adjacent".into()));
            }
            let (c, t) = (space.index_of(&c)?, space.index_of(&t)?);
            if stars[c as usize] == img {
                Ok(StarImage::Star(c))
            } else if tops[t as usize] == img {
                Ok(StarImage::Top(t))
            } else {
                Err(Error::VerificationFailed("star image is neither a star nor a top".into()))
            }
        })
        .collect()
}

// Either every star goes to a star (Some(true)) or every star to a top (Some(false)).
fn star_dichotomy(images: &[StarImage]) -> Result<bool> {
    let stars = images.iter().filter(|x| matches!(x, StarImage::Star(_))).count();
    if stars == images.len() {
        Ok(true)
    } else if stars == 0 {
        Ok(false)
    } else {
        Err(Error::DichotomyViolated)
    }
}

// The transformation of G_{j-1} read off star-to-star images.
fn descend(space: &Space, f: &GrassmannMap) -> Result<GrassmannMap> {
    let images = star_images(space, f)?;
    if !star_dichotomy(&images)? {
        return Err(Error::DichotomyViolated);
    }
    let table = images
        .iter()
        .map(|x| match x {
            StarImage::Star(c) => *c,
            StarImage::Top(_) => unreachable!(),
        })
        .collect();
    GrassmannMap::new(space, f.k_dom() - 1, f.k_dom() - 1, table)
}

fn lift_linear(space: &Space, f: &GrassmannMap) -> Result<SemilinearMap> {
    let mut g = f.clone();
    while g.k_dom() > 1 {
        g = descend(space, &g)?;
    }
    let h = ftpg_reconstruct(space, &g)?;
    if h.induced_map(space, f.k_dom())? != *f {
        return Err(Error::VerificationFailed("lifted map induces a different table".into()));
    }
    Ok(h)
}

/// Classifies a distance-preserving transformation of G_k, 1 < k < n-1.
pub fn chow_classify(space: &Space, f: &GrassmannMap) -> Result<ClassificationResult> {
    f.check_space(space)?;
    let n = space.n();
    let k = f.k_dom();
    if !(f.is_transformation() && 1 < k && k + 1 < n) {
        return Err(Error::Precondition(format!(
            "adjacency classifies transformations of G_k with 1 < k < n-1 only, got k = {k}, n = {n}"
        )));
    }
    if let Some((a, b)) = distance_witness(space, f)? {
        return Err(Error::NotDistancePreserving { a, b });
    }
    if star_dichotomy(&star_images(space, f)?)? {
        let h = lift_linear(space, f)?;
        return Ok(ClassificationResult {
            variant: Classification::Linear(h),
            verified: true,
        });
    }
    // Stars go to tops: only possible when n = 2k. The symplectic complement
    // map is an involution, so f = g ∘ F with g = f ∘ F star-preserving.
    if 2 * k != n {
        return Err(Error::DichotomyViolated);
    }
    let form = BilinearForm::standard_symplectic(space.field(), n)?;
    let fm = form_map(space, &form, k)?;
    let g = f.compose(&fm)?;
    let h = lift_linear(space, &g)?;
    if h.induced_map(space, k)?.compose(&fm)? != *f {
        return Err(Error::VerificationFailed("form-composed map induces a different table".into()));
    }
    Ok(ClassificationResult {
        variant: Classification::FormComposed { form, map: h },
        verified: true,
    })
}

/// A coordinate system whose maximal regular set `f` (or `f^{-1}`) does not
/// send to a maximal regular set.
pub fn regularity_witness(space: &Space, f: &GrassmannMap) -> Result<Option<(CoordinateSystem, bool)>> {
    f.check_space(space)?;
    if !f.is_transformation() {
        return Err(Error::DomainMismatch("expected a transformation of G_k".into()));
    }
    let k = f.k_dom();
    let systems = space.coordinate_systems()?;
    // Every maximal regular set is the full coordinate set of some system.
    let maximal = space.coordinate_sets(k)?;
    let known: HashSet<&[u32]> = maximal.iter().map(Vec::as_slice).collect();
    let finv = f.inverse();
    for (inverse, map) in [(false, f), (true, &finv)] {
        let bad = maximal
            .par_iter()
            .zip(systems.par_iter())
            .map(|(r, c)| -> Result<Option<Vec<u32>>> {
                let mut img: Vec<u32> = r.iter().map(|&p| map.apply(p)).collect();
                img.sort_unstable();
                Ok((!known.contains(img.as_slice())).then(|| c.clone()))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .next();
        if let Some(c) = bad {
            return Ok(Some((CoordinateSystem::from_sorted_unchecked(c), inverse)));
        }
    }
    Ok(None)
}

/// `f` and `f^{-1}` send maximal regular sets to maximal regular sets.
pub fn is_regular_transformation(space: &Space, f: &GrassmannMap) -> Result<bool> {
    Ok(regularity_witness(space, f)?.is_none())
}

/// Classifies a regular transformation of G_k.
pub fn regular_classify(space: &Space, f: &GrassmannMap) -> Result<ClassificationResult> {
    f.check_space(space)?;
    let n = space.n();
    let k = f.k_dom();
    if !f.is_transformation() {
        return Err(Error::DomainMismatch("expected a transformation of G_k".into()));
    }
    if n == 2 {
        return Ok(ClassificationResult {
            variant: Classification::NotClassifiable(Witness::Degenerate(
                "every transformation of G_1^2 is regular".into(),
            )),
            verified: false,
        });
    }
    if !is_regular_transformation(space, f)? {
        return Err(Error::NotRegular);
    }
    if k == 1 {
        let h = ftpg_reconstruct(space, f)?;
        return Ok(ClassificationResult {
            variant: Classification::Linear(h),
            verified: true,
        });
    }
    if k == n - 1 {
        let h = hyperplane_classify(space, f)?;
        return Ok(ClassificationResult {
            variant: Classification::Linear(h),
            verified: true,
        });
    }
    if let Some((a, b)) = distance_witness(space, f)? {
        return Err(Error::NotDistancePreserving { a, b });
    }
    chow_classify(space, f)
}

// Conjugates a hyperplane transformation to lines through the dot form. If
// the line map is v -> M sigma(v), the hyperplane map is v -> M^{-T} sigma(v).
fn hyperplane_classify(space: &Space, f: &GrassmannMap) -> Result<SemilinearMap> {
    let n = space.n();
    let d = form_map(space, &BilinearForm::dot(space.field(), n), n - 1)?;
    let conj = d.compose(f)?.compose(&d.inverse())?;
    let g = ftpg_reconstruct(space, &conj)?;
    let mt = g
        .matrix()
        .inverse()
        .map_err(|_| Error::SingularMatrix)?
        .transpose();
    let h = SemilinearMap::new(mt, g.sigma())?;
    if h.induced_map(space, n - 1)? != *f {
        return Err(Error::VerificationFailed("hyperplane map induces a different table".into()));
    }
    Ok(h)
}

/// Classifies any transformation of G_k; geometric failures come back as
/// `NotClassifiable` with a witness rather than as errors.
pub fn classify(space: &Space, f: &GrassmannMap) -> Result<ClassificationResult> {
    f.check_space(space)?;
    if !f.is_transformation() {
        return Err(Error::DomainMismatch("expected a transformation of G_k".into()));
    }
    let n = space.n();
    let k = f.k_dom();
    let fail = |w: Witness| ClassificationResult {
        variant: Classification::NotClassifiable(w),
        verified: false,
    };
    if n == 2 {
        return regular_classify(space, f);
    }
    if k == 1 || k == n - 1 {
        let lines = if k == 1 {
            f.clone()
        } else {
            let d = form_map(space, &BilinearForm::dot(space.field(), n), n - 1)?;
            d.compose(f)?.compose(&d.inverse())?
        };
        if let Some((h, inverse)) = independence_witness(space, &lines)? {
            // For k = n-1 the index names a hyperplane of the conjugated line map.
            return Ok(fail(Witness::Hyperplane { index: h, inverse }));
        }
        let h = if k == 1 {
            ftpg_reconstruct(space, f)?
        } else {
            hyperplane_classify(space, f)?
        };
        return Ok(ClassificationResult {
            variant: Classification::Linear(h),
            verified: true,
        });
    }
    if let Some((a, b)) = distance_witness(space, f)? {
        return Ok(fail(Witness::Pair(a, b)));
    }
    chow_classify(space, f)
}

/// Re-derives the table of a classification and compares it with `f`.
pub fn verify_classification(space: &Space, f: &GrassmannMap, c: &Classification) -> Result<bool> {
    let k = f.k_dom();
    Ok(match c {
        Classification::Linear(h) => h.induced_map(space, k)? == *f,
        Classification::FormComposed { form, map } => {
            map.induced_map(space, k)?.compose(&form_map(space, form, k)?)? == *f
        }
        Classification::NotClassifiable(_) => false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::Field;
    use crate::maps::induces;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn space(q: usize, n: usize) -> Space {
        Space::with_order(q, n).unwrap()
    }

    fn random_semilinear(rng: &mut ChaCha8Rng, field: &Field, n: usize) -> SemilinearMap {
        loop {
            let rows: Vec<Vec<u8>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(0..field.q()) as u8).collect())
                .collect();
            let m = Matrix::from_rows(field, n, &rows).unwrap();
            if m.is_invertible() {
                return SemilinearMap::new(m, rng.gen_range(0..field.m())).unwrap();
            }
        }
    }

    #[test]
    fn identity_reconstructs_to_identity() {
        let s = space(2, 3);
        let h = ftpg_reconstruct(&s, &GrassmannMap::identity(&s, 1)).unwrap();
        assert_eq!(h, SemilinearMap::identity(s.field(), 3));
    }

    #[test]
    fn gf4_roundtrip_recovers_sigma() {
        let s = space(4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let h = random_semilinear(&mut rng, s.field(), 3);
            let f = h.induced_map(&s, 1).unwrap();
            let g = ftpg_reconstruct(&s, &f).unwrap();
            assert_eq!(g.sigma(), h.sigma());
            assert!(g.same_projective(&h));
        }
    }

    #[test]
    fn swapping_two_coplanar_lines_breaks_independence() {
        let s = space(2, 3);
        let f = GrassmannMap::identity(&s, 1).with_swap(0, 1);
        assert!(!is_independence_preserving(&s, &f).unwrap());
        assert!(matches!(
            ftpg_reconstruct(&s, &f),
            Err(Error::NotIndependencePreserving { .. })
        ));
        assert!(induces(&s, &f, 2).unwrap().is_none());
    }

    #[test]
    fn lines_of_the_plane_are_rejected() {
        let s = space(3, 2);
        assert!(matches!(
            is_independence_preserving(&s, &GrassmannMap::identity(&s, 1)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn chow_roundtrip_and_form_branch() {
        let s = space(2, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = BilinearForm::standard_symplectic(s.field(), 4).unwrap();
        let fm = form_map(&s, &w, 2).unwrap();
        for _ in 0..10 {
            let h = random_semilinear(&mut rng, s.field(), 4);
            let f = h.induced_map(&s, 2).unwrap();
            let r = chow_classify(&s, &f).unwrap();
            assert!(r.verified);
            assert!(matches!(&r.variant, Classification::Linear(g) if g.same_projective(&h)));
            let f2 = f.compose(&fm).unwrap();
            let r2 = chow_classify(&s, &f2).unwrap();
            assert!(matches!(r2.variant, Classification::FormComposed { .. }));
            assert!(verify_classification(&s, &f2, &r2.variant).unwrap());
        }
    }

    #[test]
    fn corrupted_table_has_a_distance_witness() {
        let s = space(2, 4);
        let f = GrassmannMap::identity(&s, 2).with_swap(0, 34);
        assert!(distance_witness(&s, &f).unwrap().is_some());
        let r = classify(&s, &f).unwrap();
        assert!(matches!(r.variant, Classification::NotClassifiable(Witness::Pair(_, _))));
        assert!(matches!(chow_classify(&s, &f), Err(Error::NotDistancePreserving { .. })));
    }

    #[test]
    fn chow_rejects_extreme_k() {
        let s = space(2, 4);
        assert!(matches!(
            chow_classify(&s, &GrassmannMap::identity(&s, 1)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn hyperplane_transformations_reconstruct() {
        let s = space(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let h = random_semilinear(&mut rng, s.field(), 3);
            let f = h.induced_map(&s, 2).unwrap();
            let r = regular_classify(&s, &f).unwrap();
            assert!(matches!(&r.variant, Classification::Linear(g) if g.same_projective(&h)));
        }
    }

    #[test]
    fn g12_is_degenerate() {
        let s = space(3, 2);
        let f = GrassmannMap::identity(&s, 1).with_swap(0, 1);
        assert!(is_regular_transformation(&s, &f).unwrap());
        let r = regular_classify(&s, &f).unwrap();
        assert!(matches!(r.variant, Classification::NotClassifiable(Witness::Degenerate(_))));
    }

    #[test]
    fn form_map_is_regular_at_n_equal_2k() {
        let s = space(2, 4);
        let fm = form_map(&s, &BilinearForm::dot(s.field(), 4), 2).unwrap();
        assert!(is_regular_transformation(&s, &fm).unwrap());
        assert!(is_distance_preserving(&s, &fm).unwrap());
        let r = regular_classify(&s, &fm).unwrap();
        assert!(matches!(r.variant, Classification::FormComposed { .. }));
        assert!(r.verified);
    }
}
