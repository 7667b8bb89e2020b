//! Irregular sets: not regular and containing no maximal regular set.
//!
//! Decisions come with certificates where one exists: a coordinate system for
//! "contains a maximal regular set", a plane for "not maximal".

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{form_map, BilinearForm};
use crate::grassmann::{binomial, meet, Lattice, PlaneSet, Space, Subspace};
use crate::linalg::Matrix;
use crate::maps::{GrassmannMap, SemilinearMap};
use crate::regularity::{is_regular, CoordinateSystem};

struct MaxRegSearch<'a> {
    lat: &'a Lattice,
    n: usize,
    k: usize,
    inside: &'a [bool],
    cands: Vec<u32>,
}

impl MaxRegSearch<'_> {
    // `spans` holds the joins of every chosen subset of size < k, empty subset first.
    fn dfs(
        &self,
        start: usize,
        chosen: &mut Vec<u32>,
        total: (usize, u32),
        spans: &mut Vec<(usize, u32)>,
    ) -> bool {
        if total.0 == self.n {
            return true;
        }
        let need = self.n - total.0;
        for i in start..self.cands.len() {
            if self.cands.len() - i < need {
                break;
            }
            let l = self.cands[i];
            let Some(nt) = self.lat.join_line(total.0, total.1, l) else {
                continue;
            };
            let before = spans.len();
            let mut ok = true;
            for j in 0..before {
                let (d, p) = spans[j];
                let joined = self.lat.join_line(d, p, l).expect("independent of the total span");
                if d + 1 == self.k {
                    if !self.inside[joined as usize] {
                        ok = false;
                        break;
                    }
                } else {
                    spans.push((d + 1, joined));
                }
            }
            if ok {
                chosen.push(l);
                if self.dfs(i + 1, chosen, (total.0 + 1, nt), spans) {
                    return true;
                }
                chosen.pop();
            }
            spans.truncate(before);
        }
        false
    }
}

/// A coordinate system all of whose coordinate k-planes lie in `i`.
pub fn contains_maximal_regular(space: &Space, i: &PlaneSet) -> Result<Option<CoordinateSystem>> {
    i.check_space(space)?;
    let n = space.n();
    let k = i.k();
    if k == 0 || k >= n {
        return Err(Error::OutOfRange(format!("k = {k} outside 1..n-1")));
    }
    if (i.len() as u64) < binomial(n, k) {
        return Ok(None);
    }
    let lat = space.lattice()?;
    let inside = i.mask(space.size(k));
    // An axis lies in C(n-1, k-1) coordinate planes, all of which must be in `i`.
    let through = space.incidence(1, k)?;
    let min = binomial(n - 1, k - 1) as usize;
    let cands: Vec<u32> = (0..space.size(1) as u32)
        .filter(|&l| through[l as usize].iter().filter(|&&p| inside[p as usize]).count() >= min)
        .collect();
    let search = MaxRegSearch {
        lat: &lat,
        n,
        k,
        inside: &inside,
        cands,
    };
    let mut chosen = Vec::with_capacity(n);
    let mut spans = vec![(0usize, 0u32)];
    if search.dfs(0, &mut chosen, (0, 0), &mut spans) {
        Ok(Some(CoordinateSystem::from_sorted_unchecked(chosen)))
    } else {
        Ok(None)
    }
}

pub fn is_irregular(space: &Space, i: &PlaneSet) -> Result<bool> {
    Ok(is_regular(space, i)?.is_none() && contains_maximal_regular(space, i)?.is_none())
}

/// The least plane outside `i` whose addition keeps `i` irregular, if any.
/// `i` must already be irregular.
pub fn extension_witness(space: &Space, i: &PlaneSet) -> Result<Option<u32>> {
    let outside: Vec<u32> = (0..space.size(i.k()) as u32).filter(|&p| !i.contains(p)).collect();
    // Supersets of a non-regular set are never regular, so only the second test matters.
    let hits: Vec<Option<u32>> = outside
        .par_iter()
        .map(|&p| {
            contains_maximal_regular(space, &i.inserted(p)).map(|c| if c.is_none() { Some(p) } else { None })
        })
        .collect::<Result<_>>()?;
    Ok(hits.into_iter().flatten().next())
}

/// Irregular, and every plane outside completes some maximal regular set with planes of `i`.
pub fn is_maximal_irregular(space: &Space, i: &PlaneSet) -> Result<bool> {
    Ok(is_irregular(space, i)? && extension_witness(space, i)?.is_none())
}

/// One pass in canonical plane order, each plane kept iff the set stays irregular.
pub fn complete_to_maximal_irregular(space: &Space, i: &PlaneSet) -> Result<PlaneSet> {
    let order: Vec<u32> = (0..space.size(i.k()) as u32).collect();
    complete_in_order(space, i, &order)
}

/// As `complete_to_maximal_irregular`, scanning `order` (a permutation of G_k) instead.
pub fn complete_in_order(space: &Space, i: &PlaneSet, order: &[u32]) -> Result<PlaneSet> {
    if !is_irregular(space, i)? {
        return Err(Error::NotIrregular);
    }
    if order.len() != space.size(i.k()) {
        return Err(Error::ShapeMismatch("order must list every plane once".into()));
    }
    let mut cur = i.clone();
    for &p in order {
        if cur.contains(p) {
            continue;
        }
        let next = cur.inserted(p);
        if contains_maximal_regular(space, &next)?.is_none() {
            cur = next;
        }
    }
    // A plane rejected earlier stays rejected: its witness system survives every later addition.
    if extension_witness(space, &cur)?.is_some() {
        return Err(Error::VerificationFailed("completion is not maximal".into()));
    }
    Ok(cur)
}

fn plane_index(space: &Space, s: &Subspace) -> Result<(usize, u32)> {
    if s.ambient() != space.n() {
        return Err(Error::AmbientMismatch);
    }
    Ok((s.dim(), space.index_of(s)?))
}

/// `X(s)`: the k-planes meeting `s` nontrivially.
pub fn x_set(space: &Space, s: &Subspace, k: usize) -> Result<PlaneSet> {
    let (m, si) = plane_index(space, s)?;
    if m == 0 {
        return Err(Error::DimMismatch("X needs dim s >= 1".into()));
    }
    let lat = space.lattice()?;
    let members = (0..space.size(k) as u32)
        .filter(|&l| m + k - lat.join(m, si, k, l).0 >= 1)
        .collect();
    Ok(PlaneSet::from_sorted(space, k, members))
}

/// `Y(s)`: the k-planes sharing a hyperplane with `s`.
pub fn y_set(space: &Space, s: &Subspace, k: usize) -> Result<PlaneSet> {
    let (m, si) = plane_index(space, s)?;
    if m == 0 {
        return Err(Error::DimMismatch("Y needs dim s >= 1".into()));
    }
    let lat = space.lattice()?;
    let n = space.n();
    let members = (0..space.size(k) as u32)
        .filter(|&l| lat.join(m, si, k, l).0 < n)
        .collect();
    Ok(PlaneSet::from_sorted(space, k, members))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Characteristics {
    /// Lines t with every k-plane through t in the set.
    pub lines: Vec<u32>,
    /// Join of `lines`; `None` when there are none.
    pub line_span: Option<Subspace>,
    pub n1: usize,
    /// Hyperplanes t with every k-plane inside t in the set.
    pub hyperplanes: Vec<u32>,
    /// Meet of `hyperplanes`; `None` when there are none.
    pub hyperplane_meet: Option<Subspace>,
    pub n_hyper: usize,
}

pub fn characteristics(space: &Space, i: &PlaneSet) -> Result<Characteristics> {
    i.check_space(space)?;
    let n = space.n();
    let k = i.k();
    let full = |m: usize| -> Result<Vec<u32>> {
        let inc = space.incidence(m, k)?;
        Ok((0..inc.len() as u32)
            .filter(|&t| inc[t as usize].iter().all(|&p| i.contains(p)))
            .collect())
    };
    let lines = full(1)?;
    let hyperplanes = full(n - 1)?;
    let line_span = if lines.is_empty() {
        None
    } else {
        let (d, idx) = space.span_lines(&lines)?;
        Some(space.subspace(d, idx)?)
    };
    let hyperplane_meet = match hyperplanes.split_first() {
        None => None,
        Some((&h0, rest)) => {
            let mut acc = space.subspace(n - 1, h0)?;
            for &h in rest {
                acc = meet(&acc, &space.subspace(n - 1, h)?)?;
            }
            Some(acc)
        }
    };
    Ok(Characteristics {
        n1: line_span.as_ref().map_or(0, Subspace::dim),
        n_hyper: hyperplane_meet.as_ref().map_or(n, Subspace::dim),
        lines,
        line_span,
        hyperplanes,
        hyperplane_meet,
    })
}

/// Planes and lines fixed by the anchored construction, kept for inspection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnchoredConstruction {
    /// The union before completion.
    pub seed: PlaneSet,
    /// The maximal irregular completion.
    pub set: PlaneSet,
    pub s_prime: Subspace,
    pub t_prime: Subspace,
    /// `t ∩ t'`.
    pub l: Subspace,
    pub p: Subspace,
    pub p_prime: Subspace,
    /// Class of the trace on G_k(t). Never contains a maximal regular set and
    /// is never maximal irregular; over GF(2) with k = 2 it is regular.
    pub trace: SubStatus,
}

fn first_where<F: Fn(&Subspace) -> bool>(space: &Space, d: usize, pred: F) -> Result<Subspace> {
    space
        .grassmannian(d)?
        .planes()
        .iter()
        .find(|x| pred(x))
        .cloned()
        .ok_or_else(|| Error::VerificationFailed(format!("no {d}-subspace with the required incidence")))
}

/// A maximal irregular set containing `X(s)` whose trace on G_k(t) is not
/// maximal irregular there, with `n_1 = n - k - 1`.
///
/// `dim s = n - k - 1`, `dim t = k + 1`, `s ∩ t = 0`, `1 < k < n - 1`.
/// Every free choice is the first valid one in canonical order.
pub fn construct_x_anchored(space: &Space, s: &Subspace, t: &Subspace, k: usize) -> Result<AnchoredConstruction> {
    let n = space.n();
    if !(1 < k && k + 1 < n) {
        return Err(Error::Precondition(format!("need 1 < k < n-1, got k = {k}, n = {n}")));
    }
    if s.ambient() != n || t.ambient() != n {
        return Err(Error::AmbientMismatch);
    }
    if s.dim() != n - k - 1 || t.dim() != k + 1 {
        return Err(Error::DimMismatch(format!(
            "need dim s = {} and dim t = {}, got {} and {}",
            n - k - 1,
            k + 1,
            s.dim(),
            t.dim()
        )));
    }
    if meet(s, t)?.dim() != 0 {
        return Err(Error::NotTransverse);
    }
    let s_prime = first_where(space, k + 2, |x| x.contains(t))?;
    let axis = meet(&s_prime, s)?;
    debug_assert_eq!(axis.dim(), 1);
    let t_prime = first_where(space, k + 1, |x| s_prime.contains(x) && !x.contains(&axis) && x != t)?;
    let l = meet(t, &t_prime)?;
    let p = first_where(space, 1, |x| l.contains(x))?;
    let p_prime = first_where(space, 1, |x| t_prime.contains(x) && !l.contains(x))?;

    let idx = |x: &Subspace| space.index_of(x);
    let in_t_prime = space.incident(k + 1, idx(&t_prime)?, k)?;
    let through_p_prime = space.incident(1, idx(&p_prime)?, k)?;
    let in_t = space.incident(k + 1, idx(t)?, k)?;
    let through_p = space.incident(1, idx(&p)?, k)?;
    let xs = x_set(space, s, k)?;
    let seed = xs
        .union(&in_t_prime.intersection(&through_p_prime))
        .union(&in_t.intersection(&through_p).removed(idx(&l)?));
    let set = complete_to_maximal_irregular(space, &seed)?;

    if !xs.is_subset(&set) {
        return Err(Error::VerificationFailed("X(s) not inside the completion".into()));
    }
    let ch = characteristics(space, &set)?;
    if ch.n1 != n - k - 1 {
        return Err(Error::VerificationFailed(format!("n_1 = {}, expected {}", ch.n1, n - k - 1)));
    }
    let trace = restricted_grassmannian_status(space, &set, t)?;
    if !matches!(trace, SubStatus::Regular | SubStatus::Irregular) {
        return Err(Error::VerificationFailed(format!("trace on G_k(t) is {trace:?}")));
    }
    Ok(AnchoredConstruction {
        seed,
        set,
        s_prime,
        t_prime,
        l,
        p,
        p_prime,
        trace,
    })
}

/// The dual construction: a maximal irregular set containing `Y(s)` whose
/// trace on G_k(t) is not maximal irregular there, with `n_{n-1} = n - k + 1`.
/// Returns the set and the class of its trace.
///
/// `dim s = n - k + 1`, `dim t = k - 1`, `s ∩ t = 0`. Runs the X-anchored
/// construction on orthogonal complements under the dot form and pulls back.
pub fn construct_y_anchored(space: &Space, s: &Subspace, t: &Subspace, k: usize) -> Result<(PlaneSet, SubStatus)> {
    let n = space.n();
    if !(1 < k && k + 1 < n) {
        return Err(Error::Precondition(format!("need 1 < k < n-1, got k = {k}, n = {n}")));
    }
    if s.ambient() != n || t.ambient() != n {
        return Err(Error::AmbientMismatch);
    }
    if s.dim() != n - k + 1 || t.dim() != k - 1 {
        return Err(Error::DimMismatch(format!(
            "need dim s = {} and dim t = {}, got {} and {}",
            n - k + 1,
            k - 1,
            s.dim(),
            t.dim()
        )));
    }
    if meet(s, t)?.dim() != 0 {
        return Err(Error::NotTransverse);
    }
    let dot = BilinearForm::dot(space.field(), n);
    let j = construct_x_anchored(space, &dot.right_perp(s)?, &dot.right_perp(t)?, n - k)?.set;
    let f = form_map(space, &dot, k)?;
    let set = f.inverse().apply_set(space, &j)?;
    if !y_set(space, s, k)?.is_subset(&set) {
        return Err(Error::VerificationFailed("Y(s) not inside the pulled-back set".into()));
    }
    let ch = characteristics(space, &set)?;
    if ch.n_hyper != n - k + 1 {
        return Err(Error::VerificationFailed(format!(
            "n_(n-1) = {}, expected {}",
            ch.n_hyper,
            n - k + 1
        )));
    }
    if !is_maximal_irregular(space, &set)? {
        return Err(Error::VerificationFailed("pulled-back set is not maximal irregular".into()));
    }
    let trace = restricted_grassmannian_status(space, &set, t)?;
    if !matches!(trace, SubStatus::Regular | SubStatus::Irregular) {
        return Err(Error::VerificationFailed(format!("trace on G_k(t) is {trace:?}")));
    }
    Ok((set, trace))
}

/// G_k(t) identified with a smaller Grassmannian: G_k of t itself when
/// `dim t > k`, G_{k - dim t} of `V / t` when `dim t < k`.
#[derive(Debug, Clone)]
pub struct SubGrassmannian {
    pub sub: Space,
    pub sub_k: usize,
    k: usize,
    /// Global index of each local plane.
    global: Vec<u32>,
    local: HashMap<u32, u32>,
}

impl SubGrassmannian {
    pub fn new(space: &Space, t: &Subspace, k: usize) -> Result<SubGrassmannian> {
        let (m, ti) = plane_index(space, t)?;
        if m == k {
            return Err(Error::EqualDimension(k));
        }
        if k == 0 || k >= space.n() {
            return Err(Error::OutOfRange(format!("k = {k} outside 1..n-1")));
        }
        let field = space.field().clone();
        let n = space.n();
        let basis = t.basis_vectors();
        let pivots: Vec<usize> = basis
            .iter()
            .map(|r| r.iter().position(|&x| x != 0).expect("basis rows are nonzero"))
            .collect();
        let (sub_n, sub_k) = if m > k { (m, k) } else { (n - m, k - m) };
        let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
        // RREF basis: coordinates inside t are the pivot entries; modulo t,
        // clearing the pivot entries leaves the free columns as coordinates.
        let coords = |v: &[u8]| -> Vec<u8> {
            if m > k {
                pivots.iter().map(|&c| v[c]).collect()
            } else {
                let mut w = v.to_vec();
                for (row, &c) in basis.iter().zip(&pivots) {
                    let a = w[c];
                    if a != 0 {
                        for (x, &b) in w.iter_mut().zip(row) {
                            *x = field.sub(*x, field.mul(a, b));
                        }
                    }
                }
                free.iter().map(|&c| w[c]).collect()
            }
        };
        let sub = Space::new(&field, sub_n)?;
        let members = space.incident(m, ti, k)?;
        let mut global = vec![u32::MAX; sub.size(sub_k)];
        let mut local = HashMap::with_capacity(members.len());
        for g in members.iter() {
            let plane = space.subspace(k, g)?;
            let vs: Vec<Vec<u8>> = plane.basis_vectors().iter().map(|v| coords(v)).collect();
            let img = Subspace::new(&field, sub_n, &vs)?;
            if img.dim() != sub_k {
                return Err(Error::VerificationFailed("coordinate image lost dimension".into()));
            }
            let li = sub.index_of(&img)?;
            if global[li as usize] != u32::MAX {
                return Err(Error::NotBijective("two planes share coordinates".into()));
            }
            global[li as usize] = g;
            local.insert(g, li);
        }
        if global.contains(&u32::MAX) {
            return Err(Error::NotBijective("coordinate map is not onto".into()));
        }
        Ok(SubGrassmannian {
            sub,
            sub_k,
            k,
            global,
            local,
        })
    }

    /// The planes of `i` inside G_k(t), in local indices.
    pub fn to_local(&self, i: &PlaneSet) -> Result<PlaneSet> {
        if i.k() != self.k {
            return Err(Error::DimMismatch("set dimension differs from the carrier's k".into()));
        }
        let members = i.iter().filter_map(|p| self.local.get(&p).copied()).collect();
        PlaneSet::new(&self.sub, self.sub_k, members)
    }

    pub fn to_global(&self, space: &Space, j: &PlaneSet) -> Result<PlaneSet> {
        j.check_space(&self.sub)?;
        PlaneSet::new(space, self.k, j.iter().map(|p| self.global[p as usize]).collect())
    }

    /// Every plane of G_k(t), in global indices.
    pub fn carrier(&self, space: &Space) -> PlaneSet {
        let mut g = self.global.clone();
        g.sort_unstable();
        PlaneSet::from_sorted(space, self.k, g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubStatus {
    /// Regular and not maximal.
    Regular,
    /// Contains a maximal regular subset of G_k(t); a maximal regular trace lands here too.
    ContainsMaximalRegular,
    MaximalIrregular,
    Irregular,
}

/// Class of `i ∩ G_k(t)` as a subset of G_k(t).
pub fn restricted_grassmannian_status(space: &Space, i: &PlaneSet, t: &Subspace) -> Result<SubStatus> {
    let sg = SubGrassmannian::new(space, t, i.k())?;
    let j = sg.to_local(i)?;
    let sub = &sg.sub;
    if j.len() < binomial(sub.n(), sg.sub_k) as usize && is_regular(sub, &j)?.is_some() {
        return Ok(SubStatus::Regular);
    }
    if contains_maximal_regular(sub, &j)?.is_some() {
        return Ok(SubStatus::ContainsMaximalRegular);
    }
    if extension_witness(sub, &j)?.is_none() {
        Ok(SubStatus::MaximalIrregular)
    } else {
        Ok(SubStatus::Irregular)
    }
}

/// Extends a maximal irregular subset of G_k(t) to a maximal irregular `J`
/// of G_k with `J ∩ G_k(t) = i`.
///
/// For `dim t > k` this completes `X(s) ∪ i` with `s` the first complement of
/// `t`; for `dim t < k` it works in G_{n-k} through the dot form.
pub fn lift_maximal_irregular(space: &Space, i: &PlaneSet, t: &Subspace) -> Result<PlaneSet> {
    let n = space.n();
    let k = i.k();
    let m = t.dim();
    if m == 0 || m >= n {
        return Err(Error::DimMismatch("carrier must be a proper nonzero subspace".into()));
    }
    let sg = SubGrassmannian::new(space, t, k)?;
    let carrier = sg.carrier(space);
    if !i.is_subset(&carrier) {
        return Err(Error::Precondition("set is not inside G_k(t)".into()));
    }
    if restricted_grassmannian_status(space, i, t)? != SubStatus::MaximalIrregular {
        return Err(Error::NotIrregular);
    }
    let j = if m > k {
        let s = first_where(space, n - m, |x| meet(x, t).map(|z| z.dim() == 0).unwrap_or(false))?;
        complete_to_maximal_irregular(space, &x_set(space, &s, k)?.union(i))?
    } else {
        let dot = BilinearForm::dot(space.field(), n);
        let f = form_map(space, &dot, k)?;
        let fi = f.apply_set(space, i)?;
        let fj = lift_maximal_irregular(space, &fi, &dot.right_perp(t)?)?;
        f.inverse().apply_set(space, &fj)?
    };
    if j.intersection(&carrier) != *i {
        return Err(Error::VerificationFailed("lift changed the trace on G_k(t)".into()));
    }
    Ok(j)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimilarityWitness {
    pub map: GrassmannMap,
    /// `map = L_k(h)`, or `L_k(h) ∘ F` with F the dot-form map when `form_composed`.
    pub semilinear: Option<SemilinearMap>,
    pub form_composed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Similarity {
    Similar(SimilarityWitness),
    NotSimilar(String),
    /// The invariant filters pass but the group is too large to search.
    Inconclusive,
}

fn distance_fingerprint(lat: &Lattice, i: &PlaneSet) -> Vec<usize> {
    let k = i.k();
    let m = i.members();
    let mut counts = vec![0usize; k + 1];
    for a in 0..m.len() {
        for b in a + 1..m.len() {
            counts[lat.distance(k, m[a], m[b])] += 1;
        }
    }
    counts
}

/// Search nodes allowed per orientation before giving up.
pub const SIMILARITY_NODE_BUDGET: u64 = 50_000_000;

enum Search {
    Found(SemilinearMap),
    Exhausted,
    OverBudget,
}

/// Backtracking over the images `c_0, c_1, ...` of the standard basis.
///
/// Once `c_0..c_{j-1}` are fixed, every k-plane inside `<e_0..e_{j-1}>` has a
/// determined image, and membership in `i` must match membership in `j`.
struct BasisSearch<'a> {
    space: &'a Space,
    sigma: usize,
    i: &'a PlaneSet,
    j: &'a PlaneSet,
    /// `by_level[d]`: planes whose basis support ends at column d - 1, with their basis.
    by_level: Vec<Vec<(u32, Matrix)>>,
    vectors: Vec<Vec<u8>>,
    nodes: u64,
    budget: u64,
}

impl BasisSearch<'_> {
    fn run(&mut self, rows: &mut Vec<Vec<u8>>) -> Result<Search> {
        let n = self.space.n();
        let field = self.space.field().clone();
        let d = rows.len();
        if d == n {
            let c = Matrix::from_rows(&field, n, rows)?;
            return Ok(Search::Found(SemilinearMap::new(c.transpose(), self.sigma)?));
        }
        for vi in 0..self.vectors.len() {
            // Overall scale is projectively irrelevant: c_0 is a normalized representative.
            let v = &self.vectors[vi];
            if d == 0 && v.iter().find(|&&x| x != 0) != Some(&1) {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return Ok(Search::OverBudget);
            }
            rows.push(v.clone());
            let independent = Matrix::from_rows(&field, n, rows)?.rank() == d + 1;
            if independent && self.level_consistent(rows)? {
                match self.run(rows)? {
                    Search::Exhausted => {}
                    other => return Ok(other),
                }
            }
            rows.pop();
        }
        Ok(Search::Exhausted)
    }

    fn level_consistent(&self, rows: &[Vec<u8>]) -> Result<bool> {
        let n = self.space.n();
        let field = self.space.field();
        let mut c = rows.to_vec();
        c.resize(n, vec![0; n]);
        let c = Matrix::from_rows(field, n, &c)?;
        for (p, b) in &self.by_level[rows.len()] {
            let img = Subspace::span_of(&b.frobenius(self.sigma).mul(&c)?);
            let q = self.space.index_of(&img)?;
            if self.i.contains(*p) != self.j.contains(q) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// A semilinear h with `L_k(h)(i) = j`, searched exactly within `budget` nodes.
fn find_semilinear(space: &Space, i: &PlaneSet, j: &PlaneSet, budget: u64) -> Result<Search> {
    let n = space.n();
    let k = i.k();
    let q = space.q();
    let g = space.grassmannian(k)?;
    let mut by_level: Vec<Vec<(u32, Matrix)>> = vec![Vec::new(); n + 1];
    for (p, s) in g.planes().iter().enumerate() {
        let b = s.basis();
        let last = (0..n).rev().find(|&c| (0..k).any(|r| b.get(r, c) != 0)).expect("nonzero basis");
        by_level[last + 1].push((p as u32, b.clone()));
    }
    let vectors: Vec<Vec<u8>> = (1..q.pow(n as u32)).map(|c| crate::linalg::vector_from_code(q, n, c)).collect();
    let mut total = 0;
    for sigma in 0..space.field().m() {
        let mut search = BasisSearch {
            space,
            sigma,
            i,
            j,
            by_level: by_level.clone(),
            vectors: vectors.clone(),
            nodes: 0,
            budget: budget.saturating_sub(total),
        };
        let out = search.run(&mut Vec::with_capacity(n))?;
        total += search.nodes;
        match out {
            Search::Exhausted => {}
            other => return Ok(other),
        }
    }
    Ok(Search::Exhausted)
}

/// Whether a regular transformation carries `i` onto `j`.
///
/// Filters first by size, the number characteristics (as the unordered pair
/// `{n_1, n - n_(n-1)}` when n = 2k, since the form map swaps them) and the
/// multiset of pairwise distances. Survivors go to an exact backtracking
/// search over semilinear maps, also composed with the form map when n = 2k;
/// past `SIMILARITY_NODE_BUDGET` nodes the answer is `Inconclusive`.
pub fn are_similar(space: &Space, i: &PlaneSet, j: &PlaneSet) -> Result<Similarity> {
    i.check_space(space)?;
    j.check_space(space)?;
    if i.k() != j.k() {
        return Err(Error::ShapeMismatch(format!("G_{} against G_{}", i.k(), j.k())));
    }
    let n = space.n();
    let k = i.k();
    if i == j {
        return Ok(Similarity::Similar(SimilarityWitness {
            map: GrassmannMap::identity(space, k),
            semilinear: Some(SemilinearMap::identity(space.field(), n)),
            form_composed: false,
        }));
    }
    if i.len() != j.len() {
        return Ok(Similarity::NotSimilar(format!("sizes {} and {}", i.len(), j.len())));
    }
    if n == 2 {
        // Every transformation of G_1^2 is regular, so any bijection will do.
        let mut table: Vec<u32> = vec![u32::MAX; space.size(1)];
        let rest_i: Vec<u32> = (0..space.size(1) as u32).filter(|&p| !i.contains(p)).collect();
        let rest_j: Vec<u32> = (0..space.size(1) as u32).filter(|&p| !j.contains(p)).collect();
        for (a, b) in i.iter().zip(j.iter()).chain(rest_i.into_iter().zip(rest_j)) {
            table[a as usize] = b;
        }
        return Ok(Similarity::Similar(SimilarityWitness {
            map: GrassmannMap::new(space, 1, 1, table)?,
            semilinear: None,
            form_composed: false,
        }));
    }
    let ci = characteristics(space, i)?;
    let cj = characteristics(space, j)?;
    if 2 * k == n {
        let mut a = [ci.n1, n - ci.n_hyper];
        let mut b = [cj.n1, n - cj.n_hyper];
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Ok(Similarity::NotSimilar(format!(
                "{{n_1, n - n_(n-1)}} = {a:?} against {b:?}"
            )));
        }
    } else if (ci.n1, ci.n_hyper) != (cj.n1, cj.n_hyper) {
        return Ok(Similarity::NotSimilar(format!(
            "(n_1, n_(n-1)) = ({}, {}) against ({}, {})",
            ci.n1, ci.n_hyper, cj.n1, cj.n_hyper
        )));
    }
    let lat = space.lattice()?;
    if distance_fingerprint(&lat, i) != distance_fingerprint(&lat, j) {
        return Ok(Similarity::NotSimilar("pairwise distance multisets differ".into()));
    }
    let pre = if 2 * k == n {
        let f = form_map(space, &BilinearForm::dot(space.field(), n), k)?;
        let fi = f.apply_set(space, i)?;
        vec![(None, i.clone()), (Some(f), fi)]
    } else {
        vec![(None, i.clone())]
    };
    let mut over_budget = false;
    for (form, src) in &pre {
        match find_semilinear(space, src, j, SIMILARITY_NODE_BUDGET)? {
            Search::Found(h) => {
                let lin = h.induced_map(space, k)?;
                let map = match form {
                    Some(f) => lin.compose(f)?,
                    None => lin,
                };
                if map.apply_set(space, i)? != *j {
                    return Err(Error::VerificationFailed("similarity witness does not map I onto J".into()));
                }
                return Ok(Similarity::Similar(SimilarityWitness {
                    map,
                    semilinear: Some(h),
                    form_composed: form.is_some(),
                }));
            }
            Search::OverBudget => over_budget = true,
            Search::Exhausted => {}
        }
    }
    if over_budget {
        return Ok(Similarity::Inconclusive);
    }
    Ok(Similarity::NotSimilar("exhaustive search over the regular transformations".into()))
}
