//! Regular plane sets: subsets of the coordinate k-planes of some coordinate
//! system, with exactness, degree, and the axis profile.

use std::collections::{HashMap, HashSet};
use std::ops::ControlFlow;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{binomial, meet, Lattice, PlaneSet, Space, Subspace};

/// n independent lines, stored as sorted line indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoordinateSystem {
    lines: Vec<u32>,
}

impl CoordinateSystem {
    pub fn new(space: &Space, mut lines: Vec<u32>) -> Result<CoordinateSystem> {
        lines.sort_unstable();
        lines.dedup();
        let nl = space.grassmannian(1)?.len();
        if lines.iter().any(|&l| l as usize >= nl) {
            return Err(Error::OutOfRange("line index".into()));
        }
        if lines.len() != space.n() || space.span_lines(&lines)?.0 != space.n() {
            return Err(Error::Precondition(format!(
                "coordinate system needs {} independent lines",
                space.n()
            )));
        }
        Ok(CoordinateSystem { lines })
    }

    pub fn from_vectors(space: &Space, vectors: &[Vec<u8>]) -> Result<CoordinateSystem> {
        let lines = vectors
            .iter()
            .map(|v| space.line_of(v))
            .collect::<Result<Vec<_>>>()?;
        CoordinateSystem::new(space, lines)
    }

    /// Lines through the standard basis vectors.
    pub fn standard(space: &Space) -> CoordinateSystem {
        let n = space.n();
        let vecs: Vec<Vec<u8>> = (0..n)
            .map(|i| (0..n).map(|j| u8::from(i == j)).collect())
            .collect();
        CoordinateSystem::from_vectors(space, &vecs).expect("standard basis is independent")
    }

    pub(crate) fn from_sorted_unchecked(lines: Vec<u32>) -> CoordinateSystem {
        CoordinateSystem { lines }
    }

    pub fn lines(&self) -> &[u32] {
        &self.lines
    }
}

/// The C(n, m) joins of m lines of the system.
pub fn coordinate_planes(space: &Space, c: &CoordinateSystem, m: usize) -> Result<PlaneSet> {
    let lat = space.lattice()?;
    if m > space.n() {
        return Err(Error::OutOfRange(format!("m = {m} > n")));
    }
    let members = c
        .lines
        .iter()
        .copied()
        .combinations(m)
        .map(|ls| lat.span_lines(&ls).1)
        .collect();
    PlaneSet::new(space, m, members)
}

struct AssocSearch<'a> {
    lat: &'a Lattice,
    n: usize,
    k: usize,
    planes: &'a [u32],
    plane_lines: &'a [Vec<u32>],
    nl: u32,
}

impl AssocSearch<'_> {
    fn consistent(&self, chosen: &[u32], span: (usize, u32), p: u32) -> bool {
        let inside = chosen
            .iter()
            .filter(|&&l| self.lat.line_inside(self.k, p, l))
            .count();
        let joined = self.lat.join(span.0, span.1, self.k, p).0;
        span.0 + self.k - joined == inside
    }

    fn plane_phase<F>(&self, idx: usize, chosen: &mut Vec<u32>, span: (usize, u32), visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        if idx == self.planes.len() {
            return self.complete(chosen, span, 0, visit);
        }
        // Every later plane must meet the current span in the chosen lines it contains.
        for &p in &self.planes[idx..] {
            if !self.consistent(chosen, span, p) {
                return ControlFlow::Continue(());
            }
        }
        let p = self.planes[idx];
        let inside = chosen
            .iter()
            .filter(|&&l| self.lat.line_inside(self.k, p, l))
            .count();
        let cands: Vec<u32> = self.plane_lines[p as usize]
            .iter()
            .copied()
            .filter(|&l| self.lat.join_line(span.0, span.1, l).is_some())
            .collect();
        self.choose(idx, &cands, 0, self.k - inside, chosen, span, visit)
    }

    #[allow(clippy::too_many_arguments)]
    fn choose<F>(
        &self,
        idx: usize,
        cands: &[u32],
        start: usize,
        need: usize,
        chosen: &mut Vec<u32>,
        span: (usize, u32),
        visit: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        if need == 0 {
            return self.plane_phase(idx + 1, chosen, span, visit);
        }
        for i in start..cands.len() {
            if cands.len() - i < need {
                break;
            }
            let l = cands[i];
            if let Some(nx) = self.lat.join_line(span.0, span.1, l) {
                chosen.push(l);
                let r = self.choose(idx, cands, i + 1, need - 1, chosen, (span.0 + 1, nx), visit);
                chosen.pop();
                r?;
            }
        }
        ControlFlow::Continue(())
    }

    fn complete<F>(&self, chosen: &mut Vec<u32>, span: (usize, u32), from: u32, visit: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[u32]) -> ControlFlow<()>,
    {
        if span.0 == self.n {
            let mut c = chosen.clone();
            c.sort_unstable();
            return visit(&c);
        }
        for l in from..self.nl {
            if let Some(nx) = self.lat.join_line(span.0, span.1, l) {
                chosen.push(l);
                let r = self.complete(chosen, (span.0 + 1, nx), l + 1, visit);
                chosen.pop();
                r?;
            }
        }
        ControlFlow::Continue(())
    }
}

/// Calls `visit` once per coordinate system associated with `r`; stops on `Break`.
pub fn for_each_associated_system<F>(space: &Space, r: &PlaneSet, mut visit: F) -> Result<()>
where
    F: FnMut(&[u32]) -> ControlFlow<()>,
{
    r.check_space(space)?;
    let k = r.k();
    let lat = space.lattice()?;
    let plane_lines = space.incidence(k, 1)?;
    let nl = space.size(1) as u32;
    let search = AssocSearch {
        lat: &lat,
        n: space.n(),
        k,
        planes: r.members(),
        plane_lines: &plane_lines,
        nl,
    };
    let _ = search.plane_phase(0, &mut Vec::with_capacity(space.n()), (0, 0), &mut visit);
    Ok(())
}

/// Every associated coordinate system, in lexicographic order of line indices.
pub fn associated_systems(space: &Space, r: &PlaneSet) -> Result<Vec<CoordinateSystem>> {
    let mut out = Vec::new();
    for_each_associated_system(space, r, |c| {
        out.push(CoordinateSystem::from_sorted_unchecked(c.to_vec()));
        ControlFlow::Continue(())
    })?;
    out.sort();
    Ok(out)
}

fn count_systems(space: &Space, r: &PlaneSet, limit: usize) -> Result<usize> {
    let mut count = 0;
    for_each_associated_system(space, r, |_| {
        count += 1;
        if count >= limit {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(count)
}

/// Some associated system, or `None` if `r` is not regular.
pub fn is_regular(space: &Space, r: &PlaneSet) -> Result<Option<CoordinateSystem>> {
    r.check_space(space)?;
    if r.len() as u64 > binomial(space.n(), r.k()) {
        return Ok(None);
    }
    let mut found = None;
    for_each_associated_system(space, r, |c| {
        found = Some(CoordinateSystem::from_sorted_unchecked(c.to_vec()));
        ControlFlow::Break(())
    })?;
    Ok(found)
}

pub fn is_maximal_regular(space: &Space, r: &PlaneSet) -> Result<bool> {
    Ok(r.len() as u64 == binomial(space.n(), r.k()) && is_regular(space, r)?.is_some())
}

/// Exactly one associated coordinate system.
pub fn is_exact(space: &Space, r: &PlaneSet) -> Result<bool> {
    r.check_space(space)?;
    if r.len() as u64 > binomial(space.n(), r.k()) {
        return Err(Error::NotRegular);
    }
    match count_systems(space, r, 2)? {
        0 => Err(Error::NotRegular),
        c => Ok(c == 1),
    }
}

/// Least d such that adding d coordinate planes of some associated system
/// makes `r` exact, with the lexicographically least such superset.
pub fn degree(space: &Space, r: &PlaneSet) -> Result<(usize, PlaneSet)> {
    let systems = associated_systems(space, r)?;
    if systems.is_empty() {
        return Err(Error::NotRegular);
    }
    let k = r.k();
    let cands: Vec<Vec<u32>> = systems
        .iter()
        .map(|c| {
            Ok(coordinate_planes(space, c, k)?
                .iter()
                .filter(|&p| !r.contains(p))
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut cache: HashMap<Vec<u32>, bool> = HashMap::new();
    let max_d = binomial(space.n(), k) as usize - r.len();
    for d in 0..=max_d {
        let mut best: Option<Vec<u32>> = None;
        for cand in &cands {
            for extra in cand.iter().copied().combinations(d) {
                let mut u: Vec<u32> = r.iter().chain(extra).collect();
                u.sort_unstable();
                if best.as_ref().is_some_and(|b| *b <= u) {
                    continue;
                }
                let exact = match cache.get(&u) {
                    Some(&e) => e,
                    None => {
                        let set = PlaneSet::from_sorted(space, k, u.clone());
                        let e = count_systems(space, &set, 2)? == 1;
                        cache.insert(u.clone(), e);
                        e
                    }
                };
                if exact {
                    best = Some(u);
                }
            }
        }
        if let Some(b) = best {
            return Ok((d, PlaneSet::from_sorted(space, k, b)));
        }
    }
    Err(Error::VerificationFailed("maximal superset was not exact".into()))
}

/// `R(s)`: the planes of `r` incident with `s`.
pub fn restrict(space: &Space, r: &PlaneSet, s: &Subspace) -> Result<PlaneSet> {
    r.check_space(space)?;
    let idx = space.index_of(s)?;
    Ok(space.incident(s.dim(), idx, r.k())?.intersection(r))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisProfile {
    pub line: u32,
    /// Planes of the subset containing this axis.
    pub planes: Vec<u32>,
    /// Dimension of their meet; 0 when there are none.
    pub meet_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularityProfile {
    pub system: CoordinateSystem,
    pub axes: Vec<AxisProfile>,
    /// Number of axes whose planes meet in exactly that axis.
    pub n_value: usize,
}

/// Axis profile of `sub` relative to the maximal regular set `maximal`.
pub fn profile(space: &Space, sub: &PlaneSet, maximal: &PlaneSet) -> Result<RegularityProfile> {
    if !sub.is_subset(maximal) {
        return Err(Error::NotASuperset);
    }
    if !is_maximal_regular(space, maximal)? {
        return Err(Error::NotRegular);
    }
    let systems = associated_systems(space, maximal)?;
    if systems.len() != 1 {
        return Err(Error::VerificationFailed(format!(
            "maximal regular set with {} coordinate systems",
            systems.len()
        )));
    }
    let system = systems.into_iter().next().unwrap();
    let k = sub.k();
    let lat = space.lattice()?;
    let mut axes = Vec::with_capacity(space.n());
    for &line in system.lines() {
        let planes: Vec<u32> = sub.iter().filter(|&p| lat.line_inside(k, p, line)).collect();
        let meet_dim = if planes.is_empty() {
            0
        } else {
            let mut acc = space.subspace(k, planes[0])?;
            for &p in &planes[1..] {
                acc = meet(&acc, &space.subspace(k, p)?)?;
            }
            acc.dim()
        };
        axes.push(AxisProfile {
            line,
            planes,
            meet_dim,
        });
    }
    let n_value = axes.iter().filter(|a| a.meet_dim == 1).count();
    Ok(RegularityProfile {
        system,
        axes,
        n_value,
    })
}

/// Each plane of `r` as the set of axis positions (into `c.lines()`) spanning it.
pub fn hypergraph_view(space: &Space, r: &PlaneSet, c: &CoordinateSystem) -> Result<Vec<Vec<usize>>> {
    let lat = space.lattice()?;
    let k = r.k();
    r.iter()
        .map(|p| {
            let axes: Vec<usize> = c
                .lines()
                .iter()
                .enumerate()
                .filter(|(_, &l)| lat.line_inside(k, p, l))
                .map(|(i, _)| i)
                .collect();
            if axes.len() == k {
                Ok(axes)
            } else {
                Err(Error::NotAssociated)
            }
        })
        .collect()
}

/// The regular set of `c` given by a hypergraph of k-subsets of axis positions.
pub fn from_hypergraph(space: &Space, c: &CoordinateSystem, k: usize, edges: &[Vec<usize>]) -> Result<PlaneSet> {
    let lat = space.lattice()?;
    let members = edges
        .iter()
        .map(|e| {
            if e.len() != k || e.iter().any(|&i| i >= c.lines().len()) {
                return Err(Error::Precondition("edge must name k axes".into()));
            }
            let ls: Vec<u32> = e.iter().map(|&i| c.lines()[i]).collect();
            let (d, idx) = lat.span_lines(&ls);
            if d != k {
                return Err(Error::Precondition("repeated axis in edge".into()));
            }
            Ok(idx)
        })
        .collect::<Result<Vec<_>>>()?;
    PlaneSet::new(space, k, members)
}

/// `r = R(s)` for a coordinate subspace `s` of some associated system with `dim s` in `dims`.
pub fn matches_coordinate_restriction(space: &Space, r: &PlaneSet, dims: &[usize]) -> Result<bool> {
    let k = r.k();
    for c in associated_systems(space, r)? {
        let full = coordinate_planes(space, &c, k)?;
        for &m in dims {
            for s in coordinate_planes(space, &c, m)?.iter() {
                if space.incident(m, s, k)?.intersection(&full) == *r {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// `r = R(s) + R(s')` with `s` a coordinate hyperplane and `s'` a coordinate
/// 2-plane not inside `s`, for some associated system.
pub fn matches_hyperplane_plus_plane(space: &Space, r: &PlaneSet) -> Result<bool> {
    let k = r.k();
    let n = space.n();
    let lat = space.lattice()?;
    for c in associated_systems(space, r)? {
        let full = coordinate_planes(space, &c, k)?;
        let pairs = coordinate_planes(space, &c, 2)?;
        for h in coordinate_planes(space, &c, n - 1)?.iter() {
            let rh = space.incident(n - 1, h, k)?.intersection(&full);
            for s2 in pairs.iter() {
                if lat.is_inside(2, s2, n - 1, h) {
                    continue;
                }
                let rs = space.incident(2, s2, k)?.intersection(&full);
                if rh.union(&rs) == *r {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Every regular set of G_k with at least `min_size` planes.
pub fn enumerate_regular_sets(space: &Space, k: usize, min_size: usize) -> Result<Vec<PlaneSet>> {
    let systems = space.coordinate_systems()?;
    let mut seen: HashSet<Vec<u32>> = HashSet::new();
    for c in systems.iter() {
        let cs = CoordinateSystem::from_sorted_unchecked(c.clone());
        let full = coordinate_planes(space, &cs, k)?;
        let m = full.members();
        for size in min_size..=m.len() {
            for sub in m.iter().copied().combinations(size) {
                seen.insert(sub);
            }
        }
    }
    let mut out: Vec<PlaneSet> = seen
        .into_iter()
        .map(|m| PlaneSet::from_sorted(space, k, m))
        .collect();
    out.sort();
    Ok(out)
}

/// `s_k^n = C(n-1, k) + C(n-2, k-2)`.
pub fn s_threshold(n: usize, k: usize) -> u64 {
    binomial(n - 1, k) + if k >= 2 { binomial(n - 2, k - 2) } else { 0 }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(q: usize, n: usize) -> Space {
        Space::with_order(q, n).unwrap()
    }

    #[test]
    fn standard_system_planes_form_an_exact_maximal_set() {
        let s = space(2, 4);
        let c = CoordinateSystem::standard(&s);
        let r = coordinate_planes(&s, &c, 2).unwrap();
        assert_eq!(r.len(), 6);
        assert!(is_maximal_regular(&s, &r).unwrap());
        assert!(is_exact(&s, &r).unwrap());
        assert_eq!(associated_systems(&s, &r).unwrap(), vec![c.clone()]);
        assert_eq!(degree(&s, &r).unwrap().0, 0);
    }

    #[test]
    fn empty_set_is_associated_with_every_system() {
        let s = space(2, 4);
        let e = PlaneSet::empty(&s, 2);
        assert_eq!(associated_systems(&s, &e).unwrap().len(), 840);
        assert!(!is_exact(&s, &e).unwrap());
    }

    #[test]
    fn single_plane_system_count() {
        // 3 choices inside the plane times 48 completions.
        let s = space(2, 4);
        let p = PlaneSet::new(&s, 2, vec![0]).unwrap();
        assert_eq!(associated_systems(&s, &p).unwrap().len(), 144);
    }

    #[test]
    fn associated_systems_agree_with_brute_force() {
        let s = space(2, 4);
        let systems = s.coordinate_systems().unwrap();
        let sets = [vec![0u32, 5], vec![0, 1], vec![3, 17, 20], vec![2, 9, 30, 34]];
        for m in sets {
            let r = PlaneSet::new(&s, 2, m).unwrap();
            let brute: Vec<CoordinateSystem> = systems
                .iter()
                .map(|c| CoordinateSystem::from_sorted_unchecked(c.clone()))
                .filter(|c| r.is_subset(&coordinate_planes(&s, c, 2).unwrap()))
                .collect();
            assert_eq!(associated_systems(&s, &r).unwrap(), brute);
        }
    }

    #[test]
    fn three_planes_through_a_point_in_g13_are_not_regular() {
        let s = space(2, 3);
        let lines = s.incidence(2, 1).unwrap();
        let r = PlaneSet::new(&s, 1, lines[0].clone()).unwrap();
        assert!(is_regular(&s, &r).unwrap().is_none());
    }

    #[test]
    fn degree_in_g1_is_codimension() {
        let s = space(2, 4);
        let c = CoordinateSystem::standard(&s);
        for size in 0..=4 {
            let r = PlaneSet::new(&s, 1, c.lines()[..size].to_vec()).unwrap();
            assert_eq!(degree(&s, &r).unwrap().0, 4 - size);
        }
    }

    #[test]
    fn profile_of_maximal_set_counts_all_axes() {
        let s = space(2, 4);
        let c = CoordinateSystem::standard(&s);
        let r = coordinate_planes(&s, &c, 2).unwrap();
        let p = profile(&s, &r, &r).unwrap();
        assert_eq!(p.n_value, 4);
        let e = PlaneSet::empty(&s, 2);
        assert_eq!(profile(&s, &e, &r).unwrap().n_value, 0);
        let other = PlaneSet::new(&s, 2, vec![r.members()[0], 33]).unwrap();
        if !other.is_subset(&r) {
            assert_eq!(profile(&s, &other, &r).unwrap_err(), Error::NotASuperset);
        }
    }

    #[test]
    fn hypergraph_roundtrip() {
        let s = space(3, 4);
        let c = CoordinateSystem::standard(&s);
        let edges = vec![vec![0, 1], vec![1, 2], vec![2, 3]];
        let r = from_hypergraph(&s, &c, 2, &edges).unwrap();
        let mut view = hypergraph_view(&s, &r, &c).unwrap();
        view.sort();
        assert_eq!(view, edges);
    }

    #[test]
    fn thresholds() {
        assert_eq!(s_threshold(4, 2), 4);
        assert_eq!(s_threshold(5, 2), 7);
    }
}
