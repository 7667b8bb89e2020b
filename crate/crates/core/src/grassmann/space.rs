use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{enumerate, gaussian_binomial, GrassmannianIndex, Subspace, MAX_N};
use crate::error::{Error, Result};
use crate::gf::Field;

/// Cap on the size of a single Grassmannian.
pub const MAX_PLANES: usize = 2_000_000;
const MAX_TABLE: usize = 40_000_000;
const MAX_SYSTEMS: u128 = 2_000_000;
const NONE: u32 = u32::MAX;

/// F_q^n with lazily built Grassmannians and incidence tables.
///
/// Everything downstream refers to planes by their index in the canonical
/// order of `G_k`, so a `Space` is the shared context for those indices.
#[derive(Clone)]
pub struct Space {
    inner: Arc<Inner>,
}

#[allow(clippy::type_complexity)]
struct Inner {
    field: Field,
    n: usize,
    grass: Vec<OnceLock<Arc<GrassmannianIndex>>>,
    // ext[d][i * L + line] = index in G_{d+1} of (plane i) + line, or NONE.
    ext: Vec<OnceLock<Arc<Vec<u32>>>>,
    lines_of: Vec<OnceLock<Arc<Vec<Vec<u32>>>>>,
    incidence: Mutex<HashMap<(usize, usize), Arc<Vec<Vec<u32>>>>>,
    systems: OnceLock<Arc<Vec<Vec<u32>>>>,
    coordinate_sets: Mutex<HashMap<usize, Arc<Vec<Vec<u32>>>>>,
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}^{}", self.q(), self.n())
    }
}

impl PartialEq for Space {
    fn eq(&self, other: &Self) -> bool {
        self.inner.field == other.inner.field && self.inner.n == other.inner.n
    }
}

impl Space {
    pub fn new(field: &Field, n: usize) -> Result<Space> {
        if n == 0 || n > MAX_N {
            return Err(Error::TooLarge(format!("ambient dimension {n} outside 1..={MAX_N}")));
        }
        Ok(Space {
            inner: Arc::new(Inner {
                field: field.clone(),
                n,
                grass: (0..=n).map(|_| OnceLock::new()).collect(),
                ext: (0..n).map(|_| OnceLock::new()).collect(),
                lines_of: (0..=n).map(|_| OnceLock::new()).collect(),
                incidence: Mutex::new(HashMap::new()),
                systems: OnceLock::new(),
                coordinate_sets: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn with_order(q: usize, n: usize) -> Result<Space> {
        Space::new(&Field::new(q)?, n)
    }

    pub fn field(&self) -> &Field {
        &self.inner.field
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn q(&self) -> usize {
        self.inner.field.q()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.n() {
            Err(Error::OutOfRange(format!("k = {k} > n = {}", self.n())))
        } else {
            Ok(())
        }
    }

    /// |G_k^n|, without enumerating.
    pub fn count(&self, k: usize) -> u128 {
        gaussian_binomial(self.n(), k, self.q())
    }

    pub fn grassmannian(&self, k: usize) -> Result<Arc<GrassmannianIndex>> {
        self.check_k(k)?;
        if let Some(g) = self.inner.grass[k].get() {
            return Ok(g.clone());
        }
        let g = Arc::new(enumerate(self.n(), k, self.field())?);
        Ok(self.inner.grass[k].get_or_init(|| g).clone())
    }

    /// Number of planes in G_k; panics if G_k cannot be enumerated.
    pub fn size(&self, k: usize) -> usize {
        self.grassmannian(k).expect("grassmannian within limits").len()
    }

    pub fn subspace(&self, k: usize, idx: u32) -> Result<Subspace> {
        let g = self.grassmannian(k)?;
        g.planes()
            .get(idx as usize)
            .cloned()
            .ok_or_else(|| Error::OutOfRange(format!("plane index {idx} in G_{k}")))
    }

    pub fn index_of(&self, s: &Subspace) -> Result<u32> {
        if s.ambient() != self.n() {
            return Err(Error::AmbientMismatch);
        }
        if s.field() != self.field() {
            return Err(Error::SpecMismatch);
        }
        let g = self.grassmannian(s.dim())?;
        Ok(g.index_of(s).expect("every RREF subspace is enumerated"))
    }

    /// Index of the line spanned by a nonzero vector.
    pub fn line_of(&self, v: &[u8]) -> Result<u32> {
        let s = Subspace::new(self.field(), self.n(), &[v.to_vec()])?;
        if s.dim() != 1 {
            return Err(Error::Precondition("zero vector spans no line".into()));
        }
        self.index_of(&s)
    }

    /// Line indices of the RREF basis rows of each plane in G_k.
    pub fn basis_lines(&self, k: usize) -> Result<Arc<Vec<Vec<u32>>>> {
        self.check_k(k)?;
        if let Some(t) = self.inner.lines_of[k].get() {
            return Ok(t.clone());
        }
        let g = self.grassmannian(k)?;
        let lines = self.grassmannian(1)?;
        let table: Vec<Vec<u32>> = g
            .planes()
            .iter()
            .map(|p| {
                (0..k)
                    .map(|r| {
                        let row = Subspace::from_rref_unchecked(p.basis().submatrix_rows(r..r + 1));
                        lines.index_of(&row).expect("RREF row is a canonical line")
                    })
                    .collect()
            })
            .collect();
        Ok(self.inner.lines_of[k].get_or_init(|| Arc::new(table)).clone())
    }

    fn ext(&self, d: usize) -> Result<Arc<Vec<u32>>> {
        if d >= self.n() {
            return Err(Error::OutOfRange(format!("join table for dimension {d}")));
        }
        if let Some(t) = self.inner.ext[d].get() {
            return Ok(t.clone());
        }
        let g = self.grassmannian(d)?;
        let up = self.grassmannian(d + 1)?;
        let lines = self.grassmannian(1)?;
        let nl = lines.len();
        if g.len().saturating_mul(nl) > MAX_TABLE {
            return Err(Error::TooLarge(format!(
                "join table {} x {nl} for G_{d}",
                g.len()
            )));
        }
        let table: Vec<u32> = g
            .planes()
            .par_iter()
            .flat_map_iter(|p| {
                let up = up.clone();
                lines.planes().iter().map(move |l| {
                    let j = super::join(p, l).expect("same ambient");
                    if j.dim() == d {
                        NONE
                    } else {
                        up.index_of(&j).expect("enumerated")
                    }
                })
            })
            .collect();
        Ok(self.inner.ext[d].get_or_init(|| Arc::new(table)).clone())
    }

    /// Index of `plane + line` in G_{d+1}, or None if the line lies in the plane.
    pub fn join_line(&self, d: usize, plane: u32, line: u32) -> Result<Option<u32>> {
        if d == self.n() {
            return Ok(None);
        }
        let nl = self.size(1);
        let t = self.ext(d)?;
        let v = t[plane as usize * nl + line as usize];
        Ok((v != NONE).then_some(v))
    }

    /// Folds the lines into `(d, plane)`; returns the span's dimension and index.
    pub fn join_lines(&self, d: usize, plane: u32, lines: &[u32]) -> Result<(usize, u32)> {
        let mut cur = (d, plane);
        for &l in lines {
            if let Some(nx) = self.join_line(cur.0, cur.1, l)? {
                cur = (cur.0 + 1, nx);
            }
        }
        Ok(cur)
    }

    pub fn span_lines(&self, lines: &[u32]) -> Result<(usize, u32)> {
        self.join_lines(0, 0, lines)
    }

    /// Join of two indexed subspaces.
    pub fn join_idx(&self, da: usize, a: u32, db: usize, b: u32) -> Result<(usize, u32)> {
        let bl = self.basis_lines(db)?;
        self.join_lines(da, a, &bl[b as usize])
    }

    pub fn meet_dim(&self, da: usize, a: u32, db: usize, b: u32) -> Result<usize> {
        let (dj, _) = self.join_idx(da, a, db, b)?;
        Ok(da + db - dj)
    }

    /// Whether subspace `(ds, s)` lies inside `(dt, t)`.
    pub fn is_inside(&self, ds: usize, s: u32, dt: usize, t: u32) -> Result<bool> {
        if ds > dt {
            return Ok(false);
        }
        if dt == self.n() {
            return Ok(true);
        }
        let bl = self.basis_lines(ds)?;
        let nl = self.size(1);
        let tab = self.ext(dt)?;
        Ok(bl[s as usize]
            .iter()
            .all(|&l| tab[t as usize * nl + l as usize] == NONE))
    }

    /// Distance between two planes of G_k.
    pub fn distance_idx(&self, k: usize, a: u32, b: u32) -> Result<usize> {
        let (dj, _) = self.join_idx(k, a, k, b)?;
        Ok(dj - k)
    }

    /// For each s in G_m, the sorted k-planes incident with s: inside it when
    /// m > k, containing it when m < k, and `{s}` when m = k.
    pub fn incidence(&self, m: usize, k: usize) -> Result<Arc<Vec<Vec<u32>>>> {
        self.check_k(m)?;
        self.check_k(k)?;
        if let Some(t) = self.inner.incidence.lock().unwrap().get(&(m, k)) {
            return Ok(t.clone());
        }
        let gm = self.size_checked(m)?;
        let gk = self.size_checked(k)?;
        let table: Vec<Vec<u32>> = if m == k {
            (0..gm as u32).map(|s| vec![s]).collect()
        } else {
            // Warm the caches outside the parallel section.
            self.basis_lines(m.min(k))?;
            if m.max(k) < self.n() {
                self.ext(m.max(k))?;
            }
            (0..gm as u32)
                .into_par_iter()
                .map(|s| {
                    (0..gk as u32)
                        .filter(|&l| {
                            if m > k {
                                self.is_inside(k, l, m, s).unwrap()
                            } else {
                                self.is_inside(m, s, k, l).unwrap()
                            }
                        })
                        .collect()
                })
                .collect()
        };
        let table = Arc::new(table);
        self.inner
            .incidence
            .lock()
            .unwrap()
            .insert((m, k), table.clone());
        Ok(table)
    }

    fn size_checked(&self, k: usize) -> Result<usize> {
        Ok(self.grassmannian(k)?.len())
    }

    /// Incident k-planes of a single subspace as a plane set.
    pub fn incident(&self, m: usize, s: u32, k: usize) -> Result<PlaneSet> {
        let t = self.incidence(m, k)?;
        let members = t
            .get(s as usize)
            .ok_or_else(|| Error::OutOfRange(format!("index {s} in G_{m}")))?
            .clone();
        Ok(PlaneSet::from_sorted(self, k, members))
    }

    /// Snapshot of every join table, for tight loops.
    pub fn lattice(&self) -> Result<Lattice> {
        let ext = (0..self.n()).map(|d| self.ext(d)).collect::<Result<Vec<_>>>()?;
        let basis = (0..=self.n())
            .map(|d| self.basis_lines(d))
            .collect::<Result<Vec<_>>>()?;
        Ok(Lattice {
            n: self.n(),
            nl: self.size(1),
            ext,
            basis,
        })
    }

    /// Every unordered n-set of independent lines, each sorted, in lexicographic order.
    pub fn coordinate_systems(&self) -> Result<Arc<Vec<Vec<u32>>>> {
        if let Some(s) = self.inner.systems.get() {
            return Ok(s.clone());
        }
        let n = self.n();
        let q = self.q() as u128;
        let mut gl = 1u128;
        for i in 0..n {
            gl *= q.pow(n as u32) - q.pow(i as u32);
        }
        let count = gl / ((q - 1).pow(n as u32) * (1..=n as u128).product::<u128>());
        if count > MAX_SYSTEMS {
            return Err(Error::TooLarge(format!("{count} coordinate systems")));
        }
        let nl = self.size_checked(1)? as u32;
        let mut out = Vec::with_capacity(count as usize);
        let mut stack = Vec::with_capacity(n);
        self.systems_rec(0, 0, 0, nl, &mut stack, &mut out)?;
        debug_assert_eq!(out.len() as u128, count);
        Ok(self.inner.systems.get_or_init(|| Arc::new(out)).clone())
    }

    /// For each coordinate system, in the order of `coordinate_systems`, the
    /// sorted indices of its C(n, k) coordinate k-planes.
    pub fn coordinate_sets(&self, k: usize) -> Result<Arc<Vec<Vec<u32>>>> {
        if k == 0 || k >= self.n() {
            return Err(Error::OutOfRange(format!("k = {k} outside 1..n")));
        }
        if let Some(s) = self.inner.coordinate_sets.lock().expect("cache lock").get(&k) {
            return Ok(s.clone());
        }
        let systems = self.coordinate_systems()?;
        let lat = self.lattice()?;
        let sets: Vec<Vec<u32>> = systems
            .par_iter()
            .map(|c| {
                let mut m: Vec<u32> = c.iter().copied().combinations(k).map(|ls| lat.span_lines(&ls).1).collect();
                m.sort_unstable();
                m
            })
            .collect();
        let sets = Arc::new(sets);
        self.inner.coordinate_sets.lock().expect("cache lock").insert(k, sets.clone());
        Ok(sets)
    }

    fn systems_rec(
        &self,
        d: usize,
        span: u32,
        from: u32,
        nl: u32,
        stack: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) -> Result<()> {
        if d == self.n() {
            out.push(stack.clone());
            return Ok(());
        }
        for l in from..nl {
            if let Some(nx) = self.join_line(d, span, l)? {
                stack.push(l);
                self.systems_rec(d + 1, nx, l + 1, nl, stack, out)?;
                stack.pop();
            }
        }
        Ok(())
    }
}

/// Borrow-free view of the join tables of a [`Space`].
#[derive(Clone)]
pub struct Lattice {
    n: usize,
    nl: usize,
    ext: Vec<Arc<Vec<u32>>>,
    basis: Vec<Arc<Vec<Vec<u32>>>>,
}

impl Lattice {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_lines(&self) -> usize {
        self.nl
    }

    #[inline]
    pub fn join_line(&self, d: usize, plane: u32, line: u32) -> Option<u32> {
        if d == self.n {
            return None;
        }
        let v = self.ext[d][plane as usize * self.nl + line as usize];
        (v != NONE).then_some(v)
    }

    #[inline]
    pub fn line_inside(&self, d: usize, plane: u32, line: u32) -> bool {
        d == self.n || self.ext[d][plane as usize * self.nl + line as usize] == NONE
    }

    pub fn basis_lines(&self, d: usize, plane: u32) -> &[u32] {
        &self.basis[d][plane as usize]
    }

    pub fn join_lines(&self, d: usize, plane: u32, lines: &[u32]) -> (usize, u32) {
        let mut cur = (d, plane);
        for &l in lines {
            if let Some(nx) = self.join_line(cur.0, cur.1, l) {
                cur = (cur.0 + 1, nx);
            }
        }
        cur
    }

    pub fn span_lines(&self, lines: &[u32]) -> (usize, u32) {
        self.join_lines(0, 0, lines)
    }

    pub fn join(&self, da: usize, a: u32, db: usize, b: u32) -> (usize, u32) {
        let bl = &self.basis[db][b as usize];
        self.join_lines(da, a, bl)
    }

    pub fn is_inside(&self, ds: usize, s: u32, dt: usize, t: u32) -> bool {
        ds <= dt
            && self.basis[ds][s as usize]
                .iter()
                .all(|&l| self.line_inside(dt, t, l))
    }

    pub fn distance(&self, k: usize, a: u32, b: u32) -> usize {
        self.join(k, a, k, b).0 - k
    }
}

/// A sorted, duplicate-free set of plane indices in one G_k of one space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlaneSet {
    q: usize,
    n: usize,
    k: usize,
    members: Vec<u32>,
}

impl PlaneSet {
    pub fn new(space: &Space, k: usize, mut members: Vec<u32>) -> Result<PlaneSet> {
        let size = space.grassmannian(k)?.len();
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&m| m as usize >= size) {
            return Err(Error::OutOfRange(format!("plane index {bad} in G_{k}")));
        }
        Ok(PlaneSet {
            q: space.q(),
            n: space.n(),
            k,
            members,
        })
    }

    /// `members` must already be sorted and deduplicated.
    pub fn from_sorted(space: &Space, k: usize, members: Vec<u32>) -> PlaneSet {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        PlaneSet {
            q: space.q(),
            n: space.n(),
            k,
            members,
        }
    }

    pub fn from_subspaces(space: &Space, k: usize, planes: &[Subspace]) -> Result<PlaneSet> {
        let mut idx = Vec::with_capacity(planes.len());
        for p in planes {
            if p.dim() != k {
                return Err(Error::DimMismatch(format!("plane of dimension {} in G_{k}", p.dim())));
            }
            idx.push(space.index_of(p)?);
        }
        PlaneSet::new(space, k, idx)
    }

    pub fn empty(space: &Space, k: usize) -> PlaneSet {
        PlaneSet::from_sorted(space, k, Vec::new())
    }

    pub fn full(space: &Space, k: usize) -> PlaneSet {
        PlaneSet::from_sorted(space, k, (0..space.size(k) as u32).collect())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.members.iter().copied()
    }

    pub fn contains(&self, p: u32) -> bool {
        self.members.binary_search(&p).is_ok()
    }

    /// Errors unless the set lives in `space` (any k).
    pub fn check_space(&self, space: &Space) -> Result<()> {
        if self.q != space.q() || self.n != space.n() {
            return Err(Error::AmbientMismatch);
        }
        Ok(())
    }

    fn same_shape(&self, other: &PlaneSet) -> bool {
        self.q == other.q && self.n == other.n && self.k == other.k
    }

    fn with_members(&self, members: Vec<u32>) -> PlaneSet {
        PlaneSet {
            q: self.q,
            n: self.n,
            k: self.k,
            members,
        }
    }

    pub fn union(&self, other: &PlaneSet) -> PlaneSet {
        assert!(self.same_shape(other), "plane sets from different Grassmannians");
        let mut m: Vec<u32> = self.members.iter().chain(&other.members).copied().collect();
        m.sort_unstable();
        m.dedup();
        self.with_members(m)
    }

    pub fn intersection(&self, other: &PlaneSet) -> PlaneSet {
        assert!(self.same_shape(other), "plane sets from different Grassmannians");
        self.with_members(self.iter().filter(|&p| other.contains(p)).collect())
    }

    pub fn difference(&self, other: &PlaneSet) -> PlaneSet {
        assert!(self.same_shape(other), "plane sets from different Grassmannians");
        self.with_members(self.iter().filter(|&p| !other.contains(p)).collect())
    }

    pub fn is_subset(&self, other: &PlaneSet) -> bool {
        self.same_shape(other) && self.iter().all(|p| other.contains(p))
    }

    pub fn inserted(&self, p: u32) -> PlaneSet {
        let mut m = self.members.clone();
        if let Err(pos) = m.binary_search(&p) {
            m.insert(pos, p);
        }
        self.with_members(m)
    }

    pub fn removed(&self, p: u32) -> PlaneSet {
        self.with_members(self.iter().filter(|&x| x != p).collect())
    }

    /// Membership mask over all of G_k.
    pub fn mask(&self, size: usize) -> Vec<bool> {
        let mut m = vec![false; size];
        for p in self.iter() {
            m[p as usize] = true;
        }
        m
    }

    pub fn subspaces(&self, space: &Space) -> Result<Vec<Subspace>> {
        self.iter().map(|p| space.subspace(self.k, p)).collect()
    }
}
