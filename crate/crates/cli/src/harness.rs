//! Instance-by-instance theorem checks behind `grass verify`.
//!
//! Every ID has a feasibility envelope. Outside it the report is INFEASIBLE
//! and names the envelope; inside it the scope line says exactly what was
//! examined. Orbit reductions are stated, never implied.

use std::collections::HashSet;

use grassmann_core::forms::{form_map, symplectic_basis, BilinearForm};
use grassmann_core::gf::Field;
use grassmann_core::grassmann::{binomial, gaussian_binomial, meet, star_top, FamilyKind, PlaneSet, Space, Subspace, MAX_N};
use grassmann_core::irregularity::{
    characteristics, complete_to_maximal_irregular, construct_x_anchored, construct_y_anchored,
    contains_maximal_regular, is_irregular, is_maximal_irregular, restricted_grassmannian_status, x_set, y_set,
    Characteristics, SubStatus,
};
use grassmann_core::linalg::Matrix;
use grassmann_core::maps::{induces, GrassmannMap, SemilinearMap};
use grassmann_core::reconstruction::{ftpg_reconstruct, is_independence_preserving};
use grassmann_core::regularity::{
    coordinate_planes, degree, enumerate_regular_sets, is_regular, matches_coordinate_restriction,
    matches_hyperplane_plus_plane, s_threshold, CoordinateSystem,
};
use grassmann_core::grassmann::maximal_adjacent_families;
use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::report::{lines_json, set_json, subspace_json, Report, Verdict};

pub const THEOREM_IDS: [&str; 14] = [
    "thm-2.2.1",
    "thm-2.2.2",
    "prop-1.4.2",
    "prop-3.1.3",
    "prop-3.2.1",
    "thm-3.2.1",
    "thm-3.2.2",
    "thm-3.2.3",
    "thm-3.2.4",
    "prop-1.1.2",
    "lemma-3.2.1",
    "cor-3.2.2",
    "thm-1.3.1",
    "remark-2.2.1",
];

/// Fixed seed for every randomized corpus, so reports are reproducible.
pub const SEED: u64 = 0x6772_6173_7321;

/// Largest |G_k| for the irregularity checks.
const IRREGULAR_PLANES: u128 = 400;

/// Largest |G_k| for the clique enumeration.
const CLIQUE_PLANES: u128 = 1500;

/// Transverse pairs are all examined up to this many, else one orbit representative.
const PAIR_LIMIT: usize = 200;

/// Alternating Gram matrices are enumerated up to this many.
const GRAM_LIMIT: u128 = 100_000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown theorem id {0:?}; known ids: {ids}", ids = THEOREM_IDS.join(", "))]
    UnknownId(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] grassmann_core::Error),
}

type Result<T> = std::result::Result<T, HarnessError>;

/// Envelope of each ID, as reported on INFEASIBLE.
pub fn envelope(id: &str) -> Option<&'static str> {
    Some(match id {
        "thm-2.2.1" => "1 < k < n-1, n <= 5, q <= 3",
        "thm-2.2.2" => "1 <= k <= n-1, n <= 5, q <= 3",
        "prop-1.4.2" => "1 < k < n-1, |G_k| <= 1500",
        "prop-3.1.3" | "prop-3.2.1" | "thm-3.2.1" | "thm-3.2.2" | "lemma-3.2.1" | "cor-3.2.2" => {
            "1 <= k <= n-1, n <= 5, q <= 3, |G_k| <= 400"
        }
        "thm-3.2.3" | "thm-3.2.4" => "1 < k < n-1, n <= 5, q <= 3, |G_k| <= 400",
        "prop-1.1.2" => "2 <= n <= 6, at most 100000 alternating Gram matrices (q^(n(n-1)/2))",
        "thm-1.3.1" => "q = 2, n = 3, k = 1 (all 7! line permutations)",
        "remark-2.2.1" => "1 < k < n-1, n <= 60",
        _ => return None,
    })
}

fn feasible(id: &str, q: usize, n: usize, k: usize) -> bool {
    let small = n <= 5 && q <= 3;
    let mid = 1 < k && k + 1 < n;
    let planes = gaussian_binomial(n, k, q);
    match id {
        "thm-2.2.1" => mid && small,
        "thm-2.2.2" => small,
        "prop-1.4.2" => mid && n <= MAX_N && planes <= CLIQUE_PLANES,
        "prop-3.1.3" | "prop-3.2.1" | "thm-3.2.1" | "thm-3.2.2" | "lemma-3.2.1" | "cor-3.2.2" => {
            small && planes <= IRREGULAR_PLANES
        }
        "thm-3.2.3" | "thm-3.2.4" => mid && small && planes <= IRREGULAR_PLANES,
        "prop-1.1.2" => (2..=MAX_N).contains(&n) && (q as u128).pow((n * (n - 1) / 2) as u32) <= GRAM_LIMIT,
        "thm-1.3.1" => (q, n, k) == (2, 3, 1),
        "remark-2.2.1" => mid && n <= 60,
        _ => false,
    }
}

/// Runs one theorem check. The verdict is PASS, FAIL or INFEASIBLE; usage
/// problems (unknown ID, bad q, k out of range) are errors.
pub fn verify(id: &str, q: usize, n: usize, k: usize) -> Result<Report> {
    let env = envelope(id).ok_or_else(|| HarnessError::UnknownId(id.to_string()))?;
    Field::new(q)?;
    if n < 2 || k == 0 || k >= n {
        return Err(HarnessError::Usage(format!("need n >= 2 and 1 <= k <= n-1, got n = {n}, k = {k}")));
    }
    let mut report = Report::new(
        vec![
            "verify".into(),
            format!("--theorem={id}"),
            format!("--q={q}"),
            format!("--n={n}"),
            format!("--k={k}"),
        ],
        json!({ "theorem": id, "q": q, "n": n, "k": k }),
    );
    if !feasible(id, q, n, k) {
        report.verdict = Verdict::Infeasible;
        report.scope = format!("outside the feasibility envelope: {env}");
        report.find("envelope", env);
        return Ok(report);
    }
    if id == "remark-2.2.1" {
        remark_2_2_1(&mut report, n, k);
    } else {
        let space = Space::with_order(q, n)?;
        let r = &mut report;
        match id {
            "thm-2.2.1" => thm_2_2_1(r, &space, k)?,
            "thm-2.2.2" => thm_2_2_2(r, &space, k)?,
            "prop-1.4.2" => prop_1_4_2(r, &space, k)?,
            "prop-3.1.3" => prop_3_1_3(r, &space, k)?,
            "prop-3.2.1" => prop_3_2_1(r, &space, k)?,
            "thm-3.2.1" => thm_3_2_1(r, &space, k)?,
            "thm-3.2.2" => thm_3_2_2(r, &space, k)?,
            "thm-3.2.3" => thm_3_2_3(r, &space, k)?,
            "thm-3.2.4" => thm_3_2_4(r, &space, k)?,
            "prop-1.1.2" => prop_1_1_2(r, &space)?,
            "lemma-3.2.1" => lemma_3_2_1(r, &space, k)?,
            "cor-3.2.2" => cor_3_2_2(r, &space, k)?,
            "thm-1.3.1" => thm_1_3_1(r, &space)?,
            _ => unreachable!("envelope covers every id"),
        }
    }
    report.verdict = if report.all_passed() { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}

/// Records a universally quantified check: passes when `bad` is empty,
/// otherwise certifies the first counterexample.
fn forall(report: &mut Report, name: &str, total: usize, bad: Vec<Value>) {
    let passed = bad.is_empty();
    let detail = if passed {
        format!("holds on all {total}")
    } else {
        format!("{} of {total} violate it", bad.len())
    };
    report.check(name, passed, detail);
    if let Some(first) = bad.into_iter().next() {
        report.certificates.push(json!({ "counterexample": name, "instance": first }));
    }
}

fn planes(space: &Space, m: usize) -> Result<Vec<Subspace>> {
    Ok(space.grassmannian(m)?.planes().to_vec())
}

fn transverse(a: &Subspace, b: &Subspace) -> bool {
    meet(a, b).map(|z| z.dim() == 0).unwrap_or(false)
}

/// Regular sets with at least `min` planes: every one at (2,4), otherwise the
/// subsets of the standard system's coordinate planes.
///
/// The reduction is exact for GL-invariant properties: every regular set lies
/// in some maximal regular set, GL_n is transitive on coordinate systems, and
/// degree and the R(s) shapes are preserved by linear maps.
fn regular_corpus(space: &Space, k: usize, min: usize) -> Result<(Vec<PlaneSet>, String)> {
    if (space.q(), space.n()) == (2, 4) {
        let sets = enumerate_regular_sets(space, k, min)?;
        let scope = format!("all {} regular sets with >= {min} planes, over every coordinate system", sets.len());
        return Ok((sets, scope));
    }
    let full = coordinate_planes(space, &CoordinateSystem::standard(space), k)?;
    let m = full.members();
    let mut sets = Vec::new();
    for size in min..=m.len() {
        for sub in m.iter().copied().combinations(size) {
            sets.push(PlaneSet::from_sorted(space, k, sub));
        }
    }
    let scope = format!(
        "orbit representatives: all {} subsets with >= {min} planes of the standard system's coordinate planes \
         (GL_n is transitive on coordinate systems and preserves degree and shape)",
        sets.len()
    );
    Ok((sets, scope))
}

fn thm_2_2_1(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let s = s_threshold(n, k) as usize;
    let (sets, scope) = regular_corpus(space, k, s)?;
    report.scope = scope;
    let rows: Vec<(usize, bool)> = sets
        .par_iter()
        .map(|r| Ok((degree(space, r)?.0, matches_hyperplane_plus_plane(space, r)?)))
        .collect::<std::result::Result<_, grassmann_core::Error>>()?;
    let mut bound = Vec::new();
    let mut shape = Vec::new();
    let mut exact = Vec::new();
    for (r, &(d, hp)) in sets.iter().zip(&rows) {
        let cert = || json!({ "set": set_json(space, r), "deg": d });
        if d > 1 {
            bound.push(cert());
        }
        if (d == 1) != hp {
            shape.push(cert());
        }
        if r.len() > s && d != 0 {
            exact.push(cert());
        }
    }
    report.find("threshold", s);
    report.find("deg_counts", json!({
        "deg0": rows.iter().filter(|r| r.0 == 0).count(),
        "deg1": rows.iter().filter(|r| r.0 == 1).count(),
    }));
    forall(report, "deg <= 1 at or above the threshold", sets.len(), bound);
    forall(report, "deg = 1 exactly for hyperplane-plus-2-plane sets", sets.len(), shape);
    forall(report, "above the threshold the set is exact", sets.len(), exact);
    if let Some((r, _)) = sets.iter().zip(&rows).find(|(_, row)| row.0 == 1) {
        let (_, w) = degree(space, r)?;
        report.certificates.push(json!({ "deg1_example": set_json(space, r), "exact_superset": set_json(space, &w) }));
    }
    Ok(())
}

fn thm_2_2_2(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    if k == 1 || k == n - 1 {
        // Independent lines (or hyperplanes): one more is forced each step.
        let (sets, scope) = regular_corpus(space, k, 0)?;
        report.scope = format!("{scope}; k = {k} so deg(R) = n - |R| is checked");
        let bad: Vec<Value> = sets
            .par_iter()
            .map(|r| Ok((r, degree(space, r)?.0)))
            .collect::<std::result::Result<Vec<_>, grassmann_core::Error>>()?
            .into_iter()
            .filter(|(r, d)| *d != n - r.len())
            .map(|(r, d)| json!({ "set": set_json(space, r), "deg": d }))
            .collect();
        forall(report, "deg(R) = n - |R|", sets.len(), bad);
        return Ok(());
    }
    let (t, dims, case) = if n - k < k {
        (binomial(n - 1, k - 1), vec![1], "k > n-k")
    } else if k < n - k {
        (binomial(n - 1, k), vec![n - 1], "k < n-k")
    } else {
        (binomial(n - 1, k), vec![1, n - 1], "n = 2k")
    };
    let t = t as usize;
    let (sets, scope) = regular_corpus(space, k, t)?;
    report.scope = format!("{scope}; case {case}");
    report.find("threshold", t);
    let rows: Vec<(usize, bool)> = sets
        .par_iter()
        .map(|r| Ok((degree(space, r)?.0, matches_coordinate_restriction(space, r, &dims)?)))
        .collect::<std::result::Result<_, grassmann_core::Error>>()?;
    let mut bound = Vec::new();
    let mut shape = Vec::new();
    let mut above = Vec::new();
    for (r, &(d, rs)) in sets.iter().zip(&rows) {
        let cert = || json!({ "set": set_json(space, r), "deg": d });
        if d > 2 {
            bound.push(cert());
        }
        if (d == 2) != rs {
            shape.push(cert());
        }
        if r.len() > t && d > 1 {
            above.push(cert());
        }
    }
    report.find("deg_counts", json!({
        "deg0": rows.iter().filter(|r| r.0 == 0).count(),
        "deg1": rows.iter().filter(|r| r.0 == 1).count(),
        "deg2": rows.iter().filter(|r| r.0 == 2).count(),
    }));
    forall(report, "deg <= 2 at or above the threshold", sets.len(), bound);
    forall(report, &format!("deg = 2 exactly for R(s) with dim s in {dims:?}"), sets.len(), shape);
    forall(report, "above the threshold deg <= 1", sets.len(), above);
    Ok(())
}

fn prop_1_4_2(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let fams = maximal_adjacent_families(space, k)?;
    let lat = space.lattice()?;
    let size = space.size(k);
    report.scope = format!("every maximal clique of the adjacency graph on all {size} planes");
    let stars = fams.iter().filter(|f| matches!(f.kind, FamilyKind::Star { .. })).count();
    let tops = fams.iter().filter(|f| matches!(f.kind, FamilyKind::Top { .. })).count();
    let other: Vec<Value> = fams
        .iter()
        .filter(|f| f.kind == FamilyKind::Other)
        .map(|f| set_json(space, &f.members))
        .collect();
    report.find("families", json!({ "total": fams.len(), "stars": stars, "tops": tops }));
    forall(report, "every maximal family is a star or a top", fams.len(), other);
    // Independent of the clique search: pairwise adjacency and no extension.
    let not_maximal: Vec<Value> = fams
        .iter()
        .filter(|f| {
            let m = f.members.members();
            let clique = m.iter().tuple_combinations().all(|(&a, &b)| lat.distance(k, a, b) == 1);
            let extendable = (0..size as u32)
                .filter(|p| !f.members.contains(*p))
                .any(|p| m.iter().all(|&a| lat.distance(k, a, p) == 1));
            !clique || extendable
        })
        .map(|f| set_json(space, &f.members))
        .collect();
    forall(report, "each family is a maximal adjacent set", fams.len(), not_maximal);
    let found: HashSet<&[u32]> = fams.iter().map(|f| f.members.members()).collect();
    let mut missing = Vec::new();
    for (m, count) in [(k - 1, space.size(k - 1)), (k + 1, space.size(k + 1))] {
        for s in planes(space, m)? {
            let st = star_top(space, &s, k)?;
            if !found.contains(st.members()) {
                missing.push(json!({ "subspace": subspace_json(&s) }));
            }
        }
        let _ = count;
    }
    let expected = space.size(k - 1) + space.size(k + 1);
    forall(report, "every star and top is found", expected, missing);
    report.check(
        "family count equals |G_(k-1)| + |G_(k+1)|",
        fams.len() == expected,
        format!("{} found, {expected} expected", fams.len()),
    );
    Ok(())
}

fn prop_3_1_3(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let full = PlaneSet::full(space, k);
    let mut scope = Vec::new();
    let mut subjects: Vec<(usize, Subspace)> = Vec::new();
    for m in 1..n {
        let all = planes(space, m)?;
        if all.len() <= PAIR_LIMIT {
            scope.push(format!("all {} of dim {m}", all.len()));
            subjects.extend(all.into_iter().map(|s| (m, s)));
        } else {
            scope.push(format!("one of dim {m} (GL-orbit)"));
            subjects.push((m, all[0].clone()));
        }
    }
    report.scope = format!("s ranges over {}", scope.join(", "));
    if k == 1 || k == n - 1 {
        report.scope.push_str("; (iii)-(v) skip the one-plane sets X(s) = {s} (k = dim s = 1) and Y(s) = {s} (k = dim s = n-1), which are regular");
    }
    struct Row {
        m: usize,
        s: Value,
        x_full: bool,
        y_full: bool,
        x_irr: Option<bool>,
        y_irr: Option<bool>,
        x_max: Option<bool>,
        x_eq_y: bool,
        x_len: usize,
    }
    let rows: Vec<Row> = subjects
        .par_iter()
        .map(|(m, s)| {
            let m = *m;
            let x = x_set(space, s, k)?;
            let y = y_set(space, s, k)?;
            let x_irr = (m <= n - k && !x_single(k, m)).then(|| is_irregular(space, &x)).transpose()?;
            let y_irr = (m >= n - k && !y_single(n, k, m)).then(|| is_irregular(space, &y)).transpose()?;
            let x_max = (m <= n - k && !x_single(k, m)).then(|| is_maximal_irregular(space, &x)).transpose()?;
            Ok(Row {
                m,
                s: subspace_json(s),
                x_full: x == full,
                y_full: y == full,
                x_irr,
                y_irr,
                x_max,
                x_eq_y: x == y,
                x_len: x.len(),
            })
        })
        .collect::<std::result::Result<_, grassmann_core::Error>>()?;
    let cert = |r: &Row| json!({ "dim": r.m, "s": r.s });
    let pick = |f: &dyn Fn(&Row) -> Option<bool>| -> (usize, Vec<Value>) {
        let applicable: Vec<&Row> = rows.iter().filter(|r| f(r).is_some()).collect();
        let bad = applicable.iter().filter(|r| f(r) == Some(false)).map(|r| cert(r)).collect();
        (applicable.len(), bad)
    };
    let (t, b) = pick(&|r| (r.m > n - k).then_some(r.x_full));
    forall(report, "(i) dim s > n-k: X(s) is all of G_k", t, b);
    let (t, b) = pick(&|r| (r.m < n - k).then_some(r.y_full));
    forall(report, "(ii) dim s < n-k: Y(s) is all of G_k", t, b);
    let (t, b) = pick(&|r| r.x_irr);
    forall(report, "(iii) dim s <= n-k: X(s) is irregular", t, b);
    let (t, b) = pick(&|r| r.y_irr);
    forall(report, "(iv) dim s >= n-k: Y(s) is irregular", t, b);
    let (t, b) = pick(&|r| r.x_max.map(|mx| mx == (r.m == n - k)));
    forall(report, "(v) X(s) is maximal irregular iff dim s = n-k", t, b);
    let (t, b) = pick(&|r| (r.m == n - k).then_some(r.x_eq_y));
    forall(report, "(v) dim s = n-k: X(s) = Y(s)", t, b);
    if let Some(r) = rows.iter().find(|r| r.m == n - k) {
        report.find("x_size_at_dim_n_minus_k", r.x_len);
    }
    Ok(())
}

/// X(s) is the single plane s when k = dim s = 1, hence regular.
fn x_single(k: usize, m: usize) -> bool {
    k == 1 && m == 1
}

/// Y(s) is the single plane s when k = dim s = n - 1.
fn y_single(n: usize, k: usize, m: usize) -> bool {
    k == n - 1 && m == n - 1
}

/// Irregular sets gathered from every generator: X and Y sets, their
/// completions, the anchored constructions, and seeded random ones.
struct Corpus {
    sets: Vec<(String, PlaneSet)>,
    scope: String,
}

/// A random maximal irregular set: scan planes in random order, keeping each
/// that does not create a maximal regular subset. The result cannot be
/// extended, so it is maximal irregular unless it came out regular.
fn random_maximal_irregular(space: &Space, k: usize, rng: &mut ChaCha8Rng) -> Result<Option<PlaneSet>> {
    let mut order: Vec<u32> = (0..space.size(k) as u32).collect();
    order.shuffle(rng);
    let mut cur = PlaneSet::empty(space, k);
    for p in order {
        let next = cur.inserted(p);
        if contains_maximal_regular(space, &next)?.is_none() {
            cur = next;
        }
    }
    Ok(is_regular(space, &cur)?.is_none().then_some(cur))
}

/// A random non-regular subset of `i`; irregular since `i` is.
fn random_subset(space: &Space, i: &PlaneSet, rng: &mut ChaCha8Rng) -> Result<Option<PlaneSet>> {
    for _ in 0..16 {
        let keep: Vec<u32> = i.iter().filter(|_| rng.gen_bool(0.5)).collect();
        let j = PlaneSet::from_sorted(space, i.k(), keep);
        if is_regular(space, &j)?.is_none() {
            return Ok(Some(j));
        }
    }
    Ok(None)
}

fn random_count(space: &Space, k: usize) -> usize {
    if space.size(k) <= 50 {
        500
    } else {
        20
    }
}

fn corpus(space: &Space, k: usize, random: usize) -> Result<Corpus> {
    let n = space.n();
    let mut sets: Vec<(String, PlaneSet)> = Vec::new();
    for m in 1..n {
        let g = space.grassmannian(m)?;
        let s = &g.planes()[0];
        if m <= n - k && !x_single(k, m) {
            let x = x_set(space, s, k)?;
            if m < n - k {
                sets.push((format!("completion of X(s), dim s = {m}"), complete_to_maximal_irregular(space, &x)?));
            }
            sets.push((format!("X(s), dim s = {m}"), x));
        }
        if m >= n - k && !y_single(n, k, m) {
            let y = y_set(space, s, k)?;
            if m > n - k {
                sets.push((format!("completion of Y(s), dim s = {m}"), complete_to_maximal_irregular(space, &y)?));
            }
            sets.push((format!("Y(s), dim s = {m}"), y));
        }
    }
    let mut anchored = 0;
    if 1 < k && k + 1 < n {
        if let Some((s, t)) = first_transverse_pair(space, n - k - 1, k + 1)? {
            sets.push(("X-anchored construction".into(), construct_x_anchored(space, &s, &t, k)?.set));
            anchored += 1;
        }
        if let Some((s, t)) = first_transverse_pair(space, n - k + 1, k - 1)? {
            sets.push(("Y-anchored construction".into(), construct_y_anchored(space, &s, &t, k)?.0));
            anchored += 1;
        }
    }
    let fixed = sets.len();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut produced = 0;
    let mut attempts = 0;
    while produced < random && attempts < 4 * random {
        attempts += 1;
        if let Some(i) = random_maximal_irregular(space, k, &mut rng)? {
            if let Some(j) = random_subset(space, &i, &mut rng)? {
                sets.push((format!("random subset #{produced}"), j));
            }
            sets.push((format!("random maximal #{produced}"), i));
            produced += 1;
        }
    }
    let scope = format!(
        "{} irregular sets: {fixed} from X/Y sets, completions and {anchored} anchored constructions, \
         plus {produced} seeded random maximal ones and their random non-regular subsets (seed {SEED:#x})",
        sets.len()
    );
    Ok(Corpus { sets, scope })
}

fn first_transverse_pair(space: &Space, ds: usize, dt: usize) -> Result<Option<(Subspace, Subspace)>> {
    if ds == 0 || dt == 0 || ds >= space.n() || dt >= space.n() {
        return Ok(None);
    }
    let s = space.grassmannian(ds)?.planes()[0].clone();
    let t = planes(space, dt)?.into_iter().find(|t| transverse(&s, t));
    Ok(t.map(|t| (s, t)))
}

/// Characteristics of every corpus set, computed in parallel, in corpus order.
fn corpus_characteristics(space: &Space, c: &Corpus) -> Result<Vec<Characteristics>> {
    Ok(c.sets
        .par_iter()
        .map(|(_, i)| characteristics(space, i))
        .collect::<std::result::Result<_, grassmann_core::Error>>()?)
}

fn named(space: &Space, label: &str, i: &PlaneSet) -> Value {
    json!({ "source": label, "set": set_json(space, i) })
}

fn check_corpus_irregular(report: &mut Report, space: &Space, c: &Corpus) -> Result<()> {
    let flags: Vec<bool> = c
        .sets
        .par_iter()
        .map(|(_, i)| is_irregular(space, i))
        .collect::<std::result::Result<_, grassmann_core::Error>>()?;
    let bad = c.sets.iter().zip(&flags).filter(|(_, ok)| !**ok).map(|((l, i), _)| named(space, l, i)).collect();
    forall(report, "every corpus set is irregular", c.sets.len(), bad);
    Ok(())
}

fn maximal_flags(space: &Space, c: &Corpus) -> Result<Vec<bool>> {
    Ok(c.sets
        .par_iter()
        .map(|(_, i)| is_maximal_irregular(space, i))
        .collect::<std::result::Result<_, grassmann_core::Error>>()?)
}

fn prop_3_2_1(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let c = corpus(space, k, random_count(space, k))?;
    report.scope = c.scope.clone();
    check_corpus_irregular(report, space, &c)?;
    let ch = corpus_characteristics(space, &c)?;
    let mut low = Vec::new();
    let mut high = Vec::new();
    for ((l, i), x) in c.sets.iter().zip(&ch) {
        if x.n1 > n - k {
            low.push(named(space, l, i));
        }
        if x.n_hyper < n - k {
            high.push(named(space, l, i));
        }
    }
    forall(report, "n_1 <= n-k", c.sets.len(), low);
    forall(report, "n_(n-1) >= n-k", c.sets.len(), high);
    Ok(())
}

fn thm_3_2_1(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let c = corpus(space, k, random_count(space, k))?;
    let maximal = maximal_flags(space, &c)?;
    let ch = corpus_characteristics(space, &c)?;
    let picked: Vec<usize> = (0..c.sets.len()).filter(|&j| maximal[j]).collect();
    report.scope = format!("the {} maximal irregular sets among {}", picked.len(), c.scope);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &j in &picked {
        let (l, i) = &c.sets[j];
        // No lines in N_1 means s_1 is the origin and X(s_1) is empty.
        if let Some(s1) = &ch[j].line_span {
            if !x_set(space, s1, k)?.is_subset(i) {
                xs.push(named(space, l, i));
            }
        }
        // No hyperplanes in N_(n-1) means s_(n-1) = V and Y(V) is empty.
        if let Some(sh) = &ch[j].hyperplane_meet {
            if sh.dim() > 0 && !y_set(space, sh, k)?.is_subset(i) {
                ys.push(named(space, l, i));
            }
        }
    }
    forall(report, "X(s_1(I)) is inside I", picked.len(), xs);
    forall(report, "Y(s_(n-1)(I)) is inside I", picked.len(), ys);
    // Without maximality the first inclusion can fail.
    if n - k >= 2 {
        let s = space.grassmannian(n - k)?.planes()[0].clone();
        let l = planes(space, k)?
            .into_iter()
            .find(|l| meet(l, &s).map(|z| (1..n - k).contains(&z.dim())).unwrap_or(false));
        if let Some(l) = l {
            let x = x_set(space, &s, k)?;
            let i = x.removed(space.index_of(&l)?);
            if !is_irregular(space, &i)? {
                // Tiny cases, e.g. two lines of a plane over GF(2).
                report.find("non_maximal_example", "not applicable: X(s) minus l is regular here");
                return Ok(());
            }
            let chi = characteristics(space, &i)?;
            let reproduced = !is_maximal_irregular(space, &i)?
                && chi.line_span.as_ref() == Some(&s)
                && !x_set(space, &s, k)?.is_subset(&i);
            report.check(
                "non-maximal X(s) minus a plane has s_1 = s but misses X(s_1)",
                reproduced,
                "dim s = n-k, 0 < dim(l meet s) < n-k",
            );
            report.certificates.push(json!({ "non_maximal_example": set_json(space, &i), "s": subspace_json(&s) }));
        }
    }
    Ok(())
}

fn thm_3_2_2(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let c = corpus(space, k, random_count(space, k))?;
    let ch = corpus_characteristics(space, &c)?;
    let mut pairs = 0usize;
    let mut bad = Vec::new();
    let mut skipped = false;
    for ((l, i), x) in c.sets.iter().zip(&ch) {
        for m in 1..n {
            if n - m == k {
                // G_k of a k-plane is a single point.
                skipped = true;
                continue;
            }
            // (i) s inside s_1(I) for m < k; (ii) s containing s_(n-1)(I) for m > k.
            let ss: Vec<Subspace> = if m < k {
                match &x.line_span {
                    Some(s1) => planes(space, m)?.into_iter().filter(|s| s1.contains(s)).collect(),
                    None => Vec::new(),
                }
            } else if m > k {
                match &x.hyperplane_meet {
                    Some(sh) => planes(space, m)?.into_iter().filter(|s| s.contains(sh)).collect(),
                    None => Vec::new(),
                }
            } else {
                Vec::new()
            };
            let ts = planes(space, n - m)?;
            let work: Vec<(&Subspace, &Subspace)> =
                ss.iter().flat_map(|s| ts.iter().filter(move |t| transverse(s, t)).map(move |t| (s, t))).collect();
            pairs += work.len();
            let found: Vec<Value> = work
                .par_iter()
                .map(|(s, t)| Ok((s, t, restricted_grassmannian_status(space, i, t)?)))
                .collect::<std::result::Result<Vec<_>, grassmann_core::Error>>()?
                .into_iter()
                .filter(|(_, _, st)| *st == SubStatus::ContainsMaximalRegular)
                .map(|(s, t, _)| json!({ "source": l, "set": set_json(space, i), "s": subspace_json(s), "t": subspace_json(t) }))
                .collect();
            bad.extend(found);
        }
    }
    report.scope = format!(
        "{pairs} (I, s, t) triples over {}{}",
        c.scope,
        if skipped { "; dim t = k skipped (G_k(t) is one plane)" } else { "" }
    );
    forall(report, "the trace on G_k(t) contains no maximal regular subset", pairs, bad);
    Ok(())
}

/// Transverse pairs of the given dimensions: all when few, else the first
/// (GL_n is transitive on direct-sum pairs of fixed dimensions).
fn transverse_pairs(space: &Space, ds: usize, dt: usize) -> Result<(Vec<(Subspace, Subspace)>, String)> {
    let ss = planes(space, ds)?;
    let ts = planes(space, dt)?;
    let all: Vec<(Subspace, Subspace)> = ss
        .iter()
        .flat_map(|s| ts.iter().filter(|t| transverse(s, t)).map(move |t| (s.clone(), t.clone())))
        .collect();
    if all.len() <= PAIR_LIMIT {
        let scope = format!("all {} transverse pairs (dim s = {ds}, dim t = {dt})", all.len());
        Ok((all, scope))
    } else {
        let scope = format!(
            "one of {} transverse pairs (dim s = {ds}, dim t = {dt}); GL_n is transitive on them",
            all.len()
        );
        Ok((all.into_iter().take(1).collect(), scope))
    }
}

struct Anchored {
    s: Subspace,
    t: Subspace,
    set: std::result::Result<PlaneSet, String>,
    maximal: bool,
    contains: bool,
    number: usize,
    trace: Option<SubStatus>,
}

fn anchored_checks(report: &mut Report, space: &Space, rows: Vec<Anchored>, anchor: &str, number: &str, want: usize) {
    let total = rows.len();
    let cert = |a: &Anchored| json!({ "s": subspace_json(&a.s), "t": subspace_json(&a.t) });
    let failed: Vec<Value> = rows
        .iter()
        .filter_map(|a| a.set.as_ref().err().map(|e| json!({ "pair": cert(a), "error": e })))
        .collect();
    forall(report, "the construction succeeds", total, failed);
    let ok: Vec<&Anchored> = rows.iter().filter(|a| a.set.is_ok()).collect();
    let bad = |f: &dyn Fn(&Anchored) -> bool| -> Vec<Value> { ok.iter().filter(|a| !f(a)).map(|a| cert(a)).collect() };
    forall(report, "the set is maximal irregular", ok.len(), bad(&|a| a.maximal));
    forall(report, &format!("the set contains {anchor}(s)"), ok.len(), bad(&|a| a.contains));
    forall(report, &format!("{number} = {want}"), ok.len(), bad(&|a| a.number == want));
    forall(
        report,
        "the trace on G_k(t) is not maximal irregular there",
        ok.len(),
        bad(&|a| a.trace != Some(SubStatus::MaximalIrregular)),
    );
    let classes: Vec<String> = ok.iter().map(|a| format!("{:?}", a.trace.expect("computed"))).sorted().dedup_with_count().map(|(c, s)| format!("{s}: {c}")).collect();
    report.find("trace_classes", classes);
    if let Some(a) = ok.first() {
        report.certificates.push(json!({ "pair": cert(a), "set": set_json(space, a.set.as_ref().expect("ok")) }));
    }
}

fn thm_3_2_3(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let (pairs, scope) = transverse_pairs(space, n - k - 1, k + 1)?;
    report.scope = scope;
    let rows: Vec<Anchored> = pairs
        .into_par_iter()
        .map(|(s, t)| {
            let built = construct_x_anchored(space, &s, &t, k);
            let mut a = Anchored { s, t, set: Err(String::new()), maximal: false, contains: false, number: 0, trace: None };
            match built {
                Err(e) => a.set = Err(e.to_string()),
                Ok(c) => {
                    let i = c.set;
                    a.maximal = is_maximal_irregular(space, &i)?;
                    a.contains = x_set(space, &a.s, k)?.is_subset(&i);
                    a.number = characteristics(space, &i)?.n1;
                    a.trace = Some(restricted_grassmannian_status(space, &i, &a.t)?);
                    a.set = Ok(i);
                }
            }
            Ok(a)
        })
        .collect::<std::result::Result<_, grassmann_core::Error>>()?;
    anchored_checks(report, space, rows, "X", "n_1", n - k - 1);
    Ok(())
}

fn thm_3_2_4(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let (pairs, scope) = transverse_pairs(space, n - k + 1, k - 1)?;
    report.scope = scope;
    let rows: Vec<Anchored> = pairs
        .into_par_iter()
        .map(|(s, t)| {
            let built = construct_y_anchored(space, &s, &t, k);
            let mut a = Anchored { s, t, set: Err(String::new()), maximal: false, contains: false, number: 0, trace: None };
            match built {
                Err(e) => a.set = Err(e.to_string()),
                Ok((i, _)) => {
                    a.maximal = is_maximal_irregular(space, &i)?;
                    a.contains = y_set(space, &a.s, k)?.is_subset(&i);
                    a.number = characteristics(space, &i)?.n_hyper;
                    a.trace = Some(restricted_grassmannian_status(space, &i, &a.t)?);
                    a.set = Ok(i);
                }
            }
            Ok(a)
        })
        .collect::<std::result::Result<_, grassmann_core::Error>>()?;
    anchored_checks(report, space, rows, "Y", "n_(n-1)", n - k + 1);
    Ok(())
}

/// All n x n alternating Gram matrices: zero diagonal, `G^T = -G`.
pub fn alternating_grams(field: &Field, n: usize) -> Vec<Matrix> {
    let q = field.q();
    let slots: Vec<(usize, usize)> = (0..n).tuple_combinations().collect();
    let total = q.pow(slots.len() as u32);
    (0..total)
        .map(|mut code| {
            let mut rows = vec![vec![0u8; n]; n];
            for &(i, j) in &slots {
                let a = (code % q) as u8;
                code /= q;
                rows[i][j] = a;
                rows[j][i] = field.neg(a);
            }
            Matrix::from_rows(field, n, &rows).expect("square")
        })
        .collect()
}

/// |GL_n(q)| / |Sp_n(q)| = q^(m(m-1)) * prod_(i=1..m) (q^(2i-1) - 1), n = 2m.
fn nonsingular_alternating_count(q: usize, n: usize) -> u128 {
    let m = n / 2;
    let q = q as u128;
    (1..=m as u32).fold(q.pow((m * (m - 1)) as u32), |acc, i| acc * (q.pow(2 * i - 1) - 1))
}

fn prop_1_1_2(report: &mut Report, space: &Space) -> Result<()> {
    let n = space.n();
    let field = space.field();
    let grams = alternating_grams(field, n);
    report.scope = format!("all {} alternating {n}x{n} Gram matrices over GF({})", grams.len(), space.q());
    let nonsingular: Vec<&Matrix> = grams.iter().filter(|g| g.is_invertible()).collect();
    report.find("nonsingular", nonsingular.len());
    if n % 2 == 1 {
        let bad = nonsingular.iter().map(|g| json!(g.row_vecs())).collect();
        forall(report, "odd dimension: every alternating form is singular", grams.len(), bad);
        return Ok(());
    }
    let want = nonsingular_alternating_count(space.q(), n);
    report.check(
        "nonsingular count equals |GL_n| / |Sp_n|",
        nonsingular.len() as u128 == want,
        format!("{} found, {want} expected", nonsingular.len()),
    );
    let standard = BilinearForm::standard_symplectic(field, n)?;
    let bad: Vec<Value> = nonsingular
        .par_iter()
        .filter(|g| {
            let form = BilinearForm::bilinear((**g).clone()).expect("square Gram");
            match symplectic_basis(&form) {
                Ok(b) => !b.matrix(field).is_invertible() || b.gram_in_basis(&form) != *standard.gram(),
                Err(_) => true,
            }
        })
        .map(|g| json!(g.row_vecs()))
        .collect();
    forall(report, "even dimension: a symplectic basis gives the standard Gram", nonsingular.len(), bad);
    Ok(())
}

fn lemma_3_2_1(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let field = space.field();
    let c = corpus(space, k, random_count(space, k))?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 1);
    let mut sets = c.sets.clone();
    // The lemma holds for arbitrary sets, not only irregular ones.
    for j in 0..50 {
        let keep: Vec<u32> = (0..space.size(k) as u32).filter(|_| rng.gen_bool(0.3)).collect();
        sets.push((format!("arbitrary set #{j}"), PlaneSet::from_sorted(space, k, keep)));
    }
    let mut forms = vec![("dot".to_string(), BilinearForm::dot(field, n))];
    if n.is_multiple_of(2) {
        forms.push(("standard symplectic".into(), BilinearForm::standard_symplectic(field, n)?));
    }
    let random_gram = loop {
        let rows: Vec<Vec<u8>> =
            (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..space.q()) as u8).collect()).collect();
        let g = Matrix::from_rows(field, n, &rows)?;
        if g.is_invertible() {
            break g;
        }
    };
    forms.push(("random nonsingular".into(), BilinearForm::bilinear(random_gram)?));
    report.scope = format!(
        "{} sets ({} plus 50 arbitrary seeded sets) under {} form maps: {}",
        sets.len(),
        c.scope,
        forms.len(),
        forms.iter().map(|f| f.0.as_str()).join(", ")
    );
    let total = sets.len() * forms.len();
    let mut first = Vec::new();
    let mut second = Vec::new();
    let mut spans = Vec::new();
    for (name, form) in &forms {
        let f = form_map(space, form, k)?;
        let rows: Vec<(Characteristics, Characteristics)> = sets
            .par_iter()
            .map(|(_, i)| Ok((characteristics(space, i)?, characteristics(space, &f.apply_set(space, i)?)?)))
            .collect::<std::result::Result<_, grassmann_core::Error>>()?;
        for ((l, i), (a, b)) in sets.iter().zip(&rows) {
            let cert = || json!({ "form": name, "source": l, "set": set_json(space, i) });
            if b.n1 != n - a.n_hyper {
                first.push(cert());
            }
            if b.n_hyper != n - a.n1 {
                second.push(cert());
            }
            let perp = a.hyperplane_meet.as_ref().map(|h| form.right_perp(h)).transpose()?;
            if b.line_span != perp {
                spans.push(cert());
            }
        }
    }
    forall(report, "n_1(f(I)) = n - n_(n-1)(I)", total, first);
    forall(report, "n_(n-1)(f(I)) = n - n_1(I)", total, second);
    forall(report, "s_1(f(I)) is the complement of s_(n-1)(I)", total, spans);
    Ok(())
}

fn cor_3_2_2(report: &mut Report, space: &Space, k: usize) -> Result<()> {
    let n = space.n();
    let c = corpus(space, k, random_count(space, k))?;
    let mut xs: Vec<(Subspace, PlaneSet)> = Vec::new();
    let mut ys: Vec<(Subspace, PlaneSet)> = Vec::new();
    for m in 1..n {
        for s in planes(space, m)? {
            if m <= n - k {
                xs.push((s.clone(), x_set(space, &s, k)?));
            }
            if m >= n - k {
                ys.push((s.clone(), y_set(space, &s, k)?));
            }
        }
    }
    let per_set: Vec<(usize, Vec<Value>)> = c
        .sets
        .par_iter()
        .map(|(l, i)| {
            let s1: Vec<&Subspace> = xs.iter().filter(|(_, x)| x.is_subset(i)).map(|(s, _)| s).collect();
            let s2: Vec<&Subspace> = ys.iter().filter(|(_, y)| y.is_subset(i)).map(|(s, _)| s).collect();
            let bad = s1
                .iter()
                .cartesian_product(&s2)
                .filter(|(a, b)| !b.contains(a))
                .map(|(a, b)| json!({ "source": l, "set": set_json(space, i), "s1": subspace_json(a), "s2": subspace_json(b) }))
                .collect();
            (s1.len() * s2.len(), bad)
        })
        .collect();
    let pairs: usize = per_set.iter().map(|p| p.0).sum();
    report.scope = format!(
        "{pairs} (s_1, s_2) pairs with X(s_1) and Y(s_2) inside I, s_1 and s_2 over all subspaces, I over {}",
        c.scope
    );
    forall(report, "s_1 is inside s_2", pairs, per_set.into_iter().flat_map(|p| p.1).collect());
    Ok(())
}

fn thm_1_3_1(report: &mut Report, space: &Space) -> Result<()> {
    let size = space.size(1);
    let field = space.field();
    let n = space.n();
    // Independent oracle: tables induced by every invertible matrix.
    let linear: HashSet<Vec<u32>> = (0..field.q().pow((n * n) as u32))
        .filter_map(|mut code| {
            let rows: Vec<Vec<u8>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            let a = (code % field.q()) as u8;
                            code /= field.q();
                            a
                        })
                        .collect()
                })
                .collect();
            let m = Matrix::from_rows(field, n, &rows).expect("square");
            m.is_invertible().then(|| {
                SemilinearMap::linear(m).expect("invertible").induced_map(space, 1).expect("valid").table().to_vec()
            })
        })
        .collect();
    let perms: Vec<Vec<u32>> = (0..size as u32).permutations(size).collect();
    report.scope = format!("all {} permutations of the {size} lines", perms.len());
    struct Row {
        table: Vec<u32>,
        preserving: bool,
        reconstructed: bool,
        induces_hyperplanes: bool,
    }
    let rows: Vec<Row> = perms
        .into_par_iter()
        .map(|table| {
            let f = GrassmannMap::new(space, 1, 1, table.clone())?;
            let preserving = is_independence_preserving(space, &f)?;
            let reconstructed = preserving
                && ftpg_reconstruct(space, &f).map(|h| h.induced_map(space, 1).ok() == Some(f.clone())).unwrap_or(false);
            let induces_hyperplanes = induces(space, &f, n - 1)?.is_some();
            Ok(Row { table, preserving, reconstructed, induces_hyperplanes })
        })
        .collect::<std::result::Result<_, grassmann_core::Error>>()?;
    let passing: HashSet<&Vec<u32>> = rows.iter().filter(|r| r.preserving).map(|r| &r.table).collect();
    report.find("independence_preserving", passing.len());
    report.find("linear_tables", linear.len());
    let same = passing.len() == linear.len() && linear.iter().all(|t| passing.contains(t));
    report.check(
        "the independence-preserving permutations are exactly the linear ones",
        same,
        format!("{} pass, {} are induced by GL_{n}", passing.len(), linear.len()),
    );
    let not_rebuilt = rows
        .iter()
        .filter(|r| r.preserving && !r.reconstructed)
        .map(|r| json!(r.table))
        .collect();
    forall(report, "each passing permutation is reconstructed with an identical table", passing.len(), not_rebuilt);
    let mismatch = rows
        .iter()
        .filter(|r| r.preserving != r.induces_hyperplanes)
        .map(|r| json!(r.table))
        .collect();
    forall(report, "independence preservation iff a hyperplane map is induced", rows.len(), mismatch);
    if let Some(first) = rows.iter().find(|r| r.preserving && !r.table.iter().enumerate().all(|(i, &t)| i as u32 == t)) {
        let f = GrassmannMap::new(space, 1, 1, first.table.clone())?;
        let h = ftpg_reconstruct(space, &f)?;
        report.certificates.push(json!({ "table": first.table, "matrix": h.matrix().row_vecs(), "sigma": h.sigma() }));
    }
    Ok(())
}

fn remark_2_2_1(report: &mut Report, n: usize, k: usize) {
    report.scope = format!("(n, k) = ({n}, {k}), plus every 1 < k' < n'-1 with n' <= 20");
    let identity = |n: usize, k: usize| s_threshold(n, k) == binomial(n, k) - binomial(n - 2, k - 1);
    let lhs = s_threshold(n, k);
    let rhs = binomial(n, k) - binomial(n - 2, k - 1);
    report.check("s_k^n = C(n,k) - C(n-2,k-1)", lhs == rhs, format!("{lhs} = {rhs}"));
    let bad: Vec<Value> = (4..=20)
        .flat_map(|n| (2..n - 1).map(move |k| (n, k)))
        .filter(|&(n, k)| !identity(n, k))
        .map(|(n, k)| json!({ "n": n, "k": k }))
        .collect();
    let total = (4..=20).map(|n| n - 3).sum();
    forall(report, "the identity for all n' <= 20", total, bad);
}

/// Lines of a coordinate system as vectors, for certificates.
pub fn system_json(space: &Space, c: &CoordinateSystem) -> Value {
    lines_json(space, c.lines())
}
