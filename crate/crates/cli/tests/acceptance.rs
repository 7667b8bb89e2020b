//! The fourteen acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always print. Every
//! tolerance is exact equality; the time budgets are pinned below.

use std::collections::{HashSet, VecDeque};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use grassmann_cli::harness::{self, alternating_grams};
use grassmann_cli::report::{Report, Verdict};
use grassmann_core::forms::{annihilator, form_map, symplectic_basis, BilinearForm};
use grassmann_core::gf::Field;
use grassmann_core::grassmann::{distance, gaussian_binomial, geodesic, join, PlaneSet, Space, Subspace};
use grassmann_core::irregularity::{
    are_similar, characteristics, complete_in_order, construct_x_anchored, construct_y_anchored, x_set, Similarity, SubStatus,
};
use grassmann_core::linalg::Matrix;
use grassmann_core::maps::{GrassmannMap, SemilinearMap};
use grassmann_core::reconstruction::{
    classify, ftpg_reconstruct, is_distance_preserving, is_regular_transformation, verify_classification,
    Classification, Witness,
};
use grassmann_core::regularity::{coordinate_planes, degree, CoordinateSystem};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u8,
    title: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

/// Criteria whose statement cannot hold as written; see the decisions ledger.
/// They still run and print their honest result.
const UNATTAINABLE: [u8; 2] = [9, 14];

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn criteria() -> Vec<Criterion> {
    vec![
        Criterion { id: 1, title: "enumeration counts", budget: secs(10), run: c01_counts },
        Criterion { id: 2, title: "metric suite on G_2^4(GF(2))", budget: secs(5), run: c02_metric },
        Criterion { id: 3, title: "maximal adjacent families", budget: secs(10), run: c03_families },
        Criterion { id: 4, title: "degree bound at s_k^n", budget: secs(300), run: c04_degree_one },
        Criterion { id: 5, title: "degree bound at c_k^(n-1), and k = 1", budget: secs(300), run: c05_degree_two },
        Criterion { id: 6, title: "symplectic bases", budget: secs(30), run: c06_symplectic },
        Criterion { id: 7, title: "X and Y set statuses", budget: secs(60), run: c07_xy },
        Criterion { id: 8, title: "number characteristics", budget: secs(300), run: c08_characteristics },
        Criterion { id: 9, title: "anchored constructions", budget: secs(300), run: c09_anchored },
        Criterion { id: 10, title: "line-map reconstruction", budget: secs(120), run: c10_ftpg },
        Criterion { id: 11, title: "transformation classification", budget: secs(300), run: c11_classify },
        Criterion { id: 12, title: "form algebra", budget: secs(60), run: c12_forms },
        Criterion { id: 13, title: "degree invariance", budget: secs(120), run: c13_invariance },
        Criterion { id: 14, title: "non-similarity at (2,5,2)", budget: secs(600), run: c14_similarity },
    ]
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters are not meaningful here.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut blocking = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget")),
            Err(e) => (false, e),
        };
        let mark = if ok { "PASS" } else { "FAIL" };
        let known = if !ok && UNATTAINABLE.contains(&c.id) { " (known unattainable)" } else { "" };
        println!(
            "criterion {:>2} {mark}{known} [{:.1}s / {}s] {}: {detail}",
            c.id,
            took.as_secs_f64(),
            c.budget.as_secs(),
            c.title
        );
        if !ok && !UNATTAINABLE.contains(&c.id) {
            blocking.push(c.id);
        }
    }
    // The n = 2k case, where the two anchored sets may coincide up to a regular transformation.
    let s4 = Space::with_order(2, 4).unwrap();
    match constructed(&s4, 2) {
        Ok(c) => println!("info: I2 against I3 at (2,4,2): {}", similarity_word(&s4, &c.i2, &c.i3)),
        Err(e) => println!("info: I2 against I3 at (2,4,2): construction failed: {e}"),
    }
    if blocking.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failing criteria: {blocking:?}");
        ExitCode::FAILURE
    }
}

fn rng(tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0xacce_9700 + tag)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn passing(id: &str, q: usize, n: usize, k: usize) -> Result<Report, String> {
    let r = harness::verify(id, q, n, k).map_err(|e| format!("{id}: {e}"))?;
    if r.verdict != Verdict::Pass {
        let failed: Vec<&str> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        return Err(format!("{id} ({q},{n},{k}) is {:?}: {failed:?}", r.verdict));
    }
    Ok(r)
}

fn random_matrix(field: &Field, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let rows: Vec<Vec<u8>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(0..field.q()) as u8).collect()).collect();
    Matrix::from_rows(field, n, &rows).unwrap()
}

fn random_invertible(field: &Field, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let m = random_matrix(field, n, rng);
        if m.is_invertible() {
            return m;
        }
    }
}

#[allow(clippy::needless_range_loop)] // rows[i][j] and rows[j][i] are set together
fn random_alternating(field: &Field, n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut rows = vec![vec![0u8; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let a = rng.gen_range(0..field.q()) as u8;
            rows[i][j] = a;
            rows[j][i] = field.neg(a);
        }
    }
    Matrix::from_rows(field, n, &rows).unwrap()
}

/// Number of k x n RREF matrices: each pivot pattern contributes q^(free entries).
fn rref_patterns(q: usize, n: usize, k: usize) -> u128 {
    (0..n)
        .combinations(k)
        .map(|pivots| {
            let free: usize = pivots.iter().enumerate().map(|(i, &p)| (n - 1 - p) - (k - 1 - i)).sum();
            (q as u128).pow(free as u32)
        })
        .sum()
}

fn c01_counts() -> Outcome {
    let mut cases = 0;
    for q in [2, 3, 4] {
        for n in 2..=5 {
            let space = Space::with_order(q, n).map_err(|e| e.to_string())?;
            for k in 1..n {
                let oracle = rref_patterns(q, n, k);
                let listed = space.grassmannian(k).map_err(|e| e.to_string())?.len() as u128;
                ensure(listed == oracle && gaussian_binomial(n, k, q) == oracle, || {
                    format!("q={q} n={n} k={k}: listed {listed}, oracle {oracle}")
                })?;
                cases += 1;
            }
        }
    }
    ensure(rref_patterns(2, 4, 2) == 35 && rref_patterns(3, 4, 2) == 130, || "reference counts".into())?;
    Ok(format!("{cases} (q,n,k) cases equal the RREF-pattern count"))
}

fn c02_metric() -> Outcome {
    let space = Space::with_order(2, 4).unwrap();
    let g = space.grassmannian(2).unwrap();
    let p = g.planes();
    let m = p.len();
    let mut d = vec![vec![0usize; m]; m];
    for a in 0..m {
        for b in 0..m {
            d[a][b] = distance(&p[a], &p[b]).unwrap();
            let j = join(&p[a], &p[b]).unwrap();
            ensure(j.dim() == 2 + d[a][b], || format!("join dimension at ({a},{b})"))?;
        }
    }
    for a in 0..m {
        ensure(d[a][a] == 0, || format!("d({a},{a}) != 0"))?;
        for b in 0..m {
            ensure(d[a][b] == d[b][a], || format!("asymmetric at ({a},{b})"))?;
            ensure(a == b || d[a][b] > 0, || format!("d({a},{b}) = 0"))?;
            for c in 0..m {
                ensure(d[a][c] <= d[a][b] + d[b][c], || format!("triangle at ({a},{b},{c})"))?;
            }
        }
    }
    for a in 0..m {
        for b in 0..m {
            let path = geodesic(&p[a], &p[b]).unwrap();
            ensure(path.len() == d[a][b] + 1 && path[0] == p[a] && path[path.len() - 1] == p[b], || {
                format!("geodesic endpoints or length at ({a},{b})")
            })?;
            ensure(path.windows(2).all(|w| distance(&w[0], &w[1]).unwrap() == 1), || {
                format!("geodesic step not adjacent at ({a},{b})")
            })?;
        }
    }
    Ok(format!("{m}x{m} pairs, {} triples", m * m * m))
}

fn c03_families() -> Outcome {
    let r = passing("prop-1.4.2", 2, 4, 2)?;
    let fam = r.finding("families").cloned().unwrap_or_default();
    ensure(fam["stars"] == 15 && fam["tops"] == 15 && fam["total"] == 30, || format!("families {fam}"))?;
    Ok("30 maximal families: 15 stars, 15 tops, none other".into())
}

fn c04_degree_one() -> Outcome {
    let r = passing("thm-2.2.1", 2, 4, 2)?;
    ensure(r.scope.starts_with("all "), || format!("scope is not exhaustive: {}", r.scope))?;
    Ok(format!("{}; {}", r.scope, r.finding("deg_counts").unwrap()))
}

fn c05_degree_two() -> Outcome {
    let r = passing("thm-2.2.2", 2, 4, 2)?;
    let r1 = passing("thm-2.2.2", 2, 4, 1)?;
    ensure(r.scope.starts_with("all ") && r1.scope.starts_with("all "), || "scope is not exhaustive".into())?;
    Ok(format!("{}; k = 1: {}", r.finding("deg_counts").unwrap(), r1.checks[0].detail))
}

fn c06_symplectic() -> Outcome {
    let mut rng = rng(6);
    let mut done = 0;
    for q in [2, 3] {
        let field = Field::new(q).unwrap();
        for n in [4, 6] {
            let standard = BilinearForm::standard_symplectic(&field, n).unwrap();
            let mut count = 0;
            while count < 200 {
                let g = random_alternating(&field, n, &mut rng);
                if !g.is_invertible() {
                    continue;
                }
                let form = BilinearForm::bilinear(g).unwrap();
                let b = symplectic_basis(&form).map_err(|e| format!("q={q} n={n}: {e}"))?;
                ensure(b.matrix(&field).is_invertible() && b.gram_in_basis(&form) == *standard.gram(), || {
                    format!("q={q} n={n}: basis Gram is not the standard pattern")
                })?;
                count += 1;
            }
            done += count;
        }
    }
    let f2 = Field::new(2).unwrap();
    let odd = alternating_grams(&f2, 3);
    ensure(odd.iter().all(|g| !g.is_invertible()), || "nonsingular alternating 3x3 over GF(2)".into())?;
    for q in [2, 3] {
        let field = Field::new(q).unwrap();
        for _ in 0..200 {
            let g = random_alternating(&field, 5, &mut rng);
            ensure(g.rank().is_multiple_of(2) && g.rank() < 5, || format!("odd rank alternating 5x5 over GF({q})"))?;
        }
    }
    Ok(format!("{done} random forms reduced to the standard Gram; {} odd 3x3 singular; 400 5x5 have even rank", odd.len()))
}

fn c07_xy() -> Outcome {
    let r = passing("prop-3.1.3", 2, 4, 2)?;
    ensure(r.finding("x_size_at_dim_n_minus_k") == Some(&19.into()), || "|X(s)| != 19".into())?;
    Ok(format!("{}; |X(s)| = 19 at dim s = 2", r.scope))
}

fn c08_characteristics() -> Outcome {
    let mut lines = Vec::new();
    for id in ["prop-3.2.1", "thm-3.2.1", "lemma-3.2.1", "cor-3.2.2"] {
        let r = passing(id, 2, 4, 2)?;
        lines.push(format!("{id}: {} checks", r.checks.len()));
        if id == "thm-3.2.1" {
            ensure(r.checks.iter().any(|c| c.name.starts_with("non-maximal")), || {
                "the non-maximal counterexample did not run".into()
            })?;
        }
    }
    Ok(lines.join(", "))
}

fn c09_anchored() -> Outcome {
    passing("thm-3.2.3", 2, 4, 2)?;
    passing("thm-3.2.4", 2, 4, 2)?;
    let traces = anchored_traces(&Space::with_order(2, 4).unwrap(), usize::MAX)?;
    let irregular = traces.iter().filter(|&&t| t == SubStatus::Irregular).count();
    if irregular == traces.len() {
        return Ok(format!("{} constructions", traces.len()));
    }
    // The trace is q planes of a 3-space through one line; over GF(2) that is two planes.
    let q3 = anchored_traces(&Space::with_order(3, 4).unwrap(), 3)?;
    Err(format!(
        "maximal irregular, contains X/Y, n_1 = 1, n_(n-1) = 3 and not maximal-in-sub all hold, \
         but {} of {} traces are regular in the sub-Grassmannian, not irregular; at (3,4,2) the traces are {q3:?}",
        traces.len() - irregular,
        traces.len()
    ))
}

/// Trace classes of both anchored constructions over the first `limit` transverse (line, hyperplane) pairs.
fn anchored_traces(space: &Space, limit: usize) -> Result<Vec<SubStatus>, String> {
    let lines = space.grassmannian(1).unwrap().planes().to_vec();
    let hyper = space.grassmannian(3).unwrap().planes().to_vec();
    let transverse = |a: &Subspace, b: &Subspace| join(a, b).unwrap().dim() == a.dim() + b.dim();
    let pairs = lines.iter().flat_map(|s| hyper.iter().filter(|t| transverse(s, t)).map(move |t| (s, t)));
    let mut traces = Vec::new();
    for (s, t) in pairs.take(limit) {
        traces.push(construct_x_anchored(space, s, t, 2).map_err(|e| e.to_string())?.trace);
        traces.push(construct_y_anchored(space, t, s, 2).map_err(|e| e.to_string())?.1);
    }
    Ok(traces)
}

fn c10_ftpg() -> Outcome {
    let r = passing("thm-1.3.1", 2, 3, 1)?;
    ensure(r.finding("independence_preserving") == Some(&168.into()), || "count is not 168".into())?;
    let space = Space::with_order(4, 3).unwrap();
    let field = space.field().clone();
    let mut rng = rng(10);
    for trial in 0..100 {
        let sigma = rng.gen_range(0..2);
        let h = SemilinearMap::new(random_invertible(&field, 3, &mut rng), sigma).unwrap();
        let f = h.induced_map(&space, 1).unwrap();
        let back = ftpg_reconstruct(&space, &f).map_err(|e| format!("trial {trial}: {e}"))?;
        ensure(back.sigma() == sigma && back.induced_map(&space, 1).unwrap() == f, || {
            format!("trial {trial}: sigma {} vs {sigma}, or table differs", back.sigma())
        })?;
    }
    Ok("5040 permutations, 168 reconstruct; 100 GF(4) round trips exact".into())
}

fn table_matches(space: &Space, f: &GrassmannMap, c: &Classification) -> bool {
    match c {
        Classification::Linear(h) => h.induced_map(space, f.k_dom()).ok().as_ref() == Some(f),
        Classification::FormComposed { form, map } => {
            let ff = form_map(space, form, f.k_dom()).unwrap();
            map.induced_map(space, f.k_dom()).unwrap().compose(&ff).ok().as_ref() == Some(f)
        }
        Classification::NotClassifiable(_) => false,
    }
}

fn c11_classify() -> Outcome {
    let space = Space::with_order(2, 4).unwrap();
    let field = space.field().clone();
    let omega = BilinearForm::standard_symplectic(&field, 4).unwrap();
    let form = form_map(&space, &omega, 2).unwrap();
    let mut rng = rng(11);
    for trial in 0..100 {
        let h = SemilinearMap::linear(random_invertible(&field, 4, &mut rng)).unwrap();
        let f = h.induced_map(&space, 2).unwrap();
        let c = classify(&space, &f).unwrap();
        ensure(matches!(c.variant, Classification::Linear(_)) && c.verified, || format!("trial {trial}: not linear"))?;
        ensure(table_matches(&space, &f, &c.variant) && verify_classification(&space, &f, &c.variant).unwrap(), || {
            format!("trial {trial}: linear table mismatch")
        })?;
        let g = f.compose(&form).unwrap();
        let c = classify(&space, &g).unwrap();
        ensure(matches!(c.variant, Classification::FormComposed { .. }) && c.verified, || {
            format!("trial {trial}: not form-composed")
        })?;
        ensure(table_matches(&space, &g, &c.variant) && verify_classification(&space, &g, &c.variant).unwrap(), || {
            format!("trial {trial}: form-composed table mismatch")
        })?;
        let (a, b) = (rng.gen_range(0..35), rng.gen_range(0..35));
        if a != b {
            let bad = f.with_swap(a, b);
            match classify(&space, &bad).unwrap().variant {
                Classification::NotClassifiable(Witness::Pair(x, y)) => {
                    let before = space.distance_idx(2, x, y).unwrap();
                    let after = space.distance_idx(2, bad.apply(x), bad.apply(y)).unwrap();
                    ensure(before != after, || format!("trial {trial}: witness pair keeps distance"))?;
                }
                other => return Err(format!("trial {trial}: corrupted table gave {other:?}")),
            }
        }
    }
    // The group generated by permutation matrices, one transvection and the form map.
    let mut gens: Vec<GrassmannMap> = Vec::new();
    for i in 0..3 {
        let mut rows: Vec<Vec<u8>> = (0..4).map(|r| (0..4).map(|c| u8::from(r == c)).collect()).collect();
        rows.swap(i, i + 1);
        gens.push(SemilinearMap::linear(Matrix::from_rows(&field, 4, &rows).unwrap()).unwrap().induced_map(&space, 2).unwrap());
    }
    let mut tv: Vec<Vec<u8>> = (0..4).map(|r| (0..4).map(|c| u8::from(r == c)).collect()).collect();
    tv[0][1] = 1;
    gens.push(SemilinearMap::linear(Matrix::from_rows(&field, 4, &tv).unwrap()).unwrap().induced_map(&space, 2).unwrap());
    gens.push(form.clone());
    let id = GrassmannMap::identity(&space, 2);
    let mut seen: HashSet<Vec<u32>> = HashSet::from([id.table().to_vec()]);
    let mut queue = VecDeque::from([id]);
    let mut group = Vec::new();
    while let Some(x) = queue.pop_front() {
        for g in &gens {
            let y = g.compose(&x).unwrap();
            if seen.insert(y.table().to_vec()) {
                queue.push_back(y);
            }
        }
        group.push(x);
    }
    ensure(group.len() == 2 * 20160, || format!("generated group has {} elements, expected 40320", group.len()))?;
    use rayon::prelude::*;
    let disagreements = group
        .par_iter()
        .filter(|f| {
            let dp = is_distance_preserving(&space, f).unwrap();
            let rg = is_regular_transformation(&space, f).unwrap();
            let cl = classify(&space, f).unwrap().verified;
            !(dp && rg && cl)
        })
        .count();
    ensure(disagreements == 0, || format!("{disagreements} elements fall outside one of the classes"))?;
    // Outside the group all three reject together.
    let mut outside = 0;
    for _ in 0..50 {
        let f = group[rng.gen_range(0..group.len())].with_swap(rng.gen_range(0..35), rng.gen_range(0..35));
        if f.is_identity() || seen.contains(f.table()) {
            continue;
        }
        let dp = is_distance_preserving(&space, &f).unwrap();
        let rg = is_regular_transformation(&space, &f).unwrap();
        let cl = classify(&space, &f).unwrap().verified;
        ensure(!dp && !rg && !cl, || "a transformation outside the group is accepted".into())?;
        outside += 1;
    }
    Ok(format!("100 linear + 100 form-composed + corrupted tables; all {} group elements in all three classes; {outside} outside rejected", group.len()))
}

fn c12_forms() -> Outcome {
    let space = Space::with_order(2, 4).unwrap();
    let field = space.field().clone();
    let subspaces: Vec<Subspace> = (1..4)
        .flat_map(|k| space.grassmannian(k).unwrap().planes().to_vec())
        .chain([Subspace::origin(&field, 4), Subspace::whole(&field, 4)])
        .collect();
    let mut reflexive = 0usize;
    let mut nonsingular = 0usize;
    let mut witness: Option<(Matrix, Subspace)> = None;
    for code in 0..(1usize << 16) {
        let rows: Vec<Vec<u8>> = (0..4).map(|r| (0..4).map(|c| ((code >> (4 * r + c)) & 1) as u8).collect()).collect();
        let g = Matrix::from_rows(&field, 4, &rows).unwrap();
        if !g.is_invertible() {
            continue;
        }
        nonsingular += 1;
        let form = BilinearForm::bilinear(g.clone()).unwrap();
        for u in &subspaces {
            // Complement through the annihilator of U * G.
            let ug = Subspace::span_of(&u.basis().mul(&g).unwrap());
            ensure(form.right_perp(u).unwrap() == annihilator(&ug), || "complement is not ann(U G)".into())?;
        }
        let twice = |u: &Subspace| form.orth_complement(&form.orth_complement(u).unwrap()).unwrap();
        if form.is_reflexive() {
            reflexive += 1;
            ensure(subspaces.iter().all(|u| twice(u) == *u), || "reflexive form fails double complement".into())?;
        } else if witness.is_none() {
            witness = subspaces.iter().find(|u| twice(u) != **u).map(|u| (g.clone(), u.clone()));
        }
    }
    ensure(witness.is_some(), || "no round-trip failure for a non-reflexive form".into())?;
    // Scaling: F(a Omega) = F(Omega), over GF(3) where a = 2 is available.
    let s3 = Space::with_order(3, 4).unwrap();
    let mut rng = rng(12);
    for _ in 0..20 {
        let form = BilinearForm::bilinear(random_invertible(s3.field(), 4, &mut rng)).unwrap();
        for k in 1..4 {
            ensure(form_map(&s3, &form, k).unwrap() == form_map(&s3, &form.scaled(2), k).unwrap(), || {
                "scaling changes the form map".into()
            })?;
        }
    }
    Ok(format!("{nonsingular} nonsingular forms, {reflexive} reflexive; double complement and annihilator factorization exact"))
}

fn c13_invariance() -> Outcome {
    let space = Space::with_order(2, 4).unwrap();
    let field = space.field().clone();
    let form = form_map(&space, &BilinearForm::standard_symplectic(&field, 4).unwrap(), 2).unwrap();
    let mut rng = rng(13);
    for trial in 0..100 {
        let basis = random_invertible(&field, 4, &mut rng).row_vecs();
        let c = CoordinateSystem::from_vectors(&space, &basis).unwrap();
        let full = coordinate_planes(&space, &c, 2).unwrap();
        let keep: Vec<u32> = full.iter().filter(|_| rng.gen_bool(0.6)).collect();
        let r = PlaneSet::new(&space, 2, keep).unwrap();
        let mut f = SemilinearMap::linear(random_invertible(&field, 4, &mut rng)).unwrap().induced_map(&space, 2).unwrap();
        if rng.gen_bool(0.5) {
            f = f.compose(&form).unwrap();
        }
        let before = degree(&space, &r).unwrap().0;
        let after = degree(&space, &f.apply_set(&space, &r).unwrap()).unwrap().0;
        ensure(before == after, || format!("trial {trial}: deg {before} became {after}"))?;
    }
    Ok("100 random (set, transformation) pairs".into())
}

struct Constructed {
    i1: PlaneSet,
    i2: PlaneSet,
    i3: PlaneSet,
    /// Seed of I2, and of the dual X-anchored set in G_(n-k) that pulls back to I3.
    seed2: PlaneSet,
    seed3_dual: PlaneSet,
}

fn constructed(space: &Space, k: usize) -> Result<Constructed, String> {
    let n = space.n();
    let dims = |d: usize| space.grassmannian(d).unwrap().planes().to_vec();
    let transverse = |a: &Subspace, b: &Subspace| join(a, b).unwrap().dim() == a.dim() + b.dim();
    let first_pair = |ds: usize, dt: usize| {
        let s = dims(ds)[0].clone();
        let t = dims(dt).into_iter().find(|t| transverse(&s, t)).unwrap();
        (s, t)
    };
    let e = |e: grassmann_core::Error| e.to_string();
    let i1 = x_set(space, &dims(n - k)[0], k).map_err(e)?;
    let (s, t) = first_pair(n - k - 1, k + 1);
    let c2 = construct_x_anchored(space, &s, &t, k).map_err(e)?;
    let (s, t) = first_pair(n - k + 1, k - 1);
    let (i3, _) = construct_y_anchored(space, &s, &t, k).map_err(e)?;
    let dot = BilinearForm::dot(space.field(), n);
    let dual = construct_x_anchored(space, &dot.right_perp(&s).unwrap(), &dot.right_perp(&t).unwrap(), n - k).map_err(e)?;
    Ok(Constructed { i1, i2: c2.set, i3, seed2: c2.seed, seed3_dual: dual.seed })
}

fn similarity_word(space: &Space, a: &PlaneSet, b: &PlaneSet) -> String {
    match are_similar(space, a, b).unwrap() {
        Similarity::Similar(w) => format!("similar (verified witness, form-composed: {})", w.form_composed),
        Similarity::NotSimilar(why) => format!("not similar ({why})"),
        Similarity::Inconclusive => "inconclusive".into(),
    }
}

fn c14_similarity() -> Outcome {
    let space = Space::with_order(2, 5).unwrap();
    let c = constructed(&space, 2)?;
    let ch: Vec<(usize, usize)> = [&c.i1, &c.i2, &c.i3]
        .iter()
        .map(|i| {
            let c = characteristics(&space, i).unwrap();
            (c.n1, c.n_hyper)
        })
        .collect();
    ensure(ch[0] == (3, 3) && ch[1].0 == 2 && ch[2].1 == 4, || format!("characteristics {ch:?}"))?;
    let mut similar = Vec::new();
    for (a, b, name) in [(&c.i1, &c.i2, "I1/I2"), (&c.i1, &c.i3, "I1/I3"), (&c.i2, &c.i3, "I2/I3")] {
        match are_similar(&space, a, b).unwrap() {
            Similarity::NotSimilar(_) => {}
            Similarity::Similar(w) => {
                ensure(w.map.apply_set(&space, a).unwrap() == *b, || format!("{name}: witness does not map"))?;
                similar.push(name);
            }
            Similarity::Inconclusive => return Err(format!("{name}: inconclusive")),
        }
    }
    if similar.is_empty() {
        return Ok(format!("characteristics {ch:?}; all three pairs certified not similar"));
    }
    // Other greedy completion orders of the same seeds.
    let f = form_map(&space, &BilinearForm::dot(space.field(), 5), 2).unwrap().inverse();
    let mut rng = rng(14);
    let mut separated = 0;
    let trials = 10;
    for _ in 0..trials {
        use rand::seq::SliceRandom;
        let mut o2: Vec<u32> = (0..space.size(2) as u32).collect();
        let mut o3: Vec<u32> = (0..space.size(3) as u32).collect();
        o2.shuffle(&mut rng);
        o3.shuffle(&mut rng);
        let a = complete_in_order(&space, &c.seed2, &o2).unwrap();
        let b = f.apply_set(&space, &complete_in_order(&space, &c.seed3_dual, &o3).unwrap()).unwrap();
        if matches!(are_similar(&space, &a, &b).unwrap(), Similarity::NotSimilar(_)) {
            separated += 1;
        }
    }
    Err(format!(
        "characteristics {ch:?}; {} similar by a verified linear map, so the invariant filter cannot separate them; \
         under {separated} of {trials} random completion orders the (I2, I3) pair is certified not similar",
        similar.join(", ")
    ))
}
