//! The non-theorem subcommands. Each returns a report or a usage error.

use grassmann_core::gf::Field;
use grassmann_core::grassmann::{gaussian_binomial, PlaneSet, Space, MAX_N, MAX_PLANES};
use grassmann_core::irregularity::{characteristics, contains_maximal_regular, extension_witness, is_irregular};
use grassmann_core::maps::{GrassmannMap, SemilinearMap};
use grassmann_core::reconstruction::{classify, Classification, Witness};
use grassmann_core::regularity::{degree, is_exact, is_maximal_regular, is_regular};
use serde_json::{json, Value};
use thiserror::Error;

use crate::formats::{read_map_table, read_plane_set, FormatError};
use crate::harness::{system_json, HarnessError};
use crate::report::{matrix_json, plane_json, set_json, subspace_json, Report, Verdict};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Format { path: String, source: FormatError },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    /// A mode applied to an input outside its domain; the library message is kept.
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Core(#[from] grassmann_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn read(path: &str) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_string(), msg: e.to_string() })
}

pub fn enumerate(q: usize, n: usize, k: usize, count_only: bool) -> Result<Report> {
    let field = Field::new(q)?;
    let mut command = vec!["enumerate".to_string(), format!("--q={q}"), format!("--n={n}"), format!("--k={k}")];
    if count_only {
        command.push("--count-only".into());
    }
    let mut report = Report::new(command, json!({ "q": q, "n": n, "k": k, "count_only": count_only }));
    if k > n {
        return Err(CliError::Precondition(format!("k = {k} exceeds n = {n}")));
    }
    let count = gaussian_binomial(n, k, q);
    let listable = count <= MAX_PLANES as u128;
    if n > MAX_N || (!count_only && !listable) {
        report.verdict = Verdict::Infeasible;
        let env = format!("n <= {MAX_N}, and at most {MAX_PLANES} planes when listing");
        report.scope = format!("outside the feasibility envelope: {env}");
        report.find("envelope", env);
        return Ok(report);
    }
    report.find("count", count.to_string());
    if !count_only {
        let space = Space::new(&field, n)?;
        let g = space.grassmannian(k)?;
        let planes: Vec<Value> = g.planes().iter().map(subspace_json).collect();
        report.find("planes", planes);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Auto,
    Regular,
    Irregular,
    Characteristics,
    Degree,
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::Auto => "auto",
            Mode::Regular => "regular",
            Mode::Irregular => "irregular",
            Mode::Characteristics => "characteristics",
            Mode::Degree => "degree",
        }
    }
}

pub fn analyze(path: &str, mode: Mode) -> Result<Report> {
    let text = read(path)?;
    let (space, set) = read_plane_set(&text).map_err(|source| CliError::Format { path: path.to_string(), source })?;
    let mut report = Report::new(
        vec!["analyze".into(), format!("--in={path}"), format!("--mode={}", mode.name())],
        json!({ "q": space.q(), "n": space.n(), "k": set.k(), "size": set.len(), "mode": mode.name() }),
    );
    match mode {
        Mode::Regular => {
            regular_part(&mut report, &space, &set)?;
        }
        Mode::Degree => {
            if is_regular(&space, &set)?.is_none() {
                return Err(CliError::Precondition(grassmann_core::Error::NotRegular.to_string()));
            }
            degree_part(&mut report, &space, &set)?;
        }
        Mode::Irregular => irregular_part(&mut report, &space, &set)?,
        Mode::Characteristics => characteristics_part(&mut report, &space, &set)?,
        Mode::Auto => {
            if regular_part(&mut report, &space, &set)? {
                degree_part(&mut report, &space, &set)?;
            } else {
                irregular_part(&mut report, &space, &set)?;
                characteristics_part(&mut report, &space, &set)?;
            }
        }
    }
    Ok(report)
}

fn regular_part(report: &mut Report, space: &Space, set: &PlaneSet) -> Result<bool> {
    match is_regular(space, set)? {
        Some(c) => {
            report.find("regular", true);
            report.find("maximal_regular", is_maximal_regular(space, set)?);
            report.find("exact", is_exact(space, set)?);
            report.certificates.push(json!({ "associated_system": system_json(space, &c) }));
            Ok(true)
        }
        None => {
            report.find("regular", false);
            Ok(false)
        }
    }
}

fn degree_part(report: &mut Report, space: &Space, set: &PlaneSet) -> Result<()> {
    let (d, witness) = degree(space, set)?;
    report.find("deg", d);
    report.certificates.push(json!({ "exact_superset": set_json(space, &witness) }));
    Ok(())
}

fn irregular_part(report: &mut Report, space: &Space, set: &PlaneSet) -> Result<()> {
    if is_regular(space, set)?.is_some() {
        report.find("irregular", false);
        return Ok(());
    }
    if let Some(c) = contains_maximal_regular(space, set)? {
        report.find("irregular", false);
        report.find("contains_maximal_regular", true);
        report.certificates.push(json!({ "maximal_regular_subset_system": system_json(space, &c) }));
        return Ok(());
    }
    debug_assert!(is_irregular(space, set)?);
    report.find("irregular", true);
    match extension_witness(space, set)? {
        None => report.find("maximal_irregular", true),
        Some(p) => {
            report.find("maximal_irregular", false);
            report.certificates.push(json!({ "extends_by": plane_json(space, set.k(), p) }));
        }
    }
    Ok(())
}

fn characteristics_part(report: &mut Report, space: &Space, set: &PlaneSet) -> Result<()> {
    let ch = characteristics(space, set)?;
    report.find("n_1", ch.n1);
    report.find("n_(n-1)", ch.n_hyper);
    report.certificates.push(json!({
        "s_1": ch.line_span.as_ref().map(subspace_json),
        "s_(n-1)": ch.hyperplane_meet.as_ref().map(subspace_json),
        "N_1": ch.lines.len(),
        "N_(n-1)": ch.hyperplanes.len(),
    }));
    Ok(())
}

fn semilinear_json(h: &SemilinearMap) -> Value {
    json!({ "matrix": matrix_json(h.matrix()), "sigma_exponent": h.sigma() })
}

fn witness_json(space: &Space, f: &GrassmannMap, w: &Witness) -> Value {
    match w {
        Witness::Pair(a, b) => json!({
            "pair": [plane_json(space, f.k_dom(), *a), plane_json(space, f.k_dom(), *b)],
        }),
        Witness::Hyperplane { index, inverse } => json!({
            "hyperplane": plane_json(space, space.n() - 1, *index), "inverse": inverse,
        }),
        Witness::System { lines, inverse } => json!({
            "coordinate_system": crate::report::lines_json(space, lines), "inverse": inverse,
        }),
        Witness::Degenerate(why) => json!({ "degenerate": why }),
    }
}

pub fn classify_table(path: &str) -> Result<Report> {
    let text = read(path)?;
    let (space, f) = read_map_table(&text).map_err(|source| CliError::Format { path: path.to_string(), source })?;
    let mut report = Report::new(
        vec!["classify".into(), format!("--in={path}")],
        json!({ "q": space.q(), "n": space.n(), "k": f.k_dom(), "k'": f.k_cod() }),
    );
    if !f.is_transformation() {
        return Err(CliError::Precondition(format!(
            "classification needs a transformation of G_k, got G_{} -> G_{}",
            f.k_dom(),
            f.k_cod()
        )));
    }
    let result = classify(&space, &f)?;
    report.find("verified", result.verified);
    match &result.variant {
        Classification::Linear(h) => {
            report.find("variant", "linear");
            report.find("form_composed", false);
            report.certificates.push(semilinear_json(h));
        }
        Classification::FormComposed { form, map } => {
            report.find("variant", "form_composed");
            report.find("form_composed", true);
            let mut cert = semilinear_json(map);
            cert["form_gram"] = matrix_json(form.gram());
            report.certificates.push(cert);
        }
        Classification::NotClassifiable(w) => {
            report.find("variant", "not_classifiable");
            report.verdict = Verdict::Fail;
            report.certificates.push(json!({ "witness": witness_json(&space, &f, w) }));
        }
    }
    Ok(report)
}
