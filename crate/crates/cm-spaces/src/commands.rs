//! One function per subcommand. Each returns the JSON document to emit and
//! whether every asserted check passed.

use std::path::{Path, PathBuf};

use cm_spaces_core::cm2::{
    float_points, pair_to_cm2, verify_compatible_pair, verify_compatible_pair_on, Backend, CompatCertificate,
};
use cm_spaces_core::flex::{self, span_report};
use cm_spaces_core::invariants::{equiv_test, fingerprint as take_fingerprint};
use cm_spaces_core::linalg::c64;
use cm_spaces_core::pair::{sample as draw, SampleOptions};
use cm_spaces_core::{autos, EquivVerdict, MatrixPair, Member, Tolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::format::{
    self, matrix_rows, Cm2CoordsJson, Cm2GeneratorsJson, Cx, FingerprintJson, FlexSummaryJson, PairJson, ProgramJson,
    Real, SemiHomReportJson, SpanReportJson,
};
use crate::parallel::ordered_map;

/// Stated in outputs whose points come from the sampler.
pub const COVERAGE: &str = "generic points of the distinct-eigenvalue Wilson chart only";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub json: String,
    pub passed: bool,
}

impl Outcome {
    fn new<T: Serialize>(doc: &T, passed: bool) -> Result<Self, CliError> {
        Ok(Self {
            json: format::to_json(doc)?,
            passed,
        })
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn input_error(path: &Path, message: String) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        message,
    }
}

pub fn read_pairs(path: &Path) -> Result<Vec<MatrixPair>, CliError> {
    format::parse_pair_file(&read_text(path)?).map_err(|m| input_error(path, m))
}

pub fn validate_tolerances(tol: &Tolerances) -> Result<(), CliError> {
    tol.validate().map_err(|e| CliError::Usage(e.to_string()))
}

fn require_positive(name: &str, v: usize) -> Result<(), CliError> {
    if v == 0 {
        Err(CliError::Usage(format!("--{name} must be at least 1")))
    } else {
        Ok(())
    }
}

#[derive(Serialize)]
struct SampleDoc {
    kind: &'static str,
    passed: bool,
    n: usize,
    count: usize,
    seed: u64,
    coverage: &'static str,
    pairs: Vec<PairJson>,
}

pub fn sample(n: usize, count: usize, seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    require_positive("n", n)?;
    let members = draw(n, count, seed, tol, &SampleOptions::default())?;
    let doc = SampleDoc {
        kind: "sample",
        passed: true,
        n,
        count,
        seed,
        coverage: COVERAGE,
        pairs: members.iter().map(|m| PairJson::from_pair(m.pair())).collect(),
    };
    Outcome::new(&doc, true)
}

#[derive(Serialize)]
struct MembershipJson {
    index: usize,
    member: bool,
    sigma1: Real,
    sigma2: Real,
    ratio: Real,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct VerifyDoc {
    kind: &'static str,
    passed: bool,
    rank_tol: Real,
    reports: Vec<MembershipJson>,
}

pub fn verify(input: &Path, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    let pairs = read_pairs(input)?;
    let reports: Vec<MembershipJson> = ordered_map(&pairs, |index, p| match p.membership(tol) {
        Ok(m) => MembershipJson {
            index,
            member: m.member,
            sigma1: Real(m.sigma1),
            sigma2: Real(m.sigma2),
            ratio: Real(m.ratio),
            error: None,
        },
        Err(e) => MembershipJson {
            index,
            member: false,
            sigma1: Real(f64::NAN),
            sigma2: Real(f64::NAN),
            ratio: Real(f64::NAN),
            error: Some(e.to_string()),
        },
    });
    let passed = !reports.is_empty() && reports.iter().all(|r| r.member);
    let doc = VerifyDoc {
        kind: "verify",
        passed,
        rank_tol: Real(tol.rank_tol),
        reports,
    };
    Outcome::new(&doc, passed)
}

#[derive(Serialize)]
struct TraceEntry {
    step: usize,
    kind: &'static str,
    ratio: Real,
    member: bool,
}

#[derive(Serialize)]
struct FlowResult {
    index: usize,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pair: Option<PairJson>,
    trace: Vec<TraceEntry>,
}

#[derive(Serialize)]
struct FlowDoc {
    kind: &'static str,
    passed: bool,
    inverse: bool,
    program: ProgramJson,
    results: Vec<FlowResult>,
}

/// Runs `program` (or its inverse) over every pair of `input`.
pub fn flow(input: &Path, program: &Path, inverse: bool, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    let pairs = read_pairs(input)?;
    let prog = format::parse_program(&read_text(program)?).map_err(|m| input_error(program, m))?;
    let prog = if inverse { prog.inverse() } else { prog };
    prog.validate(tol).map_err(|e| input_error(program, e.to_string()))?;
    let kinds: Vec<&'static str> = prog.steps.iter().map(|s| s.kind()).collect();

    let results: Vec<FlowResult> = ordered_map(&pairs, |index, p| {
        let failed = |error: String| FlowResult {
            index,
            passed: false,
            error: Some(error),
            pair: None,
            trace: Vec::new(),
        };
        let member = match Member::new(p.clone(), tol) {
            Ok(m) => m,
            Err(e) => return failed(format!("input: {e}")),
        };
        match autos::run_program(&member, &prog, tol) {
            Ok(run) => {
                let trace: Vec<TraceEntry> = run
                    .trace
                    .iter()
                    .enumerate()
                    .map(|(step, &ratio)| TraceEntry {
                        step,
                        kind: kinds[step],
                        ratio: Real(ratio),
                        member: ratio < tol.rank_tol,
                    })
                    .collect();
                FlowResult {
                    index,
                    passed: trace.iter().all(|t| t.member),
                    error: None,
                    pair: Some(PairJson::from_pair(run.result.pair())),
                    trace,
                }
            }
            Err(e) => failed(e.to_string()),
        }
    });
    let passed = !results.is_empty() && results.iter().all(|r| r.passed);
    let doc = FlowDoc {
        kind: "flow",
        passed,
        inverse,
        program: ProgramJson::from_program(&prog),
        results,
    };
    Outcome::new(&doc, passed)
}

#[derive(Serialize)]
struct EquivResult {
    index: usize,
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    component: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    difference: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conjugator: Option<Vec<Vec<Cx>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct EquivDoc {
    kind: &'static str,
    /// True iff every pair was found equivalent.
    passed: bool,
    word_len: usize,
    equivalent: usize,
    distinct: usize,
    inconclusive: usize,
    results: Vec<EquivResult>,
}

/// Compares the `i`-th pair of `first` with the `i`-th pair of `second`.
pub fn equiv(first: &Path, second: &Path, word_len: usize, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    let a = read_pairs(first)?;
    let b = read_pairs(second)?;
    if a.len() != b.len() {
        return Err(CliError::Usage(format!(
            "the two --in files hold {} and {} pairs; counts must match",
            a.len(),
            b.len()
        )));
    }
    let zipped: Vec<(MatrixPair, MatrixPair)> = a.into_iter().zip(b).collect();
    let results: Vec<EquivResult> = ordered_map(&zipped, |index, (p, q)| {
        let mut r = EquivResult {
            index,
            verdict: "error",
            component: None,
            difference: None,
            conjugator: None,
            error: None,
        };
        let verdict = Member::new(p.clone(), tol)
            .and_then(|p| Ok((p, Member::new(q.clone(), tol)?)))
            .and_then(|(p, q)| equiv_test(&p, &q, word_len, tol));
        match verdict {
            Ok(v) => {
                r.verdict = v.label();
                match v {
                    EquivVerdict::Equivalent { conjugator } => r.conjugator = conjugator.as_ref().map(matrix_rows),
                    EquivVerdict::Distinct { component, difference } => {
                        r.component = Some(component);
                        r.difference = Some(Real(difference));
                    }
                    EquivVerdict::Inconclusive => {}
                }
            }
            Err(e) => r.error = Some(e.to_string()),
        }
        r
    });
    let count = |label: &str| results.iter().filter(|r| r.verdict == label).count();
    let (equivalent, distinct, inconclusive) = (count("equivalent"), count("distinct"), count("inconclusive"));
    let passed = !results.is_empty() && equivalent == results.len();
    let doc = EquivDoc {
        kind: "equiv",
        passed,
        word_len,
        equivalent,
        distinct,
        inconclusive,
        results,
    };
    Outcome::new(&doc, passed)
}

#[derive(Serialize)]
struct FingerprintEntry {
    index: usize,
    #[serde(flatten)]
    fingerprint: Option<FingerprintJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct FingerprintDoc {
    kind: &'static str,
    passed: bool,
    word_len: usize,
    fingerprints: Vec<FingerprintEntry>,
}

pub fn fingerprint(input: &Path, word_len: usize, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    let pairs = read_pairs(input)?;
    let fingerprints: Vec<FingerprintEntry> = ordered_map(&pairs, |index, p| {
        match Member::new(p.clone(), tol).and_then(|m| take_fingerprint(&m, word_len)) {
            Ok(f) => FingerprintEntry {
                index,
                fingerprint: Some(FingerprintJson::from(&f)),
                error: None,
            },
            Err(e) => FingerprintEntry {
                index,
                fingerprint: None,
                error: Some(e.to_string()),
            },
        }
    });
    let passed = !fingerprints.is_empty() && fingerprints.iter().all(|f| f.error.is_none());
    let doc = FingerprintDoc {
        kind: "fingerprint",
        passed,
        word_len,
        fingerprints,
    };
    Outcome::new(&doc, passed)
}

#[derive(Serialize)]
struct FlexDoc {
    kind: &'static str,
    passed: bool,
    seed: u64,
    coverage: &'static str,
    summary: FlexSummaryJson,
    reports: Vec<SpanReportJson>,
}

/// Passes iff every sampled point spans with a reliable gap.
pub fn flex_check(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    require_positive("n", n)?;
    require_positive("samples", samples)?;
    let points = draw(n, samples, seed, tol, &SampleOptions::default())?;
    let reports = ordered_map(&points, |_, p| span_report(p, tol));
    let summary = flex::summarize(n, &reports);
    let passed = summary.passes == samples && summary.flagged_unreliable == 0;
    let doc = FlexDoc {
        kind: "flex_check",
        passed,
        seed,
        coverage: COVERAGE,
        summary: FlexSummaryJson::from(&summary),
        reports: reports.iter().map(SpanReportJson::from).collect(),
    };
    Outcome::new(&doc, passed)
}

#[derive(Serialize)]
struct SemiHomEntry {
    seed: u64,
    #[serde(flatten)]
    report: Option<SemiHomReportJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct SemiHomDoc {
    kind: &'static str,
    passed: bool,
    n: usize,
    coverage: &'static str,
    reports: Vec<SemiHomEntry>,
}

/// `samples` base points with seeds `seed, seed + 1, …`.
pub fn semihom_check(n: usize, samples: usize, seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    require_positive("n", n)?;
    require_positive("samples", samples)?;
    let seeds: Vec<u64> = (0..samples as u64).map(|i| seed.wrapping_add(i)).collect();
    let reports: Vec<SemiHomEntry> = ordered_map(&seeds, |_, &s| match flex::semi_homogeneity_check(n, s, tol) {
        Ok(r) => SemiHomEntry {
            seed: s,
            report: Some(SemiHomReportJson::from(&r)),
            error: None,
        },
        Err(e) => SemiHomEntry {
            seed: s,
            report: None,
            error: Some(e.to_string()),
        },
    });
    let passed = reports.iter().all(|r| r.report.as_ref().is_some_and(|r| r.passed));
    let doc = SemiHomDoc {
        kind: "semihom_check",
        passed,
        n,
        coverage: COVERAGE,
        reports,
    };
    Outcome::new(&doc, passed)
}

#[derive(Serialize)]
struct CanonicalEntry {
    index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    coords: Option<Cm2CoordsJson>,
    /// The distinct members of the `ℤ₂ × ℤ₂` orbit.
    #[serde(skip_serializing_if = "Option::is_none")]
    orbit: Option<Vec<Cm2CoordsJson>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    generators: Option<Cm2GeneratorsJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    constraint_residual: Option<Real>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct CanonicalDoc {
    kind: &'static str,
    passed: bool,
    results: Vec<CanonicalEntry>,
}

pub fn cm2_canonical(input: &Path, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    let pairs = read_pairs(input)?;
    let results: Vec<CanonicalEntry> = ordered_map(&pairs, |index, p| {
        let coords = Member::new(p.clone(), tol).and_then(|m| pair_to_cm2(&m, tol));
        let full = coords.and_then(|c| Ok((c.generators()?, c)));
        match full {
            Ok((g, c)) => CanonicalEntry {
                index,
                coords: Some(Cm2CoordsJson::from_coords(&c)),
                orbit: Some(c.distinct_orbit(tol.equiv_tol).iter().map(Cm2CoordsJson::from_coords).collect()),
                generators: Some(Cm2GeneratorsJson::from(&g)),
                constraint_residual: Some(Real(c.relative_residual())),
                error: None,
            },
            Err(e) => CanonicalEntry {
                index,
                coords: None,
                orbit: None,
                generators: None,
                constraint_residual: None,
                error: Some(e.to_string()),
            },
        }
    });
    let passed = !results.is_empty()
        && results
            .iter()
            .all(|r| r.constraint_residual.is_some_and(|v| v.0 <= tol.variety_tol));
    let doc = CanonicalDoc {
        kind: "cm2_canonical",
        passed,
        results,
    };
    Outcome::new(&doc, passed)
}

#[derive(Serialize)]
struct FailureJson {
    point: usize,
    detail: String,
}

#[derive(Serialize)]
struct ClauseJson {
    name: &'static str,
    passed: bool,
    max_residual: Real,
    checks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<FailureJson>,
}

#[derive(Serialize)]
struct CompatDoc {
    kind: &'static str,
    passed: bool,
    backend: &'static str,
    points: usize,
    theta1: &'static str,
    theta2: &'static str,
    a: &'static str,
    clauses: Vec<ClauseJson>,
}

fn compat_doc(cert: &CompatCertificate) -> CompatDoc {
    CompatDoc {
        kind: "cm2_compat_check",
        passed: cert.passed,
        backend: cert.backend.name(),
        points: cert.points,
        theta1: "d/d lambda",
        theta2: "d/d x11",
        a: "2 lambda + eps",
        clauses: cert
            .clauses
            .iter()
            .map(|c| ClauseJson {
                name: c.clause.name(),
                passed: c.passed,
                max_residual: Real(c.max_residual),
                checks: c.checks,
                failure: c.failure.as_ref().map(|f| FailureJson {
                    point: f.point,
                    detail: f.detail.clone(),
                }),
            })
            .collect(),
    }
}

/// With `exact`, the 125-point Gaussian-rational grid; otherwise `samples`
/// random floating-point points checked to `variety_tol`.
pub fn cm2_compat_check(exact: bool, samples: usize, seed: u64, tol: &Tolerances) -> Result<Outcome, CliError> {
    validate_tolerances(tol)?;
    let cert = if exact {
        verify_compatible_pair()
    } else {
        require_positive("samples", samples)?;
        let steps = [c64(1.0, 0.0), c64(-0.5, 0.25)];
        verify_compatible_pair_on(&float_points(seed, samples), &steps, tol.variety_tol, Backend::Float)
    };
    Outcome::new(&compat_doc(&cert), cert.passed)
}

#[derive(Deserialize)]
struct AnyOutput {
    kind: String,
    passed: bool,
}

#[derive(Serialize)]
struct ReportEntry {
    path: String,
    kind: String,
    passed: bool,
}

#[derive(Serialize)]
struct ReportDoc {
    kind: &'static str,
    passed: bool,
    total: usize,
    failed: usize,
    entries: Vec<ReportEntry>,
}

/// Aggregates outputs of the other subcommands.
pub fn report(inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Usage("report needs at least one --in".into()));
    }
    let entries = inputs
        .iter()
        .map(|path| {
            let text = read_text(path)?;
            let out: AnyOutput = serde_json::from_str(&text)
                .map_err(|e| input_error(path, format!("not a cm-spaces output: {e}")))?;
            Ok(ReportEntry {
                path: path.display().to_string(),
                kind: out.kind,
                passed: out.passed,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let failed = entries.iter().filter(|e| !e.passed).count();
    let doc = ReportDoc {
        kind: "report",
        passed: failed == 0,
        total: entries.len(),
        failed,
        entries,
    };
    Outcome::new(&doc, failed == 0)
}

