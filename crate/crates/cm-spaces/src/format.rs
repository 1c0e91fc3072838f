//! JSON interchange formats.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) so output is
//! byte-reproducible; non-finite values become `null`. Complex numbers are
//! two-element arrays `[re, im]`.

use std::collections::BTreeMap;

use cm_spaces_core::autos::{AutoProgram, AutoStep, BaseFlow, FlowDirection, Sl2Matrix};
use cm_spaces_core::cm2::{gaussian_rational, Cm2Coords, Cm2Generators, GaussianRational};
use cm_spaces_core::flex::{FlexSummary, SemiHomReport, SpanReport};
use cm_spaces_core::linalg::{c64, CMatrix, C64};
use cm_spaces_core::{FSpec, Fingerprint, MatrixPair, WilsonChartPoint};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::de::Error as _;
use serde::ser::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::CliError;

/// A real number in the fixed output format.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(format_real(self.0))
            .map_err(S::Error::custom)?
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        if v.is_finite() {
            Ok(Real(v))
        } else {
            Err(D::Error::custom("non-finite number"))
        }
    }
}

/// A complex number as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cx(pub C64);

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [Real(self.0.re), Real(self.0.im)].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Cx {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [re, im] = <[Real; 2]>::deserialize(d)?;
        Ok(Cx(c64(re.0, im.0)))
    }
}

pub fn cx_vec(v: &[C64]) -> Vec<Cx> {
    v.iter().copied().map(Cx).collect()
}

pub fn from_cx(v: &[Cx]) -> Vec<C64> {
    v.iter().map(|c| c.0).collect()
}

pub fn reals(v: &[f64]) -> Vec<Real> {
    v.iter().copied().map(Real).collect()
}

pub fn matrix_rows(m: &CMatrix) -> Vec<Vec<Cx>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| Cx(m[(i, j)])).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &[Vec<Cx>], n: usize, name: &str) -> Result<CMatrix, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        return Err(format!("{name} must be {n} x {n}"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j].0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairJson {
    pub n: usize,
    #[serde(rename = "X")]
    pub x: Vec<Vec<Cx>>,
    #[serde(rename = "Y")]
    pub y: Vec<Vec<Cx>>,
}

impl PairJson {
    pub fn from_pair(p: &MatrixPair) -> Self {
        Self {
            n: p.n(),
            x: matrix_rows(p.x()),
            y: matrix_rows(p.y()),
        }
    }

    pub fn to_pair(&self) -> Result<MatrixPair, String> {
        let x = rows_to_matrix(&self.x, self.n, "X")?;
        let y = rows_to_matrix(&self.y, self.n, "Y")?;
        MatrixPair::new(x, y).map_err(|e| e.to_string())
    }
}

/// Pair files: a single pair, a bare list, or any object with a `pairs` list
/// (such as the output of `sample`).
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum PairFileIn {
    One(PairJson),
    List(Vec<PairJson>),
    Wrapped { pairs: Vec<PairJson> },
    /// Output of `flow`, so programs can be chained.
    Results { results: Vec<ResultIn> },
}

#[derive(Debug, Clone, Deserialize)]
struct ResultIn {
    pair: Option<PairJson>,
}

pub fn parse_pair_file(text: &str) -> Result<Vec<MatrixPair>, String> {
    let parsed: PairFileIn = serde_json::from_str(text).map_err(|e| format!("not a pair file: {e}"))?;
    let list = match parsed {
        PairFileIn::One(p) => vec![p],
        PairFileIn::List(v) | PairFileIn::Wrapped { pairs: v } => v,
        PairFileIn::Results { results } => results
            .into_iter()
            .enumerate()
            .map(|(i, r)| r.pair.ok_or_else(|| format!("result {i} carries no pair")))
            .collect::<Result<_, _>>()?,
    };
    list.iter()
        .enumerate()
        .map(|(i, p)| p.to_pair().map_err(|e| format!("pair {i}: {e}")))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WilsonJson {
    pub lambdas: Vec<Cx>,
    pub alphas: Vec<Cx>,
}

impl WilsonJson {
    pub fn from_point(w: &WilsonChartPoint) -> Self {
        Self {
            lambdas: cx_vec(&w.lambdas),
            alphas: cx_vec(&w.alphas),
        }
    }

    pub fn to_point(&self) -> Result<WilsonChartPoint, String> {
        WilsonChartPoint::new(from_cx(&self.lambdas), from_cx(&self.alphas)).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintJson {
    #[serde(rename = "eigX")]
    pub eig_x: Vec<Cx>,
    #[serde(rename = "eigY")]
    pub eig_y: Vec<Cx>,
    pub trace_words: BTreeMap<String, Cx>,
}

impl From<&Fingerprint> for FingerprintJson {
    fn from(f: &Fingerprint) -> Self {
        Self {
            eig_x: cx_vec(&f.eig_x),
            eig_y: cx_vec(&f.eig_y),
            trace_words: f.trace_words.iter().map(|(k, v)| (k.clone(), Cx(*v))).collect(),
        }
    }
}

// Programs.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseJson {
    pub kind: String,
    pub poly: Vec<Cx>,
    /// Time scale of the base flow; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Cx>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum StepJson {
    #[serde(rename = "cm_flow_Y")]
    CmFlowY { poly: Vec<Cx>, t: Cx },
    #[serde(rename = "cm_flow_X")]
    CmFlowX { poly: Vec<Cx>, t: Cx },
    #[serde(rename = "sl2")]
    Sl2 {
        #[serde(rename = "A")]
        a: [[Cx; 2]; 2],
    },
    #[serde(rename = "transpose_swap")]
    TransposeSwap,
    #[serde(rename = "shear")]
    Shear { base: BaseJson, f: String, t: Cx },
    #[serde(rename = "overshear")]
    Overshear { base: BaseJson, f: String, t: Cx },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramJson {
    pub steps: Vec<StepJson>,
}

fn base_from_json(b: &BaseJson) -> Result<BaseFlow, String> {
    let direction = match b.kind.as_str() {
        "cm_flow_Y" => FlowDirection::Y,
        "cm_flow_X" => FlowDirection::X,
        other => return Err(format!("base flow kind must be cm_flow_Y or cm_flow_X, found `{other}`")),
    };
    let mut base = BaseFlow::new(direction, from_cx(&b.poly));
    if let Some(t) = b.t {
        base.scale = t.0;
    }
    Ok(base)
}

fn base_to_json(b: &BaseFlow) -> BaseJson {
    BaseJson {
        kind: match b.direction {
            FlowDirection::Y => "cm_flow_Y".into(),
            FlowDirection::X => "cm_flow_X".into(),
        },
        poly: cx_vec(&b.poly),
        t: Some(Cx(b.scale)),
    }
}

fn fspec(source: &str) -> Result<FSpec, String> {
    FSpec::parse(source).map_err(|e| e.to_string())
}

impl ProgramJson {
    pub fn to_program(&self) -> Result<AutoProgram, String> {
        let steps = self
            .steps
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let step = match s {
                    StepJson::CmFlowY { poly, t } => AutoStep::CmFlowY { poly: from_cx(poly), t: t.0 },
                    StepJson::CmFlowX { poly, t } => AutoStep::CmFlowX { poly: from_cx(poly), t: t.0 },
                    StepJson::Sl2 { a } => {
                        let m: Sl2Matrix = [[a[0][0].0, a[0][1].0], [a[1][0].0, a[1][1].0]];
                        AutoStep::Sl2 { a: m }
                    }
                    StepJson::TransposeSwap => AutoStep::TransposeSwap,
                    StepJson::Shear { base, f, t } => AutoStep::Shear {
                        base: base_from_json(base).map_err(|e| format!("step {i}: {e}"))?,
                        f: fspec(f).map_err(|e| format!("step {i}: {e}"))?,
                        t: t.0,
                    },
                    StepJson::Overshear { base, f, t } => AutoStep::Overshear {
                        base: base_from_json(base).map_err(|e| format!("step {i}: {e}"))?,
                        f: fspec(f).map_err(|e| format!("step {i}: {e}"))?,
                        t: t.0,
                    },
                };
                Ok(step)
            })
            .collect::<Result<Vec<_>, String>>();
        steps.map(AutoProgram::new)
    }

    pub fn from_program(p: &AutoProgram) -> Self {
        let steps = p
            .steps
            .iter()
            .map(|s| match s {
                AutoStep::CmFlowY { poly, t } => StepJson::CmFlowY { poly: cx_vec(poly), t: Cx(*t) },
                AutoStep::CmFlowX { poly, t } => StepJson::CmFlowX { poly: cx_vec(poly), t: Cx(*t) },
                AutoStep::Sl2 { a } => StepJson::Sl2 {
                    a: [[Cx(a[0][0]), Cx(a[0][1])], [Cx(a[1][0]), Cx(a[1][1])]],
                },
                AutoStep::TransposeSwap => StepJson::TransposeSwap,
                AutoStep::Shear { base, f, t } => StepJson::Shear {
                    base: base_to_json(base),
                    f: f.source().into(),
                    t: Cx(*t),
                },
                AutoStep::Overshear { base, f, t } => StepJson::Overshear {
                    base: base_to_json(base),
                    f: f.source().into(),
                    t: Cx(*t),
                },
            })
            .collect();
        Self { steps }
    }
}

pub fn parse_program(text: &str) -> Result<AutoProgram, String> {
    let p: ProgramJson = serde_json::from_str(text).map_err(|e| format!("not a program file: {e}"))?;
    p.to_program()
}

// 𝒞₂ coordinates.

/// `(num[0] + num[1]·i) / den`, with arbitrary-size integers on output.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactJson {
    pub num: [BigInt; 2],
    pub den: BigInt,
}

impl ExactJson {
    pub fn from_rational(z: &GaussianRational) -> Self {
        let den = z.re.denom().lcm(z.im.denom());
        let re = z.re.numer() * (&den / z.re.denom());
        let im = z.im.numer() * (&den / z.im.denom());
        Self { num: [re, im], den }
    }

    pub fn to_rational(&self) -> Result<GaussianRational, String> {
        let small = |b: &BigInt| b.to_i64().ok_or_else(|| String::from("exact component exceeds 64 bits"));
        let den = small(&self.den)?;
        if den == 0 {
            return Err("zero denominator".into());
        }
        Ok(gaussian_rational(small(&self.num[0])?, den, small(&self.num[1])?, den))
    }
}

fn raw_int(b: &BigInt) -> Box<RawValue> {
    RawValue::from_string(b.to_string()).expect("decimal integers are valid JSON")
}

impl Serialize for ExactJson {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out {
            num: [Box<RawValue>; 2],
            den: Box<RawValue>,
        }
        Out {
            num: [raw_int(&self.num[0]), raw_int(&self.num[1])],
            den: raw_int(&self.den),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ExactJson {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct In {
            num: [i64; 2],
            den: i64,
        }
        let v = In::deserialize(d)?;
        Ok(Self {
            num: [BigInt::from(v.num[0]), BigInt::from(v.num[1])],
            den: BigInt::from(v.den),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactCoordsJson {
    pub lambda: ExactJson,
    pub eps: ExactJson,
    pub x11: ExactJson,
    pub x21: ExactJson,
    pub delta: ExactJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cm2CoordsJson {
    pub lambda: Cx,
    pub eps: Cx,
    pub x11: Cx,
    pub x21: Cx,
    pub delta: Cx,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactCoordsJson>,
}

impl Cm2CoordsJson {
    pub fn from_coords(c: &Cm2Coords<C64>) -> Self {
        Self {
            lambda: Cx(c.lambda),
            eps: Cx(c.eps),
            x11: Cx(c.x11),
            x21: Cx(c.x21),
            delta: Cx(c.delta),
            exact: None,
        }
    }

    pub fn from_exact(c: &Cm2Coords<GaussianRational>) -> Self {
        let mut out = Self::from_coords(&c.to_c64());
        out.exact = Some(ExactCoordsJson {
            lambda: ExactJson::from_rational(&c.lambda),
            eps: ExactJson::from_rational(&c.eps),
            x11: ExactJson::from_rational(&c.x11),
            x21: ExactJson::from_rational(&c.x21),
            delta: ExactJson::from_rational(&c.delta),
        });
        out
    }

    pub fn to_coords(&self) -> Cm2Coords<C64> {
        Cm2Coords::new(self.lambda.0, self.eps.0, self.x11.0, self.x21.0, self.delta.0)
    }

    pub fn to_exact(&self) -> Option<Result<Cm2Coords<GaussianRational>, String>> {
        self.exact.as_ref().map(|e| {
            Ok(Cm2Coords::new(
                e.lambda.to_rational()?,
                e.eps.to_rational()?,
                e.x11.to_rational()?,
                e.x21.to_rational()?,
                e.delta.to_rational()?,
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cm2GeneratorsJson {
    pub d2: Cx,
    pub e2: Cx,
    #[serde(rename = "trY")]
    pub tr_y: Cx,
    #[serde(rename = "trX")]
    pub tr_x: Cx,
    pub w: Cx,
}

impl From<&Cm2Generators<C64>> for Cm2GeneratorsJson {
    fn from(g: &Cm2Generators<C64>) -> Self {
        Self {
            d2: Cx(g.d2),
            e2: Cx(g.e2),
            tr_y: Cx(g.tr_y),
            tr_x: Cx(g.tr_x),
            w: Cx(g.w),
        }
    }
}

// Flexibility reports.

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpanReportJson {
    pub n: usize,
    pub point: PairJson,
    pub orbit_rank: usize,
    pub combined_rank: usize,
    pub quotient_span: usize,
    pub passed: bool,
    /// `null` when no singular value was rejected.
    pub singular_value_gap: Real,
    pub reliable: bool,
    pub singular_values: Vec<Real>,
}

impl From<&SpanReport> for SpanReportJson {
    fn from(r: &SpanReport) -> Self {
        Self {
            n: r.n,
            point: PairJson::from_pair(&r.point),
            orbit_rank: r.orbit_rank,
            combined_rank: r.combined_rank,
            quotient_span: r.quotient_span,
            passed: r.passed,
            singular_value_gap: Real(r.singular_value_gap),
            reliable: r.reliable,
            singular_values: reals(&r.singular_values),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FlexSummaryJson {
    pub n: usize,
    pub samples: usize,
    pub passes: usize,
    pub flagged_unreliable: usize,
}

impl From<&FlexSummary> for FlexSummaryJson {
    fn from(s: &FlexSummary) -> Self {
        Self {
            n: s.n,
            samples: s.samples,
            passes: s.passes,
            flagged_unreliable: s.flagged_unreliable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiHomReportJson {
    pub n: usize,
    pub base: WilsonJson,
    pub w: Vec<Cx>,
    pub rank: usize,
    pub singular_value_gap: Real,
    pub reliable: bool,
    pub passed: bool,
    pub singular_values: Vec<Real>,
}

impl From<&SemiHomReport> for SemiHomReportJson {
    fn from(r: &SemiHomReport) -> Self {
        Self {
            n: r.n,
            base: WilsonJson::from_point(&r.base),
            w: cx_vec(&r.w),
            rank: r.rank,
            singular_value_gap: Real(r.singular_value_gap),
            reliable: r.reliable,
            passed: r.passed,
            singular_values: reals(&r.singular_values),
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}
