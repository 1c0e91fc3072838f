use alloc::boxed::Box;
use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("size mismatch: n = {left} vs n = {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("not a member: sigma2/sigma1 = {ratio:e}")]
    NotMember { ratio: f64 },
    #[error("zero defect matrix")]
    ZeroDefect,
    #[error("singular conjugator: |det G| = {det:e}")]
    SingularConjugator { det: f64 },
    #[error("eigenvalue collision: relative separation {separation:e}")]
    EigenvalueCollision { separation: f64 },
    #[error("sampling exhausted after {attempts} rejected draws")]
    SamplingExhausted { attempts: usize },
    #[error("non-unimodular matrix: |det A - 1| = {deviation:e}")]
    NonUnimodular { deviation: f64 },
    #[error("not invariant: f changes along the base flow (slope {slope:e}, curvature {curvature:e})")]
    NotInvariant { slope: f64, curvature: f64 },
    #[error("not degree-one: {0}")]
    NotDegreeOne(String),
    #[error("step {index}: {inner}")]
    Step {
        index: usize,
        #[source]
        inner: Box<Error>,
    },
    #[error("invalid function spec: {0}")]
    FSpec(String),
    #[error("generator `{0}` is only defined for n = 2")]
    GeneratorNeedsN2(&'static str),
    #[error("off-variety input: constraint residual {residual:e}")]
    OffVariety { residual: f64 },
    #[error("x21 vanishes")]
    X21Vanishes,
    #[error("expected n = 2, found n = {0}")]
    NotN2(usize),
    #[error("base point not in chart: relative separation {separation:e}")]
    NotInChart { separation: f64 },
    #[error("invalid tolerance `{name}` = {value}")]
    InvalidTolerance { name: &'static str, value: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("eigenvalue computation did not converge")]
    NoConvergence,
}

impl Error {
    pub(crate) fn at_step(self, index: usize) -> Self {
        Error::Step {
            index,
            inner: Box::new(self),
        }
    }
}
