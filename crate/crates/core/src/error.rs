use thiserror::Error;

/// Which of the two ensembles an error or operator refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
        }
    }

    pub fn from_number(n: usize) -> Option<Self> {
        match n {
            1 => Some(Mode::One),
            2 => Some(Mode::Two),
            _ => None,
        }
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock level ({m1}, {m2}) outside the truncated space [0, {max1}] x [0, {max2}]")]
    IndexOutOfRange {
        m1: usize,
        m2: usize,
        max1: usize,
        max2: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("the intensity formula needs N1 = N2 and gamma1 = gamma2")]
    AsymmetricParams,

    #[error("window too short: {found} samples, need at least {needed}")]
    WindowTooShort { found: usize, needed: usize },

    #[error("moment equations are closed only for the zeroth-order linear model")]
    NotLinearModel,

    #[error("spin space too large: dimension {dim} exceeds the limit {limit}")]
    ResourceGuard { dim: usize, limit: usize },

    #[error("truncation inadequate for ensemble {mode} at t = {t}")]
    CutoffExceeded { mode: Mode, t: f64 },

    #[error("low-excitation condition violated for ensemble {mode} at t = {t}")]
    ValidityViolated { mode: Mode, t: f64 },

    #[error("non-finite state at t = {t}")]
    NumericalBlowup { t: f64 },

    #[error("no adequate cutoff found up to M = {ceiling}")]
    CutoffSearchFailed { ceiling: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
