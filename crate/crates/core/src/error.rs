use core::fmt;

/// Trigonometric denominator of the tight-binding coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Denominator {
    SinRight,
    SinLeft,
    Sin2Right,
    Sin2Left,
}

impl fmt::Display for Denominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Denominator::SinRight => "sin(phi - K/2)",
            Denominator::SinLeft => "sin(phi + K/2)",
            Denominator::Sin2Right => "sin(2 phi - K)",
            Denominator::Sin2Left => "sin(2 phi + K)",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("K = {k} is singular: {denominator} vanishes")]
    SingularMomentum { k: f64, denominator: Denominator },
    #[error("domain error: {0}")]
    Domain(&'static str),
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("numerical failure in {stage}: {detail} (value {value:e})")]
    Numerical {
        stage: &'static str,
        detail: &'static str,
        value: f64,
    },
    #[error("elimination polynomial has degree {0} after truncation, expected at most 8")]
    EliminationDegree(usize),
    #[error("connectivity signature is identical at both ends of [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
