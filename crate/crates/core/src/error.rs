//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("block orders differ: {left} vs {right}")]
    OrderMismatch { left: u32, right: u32 },

    #[error("block of order 0 cannot be split")]
    SplitOrderZero,

    #[error("bad sign literal: expected only '+' and '-', got {found:?}")]
    BadSignLiteral { found: char },

    #[error("literal length {len} is not 2^{order}")]
    LiteralLengthMismatch { len: usize, order: u32 },

    #[error("literal length {len} is not a power of two")]
    LiteralLengthNotPowerOfTwo { len: usize },

    #[error("prefix horizon {have} too small, transform of scale {need} required")]
    HorizonTooSmall { need: u32, have: u32 },

    #[error("cannot step from the top of simulated tower {tower}")]
    TopOfTower { tower: u32 },

    #[error("point lies in a spacer, not in a copy of tower {tower}")]
    NotInTower { tower: u32 },

    #[error("unsupported construction: {0}")]
    UnsupportedConstruction(String),

    #[error("construction parse error: {0}")]
    ParseConstruction(String),

    #[error("event parse error: {0}")]
    ParseEvent(String),

    #[error("tower height overflows 64-bit range at tower {tower}")]
    HeightOverflow { tower: u32 },

    #[error("level {level} out of range for tower {tower} (height {height})")]
    LevelOutOfRange { tower: u32, level: u64, height: u64 },

    #[error("tower extension deeper than the configured bound {bound} and the tail does not stabilize")]
    ResolutionDepth { bound: u32 },

    #[error("character sets have mismatched horizons")]
    HorizonMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
