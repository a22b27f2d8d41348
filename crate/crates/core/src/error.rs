//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("quadrature tolerance not met: requested {requested:e}, estimated error {achieved:e} at {panels} panels")]
    ToleranceNotMet {
        requested: f64,
        achieved: f64,
        panels: usize,
    },

    #[error("atom index {0} outside the admitted window")]
    IndexOutOfWindow(usize),

    #[error("derivative order {order} exceeds the materialized maximum {m_max}")]
    OrderExceeded { order: usize, m_max: usize },

    #[error("vectors are not orthonormal: max Gram deviation {0:e}")]
    NotOrthonormal(f64),

    #[error("window exhausted: scale {needed} required but the window stops at {j_min}")]
    WindowExhausted { needed: i32, j_min: i32 },

    #[error("insufficient decay: no candidate for pair {pair} meets threshold {threshold:e}")]
    InsufficientDecay { pair: usize, threshold: f64 },

    #[error("{what}: measured {measured:e} exceeds bound {bound:e}")]
    BoundViolated {
        what: String,
        measured: f64,
        bound: f64,
    },

    #[error("inequality violated at pair {pair}: {lhs:e} > {rhs:e} + slack")]
    InequalityViolated { pair: usize, lhs: f64, rhs: f64 },

    #[error("rank-deficient plan: {0}")]
    RankDeficientPlan(String),

    #[error("inconsistent plan: {0}")]
    InconsistentPlan(String),

    #[error("declared norm bound exceeded: computed {computed:e} > declared {declared:e}")]
    NormBoundExceeded { computed: f64, declared: f64 },

    #[error("coefficient budget exceeded: sum of |z| = {0} > 1")]
    CoefficientBudgetExceeded(f64),

    #[error("sample construction failure: {0}")]
    SampleConstruction(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error at {file}:{line}: {msg}")]
    Parse {
        file: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
