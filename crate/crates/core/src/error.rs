use thiserror::Error;

/// Errors raised by the samplers, solvers and simulators.
///
/// Every variant carries the name of the module that raised it so messages
/// read as `<module>: <kind>: <violated precondition>`.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{module}: domain error: {msg}")]
    Domain { module: &'static str, msg: String },

    #[error("{module}: stability violated: {msg}")]
    Stability { module: &'static str, msg: String },

    #[error("{module}: divergence guard tripped: {msg}")]
    Divergence { module: &'static str, msg: String },

    #[error("{module}: capacity exceeded: {msg} (bound {bound})")]
    Capacity {
        module: &'static str,
        msg: String,
        bound: usize,
    },

    #[error("{module}: no optimal concurrency: {msg}")]
    NoOptimum { module: &'static str, msg: String },

    #[error("{module}: internal invariant violated: {msg}")]
    Invariant { module: &'static str, msg: String },
}

impl Error {
    pub(crate) fn domain(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn stability(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Stability {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn divergence(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Divergence {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn capacity(module: &'static str, msg: impl Into<String>, bound: usize) -> Self {
        Error::Capacity {
            module,
            msg: msg.into(),
            bound,
        }
    }

    pub(crate) fn no_optimum(module: &'static str, msg: impl Into<String>) -> Self {
        Error::NoOptimum {
            module,
            msg: msg.into(),
        }
    }

    pub(crate) fn invariant(module: &'static str, msg: impl Into<String>) -> Self {
        Error::Invariant {
            module,
            msg: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
