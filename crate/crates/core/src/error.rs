use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid pmf for class {class_id}: {reason}")]
    InvalidPmf { class_id: u32, reason: String },

    #[error("interval [{start}, {end}) is empty or not finite")]
    InvalidInterval { start: f64, end: f64 },

    #[error("query at {requested} precedes collected history (floor {floor})")]
    HistoryCollected { requested: f64, floor: f64 },

    #[error("all arrival rates are zero")]
    NoArrivals,

    #[error("reservation pmf given service {s} is undefined (no mass on that service time)")]
    UndefinedConditional { s: u32 },

    #[error("type (d = {d}, s = {s}) is outside the support")]
    OutOfSupport { d: u32, s: u32 },

    #[error("random walk needs strictly negative drift, got up-probability {p}")]
    NonNegativeDrift { p: f64 },

    #[error("truncation at n = {n_trunc} leaves Poisson tail mass {tail:e} (needs < 1e-10)")]
    TruncationTooShort { n_trunc: usize, tail: f64 },

    #[error(
        "exact evaluation needs about {work:e} state updates (limit {limit:e}); use the Monte Carlo estimator"
    )]
    ExactInfeasible { work: f64, limit: f64 },

    #[error("dynamic program exceeded the state-space guard of {bound} reachable states")]
    StateSpaceExceeded { bound: usize },

    #[error("state (t = {t}) is outside the solved horizon or capacity vector has wrong length")]
    InvalidState { t: u32 },

    #[error("inner price maximization for class {class} is not concave on its bracket")]
    NonConcave { class: u32 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
