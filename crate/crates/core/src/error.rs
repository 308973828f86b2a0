use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("array index {index} out of range for {count} arrays")]
    ArrayIndex { index: usize, count: usize },

    #[error("mode index {index} out of range for a codebook of {count} modes")]
    ModeIndex { index: usize, count: usize },

    #[error("azimuths violate the minimum separation: arrays {first} and {second} are {distance} rad apart (< {min})")]
    SeparationViolated {
        first: usize,
        second: usize,
        distance: f64,
        min: f64,
    },

    #[error("no feasible position remains for array {array}")]
    Infeasible { array: usize },

    #[error("vector is not unit length (norm {norm})")]
    NotUnitVector { norm: f64 },

    #[error("the steering grid does not contain the default mode (0, 0)")]
    MissingDefaultMode,

    #[error("selection for sample {sample}, array {array} is not one-hot at antenna {antenna}")]
    NotOneHot {
        sample: usize,
        array: usize,
        antenna: usize,
    },

    #[error("selection shape mismatch: {0}")]
    SelectionShape(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rejection sampling gave up after {attempts} attempts; region and coverage barely intersect")]
    RejectionExhausted { attempts: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
