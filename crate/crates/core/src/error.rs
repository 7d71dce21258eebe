use thiserror::Error;

/// Errors raised by the simulator and its solvers.
#[derive(Debug, Error)]
pub enum WnvError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("zero channel matrix for SP {sp} in cell {cell}")]
    ZeroChannel { cell: usize, sp: usize },

    #[error("ill-conditioned channel for ZF precoding of SP {sp} in cell {cell} (condition number {condition:.3e})")]
    SingularChannel { cell: usize, sp: usize, condition: f64 },

    #[error("non-finite value in solver input: {0}")]
    NonFinite(&'static str),

    #[error("bisection failed to bracket the power constraint after {0} doublings")]
    BracketFailure(usize),

    #[error("cell {cell}: {source}")]
    Cell {
        cell: usize,
        #[source]
        source: Box<WnvError>,
    },

    #[error("slot {slot}: {source}")]
    Slot {
        slot: usize,
        #[source]
        source: Box<WnvError>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl WnvError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        WnvError::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn in_cell(self, cell: usize) -> Self {
        WnvError::Cell {
            cell,
            source: Box::new(self),
        }
    }

    pub(crate) fn in_slot(self, slot: usize) -> Self {
        WnvError::Slot {
            slot,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, WnvError>;
