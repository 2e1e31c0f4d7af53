use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("dimension {dim} exceeds the dense cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("layout error: {0}")]
    Layout(String),

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not unitary (residual {residual:.3e})")]
    NotUnitary { residual: f64 },

    #[error("not a projector: {0}")]
    NotProjector(String),

    #[error("not a decomposition of the identity: {0}")]
    NotDecomposition(String),

    #[error("state is not normalized (norm {norm})")]
    Unnormalized { norm: f64 },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("conditioning event has probability {prob:.3e}; conditional is undefined")]
    UndefinedConditional { prob: f64 },

    #[error("unknown label: {0}")]
    UnknownLabel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("family is inconsistent (max off-diagonal {max_offdiag:.3e} > {threshold:.3e}); probabilities are undefined")]
    Inconsistent { max_offdiag: f64, threshold: f64 },

    #[error("state and reduced forms of the decoherence functional disagree by {deviation:.3e}")]
    DualFormMismatch { deviation: f64 },

    #[error("dynamics does not factor across the A|BC cut (residual {residual:.3e})")]
    NonFactorizingDynamics { residual: f64 },
}
