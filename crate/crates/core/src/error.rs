use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integer {value} is outside the {bits}-bit two's-complement range")]
    LatticeRange { value: i64, bits: u32 },
    #[error("source value {value} exceeds the quantizer bound {s_max}")]
    SourceRange { value: f64, s_max: f64 },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("active set is empty")]
    EmptyActiveSet,
    #[error("active device has a zero channel gain")]
    ZeroChannelGain,
    #[error("beamformer norm {norm} is not 1")]
    NonUnitBeamformer { norm: f64 },
    #[error("exhaustive search over {devices} devices refused (limit {limit})")]
    TooManyDevices { devices: usize, limit: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("NMSE is undefined when every true sum is zero")]
    UndefinedNmse,
}

impl Error {
    pub(crate) const fn invalid(name: &'static str, reason: &'static str) -> Self {
        Self::InvalidParameter { name, reason }
    }
}
