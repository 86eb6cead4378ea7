use thiserror::Error;

/// Errors raised by the core model and planning routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value for {0}")]
    NonFinite(&'static str),
    #[error("latitude/longitude out of range: {lat}, {lon}")]
    InvalidGeoPoint { lat: f64, lon: f64 },
    #[error("point is more than one degree from the local origin")]
    OutsideLocalWindow,
    #[error("invalid servo calibration: {0}")]
    InvalidCalibration(&'static str),
    #[error("time step {0} s outside (0, 0.1]")]
    BadTimeStep(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(&'static str),
    #[error("sample was logged without a ground-velocity record")]
    MissingGroundVelocity,
    #[error("sample kind carries no vector reading")]
    NotAVectorSample,
    #[error("grid layers do not match rows x cols")]
    GridShape,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
