use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("weighted mass of the measure is not finite: {0}")]
    NonFiniteWeightedMass(String),
    #[error("quadrature did not reach tolerance {requested:e} (estimate {achieved:e})")]
    QuadratureFailure { achieved: f64, requested: f64 },
    #[error("cannot decide convergence of the second moment at {at}")]
    Indeterminate { at: f64 },
    #[error("inversion meets an atom at the pole")]
    AtomAtPole,
    #[error("pushforward not representable: {0}")]
    UnsupportedPushforward(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Weyl function value -i hit while forming the Livsic function")]
    PoleAtEvaluation,
    #[error("value 1 has no preimage under the Cayley map")]
    DegenerateValue,
    #[error("epsilon extrapolation of the boundary value at {omega} did not settle")]
    ExtrapolationDivergence { omega: f64 },
    #[error("threshold samples are not monotone")]
    InconclusiveThreshold,
    #[error("Moebius decomposition produced a non-affine outer factor")]
    DecompositionFailure,
    #[error("resolvent denominator vanishes at z = {z}")]
    ResonancePoint { z: crate::Complex },
    #[error("point {at} is not quasi-regular")]
    PointNotQuasiRegular { at: f64 },
    #[error("resolvent matrix is numerically singular")]
    SingularResolvent,
    #[error("z = {z} is an eigenvalue of the adjoint")]
    EigenvalueHit { z: crate::Complex },
    #[error("discrete model has a node at zero")]
    NodeAtZero,
}

pub type Result<T> = std::result::Result<T, Error>;
