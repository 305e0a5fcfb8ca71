use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shift {z} is within tolerance of the spectrum (nearest eigenvalue {nearest})")]
    SingularShift { z: Complex64, nearest: Complex64 },

    #[error("no eigenvalue within {tol:e} of {center}")]
    NoEigenvalueNear { center: Complex64, tol: f64 },

    #[error("subspace basis is rank deficient (rank {rank} < {columns} columns)")]
    RankDeficient { rank: usize, columns: usize },

    #[error("eigenvalue {center} is not isolated: gap {gap:e} below guard {guard:e}")]
    NotIsolated { center: Complex64, gap: f64, guard: f64 },

    #[error("contour quadrature stalled at {nodes} nodes (last update {last_update:e} > tol {tol:e})")]
    QuadratureStall { nodes: usize, last_update: f64, tol: f64 },

    #[error("βB − z is singular for β = {beta}, z = {z}")]
    ShiftInSpectrum { beta: f64, z: Complex64 },

    #[error("numerical rank of the projector is ambiguous (singular value {singular_value:e})")]
    RankCollapse { singular_value: f64 },

    #[error("shift {z} lies in the spectrum of the compressed operator")]
    EffectiveSingular { z: Complex64 },

    #[error("operator {which} is not self-adjoint (‖M − M*‖ = {defect:e})")]
    NotSelfAdjoint { which: &'static str, defect: f64 },

    #[error("Riesz projector is not orthogonal (‖P − P*‖ = {defect:e})")]
    NonOrthogonalProjector { defect: f64 },

    #[error("Schur complement is numerically singular at β = {beta}")]
    SchurSingular { beta: f64 },

    #[error("Q restricted to the domain complement is not invertible")]
    ComplementNotInvertible,

    #[error("Neumann series for S⁻¹ diverges: first-term norm {first_term_norm} ≥ 1")]
    SeriesDiverges { first_term_norm: f64 },

    #[error("rate fit needs at least 4 usable points, found {usable}")]
    TooFewPoints { usable: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid cluster: {0}")]
    InvalidCluster(String),

    #[error("cluster subgraph has {multiplicity} independent zero modes; it must be connected")]
    ClusterDisconnected { multiplicity: usize },

    #[error("grid of {n} sites is too small (need at least {min})")]
    BadGrid { n: usize, min: usize },

    #[error("potential has no zeros, so ker(B) is empty")]
    EmptyKernel,

    #[error("hypothesis tag {tag} failed verification: {reason}")]
    TagVerification { tag: &'static str, reason: String },

    #[error("graph parse error at line {line}: {message}")]
    GraphParse { line: usize, message: String },
}
