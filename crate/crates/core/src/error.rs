use thiserror::Error;

/// Errors raised by the model, dynamics and analysis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{field}` = {value} is out of domain: {reason}")]
    ParameterDomain {
        field: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("grid spacing Δδ = {spacing} violates Δδ < π/(4τ) = {bound} (increase num_pairs or reduce half_bandwidth)")]
    GridResolution { spacing: f64, bound: f64 },

    #[error("grid half-bandwidth W = {half_bandwidth} violates W ≥ max(8·ω_g, 4·κ) = {required}")]
    GridBandwidth { half_bandwidth: f64, required: f64 },

    #[error("state dimension {found} does not match generator dimension {expected}")]
    Dimension { expected: usize, found: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("time step dt = {dt} exceeds the stability bound {max}")]
    StepSize { dt: f64, max: f64 },

    #[error("norm drift {drift:e} over the run exceeds {limit:e}")]
    IntegrationDiagnostic { drift: f64, limit: f64 },

    #[error("perturbation out of domain: {0}")]
    PerturbationDomain(String),

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("scan_points = {scan_points} is below the required {required} (16 samples per feedback period)")]
    ScanResolution { scan_points: usize, required: usize },

    #[error(
        "no critical ratio found for n = {n}, Δφ = {delta_phi} in R ∈ [{r_lo}, {r_hi}]: {detail}"
    )]
    CriticalNotFound {
        n: u32,
        delta_phi: f64,
        r_lo: f64,
        r_hi: f64,
        detail: String,
    },

    #[error("product law violated at n = {n}: n·R̄ = {product}, relative deviation {deviation} from 1/(2π)")]
    ProductLaw {
        n: u32,
        product: f64,
        deviation: f64,
    },
}

impl Error {
    /// Short machine-readable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::ParameterDomain { .. } => "parameter-domain",
            Error::GridResolution { .. } => "grid-resolution",
            Error::GridBandwidth { .. } => "grid-bandwidth",
            Error::Dimension { .. } => "dimension",
            Error::InvalidState(_) => "invalid-state",
            Error::StepSize { .. } => "step-size",
            Error::IntegrationDiagnostic { .. } => "integration-diagnostic",
            Error::PerturbationDomain(_) => "perturbation-domain",
            Error::Analysis(_) => "analysis",
            Error::Eigensolver(_) => "eigensolver",
            Error::ScanResolution { .. } => "scan-resolution",
            Error::CriticalNotFound { .. } => "critical-not-found",
            Error::ProductLaw { .. } => "product-law",
        }
    }

    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        match self {
            Error::ParameterDomain { .. }
            | Error::GridResolution { .. }
            | Error::GridBandwidth { .. } => "model",
            Error::Dimension { .. }
            | Error::InvalidState(_)
            | Error::StepSize { .. }
            | Error::IntegrationDiagnostic { .. }
            | Error::PerturbationDomain(_)
            | Error::Analysis(_) => "dynamics",
            Error::Eigensolver(_) => "stability",
            Error::ScanResolution { .. }
            | Error::CriticalNotFound { .. }
            | Error::ProductLaw { .. } => "spectrum",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
