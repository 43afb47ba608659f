use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("horizon too large: {nodes} nodes exceed the cap of {cap}")]
    HorizonTooLarge { nodes: u64, cap: u64 },
    #[error("invalid horizon {0}")]
    InvalidHorizon(f64),
    #[error("invalid offspring law: {0}")]
    InvalidOffspringLaw(String),
    #[error("leaf out of range: {index} (tree has {leaves} leaves)")]
    LeafOutOfRange { index: usize, leaves: usize },
    #[error("invalid correlation {0}: must lie in [-1, 1]")]
    InvalidCorrelation(f64),
    #[error("invalid barrier exponent {0}: must lie in (1/2, 1)")]
    InvalidBarrierExponent(f64),
    #[error("invalid barrier: {0}")]
    InvalidBarrier(String),
    #[error("boundary scaling requires t >= 1, got {0}")]
    BoundaryScalingTooEarly(f64),
    #[error("no CLT rule for beta = {0}")]
    NoCltRule(String),
    #[error("beta = {beta} is not admissible here: {needed}")]
    PhaseNotAdmissible { beta: String, needed: String },
    #[error("moment order {p} out of range (1, {max}]")]
    MomentOrderOutOfRange { p: f64, max: f64 },
    #[error("degenerate conditioning: every replica has a non-positive conditioning variable")]
    DegenerateConditioning,
    #[error("empty sample")]
    EmptySample,
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// Resource-cap rejections get their own exit status in the CLI.
    pub fn is_resource_cap(&self) -> bool {
        matches!(self, Error::HorizonTooLarge { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
