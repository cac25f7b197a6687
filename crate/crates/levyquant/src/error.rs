use thiserror::Error;

/// Errors produced by model construction, density machinery, and estimators.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// Continuous-singular Lévy measures are not representable.
    #[error("continuous-singular Lévy measure parts are unsupported")]
    SingularPart,

    /// An operation that needs jump mass received an empty measure.
    #[error("Lévy measure has zero total mass")]
    ZeroMassMeasure,

    /// The finite-measure decomposition requires sigma = 0.
    #[error("decomposition requires sigma = 0, got sigma = {0}")]
    NonzeroSigma(f64),

    /// The amplitude law has no evaluable characteristic function.
    #[error("amplitude law has no evaluable characteristic function")]
    NoCharacteristicFunction,

    /// The amplitude law is not purely absolutely continuous.
    #[error("operation requires a purely absolutely continuous amplitude law")]
    AmplitudeNotAc,

    /// A density grid failed validation.
    #[error("invalid density grid: {0}")]
    InvalidGrid(String),

    /// Characteristic-function inversion left too much mass outside the window.
    #[error("density window too small: estimated tail mass {tail:.3e} exceeds {limit:.1e}")]
    TailMassExceeded { tail: f64, limit: f64 },

    /// Inversion produced negative lobes beyond the clamping budget.
    #[error("density inversion clamped {clamped:.3e} of negative mass (budget {budget:.1e})")]
    NegativeMassExceeded { clamped: f64, budget: f64 },

    /// Truncation order too small for the requested tolerance.
    #[error("k_max = {k_max} leaves Poisson tail {tail:.3e} above {limit:.1e}")]
    TruncationOrder { k_max: usize, tail: f64, limit: f64 },

    /// An empirical pmf with no observations.
    #[error("empty histogram")]
    EmptyPmf,

    /// A pmf that should be normalized is not.
    #[error("pmf not normalized: total mass {0}")]
    UnnormalizedPmf(f64),

    /// Non-finite sample value fed to the quantizer.
    #[error("cannot quantize non-finite value {0}")]
    NonFiniteValue(f64),

    /// Quantizer index would overflow the i64 cell index.
    #[error("quantizer index overflow for value {value} at step 1/{m}")]
    IndexOverflow { value: f64, m: f64 },

    /// Grids with different layouts and resampling was not permitted.
    #[error("density grids have incompatible windows and resampling was not permitted")]
    IncompatibleGrids,

    /// No closed-form prediction exists for this model.
    #[error("no closed-form zeta/prediction for this model: {0}")]
    NoPrediction(String),

    /// The X0 classification needed by an asymptotic formula is undetermined.
    #[error("X0 classification is undetermined")]
    Undetermined,

    /// A corrupted or truncated coded stream.
    #[error("corrupt bitstream: {0}")]
    CorruptStream(String),

    /// Schedule constraint violation.
    #[error("inadmissible schedule: {0}")]
    BadSchedule(String),
}

pub type Result<T> = std::result::Result<T, Error>;
