use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("wavelength {wavelength:.6e} m lies outside the dispersion validity window [{min:.3e}, {max:.3e}] m")]
    Domain { wavelength: f64, min: f64, max: f64 },

    #[error("propagation angle {0} rad outside [0, pi/2]")]
    AngleOutOfRange(f64),

    #[error("not phase-matchable: pump wave number {k_pump:.6e} exceeds signal+idler {k_pair:.6e} for this cut")]
    NotPhaseMatchable { k_pump: f64, k_pair: f64 },

    #[error("non-degenerate operation is not supported (signal {signal:.6e} m, expected {expected:.6e} m)")]
    NonDegenerate { signal: f64, expected: f64 },

    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("kernel has zero norm")]
    ZeroNorm,

    #[error("SVD did not converge ({rows}x{cols} kernel, Frobenius norm {norm:.3e}, max |entry| {max_abs:.3e})")]
    SvdNoConvergence { rows: usize, cols: usize, norm: f64, max_abs: f64 },

    #[error("Schmidt coefficients are not normalized: sum of squares = {0}")]
    Unnormalized(f64),

    #[error("no signal on grid: integrated intensity {0:.3e} below numerical floor")]
    NoSignal(f64),

    #[error("grid too narrow: section has no half-maximum crossing on the {0} side")]
    GridTooNarrow(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid { field: field.into(), reason: reason.into() }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io { path: path.display().to_string(), source }
    }
}
