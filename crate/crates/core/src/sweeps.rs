//! Parameter sweeps over pump radius, pump bandwidth or spectral filter
//! width, and the Gaussian spectral filter itself.

use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{compute_metrics, metric_info, Metrics};
use crate::config::RunConfig;
use crate::dispersion::{Geometry, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::kernels::{duration_for_bandwidth, KernelMatrix, SpectralModel, TwoPhotonAmplitude};

const FIG1: &str = include_str!("../configs/fig1.toml");
const FIG5: &str = include_str!("../configs/fig5.toml");
const FILTER: &str = include_str!("../configs/filter.toml");

/// Names of the bundled sweep specifications.
pub const BUNDLED_SPECS: &[&str] = &["fig1", "fig5", "filter"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// `pump.w_p`, m.
    PumpRadius,
    /// Pump intensity FWHM, m of wavelength.
    PumpBandwidth,
    /// Spectral filter FWHM, m of wavelength.
    FilterWidth,
}

impl SweepParameter {
    pub fn column(self) -> &'static str {
        match self {
            SweepParameter::PumpRadius => "w_p",
            SweepParameter::PumpBandwidth => "dlambda_p",
            SweepParameter::FilterWidth => "filter_width",
        }
    }

    pub fn unit(self) -> &'static str {
        "m"
    }

    /// `base` with the parameter set to `value`.
    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut c = base.clone();
        match self {
            SweepParameter::PumpRadius => c.pump.w_p = value,
            SweepParameter::PumpBandwidth => {
                c.pump.tau_p = duration_for_bandwidth(c.pump.lambda_p0, value)
            }
            SweepParameter::FilterWidth => c.filter_width = Some(value),
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    start: f64,
    stop: f64,
    count: usize,
    #[serde(default)]
    spacing: Spacing,
}

#[derive(Debug, Default, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: Option<String>,
    parameter: SweepParameter,
    /// Multiplier applied to `values` / `range`, e.g. "nm".
    unit: Option<String>,
    values: Option<Vec<f64>>,
    range: Option<RawRange>,
    outputs: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub parameter: SweepParameter,
    /// Strictly increasing, SI units.
    pub values: Vec<f64>,
    pub outputs: Vec<String>,
    pub base: RunConfig,
    /// Source text of the specification.
    pub text: String,
}

fn unit_scale(unit: &str) -> Result<f64> {
    match unit {
        "m" => Ok(1.0),
        "mm" => Ok(1e-3),
        "um" => Ok(1e-6),
        "nm" => Ok(1e-9),
        other => Err(Error::invalid("unit", format!("unknown unit `{other}`"))),
    }
}

impl SweepSpec {
    pub fn from_toml_str(text: &str, base: RunConfig) -> Result<Self> {
        let raw: RawSpec = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let s = unit_scale(raw.unit.as_deref().unwrap_or("m"))?;
        let values: Vec<f64> = match (raw.values, raw.range) {
            (Some(v), None) => v.into_iter().map(|x| x * s).collect(),
            (None, Some(r)) => {
                if r.count == 0 {
                    Vec::new()
                } else if r.count == 1 {
                    vec![r.start * s]
                } else {
                    (0..r.count)
                        .map(|k| {
                            let t = k as f64 / (r.count - 1) as f64;
                            let v = match r.spacing {
                                Spacing::Linear => r.start + t * (r.stop - r.start),
                                Spacing::Log => (r.start.ln() + t * (r.stop.ln() - r.start.ln())).exp(),
                            };
                            v * s
                        })
                        .collect()
                }
            }
            (Some(_), Some(_)) => return Err(Error::invalid("values", "give either values or range")),
            (None, None) => return Err(Error::invalid("values", "missing")),
        };
        let spec = SweepSpec {
            name: raw.name.unwrap_or_else(|| "sweep".into()),
            parameter: raw.parameter,
            values,
            outputs: raw.outputs,
            base,
            text: text.to_string(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path, base: RunConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text, base)
    }

    /// One of [`BUNDLED_SPECS`].
    pub fn bundled(name: &str, base: RunConfig) -> Result<Self> {
        let text = match name {
            "fig1" => FIG1,
            "fig5" => FIG5,
            "filter" => FILTER,
            other => return Err(Error::invalid("spec", format!("no bundled spec `{other}`"))),
        };
        Self::from_toml_str(text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::invalid("values", "empty"));
        }
        if self.values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("values", "must be positive"));
        }
        if self.values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("values", "must be strictly increasing"));
        }
        if self.outputs.is_empty() {
            return Err(Error::invalid("outputs", "empty"));
        }
        for o in &self.outputs {
            if metric_info(o).is_none() {
                return Err(Error::invalid("outputs", format!("unknown metric `{o}`")));
            }
        }
        for &v in &self.values {
            self.parameter.apply(&self.base, v)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub parameter_value: f64,
    /// Metrics, or the error message of a failed point.
    pub outcome: std::result::Result<Metrics, String>,
}

/// Runs every point with up to `workers` threads (0: all cores). Output
/// order follows `spec.values` and does not depend on the thread count.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<Vec<SweepRecord>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    let records = pool.install(|| {
        spec.values
            .par_iter()
            .map(|&v| SweepRecord { parameter_value: v, outcome: run_point(spec, v) })
            .collect()
    });
    Ok(records)
}

pub fn run_point(spec: &SweepSpec, value: f64) -> std::result::Result<Metrics, String> {
    let cfg = spec.parameter.apply(&spec.base, value).map_err(|e| e.to_string())?;
    compute_metrics(&cfg, &spec.outputs).map_err(|e| e.to_string())
}

/// Gaussian passband with intensity FWHM `width` (wavelength) around
/// `lambda0`, as an amplitude transmission in angular frequency.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralFilter {
    pub center: f64,
    /// Intensity FWHM in angular frequency.
    pub width_omega: f64,
}

impl SpectralFilter {
    pub fn new(lambda0: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::invalid("filter.width", "must be positive"));
        }
        let center = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / lambda0;
        let width_omega = 2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * width / (lambda0 * lambda0);
        Ok(SpectralFilter { center, width_omega })
    }

    pub fn transmission(&self, omega: f64) -> f64 {
        let d = (omega - self.center) / self.width_omega;
        (-2.0 * std::f64::consts::LN_2 * d * d).exp()
    }
}

/// Multiplies the spectral kernel by identical passbands of FWHM
/// `filter_fwhm` (m of wavelength) centred on the signal and idler.
pub fn apply_spectral_filter(kernel: &KernelMatrix, geometry: &Geometry, filter_fwhm: f64) -> Result<KernelMatrix> {
    let fs = SpectralFilter::new(geometry.lambda_s0, filter_fwhm)?;
    let fi = SpectralFilter::new(geometry.lambda_i0, filter_fwhm)?;
    Ok(kernel.map(kernel.label().clone(), |x, y, v| v * (fs.transmission(x) * fi.transmission(y))))
}

/// Spectral amplitude seen behind the filters.
pub struct FilteredAmplitude<'a> {
    model: &'a SpectralModel,
    signal: SpectralFilter,
    idler: SpectralFilter,
}

impl<'a> FilteredAmplitude<'a> {
    pub fn new(model: &'a SpectralModel, geometry: &Geometry, width: f64) -> Result<Self> {
        Ok(FilteredAmplitude {
            model,
            signal: SpectralFilter::new(geometry.lambda_s0, width)?,
            idler: SpectralFilter::new(geometry.lambda_i0, width)?,
        })
    }
}

impl TwoPhotonAmplitude for FilteredAmplitude<'_> {
    fn amplitude(&self, s: f64, i: f64) -> Result<Complex64> {
        Ok(self.model.amplitude(s, i)? * (self.signal.transmission(s) * self.idler.transmission(i)))
    }

    fn support(&self, s: f64) -> (f64, f64) {
        self.model.support(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_specs_parse() {
        let base = RunConfig::bundled_default();
        for name in BUNDLED_SPECS {
            let s = SweepSpec::bundled(name, base.clone()).unwrap();
            assert!(!s.values.is_empty());
        }
        let fig5 = SweepSpec::bundled("fig5", base).unwrap();
        assert_eq!(fig5.values.len(), 20);
        assert!((fig5.values[0] - 0.02e-9).abs() < 1e-24);
        assert!((fig5.values[19] - 2e-9).abs() < 1e-21);
    }

    #[test]
    fn invalid_specs_fail_before_compute() {
        let base = RunConfig::bundled_default();
        let empty = "parameter = \"pump_radius\"\nvalues = []\noutputs = [\"K_k\"]\n";
        assert!(SweepSpec::from_toml_str(empty, base.clone()).is_err());
        let dec = "parameter = \"pump_radius\"\nvalues = [2e-3, 1e-3]\noutputs = [\"K_k\"]\n";
        assert!(SweepSpec::from_toml_str(dec, base.clone()).is_err());
        let bad = "parameter = \"pump_radius\"\nvalues = [1e-3]\noutputs = [\"K_z\"]\n";
        assert!(SweepSpec::from_toml_str(bad, base).is_err());
    }

    #[test]
    fn filter_transmission() {
        let f = SpectralFilter::new(698e-9, 1e-9).unwrap();
        assert_eq!(f.transmission(f.center), 1.0);
        let half = f.transmission(f.center + 0.5 * f.width_omega).powi(2);
        assert!((half - 0.5).abs() < 1e-12);
        assert!(SpectralFilter::new(698e-9, 0.0).is_err());
    }
}
