//! Run configuration: TOML schema, validation and round-trip emission.
//!
//! Lengths are metres unless `[units] length` says otherwise, angles are
//! degrees, durations seconds and bandwidths metres of wavelength. Sellmeier
//! coefficients always take the wavelength in micrometres.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dispersion::{BboDispersion, CrystalConfig, Interaction, Sellmeier};
use crate::error::{Error, Result};
use crate::kernels::{duration_for_bandwidth, Numerics, PumpConfig};

const DEFAULT_CONFIG: &str = include_str!("../configs/default.toml");

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    crystal: Option<RawCrystal>,
    pump: Option<RawPump>,
    filter: Option<RawFilter>,
    numerics: Option<Numerics>,
    output: Option<RawOutput>,
    units: Option<RawUnits>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawCrystal {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cut_angle_deg: Option<f64>,
    /// Named coefficient set, alternative to explicit tables.
    #[serde(skip_serializing_if = "Option::is_none")]
    dispersion: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    window: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    interaction: Option<Interaction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ordinary: Option<Sellmeier>,
    #[serde(skip_serializing_if = "Option::is_none")]
    extraordinary: Option<Sellmeier>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawPump {
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda_p0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bandwidth: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normal_incidence: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawFilter {
    /// Intensity FWHM of the Gaussian passband, wavelength.
    width: Option<f64>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    modes: Option<usize>,
    metrics: Option<Vec<String>>,
    export_kernels: Option<bool>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawUnits {
    length: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSettings {
    pub dir: String,
    /// Mode functions written per decomposition.
    pub modes: usize,
    /// Metrics selected for output; empty means all.
    pub metrics: Vec<String>,
    pub export_kernels: bool,
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { dir: "out".into(), modes: 6, metrics: Vec::new(), export_kernels: false }
    }
}

/// Fully resolved and validated configuration, SI units internally.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub crystal_name: String,
    pub length: f64,
    pub cut_angle_deg: f64,
    pub ordinary: Sellmeier,
    pub extraordinary: Sellmeier,
    pub window: (f64, f64),
    pub interaction: Interaction,
    pub pump: PumpConfig,
    /// Spectral filter FWHM, m of wavelength.
    pub filter_width: Option<f64>,
    pub numerics: Numerics,
    pub output: OutputSettings,
}

fn length_scale(unit: &str) -> Result<f64> {
    match unit {
        "m" => Ok(1.0),
        "mm" => Ok(1e-3),
        "um" => Ok(1e-6),
        "nm" => Ok(1e-9),
        other => Err(Error::invalid("units.length", format!("unknown unit `{other}`; use m, mm, um or nm"))),
    }
}

fn named_dispersion(name: &str) -> Result<BboDispersion> {
    match name {
        "kato1986" => Ok(BboDispersion::Kato1986),
        "eimerl1987" => Ok(BboDispersion::Eimerl1987),
        other => Err(Error::invalid(
            "crystal.dispersion",
            format!("unknown set `{other}`; known: kato1986, eimerl1987"),
        )),
    }
}

fn required<T>(v: Option<T>, field: &str) -> Result<T> {
    v.ok_or_else(|| Error::invalid(field, "missing"))
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// The bundled 8 mm BBO, 349 nm configuration.
    pub fn bundled_default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG).expect("bundled config is valid")
    }

    pub fn bundled_text() -> &'static str {
        DEFAULT_CONFIG
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        let units = raw.units.unwrap_or_default();
        let s = length_scale(units.length.as_deref().unwrap_or("m"))?;

        let c = raw.crystal.ok_or_else(|| Error::invalid("crystal", "missing section"))?;
        let (ordinary, extraordinary, default_name) = match (c.dispersion, c.ordinary, c.extraordinary) {
            (Some(name), None, None) => {
                let set = named_dispersion(&name)?;
                let (o, e) = set.coefficients();
                (o, e, set.name().to_string())
            }
            (None, Some(o), Some(e)) => (o, e, "custom".to_string()),
            (Some(_), _, _) => {
                return Err(Error::invalid(
                    "crystal.dispersion",
                    "give either a named set or explicit ordinary/extraordinary tables, not both",
                ))
            }
            (None, None, _) => return Err(Error::invalid("crystal.ordinary", "missing")),
            (None, _, None) => return Err(Error::invalid("crystal.extraordinary", "missing")),
        };
        let window = c.window.map(|[a, b]| (a * s, b * s)).unwrap_or((0.2e-6, 1.2e-6));

        let p = raw.pump.ok_or_else(|| Error::invalid("pump", "missing section"))?;
        let lambda_p0 = required(p.lambda_p0, "pump.lambda_p0")? * s;
        let w_p = required(p.w_p, "pump.w_p")? * s;
        let tau_p = match (p.tau_p, p.bandwidth) {
            (Some(t), None) => t,
            (None, Some(b)) => {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(Error::invalid("pump.bandwidth", "must be positive"));
                }
                duration_for_bandwidth(lambda_p0, b * s)
            }
            (Some(_), Some(_)) => {
                return Err(Error::invalid("pump.tau_p", "give either tau_p or bandwidth, not both"))
            }
            (None, None) => return Err(Error::invalid("pump.tau_p", "missing (or give pump.bandwidth)")),
        };
        let pump = PumpConfig {
            lambda_p0,
            w_p,
            tau_p,
            normal_incidence: p.normal_incidence.unwrap_or(true),
        };

        let filter_width = match raw.filter.and_then(|f| f.width) {
            Some(w) if !(w > 0.0 && w.is_finite()) => {
                return Err(Error::invalid("filter.width", "must be positive"))
            }
            Some(w) => Some(w * s),
            None => None,
        };

        let o = raw.output.unwrap_or_default();
        let defaults = OutputSettings::default();
        let output = OutputSettings {
            dir: o.dir.unwrap_or(defaults.dir),
            modes: o.modes.unwrap_or(defaults.modes),
            metrics: o.metrics.unwrap_or_default(),
            export_kernels: o.export_kernels.unwrap_or(false),
        };
        for m in &output.metrics {
            if crate::analysis::metric_info(m).is_none() {
                return Err(Error::invalid("output.metrics", format!("unknown metric `{m}`")));
            }
        }

        let cfg = RunConfig {
            crystal_name: c.name.unwrap_or(default_name),
            length: required(c.length, "crystal.length")? * s,
            cut_angle_deg: required(c.cut_angle_deg, "crystal.cut_angle_deg")?,
            ordinary,
            extraordinary,
            window,
            interaction: c.interaction.unwrap_or(Interaction::TypeIEoo),
            pump,
            filter_width,
            numerics: raw.numerics.unwrap_or_default(),
            output,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.crystal()?;
        self.pump.validate()?;
        self.numerics.validate()?;
        Ok(())
    }

    pub fn crystal(&self) -> Result<CrystalConfig> {
        let c = CrystalConfig {
            name: self.crystal_name.clone(),
            length: self.length,
            cut_angle: self.cut_angle_deg.to_radians(),
            ordinary: self.ordinary.clone(),
            extraordinary: self.extraordinary.clone(),
            window: self.window,
            interaction: self.interaction,
        };
        c.validate()?;
        Ok(c)
    }

    /// Emits the resolved configuration, SI lengths; loading the result
    /// gives back an identical value.
    pub fn to_toml_string(&self) -> String {
        let raw = RawConfig {
            crystal: Some(RawCrystal {
                name: Some(self.crystal_name.clone()),
                length: Some(self.length),
                cut_angle_deg: Some(self.cut_angle_deg),
                dispersion: None,
                window: Some([self.window.0, self.window.1]),
                interaction: Some(self.interaction),
                ordinary: Some(self.ordinary.clone()),
                extraordinary: Some(self.extraordinary.clone()),
            }),
            pump: Some(RawPump {
                lambda_p0: Some(self.pump.lambda_p0),
                w_p: Some(self.pump.w_p),
                tau_p: Some(self.pump.tau_p),
                bandwidth: None,
                normal_incidence: Some(self.pump.normal_incidence),
            }),
            filter: self.filter_width.map(|w| RawFilter { width: Some(w) }),
            numerics: Some(self.numerics.clone()),
            output: Some(RawOutput {
                dir: Some(self.output.dir.clone()),
                modes: Some(self.output.modes),
                metrics: Some(self.output.metrics.clone()),
                export_kernels: Some(self.output.export_kernels),
            }),
            units: Some(RawUnits { length: Some("m".into()) }),
        };
        toml::to_string(&raw).expect("config serializes")
    }

    /// SHA-256 of the resolved configuration text, hex.
    pub fn hash(&self) -> String {
        hex_digest(self.to_toml_string().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_default_has_setup_values() {
        let c = RunConfig::bundled_default();
        assert_eq!(c.pump.lambda_p0, 349e-9);
        assert_eq!(c.length, 8e-3);
        assert_eq!(c.cut_angle_deg, 36.3);
        assert!(c.filter_width.is_none());
    }

    #[test]
    fn missing_radius_names_field() {
        let text = RunConfig::bundled_text().replace("w_p = 1.0e-3", "");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("pump.w_p"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{}\n[extra]\nfoo = 1\n", RunConfig::bundled_text());
        assert!(matches!(RunConfig::from_toml_str(&text), Err(Error::Parse(_))));
        let text = RunConfig::bundled_text().replace("[pump]", "[pump]\nradius = 3");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn parse_error_reports_line() {
        let err = RunConfig::from_toml_str("[crystal]\nlength = = 3\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn round_trip_is_identity() {
        let c = RunConfig::bundled_default();
        let again = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn bandwidth_and_duration_forms_agree() {
        let c = RunConfig::bundled_default();
        let bw = c.pump.bandwidth();
        assert!((bw - 0.2e-9).abs() < 1e-21);
    }

    #[test]
    fn micrometre_units() {
        let text = RunConfig::bundled_text()
            .replace("length = 8.0e-3", "length = 8000.0")
            .replace("lambda_p0 = 349.0e-9", "lambda_p0 = 0.349")
            .replace("w_p = 1.0e-3", "w_p = 1000.0")
            .replace("bandwidth = 0.2e-9", "bandwidth = 0.0002")
            .replace("window = [0.2e-6, 1.2e-6]", "window = [0.2, 1.2]")
            .replace("length = \"m\"", "length = \"um\"");
        let c = RunConfig::from_toml_str(&text).unwrap();
        let d = RunConfig::bundled_default();
        assert!((c.length - d.length).abs() < 1e-18);
        assert!((c.pump.w_p - d.pump.w_p).abs() < 1e-18);
    }
}
