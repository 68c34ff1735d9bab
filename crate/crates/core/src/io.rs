//! CSV and manifest output.
//!
//! Every CSV starts with `#` comment lines (grid metadata, units) followed by
//! a header row; floats are written with 17 significant digits so that files
//! round-trip exactly.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::analysis::{Metrics, PointAnalysis};
use crate::config::{hex_digest, RunConfig};
use crate::correlations::Profile1D;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::kernels::KernelMatrix;
use crate::schmidt::SchmidtDecomposition;
use crate::sweeps::{SweepRecord, SweepSpec};

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A parsed CSV: leading comment lines, header and string records.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Column `name` parsed as floats; empty cells become NaN.
    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .column(name)
            .ok_or_else(|| Error::Parse(format!("no column `{name}`")))?;
        self.rows
            .iter()
            .map(|r| {
                let s = r[c].as_str();
                if s.is_empty() {
                    Ok(f64::NAN)
                } else {
                    s.parse::<f64>().map_err(|e| Error::Parse(format!("`{s}` in `{name}`: {e}")))
                }
            })
            .collect()
    }
}

pub fn write_csv(path: &Path, comments: &[String], header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut out = Vec::new();
    for c in comments {
        out.extend_from_slice(format!("# {c}\n").as_bytes());
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let comments = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(CsvTable { comments, header, rows })
}

fn grid_comments(label: &str, g: &Grid) -> Vec<String> {
    vec![
        format!("{label}_kind = {}", g.kind().name()),
        format!("{label}_unit = {}", g.kind().unit()),
        format!("{label}_points = {}", g.len()),
        format!("{label}_lower = {}", fmt_f64(g.lower())),
        format!("{label}_upper = {}", fmt_f64(g.upper())),
    ]
}

/// Stored kernel entries as `i, j, x, y, re, im`.
pub fn write_kernel_csv(path: &Path, k: &KernelMatrix) -> Result<()> {
    let mut comments = vec![format!("kernel = {}", k.label())];
    comments.extend(grid_comments("row", k.row_grid()));
    comments.extend(grid_comments("col", k.col_grid()));
    let xs = k.row_grid().points();
    let ys = k.col_grid().points();
    let mut rows = Vec::with_capacity(k.stored_entries());
    for (i, r) in k.rows().iter().enumerate() {
        for (c, v) in r.values.iter().enumerate() {
            let j = r.start + c;
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                fmt_f64(xs[i]),
                fmt_f64(ys[j]),
                fmt_f64(v.re),
                fmt_f64(v.im),
            ]);
        }
    }
    write_csv(path, &comments, &["i", "j", "x", "y", "re", "im"], &rows)
}

pub fn write_profile_csv(path: &Path, columns: &[(&str, &Profile1D)], reference: f64) -> Result<()> {
    let axis = &columns[0].1.axis;
    let mut comments = grid_comments("axis", axis);
    comments.push(format!("reference = {}", fmt_f64(reference)));
    for (name, p) in columns {
        comments.push(format!("{name}_fwhm = {}", fmt_f64(p.fwhm)));
    }
    let mut header = vec!["x", "delta"];
    header.extend(columns.iter().map(|(n, _)| *n));
    let rows = (0..axis.len())
        .map(|i| {
            let x = axis.points()[i];
            let mut r = vec![fmt_f64(x), fmt_f64(x - reference)];
            r.extend(columns.iter().map(|(_, p)| fmt_f64(p.values[i])));
            r
        })
        .collect::<Vec<_>>();
    write_csv(path, &comments, &header, &rows)
}

/// `coefficients.csv` plus one file per stored mode pair.
pub fn write_decomposition(dir: &Path, stem: &str, d: &SchmidtDecomposition, modes: usize) -> Result<()> {
    let comments = vec![
        format!("kernel = {}", d.label),
        format!("schmidt_number = {}", fmt_f64(d.schmidt_number)),
    ];
    let rows = d
        .coefficients
        .iter()
        .enumerate()
        .map(|(q, l)| vec![q.to_string(), fmt_f64(*l), fmt_f64(l * l)])
        .collect::<Vec<_>>();
    write_csv(&dir.join(format!("{stem}_coefficients.csv")), &comments, &["q", "lambda", "lambda_sq"], &rows)?;
    for q in 0..modes.min(d.signal_modes.len()) {
        for (side, grid, f) in [
            ("signal", &d.signal_grid, &d.signal_modes[q]),
            ("idler", &d.idler_grid, &d.idler_modes[q]),
        ] {
            let mut comments = grid_comments("axis", grid);
            comments.push(format!("mode = {q}"));
            comments.push(format!("nodes = {}", crate::schmidt::count_nodes(f)));
            let rows = grid
                .points()
                .iter()
                .zip(f.iter())
                .map(|(x, v): (&f64, &Complex64)| vec![fmt_f64(*x), fmt_f64(v.re), fmt_f64(v.im)])
                .collect::<Vec<_>>();
            write_csv(&dir.join(format!("{stem}_{side}_q{q}.csv")), &comments, &["x", "re", "im"], &rows)?;
        }
    }
    Ok(())
}

pub fn write_metrics_csv(path: &Path, m: &Metrics) -> Result<()> {
    let rows = m
        .entries
        .iter()
        .map(|e| vec![e.name.to_string(), fmt_f64(e.value), e.unit.to_string()])
        .collect::<Vec<_>>();
    write_csv(path, &[], &["metric", "value", "unit"], &rows)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    spec_sha256: Option<String>,
    files: Vec<String>,
}

/// `manifest.toml`: tool version, hashes and the resolved configuration.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    config: &RunConfig,
    spec: Option<&SweepSpec>,
    files: &[PathBuf],
) -> Result<()> {
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config_sha256: config.hash(),
        spec_sha256: spec.map(|s| hex_digest(s.text.as_bytes())),
        files: files
            .iter()
            .map(|f| f.strip_prefix(dir).unwrap_or(f).display().to_string())
            .collect(),
    };
    let mut text = toml::to_string(&m).expect("manifest serializes");
    text.push_str("\n# Resolved configuration\n[config]\n");
    text.push_str(&indent_tables(&config.to_toml_string(), "config"));
    if let Some(s) = spec {
        text.push_str("\n# Sweep specification, verbatim\n[spec]\ntext = ");
        text.push_str(&toml::Value::String(s.text.clone()).to_string());
        text.push('\n');
    }
    let path = dir.join("manifest.toml");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Nests every `[table]` of `text` under `prefix`.
fn indent_tables(text: &str, prefix: &str) -> String {
    text.lines()
        .map(|l| {
            if let Some(rest) = l.strip_prefix('[') {
                if let Some(inner) = rest.strip_prefix('[') {
                    format!("[[{prefix}.{inner}")
                } else {
                    format!("[{prefix}.{rest}")
                }
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n"
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    command: &'a str,
    error: String,
    kind: String,
}

/// `error.toml` describing a failed command.
pub fn write_error(dir: &Path, command: &str, err: &Error) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let kind = format!("{err:?}").split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string();
    let r = ErrorReport { command, error: err.to_string(), kind };
    let path = dir.join("error.toml");
    fs::write(&path, toml::to_string(&r).expect("error serializes")).map_err(|e| Error::io(&path, e))
}

/// Writes every output of a single-point analysis; returns the file list.
pub fn write_analysis(dir: &Path, a: &PointAnalysis, config: &RunConfig) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    let p = dir.join("metrics.csv");
    write_metrics_csv(&p, &a.metrics)?;
    files.push(p);

    if let Some(t) = &a.transverse {
        let k0 = a.geometry.k_perp_s0();
        let n = t.intensity.normalized(k0)?;
        let p = dir.join("radial_intensity.csv");
        write_profile_csv(&p, &[("n", &n)], k0)?;
        files.push(p);
        let p = dir.join("radial_sections.csv");
        let r = &t.radial;
        write_profile_csv(&p, &[("n", &r.intensity), ("A_abs", &r.auto_abs), ("A_sq", &r.auto_sq)], r.intensity.peak_location)?;
        files.push(p);
        let p = dir.join("radial_cross.csv");
        write_profile_csv(&p, &[("C", &t.radial.cross)], k0)?;
        files.push(p);
        let p = dir.join("azimuthal_sections.csv");
        write_profile_csv(
            &p,
            &[("A_abs", &t.azimuthal_auto), ("A_sq", &t.azimuthal_auto_sq), ("C", &t.azimuthal_cross)],
            0.0,
        )?;
        files.push(p);
        let orders = t
            .summary
            .orders
            .iter()
            .map(|o| vec![o.m.to_string(), fmt_f64(o.norm_sq), fmt_f64(1.0 / o.purity)])
            .collect::<Vec<_>>();
        let p = dir.join("azimuthal_orders.csv");
        write_csv(&p, &[], &["m", "norm_sq", "K_m"], &orders)?;
        files.push(p);
        if let Some(d) = &t.order_zero {
            write_decomposition(&dir.join("modes"), "radial_m0", d, config.output.modes)?;
        }
    }
    if let Some(s) = &a.spectral {
        let w0 = a.geometry.omega_s0();
        let n = s.intensity.normalized(w0)?;
        let p = dir.join("spectral_intensity.csv");
        write_profile_csv(&p, &[("n", &n)], w0)?;
        files.push(p);
        let p = dir.join("spectral_sections.csv");
        let w = &s.widths;
        write_profile_csv(&p, &[("n", &w.intensity), ("A_abs", &w.auto_abs), ("A_sq", &w.auto_sq)], w.intensity.peak_location)?;
        files.push(p);
        let p = dir.join("spectral_cross.csv");
        write_profile_csv(&p, &[("C", &s.widths.cross)], w0)?;
        files.push(p);
        if let Some(d) = &s.decomposition {
            write_decomposition(&dir.join("modes"), "spectral", d, config.output.modes)?;
        }
    }
    let modes = dir.join("modes");
    if modes.exists() {
        let mut listed: Vec<PathBuf> = fs::read_dir(&modes)
            .map_err(|e| Error::io(&modes, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        listed.sort();
        files.extend(listed);
    }
    Ok(files)
}

/// `sweep.csv`: one row per point, an `error` column for failed points.
pub fn write_sweep_csv(path: &Path, spec: &SweepSpec, records: &[SweepRecord]) -> Result<()> {
    let mut comments = vec![format!("sweep = {}", spec.name)];
    let mut units = vec![format!("{}={}", spec.parameter.column(), spec.parameter.unit())];
    for o in &spec.outputs {
        let u = crate::analysis::metric_info(o).map(|m| m.unit).unwrap_or("1");
        units.push(format!("{o}={u}"));
    }
    comments.push(format!("units: {}", units.join(", ")));
    let mut header = vec![spec.parameter.column()];
    header.extend(spec.outputs.iter().map(String::as_str));
    header.push("error");
    let rows = records
        .iter()
        .map(|r| {
            let mut row = vec![fmt_f64(r.parameter_value)];
            match &r.outcome {
                Ok(m) => {
                    row.extend(spec.outputs.iter().map(|o| m.get(o).map(fmt_f64).unwrap_or_default()));
                    row.push(String::new());
                }
                Err(e) => {
                    row.extend(spec.outputs.iter().map(|_| String::new()));
                    row.push(e.clone());
                }
            }
            row
        })
        .collect::<Vec<_>>();
    write_csv(path, &comments, &header, &rows)
}
