//! A custom pump-radius sweep written to CSV and read back.
//!
//!     cargo run --release --example sweep [out_dir]

use std::path::PathBuf;

use twinbeam::config::RunConfig;
use twinbeam::io::{read_csv, write_sweep_csv};
use twinbeam::sweeps::{run_sweep, SweepSpec};

const SPEC: &str = r#"
name = "radius"
parameter = "pump_radius"
unit = "mm"
range = { start = 0.25, stop = 1.0, count = 4 }
outputs = ["K_k", "K_phi", "KDelta_k", "w_p_a"]
"#;

fn main() -> twinbeam::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let spec = SweepSpec::from_toml_str(SPEC, RunConfig::bundled_default())?;
    let records = run_sweep(&spec, 0)?;
    let path = out.join("sweep_radius.csv");
    write_sweep_csv(&path, &spec, &records)?;

    let table = read_csv(&path)?;
    println!("{}", table.comments.join("\n"));
    println!("{}", table.header.join("  "));
    for row in &table.rows {
        println!("{}", row.join("  "));
    }
    println!("-> {}", path.display());
    Ok(())
}
