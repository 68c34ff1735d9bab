//! Loading, editing and re-emitting a run configuration.
//!
//!     cargo run --example config [path.toml]

use twinbeam::config::RunConfig;

const OVERRIDES: &str = r#"
[units]
length = "mm"

[crystal]
length = 4.0
cut_angle_deg = 36.3
dispersion = "eimerl1987"

[pump]
lambda_p0 = 349e-6
w_p = 0.5
bandwidth = 0.5e-6
"#;

fn main() -> twinbeam::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(p) => RunConfig::load(p.as_ref())?,
        None => RunConfig::from_toml_str(OVERRIDES)?,
    };
    let text = cfg.to_toml_string();
    print!("{text}");
    let again = RunConfig::from_toml_str(&text)?;
    assert_eq!(again, cfg);
    println!("# sha256 {}", cfg.hash());

    match RunConfig::from_toml_str("[pump]\nlambda_p0 = 349e-9\nbandwidth = 1e-10\n") {
        Ok(_) => unreachable!(),
        Err(e) => println!("# rejected: {e}"),
    }
    Ok(())
}
