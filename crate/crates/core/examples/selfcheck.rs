//! The analytic oracle suite, including the negative control.
//!
//!     cargo run --release --example selfcheck

use twinbeam::selfcheck::{run, SelfCheckOptions};

fn main() {
    for r in run(&SelfCheckOptions::default()) {
        println!("{r}");
    }
    println!("with the sinc root set to 1.0:");
    for r in run(&SelfCheckOptions { sinc_root: 1.0 }).iter().filter(|r| !r.passed) {
        println!("{r}");
    }
}
