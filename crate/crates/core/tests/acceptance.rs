//! One line per acceptance criterion; exits nonzero if any fails.

use kavd::accept::{run, SUITES};

fn main() {
    let mut failed = 0;
    for name in SUITES {
        let out = run(name).expect("known suite");
        println!("{out}");
        failed += !out.passed as usize;
    }
    println!("acceptance: {} passed, {failed} failed", SUITES.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
