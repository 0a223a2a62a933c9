//! One PASS/FAIL line per criterion. Runs without the libtest harness so the
//! lines are printed by a plain `cargo test`; `--release` is much faster.

use std::process::ExitCode;

use hilbert_core::selftest::{run, CRITERIA, EXPECTED_FAIL};

fn main() -> ExitCode {
    let results = run(&[], |c| println!("{}", c.line()));
    assert_eq!(results.len(), CRITERIA);
    let passed = results.iter().filter(|c| c.pass).count();
    println!("acceptance: {passed}/{CRITERIA} criteria pass");
    for c in results.iter().filter(|c| !c.pass && c.expected_failure) {
        println!("criterion {:>2} is a known failure (see README)", c.id);
    }
    let unexpected: Vec<usize> = results.iter().filter(|c| !c.pass && !EXPECTED_FAIL.contains(&c.id)).map(|c| c.id).collect();
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("criteria failed: {unexpected:?}");
        ExitCode::FAILURE
    }
}
