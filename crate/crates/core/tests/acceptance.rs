//! One line per criterion; exits nonzero if any criterion fails.

use cantor_lab::acceptance;
use cantor_lab::measure::CantorSpec;

fn main() {
    // `cargo test` passes harness flags through; a bare number selects criteria
    let only: Vec<u8> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let results = acceptance::run(CantorSpec::default(), &only, |r| println!("{}", r.line()))
        .expect("default measure builds");
    let failed: Vec<u8> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    println!("{} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {:?}", failed);
        std::process::exit(1);
    }
}
