//! Regenerates the bundled fixture dataset:
//!
//! ```text
//! cargo run -p anomale-cli --example make_fixture -- crates/cli/tests/fixtures/flows_200.csv
//! ```

use anomale_core::ingest::NF_UNSW_NB15_V2;
use anomale_core::synthetic::write_flow_csv;

fn main() {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "crates/cli/tests/fixtures/flows_200.csv".into());
    let file = std::fs::File::create(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    write_flow_csv(file, &NF_UNSW_NB15_V2, 200, 0.1, 7).expect("fixture written");
    println!("wrote {path}");
}
