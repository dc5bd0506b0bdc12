//! Export the operator catalog as the JSON Schema used to validate rules.
//!
//! cargo run --example operator_catalog > rule.schema.json

use pipelint::dsl::export_catalog;
use pipelint::ops::Catalog;

fn main() {
    let catalog = Catalog::builtin();
    for s in catalog.schemas() {
        eprintln!("{:<18} {}", s.id, s.signature);
    }
    println!("{}", serde_json::to_string_pretty(&export_catalog(catalog.schemas())).unwrap());
}
