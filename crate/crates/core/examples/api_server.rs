//! Start the JSON API on a free port and lint a document through it.
//!
//! cargo run --example api_server

use std::time::Duration;

use pipelint::cli::server::{spawn_background, AppState};
use pipelint::corpus::RuleCorpus;
use pipelint::engine::Environment;
use pipelint::net::{HttpRequest, Transport, UreqTransport};
use serde_json::json;

fn main() {
    let state = AppState::new(RuleCorpus::builtin().clone(), Environment::hermetic());
    let server = spawn_background("127.0.0.1:0".parse().unwrap(), state).unwrap();
    println!("listening on {}", server.url(""));

    let body = json!({ "markdown": "# Hi 🎉🎉\n", "rules": ["enforce-emoji-limit"] });
    let response = UreqTransport
        .send(&HttpRequest::post_json(server.url("/api/lint"), &body, Duration::from_secs(10)))
        .unwrap();
    let report: serde_json::Value = serde_json::from_slice(&response.body).unwrap();
    println!("{}", serde_json::to_string_pretty(&report["ruleResults"][0]).unwrap());

    let presets = UreqTransport.send(&HttpRequest::get(server.url("/api/presets"), Duration::from_secs(10))).unwrap();
    let presets: Vec<serde_json::Value> = serde_json::from_slice(&presets.body).unwrap();
    println!("presets: {:?}", presets.iter().map(|p| p["name"].as_str().unwrap_or("")).collect::<Vec<_>>());
}
