//! Load a rule corpus from a directory instead of the built-in one.
//!
//! cargo run --example corpus_dir

use pipelint::corpus::load_corpus;

fn main() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("rules")).unwrap();
    std::fs::create_dir_all(dir.path().join("presets")).unwrap();
    std::fs::write(
        dir.path().join("rules/no-todo.yaml"),
        "rule: no-todo\ndescription: No TODO markers.\npipeline:\n  - operator: regexMatch\n    patterns: [TODO]\n",
    )
    .unwrap();
    std::fs::write(dir.path().join("presets/mine.yaml"), "name: mine\ndescription: d\nrules: [no-todo, missing-rule]\n").unwrap();

    let (corpus, errors) = load_corpus(dir.path()).unwrap();
    for e in &errors {
        println!("corpus error: {e}");
    }
    for r in corpus.list_rules(None) {
        println!("{} ({}): {}", r.name, r.severity.as_str(), r.description);
    }
    println!("version {}", corpus.version);
}
