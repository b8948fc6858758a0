use std::path::Path;

use mendkit::context::{enclosing_function, scanner_for, LineRange};
use mendkit::Language;

fn fixture(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/python_spans").join(name)).unwrap()
}

#[test]
fn scanner_matches_ast_spans() {
    let source = fixture("sample.py");
    let frozen: Vec<(usize, usize)> = serde_json::from_str(&fixture("spans.json")).unwrap();
    let mut got: Vec<(usize, usize)> = scanner_for(Language::Python)
        .functions(&source)
        .unwrap()
        .into_iter()
        .map(|s| (s.first, s.last))
        .collect();
    got.sort();
    assert_eq!(got, frozen);
}

#[test]
fn outermost_function_wins() {
    let source = fixture("sample.py");
    let lines: Vec<&str> = source.lines().collect();
    // `return 1` inside `inner`, inside `unit`.
    let span = enclosing_function(&source, LineRange::new(41, 1), Language::Python).unwrap().unwrap();
    assert_eq!(span.range, LineRange::inclusive(38, 42));
    assert!(span.text.starts_with("    @staticmethod"));
    assert_eq!(span.text.lines().count(), 5);
    assert_eq!(lines[40].trim(), "return 1");
    // Class body outside any method has no enclosing function.
    assert!(enclosing_function(&source, LineRange::new(25, 1), Language::Python).unwrap().is_none());
}
