//! Small text helpers shared by every stage.

/// Trims both ends and collapses each internal whitespace run to one space.
pub fn normalize_ws(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Joins the lines of `text` into one line: each line is trimmed, blank
/// lines are dropped, and the rest are joined with single spaces.
///
/// Whitespace inside a line is kept as written.
pub fn flatten_lines(text: &str) -> String {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Splits a file into lines without their terminators.
pub fn split_lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

/// Leading whitespace of `line`.
pub fn indentation(line: &str) -> &str {
    &line[..line.len() - line.trim_start().len()]
}

/// Whether two snippets are the same code up to whitespace: their lexical
/// token sequences (word runs and single punctuation characters) match.
/// Unlike comparing [`normalize_ws`] output, `x = 1 ;` equals `x = 1;`,
/// while `return x` still differs from `returnx`.
pub fn same_code(a: &str, b: &str) -> bool {
    use crate::tokenize::{SimpleTokenizer, Tokenizer};
    let ta = SimpleTokenizer.token_spans(a);
    let tb = SimpleTokenizer.token_spans(b);
    ta.len() == tb.len() && ta.iter().zip(&tb).all(|(&(s1, e1), &(s2, e2))| a[s1..e1] == b[s2..e2])
}

pub fn has_alphanumeric(text: &str) -> bool {
    text.chars().any(char::is_alphanumeric)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_ws("  a  =  1 ; "), "a = 1 ;");
        assert_eq!(normalize_ws("a=1;"), "a=1;");
        assert_eq!(normalize_ws("a\n\tb"), "a b");
        assert_eq!(normalize_ws(" \n\t "), "");
    }

    #[test]
    fn flatten_joins_trimmed_lines() {
        assert_eq!(flatten_lines("a=1;\nb=2;"), "a=1; b=2;");
        assert_eq!(flatten_lines("  if (x) {\n\n    y  = 1;\n  }"), "if (x) { y  = 1; }");
    }

    #[test]
    fn same_code_ignores_spacing_only() {
        assert!(same_code("x = 1 ;", "x = 1;"));
        assert!(same_code("  f(a,b)\n", "f( a , b )"));
        assert!(!same_code("return x", "returnx"));
        assert!(!same_code("a", "a;"));
    }

    #[test]
    fn indentation_prefix() {
        assert_eq!(indentation("    x = 1"), "    ");
        assert_eq!(indentation("x"), "");
    }
}
