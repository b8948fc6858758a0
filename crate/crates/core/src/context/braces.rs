//! Function scanner for brace languages (C, Java, JavaScript).
//!
//! Works on masked source (comments and literals blanked) and tracks brace
//! nesting. Each `{` is judged from the header text before it: a trailing
//! parameter list whose name is not a control keyword opens a function
//! body; in JavaScript an `=>` does too.

use super::{FunctionScanner, FunctionSpan, ScanError};
use crate::lang::Language;
use crate::lexer;

pub struct BraceScanner {
    lang: Language,
}

const CONTROL: &[&str] = &[
    "if", "for", "while", "switch", "catch", "synchronized", "return", "sizeof", "do", "else", "try",
    "with", "foreach", "typeof", "await", "new", "throw", "case", "elif",
];

impl BraceScanner {
    pub const fn new(lang: Language) -> Self {
        BraceScanner { lang }
    }

    fn is_function_header(&self, header: &str) -> bool {
        let h = header.trim();
        if self.lang == Language::JavaScript && h.ends_with("=>") {
            return true;
        }
        let Some(close) = h.rfind(')') else { return false };
        let tail = h[close + 1..].trim();
        let tail_ok = tail.is_empty()
            || match self.lang {
                Language::Java => tail.starts_with("throws ") || tail == "throws",
                Language::C => tail.split_whitespace().all(|w| w == "const" || w.starts_with("__attribute__")),
                _ => false,
            };
        if !tail_ok {
            return false;
        }
        let Some(open) = matching_open(h, close) else { return false };
        let before = h[..open].trim_end();
        let name_start = before
            .rfind(|c: char| !(c.is_alphanumeric() || c == '_' || c == '$'))
            .map_or(0, |p| p + 1);
        let name = &before[name_start..];
        if name.is_empty() {
            return false;
        }
        if self.lang == Language::JavaScript && name == "function" {
            return true;
        }
        if name.chars().next().is_some_and(|c| c.is_ascii_digit()) || CONTROL.contains(&name) {
            return false;
        }
        let previous_word = before[..name_start].split_whitespace().last().unwrap_or("");
        if previous_word == "new" || previous_word.ends_with('.') {
            return false;
        }
        // `x = foo(...) {` is not a definition, except `x = function name(...)`.
        let prefix = &before[..name_start];
        if prefix.contains('=') && !(self.lang == Language::JavaScript && prefix.contains("function")) {
            return false;
        }
        true
    }
}

/// Byte index of the `(` matching the `)` at `close`.
fn matching_open(text: &str, close: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (idx, ch) in text[..=close].char_indices().rev() {
        match ch {
            ')' => depth += 1,
            '(' => {
                depth -= 1;
                if depth == 0 {
                    return Some(idx);
                }
            }
            _ => {}
        }
    }
    None
}

struct Frame {
    function_first_line: Option<usize>,
}

impl FunctionScanner for BraceScanner {
    fn functions(&self, source: &str) -> Result<Vec<FunctionSpan>, ScanError> {
        let masked = lexer::mask(source, self.lang);
        let lines: Vec<&str> = masked.lines().collect();
        let mut stack: Vec<Frame> = Vec::new();
        let mut spans = Vec::new();
        // Header text since the last statement/block boundary, with the
        // line each character came from.
        let mut header = String::new();
        let mut header_lines: Vec<usize> = Vec::new();

        for (idx, line) in lines.iter().enumerate() {
            let lineno = idx + 1;
            if self.lang == Language::C && line.trim_start().starts_with('#') {
                header.clear();
                header_lines.clear();
                continue;
            }
            for ch in line.chars() {
                match ch {
                    '{' => {
                        let first = if self.is_function_header(&header) {
                            Some(self.header_first_line(&header, &header_lines, &lines, lineno))
                        } else {
                            None
                        };
                        stack.push(Frame { function_first_line: first });
                        header.clear();
                        header_lines.clear();
                    }
                    '}' => {
                        let frame = stack
                            .pop()
                            .ok_or_else(|| ScanError { line: lineno, reason: "unmatched `}`".into() })?;
                        if let Some(first) = frame.function_first_line {
                            spans.push(FunctionSpan { first, last: lineno });
                        }
                        header.clear();
                        header_lines.clear();
                    }
                    ';' => {
                        header.clear();
                        header_lines.clear();
                    }
                    _ => {
                        header.push(ch);
                        header_lines.push(lineno);
                    }
                }
            }
            header.push(' ');
            header_lines.push(lineno);
        }
        if !stack.is_empty() {
            return Err(ScanError { line: lines.len(), reason: format!("{} unclosed `{{`", stack.len()) });
        }
        Ok(spans)
    }
}

impl BraceScanner {
    /// First line of a function header: the line holding the parameter
    /// list (or arrow), extended upward over contiguous non-blank header
    /// lines such as return types, modifiers and annotations.
    fn header_first_line(&self, header: &str, header_lines: &[usize], lines: &[&str], brace_line: usize) -> usize {
        let anchor_byte = header
            .rfind(')')
            .and_then(|close| matching_open(header, close))
            .or_else(|| header.rfind("=>"));
        let Some(anchor_byte) = anchor_byte else { return brace_line };
        let char_idx = header[..anchor_byte].chars().count();
        let mut first = header_lines.get(char_idx).copied().unwrap_or(brace_line);
        let header_start = header
            .chars()
            .zip(header_lines)
            .find(|(c, _)| !c.is_whitespace())
            .map_or(first, |(_, &l)| l);
        while first > header_start {
            let prev = lines[first - 2];
            if prev.trim().is_empty() || (self.lang == Language::C && prev.trim_start().starts_with('#')) {
                break;
            }
            first -= 1;
        }
        first
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spans(src: &str, lang: Language) -> Vec<(usize, usize)> {
        let mut v: Vec<_> = BraceScanner::new(lang)
            .functions(src)
            .unwrap()
            .into_iter()
            .map(|s| (s.first, s.last))
            .collect();
        v.sort();
        v
    }

    #[test]
    fn java_methods_with_annotations_and_throws() {
        let src = "\
package p;

public class A {
    private int x;

    @Override
    public String toString() {
        return \"{\";
    }

    /** doc */
    public void run(int a,
                    int b) throws IOException {
        if (a > b) {
            x = a;
        }
        Runnable r = new Runnable() {
            public void run() { x++; }
        };
    }
}
";
        assert_eq!(spans(src, Language::Java), vec![(6, 9), (12, 20), (18, 18)]);
    }

    #[test]
    fn c_functions_and_structs() {
        let src = "\
#include <stdlib.h>
struct p { int x; };
static int
add(int a, int b)
{
    return a + b;
}
int main(void) {
    for (int i = 0; i < 3; i++) { add(i, i); }
    return 0;
}
";
        assert_eq!(spans(src, Language::C), vec![(3, 7), (8, 11)]);
    }

    #[test]
    fn javascript_forms() {
        let src = "\
import x from 'y';
const f = function (a) {
  return a;
};
const g = (a) => {
  const o = { k: 1 };
  return o;
};
class K {
  method(a) {
    return a;
  }
}
describe('s', () => {
  it('t', function () { f(1); });
});
";
        assert_eq!(
            spans(src, Language::JavaScript),
            vec![(2, 4), (5, 8), (10, 12), (14, 16), (15, 15)]
        );
    }

    #[test]
    fn unbalanced_braces_are_errors() {
        assert!(BraceScanner::new(Language::C).functions("}\n").is_err());
        assert!(BraceScanner::new(Language::C).functions("void f() {\n").is_err());
    }
}
