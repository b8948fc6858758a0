//! Token counting and truncation behind a pluggable interface.

use serde::{Deserialize, Serialize};

/// Counts and truncates text in model tokens.
pub trait Tokenizer: Send + Sync {
    /// Byte spans `(start, end)` of every token, in order.
    fn token_spans(&self, text: &str) -> Vec<(usize, usize)>;

    fn count(&self, text: &str) -> usize {
        self.token_spans(text).len()
    }

    /// Longest prefix of `text` holding at most `max_tokens` tokens.
    fn truncate<'a>(&self, text: &'a str, max_tokens: usize) -> &'a str {
        let spans = self.token_spans(text);
        if spans.len() <= max_tokens {
            return text;
        }
        match max_tokens {
            0 => "",
            n => &text[..spans[n - 1].1],
        }
    }
}

/// Reference tokenizer: every maximal run of alphanumerics/underscores is
/// one token and every other non-whitespace character is a token of its own.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimpleTokenizer;

fn is_word(ch: char) -> bool {
    ch.is_alphanumeric() || ch == '_'
}

impl Tokenizer for SimpleTokenizer {
    fn token_spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut word_start: Option<usize> = None;
        for (idx, ch) in text.char_indices() {
            if is_word(ch) {
                word_start.get_or_insert(idx);
                continue;
            }
            if let Some(start) = word_start.take() {
                spans.push((start, idx));
            }
            if !ch.is_whitespace() {
                spans.push((idx, idx + ch.len_utf8()));
            }
        }
        if let Some(start) = word_start {
            spans.push((start, text.len()));
        }
        spans
    }
}

/// Input/output token limits of the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub input_limit: usize,
    pub output_limit: usize,
}

impl Default for TokenBudget {
    fn default() -> Self {
        TokenBudget { input_limit: 512, output_limit: 256 }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_words_and_punctuation() {
        let t = SimpleTokenizer;
        assert_eq!(t.count("a=1;"), 4);
        assert_eq!(t.count("foo_bar(x, y)"), 6);
        assert_eq!(t.count("   "), 0);
        assert_eq!(t.count("héllo wörld"), 2);
    }

    #[test]
    fn truncate_keeps_leading_tokens() {
        let t = SimpleTokenizer;
        assert_eq!(t.truncate("a b c d", 2), "a b");
        assert_eq!(t.truncate("a b", 5), "a b");
        assert_eq!(t.truncate("x.y", 0), "");
        assert_eq!(t.truncate("x.y", 2), "x.");
    }

    #[test]
    fn default_budget() {
        assert_eq!(TokenBudget::default(), TokenBudget { input_limit: 512, output_limit: 256 });
    }
}
