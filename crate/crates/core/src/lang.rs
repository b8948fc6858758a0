use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Source languages the scanners and prefixes know about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    Python,
    C,
    JavaScript,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsupported language `{0}` (expected java, python, c or javascript)")]
pub struct UnsupportedLanguage(pub String);

impl Language {
    pub const ALL: [Language; 4] = [Language::Java, Language::Python, Language::C, Language::JavaScript];

    /// Prefix token that opens every encoded generator input.
    pub fn prefix(self) -> &'static str {
        match self {
            Language::Java => "Java",
            Language::Python => "Python",
            Language::C => "C",
            Language::JavaScript => "JavaScript",
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Language::Java => "java",
            Language::Python => "python",
            Language::C => "c",
            Language::JavaScript => "javascript",
        }
    }

    /// Guesses the language from a file name such as `Foo.java` or
    /// `Foo.java.buggy`.
    pub fn from_path(path: &str) -> Option<Language> {
        let name = path
            .strip_suffix(".buggy")
            .or_else(|| path.strip_suffix(".fixed"))
            .unwrap_or(path);
        let ext = name.rsplit_once('.')?.1.to_ascii_lowercase();
        match ext.as_str() {
            "java" => Some(Language::Java),
            "py" => Some(Language::Python),
            "c" | "h" => Some(Language::C),
            "js" | "mjs" | "cjs" | "jsx" => Some(Language::JavaScript),
            _ => None,
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Language {
    type Err = UnsupportedLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "java" => Ok(Language::Java),
            "python" | "py" => Ok(Language::Python),
            "c" => Ok(Language::C),
            "javascript" | "js" => Ok(Language::JavaScript),
            other => Err(UnsupportedLanguage(other.to_string())),
        }
    }
}
