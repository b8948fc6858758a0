use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Identifies one buggy hunk of a bug: the file path and the first buggy
/// line. Ordering is by path, then line, which is the order hunks are
/// processed in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HunkId {
    pub path: String,
    pub start: usize,
}

impl HunkId {
    pub fn new(path: impl Into<String>, start: usize) -> Self {
        HunkId { path: path.into(), start }
    }
}

impl fmt::Display for HunkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.path, self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("hunk id `{0}` is not of the form <path>:<line>")]
pub struct BadHunkId(pub String);

impl FromStr for HunkId {
    type Err = BadHunkId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (path, line) = s.rsplit_once(':').ok_or_else(|| BadHunkId(s.to_string()))?;
        let start = line.parse().map_err(|_| BadHunkId(s.to_string()))?;
        if path.is_empty() {
            return Err(BadHunkId(s.to_string()));
        }
        Ok(HunkId::new(path, start))
    }
}

impl Serialize for HunkId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HunkId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parse_and_order() {
        let id: HunkId = "src/a:b.py:12".parse().unwrap();
        assert_eq!(id, HunkId::new("src/a:b.py", 12));
        assert_eq!(id.to_string(), "src/a:b.py:12");
        assert!("nope".parse::<HunkId>().is_err());
        assert!(HunkId::new("a.py", 30) < HunkId::new("b.py", 2));
        assert!(HunkId::new("a.py", 3) < HunkId::new("a.py", 20));
    }
}
