//! Top-level classes of the Mathematics Subject Classification.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const TABLE_SRC: &str = include_str!("../data/msc_top.tsv");

/// Number of top-level MSC classes.
pub const TOP_LEVEL_COUNT: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown MSC top-level code {0:?}")]
pub struct UnknownMscCode(pub String);

struct Entry {
    code: [u8; 2],
    label: &'static str,
}

fn table() -> &'static [Entry] {
    static TABLE: OnceLock<Vec<Entry>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut entries: Vec<Entry> = TABLE_SRC
            .lines()
            .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
            .map(|l| {
                let (code, label) = l.split_once('\t').expect("msc table line without tab");
                let b = code.as_bytes();
                assert!(b.len() == 2, "msc table code must have two characters");
                Entry {
                    code: [b[0], b[1]],
                    label,
                }
            })
            .collect();
        entries.sort_by_key(|e| e.code);
        assert_eq!(entries.len(), TOP_LEVEL_COUNT);
        entries
    })
}

/// A validated two-character top-level MSC code such as `35`.
///
/// Codes order like their strings, which is also the row/column order used
/// by the overlap matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct MscCode([u8; 2]);

impl MscCode {
    /// Parses a code, accepting full codes like `35Q30` or `35-XX` by
    /// keeping their first two characters.
    pub fn parse_lenient(s: &str) -> Result<Self, UnknownMscCode> {
        let s = s.trim();
        match s.get(..2) {
            Some(head) => head.parse().map_err(|_| UnknownMscCode(s.to_string())),
            None => Err(UnknownMscCode(s.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).expect("msc codes are ascii digits")
    }

    pub fn label(&self) -> &'static str {
        table()[self.index()].label
    }

    /// Position of this code in the sorted 63-entry table.
    pub fn index(&self) -> usize {
        table()
            .binary_search_by_key(&self.0, |e| e.code)
            .expect("MscCode is always a table member")
    }

    pub fn from_index(i: usize) -> Option<Self> {
        table().get(i).map(|e| MscCode(e.code))
    }

    /// All 63 classes in table order.
    pub fn all() -> impl Iterator<Item = MscCode> {
        table().iter().map(|e| MscCode(e.code))
    }
}

impl FromStr for MscCode {
    type Err = UnknownMscCode;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let b = s.as_bytes();
        if b.len() != 2 {
            return Err(UnknownMscCode(s.to_string()));
        }
        let code = [b[0], b[1]];
        if table().binary_search_by_key(&code, |e| e.code).is_ok() {
            Ok(MscCode(code))
        } else {
            Err(UnknownMscCode(s.to_string()))
        }
    }
}

impl TryFrom<String> for MscCode {
    type Error = UnknownMscCode;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<MscCode> for String {
    fn from(c: MscCode) -> String {
        c.as_str().to_string()
    }
}

impl fmt::Display for MscCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
