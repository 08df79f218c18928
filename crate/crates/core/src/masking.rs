//! Formula masking.
//!
//! TeX math segments are swapped for opaque placeholder words of the form
//! `formula-<letters>` before tokenization and tagging, then restored
//! afterwards. Placeholders are alphabetic after the fixed prefix so that any
//! word tokenizer keeps them in one piece.
//!
//! Recognised delimiters are `$$...$$`, `$...$`, `\(...\)` and `\[...\]`.
//! A backslash escapes the following character, so `\$` is literal text.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const PLACEHOLDER_PREFIX: &str = "formula-";
const DIGEST_LETTERS: usize = 16;
const MAX_LETTERS: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MaskError {
    #[error("unbalanced math delimiter {delimiter:?} at character offset {offset}")]
    Unbalanced { delimiter: String, offset: usize },
}

impl MaskError {
    pub fn offset(&self) -> usize {
        match self {
            MaskError::Unbalanced { offset, .. } => *offset,
        }
    }
}

/// Bijection between placeholders and the TeX they stand for, including
/// delimiters, in order of first occurrence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TableRepr", into = "TableRepr")]
pub struct FormulaTable {
    doc_salt: String,
    entries: Vec<(String, String)>,
    by_placeholder: HashMap<String, usize>,
    by_tex: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct TableRepr {
    doc_salt: String,
    entries: Vec<TableEntry>,
}

#[derive(Serialize, Deserialize)]
struct TableEntry {
    placeholder: String,
    tex: String,
}

impl From<TableRepr> for FormulaTable {
    fn from(r: TableRepr) -> Self {
        let mut t = FormulaTable::new(r.doc_salt);
        for e in r.entries {
            t.insert(e.placeholder, e.tex);
        }
        t
    }
}

impl From<FormulaTable> for TableRepr {
    fn from(t: FormulaTable) -> Self {
        TableRepr {
            doc_salt: t.doc_salt,
            entries: t
                .entries
                .into_iter()
                .map(|(placeholder, tex)| TableEntry { placeholder, tex })
                .collect(),
        }
    }
}

impl FormulaTable {
    pub fn new(doc_salt: impl Into<String>) -> Self {
        FormulaTable {
            doc_salt: doc_salt.into(),
            ..Default::default()
        }
    }

    /// Builds a table from explicit pairs. Later duplicates of a placeholder
    /// or a TeX string are ignored.
    pub fn from_entries<I, P, T>(doc_salt: &str, entries: I) -> Self
    where
        I: IntoIterator<Item = (P, T)>,
        P: Into<String>,
        T: Into<String>,
    {
        let mut t = FormulaTable::new(doc_salt);
        for (p, tex) in entries {
            t.insert(p.into(), tex.into());
        }
        t
    }

    fn insert(&mut self, placeholder: String, tex: String) {
        if self.by_placeholder.contains_key(&placeholder) || self.by_tex.contains_key(&tex) {
            return;
        }
        let i = self.entries.len();
        self.by_placeholder.insert(placeholder.clone(), i);
        self.by_tex.insert(tex.clone(), i);
        self.entries.push((placeholder, tex));
    }

    pub fn doc_salt(&self) -> &str {
        &self.doc_salt
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(placeholder, tex)` pairs in order of first occurrence.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(p, t)| (p.as_str(), t.as_str()))
    }

    pub fn tex(&self, placeholder: &str) -> Option<&str> {
        self.by_placeholder
            .get(placeholder)
            .map(|&i| self.entries[i].1.as_str())
    }

    pub fn placeholder(&self, tex: &str) -> Option<&str> {
        self.by_tex.get(tex).map(|&i| self.entries[i].0.as_str())
    }

    /// Restores every known placeholder in `s`, returning the text and the
    /// `formula-` words that were not found in the table.
    pub fn unmask_report(&self, s: &str) -> (String, Vec<String>) {
        let mut out = String::with_capacity(s.len());
        let mut unknown = Vec::new();
        let mut rest = s;
        while let Some(pos) = rest.find(PLACEHOLDER_PREFIX) {
            out.push_str(&rest[..pos]);
            let after = &rest[pos + PLACEHOLDER_PREFIX.len()..];
            let run = after
                .bytes()
                .take_while(|b| b.is_ascii_lowercase())
                .count();
            // Text glued to a formula ("$n$th") extends the letter run, so
            // try the longest known prefix of the run.
            let matched = (1..=run.min(MAX_LETTERS)).rev().find_map(|len| {
                let key = &rest[pos..pos + PLACEHOLDER_PREFIX.len() + len];
                self.tex(key).map(|tex| (key.len(), tex))
            });
            match matched {
                Some((key_len, tex)) => {
                    out.push_str(tex);
                    rest = &rest[pos + key_len..];
                }
                None => {
                    if run > 0 {
                        let word_len = PLACEHOLDER_PREFIX.len() + run;
                        unknown.push(rest[pos..pos + word_len].to_string());
                    }
                    // Only the prefix is consumed: "formula-formula-abc" may
                    // hide a real placeholder right after it.
                    let skip = pos + PLACEHOLDER_PREFIX.len();
                    out.push_str(&rest[pos..skip]);
                    rest = &rest[skip..];
                }
            }
        }
        out.push_str(rest);
        (out, unknown)
    }
}

/// True for words that start with the placeholder prefix followed by at
/// least one lowercase letter.
pub fn is_placeholder(token: &str) -> bool {
    token
        .strip_prefix(PLACEHOLDER_PREFIX)
        .and_then(|r| r.bytes().next())
        .is_some_and(|b| b.is_ascii_lowercase())
}

fn letters(mut n: u128, width: Option<usize>, out: &mut String) {
    let mut buf = Vec::new();
    match width {
        Some(w) => {
            for _ in 0..w {
                buf.push(b'a' + (n % 26) as u8);
                n /= 26;
            }
        }
        None => loop {
            buf.push(b'a' + (n % 26) as u8);
            n /= 26;
            if n == 0 {
                break;
            }
        },
    }
    buf.reverse();
    out.push_str(std::str::from_utf8(&buf).expect("ascii"));
}

/// Deterministic placeholder for `tex`: the prefix followed by 16 base-26
/// letters of a SHA-256 digest over the salt and the formula.
pub fn encode_placeholder(tex: &str, doc_salt: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update((doc_salt.len() as u64).to_le_bytes());
    hasher.update(doc_salt.as_bytes());
    hasher.update(tex.as_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 16];
    head.copy_from_slice(&digest[..16]);
    let mut out = String::from(PLACEHOLDER_PREFIX);
    letters(u128::from_be_bytes(head), Some(DIGEST_LETTERS), &mut out);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Delim {
    Dollar,
    DoubleDollar,
    Paren,
    Bracket,
}

impl Delim {
    fn open(self) -> &'static str {
        match self {
            Delim::Dollar => "$",
            Delim::DoubleDollar => "$$",
            Delim::Paren => "\\(",
            Delim::Bracket => "\\[",
        }
    }

    fn close(self) -> &'static [u8] {
        match self {
            Delim::Dollar => b"$",
            Delim::DoubleDollar => b"$$",
            Delim::Paren => b"\\)",
            Delim::Bracket => b"\\]",
        }
    }
}

/// Byte ranges of the math segments in `text`, delimiters included.
pub fn find_math_segments(text: &str) -> Result<Vec<(usize, usize)>, MaskError> {
    let b = text.as_bytes();
    let n = b.len();
    let unbalanced = |at: usize, d: &str| MaskError::Unbalanced {
        delimiter: d.to_string(),
        offset: text[..at].chars().count(),
    };
    let mut segments = Vec::new();
    let mut i = 0;
    while i < n {
        let delim = match b[i] {
            b'\\' if i + 1 < n => match b[i + 1] {
                b'(' => Delim::Paren,
                b'[' => Delim::Bracket,
                b')' => return Err(unbalanced(i, "\\)")),
                b']' => return Err(unbalanced(i, "\\]")),
                _ => {
                    i += 2;
                    continue;
                }
            },
            b'$' if i + 1 < n && b[i + 1] == b'$' => Delim::DoubleDollar,
            b'$' => Delim::Dollar,
            _ => {
                i += 1;
                continue;
            }
        };
        let close = delim.close();
        let mut j = i + delim.open().len();
        let end = loop {
            if j >= n {
                return Err(unbalanced(i, delim.open()));
            }
            if b[j..].starts_with(close) {
                break j + close.len();
            }
            j += if b[j] == b'\\' { 2 } else { 1 };
        };
        segments.push((i, end));
        i = end;
    }
    Ok(segments)
}

/// Replaces every math segment of `text` with its placeholder. Equal
/// formulas share one placeholder.
pub fn mask_formulae(text: &str, doc_salt: &str) -> Result<(String, FormulaTable), MaskError> {
    let segments = find_math_segments(text)?;
    let mut table = FormulaTable::new(doc_salt);
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for (start, end) in segments {
        out.push_str(&text[last..start]);
        let tex = &text[start..end];
        let placeholder = match table.placeholder(tex) {
            Some(p) => p.to_string(),
            None => {
                let base = encode_placeholder(tex, doc_salt);
                let mut candidate = base.clone();
                let mut counter = 1u128;
                while table.tex(&candidate).is_some() {
                    log::warn!("placeholder collision for {tex:?}; appending counter");
                    candidate = base.clone();
                    letters(counter, None, &mut candidate);
                    counter += 1;
                }
                table.insert(candidate.clone(), tex.to_string());
                candidate
            }
        };
        out.push_str(&placeholder);
        last = end;
    }
    out.push_str(&text[last..]);
    Ok((out, table))
}

/// Restores placeholders known to `table`; unknown `formula-` words are left
/// as they are and logged.
pub fn unmask(text: &str, table: &FormulaTable) -> String {
    let (out, unknown) = table.unmask_report(text);
    for w in unknown {
        log::warn!("unknown formula placeholder {w:?}");
    }
    out
}
