//! Sentence splitting, word tokenization and acronym annotation.
//!
//! All functions expect masked text: formulas have already been replaced by
//! placeholder words, which contain no sentence terminators.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::msc::MscCode;

const ABBREVIATIONS_SRC: &str = include_str!("../data/abbreviations.txt");
const ACRONYMS_SRC: &str = include_str!("../data/acronyms.tsv");

fn abbreviations() -> &'static HashSet<String> {
    static SET: OnceLock<HashSet<String>> = OnceLock::new();
    SET.get_or_init(|| {
        ABBREVIATIONS_SRC
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect()
    })
}

fn is_abbreviation(word: &str) -> bool {
    abbreviations().contains(&word.to_lowercase())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<String>,
    /// Character offsets `[start, end)` into the masked source.
    pub span: (usize, usize),
}

const CLOSERS: &[char] = &[')', ']', '}', '"', '\''];

fn ends_sentence(word: &str) -> bool {
    let core = word.trim_end_matches(CLOSERS);
    let Some(last) = core.chars().last() else {
        return false;
    };
    match last {
        '!' | '?' => true,
        '.' => !is_abbreviation(core),
        _ => false,
    }
}

/// Splits masked text into sentences at `.`, `!` and `?` that end a
/// whitespace-delimited word, except after known abbreviations.
pub fn split_sentences(masked_text: &str) -> Vec<Sentence> {
    let mut sentences = Vec::new();
    // (byte, char) positions of the current sentence start and end.
    let mut start: Option<(usize, usize)> = None;
    let mut end = (0, 0);
    let mut char_pos = 0;
    let mut word_start = None;

    let flush = |start: (usize, usize), end: (usize, usize), sentences: &mut Vec<Sentence>| {
        let tokens = tokenize(&masked_text[start.0..end.0]);
        if !tokens.is_empty() {
            sentences.push(Sentence {
                tokens,
                span: (start.1, end.1),
            });
        }
    };

    let mut chars = masked_text.char_indices().peekable();
    while let Some((byte, c)) = chars.next() {
        if c.is_whitespace() {
            char_pos += 1;
            continue;
        }
        if word_start.is_none() {
            word_start = Some(byte);
            start.get_or_insert((byte, char_pos));
        }
        char_pos += 1;
        let at_word_end = chars.peek().is_none_or(|(_, n)| n.is_whitespace());
        if at_word_end {
            let wb = word_start.take().expect("inside a word");
            let word_end = byte + c.len_utf8();
            end = (word_end, char_pos);
            if ends_sentence(&masked_text[wb..word_end]) {
                flush(start.take().expect("sentence started"), end, &mut sentences);
            }
        }
    }
    if let Some(s) = start {
        flush(s, end, &mut sentences);
    }
    sentences
}

const LEADING: &[char] = &['(', '[', '{', '"', '`', '\''];
const TRAILING: &[char] = &[',', ';', ':', '.', '!', '?', ')', ']', '}', '"', '\''];

fn tokenize_word(word: &str, out: &mut Vec<String>) {
    if word == "'s" || word == "'S" {
        out.push(word.to_string());
        return;
    }
    let mut w = word;
    while let Some(c) = w.chars().next().filter(|c| LEADING.contains(c)) {
        out.push(c.to_string());
        w = &w[c.len_utf8()..];
    }
    let mut trailing = Vec::new();
    while let Some(c) = w.chars().last().filter(|c| TRAILING.contains(c)) {
        if c == '.' && is_abbreviation(w) {
            break;
        }
        if (w.ends_with("'s") || w.ends_with("'S")) && w.len() > 2 {
            break;
        }
        trailing.push(c.to_string());
        w = &w[..w.len() - c.len_utf8()];
    }
    if w.len() > 2 && (w.ends_with("'s") || w.ends_with("'S")) {
        out.push(w[..w.len() - 2].to_string());
        out.push(w[w.len() - 2..].to_string());
    } else if !w.is_empty() {
        out.push(w.to_string());
    }
    out.extend(trailing.into_iter().rev());
}

/// Penn-Treebank-style word tokenization: punctuation becomes separate
/// tokens, hyphenated words and placeholders stay whole, possessive `'s` is
/// split off.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        tokenize_word(word, &mut out);
    }
    out
}

const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "these", "that", "those", "some", "any", "each", "every", "all",
    "both", "either", "neither", "another", "no",
];

/// Canonical key for phrase lookups: lowercase outside TeX, whitespace
/// collapsed, one leading determiner removed.
pub fn normalize_phrase(phrase: &str) -> String {
    let mut lowered = String::with_capacity(phrase.len());
    match crate::masking::find_math_segments(phrase) {
        Ok(segments) => {
            let mut last = 0;
            for (s, e) in segments {
                lowered.push_str(&phrase[last..s].to_lowercase());
                lowered.push_str(&phrase[s..e]);
                last = e;
            }
            lowered.push_str(&phrase[last..].to_lowercase());
        }
        Err(_) => lowered = phrase.to_lowercase(),
    }
    let mut words = lowered.split_whitespace().peekable();
    if let Some(first) = words.peek() {
        if DETERMINERS.contains(first) {
            words.next();
        }
    }
    words.collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("acronym lexicon line {line}: {message}")]
    Invalid { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcronymSense {
    pub expansion: String,
    pub msc_top: Option<MscCode>,
    pub frequency: u64,
}

/// Acronyms with every known expansion.
#[derive(Debug, Clone, Default)]
pub struct AcronymLexicon {
    entries: HashMap<String, Vec<AcronymSense>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcronymExpansion {
    pub index: usize,
    pub acronym: String,
    pub expansion: String,
}

fn valid_acronym(a: &str) -> bool {
    a.chars().count() >= 2 && a.chars().next().is_some_and(char::is_uppercase)
}

impl AcronymLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// The lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(ACRONYMS_SRC).expect("bundled acronym lexicon is valid")
    }

    /// Parses `ACRONYM<TAB>expansion<TAB>msc_top<TAB>frequency` lines. The
    /// MSC column may be empty or `-`.
    pub fn parse(src: &str) -> Result<Self, LexiconError> {
        let mut lex = AcronymLexicon::new();
        for (i, line) in src.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let invalid = |message: String| LexiconError::Invalid {
                line: line_no,
                message,
            };
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(invalid(format!("expected 4 columns, found {}", cols.len())));
            }
            let msc_top = match cols[2].trim() {
                "" | "-" => None,
                c => Some(c.parse().map_err(|e| invalid(format!("{e}")))?),
            };
            let frequency = cols[3]
                .trim()
                .parse()
                .map_err(|_| invalid(format!("bad frequency {:?}", cols[3])))?;
            lex.insert(
                cols[0].trim(),
                AcronymSense {
                    expansion: cols[1].trim().to_string(),
                    msc_top,
                    frequency,
                },
            )
            .map_err(invalid)?;
        }
        Ok(lex)
    }

    pub fn insert(&mut self, acronym: &str, sense: AcronymSense) -> Result<(), String> {
        if !valid_acronym(acronym) {
            return Err(format!("invalid acronym {acronym:?}"));
        }
        self.entries.entry(acronym.to_string()).or_default().push(sense);
        Ok(())
    }

    pub fn senses(&self, acronym: &str) -> Option<&[AcronymSense]> {
        self.entries.get(acronym).map(Vec::as_slice)
    }

    /// Finds the lexicon key for a token, accepting a plural `s`.
    pub fn lookup_token<'a>(&'a self, token: &'a str) -> Option<&'a str> {
        if let Some((k, _)) = self.entries.get_key_value(token) {
            return Some(k);
        }
        let singular = token.strip_suffix('s')?;
        self.entries.get_key_value(singular).map(|(k, _)| k.as_str())
    }

    /// Picks the sense matching `context` if any, then the most frequent,
    /// then the lexicographically least expansion.
    pub fn resolve(&self, acronym: &str, context: Option<MscCode>) -> Option<&AcronymSense> {
        fn best<'a>(it: impl Iterator<Item = &'a AcronymSense>) -> Option<&'a AcronymSense> {
            it.min_by(|a, b| {
                b.frequency
                    .cmp(&a.frequency)
                    .then_with(|| a.expansion.cmp(&b.expansion))
            })
        }
        let senses = self.entries.get(acronym)?;
        context
            .and_then(|c| best(senses.iter().filter(|s| s.msc_top == Some(c))))
            .or_else(|| best(senses.iter()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Records the chosen expansion for every acronym token. Tokens are not
/// rewritten, so tagging still sees the surface text.
pub fn expand_acronyms(
    tokens: &[String],
    lex: &AcronymLexicon,
    context_msc: Option<MscCode>,
) -> Vec<AcronymExpansion> {
    tokens
        .iter()
        .enumerate()
        .filter_map(|(index, tok)| {
            let acronym = lex.lookup_token(tok)?;
            let sense = lex.resolve(acronym, context_msc)?;
            Some(AcronymExpansion {
                index,
                acronym: acronym.to_string(),
                expansion: sense.expansion.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn two_sentences() {
        let s = split_sentences("A b. C d.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].tokens, vec!["A", "b", "."]);
        assert_eq!(s[0].span, (0, 4));
        assert_eq!(s[1].span, (5, 9));
    }

    #[test]
    fn phrase_normalization() {
        assert_eq!(normalize_phrase("The  Distance function"), "distance function");
        assert_eq!(normalize_phrase("the"), "");
        assert_eq!(normalize_phrase("A space $X$"), "space $X$");
        assert_eq!(normalize_phrase("  "), "");
    }

    #[test]
    fn empty_input() {
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("   \n ").is_empty());
    }

    #[test]
    fn abbreviations_do_not_split() {
        let s = split_sentences("See e.g. the work of Dr. Smith. Then more.");
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].tokens.last().unwrap(), ".");
    }

    #[test]
    fn masked_peano_is_one_sentence() {
        let text = "The classical Peano theorem states that in finite dimensional\n\
                    spaces the Cauchy problem formula-kqnompjyomsqomppsk,\n\
                    formula-kqomolugwpjqolugwk, has a solution provided formula-kyk\n\
                    is continuous.";
        let s = split_sentences(text);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].tokens.len(), 25);
        assert_eq!(s[0].tokens[13], "formula-kqnompjyomsqomppsk");
        assert_eq!(s[0].tokens[14], ",");
    }

    #[test]
    fn trailing_text_without_terminator() {
        let s = split_sentences("First one! second part");
        assert_eq!(s.len(), 2);
        assert_eq!(s[1].tokens, vec!["second", "part"]);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            toks("problem formula-abc, has"),
            vec!["problem", "formula-abc", ",", "has"]
        );
        assert_eq!(toks("fixed-point theorems"), vec!["fixed-point", "theorems"]);
        assert_eq!(toks("x"), vec!["x"]);
        assert_eq!(
            toks("(see Banach's theorem)."),
            vec!["(", "see", "Banach", "'s", "theorem", ")", "."]
        );
        assert_eq!(toks("i.e., 3.5"), vec!["i.e.", ",", "3.5"]);
        assert_eq!(toks("Browder--Ky Fan"), vec!["Browder--Ky", "Fan"]);
    }

    fn lex_with(entries: &[(&str, &str, Option<&str>, u64)]) -> AcronymLexicon {
        let mut lex = AcronymLexicon::new();
        for (a, e, m, f) in entries {
            lex.insert(
                a,
                AcronymSense {
                    expansion: e.to_string(),
                    msc_top: m.map(|m| m.parse().unwrap()),
                    frequency: *f,
                },
            )
            .unwrap();
        }
        lex
    }

    #[test]
    fn single_sense_expansion() {
        let lex = lex_with(&[("SVM", "support vector machine", Some("68"), 10)]);
        let ex = expand_acronyms(&toks("SVM"), &lex, None);
        assert_eq!(
            ex,
            vec![AcronymExpansion {
                index: 0,
                acronym: "SVM".into(),
                expansion: "support vector machine".into()
            }]
        );
    }

    #[test]
    fn context_beats_frequency() {
        let lex = lex_with(&[
            ("PDE", "probability density estimate", Some("62"), 100),
            ("PDE", "partial differential equation", Some("35"), 5),
        ]);
        let ctx = Some("35".parse().unwrap());
        let ex = expand_acronyms(&toks("the PDEs"), &lex, ctx);
        assert_eq!(ex[0].index, 1);
        assert_eq!(ex[0].expansion, "partial differential equation");
        let ex = expand_acronyms(&toks("PDE"), &lex, None);
        assert_eq!(ex[0].expansion, "probability density estimate");
        // No sense for the context class: fall back to frequency.
        let ex = expand_acronyms(&toks("PDE"), &lex, Some("05".parse().unwrap()));
        assert_eq!(ex[0].expansion, "probability density estimate");
    }

    #[test]
    fn frequency_tie_is_lexicographic() {
        let lex = lex_with(&[("LP", "b-thing", None, 3), ("LP", "a-thing", None, 3)]);
        assert_eq!(lex.resolve("LP", None).unwrap().expansion, "a-thing");
    }

    #[test]
    fn empty_tokens() {
        assert!(expand_acronyms(&[], &AcronymLexicon::bundled(), None).is_empty());
    }

    #[test]
    fn bundled_lexicon_parses() {
        let lex = AcronymLexicon::bundled();
        assert!(lex.senses("PDE").unwrap().len() >= 2);
        assert!(AcronymLexicon::parse("x\tfoo\t\t1").is_err());
        assert!(AcronymLexicon::parse("XY\tfoo\t99\t1").is_err());
        assert!(AcronymLexicon::parse("XY\tfoo\t-\tmany").is_err());
    }

    proptest! {
        #[test]
        fn tokenization_is_idempotent(s in "[a-zA-Z0-9 ,.;:()'\"!?-]{0,40}") {
            let once = tokenize(&s);
            let again = tokenize(&once.join(" "));
            prop_assert_eq!(&once, &again);
            for t in &once {
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert!(!t.is_empty());
            }
        }

        #[test]
        fn placeholders_stay_whole(pre in "[a-z]{1,6}", letters in "[a-z]{1,16}", punct in "[,.;:)]?") {
            let p = format!("formula-{letters}");
            let toks = tokenize(&format!("{pre} {p}{punct} end"));
            prop_assert!(toks.contains(&p));
        }

        #[test]
        fn expansion_never_changes_token_count(s in "[A-Za-z ]{0,30}") {
            let tokens = tokenize(&s);
            let lex = AcronymLexicon::bundled();
            for e in expand_acronyms(&tokens, &lex, None) {
                prop_assert!(e.index < tokens.len());
            }
        }
    }
}
