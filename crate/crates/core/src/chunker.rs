//! Noun-phrase chunking with regular expressions over part-of-speech tags.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::masking::{is_placeholder, FormulaTable};
use crate::tagger::{Tag, TaggedSentence};

const DEFAULT_GRAMMAR: &str = include_str!("../data/chunk_grammar.txt");

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("rule {rule:?}, column {column}: {message}")]
    Syntax {
        rule: String,
        column: usize,
        message: String,
    },
    #[error("grammar line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("grammar has no rules")]
    Empty,
    #[error("duplicate rule name {0:?}")]
    DuplicateRule(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One position of a tag pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symbol {
    Tag(Tag),
    /// A formula placeholder carrying the given tag, or any tag.
    Formula(Option<Tag>),
}

impl Symbol {
    fn matches(self, tag: Tag, formula: bool) -> bool {
        match self {
            Symbol::Tag(t) => t == tag,
            Symbol::Formula(None) => formula,
            Symbol::Formula(Some(t)) => formula && t == tag,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Inst {
    Class(Vec<Symbol>),
    Split(usize, usize),
    Jump(usize),
    Accept,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Class(Vec<Symbol>),
    Concat(Vec<Node>),
    Alt(Vec<Node>),
    Optional(Box<Node>),
    Star(Box<Node>),
    Plus(Box<Node>),
}

struct Parser<'a> {
    rule: &'a str,
    chars: Vec<char>,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: impl Into<String>) -> GrammarError {
        GrammarError::Syntax {
            rule: self.rule.to_string(),
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn alternation(&mut self) -> Result<Node, GrammarError> {
        let mut branches = vec![self.sequence()?];
        while self.peek() == Some('|') {
            self.pos += 1;
            branches.push(self.sequence()?);
        }
        Ok(if branches.len() == 1 {
            branches.pop().expect("one branch")
        } else {
            Node::Alt(branches)
        })
    }

    fn sequence(&mut self) -> Result<Node, GrammarError> {
        let mut items = Vec::new();
        while let Some(c) = self.peek() {
            let atom = match c {
                '<' => self.class()?,
                '(' => {
                    self.pos += 1;
                    let inner = self.alternation()?;
                    if self.peek() != Some(')') {
                        return Err(self.error("expected ')'"));
                    }
                    self.pos += 1;
                    inner
                }
                '|' | ')' => break,
                other => return Err(self.error(format!("unexpected character {other:?}"))),
            };
            let node = match self.peek() {
                Some('?') => Node::Optional(Box::new(atom)),
                Some('*') => Node::Star(Box::new(atom)),
                Some('+') => Node::Plus(Box::new(atom)),
                _ => {
                    items.push(atom);
                    continue;
                }
            };
            self.pos += 1;
            items.push(node);
        }
        if items.is_empty() {
            return Err(self.error("empty pattern"));
        }
        Ok(Node::Concat(items))
    }

    fn class(&mut self) -> Result<Node, GrammarError> {
        let open = self.pos;
        self.pos += 1;
        let close = self.chars[self.pos..]
            .iter()
            .position(|&c| c == '>')
            .map(|i| self.pos + i)
            .ok_or_else(|| {
                self.pos = open;
                self.error("unterminated '<'")
            })?;
        let body: String = self.chars[self.pos..close].iter().collect();
        let mut symbols = Vec::new();
        let mut col = self.pos;
        for name in body.split('|') {
            let sym = parse_symbol(name.trim()).ok_or_else(|| {
                self.pos = col;
                self.error(format!("unknown tag {:?}", name.trim()))
            })?;
            symbols.push(sym);
            col += name.chars().count() + 1;
        }
        self.pos = close + 1;
        Ok(Node::Class(symbols))
    }
}

fn parse_symbol(name: &str) -> Option<Symbol> {
    if name == "FORMULA" {
        return Some(Symbol::Formula(None));
    }
    if let Some(tag) = name.strip_prefix("FORMULA-") {
        return tag.parse().ok().map(|t| Symbol::Formula(Some(t)));
    }
    name.parse().ok().map(Symbol::Tag)
}

fn compile_node(node: &Node, prog: &mut Vec<Inst>) {
    match node {
        Node::Class(symbols) => prog.push(Inst::Class(symbols.clone())),
        Node::Concat(items) => items.iter().for_each(|n| compile_node(n, prog)),
        Node::Alt(branches) => {
            let mut jumps = Vec::new();
            for (i, b) in branches.iter().enumerate() {
                if i + 1 < branches.len() {
                    let split = prog.len();
                    prog.push(Inst::Split(split + 1, 0));
                    compile_node(b, prog);
                    jumps.push(prog.len());
                    prog.push(Inst::Jump(0));
                    let next = prog.len();
                    prog[split] = Inst::Split(split + 1, next);
                } else {
                    compile_node(b, prog);
                }
            }
            let end = prog.len();
            for j in jumps {
                prog[j] = Inst::Jump(end);
            }
        }
        Node::Optional(inner) => {
            let split = prog.len();
            prog.push(Inst::Split(0, 0));
            compile_node(inner, prog);
            let end = prog.len();
            prog[split] = Inst::Split(split + 1, end);
        }
        Node::Star(inner) => {
            let split = prog.len();
            prog.push(Inst::Split(0, 0));
            compile_node(inner, prog);
            prog.push(Inst::Jump(split));
            let end = prog.len();
            prog[split] = Inst::Split(split + 1, end);
        }
        Node::Plus(inner) => {
            let start = prog.len();
            compile_node(inner, prog);
            let split = prog.len();
            prog.push(Inst::Split(start, split + 1));
        }
    }
}

/// A compiled tag pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    source: String,
    prog: Vec<Inst>,
}

impl Pattern {
    pub fn compile(rule: &str, source: &str) -> Result<Self, GrammarError> {
        let mut parser = Parser {
            rule,
            chars: source.chars().collect(),
            pos: 0,
        };
        let node = parser.alternation()?;
        if parser.peek().is_some() {
            return Err(parser.error("unbalanced ')'"));
        }
        let mut prog = Vec::new();
        compile_node(&node, &mut prog);
        prog.push(Inst::Accept);
        Ok(Pattern {
            source: source.to_string(),
            prog,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn closure(&self, pcs: impl IntoIterator<Item = usize>) -> Vec<usize> {
        let mut seen = vec![false; self.prog.len()];
        let mut stack: Vec<usize> = pcs.into_iter().collect();
        let mut out = Vec::new();
        while let Some(pc) = stack.pop() {
            if std::mem::replace(&mut seen[pc], true) {
                continue;
            }
            match self.prog[pc] {
                Inst::Split(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                Inst::Jump(a) => stack.push(a),
                _ => out.push(pc),
            }
        }
        out
    }

    /// Length of the longest nonempty match starting at `start`.
    pub fn longest_match(&self, items: &[(Tag, bool)], start: usize) -> Option<usize> {
        let mut states = self.closure([0]);
        let mut best = None;
        for (offset, &(tag, formula)) in items[start..].iter().enumerate() {
            let next: Vec<usize> = states
                .iter()
                .filter_map(|&pc| match &self.prog[pc] {
                    Inst::Class(symbols) if symbols.iter().any(|s| s.matches(tag, formula)) => {
                        Some(pc + 1)
                    }
                    _ => None,
                })
                .collect();
            if next.is_empty() {
                break;
            }
            states = self.closure(next);
            if states.iter().any(|&pc| self.prog[pc] == Inst::Accept) {
                best = Some(offset + 1);
            }
        }
        best
    }

    /// True if the whole item sequence matches.
    pub fn matches_exactly(&self, items: &[(Tag, bool)]) -> bool {
        let mut states = self.closure([0]);
        for &(tag, formula) in items {
            let next: Vec<usize> = states
                .iter()
                .filter_map(|&pc| match &self.prog[pc] {
                    Inst::Class(symbols) if symbols.iter().any(|s| s.matches(tag, formula)) => {
                        Some(pc + 1)
                    }
                    _ => None,
                })
                .collect();
            states = self.closure(next);
        }
        states.iter().any(|&pc| self.prog[pc] == Inst::Accept)
    }
}

/// Ordered named chunk rules.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkGrammar {
    rules: Vec<(String, Pattern)>,
}

impl ChunkGrammar {
    pub fn compile<N: AsRef<str>, P: AsRef<str>>(
        patterns: &[(N, P)],
    ) -> Result<Self, GrammarError> {
        if patterns.is_empty() {
            return Err(GrammarError::Empty);
        }
        let mut names = HashSet::new();
        let mut rules = Vec::with_capacity(patterns.len());
        for (name, pat) in patterns {
            let name = name.as_ref();
            if !names.insert(name.to_string()) {
                return Err(GrammarError::DuplicateRule(name.to_string()));
            }
            rules.push((name.to_string(), Pattern::compile(name, pat.as_ref())?));
        }
        Ok(ChunkGrammar { rules })
    }

    /// Parses `name: pattern` lines; blank lines and `#` comments are
    /// skipped.
    pub fn parse(src: &str) -> Result<Self, GrammarError> {
        let mut pairs = Vec::new();
        for (i, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (name, pat) = line.split_once(':').ok_or(GrammarError::Line {
                line: i + 1,
                message: "expected `name: pattern`".into(),
            })?;
            let name = name.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return Err(GrammarError::Line {
                    line: i + 1,
                    message: format!("invalid rule name {name:?}"),
                });
            }
            pairs.push((name.to_string(), pat.trim().to_string()));
        }
        Self::compile(&pairs)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GrammarError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_GRAMMAR).expect("bundled grammar compiles")
    }

    pub fn rules(&self) -> impl Iterator<Item = (&str, &Pattern)> {
        self.rules.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn rule(&self, name: &str) -> Option<&Pattern> {
        self.rules.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn with_rule(mut self, name: &str, pattern: &str) -> Result<Self, GrammarError> {
        if self.rule(name).is_some() {
            return Err(GrammarError::DuplicateRule(name.to_string()));
        }
        self.rules
            .push((name.to_string(), Pattern::compile(name, pattern)?));
        Ok(self)
    }

    /// Non-overlapping chunks as `(start, end, rule index)`, scanning left to
    /// right and taking the longest match at each position; earlier rules
    /// win ties.
    pub fn chunk_spans(&self, items: &[(Tag, bool)]) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < items.len() {
            let mut best: Option<(usize, usize)> = None;
            for (r, (_, pat)) in self.rules.iter().enumerate() {
                if let Some(len) = pat.longest_match(items, i) {
                    if best.is_none_or(|(l, _)| len > l) {
                        best = Some((len, r));
                    }
                }
            }
            match best {
                Some((len, r)) => {
                    out.push((i, i + len, r));
                    i += len;
                }
                None => i += 1,
            }
        }
        out
    }
}

impl Default for ChunkGrammar {
    fn default() -> Self {
        Self::bundled()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NounPhrase {
    /// Tokens with formulas restored.
    pub tokens: Vec<String>,
    pub tag_sequence: Vec<Tag>,
    pub sentence_index: usize,
    /// Token range `[start, end)` within the sentence.
    pub span: (usize, usize),
    pub contains_formula: bool,
    /// TeX source of every formula in the phrase.
    pub formulas: Vec<String>,
    pub rule: String,
    /// The phrase text without a leading determiner.
    pub normalized: String,
}

impl NounPhrase {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn sentence_items(tagged: &TaggedSentence) -> Vec<(Tag, bool)> {
    tagged
        .pairs
        .iter()
        .map(|(w, t)| (*t, is_placeholder(w)))
        .collect()
}

/// Chunks one tagged (masked) sentence and restores formulas in the
/// resulting phrases.
pub fn extract_nps(
    tagged: &TaggedSentence,
    sentence_index: usize,
    grammar: &ChunkGrammar,
    table: &FormulaTable,
) -> Vec<NounPhrase> {
    let items = sentence_items(tagged);
    grammar
        .chunk_spans(&items)
        .into_iter()
        .map(|(start, end, r)| {
            let pairs = &tagged.pairs[start..end];
            let mut formulas = Vec::new();
            let mut contains_formula = false;
            let tokens: Vec<String> = pairs
                .iter()
                .map(|(w, _)| {
                    if w.contains(crate::masking::PLACEHOLDER_PREFIX) {
                        let (restored, _) = table.unmask_report(w);
                        for (ph, tex) in table.entries() {
                            if w.contains(ph) {
                                contains_formula = true;
                                formulas.push(tex.to_string());
                            }
                        }
                        contains_formula |= is_placeholder(w);
                        restored
                    } else {
                        w.clone()
                    }
                })
                .collect();
            let body = match pairs.first() {
                Some((_, Tag::DT)) if tokens.len() > 1 => &tokens[1..],
                _ => &tokens[..],
            };
            NounPhrase {
                normalized: body.join(" "),
                tokens,
                tag_sequence: pairs.iter().map(|&(_, t)| t).collect(),
                sentence_index,
                span: (start, end),
                contains_formula,
                formulas,
                rule: grammar.rules[r].0.clone(),
            }
        })
        .collect()
}

/// True if the phrase's tags (and formula flags, derived from `masked`)
/// fully match its recorded rule.
pub fn replays(np: &NounPhrase, masked: &TaggedSentence, grammar: &ChunkGrammar) -> bool {
    let (s, e) = np.span;
    if s >= e || e > masked.len() {
        return false;
    }
    let items = sentence_items(masked);
    grammar
        .rule(&np.rule)
        .is_some_and(|p| p.matches_exactly(&items[s..e]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn items(tags: &[Tag]) -> Vec<(Tag, bool)> {
        tags.iter().map(|&t| (t, false)).collect()
    }

    #[test]
    fn basic_rule() {
        let p = Pattern::compile("r", "<DT>?<JJ>*<NN>").unwrap();
        assert!(p.matches_exactly(&items(&[Tag::DT, Tag::JJ, Tag::NN])));
        assert!(p.matches_exactly(&items(&[Tag::NN])));
        assert!(!p.matches_exactly(&items(&[Tag::DT, Tag::JJ])));
        assert_eq!(p.longest_match(&items(&[Tag::DT, Tag::NN, Tag::NN]), 0), Some(2));
    }

    #[test]
    fn plus_is_one_chunk() {
        let g = ChunkGrammar::compile(&[("n", "<NN>+")]).unwrap();
        assert_eq!(g.chunk_spans(&items(&[Tag::NN, Tag::NN])), vec![(0, 2, 0)]);
    }

    #[test]
    fn syntax_errors_have_positions() {
        let err = Pattern::compile("r", "<DT><XX>").unwrap_err();
        match err {
            GrammarError::Syntax { column, message, .. } => {
                assert_eq!(column, 6);
                assert!(message.contains("XX"));
            }
            e => panic!("{e}"),
        }
        assert!(Pattern::compile("r", "<DT").is_err());
        assert!(Pattern::compile("r", "(<DT>").is_err());
        assert!(Pattern::compile("r", "<DT>)").is_err());
        assert!(Pattern::compile("r", "").is_err());
        assert!(Pattern::compile("r", "*").is_err());
        assert!(ChunkGrammar::compile::<&str, &str>(&[]).is_err());
    }

    #[test]
    fn groups_and_alternation() {
        let p = Pattern::compile("r", "<NN>(<,><NN>)+|<JJ>").unwrap();
        assert!(p.matches_exactly(&items(&[Tag::NN, Tag::Comma, Tag::NN])));
        assert!(!p.matches_exactly(&items(&[Tag::NN])));
        assert!(p.matches_exactly(&items(&[Tag::JJ])));
        let q = Pattern::compile("r", "(<DT>?)*<NN>").unwrap();
        assert!(q.matches_exactly(&items(&[Tag::DT, Tag::DT, Tag::NN])));
    }

    #[test]
    fn formula_symbols() {
        let p = Pattern::compile("r", "<FORMULA-NN>").unwrap();
        assert!(p.matches_exactly(&[(Tag::NN, true)]));
        assert!(!p.matches_exactly(&[(Tag::NN, false)]));
        assert!(!p.matches_exactly(&[(Tag::JJ, true)]));
        let any = Pattern::compile("r", "<FORMULA>").unwrap();
        assert!(any.matches_exactly(&[(Tag::JJ, true)]));
    }

    #[test]
    fn bundled_grammar_has_three_rules() {
        let g = ChunkGrammar::bundled();
        let names: Vec<&str> = g.rules().map(|(n, _)| n).collect();
        assert_eq!(names, ["formula_list", "basic", "eponym"]);
    }
}
