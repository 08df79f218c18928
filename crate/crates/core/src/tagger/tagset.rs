use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

macro_rules! tagset {
    ($($variant:ident => $name:literal),+ $(,)?) => {
        /// The 45 Penn Treebank part-of-speech tags.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub enum Tag {
            $($variant),+
        }

        impl Tag {
            /// Every tag, in enumeration order. Viterbi ties resolve toward
            /// earlier entries.
            pub const ALL: [Tag; 45] = [$(Tag::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Tag::$variant => $name),+
                }
            }
        }

        impl FromStr for Tag {
            type Err = UnknownTag;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok(Tag::$variant),)+
                    "-LRB-" => Ok(Tag::LeftParen),
                    "-RRB-" => Ok(Tag::RightParen),
                    _ => Err(UnknownTag(s.to_string())),
                }
            }
        }
    };
}

tagset! {
    CC => "CC",
    CD => "CD",
    DT => "DT",
    EX => "EX",
    FW => "FW",
    IN => "IN",
    JJ => "JJ",
    JJR => "JJR",
    JJS => "JJS",
    LS => "LS",
    MD => "MD",
    NN => "NN",
    NNS => "NNS",
    NNP => "NNP",
    NNPS => "NNPS",
    PDT => "PDT",
    POS => "POS",
    PRP => "PRP",
    PRPS => "PRP$",
    RB => "RB",
    RBR => "RBR",
    RBS => "RBS",
    RP => "RP",
    SYM => "SYM",
    TO => "TO",
    UH => "UH",
    VB => "VB",
    VBD => "VBD",
    VBG => "VBG",
    VBN => "VBN",
    VBP => "VBP",
    VBZ => "VBZ",
    WDT => "WDT",
    WP => "WP",
    WPS => "WP$",
    WRB => "WRB",
    Pound => "#",
    Dollar => "$",
    Comma => ",",
    Period => ".",
    Colon => ":",
    LeftParen => "(",
    RightParen => ")",
    OpenQuote => "``",
    CloseQuote => "''",
}

pub const TAG_COUNT: usize = 45;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown part-of-speech tag {0:?}")]
pub struct UnknownTag(pub String);

impl Tag {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Tag> {
        Tag::ALL.get(i).copied()
    }

    pub fn is_noun(self) -> bool {
        matches!(self, Tag::NN | Tag::NNS | Tag::NNP | Tag::NNPS)
    }

    /// Tags an unseen word may plausibly take.
    pub fn is_open_class(self) -> bool {
        matches!(
            self,
            Tag::NN
                | Tag::NNS
                | Tag::NNP
                | Tag::NNPS
                | Tag::JJ
                | Tag::JJR
                | Tag::JJS
                | Tag::RB
                | Tag::VB
                | Tag::VBD
                | Tag::VBG
                | Tag::VBN
                | Tag::VBP
                | Tag::VBZ
                | Tag::FW
                | Tag::CD
        )
    }
}

impl TryFrom<String> for Tag {
    type Error = UnknownTag;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Tag> for String {
    fn from(t: Tag) -> String {
        t.as_str().to_string()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A tag or one of the sentence-boundary pseudo-states used in transition
/// tables. The pseudo-states never appear in tagger output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    Start,
    Tag(Tag),
    Stop,
}

impl State {
    pub fn as_str(self) -> &'static str {
        match self {
            State::Start => "START",
            State::Stop => "STOP",
            State::Tag(t) => t.as_str(),
        }
    }
}

impl FromStr for State {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "START" => Ok(State::Start),
            "STOP" => Ok(State::Stop),
            _ => s.parse().map(State::Tag),
        }
    }
}
