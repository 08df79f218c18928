//! Part-of-speech tagging with a bigram hidden Markov model.

mod hmm;
mod model;
mod tagset;

pub use hmm::DenseHmm;
pub use model::{
    tag_probability, train_hmm, viterbi_tag, Lexicon, TaggedSentence, TaggerConfig, TaggerError,
    TaggerModel,
};
pub use tagset::{State, Tag, UnknownTag, TAG_COUNT};
