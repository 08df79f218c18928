pub mod chunker;
pub mod classifier;
pub mod corpus;
pub mod keyphrase;
pub mod masking;
pub mod msc;
pub mod synthetic;
pub mod textproc;
pub mod vocabstore;
pub mod tagger;
