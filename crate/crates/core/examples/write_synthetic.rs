//! Writes the bundled synthetic corpora as JSON lines.

use std::path::PathBuf;

use mathtag::corpus::save_corpus;
use mathtag::synthetic::{all_class_corpus, five_class_corpus};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic"));
    std::fs::create_dir_all(&dir)?;
    save_corpus(&five_class_corpus(), dir.join("five_class.jsonl"))?;
    save_corpus(&all_class_corpus(4, 63), dir.join("all_class.jsonl"))?;
    println!("wrote corpora to {}", dir.display());
    Ok(())
}
