//! Text normalisation applied before deduplication and training.
//!
//! ```text
//! cargo run --example sanitize_text -- "RT @user: Great news 🎉 https://t.co/x"
//! ```

use polarimeter::corpus::{EmojiLexicon, Sanitizer};
use polarimeter::ingest::truncate_chars;

fn main() {
    let sanitizer = Sanitizer::new(EmojiLexicon::bundled());
    let inputs: Vec<String> = match std::env::args().nth(1) {
        Some(text) => vec![text],
        None => vec![
            "RT @maria: Vamos!!! 🇧🇷 #eleicoes https://t.co/abc123".into(),
            "I ❤️ this... 😂😂".into(),
            "Ação, reação & \"aspas\" — fim".into(),
        ],
    };
    println!("bundled lexicon: {} entries", sanitizer.lexicon().len());
    for text in &inputs {
        println!("{text}\n  -> {:?}", sanitizer.sanitize(text));
        println!("  first 20 chars: {:?}", truncate_chars(text, 20));
    }
}
