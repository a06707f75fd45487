use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use super::CorpusError;

const BUNDLED_LEXICON: &str = include_str!("../../data/emoji_lexicon.tsv");

/// Emoji / emoticon sequences mapped to single word tokens.
#[derive(Debug, Clone, Default)]
pub struct EmojiLexicon {
    entries: HashMap<String, String>,
    first_chars: HashSet<char>,
    max_key_chars: usize,
}

impl EmojiLexicon {
    /// The table shipped with the crate (emoji plus common emoticons).
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn from_path(path: &Path) -> Result<Self, CorpusError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses `sequence<TAB>word` lines. Blank lines and `#` comments are
    /// skipped.
    pub fn parse(tsv: &str) -> Result<Self, CorpusError> {
        let mut lexicon = Self::default();
        for (idx, line) in tsv.lines().enumerate() {
            if line.is_empty() || line.starts_with("# ") {
                continue;
            }
            let bad = |message: &str| CorpusError::Lexicon {
                line: idx + 1,
                message: message.to_owned(),
            };
            let (key, word) = line.split_once('\t').ok_or_else(|| bad("expected sequence<TAB>word"))?;
            lexicon.insert(key, word).map_err(|m| bad(&m))?;
        }
        Ok(lexicon)
    }

    /// Adds one mapping. Keys must contain a non-alphanumeric character (so
    /// sanitised text can never match again); words must be non-empty and
    /// free of whitespace.
    pub fn insert(&mut self, key: &str, word: &str) -> Result<(), String> {
        if key.is_empty() || key.chars().all(|c| c.is_alphanumeric() || c.is_whitespace()) {
            return Err(format!("key {key:?} must contain a symbol"));
        }
        if key.chars().any(char::is_whitespace) {
            return Err(format!("key {key:?} contains whitespace"));
        }
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(format!("word {word:?} must be a single token"));
        }
        let first = key.chars().next().expect("non-empty");
        self.first_chars.insert(first);
        self.max_key_chars = self.max_key_chars.max(key.chars().count());
        self.entries.insert(key.to_owned(), word.to_lowercase());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Replaces every known sequence (longest match first) with its word,
    /// padded by spaces.
    pub fn translate(&self, text: &str) -> String {
        if self.entries.is_empty() {
            return text.to_owned();
        }
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = String::with_capacity(text.len() + 16);
        let mut i = 0;
        'outer: while i < chars.len() {
            let (start, c) = chars[i];
            if self.first_chars.contains(&c) {
                let longest = self.max_key_chars.min(chars.len() - i);
                for len in (1..=longest).rev() {
                    let end = chars.get(i + len).map_or(text.len(), |&(b, _)| b);
                    if let Some(word) = self.entries.get(&text[start..end]) {
                        out.push(' ');
                        out.push_str(word);
                        out.push(' ');
                        i += len;
                        continue 'outer;
                    }
                }
            }
            out.push(c);
            i += 1;
        }
        out
    }
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:https?://|www\.|\bt\.co/)\S*").expect("valid regex"))
}

fn mention_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"@\w+").expect("valid regex"))
}

fn retweet_marker() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:[^\w]*\bRT\b)+").expect("valid regex"))
}

/// Text normaliser shared by training and prediction.
#[derive(Debug, Clone)]
pub struct Sanitizer {
    lexicon: EmojiLexicon,
    lowercase: bool,
}

impl Default for Sanitizer {
    fn default() -> Self {
        Self::new(EmojiLexicon::bundled())
    }
}

impl Sanitizer {
    pub fn new(lexicon: EmojiLexicon) -> Self {
        Self {
            lexicon,
            lowercase: true,
        }
    }

    pub fn with_lowercase(mut self, lowercase: bool) -> Self {
        self.lowercase = lowercase;
        self
    }

    pub fn lexicon(&self) -> &EmojiLexicon {
        &self.lexicon
    }

    /// Emoji to words, then URLs, mentions and leading `RT` markers removed,
    /// then every character that is neither alphanumeric nor whitespace,
    /// with whitespace collapsed to single spaces.
    pub fn sanitize(&self, text: &str) -> String {
        let text = self.lexicon.translate(text);
        let text = url_pattern().replace_all(&text, " ");
        let text = mention_pattern().replace_all(&text, " ");
        let text = retweet_marker().replace(&text, " ");
        // lowercase before stripping: a few lowercase mappings emit combining marks
        let text = if self.lowercase {
            text.to_lowercase()
        } else {
            text.into_owned()
        };
        let cleaned: String = text
            .chars()
            .map(|c| {
                if c.is_alphanumeric() || c.is_whitespace() {
                    c
                } else {
                    ' '
                }
            })
            .collect();
        cleaned.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}

/// [`Sanitizer::sanitize`] with an explicit lexicon and lowercasing.
pub fn sanitize(text: &str, lexicon: &EmojiLexicon) -> String {
    Sanitizer::new(lexicon.clone()).sanitize(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lexicon(pairs: &[(&str, &str)]) -> EmojiLexicon {
        let mut l = EmojiLexicon::default();
        for (k, v) in pairs {
            l.insert(k, v).unwrap();
        }
        l
    }

    #[test]
    fn retweet_with_link_and_emoticon() {
        let l = lexicon(&[(":)", "happy")]);
        assert_eq!(sanitize("RT @bob Check https://t.co/x :)", &l), "check happy");
    }

    #[test]
    fn empty_text_stays_empty() {
        assert_eq!(sanitize("", &EmojiLexicon::default()), "");
        assert_eq!(sanitize("  !!! @x  ", &EmojiLexicon::default()), "");
    }

    #[test]
    fn accented_words_and_hashtags() {
        let l = lexicon(&[("😢", "crying")]);
        assert_eq!(sanitize("Grève!!!  #paris 😢", &l), "grève paris crying");
    }

    #[test]
    fn longest_match_wins() {
        let l = lexicon(&[(":", "colon"), (":-)", "happy"), (":-", "dash")]);
        assert_eq!(l.translate("a:-)b"), "a happy b");
        assert_eq!(l.translate("a:-b"), "a dash b");
    }

    #[test]
    fn nested_retweet_markers_and_tabs() {
        let l = EmojiLexicon::default();
        assert_eq!(sanitize("RT @a: RT @b:\tHello\tWorld  ", &l), "hello world");
        assert_eq!(sanitize("www.example.com/path is here", &l), "is here");
    }

    #[test]
    fn lowercasing_can_be_disabled() {
        let s = Sanitizer::new(EmojiLexicon::default()).with_lowercase(false);
        assert_eq!(s.sanitize("Hello WORLD!"), "Hello WORLD");
    }

    #[test]
    fn bundled_lexicon_is_large_and_maps_known_entries() {
        let l = EmojiLexicon::bundled();
        assert!(l.len() > 800, "only {} entries", l.len());
        assert_eq!(l.get(":)"), Some("happy"));
        assert_eq!(l.get(":("), Some("sad"));
        assert_eq!(l.get("😢"), Some("crying"));
    }

    #[test]
    fn lexicon_rejects_bad_entries() {
        assert!(EmojiLexicon::parse("abc\tword").is_err());
        assert!(EmojiLexicon::parse(":)\ttwo words").is_err());
        assert!(EmojiLexicon::parse("no tab here").is_err());
    }
}
