//! Training text: sanitised tweets grouped into one document per user, and
//! the class-balanced labelled corpus.

mod sanitize;

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::PrincipalPair;
use crate::ingest::InteractionRecord;

pub use sanitize::{sanitize, EmojiLexicon, Sanitizer};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("community {0} has no user with usable text")]
    EmptySide(Label),
    #[error("lexicon line {line}: {message}")]
    Lexicon { line: usize, message: String },
    #[error("corpus line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Class label: C1 is the largest principal community, C2 the second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    C1,
    C2,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::C1, Label::C2];

    pub fn index(self) -> usize {
        match self {
            Label::C1 => 0,
            Label::C2 => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        match i {
            0 => Label::C1,
            _ => Label::C2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Label::C1 => Label::C2,
            Label::C2 => Label::C1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::C1 => "C1",
            Label::C2 => "C2",
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// All sanitised tweets of one user, concatenated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserDocument {
    pub user_id: String,
    pub text: String,
    pub source_tweet_count: usize,
}

/// Drops records whose sanitised text was already seen (or is empty),
/// keeping first occurrences in input order.
pub fn dedupe(records: &[InteractionRecord], sanitizer: &Sanitizer) -> Vec<InteractionRecord> {
    let mut seen = HashSet::new();
    records
        .iter()
        .filter(|r| {
            let text = sanitizer.sanitize(&r.text);
            !text.is_empty() && seen.insert(text)
        })
        .cloned()
        .collect()
}

/// One document per listed user that has at least one non-empty sanitised
/// tweet, ordered by user id.
pub fn build_user_documents<S: AsRef<str>>(
    records: &[InteractionRecord],
    users: &[S],
    sanitizer: &Sanitizer,
) -> Vec<UserDocument> {
    let wanted: HashSet<&str> = users.iter().map(AsRef::as_ref).collect();
    let mut grouped: BTreeMap<&str, (String, usize)> = BTreeMap::new();
    for r in records {
        if !wanted.contains(r.user_id.as_str()) {
            continue;
        }
        let text = sanitizer.sanitize(&r.text);
        if text.is_empty() {
            continue;
        }
        let entry = grouped.entry(r.user_id.as_str()).or_default();
        if !entry.0.is_empty() {
            entry.0.push(' ');
        }
        entry.0.push_str(&text);
        entry.1 += 1;
    }
    grouped
        .into_iter()
        .map(|(user, (text, count))| UserDocument {
            user_id: user.to_owned(),
            text,
            source_tweet_count: count,
        })
        .collect()
}

/// Balanced labelled examples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCorpus {
    examples: Vec<(Label, UserDocument)>,
    per_class: usize,
    /// Documented users available on each side before balancing.
    pub available: [usize; 2],
}

impl TrainingCorpus {
    /// Builds a corpus from explicit examples, checking the class balance.
    pub fn from_examples(examples: Vec<(Label, UserDocument)>) -> Result<Self, String> {
        let c1 = examples.iter().filter(|(l, _)| *l == Label::C1).count();
        let c2 = examples.len() - c1;
        if c1 != c2 {
            return Err(format!("unbalanced corpus: {c1} C1 vs {c2} C2 examples"));
        }
        Ok(Self {
            examples,
            per_class: c1,
            available: [c1, c2],
        })
    }

    pub fn examples(&self) -> &[(Label, UserDocument)] {
        &self.examples
    }

    pub fn per_class(&self) -> usize {
        self.per_class
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Same documents with C1 and C2 exchanged.
    pub fn swap_labels(&self) -> Self {
        Self {
            examples: self.examples.iter().map(|(l, d)| (l.other(), d.clone())).collect(),
            per_class: self.per_class,
            available: [self.available[1], self.available[0]],
        }
    }

    /// `__label__C1<TAB>text` lines.
    pub fn write_tsv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        for (label, doc) in &self.examples {
            writeln!(out, "__label__{}\t{}", label, doc.text)?;
        }
        Ok(())
    }

    /// Reads `__label__X<TAB>text` (or space separated) lines. Labels other
    /// than C1/C2 are rejected. User ids are synthesised from line numbers.
    pub fn read_tsv<R: BufRead>(input: R) -> Result<Self, CorpusError> {
        let mut examples = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| CorpusError::Parse { line: idx + 1, message };
            let rest = line
                .strip_prefix("__label__")
                .ok_or_else(|| err("missing __label__ prefix".into()))?;
            let (label, text) = rest.split_once(['\t', ' ']).unwrap_or((rest, ""));
            let label = match label {
                "C1" => Label::C1,
                "C2" => Label::C2,
                other => return Err(err(format!("unknown label {other:?}"))),
            };
            examples.push((
                label,
                UserDocument {
                    user_id: format!("line{}", idx + 1),
                    text: text.to_owned(),
                    source_tweet_count: 1,
                },
            ));
        }
        TrainingCorpus::from_examples(examples).map_err(|m| CorpusError::Parse { line: 0, message: m })
    }
}

/// Labels documents by principal-community membership and balances the
/// classes by sampling the larger side down to the smaller one.
pub fn build_training_corpus(
    pair: &PrincipalPair,
    docs: &[UserDocument],
    seed: u64,
) -> Result<TrainingCorpus, CorpusError> {
    let c1: HashSet<&str> = pair.c1_users.iter().map(String::as_str).collect();
    let c2: HashSet<&str> = pair.c2_users.iter().map(String::as_str).collect();
    let side1: Vec<&UserDocument> = docs.iter().filter(|d| c1.contains(d.user_id.as_str())).collect();
    let side2: Vec<&UserDocument> = docs.iter().filter(|d| c2.contains(d.user_id.as_str())).collect();
    if side1.is_empty() {
        return Err(CorpusError::EmptySide(Label::C1));
    }
    if side2.is_empty() {
        return Err(CorpusError::EmptySide(Label::C2));
    }
    let n = side1.len().min(side2.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut take = |side: &[&UserDocument]| -> Vec<UserDocument> {
        if side.len() == n {
            return side.iter().map(|&d| d.clone()).collect();
        }
        let mut picked = rand::seq::index::sample(&mut rng, side.len(), n).into_vec();
        picked.sort_unstable();
        picked.into_iter().map(|i| side[i].clone()).collect()
    };
    let mut examples: Vec<(Label, UserDocument)> = take(&side1).into_iter().map(|d| (Label::C1, d)).collect();
    examples.extend(take(&side2).into_iter().map(|d| (Label::C2, d)));
    assert_eq!(examples.len(), 2 * n, "class balance violated");
    Ok(TrainingCorpus {
        examples,
        per_class: n,
        available: [side1.len(), side2.len()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tweet(id: usize, user: &str, text: &str, rt: Option<&str>) -> InteractionRecord {
        InteractionRecord {
            tweet_id: id.to_string(),
            user_id: user.into(),
            text: text.into(),
            retweet_of_user: rt.map(Into::into),
            timestamp: id as i64,
            hashtags: vec![],
            lang: None,
        }
    }

    fn doc(user: &str, text: &str) -> UserDocument {
        UserDocument {
            user_id: user.into(),
            text: text.into(),
            source_tweet_count: 1,
        }
    }

    #[test]
    fn duplicate_retweets_collapse() {
        let s = Sanitizer::default();
        let recs = vec![
            tweet(1, "a", "RT @x: big news", Some("x")),
            tweet(2, "b", "RT @x: big news", Some("x")),
        ];
        assert_eq!(dedupe(&recs, &s).len(), 1);
        let distinct = vec![tweet(1, "a", "one", None), tweet(2, "a", "two", None)];
        assert_eq!(dedupe(&distinct, &s), distinct);
    }

    #[test]
    fn retweet_of_included_original_is_dropped() {
        let s = Sanitizer::default();
        let recs = vec![
            tweet(1, "x", "Big news!", None),
            tweet(2, "a", "RT @x: Big news!", Some("x")),
        ];
        let kept = dedupe(&recs, &s);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].user_id, "x");
    }

    #[test]
    fn documents_group_by_user() {
        let s = Sanitizer::default();
        let recs = vec![
            tweet(1, "a", "one", None),
            tweet(2, "a", "two", None),
            tweet(3, "a", "three", None),
            tweet(4, "b", "", Some("a")),
        ];
        let docs = build_user_documents(&recs, &["a", "b"], &s);
        assert_eq!(
            docs,
            vec![UserDocument {
                user_id: "a".into(),
                text: "one two three".into(),
                source_tweet_count: 3
            }]
        );
    }

    #[test]
    fn corpus_balances_to_smaller_side() {
        let c1: Vec<String> = (0..100).map(|i| format!("a{i:03}")).collect();
        let c2: Vec<String> = (0..60).map(|i| format!("b{i:03}")).collect();
        let mut docs: Vec<UserDocument> = c1.iter().map(|u| doc(u, "x")).collect();
        docs.extend(c2.iter().map(|u| doc(u, "y")));
        let pair = PrincipalPair {
            c1_users: c1,
            c2_users: c2,
        };
        let corpus = build_training_corpus(&pair, &docs, 7).unwrap();
        assert_eq!(corpus.per_class(), 60);
        assert_eq!(corpus.len(), 120);
        assert_eq!(corpus, build_training_corpus(&pair, &docs, 7).unwrap());
        assert_ne!(corpus, build_training_corpus(&pair, &docs, 8).unwrap());
    }

    #[test]
    fn equal_sides_use_every_document() {
        let pair = PrincipalPair {
            c1_users: vec!["a".into(), "b".into()],
            c2_users: vec!["c".into(), "d".into()],
        };
        let docs = vec![doc("a", "1"), doc("b", "2"), doc("c", "3"), doc("d", "4")];
        let corpus = build_training_corpus(&pair, &docs, 0).unwrap();
        let users: Vec<_> = corpus.examples().iter().map(|(_, d)| d.user_id.as_str()).collect();
        assert_eq!(users, ["a", "b", "c", "d"]);
    }

    #[test]
    fn side_without_text_is_an_error() {
        let pair = PrincipalPair {
            c1_users: vec!["a".into()],
            c2_users: vec!["z".into()],
        };
        let err = build_training_corpus(&pair, &[doc("a", "x")], 0).unwrap_err();
        assert!(matches!(err, CorpusError::EmptySide(Label::C2)));
    }

    #[test]
    fn tsv_round_trip() {
        let corpus =
            TrainingCorpus::from_examples(vec![(Label::C1, doc("a", "hello world")), (Label::C2, doc("b", "bye"))])
                .unwrap();
        let mut buf = Vec::new();
        corpus.write_tsv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "__label__C1\thello world\n__label__C2\tbye\n"
        );
        let back = TrainingCorpus::read_tsv(&buf[..]).unwrap();
        assert_eq!(back.examples()[0].1.text, "hello world");
        assert!(TrainingCorpus::read_tsv("__label__C3\tx\n".as_bytes()).is_err());
    }
}
