//! Synthetic discussions with planted communities.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, Zipf};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::ingest::InteractionRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub users_per_side: usize,
    pub tweets_per_user: usize,
    /// Token ranks per side.
    pub vocab_size: usize,
    /// Fraction of each side's ranks that map to tokens shared by both sides.
    pub vocab_overlap: f64,
    pub cross_retweet_prob: f64,
    pub intra_retweet_mean: f64,
    pub single_community: bool,
    pub seed: u64,
    pub zipf_exponent: f64,
    /// Exponent of the popularity law used to pick retweet targets.
    pub popularity_exponent: f64,
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub url_prob: f64,
    pub mention_prob: f64,
    pub start_timestamp: i64,
    pub duration_secs: i64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            users_per_side: 500,
            tweets_per_user: 15,
            vocab_size: 2000,
            vocab_overlap: 0.2,
            cross_retweet_prob: 0.02,
            intra_retweet_mean: 6.0,
            single_community: false,
            seed: 0,
            zipf_exponent: 1.1,
            popularity_exponent: 0.5,
            min_tokens: 6,
            max_tokens: 38,
            url_prob: 0.1,
            mention_prob: 0.1,
            start_timestamp: 1_600_000_000,
            duration_secs: 7 * 24 * 3600,
        }
    }
}

impl SynthParams {
    pub fn controversial(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    pub fn non_controversial(seed: u64) -> Self {
        Self {
            seed,
            single_community: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidParams(m));
        if self.users_per_side < 2 {
            return bad("users_per_side must be at least 2".into());
        }
        if self.tweets_per_user == 0 || self.vocab_size == 0 {
            return bad("tweets_per_user and vocab_size must be positive".into());
        }
        for (name, p) in [
            ("vocab_overlap", self.vocab_overlap),
            ("cross_retweet_prob", self.cross_retweet_prob),
            ("url_prob", self.url_prob),
            ("mention_prob", self.mention_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is not a probability"));
            }
        }
        if !(self.intra_retweet_mean > 0.0 && self.intra_retweet_mean.is_finite()) {
            return bad("intra_retweet_mean must be positive".into());
        }
        if self.zipf_exponent.is_nan()
            || self.zipf_exponent <= 0.0
            || self.popularity_exponent.is_nan()
            || self.popularity_exponent < 0.0
        {
            return bad("zipf exponents must be positive".into());
        }
        if self.min_tokens == 0 || self.min_tokens > self.max_tokens {
            return bad("need 1 <= min_tokens <= max_tokens".into());
        }
        if self.duration_secs <= 0 {
            return bad("duration_secs must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::A => "A",
            Side::B => "B",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDiscussion {
    /// Sorted by timestamp, then tweet id.
    pub records: Vec<InteractionRecord>,
    /// Planted side of every user.
    pub membership: BTreeMap<String, Side>,
    pub original_count: usize,
    pub retweet_count: usize,
    /// Distinct (retweeter, author) pairs.
    pub distinct_pairs: usize,
}

impl SynthDiscussion {
    pub fn write_jsonl(&self, path: &Path) -> Result<(), EvalError> {
        let mut out = BufWriter::new(File::create(path)?);
        for r in &self.records {
            serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// `user_id side` lines.
    pub fn write_ground_truth(&self, path: &Path) -> Result<(), EvalError> {
        let mut out = BufWriter::new(File::create(path)?);
        for (user, side) in &self.membership {
            writeln!(out, "{user} {}", side.name())?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Distinct pseudo-words of 4 to 9 letters.
pub(crate) fn pseudo_words(n: usize, rng: &mut impl Rng, taken: &mut HashSet<String>) -> Vec<String> {
    const LETTERS: &[u8] = b"abcdefghijklmnopqrstuvwxyz";
    let mut words = Vec::with_capacity(n);
    while words.len() < n {
        let len = rng.gen_range(4..=9);
        let w: String = (0..len)
            .map(|_| LETTERS[rng.gen_range(0..LETTERS.len())] as char)
            .collect();
        if taken.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

/// Rank-to-token tables for both sides. Every `1 / overlap`-th rank of a
/// side maps to a token shared with the other side.
pub(crate) struct Vocabulary {
    sides: [Vec<String>; 2],
}

impl Vocabulary {
    pub(crate) fn new(size: usize, overlap: f64, rng: &mut impl Rng) -> Self {
        let shared_at = |r: usize| ((r + 1) as f64 * overlap).floor() > (r as f64 * overlap).floor();
        let shared_count = (0..size).filter(|&r| shared_at(r)).count();
        let mut taken = HashSet::new();
        let shared = pseudo_words(shared_count, rng, &mut taken);
        let mut own = [
            pseudo_words(size - shared_count, rng, &mut taken).into_iter(),
            pseudo_words(size - shared_count, rng, &mut taken).into_iter(),
        ];
        let sides = [0, 1].map(|s| {
            let mut next_shared = shared.iter();
            (0..size)
                .map(|r| {
                    if shared_at(r) {
                        next_shared.next().expect("counted").clone()
                    } else {
                        own[s].next().expect("counted")
                    }
                })
                .collect()
        });
        Self { sides }
    }

    pub(crate) fn token(&self, side: usize, rank: usize) -> &str {
        &self.sides[side][rank]
    }
}

struct Author {
    id: String,
    side: usize,
    tweets: Vec<(String, i64)>,
}

/// Generates a discussion: `2 * users_per_side` authors, each posting
/// `tweets_per_user` originals and `Poisson(intra_retweet_mean)` retweets.
pub fn generate_discussion(params: &SynthParams) -> Result<SynthDiscussion, EvalError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let overlap = if params.single_community {
        1.0
    } else {
        params.vocab_overlap
    };
    let vocab = Vocabulary::new(params.vocab_size, overlap, &mut rng);
    let zipf = Zipf::new(params.vocab_size as u64, params.zipf_exponent)
        .map_err(|e| EvalError::InvalidParams(e.to_string()))?;
    let retweets_per_user =
        Poisson::new(params.intra_retweet_mean).map_err(|e| EvalError::InvalidParams(e.to_string()))?;

    let n = params.users_per_side;
    let groups: Vec<Vec<usize>> = if params.single_community {
        vec![(0..2 * n).collect()]
    } else {
        vec![(0..n).collect(), (n..2 * n).collect()]
    };
    let mut authors: Vec<Author> = (0..2 * n)
        .map(|i| {
            let (id, side) = match (params.single_community, i < n) {
                (true, _) => (format!("u{i:05}"), 0),
                (false, true) => (format!("a{i:05}"), 0),
                (false, false) => (format!("b{:05}", i - n), 1),
            };
            Author {
                id,
                side,
                tweets: Vec::new(),
            }
        })
        .collect();

    let mut next_id = 0usize;
    let mut new_id = || {
        next_id += 1;
        format!("t{next_id:07}")
    };
    let mut records = Vec::new();
    let timestamp = |rng: &mut ChaCha8Rng| params.start_timestamp + rng.gen_range(0..params.duration_secs);
    let hashtags = vec!["synthtopic".to_owned()];

    for a in 0..authors.len() {
        for _ in 0..params.tweets_per_user {
            let len = rng.gen_range(params.min_tokens..=params.max_tokens);
            let mut words: Vec<String> = (0..len)
                .map(|_| {
                    vocab
                        .token(authors[a].side, zipf.sample(&mut rng) as usize - 1)
                        .to_owned()
                })
                .collect();
            if rng.gen_bool(params.mention_prob) {
                let other = rng.gen_range(0..authors.len());
                words.insert(rng.gen_range(0..=words.len()), format!("@{}", authors[other].id));
            }
            if rng.gen_bool(params.url_prob) {
                words.push(format!("https://t.co/{:08x}", rng.gen::<u32>()));
            }
            let text = words.join(" ");
            let ts = timestamp(&mut rng);
            authors[a].tweets.push((text.clone(), ts));
            records.push(InteractionRecord {
                tweet_id: new_id(),
                user_id: authors[a].id.clone(),
                text,
                retweet_of_user: None,
                timestamp: ts,
                hashtags: hashtags.clone(),
                lang: None,
            });
        }
    }
    let original_count = records.len();

    // Popularity follows a power law over a random ranking of each group.
    let popularity: Vec<(Vec<usize>, WeightedIndex<f64>)> = groups
        .iter()
        .map(|g| {
            let mut order = g.clone();
            rand::seq::SliceRandom::shuffle(&mut order[..], &mut rng);
            let weights: Vec<f64> = (0..order.len())
                .map(|r| ((r + 1) as f64).powf(-params.popularity_exponent))
                .collect();
            (order, WeightedIndex::new(weights).expect("positive weights"))
        })
        .collect();
    let group_of = |user: usize| if groups.len() == 1 { 0 } else { authors[user].side };

    let mut pairs = BTreeSet::new();
    let mut retweet_count = 0;
    for a in 0..authors.len() {
        let k = retweets_per_user.sample(&mut rng) as usize;
        for _ in 0..k {
            let mut g = group_of(a);
            if groups.len() == 2 && rng.gen_bool(params.cross_retweet_prob) {
                g = 1 - g;
            }
            let (order, dist) = &popularity[g];
            let target = loop {
                let t = order[dist.sample(&mut rng)];
                if t != a {
                    break t;
                }
            };
            let (original, posted) = &authors[target].tweets[rng.gen_range(0..authors[target].tweets.len())];
            records.push(InteractionRecord {
                tweet_id: new_id(),
                user_id: authors[a].id.clone(),
                text: format!("RT @{}: {}", authors[target].id, original),
                retweet_of_user: Some(authors[target].id.clone()),
                // a retweet never precedes its original
                timestamp: rng.gen_range(*posted..params.start_timestamp + params.duration_secs),
                hashtags: hashtags.clone(),
                lang: None,
            });
            pairs.insert((a, target));
            retweet_count += 1;
        }
    }
    records.sort_by(|x, y| x.timestamp.cmp(&y.timestamp).then_with(|| x.tweet_id.cmp(&y.tweet_id)));

    let membership = authors
        .iter()
        .map(|a| (a.id.clone(), if a.side == 0 { Side::A } else { Side::B }))
        .collect();
    Ok(SynthDiscussion {
        records,
        membership,
        original_count,
        retweet_count,
        distinct_pairs: pairs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, largest_component};

    fn small(seed: u64) -> SynthParams {
        SynthParams {
            users_per_side: 40,
            tweets_per_user: 3,
            vocab_size: 200,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn record_count_bookkeeping() {
        let d = generate_discussion(&small(1)).unwrap();
        assert_eq!(d.original_count, 2 * 40 * 3);
        assert_eq!(d.records.len(), d.original_count + d.retweet_count);
        let g = build_graph(&d.records);
        assert_eq!(g.edge_count(), d.distinct_pairs);
        assert_eq!(g.total_weight(), d.retweet_count as u64);
    }

    #[test]
    fn same_seed_same_stream() {
        let a = generate_discussion(&small(5)).unwrap();
        let b = generate_discussion(&small(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.records, generate_discussion(&small(6)).unwrap().records);
    }

    #[test]
    fn no_cross_retweets_gives_two_components() {
        let p = SynthParams {
            cross_retweet_prob: 0.0,
            vocab_overlap: 0.0,
            intra_retweet_mean: 8.0,
            ..small(3)
        };
        let d = generate_discussion(&p).unwrap();
        let g = build_graph(&d.records);
        assert_eq!(g.undirected().components().len(), 2);
        let lcc = largest_component(&g).unwrap();
        let sides: BTreeSet<Side> = lcc.iter().map(|&i| d.membership[g.node_id(i)]).collect();
        assert_eq!(sides.len(), 1);
    }

    #[test]
    fn overlap_interleaves_shared_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = Vocabulary::new(20, 0.2, &mut rng);
        let shared: Vec<usize> = (0..20).filter(|&r| v.token(0, r) == v.token(1, r)).collect();
        assert_eq!(shared, vec![4, 9, 14, 19]);
        let none = Vocabulary::new(20, 0.0, &mut rng);
        assert!((0..20).all(|r| none.token(0, r) != none.token(1, r)));
    }

    #[test]
    fn invalid_params_are_rejected() {
        for p in [
            SynthParams {
                cross_retweet_prob: 1.5,
                ..small(0)
            },
            SynthParams {
                intra_retweet_mean: 0.0,
                ..small(0)
            },
            SynthParams {
                users_per_side: 1,
                ..small(0)
            },
        ] {
            assert!(matches!(generate_discussion(&p), Err(EvalError::InvalidParams(_))));
        }
    }

    #[test]
    fn single_community_ids_and_sides() {
        let d = generate_discussion(&SynthParams {
            single_community: true,
            ..small(2)
        })
        .unwrap();
        assert!(d.membership.keys().all(|u| u.starts_with('u')));
        assert!(d.membership.values().all(|&s| s == Side::A));
        assert_eq!(d.membership.len(), 80);
    }
}
