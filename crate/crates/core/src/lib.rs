//! Controversy scoring for social-media discussions from the vocabulary of
//! their communities.
//!
//! A discussion is a set of posts and retweets. The retweet graph is reduced
//! to its pruned largest component and clustered; a text classifier is
//! trained to tell the two largest communities apart; its confident
//! predictions seed a label propagation over the graph, and the resulting
//! polarity field is summarised by the Dipole Moment Controversy score.
//!
//! [`pipeline`] chains the stages with on-disk artifacts; [`discussion`]
//! runs them in memory.

pub mod classifier;
pub mod community;
pub mod corpus;
pub mod discussion;
pub mod eval;
pub mod graph;
pub mod ingest;
pub mod pipeline;
pub mod polarity;
