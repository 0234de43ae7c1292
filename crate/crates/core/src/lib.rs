//! Key point analysis of business reviews: mine a domain-wide set of
//! positive and negative key points, match each business's sentences to them,
//! and report salience plus precision/coverage evaluation.

pub mod config;
pub mod corpus;
pub mod evaluate;
pub mod io;
pub mod mining;
pub mod scoring;
pub mod sentiment;
pub mod summarize;
pub mod text;
