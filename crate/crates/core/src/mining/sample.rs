use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Review;
use crate::sentiment::{review_polarity, Polarity};

#[derive(Debug, Clone, PartialEq)]
pub struct ReviewSample<'a> {
    /// In draw order.
    pub reviews: Vec<&'a Review>,
    /// How many of the requested reviews could not be drawn.
    pub shortfall: usize,
}

/// Two-stage sampling without replacement: draw a business uniformly among
/// those that still have undrawn reviews of `polarity`, then one of its
/// undrawn reviews uniformly. Businesses therefore contribute roughly equally
/// regardless of size. Returns everything available, with a shortfall, when
/// fewer than `n` reviews qualify.
pub fn sample_reviews_two_stage<'a>(
    reviews: &'a [Review],
    polarity: Polarity,
    n: usize,
    seed: u64,
) -> ReviewSample<'a> {
    let mut by_business: BTreeMap<&str, Vec<&Review>> = BTreeMap::new();
    for r in reviews.iter().filter(|r| review_polarity(r) == polarity.label()) {
        by_business.entry(r.business_id.as_str()).or_default().push(r);
    }
    let mut pool: Vec<Vec<&Review>> = by_business
        .into_values()
        .map(|mut v| {
            v.sort_by(|a, b| a.review_id.cmp(&b.review_id));
            v
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = Vec::with_capacity(n.min(reviews.len()));
    while drawn.len() < n && !pool.is_empty() {
        let b = rng.gen_range(0..pool.len());
        let r = rng.gen_range(0..pool[b].len());
        drawn.push(pool[b].remove(r));
        if pool[b].is_empty() {
            pool.remove(b);
        }
    }
    let shortfall = n - drawn.len();
    if shortfall > 0 {
        log::warn!(
            "only {} {polarity} reviews available, {shortfall} short of the requested {n}; using all",
            drawn.len()
        );
    }
    ReviewSample {
        reviews: drawn,
        shortfall,
    }
}
