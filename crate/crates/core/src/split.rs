//! Triplet-disjoint train/val/test splits.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::episodes::Episode;
use crate::grammar::Triplet;

/// Number of triplets held out for evaluation.
pub const EVAL_TRIPLETS: usize = 2;

/// What a split needs to know about an episode.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeMeta {
    pub id: String,
    pub triplet: Triplet,
}

impl From<&Episode> for EpisodeMeta {
    fn from(ep: &Episode) -> Self {
        EpisodeMeta { id: ep.id.clone(), triplet: ep.triplet }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Partition {
    pub const ALL: [Partition; 3] = [Partition::Train, Partition::Val, Partition::Test];

    pub fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Val => "val",
            Partition::Test => "test",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_triplets: Vec<Triplet>,
    pub eval_triplets: Vec<Triplet>,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

impl SplitManifest {
    pub fn ids(&self, part: Partition) -> &[String] {
        match part {
            Partition::Train => &self.train,
            Partition::Val => &self.val,
            Partition::Test => &self.test,
        }
    }

    pub fn total(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    /// Keeps the episodes of one partition, in manifest order.
    pub fn select<'a>(&self, part: Partition, episodes: &'a [Episode]) -> Vec<&'a Episode> {
        let by_id: HashMap<&str, &Episode> = episodes.iter().map(|e| (e.id.as_str(), e)).collect();
        self.ids(part).iter().filter_map(|id| by_id.get(id.as_str()).copied()).collect()
    }
}

/// Holds out two triplets chosen by `seed`. Their episodes are shuffled and
/// halved into validation (first half, rounded down) and test.
pub fn split_dataset<I>(episodes: I, seed: u64) -> SplitManifest
where
    I: IntoIterator<Item = EpisodeMeta>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut triplets = Triplet::all();
    triplets.shuffle(&mut rng);
    let mut eval_triplets = triplets[..EVAL_TRIPLETS].to_vec();
    let mut train_triplets = triplets[EVAL_TRIPLETS..].to_vec();
    eval_triplets.sort();
    train_triplets.sort();

    let mut train = Vec::new();
    let mut pool = Vec::new();
    for meta in episodes {
        if eval_triplets.contains(&meta.triplet) {
            pool.push(meta.id);
        } else {
            train.push(meta.id);
        }
    }
    pool.shuffle(&mut rng);
    let test = pool.split_off(pool.len() / 2);
    SplitManifest { seed, train_triplets, eval_triplets, train, val: pool, test }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn metas(n: usize) -> Vec<EpisodeMeta> {
        let all = Triplet::all();
        (0..n).map(|i| EpisodeMeta { id: format!("e{i}"), triplet: all[i % all.len()] }).collect()
    }

    #[test]
    fn partitions_are_triplet_disjoint_and_complete() {
        let ms = metas(1000);
        for seed in 0..8 {
            let m = split_dataset(ms.clone(), seed);
            assert_eq!(m.total(), 1000);
            assert_eq!(m.eval_triplets.len(), 2);
            assert_eq!(m.train_triplets.len(), 8);
            assert!(m.train_triplets.iter().all(|t| !m.eval_triplets.contains(t)));
            let ids: HashSet<&String> = m.train.iter().chain(&m.val).chain(&m.test).collect();
            assert_eq!(ids.len(), 1000);
            assert_eq!(m.train.len(), 800);
            assert_eq!((m.val.len(), m.test.len()), (100, 100));
        }
    }

    #[test]
    fn odd_pool_puts_extra_episode_in_test() {
        let mut ms = metas(1000);
        ms.truncate(999);
        let m = split_dataset(ms, 3);
        assert_eq!(m.test.len(), m.val.len() + (m.test.len() + m.val.len()) % 2);
    }

    #[test]
    fn deterministic_in_seed() {
        assert_eq!(split_dataset(metas(200), 11), split_dataset(metas(200), 11));
        let held_out: HashSet<Vec<Triplet>> = (0..10).map(|s| split_dataset(metas(200), s).eval_triplets).collect();
        assert!(held_out.len() > 1);
    }
}
