//! 2x2 patch tokens and the episode-to-sequence layout.

use gridcomp_core::episodes::{Episode, Sample};
use gridcomp_core::grid::{Grid, GRID_SIZE};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub const PATCH: usize = 2;
pub const PATCHES_PER_SIDE: usize = GRID_SIZE / PATCH;
pub const PATCHES_PER_GRID: usize = PATCHES_PER_SIDE * PATCHES_PER_SIDE;
pub const NUM_PATCHES: u32 = 10_000;
pub const PAIR_SEP: u32 = NUM_PATCHES;
pub const IO_SEP: u32 = NUM_PATCHES + 1;
pub const SOS: u32 = NUM_PATCHES + 2;
pub const EOS: u32 = NUM_PATCHES + 3;
pub const VOCAB_SIZE: usize = NUM_PATCHES as usize + 4;
/// SOS, one grid of patches, EOS.
pub const TARGET_LEN: usize = PATCHES_PER_GRID + 2;
/// The all-background patch.
pub const BLANK_PATCH: u32 = 0;

/// Layout revision recorded in checkpoints.
pub const LAYOUT_VERSION: u32 = 1;

pub fn is_patch(tok: u32) -> bool {
    tok < NUM_PATCHES
}

/// Cell values of a 2x2 block read row-major as a base-10 number.
pub fn encode_patch(cells: [u8; 4]) -> u32 {
    cells.iter().fold(0, |acc, &v| acc * 10 + v as u32)
}

pub fn decode_patch(tok: u32) -> Option<[u8; 4]> {
    if !is_patch(tok) {
        return None;
    }
    Some([(tok / 1000) as u8, (tok / 100 % 10) as u8, (tok / 10 % 10) as u8, (tok % 10) as u8])
}

/// 25 patch tokens, left to right, top to bottom.
pub fn grid_to_patches(grid: &Grid) -> Vec<u32> {
    let rows = grid.rows();
    let mut out = Vec::with_capacity(PATCHES_PER_GRID);
    for pr in 0..PATCHES_PER_SIDE {
        for pc in 0..PATCHES_PER_SIDE {
            let (r, c) = (pr * PATCH, pc * PATCH);
            out.push(encode_patch([rows[r][c], rows[r][c + 1], rows[r + 1][c], rows[r + 1][c + 1]]));
        }
    }
    out
}

/// Inverse of [`grid_to_patches`]; `None` unless given exactly 25 patch tokens.
pub fn patches_to_grid(tokens: &[u32]) -> Option<Grid> {
    if tokens.len() != PATCHES_PER_GRID {
        return None;
    }
    let mut rows = vec![vec![0i64; GRID_SIZE]; GRID_SIZE];
    for (i, &tok) in tokens.iter().enumerate() {
        let p = decode_patch(tok)?;
        let (r, c) = ((i / PATCHES_PER_SIDE) * PATCH, (i % PATCHES_PER_SIDE) * PATCH);
        rows[r][c] = p[0] as i64;
        rows[r][c + 1] = p[1] as i64;
        rows[r + 1][c] = p[2] as i64;
        rows[r + 1][c + 1] = p[3] as i64;
    }
    Grid::from_rows(&rows).ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    StudyInput,
    StudyOutput,
    QueryInput,
    Separator,
}

impl Role {
    /// Index into the optional 3-way role table: input, output, separator.
    pub fn slot(self) -> u32 {
        match self {
            Role::StudyInput | Role::QueryInput => 0,
            Role::StudyOutput => 1,
            Role::Separator => 2,
        }
    }
}

/// A source sequence with its per-token annotations.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Source {
    pub tokens: Vec<u32>,
    /// Index of the pair (or query) the token belongs to.
    pub pair: Vec<u32>,
    /// Patch row and column; `None` for separators.
    pub row: Vec<Option<u32>>,
    pub col: Vec<Option<u32>>,
    pub role: Vec<Role>,
}

impl Source {
    fn push_grid(&mut self, grid: &Grid, pair: u32, role: Role) {
        for (i, tok) in grid_to_patches(grid).into_iter().enumerate() {
            self.tokens.push(tok);
            self.pair.push(pair);
            self.row.push(Some((i / PATCHES_PER_SIDE) as u32));
            self.col.push(Some((i % PATCHES_PER_SIDE) as u32));
            self.role.push(role);
        }
    }

    fn push_sep(&mut self, tok: u32, pair: u32) {
        self.tokens.push(tok);
        self.pair.push(pair);
        self.row.push(None);
        self.col.push(None);
        self.role.push(Role::Separator);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// One training or evaluation sequence pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub source: Source,
    /// SOS, 25 patches, EOS.
    pub target: Vec<u32>,
}

/// Study pairs `in -> out` separated by `|`, directly followed by the query
/// input and a closing `->`. Separators take the pair index of the pair they
/// follow.
pub fn encode_source(study: &[Sample], query: &Grid) -> Source {
    let mut s = Source { tokens: Vec::new(), pair: Vec::new(), row: Vec::new(), col: Vec::new(), role: Vec::new() };
    for (i, pair) in study.iter().enumerate() {
        let i = i as u32;
        if i > 0 {
            s.push_sep(PAIR_SEP, i - 1);
        }
        s.push_grid(&pair.input, i, Role::StudyInput);
        s.push_sep(IO_SEP, i);
        s.push_grid(&pair.output, i, Role::StudyOutput);
    }
    let q = study.len() as u32;
    s.push_grid(query, q, Role::QueryInput);
    s.push_sep(IO_SEP, q);
    s
}

pub fn encode_target(grid: &Grid) -> Vec<u32> {
    let mut t = Vec::with_capacity(TARGET_LEN);
    t.push(SOS);
    t.extend(grid_to_patches(grid));
    t.push(EOS);
    t
}

/// Items for every query of an episode; with `copy_task`, one extra item
/// per study pair whose query is that pair's input.
pub fn tokenize_episode(ep: &Episode, copy_task: bool) -> Vec<Item> {
    let mut items: Vec<Item> = ep
        .queries
        .iter()
        .map(|q| Item { source: encode_source(&ep.study, &q.input), target: encode_target(&q.output) })
        .collect();
    if copy_task {
        items.extend(
            ep.study
                .iter()
                .map(|s| Item { source: encode_source(&ep.study, &s.input), target: encode_target(&s.output) }),
        );
    }
    items
}

/// Each cell is independently replaced, with probability `p`, by a
/// uniformly drawn different value.
pub fn apply_noise<R: Rng + ?Sized>(grid: &Grid, rng: &mut R, p: f64) -> Grid {
    if p <= 0.0 {
        return *grid;
    }
    let mut rows: Vec<Vec<i64>> = grid.to_rows().into_iter().map(|r| r.into_iter().map(i64::from).collect()).collect();
    for row in rows.iter_mut() {
        for v in row.iter_mut() {
            if rng.gen_bool(p.min(1.0)) {
                let shift = rng.gen_range(1..10);
                *v = (*v + shift) % 10;
            }
        }
    }
    Grid::from_rows(&rows).expect("values stay in 0-9")
}

#[cfg(test)]
mod tests {
    use super::*;
    use gridcomp_core::episodes::{generate_dataset, GenConfig, Setup};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vocabulary_size() {
        assert_eq!(VOCAB_SIZE, 10_004);
        assert_eq!(encode_patch([9, 9, 9, 9]), 9999);
        assert_eq!(decode_patch(1234), Some([1, 2, 3, 4]));
        assert_eq!(decode_patch(EOS), None);
    }

    #[test]
    fn systematicity_layout() {
        let ep = generate_dataset(2, 1, &GenConfig::default()).unwrap().remove(0);
        let items = tokenize_episode(&ep, false);
        assert_eq!(items.len(), 10);
        let s = &items[0].source;
        assert_eq!(s.len(), 12 * (25 + 1 + 25) + 11 + 25 + 1);
        assert_eq!(s.len(), 649);
        assert_eq!(items[0].target.len(), 27);
        assert_eq!(*s.tokens.last().unwrap(), IO_SEP);
        assert_eq!(s.tokens.iter().filter(|&&t| t == PAIR_SEP).count(), 11);
        assert!(s.row.iter().zip(&s.tokens).all(|(r, &t)| r.is_some() == is_patch(t)));
        assert_eq!(*s.pair.last().unwrap(), 12);
        assert_eq!(tokenize_episode(&ep, true).len(), 22);
    }

    #[test]
    fn three_shot_layout() {
        let cfg = GenConfig { setup: Setup::ThreeShot, ..GenConfig::default() };
        let ep = generate_dataset(2, 1, &cfg).unwrap().remove(0);
        assert_eq!(tokenize_episode(&ep, false)[0].source.len(), 3 * 51 + 2 + 26);
    }

    #[test]
    fn noise_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = generate_dataset(2, 1, &GenConfig::default()).unwrap()[0].queries[0].output;
        assert_eq!(apply_noise(&g, &mut rng, 0.0), g);
        let all = apply_noise(&g, &mut rng, 1.0);
        assert!(g.rows().iter().flatten().zip(all.rows().iter().flatten()).all(|(a, b)| a != b));
    }
}
