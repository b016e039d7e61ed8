//! Sample synthesis, episode assembly and dataset generation.

use std::collections::HashSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grammar::{random_color, sample_grammar, sample_grammar_for, Kind, Triplet, VisualGrammar};
use crate::grid::{Color, Grid, Object, Pos, Shape, GRID_SIZE};
use crate::shapes;
use crate::solver;
use crate::transforms::Mode;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("no valid {tier} sample after {attempts} placements")]
    GenerationExhausted { tier: Tier, attempts: usize },
    #[error("study examples do not pin down the grammar")]
    NotIdentifiable,
    #[error("episode {index}: could not find an unused grammar after {attempts} attempts")]
    DuplicateBudgetExceeded { index: usize, attempts: usize },
    #[error("episode {index}: no workable grammar after {attempts} draws")]
    GrammarBudgetExceeded { index: usize, attempts: usize },
}

/// Which indicators a sample exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier {
    Primitive(Kind),
    Level1(Kind, Kind),
    Level2,
}

impl Tier {
    pub fn kinds(self) -> Vec<Kind> {
        match self {
            Tier::Primitive(k) => vec![k],
            Tier::Level1(a, b) => vec![a, b],
            Tier::Level2 => Kind::ALL.to_vec(),
        }
    }

    pub fn level1_pairs() -> [Tier; 3] {
        [
            Tier::Level1(Kind::Shape, Kind::Color),
            Tier::Level1(Kind::Shape, Kind::Neighbor),
            Tier::Level1(Kind::Color, Kind::Neighbor),
        ]
    }

    pub fn primitives() -> [Tier; 3] {
        Kind::ALL.map(Tier::Primitive)
    }

    pub fn uses_neighbor(self) -> bool {
        self.kinds().contains(&Kind::Neighbor)
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tier::Primitive(k) => write!(f, "primitive:{k}"),
            Tier::Level1(a, b) => write!(f, "level1:{a}+{b}"),
            Tier::Level2 => f.write_str("level2"),
        }
    }
}

impl std::str::FromStr for Tier {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("unknown tier {s:?}");
        if s == "level2" {
            return Ok(Tier::Level2);
        }
        if let Some(k) = s.strip_prefix("primitive:") {
            return Kind::from_name(k).map(Tier::Primitive).ok_or_else(bad);
        }
        if let Some(pair) = s.strip_prefix("level1:") {
            let (a, b) = pair.split_once('+').ok_or_else(bad)?;
            let (a, b) = (Kind::from_name(a).ok_or_else(bad)?, Kind::from_name(b).ok_or_else(bad)?);
            if a < b {
                return Ok(Tier::Level1(a, b));
            }
        }
        Err(bad())
    }
}

impl Serialize for Tier {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Tier {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub input: Grid,
    pub output: Grid,
    pub tier: Tier,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    ThreeShot,
    #[default]
    Systematicity,
}

/// Drops part of the systematicity study schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyAblation {
    NoPrimitives,
    NoLevel1,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub id: String,
    pub setup: Setup,
    pub mode: Mode,
    pub triplet: Triplet,
    pub grammar: VisualGrammar,
    pub study: Vec<Sample>,
    pub queries: Vec<Sample>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub mode: Mode,
    pub setup: Setup,
    pub ablation: Option<StudyAblation>,
    pub queries: usize,
    /// Placement attempts per sample before giving up.
    pub max_placements: usize,
    /// Study-set redraws before the grammar is abandoned as not identifiable.
    pub max_study_redraws: usize,
    /// Grammar draws per episode before generation fails.
    pub max_grammar_draws: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            mode: Mode::Restricted,
            setup: Setup::Systematicity,
            ablation: None,
            queries: 10,
            max_placements: 10_000,
            max_study_redraws: 20,
            max_grammar_draws: 100,
        }
    }
}

impl GenConfig {
    /// Study tiers in presentation order.
    pub fn study_schedule(&self) -> Vec<Tier> {
        match self.setup {
            Setup::ThreeShot => vec![Tier::Level2; 3],
            Setup::Systematicity => {
                let mut tiers = Vec::with_capacity(12);
                if self.ablation != Some(StudyAblation::NoPrimitives) {
                    for t in Tier::primitives() {
                        tiers.extend([t, t]);
                    }
                }
                if self.ablation != Some(StudyAblation::NoLevel1) {
                    for t in Tier::level1_pairs() {
                        tiers.extend([t, t]);
                    }
                }
                tiers
            }
        }
    }
}

fn random_origin<R: Rng + ?Sized>(rng: &mut R, shape: &Shape) -> (usize, usize) {
    let (h, w) = shape.extent();
    (rng.gen_range(0..=GRID_SIZE - h), rng.gen_range(0..=GRID_SIZE - w))
}

fn pick_other_shape<R: Rng + ?Sized>(rng: &mut R, excluded: &Shape) -> Shape {
    let lib = shapes::library();
    loop {
        let s = &lib[rng.gen_range(0..lib.len())];
        if s != excluded {
            return s.clone();
        }
    }
}

fn pick_other_color<R: Rng + ?Sized>(rng: &mut R, excluded: Color) -> Color {
    loop {
        let c = random_color(rng);
        if c != excluded {
            return c;
        }
    }
}

/// One placement attempt. `None` when the draw is rejected.
fn try_place<R: Rng + ?Sized>(rng: &mut R, grammar: &VisualGrammar, tier: Tier) -> Option<(Sample, Pos)> {
    let kinds = tier.kinds();
    let shape = if kinds.contains(&Kind::Shape) {
        grammar.shape_key.clone()
    } else {
        pick_other_shape(rng, &grammar.shape_key)
    };
    let color = if kinds.contains(&Kind::Color) {
        grammar.color_key
    } else {
        pick_other_color(rng, grammar.color_key)
    };
    let with_neighbor = kinds.contains(&Kind::Neighbor);
    if with_neighbor && shape == grammar.indicator.shape && color == grammar.indicator.color {
        return None;
    }
    let target = shape.place(random_origin(rng, &shape), color).ok()?;
    let mut input = Grid::empty().paint(&target).ok()?;
    let mut expected_objects = 1;
    if with_neighbor {
        let ind = &grammar.indicator;
        let neighbor = ind.shape.place(random_origin(rng, &ind.shape), ind.color).ok()?;
        if neighbor.touches(&target) {
            return None;
        }
        input = input.paint(&neighbor).ok()?;
        expected_objects = 2;
    }
    let objs = input.objects();
    if objs.len() != expected_objects {
        return None;
    }
    let idx = objs.iter().position(|o| *o == target)?;
    // Exclusivity: the target fires exactly the tier's indicators and nothing else fires.
    if grammar.active_kinds(&objs, idx) != kinds {
        return None;
    }
    if (0..objs.len()).any(|i| i != idx && !grammar.active_kinds(&objs, i).is_empty()) {
        return None;
    }
    let composite = grammar.composite(&kinds)?;
    let (output, moved) = composite.apply_tracked(&input, &target).ok()?;
    if output == input {
        return None;
    }
    let out_objs = output.objects();
    if out_objs.len() != expected_objects || !out_objs.contains(&moved) {
        return None;
    }
    Some((Sample { input, output, tier }, target.min_corner()))
}

/// Rejection-samples a sample of the given tier, placing the target uniformly.
pub fn synthesize_sample<R: Rng + ?Sized>(
    rng: &mut R,
    grammar: &VisualGrammar,
    tier: Tier,
    max_placements: usize,
) -> Result<Sample, GenError> {
    synthesize_distinct(rng, grammar, tier, max_placements, &Used::default()).map(|(s, _)| s)
}

/// Inputs and per-tier target positions already taken within an episode.
#[derive(Default)]
struct Used {
    inputs: HashSet<Grid>,
    placements: HashSet<(Tier, Pos)>,
}

fn synthesize_distinct<R: Rng + ?Sized>(
    rng: &mut R,
    grammar: &VisualGrammar,
    tier: Tier,
    max_placements: usize,
    used: &Used,
) -> Result<(Sample, Pos), GenError> {
    for _ in 0..max_placements {
        if let Some((s, at)) = try_place(rng, grammar, tier) {
            if !used.inputs.contains(&s.input) && !used.placements.contains(&(tier, at)) {
                return Ok((s, at));
            }
        }
    }
    Err(GenError::GenerationExhausted { tier, attempts: max_placements })
}

fn draw_samples<R: Rng + ?Sized>(
    rng: &mut R,
    grammar: &VisualGrammar,
    tiers: &[Tier],
    cfg: &GenConfig,
    used: &mut Used,
) -> Result<Vec<Sample>, GenError> {
    tiers
        .iter()
        .map(|&t| {
            let (s, at) = synthesize_distinct(rng, grammar, t, cfg.max_placements, used)?;
            used.inputs.insert(s.input);
            used.placements.insert((t, at));
            Ok(s)
        })
        .collect()
}

/// Whether the exact solver recovers the episode from its study examples alone.
fn identifiable(ep: &Episode) -> bool {
    match ep.setup {
        Setup::Systematicity => {
            solver::induce_grammar(&ep.study, ep.mode).is_ok_and(|g| g == ep.grammar)
        }
        Setup::ThreeShot => solver::solve_episode(ep)
            .is_ok_and(|preds| preds.iter().zip(&ep.queries).all(|(p, q)| *p == q.output)),
    }
}

/// Assembles an episode for one grammar. Study sets whose examples admit
/// more than one reading are redrawn.
pub fn build_episode<R: Rng + ?Sized>(
    rng: &mut R,
    id: &str,
    grammar: &VisualGrammar,
    cfg: &GenConfig,
) -> Result<Episode, GenError> {
    let schedule = cfg.study_schedule();
    let query_tiers = vec![Tier::Level2; cfg.queries];
    for _ in 0..cfg.max_study_redraws.max(1) {
        let mut used = Used::default();
        let study = draw_samples(rng, grammar, &schedule, cfg, &mut used)?;
        let queries = draw_samples(rng, grammar, &query_tiers, cfg, &mut used)?;
        let ep = Episode {
            id: id.to_string(),
            setup: cfg.setup,
            mode: cfg.mode,
            triplet: grammar.triplet(),
            grammar: grammar.clone(),
            study,
            queries,
        };
        if identifiable(&ep) {
            return Ok(ep);
        }
    }
    Err(GenError::NotIdentifiable)
}

/// Seed for one episode attempt, independent of generation order.
pub fn episode_seed(master_seed: u64, index: u64, attempt: u64) -> u64 {
    let mut z = master_seed ^ 0x9E37_79B9_7F4A_7C15;
    for v in [index, attempt] {
        z = splitmix64(z ^ splitmix64(v.wrapping_add(0xD1B5_4A32_D192_ED03)));
    }
    z
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn episode_id(index: usize) -> String {
    format!("ep{index:06}")
}

fn generate_one(master_seed: u64, index: usize, attempt: u64, cfg: &GenConfig) -> Result<Episode, GenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(episode_seed(master_seed, index as u64, attempt));
    let triplets = Triplet::all();
    let triplet = triplets[rng.gen_range(0..triplets.len())];
    // Unworkable draws are re-parameterized within the triplet so triplet frequencies stay uniform.
    for _ in 0..cfg.max_grammar_draws {
        let grammar = sample_grammar_for(&mut rng, cfg.mode, triplet);
        match build_episode(&mut rng, &episode_id(index), &grammar, cfg) {
            Ok(ep) => return Ok(ep),
            Err(GenError::GenerationExhausted { .. } | GenError::NotIdentifiable) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GenError::GrammarBudgetExceeded { index, attempts: cfg.max_grammar_draws })
}

const CHUNK: usize = 512;
const MAX_DEDUP_ATTEMPTS: u64 = 64;

/// Generates `n` episodes with dataset-wide unique grammars and hands them to
/// `sink` in index order. Output depends only on `(master_seed, cfg)`.
pub fn generate_dataset_with<F, E>(master_seed: u64, n: usize, cfg: &GenConfig, mut sink: F) -> Result<(), E>
where
    F: FnMut(Episode) -> Result<(), E>,
    E: From<GenError>,
{
    let mut seen: HashSet<VisualGrammar> = HashSet::new();
    let mut start = 0;
    while start < n {
        let end = (start + CHUNK).min(n);
        let mut slots: Vec<Option<Episode>> = vec![None; end - start];
        let mut pending: Vec<usize> = (start..end).collect();
        let mut attempt = 0u64;
        while !pending.is_empty() {
            if attempt >= MAX_DEDUP_ATTEMPTS {
                return Err(GenError::DuplicateBudgetExceeded { index: pending[0], attempts: attempt as usize }.into());
            }
            let results: Vec<Result<Episode, GenError>> = pending
                .par_iter()
                .map(|&i| generate_one(master_seed, i, attempt, cfg))
                .collect();
            let mut retry = Vec::new();
            for (i, r) in pending.iter().zip(results) {
                let ep = r?;
                if seen.insert(ep.grammar.clone()) {
                    slots[i - start] = Some(ep);
                } else {
                    retry.push(*i);
                }
            }
            pending = retry;
            attempt += 1;
        }
        for ep in slots.into_iter().flatten() {
            sink(ep)?;
        }
        start = end;
    }
    Ok(())
}

pub fn generate_dataset(master_seed: u64, n: usize, cfg: &GenConfig) -> Result<Vec<Episode>, GenError> {
    let mut out = Vec::with_capacity(n);
    generate_dataset_with(master_seed, n, cfg, |ep| {
        out.push(ep);
        Ok::<(), GenError>(())
    })?;
    Ok(out)
}

/// Sizes of the fixed-grammar corpus partitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticSizes {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl Default for StaticSizes {
    fn default() -> Self {
        StaticSizes { train: 1_260, val: 20, test: 20 }
    }
}

/// Individual input-output pairs under one fixed grammar. Training pairs
/// cover primitives and level-1 compositions; validation and test pairs are
/// level-2 compositions never shown in training.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StaticCorpus {
    pub mode: Mode,
    pub grammar: VisualGrammar,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

pub fn generate_static_corpus(master_seed: u64, sizes: StaticSizes, mode: Mode) -> Result<StaticCorpus, GenError> {
    let cfg = GenConfig { mode, ..GenConfig::default() };
    let train_tiers: Vec<Tier> = Tier::primitives().into_iter().chain(Tier::level1_pairs()).collect();
    for draw in 0..cfg.max_grammar_draws as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(episode_seed(master_seed, u64::MAX, draw));
        let grammar = sample_grammar(&mut rng, mode);
        // Single-object tiers have few distinct placements, so training pairs may repeat.
        let train: Result<Vec<Sample>, GenError> = (0..sizes.train)
            .map(|i| synthesize_sample(&mut rng, &grammar, train_tiers[i % train_tiers.len()], cfg.max_placements))
            .collect();
        let result = train.and_then(|mut train| {
            train.shuffle(&mut rng);
            let mut used = Used::default();
            let val = draw_samples(&mut rng, &grammar, &vec![Tier::Level2; sizes.val], &cfg, &mut used)?;
            let test = draw_samples(&mut rng, &grammar, &vec![Tier::Level2; sizes.test], &cfg, &mut used)?;
            Ok((train, val, test))
        });
        match result {
            Ok((train, val, test)) => return Ok(StaticCorpus { mode, grammar, train, val, test }),
            Err(GenError::GenerationExhausted { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(GenError::GrammarBudgetExceeded { index: 0, attempts: cfg.max_grammar_draws })
}

/// Target object of a sample: the input object the transformation acted on.
pub fn sample_target(grammar: &VisualGrammar, input: &Grid) -> Option<(Vec<Object>, usize)> {
    let objs = input.objects();
    let idx = (0..objs.len()).find(|&i| !grammar.active_kinds(&objs, i).is_empty())?;
    Some((objs, idx))
}
