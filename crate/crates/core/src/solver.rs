//! Exact symbolic solver.
//!
//! Explains each study pair by enumerating every composite of the active
//! parameter space, derives candidate keys from the explained objects, and
//! keeps the grammars that re-simulate every study pair exactly.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use thiserror::Error;

use crate::episodes::{Episode, Sample, Setup};
use crate::grammar::{active_kinds_for, Assignment, Kind, ObjectKey, VisualGrammar};
use crate::grid::{Color, Grid, Object, Shape};
use crate::transforms::{Composite, Mode, Transform};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("no composite explains the pair")]
    NoExplanation,
    #[error("{} grammars fit the study examples", .0.len())]
    Ambiguous(Vec<VisualGrammar>),
    #[error("no grammar fits the study examples")]
    Inconsistent,
    #[error("no object matches every indicator key")]
    NoTarget,
    #[error("candidate grammars disagree on the query output")]
    AmbiguousPrediction,
    #[error("the composite cannot be applied: {0}")]
    Invalid(String),
}

/// One way to explain a pair: applying `composite` to `input.objects()[target]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Explanation {
    pub composite: Composite,
    pub target: usize,
}

fn composites(mode: Mode) -> &'static [Composite] {
    static RESTRICTED: OnceLock<Vec<Composite>> = OnceLock::new();
    static EXTENDED: OnceLock<Vec<Composite>> = OnceLock::new();
    match mode {
        Mode::Restricted => RESTRICTED.get_or_init(|| Composite::enumerate(Mode::Restricted, 3)),
        Mode::Extended => EXTENDED.get_or_init(|| Composite::enumerate(Mode::Extended, 3)),
    }
}

/// Every composite (up to three parts) and target object that turns `input` into `output`.
pub fn infer_transform(input: &Grid, output: &Grid, mode: Mode) -> Result<Vec<Explanation>, SolveError> {
    if input == output {
        return Err(SolveError::NoExplanation);
    }
    let objs = input.objects();
    let mut out = Vec::new();
    for (target, obj) in objs.iter().enumerate() {
        // Cells outside the object must already agree.
        let untouched_agree = input
            .iter_cells()
            .all(|(p, v)| obj.contains(p) || output.get(p) == v || v == 0);
        if !untouched_agree {
            continue;
        }
        // Changed non-background cells all carry the final color of the object.
        let painted: BTreeSet<u8> = input
            .iter_cells()
            .filter(|&(p, v)| output.get(p) != v && output.get(p) != 0)
            .map(|(p, _)| output.get(p))
            .collect();
        if painted.len() > 1 {
            continue;
        }
        let final_color = painted.first().copied();
        for c in composites(mode) {
            if final_color.is_some_and(|fc| fc != c.final_color(obj.color).code()) {
                continue;
            }
            if c.apply(input, obj).as_ref() == Ok(output) {
                out.push(Explanation { composite: c.clone(), target });
            }
        }
    }
    if out.is_empty() {
        Err(SolveError::NoExplanation)
    } else {
        Ok(out)
    }
}

struct Evidence {
    input: Grid,
    output: Grid,
    objects: Vec<Object>,
    explanations: Vec<Explanation>,
}

/// Every grammar that reproduces all study pairs exactly.
pub fn candidate_grammars(study: &[Sample], mode: Mode) -> Result<Vec<VisualGrammar>, SolveError> {
    let mut evidence = Vec::with_capacity(study.len());
    for s in study {
        let explanations = infer_transform(&s.input, &s.output, mode)?;
        evidence.push(Evidence { input: s.input, output: s.output, objects: s.input.objects(), explanations });
    }

    let mut shapes: BTreeSet<Shape> = BTreeSet::new();
    let mut colors: BTreeSet<Color> = BTreeSet::new();
    let mut indicators: BTreeSet<ObjectKey> = BTreeSet::new();
    for ev in &evidence {
        for ex in &ev.explanations {
            let t = &ev.objects[ex.target];
            shapes.insert(t.shape());
            colors.insert(t.color);
            for (i, o) in ev.objects.iter().enumerate() {
                if i != ex.target {
                    indicators.insert(ObjectKey::of(o));
                }
            }
        }
    }

    let mut found: BTreeSet<VisualGrammar> = BTreeSet::new();
    for shape_key in &shapes {
        for &color_key in &colors {
            for indicator in &indicators {
                if indicator.shape == *shape_key || indicator.color == color_key {
                    continue;
                }
                fit_assignments(&evidence, shape_key, color_key, indicator, &mut found);
            }
        }
    }
    Ok(found.into_iter().collect())
}

/// For fixed keys, narrows each kind's transformation and keeps every
/// assignment that reproduces all pairs.
fn fit_assignments(
    evidence: &[Evidence],
    shape_key: &Shape,
    color_key: Color,
    indicator: &ObjectKey,
    found: &mut BTreeSet<VisualGrammar>,
) {
    // pools[k]: None until constrained
    let mut pools: [Option<BTreeSet<Transform>>; 3] = [None, None, None];
    let mut union: [BTreeSet<Transform>; 3] = Default::default();
    for ev in evidence {
        let active: Vec<Vec<Kind>> = (0..ev.objects.len())
            .map(|i| active_kinds_for(shape_key, color_key, indicator, &ev.objects, i))
            .collect();
        let mut sample_fits = false;
        let mut singles: [BTreeSet<Transform>; 3] = Default::default();
        for ex in &ev.explanations {
            let kinds = &active[ex.target];
            let others_idle = active.iter().enumerate().all(|(i, k)| i == ex.target || k.is_empty());
            if kinds.len() != ex.composite.len() || !others_idle {
                continue;
            }
            sample_fits = true;
            for &k in kinds {
                union[k as usize].extend(ex.composite.parts().iter().copied());
            }
            if let [k] = kinds[..] {
                singles[k as usize].insert(ex.composite.parts()[0]);
            }
        }
        if !sample_fits {
            return;
        }
        for k in Kind::ALL {
            let s = &singles[k as usize];
            if s.is_empty() {
                continue;
            }
            let pool = &mut pools[k as usize];
            *pool = Some(match pool.take() {
                None => s.clone(),
                Some(p) => p.intersection(s).copied().collect(),
            });
        }
    }
    let choices: Vec<Vec<Transform>> = Kind::ALL
        .iter()
        .map(|&k| match &pools[k as usize] {
            Some(p) => p.iter().copied().collect(),
            None => union[k as usize].iter().copied().collect(),
        })
        .collect();
    for &ts in &choices[0] {
        for &tc in &choices[1] {
            if tc.family() == ts.family() {
                continue;
            }
            for &tn in &choices[2] {
                if tn.family() == ts.family() || tn.family() == tc.family() {
                    continue;
                }
                let grammar = VisualGrammar {
                    shape_key: shape_key.clone(),
                    color_key,
                    indicator: indicator.clone(),
                    assignment: Assignment { shape: ts, color: tc, neighbor: tn },
                };
                if evidence.iter().all(|ev| grammar.simulate(&ev.input).as_ref() == Ok(&ev.output)) {
                    found.insert(grammar);
                }
            }
        }
    }
}

/// Recovers the unique grammar consistent with the study examples.
pub fn induce_grammar(study: &[Sample], mode: Mode) -> Result<VisualGrammar, SolveError> {
    let mut cands = candidate_grammars(study, mode)?;
    match cands.len() {
        0 => Err(SolveError::Inconsistent),
        1 => Ok(cands.pop().expect("one candidate")),
        _ => Err(SolveError::Ambiguous(cands)),
    }
}

/// Applies the full composite to the object matching all three keys.
pub fn solve_query(grammar: &VisualGrammar, query: &Grid) -> Result<Grid, SolveError> {
    let objs = query.objects();
    let target = (0..objs.len())
        .find(|&i| grammar.active_kinds(&objs, i).len() == 3)
        .ok_or(SolveError::NoTarget)?;
    grammar
        .level2()
        .apply(query, &objs[target])
        .map_err(|e| SolveError::Invalid(e.to_string()))
}

/// Predicts every query of an episode.
///
/// Systematicity episodes must pin a unique grammar. Three-shot episodes only
/// show full composites, so the assignment of families to kinds is not
/// identifiable; there every candidate must agree on each query output.
pub fn solve_episode(ep: &Episode) -> Result<Vec<Grid>, SolveError> {
    let cands = match ep.setup {
        Setup::Systematicity => vec![induce_grammar(&ep.study, ep.mode)?],
        Setup::ThreeShot => {
            let c = candidate_grammars(&ep.study, ep.mode)?;
            if c.is_empty() {
                return Err(SolveError::Inconsistent);
            }
            c
        }
    };
    ep.queries
        .iter()
        .map(|q| {
            let first = solve_query(&cands[0], &q.input)?;
            for g in &cands[1..] {
                if solve_query(g, &q.input)? != first {
                    return Err(SolveError::AmbiguousPrediction);
                }
            }
            Ok(first)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episodes::{build_episode, generate_dataset, GenConfig};
    use crate::grammar::sample_grammar;
    use crate::transforms::{Axis, Direction};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn obj(cells: &[(usize, usize)], code: u8) -> Object {
        Object::new(cells.iter().copied(), Color::new(code).unwrap()).unwrap()
    }

    #[test]
    fn explains_translation_down() {
        let o = obj(&[(2, 3), (3, 3), (4, 3), (4, 4)], 3);
        let input = Grid::empty().paint(&o).unwrap();
        let out = Transform::Translate { dir: Direction::Down, step: 1 }.apply(&input, &o).unwrap();
        let ex = infer_transform(&input, &out, Mode::Restricted).unwrap();
        assert!(ex.contains(&Explanation {
            composite: Composite::single(Transform::Translate { dir: Direction::Down, step: 1 }),
            target: 0
        }));
    }

    #[test]
    fn explains_translation_plus_reflection() {
        let o = obj(&[(1, 1), (2, 1), (3, 1), (3, 2)], 4);
        let input = Grid::empty().paint(&o).unwrap();
        let c = Composite::new([
            Transform::Translate { dir: Direction::Down, step: 1 },
            Transform::Reflect(Axis::Horizontal),
        ])
        .unwrap();
        let out = c.apply(&input, &o).unwrap();
        let ex = infer_transform(&input, &out, Mode::Restricted).unwrap();
        assert!(ex.iter().any(|e| e.composite == c));
    }

    #[test]
    fn identity_pair_has_no_explanation() {
        let o = obj(&[(1, 1), (2, 1)], 4);
        let g = Grid::empty().paint(&o).unwrap();
        assert_eq!(infer_transform(&g, &g, Mode::Restricted), Err(SolveError::NoExplanation));
    }

    #[test]
    fn induces_generating_grammar() {
        let cfg = GenConfig::default();
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let grammar = sample_grammar(&mut rng, cfg.mode);
            let Ok(ep) = build_episode(&mut rng, "t", &grammar, &cfg) else {
                continue;
            };
            assert_eq!(induce_grammar(&ep.study, ep.mode).unwrap(), grammar);
            let preds = solve_episode(&ep).unwrap();
            for (p, q) in preds.iter().zip(&ep.queries) {
                assert_eq!(*p, q.output);
            }
        }
    }

    #[test]
    fn corrupted_study_is_inconsistent() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let grammar = sample_grammar(&mut rng, cfg.mode);
        let mut ep = build_episode(&mut rng, "t", &grammar, &cfg).unwrap();
        // Recolor the changed object of the first study output to an unused color.
        let s = &mut ep.study[0];
        let objs = s.output.objects();
        let used: Vec<Color> = objs.iter().map(|o| o.color).collect();
        let fresh = Color::all()
            .find(|c| !used.contains(c) && *c != grammar.color_key && !matches!(grammar.transform(Kind::Shape), Transform::Recolor(x) if x == *c))
            .unwrap();
        s.output = Transform::Recolor(fresh).apply(&s.output, &objs[0]).unwrap();
        let r = induce_grammar(&ep.study, ep.mode);
        assert!(matches!(r, Err(SolveError::Inconsistent) | Err(SolveError::NoExplanation)), "{r:?}");
    }

    #[test]
    fn query_without_indicator_has_no_target() {
        let ep = generate_dataset(5, 1, &GenConfig::default()).unwrap().remove(0);
        let grammar = &ep.grammar;
        let q = &ep.queries[0].input;
        let objs = q.objects();
        let ind = objs.iter().find(|o| grammar.indicator.matches(o)).unwrap();
        let stripped = q.erase(ind).unwrap();
        assert_eq!(solve_query(grammar, &stripped), Err(SolveError::NoTarget));
    }
}
