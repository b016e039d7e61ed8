//! Exact-match, color and shape accuracy, and their aggregation.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::grid::{Grid, Shape, NUM_COLORS};

pub fn exact_match(pred: &Grid, target: &Grid) -> bool {
    pred == target
}

/// Number of objects of each color, indexed by color code.
pub fn color_counts(grid: &Grid) -> [usize; NUM_COLORS as usize + 1] {
    let mut counts = [0; NUM_COLORS as usize + 1];
    for obj in grid.objects() {
        counts[obj.color.code() as usize] += 1;
    }
    counts
}

/// Same number of objects of every color.
pub fn color_accuracy(pred: &Grid, target: &Grid) -> bool {
    color_counts(pred) == color_counts(target)
}

/// Sorted multiset of normalized object shapes.
pub fn shape_multiset(grid: &Grid) -> Vec<Shape> {
    let mut shapes: Vec<Shape> = grid.objects().iter().map(|o| o.shape()).collect();
    shapes.sort();
    shapes
}

/// Same multiset of normalized shapes.
pub fn shape_accuracy(pred: &Grid, target: &Grid) -> bool {
    shape_multiset(pred) == shape_multiset(target)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairScore {
    pub exact: bool,
    pub color: bool,
    pub shape: bool,
}

impl PairScore {
    pub fn of(pred: &Grid, target: &Grid) -> PairScore {
        PairScore {
            exact: exact_match(pred, target),
            color: color_accuracy(pred, target),
            shape: shape_accuracy(pred, target),
        }
    }

    pub const ZERO: PairScore = PairScore { exact: false, color: false, shape: false };
}

/// How predictions that are not a legal grid enter the averages.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatPolicy {
    /// Counted as wrong on every metric.
    #[default]
    CountAsZero,
    /// Left out of the denominators.
    Drop,
}

/// A model or solver answer for one query. `prediction` is `None` when no
/// legal grid could be obtained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub episode_id: String,
    pub query_index: usize,
    pub prediction: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeBreakdown {
    pub episode_id: String,
    pub n: usize,
    pub exact: usize,
    pub color: usize,
    pub shape: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub format_failures: usize,
    pub exact_match: Option<f64>,
    pub color_acc: Option<f64>,
    pub shape_acc: Option<f64>,
    pub per_episode: Vec<EpisodeBreakdown>,
}

/// One scored query: `None` for a format failure.
#[derive(Clone, Debug, PartialEq)]
pub struct Scored {
    pub episode_id: String,
    pub score: Option<PairScore>,
}

/// Averages scores. Fractions are absent when nothing is counted.
pub fn aggregate(scored: &[Scored], policy: FormatPolicy) -> EvalReport {
    let mut report = EvalReport::default();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let (mut exact, mut color, mut shape) = (0usize, 0usize, 0usize);
    for s in scored {
        let score = match (s.score, policy) {
            (Some(p), _) => p,
            (None, FormatPolicy::CountAsZero) => {
                report.format_failures += 1;
                PairScore::ZERO
            }
            (None, FormatPolicy::Drop) => {
                report.format_failures += 1;
                continue;
            }
        };
        let slot = *index.entry(&s.episode_id).or_insert_with(|| {
            report.per_episode.push(EpisodeBreakdown { episode_id: s.episode_id.clone(), ..Default::default() });
            report.per_episode.len() - 1
        });
        let ep = &mut report.per_episode[slot];
        ep.n += 1;
        ep.exact += score.exact as usize;
        ep.color += score.color as usize;
        ep.shape += score.shape as usize;
        report.n += 1;
        exact += score.exact as usize;
        color += score.color as usize;
        shape += score.shape as usize;
    }
    if report.n > 0 {
        let n = report.n as f64;
        report.exact_match = Some(exact as f64 / n);
        report.color_acc = Some(color as f64 / n);
        report.shape_acc = Some(shape as f64 / n);
    }
    report
}

impl EvalReport {
    /// Plain-text summary table.
    pub fn table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{:.2}%", 100.0 * v));
        format!(
            "{:<16}{:>10}\n{:<16}{:>10}\n{:<16}{:>10}\n{:<16}{:>10}\n{:<16}{:>10}\n",
            "queries",
            self.n,
            "format failures",
            self.format_failures,
            "exact match",
            pct(self.exact_match),
            "color",
            pct(self.color_acc),
            "shape",
            pct(self.shape_acc),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Color, Object};

    fn grid_with(objs: &[Object]) -> Grid {
        objs.iter().fold(Grid::empty(), |g, o| g.paint(o).unwrap())
    }

    fn obj(cells: &[(usize, usize)], c: u8) -> Object {
        Object::new(cells.to_vec(), Color::new(c).unwrap()).unwrap()
    }

    #[test]
    fn moved_object_keeps_color_and_shape() {
        let a = grid_with(&[obj(&[(0, 0), (0, 1)], 3)]);
        let b = grid_with(&[obj(&[(5, 5), (5, 6)], 3)]);
        assert_eq!(PairScore::of(&a, &b), PairScore { exact: false, color: true, shape: true });
    }

    #[test]
    fn recolor_breaks_color_only() {
        let a = grid_with(&[obj(&[(0, 0), (0, 1)], 3)]);
        let b = grid_with(&[obj(&[(0, 0), (0, 1)], 4)]);
        assert_eq!(PairScore::of(&a, &b), PairScore { exact: false, color: false, shape: true });
    }

    #[test]
    fn split_object_changes_color_count() {
        let whole = grid_with(&[obj(&[(0, 0), (0, 1), (0, 2)], 2)]);
        let split = grid_with(&[obj(&[(0, 0)], 2), obj(&[(0, 2)], 2)]);
        assert!(!color_accuracy(&split, &whole));
    }

    #[test]
    fn reflected_l_breaks_shape() {
        let l = grid_with(&[obj(&[(0, 0), (1, 0), (2, 0), (2, 1)], 5)]);
        let flipped = grid_with(&[obj(&[(0, 0), (0, 1), (1, 0), (2, 0)], 5)]);
        assert!(color_accuracy(&l, &flipped));
        assert!(!shape_accuracy(&l, &flipped));
    }

    #[test]
    fn empty_grids_agree() {
        assert_eq!(PairScore::of(&Grid::empty(), &Grid::empty()), PairScore { exact: true, color: true, shape: true });
    }

    #[test]
    fn format_policies() {
        let ok = PairScore { exact: true, color: true, shape: true };
        let scored = vec![
            Scored { episode_id: "a".into(), score: Some(ok) },
            Scored { episode_id: "a".into(), score: None },
            Scored { episode_id: "b".into(), score: Some(PairScore { exact: false, color: true, shape: false }) },
        ];
        let zero = aggregate(&scored, FormatPolicy::CountAsZero);
        assert_eq!(zero.n, 3);
        assert_eq!(zero.exact_match, Some(1.0 / 3.0));
        assert_eq!(zero.color_acc, Some(2.0 / 3.0));
        assert_eq!(zero.per_episode.len(), 2);
        let dropped = aggregate(&scored, FormatPolicy::Drop);
        assert_eq!(dropped.n, 2);
        assert_eq!(dropped.format_failures, 1);
        assert_eq!(dropped.exact_match, Some(0.5));
        let none = aggregate(&[], FormatPolicy::CountAsZero);
        assert_eq!((none.n, none.exact_match), (0, None));
    }
}
