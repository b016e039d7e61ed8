//! The five transformation families and their application semantics.
//!
//! A transformation acts on one object of a grid. It is valid when every
//! resulting cell lies inside the grid and does not land on a cell owned by
//! another object. Composites apply their parts in the fixed canonical order
//! rotation, reflection, extension, translation, color change.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::grid::{in_bounds, Color, Grid, Object, Pos, GRID_SIZE};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("{0} moves a cell outside the grid")]
    OutOfBounds(Transform),
    #[error("{0} overlaps another object at ({1}, {2})")]
    Overlap(Transform, usize, usize),
    #[error("object is not present in the grid")]
    ObjectMissing,
    #[error("composite needs 1 to 3 parts with distinct families")]
    BadComposite,
    #[error("unknown transformation {0:?}")]
    Unknown(String),
}

/// Transformation family. The declaration order is the canonical application order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Rotation,
    Reflection,
    Extension,
    Translation,
    ColorChange,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Rotation,
        Family::Reflection,
        Family::Extension,
        Family::Translation,
        Family::ColorChange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Rotation => "rotation",
            Family::Reflection => "reflection",
            Family::Extension => "extension",
            Family::Translation => "translation",
            Family::ColorChange => "color_change",
        }
    }

    pub fn from_name(s: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == s)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn delta(self) -> (isize, isize) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        }
    }

    fn from_name(s: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sense {
    Clockwise,
    CounterClockwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    /// Flips rows: `i -> i_max - (i - i_min)`.
    Horizontal,
    /// Flips columns: `j -> j_max - (j - j_min)`.
    Vertical,
}

/// A single parameterized transformation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transform {
    Rotate(Sense),
    Reflect(Axis),
    Extend(Direction),
    Translate { dir: Direction, step: u8 },
    Recolor(Color),
}

/// Which parameter space is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Translations right/down by one, extensions up/left, recolor to red/orange.
    #[default]
    Restricted,
    /// Translations by one or two in any direction, extensions in any
    /// direction, recolor to red/orange/yellow/green.
    Extended,
}

impl Mode {
    /// Every parameterization of `family` available in this mode.
    pub fn params(self, family: Family) -> Vec<Transform> {
        use Transform::*;
        match (family, self) {
            (Family::Rotation, _) => vec![Rotate(Sense::Clockwise), Rotate(Sense::CounterClockwise)],
            (Family::Reflection, _) => vec![Reflect(Axis::Horizontal), Reflect(Axis::Vertical)],
            (Family::Extension, Mode::Restricted) => vec![Extend(Direction::Up), Extend(Direction::Left)],
            (Family::Extension, Mode::Extended) => Direction::ALL.into_iter().map(Extend).collect(),
            (Family::Translation, Mode::Restricted) => vec![
                Translate { dir: Direction::Right, step: 1 },
                Translate { dir: Direction::Down, step: 1 },
            ],
            (Family::Translation, Mode::Extended) => Direction::ALL
                .into_iter()
                .flat_map(|dir| [1, 2].map(|step| Translate { dir, step }))
                .collect(),
            (Family::ColorChange, Mode::Restricted) => vec![Recolor(Color::RED), Recolor(Color::ORANGE)],
            (Family::ColorChange, Mode::Extended) => vec![
                Recolor(Color::RED),
                Recolor(Color::ORANGE),
                Recolor(Color::YELLOW),
                Recolor(Color::GREEN),
            ],
        }
    }

    /// Every single transformation in this mode, in family order.
    pub fn all_transforms(self) -> Vec<Transform> {
        Family::ALL.into_iter().flat_map(|f| self.params(f)).collect()
    }

    pub fn contains(self, t: Transform) -> bool {
        self.params(t.family()).contains(&t)
    }
}

impl Transform {
    pub fn family(self) -> Family {
        match self {
            Transform::Rotate(_) => Family::Rotation,
            Transform::Reflect(_) => Family::Reflection,
            Transform::Extend(_) => Family::Extension,
            Transform::Translate { .. } => Family::Translation,
            Transform::Recolor(_) => Family::ColorChange,
        }
    }

    /// The parameter in its serialized form.
    pub fn param_name(self) -> String {
        match self {
            Transform::Rotate(Sense::Clockwise) => "cw".into(),
            Transform::Rotate(Sense::CounterClockwise) => "ccw".into(),
            Transform::Reflect(Axis::Horizontal) => "horizontal".into(),
            Transform::Reflect(Axis::Vertical) => "vertical".into(),
            Transform::Extend(d) => d.name().into(),
            Transform::Translate { dir, step: 1 } => dir.name().into(),
            Transform::Translate { dir, step } => format!("{}_{}", dir.name(), step),
            Transform::Recolor(c) => c.name().into(),
        }
    }

    pub fn from_parts(family: Family, param: &str) -> Result<Transform, TransformError> {
        let unknown = || TransformError::Unknown(format!("{}:{}", family.name(), param));
        let t = match family {
            Family::Rotation => match param {
                "cw" => Transform::Rotate(Sense::Clockwise),
                "ccw" => Transform::Rotate(Sense::CounterClockwise),
                _ => return Err(unknown()),
            },
            Family::Reflection => match param {
                "horizontal" => Transform::Reflect(Axis::Horizontal),
                "vertical" => Transform::Reflect(Axis::Vertical),
                _ => return Err(unknown()),
            },
            Family::Extension => Transform::Extend(Direction::from_name(param).ok_or_else(unknown)?),
            Family::Translation => {
                let (dir, step) = match param.split_once('_') {
                    Some((d, "2")) => (d, 2),
                    Some(_) => return Err(unknown()),
                    None => (param, 1),
                };
                Transform::Translate { dir: Direction::from_name(dir).ok_or_else(unknown)?, step }
            }
            Family::ColorChange => Transform::Recolor(Color::from_name(param).ok_or_else(unknown)?),
        };
        Ok(t)
    }

    /// The transformation that undoes `self` when it exists. For rotations
    /// the shape comes back but the pivot drifts up-left by one less than the
    /// object's height (clockwise first) or width.
    pub fn inverse(self) -> Option<Transform> {
        match self {
            Transform::Rotate(Sense::Clockwise) => Some(Transform::Rotate(Sense::CounterClockwise)),
            Transform::Rotate(Sense::CounterClockwise) => Some(Transform::Rotate(Sense::Clockwise)),
            Transform::Reflect(a) => Some(Transform::Reflect(a)),
            Transform::Translate { dir, step } => Some(Transform::Translate { dir: dir.opposite(), step }),
            Transform::Extend(_) | Transform::Recolor(_) => None,
        }
    }

    /// Applies the transformation to `obj`, which must be an object of `grid`.
    pub fn apply(self, grid: &Grid, obj: &Object) -> Result<Grid, TransformError> {
        self.apply_tracked(grid, obj).map(|(g, _)| g)
    }

    /// Like [`Transform::apply`], also returning the transformed object.
    pub fn apply_tracked(self, grid: &Grid, obj: &Object) -> Result<(Grid, Object), TransformError> {
        let base = grid.erase(obj).map_err(|_| TransformError::ObjectMissing)?;
        let moved: Vec<(isize, isize)> = match self {
            Transform::Recolor(c) => {
                let out = obj.with_color(c);
                let g = base.paint(&out).map_err(|_| TransformError::ObjectMissing)?;
                return Ok((g, out));
            }
            Transform::Extend(dir) => {
                let (dr, dc) = dir.delta();
                let mut cells = obj.cells().to_vec();
                for &(r, c) in obj.cells() {
                    if let Some(p) = in_bounds(r as isize + dr, c as isize + dc) {
                        if !obj.contains(p) && grid.get(p) == 0 {
                            cells.push(p);
                        }
                    }
                }
                cells.into_iter().map(|(r, c)| (r as isize, c as isize)).collect()
            }
            Transform::Translate { dir, step } => {
                let (dr, dc) = dir.delta();
                let k = step as isize;
                obj.cells()
                    .iter()
                    .map(|&(r, c)| (r as isize + dr * k, c as isize + dc * k))
                    .collect()
            }
            Transform::Rotate(sense) => {
                let (r0, c0) = obj.min_corner();
                obj.cells()
                    .iter()
                    .map(|&(r, c)| {
                        let (di, dj) = ((r - r0) as isize, (c - c0) as isize);
                        let (ni, nj) = match sense {
                            Sense::Clockwise => (dj, -di),
                            Sense::CounterClockwise => (-dj, di),
                        };
                        (r0 as isize + ni, c0 as isize + nj)
                    })
                    .collect()
            }
            Transform::Reflect(axis) => {
                let (r0, c0) = obj.min_corner();
                let (r1, c1) = obj.max_corner();
                obj.cells()
                    .iter()
                    .map(|&(r, c)| match axis {
                        Axis::Horizontal => ((r1 - (r - r0)) as isize, c as isize),
                        Axis::Vertical => (r as isize, (c1 - (c - c0)) as isize),
                    })
                    .collect()
            }
        };
        let mut cells: Vec<Pos> = Vec::with_capacity(moved.len());
        for (r, c) in moved {
            let p = in_bounds(r, c).ok_or(TransformError::OutOfBounds(self))?;
            if base.get(p) != 0 {
                return Err(TransformError::Overlap(self, p.0, p.1));
            }
            cells.push(p);
        }
        let out = Object::from_parts(cells, obj.color);
        let g = base.paint(&out).map_err(|_| TransformError::ObjectMissing)?;
        Ok((g, out))
    }

    pub fn is_valid(self, grid: &Grid, obj: &Object) -> bool {
        self.apply(grid, obj).is_ok()
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family().name(), self.param_name())
    }
}

#[derive(Serialize, Deserialize)]
struct TransformRecord {
    family: Family,
    param: String,
}

impl Serialize for Transform {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TransformRecord { family: self.family(), param: self.param_name() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Transform {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = TransformRecord::deserialize(d)?;
        Transform::from_parts(rec.family, &rec.param).map_err(serde::de::Error::custom)
    }
}

/// One to three transformations of pairwise distinct families, kept in canonical order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<Transform>", into = "Vec<Transform>")]
pub struct Composite {
    parts: Vec<Transform>,
}

impl Composite {
    pub fn new(parts: impl IntoIterator<Item = Transform>) -> Result<Self, TransformError> {
        let mut parts: Vec<Transform> = parts.into_iter().collect();
        parts.sort_by_key(|t| t.family());
        let distinct = parts.windows(2).all(|w| w[0].family() != w[1].family());
        if parts.is_empty() || parts.len() > 3 || !distinct {
            return Err(TransformError::BadComposite);
        }
        Ok(Composite { parts })
    }

    pub fn single(t: Transform) -> Self {
        Composite { parts: vec![t] }
    }

    pub fn parts(&self) -> &[Transform] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    /// Color of an object of color `start` after the composite.
    pub fn final_color(&self, start: Color) -> Color {
        self.parts
            .iter()
            .find_map(|t| match t {
                Transform::Recolor(c) => Some(*c),
                _ => None,
            })
            .unwrap_or(start)
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn families(&self) -> Vec<Family> {
        self.parts.iter().map(|t| t.family()).collect()
    }

    /// Applies the parts in canonical order. On error the input grid is untouched.
    pub fn apply(&self, grid: &Grid, obj: &Object) -> Result<Grid, TransformError> {
        self.apply_tracked(grid, obj).map(|(g, _)| g)
    }

    pub fn apply_tracked(&self, grid: &Grid, obj: &Object) -> Result<(Grid, Object), TransformError> {
        apply_sequence(grid, obj, &self.parts)
    }

    pub fn is_valid(&self, grid: &Grid, obj: &Object) -> bool {
        self.apply(grid, obj).is_ok()
    }

    /// Every composite of `1..=max_parts` parts over the mode's parameter space.
    pub fn enumerate(mode: Mode, max_parts: usize) -> Vec<Composite> {
        let per_family: Vec<Vec<Transform>> = Family::ALL.iter().map(|&f| mode.params(f)).collect();
        let mut out = Vec::new();
        for mask in 1u32..(1 << Family::ALL.len()) {
            let chosen: Vec<&Vec<Transform>> = (0..Family::ALL.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| &per_family[i])
                .collect();
            if chosen.len() > max_parts {
                continue;
            }
            let mut acc: Vec<Vec<Transform>> = vec![Vec::new()];
            for options in chosen {
                acc = acc
                    .into_iter()
                    .flat_map(|prefix| {
                        options.iter().map(move |&t| {
                            let mut p = prefix.clone();
                            p.push(t);
                            p
                        })
                    })
                    .collect();
            }
            out.extend(acc.into_iter().map(|parts| Composite { parts }));
        }
        out.sort();
        out
    }
}

impl TryFrom<Vec<Transform>> for Composite {
    type Error = TransformError;

    fn try_from(parts: Vec<Transform>) -> Result<Self, Self::Error> {
        Composite::new(parts)
    }
}

impl From<Composite> for Vec<Transform> {
    fn from(c: Composite) -> Self {
        c.parts
    }
}

impl fmt::Display for Composite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.parts.iter().map(|t| t.to_string()).collect();
        f.write_str(&names.join("+"))
    }
}

/// Applies transformations one after another in the given order. After each
/// step the object is re-extracted from the new grid, so a same-colored
/// object it now touches joins it. Fails atomically.
pub fn apply_sequence(grid: &Grid, obj: &Object, parts: &[Transform]) -> Result<(Grid, Object), TransformError> {
    let mut g = *grid;
    let mut o = obj.clone();
    for t in parts {
        let (ng, moved) = t.apply_tracked(&g, &o)?;
        let anchor = moved.cells()[0];
        o = ng.objects().into_iter().find(|x| x.contains(anchor)).ok_or(TransformError::ObjectMissing)?;
        g = ng;
    }
    Ok((g, o))
}

/// Bounds check helper used by generators that place shapes.
pub fn fits(origin: Pos, extent: (usize, usize)) -> bool {
    origin.0 + extent.0 <= GRID_SIZE && origin.1 + extent.1 <= GRID_SIZE
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Shape;

    fn obj(cells: &[Pos], code: u8) -> Object {
        Object::new(cells.iter().copied(), Color::new(code).unwrap()).unwrap()
    }

    fn on_grid(objs: &[&Object]) -> Grid {
        objs.iter().fold(Grid::empty(), |g, o| g.paint(o).unwrap())
    }

    fn apply_cells(t: Transform, o: &Object) -> Result<Vec<Pos>, TransformError> {
        let g = on_grid(&[o]);
        t.apply_tracked(&g, o).map(|(_, no)| no.cells().to_vec())
    }

    #[test]
    fn translation_off_edge_is_invalid() {
        let o = obj(&[(0, 9)], 5);
        let t = Transform::Translate { dir: Direction::Right, step: 1 };
        assert_eq!(apply_cells(t, &o), Err(TransformError::OutOfBounds(t)));
        assert!(!t.is_valid(&on_grid(&[&o]), &o));
    }

    #[test]
    fn translation_down() {
        let o = obj(&[(2, 2)], 5);
        let t = Transform::Translate { dir: Direction::Down, step: 1 };
        assert_eq!(apply_cells(t, &o).unwrap(), vec![(3, 2)]);
    }

    #[test]
    fn translation_moves_l_shape_down() {
        // L-shaped yellow object moved one row down.
        let l = obj(&[(2, 3), (3, 3), (4, 3), (4, 4)], 3);
        let g = on_grid(&[&l]);
        let out = Transform::Translate { dir: Direction::Down, step: 1 }.apply(&g, &l).unwrap();
        let expected = on_grid(&[&obj(&[(3, 3), (4, 3), (5, 3), (5, 4)], 3)]);
        assert_eq!(out, expected);
    }

    #[test]
    fn translation_into_other_object_is_invalid() {
        let a = obj(&[(2, 2)], 5);
        let b = obj(&[(2, 4)], 6);
        let g = on_grid(&[&a, &b]);
        let t = Transform::Translate { dir: Direction::Right, step: 2 };
        assert_eq!(t.apply(&g, &a), Err(TransformError::Overlap(t, 2, 4)));
    }

    #[test]
    fn rotation_of_single_cell_is_fixed() {
        let o = obj(&[(4, 4)], 2);
        for s in [Sense::Clockwise, Sense::CounterClockwise] {
            assert_eq!(apply_cells(Transform::Rotate(s), &o).unwrap(), vec![(4, 4)]);
        }
    }

    #[test]
    fn rotation_of_vertical_bar() {
        let o = obj(&[(3, 4), (4, 4), (5, 4)], 5);
        let cells = apply_cells(Transform::Rotate(Sense::Clockwise), &o).unwrap();
        assert_eq!(cells, vec![(3, 2), (3, 3), (3, 4)]);
        let at_edge = obj(&[(3, 0), (4, 0), (5, 0)], 5);
        assert!(matches!(
            apply_cells(Transform::Rotate(Sense::Clockwise), &at_edge),
            Err(TransformError::OutOfBounds(_))
        ));
    }

    #[test]
    fn reflection_of_l() {
        let o = obj(&[(0, 0), (1, 0), (2, 0), (2, 1)], 4);
        let cells = apply_cells(Transform::Reflect(Axis::Horizontal), &o).unwrap();
        assert_eq!(cells, vec![(0, 0), (0, 1), (1, 0), (2, 0)]);
    }

    #[test]
    fn reflection_of_symmetric_bar_is_identity() {
        let o = obj(&[(5, 2), (5, 3), (5, 4)], 4);
        assert_eq!(apply_cells(Transform::Reflect(Axis::Vertical), &o).unwrap(), o.cells().to_vec());
        assert_eq!(apply_cells(Transform::Reflect(Axis::Horizontal), &o).unwrap(), o.cells().to_vec());
    }

    #[test]
    fn extension_of_square_upward() {
        let o = obj(&[(8, 8), (8, 9), (9, 8), (9, 9)], 5);
        let cells = apply_cells(Transform::Extend(Direction::Up), &o).unwrap();
        assert_eq!(cells, vec![(7, 8), (7, 9), (8, 8), (8, 9), (9, 8), (9, 9)]);
    }

    #[test]
    fn extension_at_top_edge_is_noop() {
        let o = obj(&[(0, 0), (1, 0), (2, 0)], 5);
        let g = on_grid(&[&o]);
        assert_eq!(Transform::Extend(Direction::Up).apply(&g, &o).unwrap(), g);
    }

    #[test]
    fn extension_left_of_horizontal_bar() {
        let o = obj(&[(5, 3), (5, 4)], 5);
        let cells = apply_cells(Transform::Extend(Direction::Left), &o).unwrap();
        assert_eq!(cells, vec![(5, 2), (5, 3), (5, 4)]);
    }

    #[test]
    fn extension_skips_foreign_cells() {
        let o = obj(&[(5, 3), (6, 3)], 5);
        let blocker = obj(&[(5, 2)], 7);
        let g = on_grid(&[&o, &blocker]);
        let (_, no) = Transform::Extend(Direction::Left).apply_tracked(&g, &o).unwrap();
        assert_eq!(no.cells(), &[(5, 3), (6, 2), (6, 3)]);
    }

    #[test]
    fn recolor() {
        let o = obj(&[(1, 1), (1, 2), (2, 2)], 5);
        let g = on_grid(&[&o]);
        assert_eq!(Transform::Recolor(o.color).apply(&g, &o).unwrap(), g);
        let out = Transform::Recolor(Color::RED).apply(&g, &o).unwrap();
        let objs = out.objects();
        assert_eq!(objs.len(), 1);
        assert_eq!(objs[0].cells(), o.cells());
        assert_eq!(objs[0].color, Color::RED);
        assert_eq!(objs[0].shape(), o.shape());
    }

    #[test]
    fn composite_orders_parts_canonically() {
        let c = Composite::new([
            Transform::Recolor(Color::RED),
            Transform::Translate { dir: Direction::Down, step: 1 },
            Transform::Rotate(Sense::Clockwise),
        ])
        .unwrap();
        assert_eq!(
            c.families(),
            vec![Family::Rotation, Family::Translation, Family::ColorChange]
        );
        assert!(Composite::new([
            Transform::Rotate(Sense::Clockwise),
            Transform::Rotate(Sense::CounterClockwise)
        ])
        .is_err());
        assert!(Composite::new([]).is_err());
    }

    #[test]
    fn composite_translation_and_reflection() {
        // Translate down and reflect horizontally.
        let o = obj(&[(1, 1), (2, 1), (3, 1), (3, 2)], 4);
        let g = on_grid(&[&o]);
        let c = Composite::new([
            Transform::Translate { dir: Direction::Down, step: 1 },
            Transform::Reflect(Axis::Horizontal),
        ])
        .unwrap();
        let out = c.apply(&g, &o).unwrap();
        let expected = on_grid(&[&obj(&[(2, 1), (2, 2), (3, 1), (4, 1)], 4)]);
        assert_eq!(out, expected);
    }

    #[test]
    fn composite_failure_is_atomic() {
        let o = obj(&[(0, 8), (0, 9)], 4);
        let g = on_grid(&[&o]);
        let c = Composite::new([
            Transform::Recolor(Color::RED),
            Transform::Translate { dir: Direction::Right, step: 1 },
        ])
        .unwrap();
        assert!(c.apply(&g, &o).is_err());
        assert!(!c.is_valid(&g, &o));
    }

    #[test]
    fn enumerate_counts() {
        assert_eq!(Composite::enumerate(Mode::Restricted, 1).len(), 10);
        // 10 singles + 40 pairs + 80 triples
        assert_eq!(Composite::enumerate(Mode::Restricted, 3).len(), 130);
        assert_eq!(Composite::enumerate(Mode::Extended, 1).len(), 20);
    }

    #[test]
    fn serialization_is_stable() {
        let t = Transform::Translate { dir: Direction::Left, step: 2 };
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"family":"translation","param":"left_2"}"#);
        assert_eq!(serde_json::from_str::<Transform>(&s).unwrap(), t);
        let s = serde_json::to_string(&Transform::Recolor(Color::ORANGE)).unwrap();
        assert_eq!(s, r#"{"family":"color_change","param":"orange"}"#);
        for t in Mode::Extended.all_transforms() {
            let s = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<Transform>(&s).unwrap(), t);
        }
    }

    #[test]
    fn restricted_space_has_no_long_steps() {
        assert!(Mode::Restricted
            .all_transforms()
            .iter()
            .all(|t| !matches!(t, Transform::Translate { step: 2, .. })));
    }

    #[test]
    fn shape_preserved_by_translation() {
        let o = obj(&[(1, 1), (2, 1), (2, 2)], 3);
        let g = on_grid(&[&o]);
        let (_, no) = Transform::Translate { dir: Direction::Right, step: 1 }
            .apply_tracked(&g, &o)
            .unwrap();
        assert_eq!(no.shape(), Shape::normalize(o.cells().iter().copied()));
    }
}
