//! Fixed-size color grids and the objects that live on them.
//!
//! A grid is a 10x10 matrix of color codes `0..=9`; `0` is background. An
//! object is a maximal set of same-colored cells connected under the Moore
//! neighborhood (orthogonal and diagonal adjacency).

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Side length of every grid.
pub const GRID_SIZE: usize = 10;

/// Number of non-background colors.
pub const NUM_COLORS: u8 = 9;

/// `(row, col)` with row 0 at the top.
pub type Pos = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("grid must have {GRID_SIZE} rows, got {0}")]
    RowCount(usize),
    #[error("row {row} must have {GRID_SIZE} columns, got {len}")]
    ColumnCount { row: usize, len: usize },
    #[error("cell value {value} at ({row}, {col}) is outside 0..=9")]
    CellValue { row: usize, col: usize, value: i64 },
    #[error("color code {0} is outside 1..=9")]
    InvalidColor(i64),
    #[error("cell ({0}, {1}) is already occupied")]
    Overlap(usize, usize),
    #[error("cell ({0}, {1}) does not hold the object's color")]
    Mismatch(usize, usize),
    #[error("object has no cells")]
    EmptyObject,
    #[error("cell ({0}, {1}) is out of bounds")]
    OutOfBounds(usize, usize),
    #[error("malformed grid text: {0}")]
    Parse(String),
}

/// A non-background color code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Color(u8);

impl Color {
    pub const RED: Color = Color(1);
    pub const ORANGE: Color = Color(2);
    pub const YELLOW: Color = Color(3);
    pub const GREEN: Color = Color(4);

    const NAMES: [&'static str; 9] = [
        "red", "orange", "yellow", "green", "blue", "purple", "pink", "cyan", "gray",
    ];

    pub fn new(code: u8) -> Result<Self, GridError> {
        if (1..=NUM_COLORS).contains(&code) {
            Ok(Color(code))
        } else {
            Err(GridError::InvalidColor(code as i64))
        }
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn name(self) -> &'static str {
        Self::NAMES[self.0 as usize - 1]
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::NAMES
            .iter()
            .position(|n| *n == name)
            .map(|i| Color(i as u8 + 1))
    }

    /// All nine foreground colors in code order.
    pub fn all() -> impl Iterator<Item = Color> {
        (1..=NUM_COLORS).map(Color)
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Color {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.0)
    }
}

impl<'de> Deserialize<'de> for Color {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let code = u8::deserialize(d)?;
        Color::new(code).map_err(serde::de::Error::custom)
    }
}

/// A 10x10 grid of color codes.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Grid {
    cells: [[u8; GRID_SIZE]; GRID_SIZE],
}

impl Grid {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_cells(cells: [[u8; GRID_SIZE]; GRID_SIZE]) -> Result<Self, GridError> {
        for (r, row) in cells.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v > NUM_COLORS {
                    return Err(GridError::CellValue { row: r, col: c, value: v as i64 });
                }
            }
        }
        Ok(Grid { cells })
    }

    /// Builds a grid from nested rows, validating shape and value range.
    pub fn from_rows<R: AsRef<[i64]>>(rows: &[R]) -> Result<Self, GridError> {
        if rows.len() != GRID_SIZE {
            return Err(GridError::RowCount(rows.len()));
        }
        let mut cells = [[0u8; GRID_SIZE]; GRID_SIZE];
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != GRID_SIZE {
                return Err(GridError::ColumnCount { row: r, len: row.len() });
            }
            for (c, &v) in row.iter().enumerate() {
                if !(0..=NUM_COLORS as i64).contains(&v) {
                    return Err(GridError::CellValue { row: r, col: c, value: v });
                }
                cells[r][c] = v as u8;
            }
        }
        Ok(Grid { cells })
    }

    pub fn get(&self, (r, c): Pos) -> u8 {
        self.cells[r][c]
    }

    pub(crate) fn set(&mut self, (r, c): Pos, v: u8) {
        self.cells[r][c] = v;
    }

    pub fn rows(&self) -> &[[u8; GRID_SIZE]; GRID_SIZE] {
        &self.cells
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.cells.iter().map(|r| r.to_vec()).collect()
    }

    /// Row-major cell values.
    pub fn iter_cells(&self) -> impl Iterator<Item = (Pos, u8)> + '_ {
        (0..GRID_SIZE).flat_map(move |r| (0..GRID_SIZE).map(move |c| ((r, c), self.cells[r][c])))
    }

    pub fn foreground_count(&self) -> usize {
        self.iter_cells().filter(|(_, v)| *v != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.foreground_count() == 0
    }

    /// Writes `obj.color` into every object cell. Every target cell must be background.
    pub fn paint(&self, obj: &Object) -> Result<Grid, GridError> {
        let mut out = *self;
        for &p in obj.cells() {
            if out.get(p) != 0 {
                return Err(GridError::Overlap(p.0, p.1));
            }
            out.set(p, obj.color.code());
        }
        Ok(out)
    }

    /// Clears every object cell. Every cell must currently hold `obj.color`.
    pub fn erase(&self, obj: &Object) -> Result<Grid, GridError> {
        let mut out = *self;
        for &p in obj.cells() {
            if out.get(p) != obj.color.code() {
                return Err(GridError::Mismatch(p.0, p.1));
            }
            out.set(p, 0);
        }
        Ok(out)
    }

    /// All maximal same-color Moore-connected components of foreground cells,
    /// ordered by (min row, min col, color).
    pub fn objects(&self) -> Vec<Object> {
        let mut seen = [[false; GRID_SIZE]; GRID_SIZE];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for r in 0..GRID_SIZE {
            for c in 0..GRID_SIZE {
                let color = self.cells[r][c];
                if color == 0 || seen[r][c] {
                    continue;
                }
                let mut cells = Vec::new();
                seen[r][c] = true;
                queue.push_back((r, c));
                while let Some((pr, pc)) = queue.pop_front() {
                    cells.push((pr, pc));
                    for (nr, nc) in moore_neighbors((pr, pc)) {
                        if !seen[nr][nc] && self.cells[nr][nc] == color {
                            seen[nr][nc] = true;
                            queue.push_back((nr, nc));
                        }
                    }
                }
                out.push(Object::from_parts(cells, Color(color)));
            }
        }
        out.sort_by_key(|o| {
            let (r, c) = o.min_corner();
            (r, c, o.color)
        });
        out
    }

    /// Python-list style text: `[[0, 0, ...], [0, ...], ...]`.
    pub fn to_array_string(&self) -> String {
        let rows: Vec<String> = self
            .cells
            .iter()
            .map(|row| {
                let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                format!("[{}]", vals.join(", "))
            })
            .collect();
        format!("[{}]", rows.join(", "))
    }
}

/// In-bounds Moore neighbors of a cell.
pub fn moore_neighbors((r, c): Pos) -> impl Iterator<Item = Pos> {
    let (r, c) = (r as isize, c as isize);
    (-1..=1isize)
        .flat_map(move |dr| (-1..=1isize).map(move |dc| (dr, dc)))
        .filter(|&(dr, dc)| dr != 0 || dc != 0)
        .filter_map(move |(dr, dc)| in_bounds(r + dr, c + dc))
}

pub fn in_bounds(r: isize, c: isize) -> Option<Pos> {
    let n = GRID_SIZE as isize;
    if (0..n).contains(&r) && (0..n).contains(&c) {
        Some((r as usize, c as usize))
    } else {
        None
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_array_string())
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Grid[")?;
        for row in &self.cells {
            let line: String = row
                .iter()
                .map(|&v| if v == 0 { '.' } else { (b'0' + v) as char })
                .collect();
            writeln!(f, "  {line}")?;
        }
        write!(f, "]")
    }
}

impl FromStr for Grid {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let rows: Vec<Vec<i64>> =
            serde_json::from_str(s.trim()).map_err(|e| GridError::Parse(e.to_string()))?;
        Grid::from_rows(&rows)
    }
}

impl Serialize for Grid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.cells.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<i64>>::deserialize(d)?;
        Grid::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// A connected same-color cell set. Cells are kept sorted.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Object {
    cells: Vec<Pos>,
    pub color: Color,
}

impl Object {
    /// Creates an object from explicit cells. Connectivity is not checked here.
    pub fn new(cells: impl IntoIterator<Item = Pos>, color: Color) -> Result<Self, GridError> {
        let cells: Vec<Pos> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(GridError::EmptyObject);
        }
        if let Some(&(r, c)) = cells.iter().find(|&&(r, c)| r >= GRID_SIZE || c >= GRID_SIZE) {
            return Err(GridError::OutOfBounds(r, c));
        }
        Ok(Self::from_parts(cells, color))
    }

    pub(crate) fn from_parts(mut cells: Vec<Pos>, color: Color) -> Self {
        cells.sort_unstable();
        cells.dedup();
        Object { cells, color }
    }

    pub fn cells(&self) -> &[Pos] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, p: Pos) -> bool {
        self.cells.binary_search(&p).is_ok()
    }

    /// `(min row, min col)` of the bounding box.
    pub fn min_corner(&self) -> Pos {
        let r = self.cells.iter().map(|p| p.0).min().unwrap_or(0);
        let c = self.cells.iter().map(|p| p.1).min().unwrap_or(0);
        (r, c)
    }

    /// `(max row, max col)` of the bounding box.
    pub fn max_corner(&self) -> Pos {
        let r = self.cells.iter().map(|p| p.0).max().unwrap_or(0);
        let c = self.cells.iter().map(|p| p.1).max().unwrap_or(0);
        (r, c)
    }

    pub fn shape(&self) -> Shape {
        Shape::normalize(self.cells.iter().copied())
    }

    pub fn with_color(&self, color: Color) -> Object {
        Object { cells: self.cells.clone(), color }
    }

    /// True when some cell of `self` is Moore-adjacent to (or equal to) a cell of `other`.
    pub fn touches(&self, other: &Object) -> bool {
        self.cells.iter().any(|&(r, c)| {
            other.cells.iter().any(|&(or, oc)| r.abs_diff(or) <= 1 && c.abs_diff(oc) <= 1)
        })
    }
}

/// A cell set anchored so that its minimum row and column are both zero.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape(Vec<Pos>);

impl Shape {
    pub fn normalize(cells: impl IntoIterator<Item = Pos>) -> Shape {
        let cells: Vec<Pos> = cells.into_iter().collect();
        let r0 = cells.iter().map(|p| p.0).min().unwrap_or(0);
        let c0 = cells.iter().map(|p| p.1).min().unwrap_or(0);
        let mut out: Vec<Pos> = cells.iter().map(|&(r, c)| (r - r0, c - c0)).collect();
        out.sort_unstable();
        out.dedup();
        Shape(out)
    }

    pub fn cells(&self) -> &[Pos] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `(height, width)` of the bounding box.
    pub fn extent(&self) -> (usize, usize) {
        let h = self.0.iter().map(|p| p.0).max().map_or(0, |m| m + 1);
        let w = self.0.iter().map(|p| p.1).max().map_or(0, |m| m + 1);
        (h, w)
    }

    /// Places the shape with its bounding-box corner at `origin`.
    pub fn place(&self, origin: Pos, color: Color) -> Result<Object, GridError> {
        Object::new(self.0.iter().map(|&(r, c)| (r + origin.0, c + origin.1)), color)
    }

    /// Whether the cells form one Moore-connected component.
    pub fn is_connected(&self) -> bool {
        let Some(&start) = self.0.first() else {
            return false;
        };
        let mut seen = vec![start];
        let mut stack = vec![start];
        while let Some((r, c)) = stack.pop() {
            for &q in &self.0 {
                if !seen.contains(&q) && r.abs_diff(q.0) <= 1 && c.abs_diff(q.1) <= 1 {
                    seen.push(q);
                    stack.push(q);
                }
            }
        }
        seen.len() == self.0.len()
    }
}

impl Serialize for Shape {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[usize; 2]> = self.0.iter().map(|&(r, c)| [r, c]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Shape {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let pairs = Vec::<[usize; 2]>::deserialize(d)?;
        if pairs.is_empty() {
            return Err(serde::de::Error::custom("shape has no cells"));
        }
        if pairs.iter().any(|p| p[0] >= GRID_SIZE || p[1] >= GRID_SIZE) {
            return Err(serde::de::Error::custom("shape offset outside the grid"));
        }
        Ok(Shape::normalize(pairs.into_iter().map(|[r, c]| (r, c))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_with(cells: &[(Pos, u8)]) -> Grid {
        let mut g = Grid::empty();
        for &(p, v) in cells {
            g.set(p, v);
        }
        g
    }

    /// Final query input of the three-shot prompt example.
    pub(crate) fn prompt_example_grid() -> Grid {
        grid_with(&[
            ((4, 1), 5),
            ((5, 1), 5),
            ((6, 0), 5),
            ((6, 1), 5),
            ((7, 1), 5),
            ((8, 4), 1),
            ((9, 4), 1),
            ((9, 5), 1),
        ])
    }

    #[test]
    fn empty_grid_has_no_objects() {
        assert!(Grid::empty().objects().is_empty());
    }

    #[test]
    fn prompt_example_has_two_objects() {
        let objs = prompt_example_grid().objects();
        assert_eq!(objs.len(), 2);
        assert_eq!(objs[0].color.code(), 5);
        assert_eq!(objs[0].len(), 5);
        assert_eq!(objs[1].color.code(), 1);
        assert_eq!(objs[1].len(), 3);
        assert_eq!(objs[1].shape().cells(), &[(0, 0), (1, 0), (1, 1)]);
    }

    #[test]
    fn diagonal_cells_are_connected() {
        let g = grid_with(&[((0, 0), 4), ((1, 1), 4)]);
        let objs = g.objects();
        assert_eq!(objs.len(), 1);
        assert_eq!(objs[0].len(), 2);
    }

    #[test]
    fn different_colors_do_not_merge() {
        let g = grid_with(&[((0, 0), 4), ((0, 1), 5)]);
        assert_eq!(g.objects().len(), 2);
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            Shape::normalize([(3, 4), (4, 4), (5, 4)]).cells(),
            &[(0, 0), (1, 0), (2, 0)]
        );
        assert_eq!(Shape::normalize([(0, 0)]).cells(), &[(0, 0)]);
    }

    #[test]
    fn paint_and_erase() {
        let obj = Object::new([(2, 2), (2, 3), (3, 3)], Color::new(5).unwrap()).unwrap();
        let g = Grid::empty().paint(&obj).unwrap();
        assert_eq!(g.foreground_count(), 3);
        assert_eq!(g.erase(&obj).unwrap(), Grid::empty());
        assert_eq!(g.erase(&obj).unwrap().paint(&obj).unwrap(), g);
        assert_eq!(g.paint(&obj), Err(GridError::Overlap(2, 2)));
        let other = obj.with_color(Color::RED);
        assert_eq!(g.erase(&other), Err(GridError::Mismatch(2, 2)));
    }

    #[test]
    fn text_round_trip() {
        let g = prompt_example_grid();
        let text = g.to_array_string();
        assert!(text.starts_with("[[0, 0, 0"));
        assert_eq!(text.parse::<Grid>().unwrap(), g);
    }

    #[test]
    fn rejects_bad_dimensions_and_values() {
        let nine: Vec<Vec<i64>> = vec![vec![0; 10]; 9];
        assert_eq!(Grid::from_rows(&nine), Err(GridError::RowCount(9)));
        let mut bad = vec![vec![0i64; 10]; 10];
        bad[3][4] = 10;
        assert!(matches!(Grid::from_rows(&bad), Err(GridError::CellValue { .. })));
    }

    #[test]
    fn color_names() {
        let names: Vec<&str> = Color::all().map(|c| c.name()).collect();
        assert_eq!(
            names,
            ["red", "orange", "yellow", "green", "blue", "purple", "pink", "cyan", "gray"]
        );
        assert_eq!(Color::from_name("cyan").unwrap().code(), 8);
    }
}
