//! The fixed polyomino library objects are drawn from.

use std::sync::OnceLock;

use crate::grid::{Pos, Shape};

const LIBRARY: [&[Pos]; 16] = [
    // bars
    &[(0, 0), (0, 1), (0, 2)],
    &[(0, 0), (1, 0), (2, 0)],
    &[(0, 0), (0, 1), (0, 2), (0, 3)],
    &[(0, 0), (1, 0), (2, 0), (3, 0)],
    // L / J
    &[(0, 0), (1, 0), (2, 0), (2, 1)],
    &[(0, 1), (1, 1), (2, 0), (2, 1)],
    &[(0, 0), (1, 0), (1, 1)],
    // T
    &[(0, 0), (0, 1), (0, 2), (1, 1)],
    // S / Z
    &[(0, 1), (0, 2), (1, 0), (1, 1)],
    &[(0, 0), (0, 1), (1, 1), (1, 2)],
    // square
    &[(0, 0), (0, 1), (1, 0), (1, 1)],
    // plus
    &[(0, 1), (1, 0), (1, 1), (1, 2), (2, 1)],
    // diagonals
    &[(0, 0), (1, 1), (2, 2)],
    &[(0, 2), (1, 1), (2, 0)],
    // U
    &[(0, 0), (0, 2), (1, 0), (1, 1), (1, 2)],
    // 2x3 block
    &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)],
];

/// The sixteen library shapes, pairwise distinct as normalized cell sets.
pub fn library() -> &'static [Shape] {
    static SHAPES: OnceLock<Vec<Shape>> = OnceLock::new();
    SHAPES.get_or_init(|| LIBRARY.iter().map(|cells| Shape::normalize(cells.iter().copied())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn library_is_distinct_connected_and_sized() {
        let lib = library();
        assert_eq!(lib.len(), 16);
        let distinct: HashSet<&Shape> = lib.iter().collect();
        assert_eq!(distinct.len(), 16);
        for s in lib {
            assert!((3..=6).contains(&s.len()), "{s:?}");
            assert!(s.is_connected(), "{s:?}");
            assert_eq!(Shape::normalize(s.cells().iter().copied()), *s);
        }
    }
}
