use std::collections::HashSet;

use gridcomp_core::grid::{Color, Grid, Object, GRID_SIZE};
use gridcomp_core::prompt::parse_response;
use gridcomp_core::transforms::{Axis, Composite, Direction, Mode, Sense, Transform};
use proptest::prelude::*;

fn sparse_grid() -> impl Strategy<Value = Grid> {
    prop::collection::vec(prop_oneof![8 => Just(0i64), 2 => 1i64..10], GRID_SIZE * GRID_SIZE).prop_map(|v| {
        let rows: Vec<Vec<i64>> = v.chunks(GRID_SIZE).map(|c| c.to_vec()).collect();
        Grid::from_rows(&rows).unwrap()
    })
}

fn any_grid() -> impl Strategy<Value = Grid> {
    prop::collection::vec(0i64..10, GRID_SIZE * GRID_SIZE).prop_map(|v| {
        let rows: Vec<Vec<i64>> = v.chunks(GRID_SIZE).map(|c| c.to_vec()).collect();
        Grid::from_rows(&rows).unwrap()
    })
}

fn any_transform() -> impl Strategy<Value = Transform> {
    let all = Mode::Extended.all_transforms();
    (0..all.len()).prop_map(move |i| all[i])
}

/// A grid with at least one object and the index of one of them.
fn grid_and_object() -> impl Strategy<Value = (Grid, usize)> {
    sparse_grid()
        .prop_filter("needs an object", |g| !g.is_empty())
        .prop_flat_map(|g| {
            let n = g.objects().len();
            (Just(g), 0..n)
        })
}

proptest! {
    #[test]
    fn objects_partition_the_foreground(g in sparse_grid()) {
        let objs = g.objects();
        let mut seen = HashSet::new();
        for o in &objs {
            for &p in o.cells() {
                prop_assert!(seen.insert(p), "cell {p:?} in two objects");
                prop_assert_eq!(g.get(p), o.color.code());
            }
        }
        let fg: HashSet<_> = g.iter_cells().filter(|(_, v)| *v != 0).map(|(p, _)| p).collect();
        prop_assert_eq!(seen, fg);
    }

    #[test]
    fn objects_come_in_canonical_order(g in sparse_grid()) {
        let keys: Vec<_> = g.objects().iter().map(|o| (o.min_corner(), o.color)).collect();
        prop_assert!(keys.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn erase_then_paint_is_identity((g, i) in grid_and_object()) {
        let o = &g.objects()[i];
        prop_assert_eq!(g.erase(o).unwrap().paint(o).unwrap(), g);
    }

    #[test]
    fn painted_object_is_extracted_back((g, i) in grid_and_object()) {
        let o = &g.objects()[i];
        let alone = Grid::empty().paint(o).unwrap();
        prop_assert_eq!(alone.objects(), vec![o.clone()]);
    }

    #[test]
    fn shape_is_translation_invariant((g, i) in grid_and_object(), dr in 0usize..10, dc in 0usize..10) {
        let o = &g.objects()[i];
        let (r1, c1) = o.max_corner();
        prop_assume!(r1 + dr < GRID_SIZE && c1 + dc < GRID_SIZE);
        let moved = Object::new(o.cells().iter().map(|&(r, c)| (r + dr, c + dc)), o.color).unwrap();
        prop_assert_eq!(moved.shape(), o.shape());
    }

    #[test]
    fn validity_agrees_with_application((g, i) in grid_and_object(), t in any_transform()) {
        let o = &g.objects()[i];
        prop_assert_eq!(t.is_valid(&g, o), t.apply(&g, o).is_ok());
    }

    #[test]
    fn other_objects_are_untouched((g, i) in grid_and_object(), t in any_transform()) {
        let objs = g.objects();
        let o = &objs[i];
        if let Ok(out) = t.apply(&g, o) {
            for (j, other) in objs.iter().enumerate() {
                if j != i {
                    for &p in other.cells() {
                        prop_assert_eq!(out.get(p), g.get(p));
                    }
                }
            }
        }
    }

    #[test]
    fn cell_counts_follow_the_family((g, i) in grid_and_object(), t in any_transform()) {
        let o = &g.objects()[i];
        if let Ok((out, moved)) = t.apply_tracked(&g, o) {
            match t {
                Transform::Extend(_) => prop_assert!(moved.len() >= o.len()),
                Transform::Recolor(_) => prop_assert_eq!(moved.cells(), o.cells()),
                _ => prop_assert_eq!(moved.len(), o.len()),
            }
            prop_assert_eq!(out.foreground_count(), g.foreground_count() - o.len() + moved.len());
        }
    }

    #[test]
    fn reflection_is_an_involution((g, i) in grid_and_object(), vertical in any::<bool>()) {
        let t = Transform::Reflect(if vertical { Axis::Vertical } else { Axis::Horizontal });
        let o = &g.objects()[i];
        if let Ok((once, moved)) = t.apply_tracked(&g, o) {
            prop_assert_eq!(t.apply(&once, &moved).unwrap(), g);
        }
    }

    #[test]
    fn rotations_cancel_up_to_pivot_drift((g, i) in grid_and_object(), cw_first in any::<bool>()) {
        let o = &g.objects()[i];
        let (first, second) = if cw_first {
            (Sense::Clockwise, Sense::CounterClockwise)
        } else {
            (Sense::CounterClockwise, Sense::Clockwise)
        };
        let (r0, c0) = o.min_corner();
        let (r1, c1) = o.max_corner();
        if let Ok((once, moved)) = Transform::Rotate(first).apply_tracked(&g, o) {
            if let Ok((back, obj)) = Transform::Rotate(second).apply_tracked(&once, &moved) {
                // The pivot is re-taken after the first turn, so the object
                // comes back shifted up-left by its height (cw first) or width minus one.
                let k = if cw_first { (r1 - r0) as isize } else { (c1 - c0) as isize };
                                let want: Vec<_> = o.cells().iter().map(|&(r, c)| (r as isize - k, c as isize - k)).collect();
                let mut got: Vec<_> = obj.cells().iter().map(|&(r, c)| (r as isize, c as isize)).collect();
                let mut want = want;
                want.sort();
                got.sort();
                prop_assert_eq!(got, want);
                prop_assert_eq!(obj.shape(), o.shape());
                if k == 0 {
                    prop_assert_eq!(back, g);
                }
            }
        }
    }

    #[test]
    fn translations_cancel((g, i) in grid_and_object(), step in 1u8..3) {
        let o = &g.objects()[i];
        let right = Transform::Translate { dir: Direction::Right, step };
        let left = Transform::Translate { dir: Direction::Left, step };
        if let Ok((once, moved)) = right.apply_tracked(&g, o) {
            prop_assert_eq!(left.apply(&once, &moved).unwrap(), g);
        }
    }

    #[test]
    fn composite_failure_is_atomic((g, i) in grid_and_object(), a in any_transform(), b in any_transform()) {
        prop_assume!(a.family() != b.family());
        let o = &g.objects()[i];
        let c = Composite::new([a, b]).unwrap();
        prop_assert_eq!(c.is_valid(&g, o), c.apply(&g, o).is_ok());
    }

    #[test]
    fn array_text_round_trips(g in any_grid()) {
        let raw = format!("Here you go.\noutput: {}", g.to_array_string());
        prop_assert_eq!(parse_response(&raw).unwrap(), g);
    }

    #[test]
    fn compact_array_text_round_trips(g in any_grid()) {
        let raw = format!("output:{}", serde_json::to_string(&g.to_rows()).unwrap());
        prop_assert_eq!(parse_response(&raw).unwrap(), g);
    }
}

#[test]
fn color_change_keeps_structure() {
    let o = Object::new([(1, 1), (1, 2), (2, 2)], Color::new(5).unwrap()).unwrap();
    let g = Grid::empty().paint(&o).unwrap();
    let out = Transform::Recolor(Color::new(1).unwrap()).apply(&g, &o).unwrap();
    let objs = out.objects();
    assert_eq!(objs.len(), 1);
    assert_eq!(objs[0].shape(), o.shape());
    assert_eq!(objs[0].color.code(), 1);
}
