//! ASCII and SVG pictures of grids and episodes.

use std::fmt::Write;

use crate::episodes::Episode;
use crate::grid::{Grid, GRID_SIZE};

const GLYPHS: [char; 10] = ['.', '1', '2', '3', '4', '5', '6', '7', '8', '9'];

/// Fill colors indexed by cell value; 0 is the background.
pub const PALETTE: [&str; 10] = [
    "#000000", "#e53935", "#fb8c00", "#fdd835", "#43a047", "#1e88e5", "#8e24aa", "#f06292", "#00bcd4", "#9e9e9e",
];

/// One line per row, `.` for background and the color code otherwise.
pub fn ascii(grid: &Grid) -> String {
    let mut s = String::with_capacity(GRID_SIZE * (GRID_SIZE + 1));
    for row in grid.rows() {
        s.extend(row.iter().map(|&v| GLYPHS[v as usize]));
        s.push('\n');
    }
    s
}

/// Study pairs as `input -> output` blocks, then the query input.
pub fn ascii_episode(ep: &Episode, query_index: usize) -> String {
    let mut s = String::new();
    for (i, pair) in ep.study.iter().enumerate() {
        let _ = writeln!(s, "study {} ({})", i + 1, pair.tier);
        for (a, b) in ascii(&pair.input).lines().zip(ascii(&pair.output).lines()) {
            let _ = writeln!(s, "{a}   {b}");
        }
        s.push('\n');
    }
    let _ = writeln!(s, "query {}", query_index + 1);
    s.push_str(&ascii(&ep.queries[query_index].input));
    s
}

const CELL: usize = 12;
const GAP: usize = 24;
const LABEL: usize = 16;

fn grid_svg(out: &mut String, grid: &Grid, x: usize, y: usize, class: &str) {
    let _ = writeln!(out, r#"<g class="{class}" transform="translate({x},{y})">"#);
    for (r, row) in grid.rows().iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}" stroke="#555555" stroke-width="0.5"/>"##,
                c * CELL,
                r * CELL,
                PALETTE[v as usize]
            );
        }
    }
    out.push_str("</g>\n");
}

fn svg_document(width: usize, height: usize, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
<rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n{body}</svg>\n"
    )
}

pub fn svg(grid: &Grid) -> String {
    let mut body = String::new();
    grid_svg(&mut body, grid, 0, 0, "grid");
    svg_document(GRID_SIZE * CELL, GRID_SIZE * CELL, &body)
}

/// Study pairs laid out three per row, each as input then output, followed
/// by the query input next to an empty answer slot.
pub fn svg_episode(ep: &Episode, query_index: usize) -> String {
    let side = GRID_SIZE * CELL;
    let pair_w = 2 * side + GAP;
    let per_row = 3;
    let pair_rows = ep.study.len().div_ceil(per_row);
    let width = per_row * pair_w + (per_row - 1) * 2 * GAP;
    let row_h = side + LABEL + GAP;
    let height = (pair_rows + 1) * row_h;
    let mut body = String::new();
    for (i, pair) in ep.study.iter().enumerate() {
        let x = (i % per_row) * (pair_w + 2 * GAP);
        let y = (i / per_row) * row_h;
        let _ = writeln!(body, r#"<text x="{x}" y="{}" font-size="11" font-family="sans-serif">Example {}</text>"#, y + 11, i + 1);
        grid_svg(&mut body, &pair.input, x, y + LABEL, "grid input");
        grid_svg(&mut body, &pair.output, x + side + GAP, y + LABEL, "grid output");
    }
    let y = pair_rows * row_h;
    let _ = writeln!(body, r#"<text x="0" y="{}" font-size="11" font-family="sans-serif">Query</text>"#, y + 11);
    grid_svg(&mut body, &ep.queries[query_index].input, 0, y + LABEL, "grid input query");
    let _ = writeln!(
        body,
        r##"<rect x="{}" y="{}" width="{side}" height="{side}" fill="#ffffff" stroke="#555555" stroke-dasharray="4 3"/>"##,
        side + GAP,
        y + LABEL
    );
    let _ = writeln!(
        body,
        r#"<text x="{}" y="{}" font-size="28" font-family="sans-serif" text-anchor="middle">?</text>"#,
        side + GAP + side / 2,
        y + LABEL + side / 2 + 10
    );
    svg_document(width, height, &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episodes::{generate_dataset, GenConfig, Setup};

    #[test]
    fn empty_grid_is_all_background() {
        let s = ascii(&Grid::empty());
        assert_eq!(s.lines().count(), 10);
        assert!(s.lines().all(|l| l == ".........."));
    }

    #[test]
    fn ascii_is_lossless() {
        let ep = generate_dataset(9, 1, &GenConfig::default()).unwrap().remove(0);
        for s in &ep.study {
            let back: Vec<Vec<i64>> = ascii(&s.input)
                .lines()
                .map(|l| l.chars().map(|c| GLYPHS.iter().position(|&g| g == c).unwrap() as i64).collect())
                .collect();
            assert_eq!(Grid::from_rows(&back).unwrap(), s.input);
        }
    }

    #[test]
    fn episode_svg_has_all_inputs() {
        let ep = generate_dataset(9, 1, &GenConfig::default()).unwrap().remove(0);
        let s = svg_episode(&ep, 0);
        assert_eq!(s.matches(r#"class="grid input"#).count(), 13);
        assert_eq!(s.matches(r#"class="grid output"#).count(), 12);
        let three = GenConfig { setup: Setup::ThreeShot, ..GenConfig::default() };
        let ep = generate_dataset(9, 1, &three).unwrap().remove(0);
        assert_eq!(svg_episode(&ep, 0).matches(r#"class="grid input"#).count(), 4);
    }
}
