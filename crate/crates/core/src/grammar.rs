//! Visual interpretation grammars: which object attribute triggers which transformation.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::grid::{Color, Grid, Object, Shape};
use crate::shapes;
use crate::transforms::{apply_sequence, Composite, Family, Mode, Transform, TransformError};

/// The attribute an indicator looks at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Shape,
    Color,
    Neighbor,
}

impl Kind {
    pub const ALL: [Kind; 3] = [Kind::Shape, Kind::Color, Kind::Neighbor];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Shape => "shape",
            Kind::Color => "color",
            Kind::Neighbor => "neighbor",
        }
    }

    pub fn from_name(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An unordered set of three distinct families, stored sorted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet([Family; 3]);

impl Triplet {
    pub fn new(mut families: [Family; 3]) -> Option<Triplet> {
        families.sort();
        (families[0] != families[1] && families[1] != families[2]).then_some(Triplet(families))
    }

    /// All ten triplets in lexicographic order.
    pub fn all() -> Vec<Triplet> {
        let f = Family::ALL;
        let mut out = Vec::with_capacity(10);
        for a in 0..5 {
            for b in a + 1..5 {
                for c in b + 1..5 {
                    out.push(Triplet([f[a], f[b], f[c]]));
                }
            }
        }
        out
    }

    pub fn families(&self) -> [Family; 3] {
        self.0
    }

    pub fn contains(&self, f: Family) -> bool {
        self.0.contains(&f)
    }
}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}+{}", self.0[0], self.0[1], self.0[2])
    }
}

impl Serialize for Triplet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Triplet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let parts: Vec<Family> = s
            .split('+')
            .map(|p| Family::from_name(p).ok_or_else(|| serde::de::Error::custom(format!("unknown family {p}"))))
            .collect::<Result<_, _>>()?;
        let arr: [Family; 3] = parts
            .try_into()
            .map_err(|_| serde::de::Error::custom("triplet needs three families"))?;
        Triplet::new(arr).ok_or_else(|| serde::de::Error::custom("triplet families must be distinct"))
    }
}

/// The designated neighbor object whose presence triggers the neighbor transformation.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ObjectKey {
    pub shape: Shape,
    pub color: Color,
}

impl ObjectKey {
    pub fn of(obj: &Object) -> ObjectKey {
        ObjectKey { shape: obj.shape(), color: obj.color }
    }

    pub fn matches(&self, obj: &Object) -> bool {
        obj.color == self.color && obj.shape() == self.shape
    }
}

/// Per-kind transformation assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Assignment {
    pub shape: Transform,
    pub color: Transform,
    pub neighbor: Transform,
}

impl Assignment {
    pub fn get(&self, kind: Kind) -> Transform {
        match kind {
            Kind::Shape => self.shape,
            Kind::Color => self.color,
            Kind::Neighbor => self.neighbor,
        }
    }
}

/// Maps the shape key, the color key and the indicator object to three
/// transformations of distinct families.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VisualGrammar {
    pub shape_key: Shape,
    pub color_key: Color,
    pub indicator: ObjectKey,
    pub assignment: Assignment,
}

#[derive(Serialize, Deserialize)]
struct GrammarRecord {
    triplet: Triplet,
    shape_key: Shape,
    color_key: Color,
    indicator: ObjectKey,
    assignment: Assignment,
}

impl Serialize for VisualGrammar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        GrammarRecord {
            triplet: self.triplet(),
            shape_key: self.shape_key.clone(),
            color_key: self.color_key,
            indicator: self.indicator.clone(),
            assignment: self.assignment,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VisualGrammar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rec = GrammarRecord::deserialize(d)?;
        let g = VisualGrammar {
            shape_key: rec.shape_key,
            color_key: rec.color_key,
            indicator: rec.indicator,
            assignment: rec.assignment,
        };
        if !g.is_well_formed() {
            return Err(serde::de::Error::custom("grammar violates indicator or family constraints"));
        }
        if g.triplet() != rec.triplet {
            return Err(serde::de::Error::custom("triplet does not match assignment"));
        }
        Ok(g)
    }
}

impl VisualGrammar {
    pub fn transform(&self, kind: Kind) -> Transform {
        self.assignment.get(kind)
    }

    pub fn triplet(&self) -> Triplet {
        let a = &self.assignment;
        Triplet::new([a.shape.family(), a.color.family(), a.neighbor.family()])
            .expect("grammar families are distinct")
    }

    /// Distinct families, and the indicator object shares neither key.
    pub fn is_well_formed(&self) -> bool {
        let a = &self.assignment;
        let fams = [a.shape.family(), a.color.family(), a.neighbor.family()];
        fams[0] != fams[1]
            && fams[1] != fams[2]
            && fams[0] != fams[2]
            && self.indicator.shape != self.shape_key
            && self.indicator.color != self.color_key
    }

    /// The composite dictated by a set of active indicator kinds.
    pub fn composite(&self, kinds: &[Kind]) -> Option<Composite> {
        if kinds.is_empty() {
            return None;
        }
        Composite::new(kinds.iter().map(|&k| self.transform(k))).ok()
    }

    pub fn level2(&self) -> Composite {
        self.composite(&Kind::ALL).expect("three distinct families")
    }

    /// Indicator kinds that fire for `objs[target]` within the grid holding `objs`.
    pub fn active_kinds(&self, objs: &[Object], target: usize) -> Vec<Kind> {
        active_kinds_for(&self.shape_key, self.color_key, &self.indicator, objs, target)
    }

    /// Runs the grammar on a grid: every object with at least one active
    /// indicator receives its dictated composite. Objects are processed in
    /// extraction order.
    pub fn simulate(&self, grid: &Grid) -> Result<Grid, TransformError> {
        let objs = grid.objects();
        let mut out = *grid;
        for (i, obj) in objs.iter().enumerate() {
            let kinds = self.active_kinds(&objs, i);
            if let Some(c) = self.composite(&kinds) {
                out = c.apply(&out, obj)?;
            }
        }
        Ok(out)
    }

    /// Applies the transformations of `kinds` to `obj`, in the given order.
    pub fn apply_kinds_in_order(&self, grid: &Grid, obj: &Object, kinds: &[Kind]) -> Result<Grid, TransformError> {
        let parts: Vec<Transform> = kinds.iter().map(|&k| self.transform(k)).collect();
        apply_sequence(grid, obj, &parts).map(|(g, _)| g)
    }
}

pub(crate) fn active_kinds_for(
    shape_key: &Shape,
    color_key: Color,
    indicator: &ObjectKey,
    objs: &[Object],
    target: usize,
) -> Vec<Kind> {
    let obj = &objs[target];
    let mut kinds = Vec::with_capacity(3);
    if obj.shape() == *shape_key {
        kinds.push(Kind::Shape);
    }
    if obj.color == color_key {
        kinds.push(Kind::Color);
    }
    let neighbor_present = objs
        .iter()
        .enumerate()
        .any(|(i, o)| i != target && indicator.matches(o));
    if neighbor_present && !indicator.matches(obj) {
        kinds.push(Kind::Neighbor);
    }
    kinds
}

/// Draws a grammar: a uniform triplet, a uniform family-to-kind assignment,
/// uniform parameters, and keys from the shape library and color palette.
pub fn sample_grammar<R: Rng + ?Sized>(rng: &mut R, mode: Mode) -> VisualGrammar {
    let triplets = Triplet::all();
    let triplet = triplets[rng.gen_range(0..triplets.len())];
    sample_grammar_for(rng, mode, triplet)
}

/// Draws the remaining grammar choices for a fixed triplet.
pub fn sample_grammar_for<R: Rng + ?Sized>(rng: &mut R, mode: Mode, triplet: Triplet) -> VisualGrammar {
    let mut fams = triplet.families();
    fams.shuffle(rng);
    let lib = shapes::library();
    let pick = |rng: &mut R, f: Family| {
        let ps = mode.params(f);
        ps[rng.gen_range(0..ps.len())]
    };
    loop {
        let assignment = Assignment {
            shape: pick(rng, fams[0]),
            color: pick(rng, fams[1]),
            neighbor: pick(rng, fams[2]),
        };
        let shape_key = lib[rng.gen_range(0..lib.len())].clone();
        let color_key = random_color(rng);
        let indicator = loop {
            let shape = lib[rng.gen_range(0..lib.len())].clone();
            let color = random_color(rng);
            if shape != shape_key && color != color_key {
                break ObjectKey { shape, color };
            }
        };
        // A color-keyed recolor to the key color never changes anything.
        if assignment.color == Transform::Recolor(color_key) {
            continue;
        }
        return VisualGrammar { shape_key, color_key, indicator, assignment };
    }
}

pub(crate) fn random_color<R: Rng + ?Sized>(rng: &mut R) -> Color {
    Color::new(rng.gen_range(1..=9)).expect("1..=9 is a valid color")
}
