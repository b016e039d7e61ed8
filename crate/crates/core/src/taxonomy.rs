//! Classification of wrong predictions into error categories.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::episodes::{Episode, Tier};
use crate::grammar::{Kind, VisualGrammar};
use crate::grid::{Grid, Object};
use crate::metrics::{color_accuracy, shape_accuracy};

/// Error categories in decreasing priority.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCategory {
    Format,
    NoTransformation,
    Primitive(Kind),
    Level1(Kind, Kind),
    InvalidPosition,
    InvalidShape,
    Other,
}

impl ErrorCategory {
    pub fn all() -> Vec<ErrorCategory> {
        let mut all = vec![ErrorCategory::Format, ErrorCategory::NoTransformation];
        all.extend(Kind::ALL.map(ErrorCategory::Primitive));
        all.extend(Tier::level1_pairs().iter().filter_map(|t| match *t {
            Tier::Level1(a, b) => Some(ErrorCategory::Level1(a, b)),
            _ => None,
        }));
        all.extend([ErrorCategory::InvalidPosition, ErrorCategory::InvalidShape, ErrorCategory::Other]);
        all
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrorCategory::Format => f.write_str("format"),
            ErrorCategory::NoTransformation => f.write_str("no_transformation"),
            ErrorCategory::Primitive(k) => write!(f, "primitive:{k}"),
            ErrorCategory::Level1(a, b) => write!(f, "level1:{a}+{b}"),
            ErrorCategory::InvalidPosition => f.write_str("invalid_position"),
            ErrorCategory::InvalidShape => f.write_str("invalid_shape"),
            ErrorCategory::Other => f.write_str("other"),
        }
    }
}

impl std::str::FromStr for ErrorCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ErrorCategory::all()
            .into_iter()
            .find(|c| c.to_string() == s)
            .ok_or_else(|| format!("unknown error category {s:?}"))
    }
}

impl Serialize for ErrorCategory {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ErrorCategory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("prediction matches the target")]
    NotAnError,
    #[error("query index {0} out of range")]
    NoSuchQuery(usize),
}

/// The chosen category plus every partial-composition category the
/// prediction also matched.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Classification {
    pub category: ErrorCategory,
    pub partial_matches: Vec<ErrorCategory>,
}

/// The object the level-2 transformation acts on: the one carrying both keys.
pub fn query_target(grammar: &VisualGrammar, input: &Grid) -> Option<Object> {
    input.objects().into_iter().find(|o| o.shape() == grammar.shape_key && o.color == grammar.color_key)
}

/// Outputs of the partial compositions on `input`, labelled with their
/// category. Level-1 pairs are tried in both application orders.
pub fn partial_outputs(grammar: &VisualGrammar, input: &Grid) -> Vec<(ErrorCategory, Grid)> {
    let Some(target) = query_target(grammar, input) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for k in Kind::ALL {
        if let Ok(g) = grammar.apply_kinds_in_order(input, &target, &[k]) {
            out.push((ErrorCategory::Primitive(k), g));
        }
    }
    for tier in Tier::level1_pairs() {
        let Tier::Level1(a, b) = tier else { continue };
        for order in [[a, b], [b, a]] {
            if let Ok(g) = grammar.apply_kinds_in_order(input, &target, &order) {
                out.push((ErrorCategory::Level1(a, b), g));
            }
        }
    }
    out
}

/// Classifies a wrong prediction for query `query_index` of `ep`; `None`
/// stands for a response that is not a legal grid.
pub fn classify_error(ep: &Episode, query_index: usize, pred: Option<&Grid>) -> Result<Classification, ClassifyError> {
    let query = ep.queries.get(query_index).ok_or(ClassifyError::NoSuchQuery(query_index))?;
    let Some(pred) = pred else {
        return Ok(Classification { category: ErrorCategory::Format, partial_matches: Vec::new() });
    };
    if *pred == query.output {
        return Err(ClassifyError::NotAnError);
    }
    let mut partial_matches: Vec<ErrorCategory> = partial_outputs(&ep.grammar, &query.input)
        .into_iter()
        .filter(|(_, g)| g == pred)
        .map(|(c, _)| c)
        .collect();
    partial_matches.sort();
    partial_matches.dedup();
    let category = if *pred == query.input {
        ErrorCategory::NoTransformation
    } else if let Some(&first) = partial_matches.first() {
        first
    } else {
        let color = color_accuracy(pred, &query.output);
        let shape = shape_accuracy(pred, &query.output);
        match (color, shape) {
            (true, true) => ErrorCategory::InvalidPosition,
            (true, false) => ErrorCategory::InvalidShape,
            _ => ErrorCategory::Other,
        }
    };
    Ok(Classification { category, partial_matches })
}

/// Counts per category and their fractions of all errors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub total: usize,
    pub counts: BTreeMap<ErrorCategory, usize>,
}

impl ErrorTable {
    pub fn add(&mut self, c: ErrorCategory) {
        self.total += 1;
        *self.counts.entry(c).or_insert(0) += 1;
    }

    pub fn fractions(&self) -> BTreeMap<ErrorCategory, f64> {
        self.counts.iter().map(|(c, &n)| (*c, n as f64 / self.total as f64)).collect()
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<28}{:>8}{:>10}\n", "category", "count", "fraction");
        for (c, f) in self.fractions() {
            s.push_str(&format!("{:<28}{:>8}{:>9.2}%\n", c.to_string(), self.counts[&c], 100.0 * f));
        }
        s
    }
}

impl FromIterator<ErrorCategory> for ErrorTable {
    fn from_iter<I: IntoIterator<Item = ErrorCategory>>(iter: I) -> Self {
        let mut t = ErrorTable::default();
        for c in iter {
            t.add(c);
        }
        t
    }
}
