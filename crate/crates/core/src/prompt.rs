//! Text prompts for language models and parsing of their replies.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::episodes::{Episode, Setup};
use crate::grid::{Grid, GridError};

/// Whether the prompt is accompanied by a rendered image of the episode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    #[default]
    TextOnly,
    TextImage,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PromptOptions {
    pub mode: PromptMode,
    /// Adds the extra instruction against writing code.
    pub no_code_line: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub episode_id: String,
    pub query_index: usize,
    pub setup: Setup,
    pub mode: PromptMode,
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub episode_id: String,
    pub query_index: usize,
    pub raw: String,
}

const TASK_DESCRIPTION: &str = "### Task Description:\n\
You must solve an abstract visual reasoning task by identifying geometric transformations (e.g., rotation, translation, color changes, etc.) applied to objects within a 10x10 grid.\n\n";

const PAIR_PARTS: &str = "- An **input grid**: a 10x10 list of lists (2d array), where each element is an integer (0-9).\n\
- A corresponding **output grid**: a 10x10 list of lists (2d array) that has undergone a transformation based on a specific geometric rule.\n\n";

const FEW_SHOT_HINT: &str =
    "For the prediction you need to understand the transformations displayed in the provided examples and apply them to the final input grid.\n\n";

const SYSTEMATIC_HINT: &str = "The first 6 example pairs demonstrate primitive transformations based on the object's color, shape, or the presence of an additional object. For instance, objects of a certain color within the 10x10 input grid might undergo a translation, while objects of a certain shape (distinct numerical pattern) are being rotated.\n\n\
The latter 6 example pairs involve **composite transformations**, meaning multiple transformations are applied simultaneously. For instance, for objects that have the appropriate color **and** shape, both a translation and rotation are applied simultaneously.\n\n\
For the final prediction you need to understand and further combine the transformations displayed in the provided examples and apply them to the final input grid.\n\n";

const OUTPUT_REQUIREMENTS: &str = "### Output Requirements:\n\
- **Return only the final output grid.**\n\
- Do not include any extra text, explanations, or comments.\n\
- The output must be formatted exactly as: `output: [[...]]`\n\
- The output grid must be a 10x10 list of lists containing only integers between 0 and 9 (inclusive).\n\
- Do not include unnecessary line breaks or additional text beyond the specified format.\n";

pub const NO_CODE_LINE: &str = "- Do not generate any code to solve the task\n";

/// Builds the prompt for one query of an episode.
pub fn build_prompt(ep: &Episode, query_index: usize, opts: PromptOptions) -> String {
    let n = ep.study.len();
    let (noun, hint, identify) = match ep.setup {
        Setup::ThreeShot => ("few-shot example", FEW_SHOT_HINT, "are applied"),
        Setup::Systematicity => ("study example", SYSTEMATIC_HINT, "might combine"),
    };
    let mut p = String::new();
    p.push_str(TASK_DESCRIPTION);
    p.push_str(&format!(
        "To infer the correct geometric transformation, you are given a series of **{n} pairs of input-output examples**. Each example pair consists of:\n"
    ));
    p.push_str(PAIR_PARTS);
    p.push_str(hint);
    p.push_str("### Your Task:\n");
    p.push_str("1. **Analyze** the example pairs to infer the transformation rules applied to each input grid.\n");
    p.push_str(&format!("2. **Identify** how these transformations {identify} to generate the output grids.\n"));
    p.push_str("3. **Apply** the deduced transformations to the final input grid.\n");
    p.push_str("4. **Output** the correctly transformed 10x10 grid.\n\n");
    p.push_str(OUTPUT_REQUIREMENTS);
    if opts.no_code_line {
        p.push_str(NO_CODE_LINE);
    }
    p.push('\n');
    p.push_str("### Input Format:\nYou will receive the following data:\n");
    p.push_str(&format!(
        "1. **Study examples:** A list of {n} {noun} pairs, formatted as:\n\
`example input 1: [[...]], example output 1: [[...]], ..., example input {n}: [[...]], example output {n}: [[...]]`\n"
    ));
    p.push_str("2. **Final input:** A single 10x10 list of lists on which you must apply the inferred transformation(s).\n");
    if opts.mode == PromptMode::TextImage {
        p.push_str(&format!(
            "3. **Image input:** Additionally, you receive an image that visualizes the {n} {noun} pairs and the final input query.\n"
        ));
    }
    p.push('\n');
    p.push_str("Your goal is to determine the correct transformation and return the final output grid.\n\n");
    p.push_str("### Input:\nStudy examples:\n");
    for (i, s) in ep.study.iter().enumerate() {
        p.push_str(&format!("example input {}: {}\n", i + 1, s.input.to_array_string()));
        p.push_str(&format!("example output {}: {}\n", i + 1, s.output.to_array_string()));
    }
    p.push('\n');
    p.push_str(&format!("Final input: {}\n", ep.queries[query_index].input.to_array_string()));
    p
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseFailure {
    #[error("no `output:` followed by a 2-dimensional array")]
    NoOutput,
    #[error("array is not a list of integer lists: {0}")]
    Malformed(String),
    #[error(transparent)]
    Invalid(#[from] GridError),
}

fn output_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"output:\s*(\[\s*\[[^\[\]]*\](?:\s*,\s*\[[^\[\]]*\])*\s*\])").expect("valid pattern")
    })
}

/// Extracts the last `output:`-anchored 2-dimensional array and checks it
/// is a 10x10 grid of values 0-9.
pub fn parse_response(raw: &str) -> Result<Grid, ParseFailure> {
    let cap = output_pattern().captures_iter(raw).last().ok_or(ParseFailure::NoOutput)?;
    let body = cap.get(1).expect("group 1 always participates").as_str();
    let rows: Vec<Vec<i64>> = serde_json::from_str(body).map_err(|e| ParseFailure::Malformed(e.to_string()))?;
    Ok(Grid::from_rows(&rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::episodes::{generate_dataset, GenConfig};

    fn episode(setup: Setup) -> Episode {
        let cfg = GenConfig { setup, ..GenConfig::default() };
        generate_dataset(3, 1, &cfg).unwrap().remove(0)
    }

    #[test]
    fn systematicity_prompt_structure() {
        let ep = episode(Setup::Systematicity);
        let p = build_prompt(&ep, 0, PromptOptions::default());
        assert!(p.contains("A list of 12 study example pairs"));
        assert!(p.contains("### Output Requirements:"));
        assert!(p.contains("`output: [[...]]`"));
        assert!(p.contains("example output 12: [["));
        assert!(!p.contains("example input 13:"));
        assert!(!p.contains("Image input"));
        assert!(!p.contains(NO_CODE_LINE));
    }

    #[test]
    fn three_shot_prompt_structure() {
        let ep = episode(Setup::ThreeShot);
        let p = build_prompt(&ep, 2, PromptOptions { mode: PromptMode::TextImage, no_code_line: true });
        assert!(p.contains("A list of 3 few-shot example pairs"));
        assert_eq!(p.matches("\nexample input ").count(), 3);
        assert!(p.contains("visualizes the 3 few-shot example pairs"));
        assert!(p.contains(NO_CODE_LINE));
        assert!(p.ends_with(&format!("Final input: {}\n", ep.queries[2].input.to_array_string())));
    }

    #[test]
    fn parses_last_output_block() {
        let g = episode(Setup::ThreeShot).queries[0].output;
        let raw = format!("output: {}\nhmm, actually\noutput: {}", Grid::empty().to_array_string(), g.to_array_string());
        assert_eq!(parse_response(&raw).unwrap(), g);
        let multiline = format!("```\noutput: {}\n```", g.to_array_string().replace("], ", "],\n "));
        assert_eq!(parse_response(&multiline).unwrap(), g);
    }

    #[test]
    fn rejects_malformed_replies() {
        assert_eq!(parse_response("the answer is [[0]]"), Err(ParseFailure::NoOutput));
        let nine_rows = format!("output: [{}]", ["[0, 0, 0, 0, 0, 0, 0, 0, 0, 0]"; 9].join(", "));
        assert!(matches!(parse_response(&nine_rows), Err(ParseFailure::Invalid(_))));
        let big = Grid::empty().to_array_string().replacen('0', "12", 1);
        assert!(parse_response(&format!("output: {big}")).is_err());
        assert!(parse_response("output: [[1, x]]").is_err());
    }
}
