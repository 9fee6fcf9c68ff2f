//! Exemplar-seeded prompt rendering and validation.

use std::fmt::Write as _;

use crate::icl::corpus::{CorpusEntry, IclConfig};

/// Marker appended to solutions cut at `max_solution_chars`.
pub const TRUNCATION_MARKER: &str = "…[truncated]";

const TASK_BLOCK: &str = "<task>\n  You are given several worked examples, each with a\n  <problem> and a <solution>. Extract a general strategy,\n  then think through the new problem, and finally provide\n  the detailed solution.\n</task>";

/// Render the seeded prompt for `problem` with the given exemplars.
///
/// With no exemplars this returns the raw problem unchanged (zero-shot
/// fallback). Otherwise it emits the fixed skeleton: a `<task>` block,
/// an `<examples>` block holding one `<example id="i">` per exemplar
/// (ids start at 1) with `<problem>` and `<solution>` children, then the
/// target wrapped in `<new_problem>`. Exemplar solutions longer than
/// `max_solution_chars` characters are truncated with a fixed marker.
pub fn build_icl_prompt(problem: &str, exemplars: &[&CorpusEntry], cfg: &IclConfig) -> String {
    if exemplars.is_empty() {
        return problem.to_string();
    }
    let mut out = String::new();
    out.push_str(TASK_BLOCK);
    out.push_str("\n\n<examples>\n");
    for (i, ex) in exemplars.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let solution = truncate_chars(&ex.solution_text, cfg.max_solution_chars);
        let _ = write!(
            out,
            "  <example id=\"{}\">\n    <problem>{}</problem>\n    <solution>{}</solution>\n  </example>\n",
            i + 1,
            ex.problem_text,
            solution
        );
    }
    out.push_str("</examples>\n\n<new_problem>");
    out.push_str(problem);
    out.push_str("</new_problem>");
    out
}

fn truncate_chars(s: &str, max_chars: usize) -> String {
    match s.char_indices().nth(max_chars) {
        None => s.to_string(),
        Some((byte_idx, _)) => {
            let mut t = s[..byte_idx].to_string();
            t.push_str(TRUNCATION_MARKER);
            t
        }
    }
}

/// A seeded prompt decomposed back into its parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedIclPrompt {
    /// (problem, solution) pairs in exemplar order.
    pub exemplars: Vec<(String, String)>,
    pub new_problem: String,
}

/// Parse a prompt produced by [`build_icl_prompt`].
///
/// Text without the skeleton parses as a zero-exemplar prompt whose
/// `new_problem` is the whole input. Returns `None` when the skeleton is
/// present but malformed.
pub fn parse_icl_prompt(text: &str) -> Option<ParsedIclPrompt> {
    if !text.starts_with("<task>") {
        return Some(ParsedIclPrompt {
            exemplars: Vec::new(),
            new_problem: text.to_string(),
        });
    }
    let examples_body = slice_between(text, "<examples>\n", "</examples>")?;
    let mut exemplars = Vec::new();
    let mut rest = examples_body;
    while let Some(start) = rest.find("<example id=\"") {
        let after = &rest[start..];
        let end = after.find("</example>")?;
        let block = &after[..end];
        let problem = slice_between(block, "<problem>", "</problem>")?;
        let solution = slice_between(block, "<solution>", "</solution>")?;
        exemplars.push((problem.to_string(), solution.to_string()));
        rest = &after[end + "</example>".len()..];
    }
    if exemplars.is_empty() {
        return None;
    }
    let new_problem = slice_between(text, "<new_problem>", "</new_problem>")?;
    Some(ParsedIclPrompt {
        exemplars,
        new_problem: new_problem.to_string(),
    })
}

fn slice_between<'a>(text: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = text.find(open)? + open.len();
    let end = text[start..].rfind(close)? + start;
    Some(&text[start..end])
}
