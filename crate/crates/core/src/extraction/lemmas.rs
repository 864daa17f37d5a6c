//! Informal lemma lists in the markdown shape the lemma-generation prompt
//! asks for:
//!
//! ```text
//! ### Lemma 1: base_case_3
//! **Assumptions**:
//! None
//!
//! **Conclusion**:
//! 3! < 3^(3-1)
//! ```

use std::fmt::Write as _;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::names::to_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InformalLemma {
    pub ordinal: u32,
    pub name: String,
    /// Assumption lines; empty when the model wrote `None`.
    pub assumptions: Vec<String>,
    pub conclusion: String,
}

impl InformalLemma {
    /// Assumptions as one text, `None` when there are none.
    pub fn assumptions_text(&self) -> String {
        if self.assumptions.is_empty() {
            "None".to_string()
        } else {
            self.assumptions.join("\n")
        }
    }
}

static HEADING: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*#{2,4}\s*Lemma\s+(\d+)\s*:\s*(.*?)\s*$").unwrap());
static ASSUMPTIONS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\*\*Assumptions?\*\*\s*:?\s*(.*?)\s*$").unwrap());
static CONCLUSION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*\*\*Conclusions?\*\*\s*:?\s*(.*?)\s*$").unwrap());

enum Section {
    None,
    Assumptions,
    Conclusion,
}

struct Draft {
    ordinal: Option<u32>,
    raw_name: String,
    assumptions: Option<Vec<String>>,
    conclusion: Option<Vec<String>>,
    section: Section,
    // a blank line closes the section's paragraph
    closed: bool,
}

impl Draft {
    fn finish(self) -> Option<InformalLemma> {
        let ordinal = self.ordinal.filter(|&k| k > 0);
        let name = to_identifier(self.raw_name.trim_matches('`'));
        let conclusion = self.conclusion.map(|c| c.join("\n")).unwrap_or_default();
        let (Some(ordinal), false, false) = (ordinal, name.is_empty(), conclusion.is_empty()) else {
            tracing::warn!(heading = %self.raw_name, "skipping malformed lemma block");
            return None;
        };
        let mut assumptions = self.assumptions.unwrap_or_default();
        if assumptions.len() == 1 && assumptions[0].trim().eq_ignore_ascii_case("none") {
            assumptions.clear();
        }
        Some(InformalLemma {
            ordinal,
            name,
            assumptions,
            conclusion,
        })
    }
}

/// Parses `### Lemma <k>: <name>` blocks in order, keeping at most
/// `max_lemmas`. Blocks without a conclusion are skipped with a warning.
pub fn parse_informal_lemmas(text: &str, max_lemmas: usize) -> Vec<InformalLemma> {
    let mut lemmas = Vec::new();
    let mut current: Option<Draft> = None;
    let mut in_fence = false;

    for line in text.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            if let Some(d) = current.as_mut() {
                d.section = Section::None;
            }
            continue;
        }
        if in_fence {
            continue;
        }
        if let Some(caps) = HEADING.captures(line) {
            if let Some(done) = current.take().and_then(Draft::finish) {
                lemmas.push(done);
            }
            current = Some(Draft {
                ordinal: caps[1].parse().ok(),
                raw_name: caps[2].to_string(),
                assumptions: None,
                conclusion: None,
                section: Section::None,
                closed: false,
            });
            continue;
        }
        let Some(draft) = current.as_mut() else { continue };
        if line.trim_start().starts_with('#') {
            // any other heading ends the lemma block
            if let Some(done) = current.take().and_then(Draft::finish) {
                lemmas.push(done);
            }
            continue;
        }
        if let Some(caps) = ASSUMPTIONS.captures(line) {
            draft.section = Section::Assumptions;
            draft.closed = false;
            let inline = caps[1].to_string();
            draft.assumptions = Some(if inline.is_empty() { vec![] } else { vec![inline] });
            continue;
        }
        if let Some(caps) = CONCLUSION.captures(line) {
            draft.section = Section::Conclusion;
            draft.closed = false;
            let inline = caps[1].to_string();
            draft.conclusion = Some(if inline.is_empty() { vec![] } else { vec![inline] });
            continue;
        }
        let target = match draft.section {
            Section::Assumptions => draft.assumptions.as_mut(),
            Section::Conclusion => draft.conclusion.as_mut(),
            Section::None => None,
        };
        let Some(lines) = target else { continue };
        if line.trim().is_empty() {
            if !lines.is_empty() {
                draft.closed = true;
            }
        } else if !draft.closed {
            lines.push(line.trim_end().to_string());
        }
    }
    if let Some(done) = current.and_then(Draft::finish) {
        lemmas.push(done);
    }
    lemmas.truncate(max_lemmas);
    lemmas
}

/// Renders lemmas in the exact markdown shape [`parse_informal_lemmas`]
/// reads, blocks separated by a blank line.
pub fn render_informal_lemmas(lemmas: &[InformalLemma]) -> String {
    let mut out = String::new();
    for (i, lemma) in lemmas.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = write!(
            out,
            "### Lemma {}: {}\n**Assumptions**:\n{}\n\n**Conclusion**:\n{}\n",
            lemma.ordinal,
            lemma.name,
            lemma.assumptions_text(),
            lemma.conclusion
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn none_assumptions_are_empty() {
        let text = "### Lemma 1: base_case_3\n**Assumptions**:\nNone\n\n**Conclusion**:\n3! < 3^(3-1)\n";
        let lemmas = parse_informal_lemmas(text, 3);
        assert_eq!(lemmas.len(), 1);
        assert!(lemmas[0].assumptions.is_empty());
        assert_eq!(lemmas[0].conclusion, "3! < 3^(3-1)");
        assert_eq!(lemmas[0].ordinal, 1);
    }

    #[test]
    fn heading_without_conclusion_is_skipped() {
        let text = "### Lemma 1: broken\n**Assumptions**:\nx > 0\n\n### Lemma 2: fine\n**Assumptions**:\nNone\n\n**Conclusion**:\n1 < 2\n";
        let lemmas = parse_informal_lemmas(text, 3);
        assert_eq!(lemmas.len(), 1);
        assert_eq!(lemmas[0].name, "fine");
    }

    #[test]
    fn cap_applies_after_skipping() {
        let mut text = String::new();
        for k in 1..=5 {
            text.push_str(&format!(
                "### Lemma {k}: l{k}\n**Assumptions**:\nNone\n\n**Conclusion**:\nP{k}\n\n"
            ));
        }
        let lemmas = parse_informal_lemmas(&text, 3);
        let names: Vec<_> = lemmas.iter().map(|l| l.name.as_str()).collect();
        assert_eq!(names, ["l1", "l2", "l3"]);
    }

    #[test]
    fn code_between_blocks_does_not_leak() {
        let text = "### Lemma 1: a\n**Assumptions**:\nNone\n\n**Conclusion**:\nx = x\n\n```lean4\ntheorem a : True := trivial\n```\n";
        let lemmas = parse_informal_lemmas(text, 3);
        assert_eq!(lemmas[0].conclusion, "x = x");
    }

    #[test]
    fn render_matches_block_shape() {
        let lemma = InformalLemma {
            ordinal: 2,
            name: "exponent_inequality".into(),
            assumptions: vec!["n is a natural number and n ≥ 2".into()],
            conclusion: "n^(n-1) < (n+1)^(n-1)".into(),
        };
        assert_eq!(
            render_informal_lemmas(&[lemma]),
            "### Lemma 2: exponent_inequality\n**Assumptions**:\nn is a natural number and n ≥ 2\n\n**Conclusion**:\nn^(n-1) < (n+1)^(n-1)\n"
        );
    }
}
