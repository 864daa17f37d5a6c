//! Fenced Lean code blocks in model output.

use serde::{Deserialize, Serialize};

use super::decl::declared_names;
use super::ExtractionError;
use crate::verifier::detect_sorry;

/// Contents of one ```` ```lean ```` / ```` ```lean4 ```` fence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBlock {
    /// Position among the Lean blocks of the output, 0-based.
    pub index: usize,
    pub code: String,
    /// False when the output ended before the closing fence.
    pub terminated: bool,
}

/// The block chosen as a proof candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedProof {
    pub code: String,
    pub block_index: usize,
    /// The block declares the target and contains no `sorry`.
    pub complete: bool,
    pub declares_target: bool,
}

fn is_lean_tag(info: &str) -> bool {
    let tag = info.split_whitespace().next().unwrap_or("");
    tag.eq_ignore_ascii_case("lean") || tag.eq_ignore_ascii_case("lean4")
}

/// All Lean-tagged fenced blocks, in order. Fences with other tags are
/// skipped but still tracked so their contents are never misread.
pub fn extract_lean_blocks(model_output: &str) -> Vec<CodeBlock> {
    let mut blocks = Vec::new();
    let mut open: Option<(usize, bool, Vec<&str>)> = None;

    for line in model_output.lines() {
        let trimmed = line.trim_start();
        let ticks = trimmed.chars().take_while(|&c| c == '`').count();
        match open.as_mut() {
            None if ticks >= 3 => {
                let lean = is_lean_tag(&trimmed[ticks..]);
                open = Some((ticks, lean, Vec::new()));
            }
            None => {}
            Some((width, lean, lines)) => {
                if ticks >= *width && trimmed[ticks..].trim().is_empty() {
                    if *lean {
                        blocks.push(CodeBlock {
                            index: blocks.len(),
                            code: lines.join("\n"),
                            terminated: true,
                        });
                    }
                    open = None;
                } else {
                    lines.push(line);
                }
            }
        }
    }
    if let Some((_, true, lines)) = open {
        blocks.push(CodeBlock {
            index: blocks.len(),
            code: lines.join("\n"),
            terminated: false,
        });
    }
    blocks.retain(|b| !b.code.trim().is_empty());
    for (i, b) in blocks.iter_mut().enumerate() {
        b.index = i;
    }
    blocks
}

/// Chooses the last block declaring `target_name` without `sorry`; failing
/// that the last block declaring it; failing that the last block.
pub fn select_candidate(
    blocks: &[CodeBlock],
    target_name: &str,
) -> Result<ExtractedProof, ExtractionError> {
    let declares = |b: &CodeBlock| declared_names(&b.code).iter().any(|n| n == target_name);

    let chosen = blocks
        .iter()
        .rev()
        .find(|b| declares(b) && !detect_sorry(&b.code))
        .or_else(|| blocks.iter().rev().find(|b| declares(b)))
        .or_else(|| blocks.last())
        .ok_or(ExtractionError::NoBlocks)?;

    let declares_target = declares(chosen);
    Ok(ExtractedProof {
        code: chosen.code.clone(),
        block_index: chosen.index,
        complete: declares_target && !detect_sorry(&chosen.code),
        declares_target,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_fences_no_blocks() {
        assert!(extract_lean_blocks("just prose\nwith `inline` code").is_empty());
    }

    #[test]
    fn unterminated_fence_is_flagged() {
        let blocks = extract_lean_blocks("intro\n```lean4\ntheorem t : True := by\n  trivial");
        assert_eq!(blocks.len(), 1);
        assert!(!blocks[0].terminated);
        assert_eq!(blocks[0].code, "theorem t : True := by\n  trivial");
    }

    #[test]
    fn skips_other_languages_and_keeps_order() {
        let text = "```python\nprint('```lean4')\n```\n```lean\ntheorem a : True := trivial\n```\n```Lean4\ntheorem b : True := trivial\n```";
        let blocks = extract_lean_blocks(text);
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].code, "theorem a : True := trivial");
        assert_eq!(blocks[1].index, 1);
        assert!(blocks.iter().all(|b| b.terminated));
    }

    #[test]
    fn single_block_is_selected() {
        let blocks = extract_lean_blocks("```lean4\ntheorem t : 1 = 1 := rfl\n```");
        let c = select_candidate(&blocks, "t").unwrap();
        assert_eq!(c.block_index, 0);
        assert!(c.complete);
    }

    #[test]
    fn all_sorry_falls_back_to_last_declaring_block() {
        let text = "```lean4\ntheorem t : P := by sorry\n```\n```lean4\ntheorem t : P := by\n  have h : Q := by sorry\n  sorry\n```\n```lean4\n-- scratch\nexample : True := trivial\n```";
        let c = select_candidate(&extract_lean_blocks(text), "t").unwrap();
        assert_eq!(c.block_index, 1);
        assert!(c.declares_target);
        assert!(!c.complete);
    }

    #[test]
    fn no_declaring_block_takes_last() {
        let text = "```lean4\nexample : True := trivial\n```\n```lean4\nexample : 1 = 1 := rfl\n```";
        let c = select_candidate(&extract_lean_blocks(text), "t").unwrap();
        assert_eq!(c.block_index, 1);
        assert!(!c.declares_target);
        assert!(!c.complete);
    }

    #[test]
    fn empty_blocks_error() {
        assert_eq!(select_candidate(&[], "t"), Err(ExtractionError::NoBlocks));
    }

    #[test]
    fn later_sorry_block_loses_to_earlier_complete_one() {
        let text = "```lean4\ntheorem t : True := trivial\n```\n```lean4\ntheorem t : True := by sorry\n```";
        let c = select_candidate(&extract_lean_blocks(text), "t").unwrap();
        assert_eq!(c.block_index, 0);
        assert!(c.complete);
    }
}
