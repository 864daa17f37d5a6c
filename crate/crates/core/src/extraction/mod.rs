//! Structured artifacts from free-form model output.

mod blocks;
mod decl;
pub mod lex;
mod lemmas;
mod names;

pub use blocks::{extract_lean_blocks, select_candidate, CodeBlock, ExtractedProof};
pub use decl::{declarations, declared_names, rename_declaration, strip_imports, Declaration};
pub use lemmas::{parse_informal_lemmas, render_informal_lemmas, InformalLemma};
pub use names::{sanitize_name, to_identifier, NameRegistry, SanitizeConfig};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractionError {
    #[error("model output contains no Lean code block")]
    NoBlocks,
}
