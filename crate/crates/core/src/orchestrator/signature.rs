//! Guards against a proof that quietly changes the statement it proves.

use crate::extraction::{declarations, lex};

/// Text of the declaration `name` from its keyword up to the first `:=`,
/// with comments removed and whitespace collapsed.
pub fn signature(code: &str, name: &str) -> Option<String> {
    let masked = lex::mask_non_code(code);
    let decl = declarations(code).into_iter().find(|d| d.name == name)?;
    let start = masked[..decl.name_offset].rfind('\n').map_or(0, |i| i + 1);
    let end = decl.name_offset + masked[decl.name_offset..].find(":=")?;
    Some(masked[start..end].split_whitespace().collect::<Vec<_>>().join(" "))
}

/// Whether `candidate` declares `name` with the same signature as
/// `statement`. Declaration modifiers and the `theorem`/`lemma` keyword
/// are ignored.
pub fn same_statement(statement: &str, candidate: &str, name: &str) -> bool {
    let strip = |sig: String| -> String {
        let at = sig.find(&format!(" {name}")).map_or(0, |i| i + 1);
        sig[at..].to_string()
    };
    match (signature(statement, name), signature(candidate, name)) {
        (Some(a), Some(b)) => strip(a) == strip(b),
        _ => false,
    }
}
