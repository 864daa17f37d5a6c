//! Top-level `theorem`/`lemma` declarations.

use super::lex::{identifiers, mask_non_code};

const MODIFIERS: &[&str] = &[
    "private",
    "protected",
    "noncomputable",
    "nonrec",
    "unsafe",
    "partial",
];

/// A top-level declaration found in Lean source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Declaration {
    pub keyword: String,
    pub name: String,
    /// Byte offset of `name` in the original source.
    pub name_offset: usize,
    /// 1-based line of the declaration keyword.
    pub line: usize,
}

/// Declarations introduced by `theorem`/`lemma` at column 0, in source order.
/// Comments and string literals are ignored.
pub fn declarations(code: &str) -> Vec<Declaration> {
    let masked = mask_non_code(code);
    let mut out = Vec::new();
    let mut line_start = 0usize;
    for (idx, line) in masked.split('\n').enumerate() {
        if let Some(decl) = declaration_on_line(line, line_start, idx + 1) {
            out.push(decl);
        }
        line_start += line.len() + 1;
    }
    out
}

fn declaration_on_line(line: &str, line_start: usize, line_no: usize) -> Option<Declaration> {
    if line.starts_with(char::is_whitespace) {
        return None;
    }
    let mut rest = line;
    let mut consumed = 0usize;
    // attributes such as `@[simp]`
    while rest.starts_with("@[") {
        let close = rest.find(']')?;
        let skip = close + 1;
        let trimmed = rest[skip..].trim_start();
        consumed += rest.len() - trimmed.len();
        rest = trimmed;
    }
    let mut tokens = identifiers(rest);
    let mut keyword = None;
    for (_, tok) in tokens.by_ref() {
        if MODIFIERS.contains(&tok) {
            continue;
        }
        if tok == "theorem" || tok == "lemma" {
            keyword = Some(tok);
        }
        break;
    }
    let keyword = keyword?;
    let (offset, name) = tokens.next()?;
    // the name must directly follow the keyword, separated by whitespace
    let kw_end = rest.find(keyword)? + keyword.len();
    if !rest[kw_end..offset].chars().all(char::is_whitespace) {
        return None;
    }
    Some(Declaration {
        keyword: keyword.to_string(),
        name: name.to_string(),
        name_offset: line_start + consumed + offset,
        line: line_no,
    })
}

/// Names following top-level `theorem`/`lemma` keywords, order-preserving.
pub fn declared_names(code: &str) -> Vec<String> {
    declarations(code).into_iter().map(|d| d.name).collect()
}

/// Renames the first top-level declaration called `old` to `new`. Returns
/// `None` when no such declaration exists.
pub fn rename_declaration(code: &str, old: &str, new: &str) -> Option<String> {
    let decl = declarations(code).into_iter().find(|d| d.name == old)?;
    let mut out = String::with_capacity(code.len() + new.len());
    out.push_str(&code[..decl.name_offset]);
    out.push_str(new);
    out.push_str(&code[decl.name_offset + old.len()..]);
    Some(out)
}

/// Drops top-level `import` lines; the composed unit header supplies imports
/// and Lean rejects imports after the first command.
pub fn strip_imports(code: &str) -> String {
    let kept: Vec<&str> = code
        .lines()
        .filter(|line| !(line.starts_with("import ") || *line == "import"))
        .collect();
    kept.join("\n").trim_matches('\n').to_string()
}
