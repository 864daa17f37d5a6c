//! Minimal Lean lexing: enough to tell code from comments and string
//! literals, and to split code into identifier tokens.

/// Returns `source` with comment and string-literal contents replaced by
/// spaces. Newlines are kept so line and column positions are preserved.
///
/// Handles `--` line comments, nested `/- ... -/` block comments (including
/// doc comments) and `"..."` strings with backslash escapes.
pub fn mask_non_code(source: &str) -> String {
    let chars: Vec<char> = source.chars().collect();
    let mut out = String::with_capacity(source.len());
    let mut i = 0;
    let blank = |c: char| if c == '\n' { '\n' } else { ' ' };

    while i < chars.len() {
        let c = chars[i];
        let next = chars.get(i + 1).copied();
        if c == '-' && next == Some('-') {
            while i < chars.len() && chars[i] != '\n' {
                out.push(' ');
                i += 1;
            }
        } else if c == '/' && next == Some('-') {
            let mut depth = 0usize;
            while i < chars.len() {
                let here = chars[i];
                let after = chars.get(i + 1).copied();
                if here == '/' && after == Some('-') {
                    depth += 1;
                    out.push_str("  ");
                    i += 2;
                } else if here == '-' && after == Some('/') {
                    depth -= 1;
                    out.push_str("  ");
                    i += 2;
                    if depth == 0 {
                        break;
                    }
                } else {
                    out.push(blank(here));
                    i += 1;
                }
            }
        } else if c == '"' {
            out.push(' ');
            i += 1;
            while i < chars.len() {
                let here = chars[i];
                if here == '\\' && i + 1 < chars.len() {
                    out.push(' ');
                    out.push(blank(chars[i + 1]));
                    i += 2;
                    continue;
                }
                out.push(blank(here));
                i += 1;
                if here == '"' {
                    break;
                }
            }
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}

pub(crate) fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

pub(crate) fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '\'' | '!' | '?' | '.')
}

/// Identifier-like tokens of already-masked code, with their byte offsets.
pub(crate) fn identifiers(masked: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut iter = masked.char_indices().peekable();
    std::iter::from_fn(move || {
        while let Some((start, c)) = iter.next() {
            if is_ident_start(c) {
                let mut end = start + c.len_utf8();
                while let Some(&(pos, next)) = iter.peek() {
                    if is_ident_continue(next) {
                        end = pos + next.len_utf8();
                        iter.next();
                    } else {
                        break;
                    }
                }
                return Some((start, &masked[start..end]));
            } else if c.is_alphanumeric() {
                // numeric literal such as `3tfm`; skip its tail so it does
                // not start a token mid-way
                while let Some(&(_, next)) = iter.peek() {
                    if is_ident_continue(next) {
                        iter.next();
                    } else {
                        break;
                    }
                }
            }
        }
        None
    })
}
