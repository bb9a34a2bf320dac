//! Single-line lexical scan for direct library references.

/// An identifier that is immediately followed by `.` or `(` and is not
/// itself an attribute (not preceded by `.`). String literals and comments
/// are skipped; a string left open at end of line swallows the rest.
pub(crate) fn call_like_identifiers(line: &str) -> Vec<&str> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut prev_significant: Option<u8> = None;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b'#' => break,
            b'\'' | b'"' => {
                i = skip_string(bytes, i);
                prev_significant = Some(b'"');
            }
            _ if is_ident_start(line, i) => {
                let start = i;
                i = ident_end(line, i);
                let ident = &line[start..i];
                if i < bytes.len() && (bytes[i] == b'\'' || bytes[i] == b'"') && is_string_prefix(ident) {
                    i = skip_string(bytes, i);
                    prev_significant = Some(b'"');
                    continue;
                }
                let next = bytes.get(i).copied();
                if prev_significant != Some(b'.') && matches!(next, Some(b'.') | Some(b'(')) {
                    out.push(ident);
                }
                prev_significant = Some(b'a');
            }
            _ if b.is_ascii_digit() => {
                // numeric literal, including forms like 1.5e3 and 0x1f
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'.') {
                    i += 1;
                }
                prev_significant = Some(b'0');
            }
            _ if b.is_ascii_whitespace() => i += 1,
            _ => {
                prev_significant = Some(b);
                i += 1;
            }
        }
    }
    out
}

fn is_ident_start(line: &str, i: usize) -> bool {
    let b = line.as_bytes()[i];
    if b == b'_' || b.is_ascii_alphabetic() {
        return true;
    }
    b >= 0x80 && line[i..].chars().next().is_some_and(char::is_alphabetic)
}

fn ident_end(line: &str, start: usize) -> usize {
    line[start..]
        .char_indices()
        .find(|&(_, c)| !(c == '_' || c.is_alphanumeric()))
        .map_or(line.len(), |(off, _)| start + off)
}

fn is_string_prefix(ident: &str) -> bool {
    ident.len() <= 2
        && ident
            .chars()
            .all(|c| matches!(c.to_ascii_lowercase(), 'r' | 'b' | 'u' | 'f'))
}

/// Returns the index just past the literal that opens at `start`.
fn skip_string(bytes: &[u8], start: usize) -> usize {
    let quote = bytes[start];
    let triple = bytes.len() >= start + 3 && bytes[start + 1] == quote && bytes[start + 2] == quote;
    let mut i = start + if triple { 3 } else { 1 };
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 2,
            q if q == quote => {
                if !triple {
                    return i + 1;
                }
                if bytes.len() >= i + 3 && bytes[i + 1] == quote && bytes[i + 2] == quote {
                    return i + 3;
                }
                i += 1;
            }
            _ => i += 1,
        }
    }
    bytes.len()
}
