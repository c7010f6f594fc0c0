//! Text normalization and the docstream line format.

/// Longest token produced by [`normalize_text`].
pub const MAX_TOKEN_LEN: usize = 20;

/// Lowercases ASCII letters, treats every other byte as a separator, and
/// breaks runs of letters after each group of [`MAX_TOKEN_LEN`].
pub fn normalize_text(raw: &[u8]) -> Vec<String> {
    let mut out = Vec::new();
    let mut token = String::new();
    for &b in raw {
        if b.is_ascii_alphabetic() {
            token.push(b.to_ascii_lowercase() as char);
            if token.len() == MAX_TOKEN_LEN {
                out.push(std::mem::take(&mut token));
            }
        } else if !token.is_empty() {
            out.push(std::mem::take(&mut token));
        }
    }
    if !token.is_empty() {
        out.push(token);
    }
    out
}

/// One parsed docstream line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocLine<'a> {
    pub docid: &'a str,
    pub terms: Vec<&'a str>,
}

/// Splits a docstream line into its docid and terms. Blank lines give `None`.
pub fn parse_docstream_line(line: &str) -> Option<DocLine<'_>> {
    let mut fields = line.split_ascii_whitespace();
    let docid = fields.next()?;
    Some(DocLine {
        docid,
        terms: fields.collect(),
    })
}

/// Normalizes one raw corpus line (`docid text...`) into a docstream line.
pub fn normalize_line(line: &[u8]) -> Option<String> {
    let start = line.iter().position(|b| !b.is_ascii_whitespace())?;
    let rest = &line[start..];
    let end = rest.iter().position(|b| b.is_ascii_whitespace()).unwrap_or(rest.len());
    let mut out = String::from_utf8_lossy(&rest[..end]).into_owned();
    for token in normalize_text(&rest[end..]) {
        out.push(' ');
        out.push_str(&token);
    }
    Some(out)
}
