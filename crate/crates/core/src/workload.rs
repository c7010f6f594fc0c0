//! Interleaved insert/query scripts.
//!
//! One operation per line:
//!
//! ```text
//! I <docid> <term> <term> ...
//! Q conj <term> ...
//! Q topk <term> ...
//! ```
//!
//! Each query sees every insert that precedes it. Blank lines and lines
//! starting with `#` are ignored.

use crate::error::{Error, Result};
use crate::index::Index;
use crate::normalize::parse_docstream_line;
use crate::query::{conjunction, topk_disjunctive, ScoredDoc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryKind {
    Conj,
    TopK,
}

impl QueryKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "conj" => Some(QueryKind::Conj),
            "topk" => Some(QueryKind::TopK),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            QueryKind::Conj => "conj",
            QueryKind::TopK => "topk",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Op<'a> {
    Insert { docid: &'a str, terms: Vec<&'a str> },
    Query { kind: QueryKind, terms: Vec<&'a str> },
}

pub fn parse_op(line: &str) -> Result<Option<Op<'_>>> {
    let line = line.trim_start();
    if line.is_empty() || line.starts_with('#') {
        return Ok(None);
    }
    let (tag, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
    match tag {
        "I" => {
            let doc = parse_docstream_line(rest).ok_or_else(|| Error::Script(format!("insert without docid: {line:?}")))?;
            Ok(Some(Op::Insert {
                docid: doc.docid,
                terms: doc.terms,
            }))
        }
        "Q" => {
            let mut fields = rest.split_ascii_whitespace();
            let kind = fields
                .next()
                .and_then(QueryKind::parse)
                .ok_or_else(|| Error::Script(format!("query needs conj or topk: {line:?}")))?;
            Ok(Some(Op::Query {
                kind,
                terms: fields.collect(),
            }))
        }
        _ => Err(Error::Script(format!("unknown operation {tag:?}"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Inserted(u32),
    Conj(Vec<u32>),
    TopK(Vec<ScoredDoc>),
}

/// Runs one script line. Top-k queries return `k` results.
pub fn execute(index: &mut Index, line: &str, k: usize) -> Result<Option<Outcome>> {
    Ok(match parse_op(line)? {
        None => None,
        Some(Op::Insert { docid, terms }) => Some(Outcome::Inserted(index.add_document(docid, &terms)?)),
        Some(Op::Query { kind: QueryKind::Conj, terms }) => Some(Outcome::Conj(conjunction(index, &terms)?)),
        Some(Op::Query { kind: QueryKind::TopK, terms }) => {
            Some(Outcome::TopK(topk_disjunctive(index, &terms, k)?))
        }
    })
}

/// Runs every line in order and returns the outcome of each operation.
pub fn run<S: AsRef<str>>(index: &mut Index, lines: impl IntoIterator<Item = S>, k: usize) -> Result<Vec<Outcome>> {
    let mut out = Vec::new();
    for line in lines {
        if let Some(o) = execute(index, line.as_ref(), k)? {
            out.push(o);
        }
    }
    Ok(out)
}
