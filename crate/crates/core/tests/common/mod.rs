//! Brute-force forward index used as the reference for query and chain tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use blockdex::{Index, IndexMode, PostingsCursor, ScoredDoc};

#[derive(Debug, Default, Clone)]
pub struct Oracle {
    /// Tokens of document `i + 1`.
    pub docs: Vec<Vec<String>>,
    /// Per term, occurrences in each document containing it.
    counts: HashMap<String, BTreeMap<u32, u32>>,
}

impl Oracle {
    pub fn add<T: AsRef<str>>(&mut self, tokens: &[T]) -> u32 {
        self.docs.push(tokens.iter().map(|t| t.as_ref().to_owned()).collect());
        let d = self.docs.len() as u32;
        for t in tokens {
            *self.counts.entry(t.as_ref().to_owned()).or_default().entry(d).or_default() += 1;
        }
        d
    }

    pub fn num_docs(&self) -> u32 {
        self.docs.len() as u32
    }

    fn count_in(&self, d: u32, term: &str) -> u32 {
        self.counts.get(term).and_then(|m| m.get(&d)).copied().unwrap_or(0)
    }

    /// `(d, f)` pairs of a term.
    pub fn doc_postings(&self, term: &str) -> Vec<(u32, u32)> {
        self.counts
            .get(term)
            .map(|m| m.iter().map(|(&d, &f)| (d, f)).collect())
            .unwrap_or_default()
    }

    /// `(d, w)` pairs of a term, positions from 1.
    pub fn word_postings(&self, term: &str) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (i, doc) in self.docs.iter().enumerate() {
            for (j, t) in doc.iter().enumerate() {
                if t == term {
                    out.push((i as u32 + 1, j as u32 + 1));
                }
            }
        }
        out
    }

    /// `word_postings` for every term in one pass.
    pub fn all_word_postings(&self) -> HashMap<String, Vec<(u32, u32)>> {
        let mut out: HashMap<String, Vec<(u32, u32)>> = HashMap::new();
        for (i, doc) in self.docs.iter().enumerate() {
            for (j, t) in doc.iter().enumerate() {
                out.entry(t.clone()).or_default().push((i as u32 + 1, j as u32 + 1));
            }
        }
        out
    }

    pub fn postings(&self, mode: IndexMode, term: &str) -> Vec<(u32, u32)> {
        match mode {
            IndexMode::Document => self.doc_postings(term),
            IndexMode::Word => self.word_postings(term),
        }
    }

    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.counts.keys().cloned().collect()
    }

    pub fn conjunction<T: AsRef<str>>(&self, terms: &[T]) -> Vec<u32> {
        if terms.is_empty() {
            return Vec::new();
        }
        let first = self.doc_postings(terms[0].as_ref());
        first
            .into_iter()
            .map(|(d, _)| d)
            .filter(|&d| terms.iter().all(|t| self.count_in(d, t.as_ref()) > 0))
            .collect()
    }

    /// Scores every document by summing `ln(1 + f_td) ln(1 + N / f_t)` over
    /// the distinct query terms, then sorts by score and document number.
    pub fn topk<T: AsRef<str>>(&self, terms: &[T], k: usize) -> Vec<(u32, f64)> {
        let distinct: BTreeSet<&str> = terms.iter().map(AsRef::as_ref).collect();
        let n = f64::from(self.num_docs());
        let mut scores: BTreeMap<u32, f64> = BTreeMap::new();
        for t in distinct {
            let ps = self.doc_postings(t);
            if ps.is_empty() {
                continue;
            }
            let idf = (1.0 + n / ps.len() as f64).ln();
            for (d, f) in ps {
                *scores.entry(d).or_default() += (1.0 + f64::from(f)).ln() * idf;
            }
        }
        let mut ranked: Vec<(u32, f64)> = scores.into_iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked.truncate(k);
        ranked
    }
}

/// Every posting of a term, decoded through a cursor.
pub fn decode(index: &Index, term: &str) -> Vec<(u32, u32)> {
    match PostingsCursor::open(index, term.as_bytes()) {
        None => Vec::new(),
        Some(c) => c.map(|p| p.map(|p| (p.doc, p.payload))).collect::<Result<_, _>>().unwrap(),
    }
}

/// Compares ranked lists: same documents in the same order, scores within
/// `rel_tol` relative error. Returns a description of the first mismatch.
pub fn compare_topk(got: &[ScoredDoc], want: &[(u32, f64)], rel_tol: f64) -> Result<(), String> {
    if got.len() != want.len() {
        return Err(format!("{} results, expected {}", got.len(), want.len()));
    }
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        let err = (g.score - w.1).abs() / w.1.abs().max(f64::MIN_POSITIVE);
        if g.doc != w.0 || err > rel_tol {
            return Err(format!("rank {i}: got ({}, {}), expected ({}, {})", g.doc, g.score, w.0, w.1));
        }
    }
    Ok(())
}
