//! Seeded synthetic corpora, query sets and workload scripts.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

/// Name of the term of frequency rank `rank` (from 1): `a`..`z`, `aa`, ...
pub fn term_name(rank: u32) -> String {
    assert!(rank > 0, "ranks start at 1");
    let mut n = rank;
    let mut out = Vec::new();
    while n > 0 {
        n -= 1;
        out.push(b'a' + (n % 26) as u8);
        n /= 26;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusSpec {
    pub docs: usize,
    pub vocab: u32,
    pub zipf_exponent: f64,
    /// Tokens per document, inclusive range.
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for CorpusSpec {
    /// About 200 distinct terms per document.
    fn default() -> Self {
        CorpusSpec {
            docs: 1000,
            vocab: 10_000,
            zipf_exponent: 1.0,
            min_len: 220,
            max_len: 420,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthDoc {
    pub docid: String,
    pub tokens: Vec<String>,
}

impl SynthDoc {
    pub fn docstream_line(&self) -> String {
        let mut line = self.docid.clone();
        for t in &self.tokens {
            line.push(' ');
            line.push_str(t);
        }
        line
    }
}

fn zipf_ranks(spec: &CorpusSpec) -> Zipf<f64> {
    Zipf::new(f64::from(spec.vocab), spec.zipf_exponent).expect("valid Zipf parameters")
}

/// Documents whose tokens are drawn independently from a Zipf law over
/// `vocab` term ranks.
pub fn generate(spec: &CorpusSpec) -> Vec<SynthDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let zipf = zipf_ranks(spec);
    (0..spec.docs)
        .map(|i| {
            let len = rng.random_range(spec.min_len..=spec.max_len);
            let tokens = (0..len).map(|_| term_name(zipf.sample(&mut rng) as u32)).collect();
            SynthDoc {
                docid: format!("SYN-{i:06}"),
                tokens,
            }
        })
        .collect()
}

/// Picks a query of 1 to `max_terms` terms: usually from one document so
/// conjunctions are not all empty, sometimes from the whole vocabulary.
fn pick_query(rng: &mut impl Rng, docs: &[SynthDoc], zipf: &Zipf<f64>, max_terms: usize) -> Vec<String> {
    let n = rng.random_range(1..=max_terms);
    let from_doc = !docs.is_empty() && rng.random_bool(0.7);
    let doc = docs.choose(rng);
    (0..n)
        .map(|_| match doc {
            Some(d) if from_doc && !d.tokens.is_empty() => d.tokens.choose(rng).unwrap().clone(),
            _ => term_name(zipf.sample(rng) as u32),
        })
        .collect()
}

/// `count` queries of up to four terms each.
pub fn random_queries(docs: &[SynthDoc], spec: &CorpusSpec, count: usize, seed: u64) -> Vec<Vec<String>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zipf = zipf_ranks(spec);
    (0..count).map(|_| pick_query(&mut rng, docs, &zipf, 4)).collect()
}

/// A script of `ops` lines interleaving `I` inserts of documents from a
/// corpus generated by `spec` with `Q conj` and `Q topk` queries. Half of
/// the queries draw from the most recent insert.
pub fn random_workload(spec: &CorpusSpec, ops: usize, seed: u64) -> Vec<String> {
    let docs = generate(&CorpusSpec {
        docs: ops,
        ..*spec
    });
    let zipf = zipf_ranks(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inserted = 0usize;
    let mut out = Vec::with_capacity(ops);
    for _ in 0..ops {
        if out.is_empty() || rng.random_bool(0.5) {
            out.push(format!("I {}", docs[inserted].docstream_line()));
            inserted += 1;
            continue;
        }
        let pool = if rng.random_bool(0.5) {
            &docs[inserted.saturating_sub(1)..inserted]
        } else {
            &docs[..inserted]
        };
        let op = if rng.random_bool(0.5) { "conj" } else { "topk" };
        let terms = pick_query(&mut rng, pool, &zipf, 3);
        out.push(format!("Q {op} {}", terms.join(" ")));
    }
    out
}
