//! Shared fixtures for the benchmarks under `benches/`.

use blockdex::synth::{self, CorpusSpec, SynthDoc};
use blockdex::{GrowthPolicy, Index, IndexConfig, IndexMode};

pub fn corpus(docs: usize) -> (CorpusSpec, Vec<SynthDoc>) {
    let spec = CorpusSpec {
        docs,
        ..CorpusSpec::default()
    };
    let docs = synth::generate(&spec);
    (spec, docs)
}

pub fn build(mode: IndexMode, policy: GrowthPolicy, docs: &[SynthDoc]) -> Index {
    let mut idx = Index::new(IndexConfig::new(mode, policy)).expect("valid config");
    for d in docs {
        idx.add_document(&d.docid, &d.tokens).expect("ingest");
    }
    idx
}

/// The three growth policies at base block size `b`.
pub fn policies(b: u32) -> [(&'static str, GrowthPolicy); 3] {
    [
        ("const", GrowthPolicy::constant(b).unwrap()),
        ("expon", GrowthPolicy::expon(b, 1.5).unwrap()),
        ("triangle", GrowthPolicy::triangle(b).unwrap()),
    ]
}
