//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::HashSet;
use std::fmt::Write as _;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blockdex::codec::{
    code_len, double_vbyte_decode, double_vbyte_encode, fold, vbyte_encode, ByteSink, ByteSource, FoldParam,
};
use blockdex::growth::{cycle_averages, optimal_block_size, overhead_trace, CycleAverage};
use blockdex::image::write_image;
use blockdex::metrics::space_report;
use blockdex::synth::{self, CorpusSpec, SynthDoc};
use blockdex::workload::{self, Op, Outcome, QueryKind};
use blockdex::{
    collate, conjunction, topk_disjunctive, GrowthPolicy, Index, IndexConfig, PostingsCursor,
};
use common::{compare_topk, decode, Oracle};

// Pinned limits and tolerances.
const CODEC_POINT_LIMIT: Duration = Duration::from_secs(1);
const GRID_LIMIT: Duration = Duration::from_secs(120);
const GRID_G_MAX: u32 = 100_000;
const GRID_F_MAX: u32 = 300;
const GRID_FOLDS: [u32; 6] = [1, 2, 3, 4, 8, 16];
const TRIANGLE_CYCLE_PERCENT: f64 = 0.898876;
const TRIANGLE_CYCLE_TOL: f64 = 0.01;
const TRIANGLE_CYCLE_BELOW: u64 = 50_000;
const ASYMPTOTIC_FROM: u64 = 10_000;
const ASYMPTOTIC_TO: u64 = 1_000_000;
const ASYMPTOTIC_LIMIT: Duration = Duration::from_secs(60);
/// Largest allowed spread of `ratio * sqrt(n)` for Triangle.
const ENVELOPE_SPREAD: f64 = 1.25;
/// Largest allowed spread of Const and Expon ratios once they plateau.
const PLATEAU_SPREAD: f64 = 1.05;
const ORACLE_QUERIES: usize = 200;
const ORACLE_TOPK: usize = 10;
const SCORE_REL_TOL: f64 = 1e-9;
const ORACLE_LIMIT: Duration = Duration::from_secs(120);
const SKIP_TERMS: usize = 50;
const SKIP_TARGETS: usize = 1000;
const WORKLOAD_OPS: usize = 10_000;
const CORPUS_SEED: u64 = 0x5eed;
const QUERY_SEED: u64 = 0xa11ce;

type Outcomes = Vec<String>;

fn corpus() -> Vec<SynthDoc> {
    synth::generate(&CorpusSpec {
        seed: CORPUS_SEED,
        ..CorpusSpec::default()
    })
}

fn build(config: IndexConfig, docs: &[SynthDoc]) -> Index {
    let mut idx = Index::new(config).unwrap();
    for d in docs {
        idx.add_document(&d.docid, &d.tokens).unwrap();
    }
    idx
}

fn oracle_of(docs: &[SynthDoc]) -> Oracle {
    let mut o = Oracle::default();
    for d in docs {
        o.add(&d.tokens);
    }
    o
}

fn oracle_policies() -> Vec<(String, GrowthPolicy)> {
    let mut out = Vec::new();
    for b in [48, 64] {
        out.push((format!("const_{b}"), GrowthPolicy::constant(b).unwrap()));
        out.push((format!("expon_{b}_1.5"), GrowthPolicy::expon(b, 1.5).unwrap()));
        out.push((format!("triangle_{b}"), GrowthPolicy::triangle(b).unwrap()));
    }
    out
}

/// Query results rendered exactly, score bits included.
fn render(idx: &Index, queries: &[Vec<String>]) -> Outcomes {
    queries
        .iter()
        .map(|q| {
            let mut s = format!("{:?}|", conjunction(idx, q).unwrap());
            for r in topk_disjunctive(idx, q, ORACLE_TOPK).unwrap() {
                write!(s, "{}:{:016x},", r.doc, r.score.to_bits()).unwrap();
            }
            s
        })
        .collect()
}

/// Checks and the state later criteria reuse.
#[derive(Default)]
struct Shared {
    /// Per policy: index and its rendered query outcomes.
    oracle_runs: Vec<(String, Index, Outcomes)>,
    queries: Vec<Vec<String>>,
}

fn c1_codec_points() -> Result<String, String> {
    let t = Instant::now();
    let mut buf = [0u8; 10];
    let n = vbyte_encode(12345, &mut ByteSink::new(&mut buf)).unwrap();
    if buf[..n] != [0x39, 0xE0] {
        return Err(format!("encode(12345) = {:02x?}", &buf[..n]));
    }
    let f4 = FoldParam::new(4).unwrap();
    for (g, f, want) in [(10, 3, 1), (40, 3, 2), (40, 5, 3)] {
        let len = fold(g, f, f4).unwrap().len();
        let n = double_vbyte_encode(g, f, f4, &mut ByteSink::new(&mut buf)).unwrap();
        let back = double_vbyte_decode(&mut ByteSource::new(&buf[..n]), f4).unwrap();
        if len != want || n != want || code_len(g, f, f4) != want || back != Some((g, f)) {
            return Err(format!("({g},{f}) gave {n} bytes, expected {want}"));
        }
    }
    let elapsed = t.elapsed();
    if elapsed > CODEC_POINT_LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    Ok("12345 -> 39 e0; (10,3) 1 B, (40,3) 2 B, (40,5) 3 B".into())
}

fn c2_codec_grid() -> Result<String, String> {
    let t = Instant::now();
    let mut buf = [0u8; 16];
    let mut plain = [0u8; 16];
    let mut checked = 0u64;
    for big_f in GRID_FOLDS {
        let fp = FoldParam::new(big_f).unwrap();
        for g in 1..=GRID_G_MAX {
            for f in 1..=GRID_F_MAX {
                let n = double_vbyte_encode(g, f, fp, &mut ByteSink::new(&mut buf)).unwrap();
                let mut src = ByteSource::new(&buf[..n]);
                if double_vbyte_decode(&mut src, fp).unwrap() != Some((g, f)) || src.position() != n {
                    return Err(format!("F={big_f}: ({g},{f}) does not roundtrip"));
                }
                if big_f == 1 {
                    let mut sink = ByteSink::new(&mut plain);
                    vbyte_encode(g, &mut sink).unwrap();
                    vbyte_encode(f, &mut sink).unwrap();
                    let m = sink.position();
                    if buf[..n] != plain[..m] {
                        return Err(format!("F=1 ({g},{f}) differs from paired VByte"));
                    }
                }
                checked += 1;
            }
        }
    }
    let elapsed = t.elapsed();
    if elapsed > GRID_LIMIT {
        return Err(format!("{checked} pairs took {elapsed:?}"));
    }
    Ok(format!("{checked} pairs in {:.1} s", elapsed.as_secs_f64()))
}

fn c3_growth_sequences() -> Result<String, String> {
    let expon: Vec<u32> = GrowthPolicy::expon(16, 1.5).unwrap().schedule().take(9).collect();
    let tri: Vec<u32> = GrowthPolicy::triangle(16).unwrap().schedule().take(9).collect();
    if expon != [16, 16, 16, 32, 48, 64, 96, 144, 208] {
        return Err(format!("expon {expon:?}"));
    }
    if tri != [16, 16, 32, 32, 32, 48, 48, 48, 48] {
        return Err(format!("triangle {tri:?}"));
    }
    Ok(format!("expon {expon:?}, triangle {tri:?}"))
}

fn sim(policy: GrowthPolicy, n_max: u64) -> Vec<CycleAverage> {
    cycle_averages(&overhead_trace(&policy.with_link_bytes(1).unwrap().uncapped(), n_max))
}

fn c4_triangle_optimum() -> Result<String, String> {
    let opt = optimal_block_size(4, 20_000);
    if opt != 400.0 {
        return Err(format!("sqrt(2hn) = {opt}"));
    }
    let last = *overhead_trace(&GrowthPolicy::constant(400).unwrap(), 20_000).last().unwrap();
    let links = u64::from(last.blocks) * 4;
    let unused = last.overhead - links;
    if (last.blocks, links, unused, last.overhead) != (51, 204, 196, 400) {
        return Err(format!("{last:?}"));
    }
    let cycles = sim(GrowthPolicy::triangle(16).unwrap(), TRIANGLE_CYCLE_BELOW);
    let c = cycles
        .iter()
        .rev()
        .find(|c| c.last_n < TRIANGLE_CYCLE_BELOW)
        .ok_or("no complete cycle")?;
    let pct = 100.0 * c.ratio();
    if (pct - TRIANGLE_CYCLE_PERCENT).abs() > TRIANGLE_CYCLE_TOL {
        return Err(format!("cycle {}..{} ratio {pct:.6}%", c.first_n, c.last_n));
    }
    Ok(format!(
        "51 blocks, 204 link + 196 unused = 400; cycle {}..{} averages {pct:.6}%",
        c.first_n, c.last_n
    ))
}

/// Ratio of the cycle containing `n`.
fn ratio_at(cycles: &[CycleAverage], n: u64) -> Option<f64> {
    let i = cycles.partition_point(|c| c.last_n < n);
    cycles.get(i).filter(|c| c.first_n <= n).map(CycleAverage::ratio)
}

fn c5_asymptotic_ordering() -> Result<String, String> {
    let t = Instant::now();
    let tri = sim(GrowthPolicy::triangle(16).unwrap(), ASYMPTOTIC_TO);
    let exp = sim(GrowthPolicy::expon(16, 1.1).unwrap(), ASYMPTOTIC_TO);
    let con = sim(GrowthPolicy::constant(16).unwrap(), ASYMPTOTIC_TO);
    let tail = |c: &[CycleAverage], from: u64| c.iter().filter(|c| c.first_n >= from).copied().collect::<Vec<_>>();

    let mut points: Vec<u64> = [&tri, &exp, &con]
        .iter()
        .flat_map(|cs| cs.iter().flat_map(|c| [c.first_n, c.last_n]))
        .filter(|&n| n >= ASYMPTOTIC_FROM)
        .collect();
    points.sort_unstable();
    points.dedup();
    let mut compared = 0;
    for &n in &points {
        let (Some(t), Some(e), Some(c)) = (ratio_at(&tri, n), ratio_at(&exp, n), ratio_at(&con, n)) else {
            continue;
        };
        if !(t < e && t < c) {
            return Err(format!("n = {n}: triangle {t}, expon {e}, const {c}"));
        }
        compared += 1;
    }

    let tri_tail = tail(&tri, ASYMPTOTIC_FROM);
    let env: Vec<f64> = tri_tail.iter().map(|c| c.ratio() * c.mean_n.sqrt()).collect();
    let (lo, hi) = env.iter().fold((f64::MAX, 0f64), |(l, h), &v| (l.min(v), h.max(v)));
    if hi / lo > ENVELOPE_SPREAD {
        return Err(format!("triangle ratio*sqrt(n) spans {lo:.3}..{hi:.3}"));
    }
    let decade_max = |a: u64, b: u64| {
        tri_tail
            .iter()
            .filter(|c| c.first_n >= a && c.first_n < b)
            .map(CycleAverage::ratio)
            .fold(0f64, f64::max)
    };
    let (d1, d2) = (decade_max(10_000, 100_000), decade_max(100_000, 1_000_000));
    if d2 >= d1 {
        return Err(format!("triangle decade maxima {d1} then {d2}"));
    }

    let plateau = |name: &str, cs: &[CycleAverage]| -> Result<f64, String> {
        let rs: Vec<f64> = tail(cs, ASYMPTOTIC_TO / 10).iter().map(CycleAverage::ratio).collect();
        let (lo, hi) = rs.iter().fold((f64::MAX, 0f64), |(l, h), &v| (l.min(v), h.max(v)));
        if rs.is_empty() || hi / lo > PLATEAU_SPREAD {
            return Err(format!("{name} ratios span {lo}..{hi}"));
        }
        Ok((lo + hi) / 2.0)
    };
    let pe = plateau("expon", &exp)?;
    let pc = plateau("const", &con)?;
    let elapsed = t.elapsed();
    if elapsed > ASYMPTOTIC_LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    Ok(format!(
        "{compared} points ordered; triangle {:.3}% -> {:.3}% (ratio*sqrt(n) in {lo:.2}..{hi:.2}); expon ~{:.2}%, const ~{:.2}%",
        100.0 * tri_tail[0].ratio(),
        100.0 * tri_tail.last().unwrap().ratio(),
        100.0 * pe,
        100.0 * pc
    ))
}

fn c6_oracle_equivalence(shared: &mut Shared) -> Result<String, String> {
    let t = Instant::now();
    let docs = corpus();
    let oracle = oracle_of(&docs);
    let queries = synth::random_queries(&docs, &CorpusSpec::default(), ORACLE_QUERIES, QUERY_SEED);
    let mut nonempty = 0;
    for (name, policy) in oracle_policies() {
        let idx = build(IndexConfig::document(policy), &docs);
        for q in &queries {
            let got = conjunction(&idx, q).map_err(|e| e.to_string())?;
            if got != oracle.conjunction(q) {
                return Err(format!("{name}: conjunction of {q:?}"));
            }
            nonempty += usize::from(!got.is_empty());
            let top = topk_disjunctive(&idx, q, ORACLE_TOPK).map_err(|e| e.to_string())?;
            compare_topk(&top, &oracle.topk(q, ORACLE_TOPK), SCORE_REL_TOL).map_err(|e| format!("{name} {q:?}: {e}"))?;
        }
        let rendered = render(&idx, &queries);
        shared.oracle_runs.push((name, idx, rendered));
    }
    shared.queries = queries;
    let elapsed = t.elapsed();
    if elapsed > ORACLE_LIMIT {
        return Err(format!("took {elapsed:?}"));
    }
    let distinct: usize = docs
        .iter()
        .map(|d| d.tokens.iter().collect::<HashSet<_>>().len())
        .sum::<usize>()
        / docs.len();
    Ok(format!(
        "{} docs (~{distinct} distinct terms each), {ORACLE_QUERIES} queries x 6 configs, {} non-empty conjunctions, {:.1} s",
        docs.len(),
        nonempty / 6,
        elapsed.as_secs_f64()
    ))
}

fn c7_skip_equivalence() -> Result<String, String> {
    let docs = corpus();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut seeks = 0;
    let configs = [
        IndexConfig::document(GrowthPolicy::constant(64).unwrap()),
        IndexConfig::word(GrowthPolicy::triangle(48).unwrap()),
    ];
    for config in configs {
        let idx = build(config, &docs);
        let n = idx.num_docs();
        // Terms spread across the frequency range.
        let mut vocab: Vec<(u32, String)> = idx
            .terms()
            .map(|(t, h)| (idx.head(h).ft(), String::from_utf8(t.to_vec()).unwrap()))
            .collect();
        vocab.sort();
        let step = vocab.len() / SKIP_TERMS;
        let terms: Vec<&String> = (0..SKIP_TERMS).map(|i| &vocab[vocab.len() - 1 - i * step].1).collect();
        for term in terms {
            let all = decode(&idx, term);
            let mut targets: Vec<u32> = (0..SKIP_TARGETS).map(|_| rng.random_range(0..=n + 1)).collect();
            for &target in &targets {
                let want = all.iter().find(|p| p.0 >= target).copied();
                let mut c = PostingsCursor::open(&idx, term.as_bytes()).unwrap();
                let got = c.seek_geq(target).map_err(|e| e.to_string())?.map(|p| (p.doc, p.payload));
                if got != want {
                    return Err(format!("{term} target {target}: {got:?} vs {want:?}"));
                }
            }
            targets.sort_unstable();
            let mut c = PostingsCursor::open(&idx, term.as_bytes()).unwrap();
            for &target in &targets {
                let want = all.iter().find(|p| p.0 >= target).copied();
                let got = c.seek_geq(target).map_err(|e| e.to_string())?.map(|p| (p.doc, p.payload));
                if got != want {
                    return Err(format!("{term} ascending target {target}: {got:?} vs {want:?}"));
                }
            }
            seeks += 2 * SKIP_TARGETS;
        }
    }
    Ok(format!("{seeks} seeks over {SKIP_TERMS} terms at document and word level"))
}

fn c8_immediate_access() -> Result<String, String> {
    let spec = CorpusSpec {
        vocab: 2000,
        min_len: 1,
        max_len: 40,
        ..CorpusSpec::default()
    };
    let script = synth::random_workload(&spec, WORKLOAD_OPS, 8);
    let mut idx = Index::new(IndexConfig::document(GrowthPolicy::constant(64).unwrap())).unwrap();
    let mut oracle = Oracle::default();
    let (mut queries, mut right_after, mut prev_insert) = (0, 0, false);
    for line in &script {
        let op = workload::parse_op(line).map_err(|e| e.to_string())?.ok_or("blank line")?;
        let out = workload::execute(&mut idx, line, ORACLE_TOPK).map_err(|e| e.to_string())?;
        match (op, out) {
            (Op::Insert { terms, .. }, Some(Outcome::Inserted(d))) => {
                if oracle.add(&terms) != d {
                    return Err(format!("document number {d} out of step"));
                }
                prev_insert = true;
                continue;
            }
            (Op::Query { kind: QueryKind::Conj, terms }, Some(Outcome::Conj(got))) => {
                if got != oracle.conjunction(&terms) {
                    return Err(format!("{line:?}: {got:?}"));
                }
            }
            (Op::Query { kind: QueryKind::TopK, terms }, Some(Outcome::TopK(got))) => {
                compare_topk(&got, &oracle.topk(&terms, ORACLE_TOPK), SCORE_REL_TOL)
                    .map_err(|e| format!("{line:?}: {e}"))?;
            }
            (_, o) => return Err(format!("{line:?} gave {o:?}")),
        }
        queries += 1;
        right_after += usize::from(prev_insert);
        prev_insert = false;
    }
    Ok(format!(
        "{} ops: {} inserts, {queries} queries ({right_after} directly after an insert) match",
        script.len(),
        oracle.num_docs()
    ))
}

fn c9_collation(shared: &mut Shared) -> Result<String, String> {
    if shared.oracle_runs.is_empty() {
        return Err("criterion 6 produced no indexes".into());
    }
    for (name, idx, before) in &mut shared.oracle_runs {
        collate(idx).map_err(|e| e.to_string())?;
        if render(idx, &shared.queries) != *before {
            return Err(format!("{name}: results changed by collation"));
        }
        let mut once = Vec::new();
        write_image(idx, &mut once).map_err(|e| e.to_string())?;
        collate(idx).map_err(|e| e.to_string())?;
        let mut twice = Vec::new();
        write_image(idx, &mut twice).map_err(|e| e.to_string())?;
        if once != twice {
            return Err(format!("{name}: second collation changed the image"));
        }
    }
    Ok(format!(
        "{} indexes: identical results after collation, collation idempotent",
        shared.oracle_runs.len()
    ))
}

fn c10_space(shared: &Shared) -> Result<String, String> {
    let docs = corpus();
    let word = build(IndexConfig::word(GrowthPolicy::triangle(48).unwrap()), &docs);
    let mut checked = 0;
    for idx in shared.oracle_runs.iter().map(|(_, i, _)| i).chain([&word]) {
        let r = space_report(idx).map_err(|e| e.to_string())?;
        let want = idx.arena().nblocks() * u64::from(idx.config().block_size()) + 8 * idx.num_terms() as u64;
        if r.category_sum() != want || r.total_bytes != want {
            return Err(format!("categories sum to {} not {want}", r.category_sum()));
        }
        checked += 1;
    }
    let policy = GrowthPolicy::constant(64).unwrap();
    let f4 = space_report(&build(IndexConfig::document(policy), &docs)).unwrap();
    let f1 = space_report(&build(
        IndexConfig::document(policy).with_fold(FoldParam::new(1).unwrap()),
        &docs,
    ))
    .unwrap();
    if f4.bytes_per_posting >= f1.bytes_per_posting {
        return Err(format!(
            "F=4 {:.4} B/posting is not below F=1 {:.4}",
            f4.bytes_per_posting, f1.bytes_per_posting
        ));
    }
    Ok(format!(
        "{checked} indexes reconcile; bytes/posting F=4 {:.4} < F=1 {:.4}",
        f4.bytes_per_posting, f1.bytes_per_posting
    ))
}

fn c11_word_roundtrip() -> Result<String, String> {
    let docs = corpus();
    let oracle = oracle_of(&docs);
    let want = oracle.all_word_postings();
    let (mut multi, mut spanning) = (0u64, 0u64);
    for policy in [
        GrowthPolicy::constant(48).unwrap(),
        GrowthPolicy::expon(64, 1.5).unwrap(),
        GrowthPolicy::triangle(48).unwrap(),
    ] {
        let idx = build(IndexConfig::word(policy), &docs);
        if idx.num_terms() != want.len() {
            return Err(format!("{} terms, expected {}", idx.num_terms(), want.len()));
        }
        for (term, expected) in &want {
            let mut c = PostingsCursor::open(&idx, term.as_bytes()).ok_or(format!("{term} missing"))?;
            let mut got = Vec::with_capacity(expected.len());
            let mut last: Option<(u32, u32)> = None;
            while let Some(p) = c.next_posting().map_err(|e| e.to_string())? {
                if let Some((d, block)) = last {
                    multi += u64::from(d == p.doc);
                    spanning += u64::from(d == p.doc && block != c.block());
                }
                last = Some((p.doc, c.block()));
                got.push((p.doc, p.payload));
            }
            if &got != expected {
                return Err(format!("{} term {term}: chain differs", policy.kind().name()));
            }
        }
    }
    if multi == 0 || spanning == 0 {
        return Err(format!("corpus lacks coverage: {multi} repeats, {spanning} cross-block"));
    }
    Ok(format!(
        "{} terms x 3 policies; {multi} same-document repeats, {spanning} across block boundaries",
        want.len()
    ))
}

fn run(id: u32, name: &str, f: impl FnOnce() -> Result<String, String>) -> bool {
    let t = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into()))
    });
    let secs = t.elapsed().as_secs_f64();
    match outcome {
        Ok(detail) => {
            println!("PASS {id:>2} {name} [{secs:.1}s]: {detail}");
            true
        }
        Err(why) => {
            println!("FAIL {id:>2} {name} [{secs:.1}s]: {why}");
            false
        }
    }
}

fn main() {
    // Listing or filtered runs from `cargo test` arguments are not supported;
    // the suite always runs in full.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut shared = Shared::default();
    let results = [
        run(1, "codec point checks", c1_codec_points),
        run(2, "codec exhaustive roundtrip", c2_codec_grid),
        run(3, "growth sequences", c3_growth_sequences),
        run(4, "triangle optimum", c4_triangle_optimum),
        run(5, "asymptotic ordering", c5_asymptotic_ordering),
        run(6, "oracle equivalence", || c6_oracle_equivalence(&mut shared)),
        run(7, "skip equivalence", c7_skip_equivalence),
        run(8, "immediate access", c8_immediate_access),
        run(9, "collation preservation", || c9_collation(&mut shared)),
        run(10, "space reconciliation", || c10_space(&shared)),
        run(11, "word-level roundtrip", c11_word_roundtrip),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
