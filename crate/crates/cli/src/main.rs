use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use blockdex::codec::FoldParam;
use blockdex::normalize::normalize_line;
use blockdex::synth::{self, CorpusSpec};
use blockdex::workload::{self, Outcome};
use blockdex::{
    collate, collate_staged, conjunction, posting_size_histogram, space_report, topk_disjunctive, GrowthPolicy, Index,
    IndexConfig, IndexMode, ScoredDoc,
};

#[derive(Parser)]
#[command(name = "blockdex", version, about = "Build and query immediate-access block-based inverted indexes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn raw `docid text...` lines into a docstream.
    Normalize { input: PathBuf, output: PathBuf },
    /// Build an index from a docstream and write its image.
    Index {
        docstream: PathBuf,
        #[command(flatten)]
        build: BuildArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a query file against an image.
    Query {
        image: PathBuf,
        queries: PathBuf,
        #[arg(long, value_enum, default_value_t = Op::Conj)]
        op: Op,
        /// Results per top-k query.
        #[arg(long, default_value_t = 10)]
        k: usize,
    },
    /// Run an interleaved insert/query script.
    Workload {
        script: PathBuf,
        /// Start from this image instead of an empty index.
        #[arg(long)]
        image: Option<PathBuf>,
        #[command(flatten)]
        build: BuildArgs,
        /// Results per top-k query.
        #[arg(long = "top", default_value_t = 10)]
        top: usize,
        /// Save the final index here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite an image so every chain is contiguous.
    Collate {
        image: PathBuf,
        /// Write the collated image here and reload it.
        #[arg(long)]
        staging: Option<PathBuf>,
        /// Destination image (defaults to rewriting in place).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a JSON space report.
    Stats {
        image: PathBuf,
        /// Include the posting-size histogram.
        #[arg(long)]
        histogram: bool,
    },
    /// Write a synthetic Zipfian docstream (and optionally a query file).
    Gen {
        #[arg(long, default_value_t = 1000)]
        docs: usize,
        #[arg(long, default_value_t = 10_000)]
        vocab: u32,
        #[arg(long, default_value_t = 1.0)]
        zipf: f64,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Number of random queries to write to `--queries-out`.
        #[arg(long, default_value_t = 0)]
        queries: usize,
        #[arg(long, requires = "queries")]
        queries_out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct BuildArgs {
    #[arg(long, value_enum, default_value_t = Mode::Document)]
    mode: Mode,
    #[arg(long, default_value_t = 64)]
    block_size: u32,
    #[arg(long, value_enum, default_value_t = Growth::Const)]
    growth: Growth,
    /// Expon growth factor.
    #[arg(long, default_value_t = 1.5)]
    k: f64,
    /// Double-VByte fold (4 for document level, 3 for word level).
    #[arg(long = "F")]
    fold: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Document,
    Word,
}

#[derive(Clone, Copy, ValueEnum)]
enum Growth {
    Const,
    Expon,
    Triangle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Op {
    Conj,
    Topk,
}

impl BuildArgs {
    fn config(&self) -> Result<IndexConfig> {
        let policy = match self.growth {
            Growth::Const => GrowthPolicy::constant(self.block_size),
            Growth::Expon => GrowthPolicy::expon(self.block_size, self.k),
            Growth::Triangle => GrowthPolicy::triangle(self.block_size),
        }?;
        let mode = match self.mode {
            Mode::Document => IndexMode::Document,
            Mode::Word => IndexMode::Word,
        };
        let mut config = IndexConfig::new(mode, policy);
        if let Some(f) = self.fold {
            config = config.with_fold(FoldParam::new(f).context("--F must be at least 1")?);
        }
        Ok(config)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn load(path: &Path) -> Result<Index> {
    blockdex::load(path).with_context(|| format!("cannot load image {}", path.display()))
}

fn normalize(input: &Path, output: &Path) -> Result<()> {
    let mut r = open(input)?;
    let mut w = create(output)?;
    let mut line = Vec::new();
    while r.read_until(b'\n', &mut line)? > 0 {
        if let Some(doc) = normalize_line(&line) {
            writeln!(w, "{doc}")?;
        }
        line.clear();
    }
    w.flush()?;
    Ok(())
}

fn build(docstream: &Path, args: &BuildArgs, out: &Path) -> Result<()> {
    let mut index = Index::new(args.config()?)?;
    let start = Instant::now();
    for (i, line) in open(docstream)?.lines().enumerate() {
        let line = line?;
        index
            .add_docstream_line(&line)
            .with_context(|| format!("{}:{}", docstream.display(), i + 1))?;
    }
    let secs = start.elapsed().as_secs_f64();
    blockdex::save(&index, out).with_context(|| format!("cannot write {}", out.display()))?;
    let report = space_report(&index)?;
    eprintln!(
        "docs {}\tpostings {}\tseconds {:.3}\tbytes/posting {:.4}",
        index.num_docs(),
        index.num_postings(),
        secs,
        report.bytes_per_posting
    );
    Ok(())
}

fn docid(index: &Index, doc: u32) -> &str {
    index.docid(doc).unwrap_or("?")
}

fn print_conj(w: &mut impl Write, qi: usize, index: &Index, docs: &[u32]) -> io::Result<()> {
    for &d in docs {
        writeln!(w, "{qi}\t{}", docid(index, d))?;
    }
    Ok(())
}

fn print_topk(w: &mut impl Write, qi: usize, index: &Index, docs: &[ScoredDoc]) -> io::Result<()> {
    for s in docs {
        writeln!(w, "{qi}\t{}\t{}", docid(index, s.doc), s.score)?;
    }
    Ok(())
}

/// Mean and 95th percentile in milliseconds.
fn latency_summary(times: &mut [Duration]) -> (f64, f64) {
    if times.is_empty() {
        return (0.0, 0.0);
    }
    times.sort_unstable();
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    let mean = times.iter().map(|&d| ms(d)).sum::<f64>() / times.len() as f64;
    let rank = ((0.95 * times.len() as f64).ceil() as usize).clamp(1, times.len());
    (mean, ms(times[rank - 1]))
}

fn query(image: &Path, queries: &Path, op: Op, k: usize) -> Result<()> {
    if k == 0 {
        bail!("--k must be at least 1");
    }
    let index = load(image)?;
    let stdout = io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    let mut times = Vec::new();
    for (qi, line) in open(queries)?.lines().enumerate() {
        let line = line?;
        let terms: Vec<&str> = line.split_ascii_whitespace().collect();
        if terms.is_empty() {
            continue;
        }
        let start = Instant::now();
        match op {
            Op::Conj => {
                let docs = conjunction(&index, &terms)?;
                times.push(start.elapsed());
                print_conj(&mut w, qi, &index, &docs)?;
            }
            Op::Topk => {
                let docs = topk_disjunctive(&index, &terms, k)?;
                times.push(start.elapsed());
                print_topk(&mut w, qi, &index, &docs)?;
            }
        }
    }
    w.flush()?;
    let (mean, p95) = latency_summary(&mut times);
    eprintln!("queries {}\tmean_ms {mean:.4}\tp95_ms {p95:.4}", times.len());
    Ok(())
}

fn run_workload(script: &Path, image: Option<&Path>, args: &BuildArgs, top: usize, out: Option<&Path>) -> Result<()> {
    if top == 0 {
        bail!("--top must be at least 1");
    }
    let mut index = match image {
        Some(p) => load(p)?,
        None => Index::new(args.config()?)?,
    };
    let stdout = io::stdout();
    let mut w = BufWriter::new(stdout.lock());
    let (mut inserts, mut qi) = (0usize, 0usize);
    for (i, line) in open(script)?.lines().enumerate() {
        let line = line?;
        let outcome =
            workload::execute(&mut index, &line, top).with_context(|| format!("{}:{}", script.display(), i + 1))?;
        match outcome {
            None => {}
            Some(Outcome::Inserted(_)) => inserts += 1,
            Some(Outcome::Conj(docs)) => {
                print_conj(&mut w, qi, &index, &docs)?;
                qi += 1;
            }
            Some(Outcome::TopK(docs)) => {
                print_topk(&mut w, qi, &index, &docs)?;
                qi += 1;
            }
        }
    }
    w.flush()?;
    if let Some(out) = out {
        blockdex::save(&index, out).with_context(|| format!("cannot write {}", out.display()))?;
    }
    eprintln!("inserts {inserts}\tqueries {qi}");
    Ok(())
}

fn run_collate(image: &Path, staging: Option<&Path>, out: Option<&Path>) -> Result<()> {
    let mut index = load(image)?;
    match staging {
        Some(s) => collate_staged(&mut index, s)?,
        None => collate(&mut index)?,
    }
    let dest = out.unwrap_or(image);
    // Write beside the destination first so a failure leaves it intact.
    let tmp = dest.with_extension("collating");
    blockdex::save(&index, &tmp).with_context(|| format!("cannot write {}", tmp.display()))?;
    fs::rename(&tmp, dest)?;
    Ok(())
}

fn stats(image: &Path, histogram: bool) -> Result<()> {
    let index = load(image)?;
    let cfg = index.config();
    let mut json = serde_json::json!({
        "mode": cfg.mode.name(),
        "growth": cfg.policy.kind().name(),
        "block_size": cfg.block_size(),
        "fold": cfg.fold.get(),
        "docs": index.num_docs(),
        "terms": index.num_terms(),
        "blocks": index.arena().nblocks(),
        "space": space_report(&index)?,
    });
    if histogram {
        json["histogram"] = serde_json::to_value(posting_size_histogram(&index)?)?;
    }
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

fn gen(spec: CorpusSpec, out: &Path, queries: usize, queries_out: Option<&Path>) -> Result<()> {
    let docs = synth::generate(&spec);
    let mut w = create(out)?;
    for d in &docs {
        writeln!(w, "{}", d.docstream_line())?;
    }
    w.flush()?;
    if let Some(qpath) = queries_out {
        let mut w = create(qpath)?;
        for q in synth::random_queries(&docs, &spec, queries, spec.seed ^ 0x9e37_79b9) {
            writeln!(w, "{}", q.join(" "))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Normalize { input, output } => normalize(&input, &output),
        Command::Index { docstream, build: b, out } => build(&docstream, &b, &out),
        Command::Query { image, queries, op, k } => query(&image, &queries, op, k),
        Command::Workload {
            script,
            image,
            build: b,
            top,
            out,
        } => run_workload(&script, image.as_deref(), &b, top, out.as_deref()),
        Command::Collate { image, staging, out } => run_collate(&image, staging.as_deref(), out.as_deref()),
        Command::Stats { image, histogram } => stats(&image, histogram),
        Command::Gen {
            docs,
            vocab,
            zipf,
            seed,
            out,
            queries,
            queries_out,
        } => {
            if vocab == 0 || zipf.is_nan() || zipf <= 0.0 {
                bail!("--vocab must be positive and --zipf greater than 0");
            }
            let spec = CorpusSpec {
                docs,
                vocab,
                zipf_exponent: zipf,
                seed,
                ..CorpusSpec::default()
            };
            gen(spec, &out, queries, queries_out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
