//! Byte-exact space accounting and posting-size statistics.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::codec::{self, at_padding, code_len, vbyte_len, FoldParam};
use crate::error::Result;
use crate::growth::LINK_BYTES;
use crate::index::{ChainBlock, Index};

const H: usize = LINK_BYTES as usize;

/// Every byte of the arena and the directory charge, by category.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct SpaceReport {
    /// `n_ptr` and `t_ptr` of every head block.
    pub head_link_pointers: u64,
    /// The rest of each head's header: counters, field widths and term.
    pub head_vocabulary: u64,
    pub head_postings: u64,
    pub head_trailing_nulls: u64,
    pub full_link_pointers: u64,
    pub full_postings: u64,
    pub full_trailing_nulls: u64,
    pub tail_docnums: u64,
    pub tail_postings: u64,
    pub tail_unused: u64,
    pub hash_array: u64,
    pub total_bytes: u64,
    pub postings: u64,
    /// `total_bytes / postings`, or 0 for an index without postings.
    pub bytes_per_posting: f64,
}

impl SpaceReport {
    /// The category counts in report order, with their labels.
    pub fn categories(&self) -> [(&'static str, u64); 11] {
        [
            ("head_link_pointers", self.head_link_pointers),
            ("head_vocabulary", self.head_vocabulary),
            ("head_postings", self.head_postings),
            ("head_trailing_nulls", self.head_trailing_nulls),
            ("full_link_pointers", self.full_link_pointers),
            ("full_postings", self.full_postings),
            ("full_trailing_nulls", self.full_trailing_nulls),
            ("tail_docnums", self.tail_docnums),
            ("tail_postings", self.tail_postings),
            ("tail_unused", self.tail_unused),
            ("hash_array", self.hash_array),
        ]
    }

    pub fn category_sum(&self) -> u64 {
        self.categories().iter().map(|(_, v)| v).sum()
    }
}

/// Postings bytes of one block: `(start, end)` with `end` where the codes stop.
fn block_span(index: &Index, head: u32, block: &ChainBlock) -> Result<(usize, usize)> {
    let h = index.head(head);
    let start = if block.is_head() { h.postings_at() } else { H };
    if block.is_tail {
        return Ok((start, h.nx()));
    }
    let bytes = index.arena().block(block.offset, block.len)?;
    let mut pos = start;
    while pos < block.len && !at_padding(bytes, pos, block.len) {
        codec::read_pair(bytes, &mut pos, block.len, index.config().fold)?;
    }
    Ok((start, pos))
}

/// Calls `f` with every stored code pair, in chain order, as written.
fn for_each_code(index: &Index, mut f: impl FnMut(u32, u32)) -> Result<()> {
    let fold = index.config().fold;
    for (_, head) in index.terms() {
        for block in index.chain(head) {
            let (mut pos, end) = block_span(index, head, &block)?;
            let bytes = index.arena().block(block.offset, block.len)?;
            while pos < end {
                let (a, b) = codec::read_pair(bytes, &mut pos, end, fold)?;
                f(a, b);
            }
        }
    }
    Ok(())
}

/// Attributes every arena byte by walking every chain.
pub fn space_report(index: &Index) -> Result<SpaceReport> {
    let mut r = SpaceReport::default();
    let b = index.arena().slot_size() as u64;
    for (_, head) in index.terms() {
        for block in index.chain(head) {
            let (start, end) = block_span(index, head, &block)?;
            let (start, end, len) = (start as u64, end as u64, block.len as u64);
            if block.is_head() {
                r.head_link_pointers += 8;
                r.head_vocabulary += start - 8;
                r.head_postings += end - start;
                r.head_trailing_nulls += b - end;
            } else if block.is_tail {
                r.tail_docnums += H as u64;
                r.tail_postings += end - start;
                r.tail_unused += len - end;
            } else {
                r.full_link_pointers += H as u64;
                r.full_postings += end - start;
                r.full_trailing_nulls += len - end;
            }
        }
    }
    r.hash_array = index.directory().charged_bytes();
    r.total_bytes = r.category_sum();
    r.postings = index.num_postings();
    r.bytes_per_posting = if r.postings == 0 {
        0.0
    } else {
        r.total_bytes as f64 / r.postings as f64
    };
    Ok(r)
}

/// One cell of a [`PostingSizeHistogram`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeCell {
    /// Bytes as two separate VByte codes.
    pub vbyte: usize,
    /// Bytes as one Double-VByte code.
    pub double_vbyte: usize,
    pub count: u64,
    pub percent: f64,
}

/// Joint distribution of posting sizes under the two codes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostingSizeHistogram {
    pub fold: u32,
    pub postings: u64,
    pub cells: Vec<SizeCell>,
}

impl PostingSizeHistogram {
    pub fn percent(&self, vbyte: usize, double_vbyte: usize) -> f64 {
        self.cells
            .iter()
            .find(|c| c.vbyte == vbyte && c.double_vbyte == double_vbyte)
            .map_or(0.0, |c| c.percent)
    }

    /// Percentages of postings that got shorter, stayed the same, got longer.
    pub fn shorter_same_longer(&self) -> (f64, f64, f64) {
        let mut out = (0.0, 0.0, 0.0);
        for c in &self.cells {
            match c.double_vbyte.cmp(&c.vbyte) {
                std::cmp::Ordering::Less => out.0 += c.percent,
                std::cmp::Ordering::Equal => out.1 += c.percent,
                std::cmp::Ordering::Greater => out.2 += c.percent,
            }
        }
        out
    }
}

/// Re-encodes every stored posting pair as two VByte codes and as a
/// Double-VByte code with fold `fold`, and tallies the size pairs.
pub fn posting_size_histogram_with(index: &Index, fold: FoldParam) -> Result<PostingSizeHistogram> {
    let mut counts: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut total = 0u64;
    for_each_code(index, |a, b| {
        let vb = vbyte_len(a) + vbyte_len(b);
        *counts.entry((vb, code_len(a, b, fold))).or_default() += 1;
        total += 1;
    })?;
    let cells = counts
        .into_iter()
        .map(|((vbyte, double_vbyte), count)| SizeCell {
            vbyte,
            double_vbyte,
            count,
            percent: 100.0 * count as f64 / total as f64,
        })
        .collect();
    Ok(PostingSizeHistogram {
        fold: fold.get(),
        postings: total,
        cells,
    })
}

/// [`posting_size_histogram_with`] using the index's own fold parameter.
pub fn posting_size_histogram(index: &Index) -> Result<PostingSizeHistogram> {
    posting_size_histogram_with(index, index.config().fold)
}
