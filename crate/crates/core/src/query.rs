//! Postings cursors, conjunctive intersection and top-k TF×IDF ranking.
//!
//! Decoding of a chain ends at the head's `t_ptr` block once `nx` bytes of
//! it have been read; inside any other block it ends at zero padding or at
//! the block's last byte.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::arena::read_u32;
use crate::codec::{self, at_padding, FoldParam};
use crate::error::{Error, Result};
use crate::index::{Index, IndexMode};

const H: usize = crate::growth::LINK_BYTES as usize;

/// One decoded posting. `payload` is `f` at document level and the absolute
/// word position `w` at word level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Posting {
    pub doc: u32,
    pub payload: u32,
}

/// Iterator over one term's chain, supporting block-skipping `seek_geq`.
#[derive(Debug, Clone)]
pub struct PostingsCursor<'a> {
    data: &'a [u8],
    index: &'a Index,
    mode: IndexMode,
    fold: FoldParam,
    slot: usize,
    tail: u32,
    tail_nx: usize,
    block: u32,
    ordinal: u32,
    start: usize,
    end: usize,
    is_tail: bool,
    pos: usize,
    /// First document of the previous block (0 before the head).
    base: u32,
    block_first: u32,
    at_block_start: bool,
    cur: Option<Posting>,
    last_w: u32,
    done: bool,
}

impl<'a> PostingsCursor<'a> {
    /// Opens a cursor on `term`, positioned before its first posting.
    pub fn open(index: &'a Index, term: &[u8]) -> Option<Self> {
        index.lookup(term).map(|head| Self::at_head(index, head))
    }

    pub fn at_head(index: &'a Index, head: u32) -> Self {
        let h = index.head(head);
        let slot = index.arena().slot_size();
        let tail = h.t_ptr();
        let tail_nx = h.nx();
        let is_tail = tail == head;
        PostingsCursor {
            data: index.arena().as_bytes(),
            index,
            mode: index.mode(),
            fold: index.config().fold,
            slot,
            tail,
            tail_nx,
            block: head,
            ordinal: 1,
            start: head as usize * slot,
            end: if is_tail { tail_nx } else { slot },
            is_tail,
            pos: h.postings_at(),
            base: 0,
            block_first: 0,
            at_block_start: true,
            cur: None,
            last_w: 0,
            done: false,
        }
    }

    /// The posting most recently returned.
    pub fn current(&self) -> Option<Posting> {
        self.cur
    }

    /// Offset of the block holding the current position.
    pub fn block(&self) -> u32 {
        self.block
    }

    pub fn is_exhausted(&self) -> bool {
        self.done
    }

    /// Moves to the following block of the chain.
    fn enter_next_block(&mut self) -> Result<()> {
        let next = read_u32(&self.data[self.start..], 0);
        self.ordinal += 1;
        let len = self.index.block_len(self.ordinal);
        let start = next as usize * self.slot;
        if start + len > self.data.len() {
            return Err(Error::Corrupt(format!("link to block {next} out of range")));
        }
        self.block = next;
        self.start = start;
        self.is_tail = next == self.tail;
        self.end = if self.is_tail { self.tail_nx } else { len };
        self.pos = H;
        self.base = self.block_first;
        self.at_block_start = true;
        Ok(())
    }

    /// True when the current block has no more codes.
    #[inline]
    fn block_done(&self) -> bool {
        if self.pos >= self.end {
            return true;
        }
        let bytes = &self.data[self.start..self.start + self.end];
        !self.is_tail && bytes[self.pos] == 0 && at_padding(bytes, self.pos, self.end)
    }

    /// Advances one posting.
    pub fn next_posting(&mut self) -> Result<Option<Posting>> {
        if self.done {
            return Ok(None);
        }
        while self.block_done() {
            if self.is_tail {
                self.done = true;
                self.cur = None;
                return Ok(None);
            }
            self.enter_next_block()?;
        }
        let bytes = &self.data[self.start..self.start + self.end];
        let (a, b) = codec::read_pair(bytes, &mut self.pos, self.end, self.fold)?;
        let corrupt = || Error::Corrupt("document number overflow".into());
        let prev = self.cur.map_or(0, |p| p.doc);
        let posting = match self.mode {
            IndexMode::Document => {
                let doc = if self.at_block_start { self.base } else { prev }
                    .checked_add(a)
                    .ok_or_else(corrupt)?;
                Posting { doc, payload: b }
            }
            IndexMode::Word => {
                let gap = b - 1;
                let doc = if self.at_block_start { self.base } else { prev }
                    .checked_add(gap)
                    .ok_or_else(corrupt)?;
                let w = if !self.at_block_start && gap == 0 {
                    self.last_w.checked_add(a).ok_or_else(corrupt)?
                } else {
                    a
                };
                self.last_w = w;
                Posting { doc, payload: w }
            }
        };
        if self.at_block_start {
            self.block_first = posting.doc;
            self.at_block_start = false;
        }
        self.cur = Some(posting);
        Ok(Some(posting))
    }

    /// First document of the block after the current one, decoding only
    /// that block's first code.
    fn peek_next_block_first(&self) -> Result<u32> {
        let next = read_u32(&self.data[self.start..], 0);
        let len = self.index.block_len(self.ordinal + 1);
        let start = next as usize * self.slot;
        let end = if next == self.tail { self.tail_nx } else { len };
        if start + end > self.data.len() {
            return Err(Error::Corrupt(format!("link to block {next} out of range")));
        }
        let mut pos = H;
        let (a, b) = codec::read_pair(&self.data[start..start + end], &mut pos, end, self.fold)?;
        let gap = match self.mode {
            IndexMode::Document => a,
            IndexMode::Word => b - 1,
        };
        self.block_first
            .checked_add(gap)
            .ok_or_else(|| Error::Corrupt("document number overflow".into()))
    }

    /// Returns the first posting with `doc >= target`, skipping whole blocks
    /// using their leading b-gaps.
    pub fn seek_geq(&mut self, target: u32) -> Result<Option<Posting>> {
        if self.cur.is_none() && !self.done && self.next_posting()?.is_none() {
            return Ok(None);
        }
        match self.cur {
            None => return Ok(None),
            Some(p) if p.doc >= target => return Ok(Some(p)),
            Some(_) => {}
        }
        while !self.is_tail {
            let next_first = self.peek_next_block_first()?;
            let skip = match self.mode {
                IndexMode::Document => next_first <= target,
                // A document can continue across a block boundary.
                IndexMode::Word => next_first < target,
            };
            if !skip {
                break;
            }
            self.enter_next_block()?;
            self.block_first = next_first;
        }
        while let Some(p) = self.next_posting()? {
            if p.doc >= target {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }
}

impl Iterator for PostingsCursor<'_> {
    type Item = Result<Posting>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_posting().transpose()
    }
}

/// Document-granular view of a cursor: one entry per distinct document,
/// with its within-document frequency.
#[derive(Debug, Clone)]
pub struct DocCursor<'a> {
    cursor: PostingsCursor<'a>,
    doc: Option<u32>,
    freq: u32,
    /// Word level: first posting of the next document, already decoded.
    ahead: Option<Posting>,
}

impl<'a> DocCursor<'a> {
    pub fn new(mut cursor: PostingsCursor<'a>) -> Result<Self> {
        let ahead = cursor.next_posting()?;
        let mut dc = DocCursor {
            cursor,
            doc: None,
            freq: 0,
            ahead,
        };
        dc.advance()?;
        Ok(dc)
    }

    pub fn doc(&self) -> Option<u32> {
        self.doc
    }

    pub fn freq(&self) -> u32 {
        self.freq
    }

    /// Moves to the next document.
    pub fn advance(&mut self) -> Result<Option<u32>> {
        let Some(first) = self.ahead.take() else {
            self.doc = None;
            return Ok(None);
        };
        self.doc = Some(first.doc);
        match self.cursor.mode {
            IndexMode::Document => {
                self.freq = first.payload;
                self.ahead = self.cursor.next_posting()?;
            }
            IndexMode::Word => {
                self.freq = 1;
                loop {
                    match self.cursor.next_posting()? {
                        Some(p) if p.doc == first.doc => self.freq += 1,
                        other => {
                            self.ahead = other;
                            break;
                        }
                    }
                }
            }
        }
        Ok(self.doc)
    }

    /// Moves to the first document `>= target`.
    pub fn seek(&mut self, target: u32) -> Result<Option<u32>> {
        match (self.doc, self.ahead) {
            (None, _) => return Ok(None),
            (Some(d), _) if d >= target => return Ok(Some(d)),
            (_, None) => {
                self.doc = None;
                return Ok(None);
            }
            (_, Some(a)) if a.doc >= target => return self.advance(),
            _ => {}
        }
        self.ahead = self.cursor.seek_geq(target)?;
        self.advance()
    }
}

/// Query terms as a sorted set.
fn term_set<T: AsRef<[u8]>>(terms: &[T]) -> Vec<&[u8]> {
    let mut set: Vec<&[u8]> = terms.iter().map(AsRef::as_ref).collect();
    set.sort_unstable();
    set.dedup();
    set
}

/// Documents containing every query term, ascending. Any absent term, or
/// an empty query, gives an empty result.
pub fn conjunction<T: AsRef<[u8]>>(index: &Index, terms: &[T]) -> Result<Vec<u32>> {
    let set = term_set(terms);
    let mut heads = Vec::with_capacity(set.len());
    for t in &set {
        match index.term_info(t) {
            Some(info) => heads.push(info),
            None => return Ok(Vec::new()),
        }
    }
    if heads.is_empty() {
        return Ok(Vec::new());
    }
    // Rarest term drives; ties keep term order.
    heads.sort_by_key(|info| info.ft);
    let mut cursors = heads
        .iter()
        .map(|info| DocCursor::new(PostingsCursor::at_head(index, info.head)))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    let (driver, others) = cursors.split_first_mut().expect("at least one term");
    let mut candidate = driver.doc();
    'outer: while let Some(d) = candidate {
        for c in others.iter_mut() {
            match c.seek(d)? {
                None => break 'outer,
                Some(x) if x > d => {
                    candidate = driver.seek(x)?;
                    continue 'outer;
                }
                Some(_) => {}
            }
        }
        out.push(d);
        candidate = driver.advance()?;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredDoc {
    pub doc: u32,
    pub score: f64,
}

/// Orders by score, then prefers the smaller document number.
#[derive(Debug, Clone, Copy)]
struct Ranked(ScoredDoc);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .score
            .total_cmp(&other.0.score)
            .then_with(|| other.0.doc.cmp(&self.0.doc))
    }
}

/// `log(1 + f_td) * log(1 + N / f_t)`, natural logarithms.
#[inline]
pub fn tf_idf(f_td: u32, num_docs: u32, f_t: u32) -> f64 {
    (1.0 + f64::from(f_td)).ln() * (1.0 + f64::from(num_docs) / f64::from(f_t)).ln()
}

/// Number of distinct documents in a chain.
fn doc_frequency(index: &Index, head: u32) -> Result<u32> {
    match index.mode() {
        IndexMode::Document => Ok(index.head(head).ft()),
        IndexMode::Word => {
            let mut c = DocCursor::new(PostingsCursor::at_head(index, head))?;
            let mut n = 0;
            while c.doc().is_some() {
                n += 1;
                c.advance()?;
            }
            Ok(n)
        }
    }
}

/// Exhaustive document-at-a-time evaluation of the disjunction of `terms`,
/// keeping the `k` best scores in a min-heap. Output is sorted by score
/// descending, then document ascending.
pub fn topk_disjunctive<T: AsRef<[u8]>>(index: &Index, terms: &[T], k: usize) -> Result<Vec<ScoredDoc>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    let n = index.num_docs();
    let mut cursors = Vec::new();
    let mut idf = Vec::new();
    for t in term_set(terms) {
        if let Some(head) = index.lookup(t) {
            let f_t = doc_frequency(index, head)?;
            cursors.push(DocCursor::new(PostingsCursor::at_head(index, head))?);
            idf.push((1.0 + f64::from(n) / f64::from(f_t)).ln());
        }
    }

    let mut heap: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(k + 1);
    while let Some(d) = cursors.iter().filter_map(DocCursor::doc).min() {
        let mut score = 0.0;
        for (c, w) in cursors.iter_mut().zip(&idf) {
            if c.doc() == Some(d) {
                score += (1.0 + f64::from(c.freq())).ln() * w;
                c.advance()?;
            }
        }
        let entry = Ranked(ScoredDoc { doc: d, score });
        if heap.len() < k {
            heap.push(Reverse(entry));
        } else if heap.peek().is_some_and(|Reverse(worst)| entry > *worst) {
            heap.pop();
            heap.push(Reverse(entry));
        }
    }
    let mut out: Vec<Ranked> = heap.into_iter().map(|Reverse(r)| r).collect();
    out.sort_unstable_by(|a, b| b.cmp(a));
    Ok(out.into_iter().map(|r| r.0).collect())
}
