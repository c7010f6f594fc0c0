//! Document ingestion into the block arena.

use std::sync::{RwLock, RwLockReadGuard};

use crate::arena::{read_u32, write_u32, ArenaError, BlockArena, HeadLayout, HeadView, MAX_SLOTS};
use crate::codec::{self, ByteSink, FoldParam, Folded, MAX_PAIR_LEN};
use crate::error::{Error, Result};
use crate::growth::{GrowthKind, GrowthPolicy, LINK_BYTES, MAX_ORDINAL};
use crate::normalize::parse_docstream_line;
use crate::vocab::{check_term, HashDirectory, HeadTerms};

/// Smallest usable base block size.
pub const MIN_BLOCK_SIZE: u32 = 40;

const H: usize = LINK_BYTES as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IndexMode {
    /// `<d, f>` postings, one per distinct term per document.
    Document,
    /// `<d, w>` postings, one per token occurrence.
    Word,
}

impl IndexMode {
    pub fn name(&self) -> &'static str {
        match self {
            IndexMode::Document => "document",
            IndexMode::Word => "word",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConfig {
    pub mode: IndexMode,
    pub policy: GrowthPolicy,
    pub fold: FoldParam,
    /// Hard cap on arena slots.
    pub max_slots: u64,
}

impl IndexConfig {
    pub fn new(mode: IndexMode, policy: GrowthPolicy) -> Self {
        let fold = match mode {
            IndexMode::Document => FoldParam::DOCUMENT,
            IndexMode::Word => FoldParam::WORD,
        };
        IndexConfig {
            mode,
            policy,
            fold,
            max_slots: MAX_SLOTS,
        }
    }

    pub fn document(policy: GrowthPolicy) -> Self {
        Self::new(IndexMode::Document, policy)
    }

    pub fn word(policy: GrowthPolicy) -> Self {
        Self::new(IndexMode::Word, policy)
    }

    pub fn with_fold(mut self, fold: FoldParam) -> Self {
        self.fold = fold;
        self
    }

    pub fn with_max_slots(mut self, max_slots: u64) -> Self {
        self.max_slots = max_slots;
        self
    }

    pub fn block_size(&self) -> u32 {
        self.policy.base()
    }

    pub fn layout(&self) -> HeadLayout {
        HeadLayout::new(
            self.mode == IndexMode::Word,
            self.policy.kind().is_variable(),
        )
    }

    /// Checks block-size limits and returns the policy the index will run,
    /// with the block cap lowered so `nx` fits its field.
    fn effective_policy(&self) -> Result<GrowthPolicy> {
        let base = self.policy.base();
        if base < MIN_BLOCK_SIZE {
            return Err(Error::BlockTooSmall(base));
        }
        let policy = self.policy.with_link_bytes(LINK_BYTES)?.with_max_ordinal(MAX_ORDINAL);
        if self.policy.kind() == GrowthKind::Const {
            if base > u8::MAX as u32 {
                return Err(Error::BlockTooLarge(base));
            }
            return Ok(policy);
        }
        let cap = (u16::MAX as u32 / base) * base;
        Ok(policy.with_max_block(cap.min(policy.max_block()))?)
    }
}

/// The arena plus what is needed to interpret its blocks.
#[derive(Debug, Clone)]
pub(crate) struct Store {
    pub arena: BlockArena,
    pub layout: HeadLayout,
    /// Size of block `z` at `sizes[z - 1]`; ordinals past the end use the last entry.
    pub sizes: Vec<u32>,
}

impl Store {
    #[inline]
    pub fn block_len(&self, ordinal: u32) -> usize {
        let i = (ordinal.clamp(1, self.sizes.len() as u32) - 1) as usize;
        self.sizes[i] as usize
    }

    pub fn slot_size(&self) -> usize {
        self.arena.slot_size()
    }

    pub fn head(&self, offset: u32) -> HeadView<'_> {
        self.arena
            .view_head(offset, &self.layout)
            .expect("head offset from directory is in range")
    }
}

impl HeadTerms for Store {
    fn head_term(&self, offset: u32) -> &[u8] {
        self.head(offset).into_term()
    }
}

/// One block of a chain, as found by walking from the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainBlock {
    pub offset: u32,
    /// 1 for the head block.
    pub ordinal: u32,
    pub len: usize,
    pub is_tail: bool,
}

impl ChainBlock {
    pub fn is_head(&self) -> bool {
        self.ordinal == 1
    }
}

/// Walks a chain from its head block to its tail.
#[derive(Debug, Clone)]
pub struct Chain<'a> {
    store: &'a Store,
    tail: u32,
    next: Option<ChainBlock>,
}

impl Iterator for Chain<'_> {
    type Item = ChainBlock;

    fn next(&mut self) -> Option<ChainBlock> {
        let cur = self.next?;
        self.next = if cur.is_tail {
            None
        } else {
            let bytes = self.store.arena.block(cur.offset, 4).ok()?;
            let offset = read_u32(bytes, 0);
            let ordinal = cur.ordinal + 1;
            Some(ChainBlock {
                offset,
                ordinal,
                len: self.store.block_len(ordinal),
                is_tail: offset == self.tail,
            })
        };
        Some(cur)
    }
}

/// Summary of one term's head block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermInfo {
    pub head: u32,
    /// Postings stored: documents (document level) or occurrences (word level).
    pub ft: u32,
    pub last_doc: u32,
}

/// A dynamic inverted index: every document is queryable as soon as
/// [`Index::add_document`] returns.
#[derive(Debug, Clone)]
pub struct Index {
    config: IndexConfig,
    pub(crate) store: Store,
    pub(crate) dir: HashDirectory,
    pub(crate) docs: Vec<String>,
    pub(crate) postings: u64,
}

impl Index {
    pub fn new(config: IndexConfig) -> Result<Self> {
        let policy = config.effective_policy()?;
        let config = IndexConfig { policy, ..config };
        let store = Store {
            arena: BlockArena::with_cap(policy.base() as usize, config.max_slots),
            layout: config.layout(),
            sizes: size_table(&policy),
        };
        Ok(Index {
            config,
            store,
            dir: HashDirectory::new(),
            docs: Vec::new(),
            postings: 0,
        })
    }

    pub(crate) fn from_parts(
        config: IndexConfig,
        arena: BlockArena,
        dir: HashDirectory,
        docs: Vec<String>,
    ) -> Result<Self> {
        let mut index = Index::new(config)?;
        if arena.slot_size() != index.store.slot_size() {
            return Err(Error::Image("slot size does not match configuration".into()));
        }
        index.store.arena = arena;
        index.store.arena.set_cap(config.max_slots);
        index.dir = dir;
        index.docs = docs;
        index.postings = index.terms().map(|(_, h)| u64::from(index.store.head(h).ft())).sum();
        Ok(index)
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn mode(&self) -> IndexMode {
        self.config.mode
    }

    pub fn layout(&self) -> &HeadLayout {
        &self.store.layout
    }

    pub fn arena(&self) -> &BlockArena {
        &self.store.arena
    }

    pub fn directory(&self) -> &HashDirectory {
        &self.dir
    }

    /// Documents ingested so far, `N`.
    pub fn num_docs(&self) -> u32 {
        self.docs.len() as u32
    }

    /// External identifier of document `docnum` (numbered from 1).
    pub fn docid(&self, docnum: u32) -> Option<&str> {
        let i = docnum.checked_sub(1)? as usize;
        self.docs.get(i).map(String::as_str)
    }

    /// Total postings stored.
    pub fn num_postings(&self) -> u64 {
        self.postings
    }

    /// Distinct terms `v`.
    pub fn num_terms(&self) -> usize {
        self.dir.len()
    }

    /// Size in bytes of the `ordinal`th block of any chain.
    pub fn block_len(&self, ordinal: u32) -> usize {
        self.store.block_len(ordinal)
    }

    pub fn lookup(&self, term: &[u8]) -> Option<u32> {
        self.dir.lookup(term, &self.store)
    }

    pub fn term_info(&self, term: &[u8]) -> Option<TermInfo> {
        let head = self.lookup(term)?;
        let h = self.store.head(head);
        Some(TermInfo {
            head,
            ft: h.ft(),
            last_doc: h.last_d(),
        })
    }

    pub fn head(&self, offset: u32) -> HeadView<'_> {
        self.store.head(offset)
    }

    /// `(term, head offset)` for every term, in directory slot order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u8], u32)> + '_ {
        self.dir.iter().map(|h| (self.store.head_term(h), h))
    }

    /// The blocks of the chain whose head is at `head`.
    pub fn chain(&self, head: u32) -> Chain<'_> {
        let tail = self.store.head(head).t_ptr();
        Chain {
            store: &self.store,
            tail,
            next: Some(ChainBlock {
                offset: head,
                ordinal: 1,
                len: self.store.slot_size(),
                is_tail: head == tail,
            }),
        }
    }

    /// Ingests one document and returns its number. For each distinct term
    /// with `f` occurrences (document level) one posting `(d, f)` is added;
    /// at word level each occurrence at 1-based position `j` adds `(d, j)`.
    pub fn add_document<T: AsRef<[u8]>>(&mut self, docid: &str, tokens: &[T]) -> Result<u32> {
        let d = u32::try_from(self.docs.len() + 1)
            .ok()
            .filter(|&d| d < u32::MAX)
            .ok_or(Error::TooManyDocuments)?;
        let block = self.store.slot_size();
        for t in tokens {
            let t = t.as_ref();
            check_term(t)?;
            if self.store.layout.postings_at(t.len()) > block {
                return Err(Error::TermTooLong {
                    len: t.len(),
                    block: block as u32,
                });
            }
        }

        // Sort-counting: order occurrences by term, then by position.
        let mut occurrences: Vec<(&[u8], u32)> = tokens
            .iter()
            .zip(1u32..)
            .map(|(t, j)| (t.as_ref(), j))
            .collect();
        occurrences.sort_unstable();
        let mut runs: Vec<(&[u8], std::ops::Range<usize>)> = Vec::new();
        for (i, &(t, _)) in occurrences.iter().enumerate() {
            match runs.last_mut() {
                Some((prev, r)) if *prev == t => r.end = i + 1,
                _ => runs.push((t, i..i + 1)),
            }
        }

        let new_terms = runs.iter().filter(|(t, _)| self.lookup(t).is_none()).count() as u64;
        let appends = match self.config.mode {
            IndexMode::Document => runs.len() as u64,
            IndexMode::Word => occurrences.len() as u64,
        };
        let largest = self.store.sizes.iter().copied().max().unwrap_or(block as u32);
        let per_append = (largest as usize).div_ceil(block) as u64;
        let worst = new_terms + appends * per_append;
        if worst > self.store.arena.free_slots() {
            return Err(ArenaError::Exhausted {
                nblocks: self.store.arena.nblocks(),
                cap: self.store.arena.cap(),
            }
            .into());
        }

        let mut heads = Vec::with_capacity(runs.len());
        for (t, _) in &runs {
            heads.push(match self.lookup(t) {
                Some(h) => h,
                None => self.create_head(t)?,
            });
        }
        for ((_, range), head) in runs.iter().zip(heads) {
            match self.config.mode {
                IndexMode::Document => self.add_posting(head, d, range.len() as u32)?,
                IndexMode::Word => {
                    for &(_, j) in &occurrences[range.clone()] {
                        self.add_word_posting(head, d, j)?;
                    }
                }
            }
        }
        self.docs.push(docid.to_owned());
        Ok(d)
    }

    /// Parses a docstream line (`docid term term ...`) and ingests it.
    /// Blank lines are skipped and give `None`.
    pub fn add_docstream_line(&mut self, line: &str) -> Result<Option<u32>> {
        match parse_docstream_line(line) {
            Some(doc) => self.add_document(doc.docid, &doc.terms).map(Some),
            None => Ok(None),
        }
    }

    /// Allocates and initializes an empty head block for a new term.
    pub fn create_head(&mut self, term: &[u8]) -> Result<u32> {
        check_term(term)?;
        let block = self.store.slot_size();
        let start = self.store.layout.postings_at(term.len());
        if start > block {
            return Err(Error::TermTooLong {
                len: term.len(),
                block: block as u32,
            });
        }
        let offset = self.store.arena.alloc(block)?;
        let layout = self.store.layout;
        let mut h = self.store.arena.view_head_mut(offset, &layout)?;
        h.set_n_ptr(offset);
        h.set_t_ptr(offset);
        h.set_z(1);
        h.set_term(term);
        h.set_nx(start);
        self.dir.insert(term, offset, &self.store)?;
        Ok(offset)
    }

    /// Appends `(d, f)` to the chain headed at `head` (document level).
    pub fn add_posting(&mut self, head: u32, d: u32, f: u32) -> Result<()> {
        if self.config.mode != IndexMode::Document {
            return Err(Error::WrongMode("document"));
        }
        let h = self.store.head(head);
        let last_d = h.last_d();
        if d <= last_d {
            return Err(Error::NotMonotone {
                last_doc: last_d,
                last_pos: 0,
                doc: d,
                pos: 0,
            });
        }
        let fold = self.config.fold;
        let code = codec::fold(d - last_d, f, fold)?;
        self.append(head, d, code, |base| codec::fold(d - base, f, fold))?;

        let layout = self.store.layout;
        let mut h = self.store.arena.view_head_mut(head, &layout)?;
        h.set_last_d(d);
        h.set_ft(h.ft() + 1);
        self.postings += 1;
        Ok(())
    }

    /// Appends an occurrence of the term at position `w` of document `d`
    /// (word level). The pair is coded with its arguments swapped: the word
    /// component first, then the document gap plus one.
    pub fn add_word_posting(&mut self, head: u32, d: u32, w: u32) -> Result<()> {
        if self.config.mode != IndexMode::Word {
            return Err(Error::WrongMode("word"));
        }
        let h = self.store.head(head);
        let (last_d, last_w, ft) = (h.last_d(), h.last_w(), h.ft());
        let ordered = d > last_d || (d == last_d && w > last_w && ft > 0);
        if !ordered || w == 0 {
            return Err(Error::NotMonotone {
                last_doc: last_d,
                last_pos: last_w,
                doc: d,
                pos: w,
            });
        }
        let raw = d - last_d;
        let gap = raw.checked_add(1).ok_or(Error::TooManyDocuments)?;
        let wc = if raw == 0 { w - last_w } else { w };
        let fold = self.config.fold;
        let code = codec::fold(wc, gap, fold)?;
        // A block's first posting carries a b-gap and an absolute position.
        self.append(head, d, code, |base| {
            let bgap = (d - base).checked_add(1).ok_or(codec::CodecError::TooLarge)?;
            codec::fold(w, bgap, fold)
        })?;

        let layout = self.store.layout;
        let mut h = self.store.arena.view_head_mut(head, &layout)?;
        h.set_last_d(d);
        h.set_last_w(w);
        h.set_ft(h.ft() + 1);
        self.postings += 1;
        Ok(())
    }

    /// First document number of the head block, or 0 if it holds no postings.
    fn head_first_doc(&self, head: u32) -> Result<u32> {
        let h = self.store.head(head);
        let start = h.postings_at();
        if h.nx() == start {
            return Ok(0);
        }
        let bytes = h.bytes();
        let mut pos = start;
        let (a, b) = codec::read_pair(bytes, &mut pos, bytes.len(), self.config.fold)?;
        Ok(match self.config.mode {
            IndexMode::Document => a,
            IndexMode::Word => b - 1,
        })
    }

    /// Writes `code` at the tail of the chain, opening a new tail block if it
    /// does not fit. `restart` re-codes the posting relative to the first
    /// document of the block being closed.
    fn append(
        &mut self,
        head: u32,
        d: u32,
        code: Folded,
        restart: impl FnOnce(u32) -> Result<Folded, codec::CodecError>,
    ) -> Result<()> {
        let h = self.store.head(head);
        let (tail, mut nx, z) = (h.t_ptr(), h.nx(), h.z());
        let mut tail_len = if tail == head {
            self.store.slot_size()
        } else {
            self.store.block_len(z)
        };
        let mut target = tail;
        let mut code = code;

        if nx + code.len() > tail_len {
            let base = if tail == head {
                self.head_first_doc(head)?
            } else {
                self.store.arena.view_tail(tail, 4)?.d_num()
            };
            let next = restart(base)?;
            let new_len = self.store.block_len(z + 1);
            debug_assert!(H + MAX_PAIR_LEN <= new_len);
            let new = self.store.arena.alloc(new_len)?;

            let old = self.store.arena.block_mut(tail, tail_len)?;
            old[nx..].fill(0);
            write_u32(old, 0, new);
            write_u32(self.store.arena.block_mut(new, new_len)?, 0, d);

            let layout = self.store.layout;
            let mut h = self.store.arena.view_head_mut(head, &layout)?;
            h.set_t_ptr(new);
            h.set_z((z + 1).min(MAX_ORDINAL));
            target = new;
            tail_len = new_len;
            nx = H;
            code = next;
        }

        let block = self.store.arena.block_mut(target, tail_len)?;
        let written = code.write(&mut ByteSink::at(block, nx))?;
        let layout = self.store.layout;
        self.store.arena.view_head_mut(head, &layout)?.set_nx(nx + written);
        Ok(())
    }
}

fn size_table(policy: &GrowthPolicy) -> Vec<u32> {
    match policy.kind() {
        GrowthKind::Const => vec![policy.base()],
        _ => policy.schedule().take(MAX_ORDINAL as usize).collect(),
    }
}

/// An [`Index`] behind a reader-writer lock: each ingest runs to completion
/// before any query can observe the index, and queries share read access.
#[derive(Debug)]
pub struct SharedIndex {
    inner: RwLock<Index>,
}

impl SharedIndex {
    pub fn new(index: Index) -> Self {
        SharedIndex {
            inner: RwLock::new(index),
        }
    }

    pub fn add_document<T: AsRef<[u8]>>(&self, docid: &str, tokens: &[T]) -> Result<u32> {
        self.inner
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .add_document(docid, tokens)
    }

    pub fn read(&self) -> RwLockReadGuard<'_, Index> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn into_inner(self) -> Index {
        self.inner.into_inner().unwrap_or_else(|e| e.into_inner())
    }
}
