//! The block arena and byte-level views of head, full, and tail blocks.
//!
//! All blocks of all terms live in one array of `B`-byte slots and are
//! addressed by slot offset. A block's role is not recorded in the block;
//! it follows from the block's position in its chain.
//!
//! Head block (document level, constant block size):
//!
//! ```text
//! 0      4      8        12   16   17     18         18+|t|
//! n_ptr  t_ptr  last_d   ft   nx   |t|    term ...   postings ... 0x00 pad
//! ```
//!
//! Variable-size kinds widen `nx` to two bytes and add a one-byte block
//! ordinal `z`; word-level indexes add a four-byte `last_w` after `ft`.
//! Full blocks hold `n_ptr` then postings; tail blocks hold the first
//! document number of the block (`d_num`) in the same four bytes, which
//! becomes `n_ptr` once the block is closed. Integers are little-endian.

use thiserror::Error;

/// Largest number of slots an arena may hold. `u32::MAX` is reserved as the
/// directory's empty marker.
pub const MAX_SLOTS: u64 = u32::MAX as u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ArenaError {
    #[error("allocation of {0} bytes is not a positive multiple of the slot size")]
    Misaligned(usize),
    #[error("arena full: {nblocks} slots in use, cap is {cap}")]
    Exhausted { nblocks: u64, cap: u64 },
    #[error("block offset {0} is out of range")]
    OutOfRange(u32),
}

/// Contiguous array of `B`-byte slots, bump-allocated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockArena {
    slot_size: usize,
    data: Vec<u8>,
    cap: u64,
}

impl BlockArena {
    pub fn new(slot_size: usize) -> Self {
        Self::with_cap(slot_size, MAX_SLOTS)
    }

    /// An arena refusing to grow past `cap` slots.
    pub fn with_cap(slot_size: usize, cap: u64) -> Self {
        assert!(slot_size > 0, "slot size must be positive");
        BlockArena {
            slot_size,
            data: Vec::new(),
            cap: cap.min(MAX_SLOTS),
        }
    }

    pub(crate) fn from_bytes(slot_size: usize, data: Vec<u8>) -> Self {
        debug_assert_eq!(data.len() % slot_size, 0);
        BlockArena {
            slot_size,
            data,
            cap: MAX_SLOTS,
        }
    }

    pub fn slot_size(&self) -> usize {
        self.slot_size
    }

    pub fn nblocks(&self) -> u64 {
        (self.data.len() / self.slot_size) as u64
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn set_cap(&mut self, cap: u64) {
        self.cap = cap.min(MAX_SLOTS);
    }

    /// Slots still available before the cap.
    pub fn free_slots(&self) -> u64 {
        self.cap.saturating_sub(self.nblocks())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    /// Allocates `size` zeroed bytes of consecutive slots and returns the
    /// offset of the first.
    pub fn alloc(&mut self, size: usize) -> Result<u32, ArenaError> {
        if size == 0 || !size.is_multiple_of(self.slot_size) {
            return Err(ArenaError::Misaligned(size));
        }
        let slots = (size / self.slot_size) as u64;
        let nblocks = self.nblocks();
        if nblocks + slots > self.cap {
            return Err(ArenaError::Exhausted {
                nblocks,
                cap: self.cap,
            });
        }
        self.data.resize(self.data.len() + size, 0);
        Ok(nblocks as u32)
    }

    fn range(&self, offset: u32, len: usize) -> Result<std::ops::Range<usize>, ArenaError> {
        let start = offset as usize * self.slot_size;
        match start.checked_add(len) {
            Some(end) if end <= self.data.len() => Ok(start..end),
            _ => Err(ArenaError::OutOfRange(offset)),
        }
    }

    /// The `len` bytes starting at slot `offset`.
    pub fn block(&self, offset: u32, len: usize) -> Result<&[u8], ArenaError> {
        let r = self.range(offset, len)?;
        Ok(&self.data[r])
    }

    pub fn block_mut(&mut self, offset: u32, len: usize) -> Result<&mut [u8], ArenaError> {
        let r = self.range(offset, len)?;
        Ok(&mut self.data[r])
    }

    pub fn view_head<'a>(&'a self, offset: u32, layout: &'a HeadLayout) -> Result<HeadView<'a>, ArenaError> {
        Ok(HeadView {
            bytes: self.block(offset, self.slot_size)?,
            layout,
        })
    }

    pub fn view_head_mut<'a>(
        &'a mut self,
        offset: u32,
        layout: &'a HeadLayout,
    ) -> Result<HeadViewMut<'a>, ArenaError> {
        let len = self.slot_size;
        Ok(HeadViewMut {
            bytes: self.block_mut(offset, len)?,
            layout,
        })
    }

    pub fn view_full(&self, offset: u32, len: usize) -> Result<FullView<'_>, ArenaError> {
        Ok(FullView {
            bytes: self.block(offset, len)?,
        })
    }

    pub fn view_tail(&self, offset: u32, len: usize) -> Result<TailView<'_>, ArenaError> {
        Ok(TailView {
            bytes: self.block(offset, len)?,
        })
    }
}

#[inline]
pub(crate) fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

#[inline]
pub(crate) fn write_u32(bytes: &mut [u8], at: usize, v: u32) {
    bytes[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

/// Byte offsets of the head block fields for one index configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadLayout {
    last_w_at: Option<usize>,
    nx_at: usize,
    wide_nx: bool,
    z_at: Option<usize>,
    term_len_at: usize,
}

pub(crate) const N_PTR_AT: usize = 0;
pub(crate) const T_PTR_AT: usize = 4;
pub(crate) const LAST_D_AT: usize = 8;
pub(crate) const FT_AT: usize = 12;

impl HeadLayout {
    /// `word_level` adds `last_w`; `variable` widens `nx` and adds `z`.
    pub const fn new(word_level: bool, variable: bool) -> Self {
        let mut at = 16;
        let last_w_at = if word_level {
            at += 4;
            Some(16)
        } else {
            None
        };
        let nx_at = at;
        at += if variable { 2 } else { 1 };
        let z_at = if variable {
            at += 1;
            Some(at - 1)
        } else {
            None
        };
        HeadLayout {
            last_w_at,
            nx_at,
            wide_nx: variable,
            z_at,
            term_len_at: at,
        }
    }

    pub fn is_word_level(&self) -> bool {
        self.last_w_at.is_some()
    }

    pub fn is_variable(&self) -> bool {
        self.wide_nx
    }

    /// Offset of the first term byte.
    pub fn term_at(&self) -> usize {
        self.term_len_at + 1
    }

    /// Offset of the first postings byte for a term of `term_len` bytes.
    pub fn postings_at(&self, term_len: usize) -> usize {
        self.term_at() + term_len
    }

    /// Largest value `nx` can hold.
    pub fn max_nx(&self) -> usize {
        if self.wide_nx {
            u16::MAX as usize
        } else {
            u8::MAX as usize
        }
    }

    /// Bytes of the head attributed to vocabulary (everything except the
    /// two link pointers and the postings).
    pub fn vocabulary_bytes(&self, term_len: usize) -> usize {
        self.postings_at(term_len) - 8
    }
}

/// Read-only view over a head block.
#[derive(Debug, Clone, Copy)]
pub struct HeadView<'a> {
    bytes: &'a [u8],
    layout: &'a HeadLayout,
}

/// Mutable view over a head block.
#[derive(Debug)]
pub struct HeadViewMut<'a> {
    bytes: &'a mut [u8],
    layout: &'a HeadLayout,
}

macro_rules! head_getters {
    () => {
        pub fn n_ptr(&self) -> u32 {
            read_u32(self.bytes, N_PTR_AT)
        }

        pub fn t_ptr(&self) -> u32 {
            read_u32(self.bytes, T_PTR_AT)
        }

        pub fn last_d(&self) -> u32 {
            read_u32(self.bytes, LAST_D_AT)
        }

        pub fn ft(&self) -> u32 {
            read_u32(self.bytes, FT_AT)
        }

        /// Write offset within the current tail block.
        pub fn nx(&self) -> usize {
            let at = self.layout.nx_at;
            if self.layout.wide_nx {
                u16::from_le_bytes([self.bytes[at], self.bytes[at + 1]]) as usize
            } else {
                self.bytes[at] as usize
            }
        }

        /// Ordinal of the tail block (1 for the head), saturating at the cap.
        pub fn z(&self) -> u32 {
            self.layout.z_at.map_or(1, |at| u32::from(self.bytes[at]) + 1)
        }

        pub fn last_w(&self) -> u32 {
            self.layout.last_w_at.map_or(0, |at| read_u32(self.bytes, at))
        }

        pub fn term(&self) -> &[u8] {
            let len = self.bytes[self.layout.term_len_at] as usize;
            let at = self.layout.term_at();
            &self.bytes[at..at + len]
        }

        pub fn postings_at(&self) -> usize {
            self.layout.postings_at(self.bytes[self.layout.term_len_at] as usize)
        }

        pub fn bytes(&self) -> &[u8] {
            self.bytes
        }
    };
}

impl<'a> HeadView<'a> {
    head_getters!();

    /// The term with the view's lifetime rather than the borrow's.
    pub fn into_term(self) -> &'a [u8] {
        let len = self.bytes[self.layout.term_len_at] as usize;
        let at = self.layout.term_at();
        &self.bytes[at..at + len]
    }
}

impl HeadViewMut<'_> {
    head_getters!();

    pub fn set_n_ptr(&mut self, v: u32) {
        write_u32(self.bytes, N_PTR_AT, v)
    }

    pub fn set_t_ptr(&mut self, v: u32) {
        write_u32(self.bytes, T_PTR_AT, v)
    }

    pub fn set_last_d(&mut self, v: u32) {
        write_u32(self.bytes, LAST_D_AT, v)
    }

    pub fn set_ft(&mut self, v: u32) {
        write_u32(self.bytes, FT_AT, v)
    }

    pub fn set_nx(&mut self, v: usize) {
        debug_assert!(v <= self.layout.max_nx());
        let at = self.layout.nx_at;
        if self.layout.wide_nx {
            self.bytes[at..at + 2].copy_from_slice(&(v as u16).to_le_bytes());
        } else {
            self.bytes[at] = v as u8;
        }
    }

    /// Stores ordinal `z`, saturating at 256.
    pub fn set_z(&mut self, z: u32) {
        if let Some(at) = self.layout.z_at {
            self.bytes[at] = (z.clamp(1, 256) - 1) as u8;
        }
    }

    pub fn set_last_w(&mut self, v: u32) {
        if let Some(at) = self.layout.last_w_at {
            write_u32(self.bytes, at, v)
        }
    }

    /// Writes the term and its length byte. `term.len()` must fit in the
    /// block and in one byte.
    pub fn set_term(&mut self, term: &[u8]) {
        assert!(term.len() <= u8::MAX as usize);
        self.bytes[self.layout.term_len_at] = term.len() as u8;
        let at = self.layout.term_at();
        self.bytes[at..at + term.len()].copy_from_slice(term);
    }

    pub fn bytes_mut(&mut self) -> &mut [u8] {
        self.bytes
    }
}

/// A closed interior block: `n_ptr` then postings, zero-padded.
#[derive(Debug, Clone, Copy)]
pub struct FullView<'a> {
    bytes: &'a [u8],
}

impl<'a> FullView<'a> {
    pub fn n_ptr(&self) -> u32 {
        read_u32(self.bytes, N_PTR_AT)
    }

    pub fn postings(&self) -> &'a [u8] {
        &self.bytes[4..]
    }
}

/// The growing last block of a chain.
#[derive(Debug, Clone, Copy)]
pub struct TailView<'a> {
    bytes: &'a [u8],
}

impl<'a> TailView<'a> {
    /// Absolute number of the first document in this block.
    pub fn d_num(&self) -> u32 {
        read_u32(self.bytes, 0)
    }

    pub fn bytes(&self) -> &'a [u8] {
        self.bytes
    }
}
