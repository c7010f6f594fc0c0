//! Serialized index image: arena bytes, directory and document identifiers.
//!
//! ```text
//! magic "BLOCKDEX"   version u32   B u32   h u32
//! mode u8            growth u8     k f64   F u32
//! nblocks u64        nblocks * B arena bytes
//! capacity u64       capacity * u32 directory slots
//! ndocs u64          ndocs * (len u32, bytes) docids
//! ```
//!
//! All integers are little-endian.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::arena::{read_u32, BlockArena};
use crate::codec::FoldParam;
use crate::error::{Error, Result};
use crate::growth::{GrowthKind, GrowthPolicy, LINK_BYTES};
use crate::index::{Index, IndexConfig, IndexMode};
use crate::vocab::{HashDirectory, EMPTY, MAX_TERM_LEN};

pub const MAGIC: &[u8; 8] = b"BLOCKDEX";
pub const VERSION: u32 = 1;

/// Fixed-size leading part of an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageHeader {
    pub block_size: u32,
    pub link_bytes: u32,
    pub mode: IndexMode,
    pub growth: GrowthKind,
    pub fold: FoldParam,
    pub nblocks: u64,
}

impl ImageHeader {
    pub fn of(index: &Index) -> Self {
        let cfg = index.config();
        ImageHeader {
            block_size: cfg.block_size(),
            link_bytes: cfg.policy.link_bytes(),
            mode: cfg.mode,
            growth: cfg.policy.kind(),
            fold: cfg.fold,
            nblocks: index.arena().nblocks(),
        }
    }

    pub fn write_to(&self, w: &mut impl Write) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.block_size.to_le_bytes())?;
        w.write_all(&self.link_bytes.to_le_bytes())?;
        let mode = match self.mode {
            IndexMode::Document => 0u8,
            IndexMode::Word => 1,
        };
        let (growth, k) = match self.growth {
            GrowthKind::Const => (0u8, 0.0),
            GrowthKind::Expon { k } => (1, k),
            GrowthKind::Triangle => (2, 0.0),
        };
        w.write_all(&[mode, growth])?;
        w.write_all(&k.to_le_bytes())?;
        w.write_all(&self.fold.get().to_le_bytes())?;
        w.write_all(&self.nblocks.to_le_bytes())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Image("not an index image".into()));
        }
        let version = read_u32_from(r)?;
        if version != VERSION {
            return Err(Error::Image(format!("unsupported version {version}")));
        }
        let block_size = read_u32_from(r)?;
        let link_bytes = read_u32_from(r)?;
        let mut tags = [0u8; 2];
        r.read_exact(&mut tags)?;
        let mut k = [0u8; 8];
        r.read_exact(&mut k)?;
        let k = f64::from_le_bytes(k);
        let fold = FoldParam::new(read_u32_from(r)?).ok_or_else(|| Error::Image("fold parameter 0".into()))?;
        let nblocks = read_u64_from(r)?;
        let mode = match tags[0] {
            0 => IndexMode::Document,
            1 => IndexMode::Word,
            t => return Err(Error::Image(format!("unknown mode {t}"))),
        };
        let growth = match tags[1] {
            0 => GrowthKind::Const,
            1 => GrowthKind::Expon { k },
            2 => GrowthKind::Triangle,
            t => return Err(Error::Image(format!("unknown growth kind {t}"))),
        };
        if link_bytes != LINK_BYTES {
            return Err(Error::Image(format!("link size {link_bytes} unsupported")));
        }
        Ok(ImageHeader {
            block_size,
            link_bytes,
            mode,
            growth,
            fold,
            nblocks,
        })
    }

    pub fn config(&self) -> Result<IndexConfig> {
        let policy = GrowthPolicy::new(self.growth, self.block_size)?;
        Ok(IndexConfig::new(self.mode, policy).with_fold(self.fold))
    }
}

fn read_u32_from(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64_from(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Writes the directory and docid sections.
pub(crate) fn write_trailer(w: &mut impl Write, slots: &[u32], docs: &[String]) -> io::Result<()> {
    w.write_all(&(slots.len() as u64).to_le_bytes())?;
    for s in slots {
        w.write_all(&s.to_le_bytes())?;
    }
    w.write_all(&(docs.len() as u64).to_le_bytes())?;
    for d in docs {
        w.write_all(&(d.len() as u32).to_le_bytes())?;
        w.write_all(d.as_bytes())?;
    }
    Ok(())
}

pub fn write_image(index: &Index, w: &mut impl Write) -> Result<()> {
    ImageHeader::of(index).write_to(w)?;
    w.write_all(index.arena().as_bytes())?;
    write_trailer(w, index.directory().slots(), &index.docs)?;
    Ok(())
}

/// Reads an image and checks that every directory entry leads to a
/// well-formed chain.
pub fn read_image(r: &mut impl Read) -> Result<Index> {
    let header = ImageHeader::read_from(r)?;
    let config = header.config()?;
    Index::new(config)?;
    let b = header.block_size as usize;

    let arena_len = header
        .nblocks
        .checked_mul(b as u64)
        .and_then(|n| usize::try_from(n).ok())
        .ok_or_else(|| Error::Image("arena size overflows".into()))?;
    let mut data = Vec::new();
    r.take(arena_len as u64).read_to_end(&mut data)?;
    if data.len() != arena_len {
        return Err(Error::Image("truncated arena".into()));
    }

    let capacity = read_u64_from(r)?;
    if !capacity.is_power_of_two() || capacity > u64::from(u32::MAX) {
        return Err(Error::Image(format!("bad directory capacity {capacity}")));
    }
    let mut raw = Vec::new();
    r.take(capacity * 4).read_to_end(&mut raw)?;
    if raw.len() as u64 != capacity * 4 {
        return Err(Error::Image("truncated directory".into()));
    }
    let slots: Vec<u32> = raw.chunks_exact(4).map(|c| read_u32(c, 0)).collect();
    // Probing needs free slots to terminate.
    if 2 * slots.iter().filter(|&&s| s != EMPTY).count() as u64 > capacity {
        return Err(Error::Image("directory is overfull".into()));
    }

    let ndocs = read_u64_from(r)?;
    if ndocs >= u64::from(u32::MAX) {
        return Err(Error::Image(format!("{ndocs} documents")));
    }
    let mut docs = Vec::new();
    for _ in 0..ndocs {
        let len = read_u32_from(r)? as usize;
        let mut bytes = Vec::new();
        r.take(len as u64).read_to_end(&mut bytes)?;
        if bytes.len() != len {
            return Err(Error::Image("truncated docid".into()));
        }
        docs.push(String::from_utf8(bytes).map_err(|_| Error::Image("docid is not UTF-8".into()))?);
    }

    let layout = config.layout();
    for &s in slots.iter().filter(|&&s| s != EMPTY) {
        if u64::from(s) >= header.nblocks {
            return Err(Error::Image(format!("directory points past the arena at {s}")));
        }
        let start = s as usize * b;
        let len = data[start + layout.term_at() - 1] as usize;
        if len == 0 || len > MAX_TERM_LEN || layout.postings_at(len) > b {
            return Err(Error::Image(format!("bad term length in head {s}")));
        }
    }

    let arena = BlockArena::from_bytes(b, data);
    let index = Index::from_parts(config, arena, HashDirectory::from_slots(slots), docs)?;
    verify(&index)?;
    Ok(index)
}

/// Structural checks: each term is found at its own head, chains stay in
/// the arena and reach their tails, and `nx` lies within the tail block.
pub fn verify(index: &Index) -> Result<()> {
    let nblocks = index.arena().nblocks();
    let bad = |s: String| Err(Error::Image(s));
    let mut seen = std::collections::HashSet::new();
    for (term, head) in index.terms() {
        if !seen.insert(head) {
            return bad(format!("head {head} listed twice"));
        }
        if index.lookup(term) != Some(head) {
            return bad(format!("term at head {head} is not reachable by lookup"));
        }
        let h = index.head(head);
        let tail = h.t_ptr();
        let (z, nx) = (h.z(), h.nx());
        let mut off = head;
        let mut ordinal = 1u64;
        while off != tail {
            if ordinal > nblocks {
                return bad(format!("chain from head {head} does not reach its tail"));
            }
            off = read_u32(index.arena().block(off, 4).map_err(Error::from)?, 0);
            ordinal += 1;
            let len = index.block_len(ordinal.min(u64::from(u32::MAX)) as u32);
            if index.arena().block(off, len).is_err() {
                return bad(format!("chain from head {head} leaves the arena"));
            }
        }
        let tail_len = if ordinal == 1 {
            index.arena().slot_size()
        } else {
            index.block_len(ordinal as u32)
        };
        let min_nx = if ordinal == 1 { h.postings_at() } else { LINK_BYTES as usize };
        if nx < min_nx || nx > tail_len {
            return bad(format!("write offset {nx} out of range in chain {head}"));
        }
        if index.config().policy.kind().is_variable() && u64::from(z) != ordinal.min(256) {
            return bad(format!("block count {z} disagrees with chain {head}"));
        }
    }
    Ok(())
}

pub fn save(index: &Index, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_image(index, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<Index> {
    read_image(&mut BufReader::new(File::open(path)?))
}
