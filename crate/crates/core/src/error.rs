use thiserror::Error;

use crate::arena::ArenaError;
use crate::codec::CodecError;
use crate::growth::GrowthError;
use crate::vocab::VocabError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Vocab(#[from] VocabError),
    #[error(transparent)]
    Growth(#[from] GrowthError),
    #[error("Block sizes less than 40 cannot be used (got {0})")]
    BlockTooSmall(u32),
    #[error("block size {0} is too large for constant-size blocks (at most 255)")]
    BlockTooLarge(u32),
    #[error("term of {len} bytes does not fit in a {block}-byte head block")]
    TermTooLong { len: usize, block: u32 },
    #[error("posting ({doc}, {pos}) does not follow ({last_doc}, {last_pos})")]
    NotMonotone {
        last_doc: u32,
        last_pos: u32,
        doc: u32,
        pos: u32,
    },
    #[error("operation requires a {0}-level index")]
    WrongMode(&'static str),
    #[error("document numbers exhausted")]
    TooManyDocuments,
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("bad index image: {0}")]
    Image(String),
    #[error("bad workload line: {0}")]
    Script(String),
    #[error("allocation failed: {0}")]
    Alloc(#[from] std::collections::TryReserveError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
