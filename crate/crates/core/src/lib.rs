//! A dynamic in-memory inverted index. Postings lists live in chains of
//! fixed-size blocks carved from one arena, compressed with Double-VByte
//! codes, and are searchable immediately after each document is added.

pub mod arena;
pub mod codec;
pub mod collate;
pub mod error;
pub mod growth;
pub mod image;
pub mod index;
pub mod metrics;
pub mod normalize;
pub mod query;
pub mod synth;
pub mod vocab;
pub mod workload;

pub use arena::{BlockArena, HeadLayout};
pub use codec::FoldParam;
pub use collate::{collate, collate_staged};
pub use error::{Error, Result};
pub use growth::{GrowthKind, GrowthPolicy};
pub use image::{load, save};
pub use index::{Index, IndexConfig, IndexMode, SharedIndex, TermInfo, MIN_BLOCK_SIZE};
pub use metrics::{posting_size_histogram, space_report, PostingSizeHistogram, SpaceReport};
pub use query::{conjunction, topk_disjunctive, DocCursor, Posting, PostingsCursor, ScoredDoc};
pub use vocab::HashDirectory;
