//! Block-size schedules for extensible postings chains.
//!
//! Sizes are in bytes and always a positive multiple of the base size `B`.
//! `n` is the payload capacity of the blocks already in the chain, so the
//! size of block `z` depends only on the policy and `z`.

use thiserror::Error;

/// Bytes of link pointer per block in the index.
pub const LINK_BYTES: u32 = 4;

/// Block ordinal from which every block has the maximum size.
pub const MAX_ORDINAL: u32 = 256;

/// Upper bound on a single block for the variable-size kinds.
pub const MAX_BLOCK_BYTES: u32 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GrowthError {
    #[error("base block size {base} must exceed the link size {link}")]
    BaseTooSmall { base: u32, link: u32 },
    #[error("growth factor {0} must be a finite value greater than 1")]
    BadFactor(f64),
    #[error("maximum block size {max} must be a multiple of the base size {base} and at least as large")]
    BadMaxBlock { max: u32, base: u32 },
    #[error("block ordinal {0} is past the cap; the chain repeats maximum-size blocks")]
    BeyondCap(u32),
    #[error("block ordinal must be at least 1")]
    ZeroOrdinal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthKind {
    Const,
    Expon { k: f64 },
    Triangle,
}

impl GrowthKind {
    pub fn name(&self) -> &'static str {
        match self {
            GrowthKind::Const => "const",
            GrowthKind::Expon { .. } => "expon",
            GrowthKind::Triangle => "triangle",
        }
    }

    pub fn is_variable(&self) -> bool {
        !matches!(self, GrowthKind::Const)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthPolicy {
    kind: GrowthKind,
    base: u32,
    link: u32,
    max_block: u32,
    max_ordinal: u32,
}

impl GrowthPolicy {
    pub fn constant(base: u32) -> Result<Self, GrowthError> {
        Self::build(GrowthKind::Const, base)
    }

    pub fn expon(base: u32, k: f64) -> Result<Self, GrowthError> {
        if !(k.is_finite() && k > 1.0) {
            return Err(GrowthError::BadFactor(k));
        }
        Self::build(GrowthKind::Expon { k }, base)
    }

    pub fn triangle(base: u32) -> Result<Self, GrowthError> {
        Self::build(GrowthKind::Triangle, base)
    }

    pub fn new(kind: GrowthKind, base: u32) -> Result<Self, GrowthError> {
        match kind {
            GrowthKind::Expon { k } => Self::expon(base, k),
            _ => Self::build(kind, base),
        }
    }

    fn build(kind: GrowthKind, base: u32) -> Result<Self, GrowthError> {
        let policy = GrowthPolicy {
            kind,
            base,
            link: LINK_BYTES,
            max_block: (MAX_BLOCK_BYTES / base.max(1)) * base.max(1),
            max_ordinal: MAX_ORDINAL,
        };
        policy.validate()?;
        Ok(policy)
    }

    fn validate(&self) -> Result<(), GrowthError> {
        if self.base <= self.link {
            return Err(GrowthError::BaseTooSmall {
                base: self.base,
                link: self.link,
            });
        }
        if self.max_block < self.base || !self.max_block.is_multiple_of(self.base) {
            return Err(GrowthError::BadMaxBlock {
                max: self.max_block,
                base: self.base,
            });
        }
        Ok(())
    }

    /// Overrides the per-block link size `h` (simulations use `h = 1`).
    pub fn with_link_bytes(mut self, link: u32) -> Result<Self, GrowthError> {
        self.link = link;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_block(mut self, max_block: u32) -> Result<Self, GrowthError> {
        self.max_block = max_block;
        self.validate()?;
        Ok(self)
    }

    /// Lifts the block-ordinal cap to `max_ordinal` (at least 2).
    pub fn with_max_ordinal(mut self, max_ordinal: u32) -> Self {
        self.max_ordinal = max_ordinal.max(2);
        self
    }

    /// Removes both caps, for simulating unbounded chains.
    pub fn uncapped(self) -> Self {
        let max_block = (u32::MAX / self.base) * self.base;
        GrowthPolicy {
            max_block,
            max_ordinal: u32::MAX,
            ..self
        }
    }

    pub fn kind(&self) -> GrowthKind {
        self.kind
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn link_bytes(&self) -> u32 {
        self.link
    }

    pub fn max_block(&self) -> u32 {
        self.max_block
    }

    pub fn max_ordinal(&self) -> u32 {
        self.max_ordinal
    }

    /// Size of block `z` (1-based) given `n` payload bytes in blocks `1..z`.
    ///
    /// The first block is always `B`. For the variable kinds, ordinals at or
    /// beyond [`MAX_ORDINAL`] return [`GrowthError::BeyondCap`]; callers then
    /// use [`GrowthPolicy::max_block`].
    pub fn next_block_size(&self, z: u32, n: u64) -> Result<u32, GrowthError> {
        if z == 0 {
            return Err(GrowthError::ZeroOrdinal);
        }
        let base = u64::from(self.base);
        let h = u64::from(self.link);
        if z == 1 || self.kind == GrowthKind::Const {
            return Ok(self.base);
        }
        if z >= self.max_ordinal {
            return Err(GrowthError::BeyondCap(z));
        }
        let wanted = match self.kind {
            GrowthKind::Const => unreachable!(),
            GrowthKind::Expon { k } => h as f64 + (k - 1.0) * n as f64,
            GrowthKind::Triangle => h as f64 + ((2 * h * n) as f64).sqrt(),
        };
        // The nudge keeps exact multiples of B from rounding up on float error.
        let units = (wanted / base as f64 - 1e-9).ceil().max(1.0) as u64;
        Ok((units * base).min(u64::from(self.max_block)) as u32)
    }

    /// Size of block `z` in a chain whose earlier blocks were all full.
    pub fn size_at(&self, z: u32) -> u32 {
        self.schedule()
            .nth(z.saturating_sub(1) as usize)
            .unwrap_or(self.max_block)
    }

    /// The infinite sequence of block sizes `B_1, B_2, ...`.
    pub fn schedule(&self) -> Schedule {
        Schedule {
            policy: *self,
            z: 0,
            capacity: 0,
        }
    }
}

/// Iterator over successive block sizes of a chain.
#[derive(Debug, Clone)]
pub struct Schedule {
    policy: GrowthPolicy,
    z: u32,
    capacity: u64,
}

impl Iterator for Schedule {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        self.z = self.z.saturating_add(1);
        let size = self
            .policy
            .next_block_size(self.z, self.capacity)
            .unwrap_or(self.policy.max_block);
        self.capacity += u64::from(size - self.policy.link);
        Some(size)
    }
}

/// The unrounded block size minimizing links plus expected tail waste for a
/// list of `n` payload bytes with `h`-byte links: `sqrt(2hn)`.
pub fn optimal_block_size(link: u32, n: u64) -> f64 {
    (2.0 * f64::from(link) * n as f64).sqrt()
}

/// One point of an overhead trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OverheadPoint {
    /// Payload bytes stored.
    pub n: u64,
    /// Blocks allocated to hold them.
    pub blocks: u32,
    /// Allocated bytes minus payload bytes.
    pub overhead: u64,
}

/// For every `n` in `1..=n_max`, the overhead of a chain holding exactly `n`
/// payload bytes when blocks are allocated by `policy`.
pub fn overhead_trace(policy: &GrowthPolicy, n_max: u64) -> Vec<OverheadPoint> {
    let link = u64::from(policy.link_bytes());
    let mut schedule = policy.schedule();
    let mut blocks = 0u32;
    let mut allocated = 0u64;
    let mut capacity = 0u64;
    let mut out = Vec::with_capacity(n_max as usize);
    for n in 1..=n_max {
        while capacity < n {
            let size = u64::from(schedule.next().expect("schedule is infinite"));
            blocks += 1;
            allocated += size;
            capacity += size - link;
        }
        out.push(OverheadPoint {
            n,
            blocks,
            overhead: allocated - n,
        });
    }
    out
}

/// Averages over one sawtooth growth cycle: the span of `n` values served
/// by the same set of blocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleAverage {
    pub first_n: u64,
    pub last_n: u64,
    pub mean_n: f64,
    pub mean_overhead: f64,
}

impl CycleAverage {
    /// Average overhead relative to average payload over the cycle.
    pub fn ratio(&self) -> f64 {
        self.mean_overhead / self.mean_n
    }
}

/// Splits a trace into growth cycles. A cycle that is still open at the end
/// of the trace is dropped, so every returned cycle is complete.
pub fn cycle_averages(trace: &[OverheadPoint]) -> Vec<CycleAverage> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for i in 1..=trace.len() {
        let closes = i == trace.len() || trace[i].blocks != trace[start].blocks;
        if !closes {
            continue;
        }
        if i < trace.len() {
            let cycle = &trace[start..i];
            let len = cycle.len() as f64;
            out.push(CycleAverage {
                first_n: cycle[0].n,
                last_n: cycle[cycle.len() - 1].n,
                mean_n: cycle.iter().map(|p| p.n as f64).sum::<f64>() / len,
                mean_overhead: cycle.iter().map(|p| p.overhead as f64).sum::<f64>() / len,
            });
        }
        start = i;
    }
    out
}
