//! Rewrites the arena so the blocks of each chain are adjacent, chains
//! ordered by ascending directory slot. Only `n_ptr`, `t_ptr` and the
//! directory entries change; every other byte is copied as is.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::arena::{read_u32, write_u32, BlockArena, N_PTR_AT, T_PTR_AT};
use crate::error::{Error, Result};
use crate::image::{self, write_trailer, ImageHeader};
use crate::index::{ChainBlock, Index};
use crate::vocab::EMPTY;

struct Plan {
    blocks: Vec<ChainBlock>,
    /// New slot offset of the block starting at each old slot.
    remap: Vec<u32>,
}

fn plan(index: &Index) -> Result<Plan> {
    let nblocks = index.arena().nblocks() as usize;
    let slot = index.arena().slot_size();
    let mut remap = Vec::new();
    remap.try_reserve_exact(nblocks)?;
    remap.resize(nblocks, EMPTY);
    let mut blocks = Vec::new();
    let mut next = 0usize;
    for head in index.directory().iter() {
        for block in index.chain(head) {
            let old = &mut remap[block.offset as usize];
            if *old != EMPTY {
                return Err(Error::Corrupt(format!("block {} is in two chains", block.offset)));
            }
            *old = next as u32;
            next += block.len / slot;
            blocks.try_reserve(1)?;
            blocks.push(block);
        }
    }
    if next != nblocks {
        return Err(Error::Corrupt(format!("{} of {nblocks} slots are not in any chain", nblocks - next)));
    }
    Ok(Plan { blocks, remap })
}

/// Copies each block in its new order, with pointers rewritten.
fn emit(index: &Index, plan: &Plan, mut sink: impl FnMut(&[u8]) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    let relink = |buf: &mut Vec<u8>, at: usize| {
        let old = read_u32(buf, at);
        write_u32(buf, at, plan.remap[old as usize]);
    };
    for block in &plan.blocks {
        buf.clear();
        buf.extend_from_slice(index.arena().block(block.offset, block.len)?);
        if block.is_head() {
            relink(&mut buf, N_PTR_AT);
            relink(&mut buf, T_PTR_AT);
        } else if !block.is_tail {
            relink(&mut buf, N_PTR_AT);
        }
        sink(&buf)?;
    }
    Ok(())
}

fn new_slots(index: &Index, plan: &Plan) -> Vec<u32> {
    index
        .directory()
        .slots()
        .iter()
        .map(|&s| if s == EMPTY { EMPTY } else { plan.remap[s as usize] })
        .collect()
}

/// Collates through a second in-memory arena. If that buffer cannot be
/// allocated the index is left unchanged.
pub fn collate(index: &mut Index) -> Result<()> {
    let plan = plan(index)?;
    let mut data = Vec::new();
    data.try_reserve_exact(index.arena().as_bytes().len())?;
    emit(index, &plan, |b| {
        data.extend_from_slice(b);
        Ok(())
    })?;
    let slots = new_slots(index, &plan);
    let cap = index.arena().cap();
    let mut arena = BlockArena::from_bytes(index.arena().slot_size(), data);
    arena.set_cap(cap);
    index.store.arena = arena;
    index.dir.slots_mut().copy_from_slice(&slots);
    Ok(())
}

/// Collates by writing the new image to `staging`, then reading it back.
pub fn collate_staged(index: &mut Index, staging: impl AsRef<Path>) -> Result<()> {
    let staging = staging.as_ref();
    let plan = plan(index)?;
    let mut w = BufWriter::new(File::create(staging)?);
    ImageHeader::of(index).write_to(&mut w)?;
    emit(index, &plan, |b| Ok(w.write_all(b)?))?;
    write_trailer(&mut w, &new_slots(index, &plan), &index.docs)?;
    w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    drop(plan);

    let fresh = image::load(staging)?;
    let cap = index.arena().cap();
    let mut arena = fresh.store.arena;
    arena.set_cap(cap);
    index.store.arena = arena;
    index.dir = fresh.dir;
    Ok(())
}
