//! VByte and Double-VByte byte codes for postings.
//!
//! Wire format: each value is split into 7-bit groups, lowest group first.
//! Every byte but the last has its top bit clear ("continue"); the last byte
//! has its top bit set ("stop"). Values are bounded to 32 bits, so a code is
//! at most five bytes long.
//!
//! A zero byte marks the end of a sequence of codes (block padding). Because
//! the lowest group goes first, a value that is a multiple of 128 also
//! starts with a zero byte (`128 -> 0x00 0x81`). The two cases are told
//! apart by looking ahead: padding is never followed by a stop byte, so a
//! leading zero is the sentinel exactly when everything up to the bound is
//! zero as well.

use std::num::NonZeroU32;

use thiserror::Error;

/// Longest VByte code for a 32-bit value.
pub const MAX_VBYTE_LEN: usize = 5;

/// Longest Double-VByte code for a pair of 32-bit values.
pub const MAX_PAIR_LEN: usize = 2 * MAX_VBYTE_LEN;

const STOP: u8 = 0x80;
const GROUP: u8 = 0x7f;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("write of {needed} bytes overflows sink ({available} available)")]
    Overflow { needed: usize, available: usize },
    #[error("source exhausted in the middle of a code")]
    Truncated,
    #[error("continue-byte run longer than {MAX_VBYTE_LEN} bytes")]
    Corrupt,
    #[error("zero cannot be encoded; it is reserved for the sentinel")]
    Zero,
    #[error("value does not fit in 32 bits after folding")]
    TooLarge,
}

/// The Double-VByte threshold `F`: payloads below it are folded into the gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FoldParam(NonZeroU32);

impl FoldParam {
    /// Default for document-level `<d, f>` postings.
    pub const DOCUMENT: FoldParam = FoldParam(NonZeroU32::new(4).unwrap());
    /// Default for word-level `<w, d>` postings.
    pub const WORD: FoldParam = FoldParam(NonZeroU32::new(3).unwrap());

    pub fn new(f: u32) -> Option<Self> {
        NonZeroU32::new(f).map(FoldParam)
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0.get()
    }
}

/// Write cursor over a caller-owned buffer. The bound is the buffer's end.
#[derive(Debug)]
pub struct ByteSink<'a> {
    buf: &'a mut [u8],
    pos: usize,
}

impl<'a> ByteSink<'a> {
    pub fn new(buf: &'a mut [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn at(buf: &'a mut [u8], pos: usize) -> Self {
        debug_assert!(pos <= buf.len());
        Self { buf, pos }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn bound(&self) -> usize {
        self.buf.len()
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn reserve(&self, needed: usize) -> Result<(), CodecError> {
        if needed > self.remaining() {
            return Err(CodecError::Overflow {
                needed,
                available: self.remaining(),
            });
        }
        Ok(())
    }

    #[inline]
    fn put_unchecked(&mut self, x: u32) -> usize {
        let start = self.pos;
        let mut x = x;
        while x >= 0x80 {
            self.buf[self.pos] = (x as u8) & GROUP;
            self.pos += 1;
            x >>= 7;
        }
        self.buf[self.pos] = (x as u8) | STOP;
        self.pos += 1;
        self.pos - start
    }
}

/// Read cursor over a byte region `[pos, bound)`.
#[derive(Debug, Clone)]
pub struct ByteSource<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteSource<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn at(buf: &'a [u8], pos: usize) -> Self {
        debug_assert!(pos <= buf.len());
        Self { buf, pos }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn bound(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.buf.len()
    }
}

/// Number of bytes `vbyte_encode(x)` writes.
#[inline]
pub fn vbyte_len(x: u32) -> usize {
    match x {
        0..=0x7f => 1,
        0x80..=0x3fff => 2,
        0x4000..=0x1f_ffff => 3,
        0x20_0000..=0x0fff_ffff => 4,
        _ => 5,
    }
}

pub fn vbyte_encode(x: u32, sink: &mut ByteSink<'_>) -> Result<usize, CodecError> {
    if x == 0 {
        return Err(CodecError::Zero);
    }
    sink.reserve(vbyte_len(x))?;
    Ok(sink.put_unchecked(x))
}

/// Decodes one value, or `None` at the end-of-sequence sentinel (in which
/// case exactly one byte is consumed).
pub fn vbyte_decode(source: &mut ByteSource<'_>) -> Result<Option<u32>, CodecError> {
    let buf = source.buf;
    let mut pos = source.pos;
    let end = buf.len();
    if pos >= end {
        return Err(CodecError::Truncated);
    }
    if buf[pos] == 0 && at_padding(buf, pos, end) {
        source.pos = pos + 1;
        return Ok(None);
    }
    let value = read_raw(buf, &mut pos, end)?;
    source.pos = pos;
    Ok(Some(value))
}

/// True when `buf[pos..end]` is all zero, i.e. only padding remains.
#[inline]
pub fn at_padding(buf: &[u8], pos: usize, end: usize) -> bool {
    buf[pos..end].iter().all(|&b| b == 0)
}

/// Decodes one raw value starting at `*pos`, without sentinel handling.
#[inline]
pub(crate) fn read_raw(buf: &[u8], pos: &mut usize, end: usize) -> Result<u32, CodecError> {
    let mut value: u64 = 0;
    let mut shift = 0u32;
    for i in 0..MAX_VBYTE_LEN {
        let at = *pos + i;
        if at >= end {
            return Err(CodecError::Truncated);
        }
        let b = buf[at];
        value |= u64::from(b & GROUP) << shift;
        if b & STOP != 0 {
            *pos = at + 1;
            return u32::try_from(value).map_err(|_| CodecError::Corrupt);
        }
        shift += 7;
    }
    Err(CodecError::Corrupt)
}

/// A `(g, f)` pair after folding, ready to be written.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Folded {
    /// `f < F`: both components packed into one value.
    Single(u32),
    /// `f >= F`: the inflated gap, then the adjusted payload.
    Pair(u32, u32),
}

impl Folded {
    #[inline]
    pub fn len(&self) -> usize {
        match *self {
            Folded::Single(x) => vbyte_len(x),
            Folded::Pair(x, y) => vbyte_len(x) + vbyte_len(y),
        }
    }

    pub fn write(&self, sink: &mut ByteSink<'_>) -> Result<usize, CodecError> {
        sink.reserve(self.len())?;
        Ok(match *self {
            Folded::Single(x) => sink.put_unchecked(x),
            Folded::Pair(x, y) => sink.put_unchecked(x) + sink.put_unchecked(y),
        })
    }
}

/// Folds `(g, f)` under threshold `F`.
#[inline]
pub fn fold(g: u32, f: u32, fold: FoldParam) -> Result<Folded, CodecError> {
    if g == 0 || f == 0 {
        return Err(CodecError::Zero);
    }
    let big_f = u64::from(fold.get());
    let (g, f) = (u64::from(g), u64::from(f));
    let packed = |x: u64| u32::try_from(x).map_err(|_| CodecError::TooLarge);
    if f < big_f {
        Ok(Folded::Single(packed((g - 1) * big_f + f)?))
    } else {
        Ok(Folded::Pair(packed(g * big_f)?, packed(f - big_f + 1)?))
    }
}

pub fn double_vbyte_encode(
    g: u32,
    f: u32,
    fold_param: FoldParam,
    sink: &mut ByteSink<'_>,
) -> Result<usize, CodecError> {
    fold(g, f, fold_param)?.write(sink)
}

pub fn double_vbyte_decode(
    source: &mut ByteSource<'_>,
    fold_param: FoldParam,
) -> Result<Option<(u32, u32)>, CodecError> {
    let buf = source.buf;
    let end = buf.len();
    if source.pos >= end {
        return Err(CodecError::Truncated);
    }
    if buf[source.pos] == 0 && at_padding(buf, source.pos, end) {
        source.pos += 1;
        return Ok(None);
    }
    let mut pos = source.pos;
    let pair = read_pair(buf, &mut pos, end, fold_param)?;
    source.pos = pos;
    Ok(Some(pair))
}

/// Decodes one `(g, f)` pair at `*pos` without sentinel handling.
#[inline]
pub(crate) fn read_pair(
    buf: &[u8],
    pos: &mut usize,
    end: usize,
    fold_param: FoldParam,
) -> Result<(u32, u32), CodecError> {
    let big_f = fold_param.get();
    let packed = read_raw(buf, pos, end)?;
    if packed == 0 {
        return Err(CodecError::Corrupt);
    }
    if packed % big_f > 0 {
        Ok((1 + packed / big_f, packed % big_f))
    } else {
        let extra = read_raw(buf, pos, end)?;
        let f = big_f
            .checked_add(extra)
            .and_then(|v| v.checked_sub(1))
            .ok_or(CodecError::Corrupt)?;
        if extra == 0 {
            return Err(CodecError::Corrupt);
        }
        Ok((packed / big_f, f))
    }
}

/// Bytes `double_vbyte_encode(g, f)` would write, by threshold arithmetic.
///
/// Inputs whose folded value exceeds 32 bits are rejected by the encoder;
/// for those this still reports the length a wider VByte would take.
#[inline]
pub fn code_len(g: u32, f: u32, fold_param: FoldParam) -> usize {
    let big_f = u64::from(fold_param.get());
    let (g, f) = (u64::from(g), u64::from(f));
    if f < big_f {
        wide_len((g.max(1) - 1) * big_f + f)
    } else {
        wide_len(g * big_f) + wide_len(f - big_f + 1)
    }
}

#[inline]
fn wide_len(x: u64) -> usize {
    let bits = 64 - x.max(1).leading_zeros() as usize;
    bits.div_ceil(7)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encode(x: u32) -> Vec<u8> {
        let mut buf = [0u8; 8];
        let mut sink = ByteSink::new(&mut buf);
        let n = vbyte_encode(x, &mut sink).unwrap();
        buf[..n].to_vec()
    }

    fn pair(g: u32, f: u32, big_f: u32) -> Vec<u8> {
        let mut buf = [0u8; 16];
        let mut sink = ByteSink::new(&mut buf);
        let n = double_vbyte_encode(g, f, FoldParam::new(big_f).unwrap(), &mut sink).unwrap();
        buf[..n].to_vec()
    }

    #[test]
    fn worked_example_12345() {
        assert_eq!(encode(12345), vec![0b0_0111001, 0b1_1100000]);
        let bytes = [0x39, 0xe0];
        assert_eq!(vbyte_decode(&mut ByteSource::new(&bytes)), Ok(Some(12345)));
    }

    #[test]
    fn small_and_boundary_values() {
        assert_eq!(encode(1), vec![0b1_0000001]);
        assert_eq!(encode(127), vec![0xff]);
        // Independent bit-level trace: 128 = 1_0000000.
        assert_eq!(encode(128), vec![0x00, 0x81]);
        assert_eq!(encode(16384), vec![0x00, 0x00, 0x81]);
        assert_eq!(encode(u32::MAX), vec![0x7f, 0x7f, 0x7f, 0x7f, 0x8f]);
    }

    #[test]
    fn null_byte_is_sentinel() {
        let bytes = [0x00];
        let mut src = ByteSource::new(&bytes);
        assert_eq!(vbyte_decode(&mut src), Ok(None));
        assert_eq!(src.position(), 1);

        let padded = [0x81, 0x00, 0x00, 0x00];
        let mut src = ByteSource::new(&padded);
        assert_eq!(vbyte_decode(&mut src), Ok(Some(1)));
        assert_eq!(vbyte_decode(&mut src), Ok(None));
        assert_eq!(src.position(), 2);
    }

    #[test]
    fn leading_zero_group_is_not_padding() {
        let bytes = [0x00, 0x81, 0x00, 0x00];
        let mut src = ByteSource::new(&bytes);
        assert_eq!(vbyte_decode(&mut src), Ok(Some(128)));
        assert_eq!(vbyte_decode(&mut src), Ok(None));
    }

    #[test]
    fn vbyte_roundtrip_exhaustive_to_2_20() {
        let mut buf = [0u8; 5];
        for x in 1..(1u32 << 20) {
            let mut sink = ByteSink::new(&mut buf);
            let n = vbyte_encode(x, &mut sink).unwrap();
            assert_eq!(n, vbyte_len(x));
            assert_eq!(buf[n - 1] & 0x80, 0x80);
            let mut src = ByteSource::new(&buf[..n]);
            assert_eq!(vbyte_decode(&mut src), Ok(Some(x)));
            assert_eq!(src.position(), n);
        }
    }

    #[test]
    fn errors() {
        let mut buf = [0u8; 1];
        let mut sink = ByteSink::new(&mut buf);
        assert_eq!(vbyte_encode(0, &mut sink), Err(CodecError::Zero));
        assert!(matches!(
            vbyte_encode(200, &mut sink),
            Err(CodecError::Overflow { needed: 2, available: 1 })
        ));
        assert_eq!(sink.position(), 0);

        let bytes = [0x05];
        assert_eq!(vbyte_decode(&mut ByteSource::new(&bytes)), Err(CodecError::Truncated));
        let bytes = [0x01; 6];
        assert_eq!(vbyte_decode(&mut ByteSource::new(&bytes)), Err(CodecError::Corrupt));
        // Five groups whose value exceeds 32 bits.
        let bytes = [0x7f, 0x7f, 0x7f, 0x7f, 0xff];
        assert_eq!(vbyte_decode(&mut ByteSource::new(&bytes)), Err(CodecError::Corrupt));

        let big = FoldParam::new(16).unwrap();
        assert_eq!(fold(u32::MAX, 20, big), Err(CodecError::TooLarge));
    }

    #[test]
    fn double_vbyte_worked_examples() {
        // g' = 39
        assert_eq!(pair(10, 3, 4), vec![0xa7]);
        // g' = 159
        assert_eq!(pair(40, 3, 4), vec![0x1f, 0x81]);
        // g' = 160, then f - F + 1 = 2
        assert_eq!(pair(40, 5, 4), vec![0x20, 0x81, 0x82]);

        let f4 = FoldParam::DOCUMENT;
        assert_eq!(code_len(10, 3, f4), 1);
        assert_eq!(code_len(40, 3, f4), 2);
        assert_eq!(code_len(40, 5, f4), 3);

        let mut src = ByteSource::new(&[0xa7]);
        assert_eq!(double_vbyte_decode(&mut src, f4), Ok(Some((10, 3))));
        let bytes = [0x20, 0x81, 0x82];
        let mut src = ByteSource::new(&bytes);
        assert_eq!(double_vbyte_decode(&mut src, f4), Ok(Some((40, 5))));
        assert_eq!(src.position(), 3);
    }

    #[test]
    fn fold_one_matches_plain_pairs() {
        for g in [1, 2, 127, 128, 300, 20000] {
            for f in [1, 2, 5, 128, 1000] {
                let mut plain = encode(g);
                plain.extend(encode(f));
                assert_eq!(pair(g, f, 1), plain);
            }
        }
    }

    #[test]
    fn code_len_thresholds() {
        let f = FoldParam::new(1).unwrap();
        for x in [1u32, 127, 128, 16383, 16384, 0x1f_ffff, 0x20_0000, 0x0fff_ffff, 0x1000_0000] {
            assert_eq!(code_len(x, 1, f), vbyte_len(x) + 1);
        }
    }
}
