//! Canonical byte encoding.
//!
//! Every value that is hashed, signed, or carried in an envelope payload goes
//! through this codec. The rules are deliberately boring: fixed-width
//! big-endian integers, `u32` length prefixes for variable-length data, and
//! list elements concatenated in order. Two encoders given the same value
//! must produce the same bytes on every platform, since message digests and
//! replay comparisons are computed over them.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("unexpected end of input at offset {0}")]
    Truncated(usize),
    #[error("trailing bytes after decode: {0} left")]
    Trailing(usize),
    #[error("invalid encoding: {0}")]
    Invalid(&'static str),
}

pub type WireResult<T> = Result<T, WireError>;

/// Append-only byte sink used by all canonical encoders.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_be_bytes());
    }

    /// Raw bytes with no length prefix; for fixed-width fields.
    pub fn raw(&mut self, v: &[u8]) {
        self.buf.extend_from_slice(v);
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self, v: &[u8]) {
        self.u32(v.len() as u32);
        self.raw(v);
    }

    /// Length-prefixed list; the closure encodes each element in order.
    pub fn list<T>(&mut self, items: &[T], mut f: impl FnMut(&mut Writer, &T)) {
        self.u32(items.len() as u32);
        for it in items {
            f(self, it);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Cursor over a canonical encoding.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> WireResult<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(WireError::Truncated(self.pos));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> WireResult<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> WireResult<u16> {
        Ok(u16::from_be_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> WireResult<u32> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> WireResult<u64> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn raw(&mut self, n: usize) -> WireResult<&'a [u8]> {
        self.take(n)
    }

    pub fn bytes(&mut self) -> WireResult<Vec<u8>> {
        let n = self.u32()? as usize;
        // Guards against absurd prefixes in adversarial payloads before we
        // try to allocate.
        if n > self.buf.len() - self.pos {
            return Err(WireError::Truncated(self.pos));
        }
        Ok(self.take(n)?.to_vec())
    }

    pub fn list<T>(&mut self, mut f: impl FnMut(&mut Reader<'a>) -> WireResult<T>) -> WireResult<Vec<T>> {
        let n = self.u32()? as usize;
        // Each element costs at least one byte in every encoding we use.
        if n > self.buf.len() - self.pos {
            return Err(WireError::Truncated(self.pos));
        }
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            out.push(f(self)?);
        }
        Ok(out)
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    /// Fails if any input is left over; decoders of complete payloads call
    /// this so that padded or extended adversarial messages are rejected.
    pub fn expect_end(&self) -> WireResult<()> {
        if self.pos != self.buf.len() {
            return Err(WireError::Trailing(self.buf.len() - self.pos));
        }
        Ok(())
    }
}

/// Types with a canonical byte form.
pub trait Encode {
    fn encode_into(&self, w: &mut Writer);

    fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.encode_into(&mut w);
        w.finish()
    }
}

pub trait Decode: Sized {
    fn decode_from(r: &mut Reader<'_>) -> WireResult<Self>;

    fn decode(buf: &[u8]) -> WireResult<Self> {
        let mut r = Reader::new(buf);
        let v = Self::decode_from(&mut r)?;
        r.expect_end()?;
        Ok(v)
    }
}
