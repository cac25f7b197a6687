//! Lossless coding of quantizer-index streams, the operational side of the
//! entropy-rate numbers.
//!
//! # Container format (`LVQ1`, bit-exact)
//!
//! ```text
//! offset  size  field
//! 0       4     magic "LVQ1"
//! 4       1     version, currently 1
//! 5       1     prior id, currently 0 (model below)
//! 6       4     n (time resolution), u32 little-endian
//! 10      8     m (amplitude step), f64 little-endian bits
//! 18      8     symbol count, u64 little-endian
//! 26      8     seed echo, u64 little-endian
//! 34      ...   range-coder payload
//! ```
//!
//! # Prior 0: adaptive order-0 with escape
//!
//! The alphabet is learned on the fly; no side-channel knowledge of the
//! index range is used. State mirrored exactly by encoder and decoder:
//!
//! * a symbol table (Fenwick tree) over indices seen so far, counts start
//!   at 32 on first sight and grow by 32 per occurrence; when the table
//!   total exceeds `2^22` every count is halved (minimum 1);
//! * an escape pseudo-symbol with weight `16 * max(1, distinct)` occupying
//!   the cumulative range above the table;
//! * after an escape, the new index is sent as: `L` = bit length of the
//!   zigzag encoding, coded with an adaptive 66-symbol model (counts start
//!   at 1, +16 per use, halved above `2^16`), then the `L - 1` low bits raw
//!   (top bit implicit); length symbol 65 is the end-of-stream marker;
//! * every coded symbol (including the escape payload) updates the models,
//!   so decoding is the exact mirror.
//!
//! The range coder is the carryless byte-wise variant: 64-bit `low`/`range`,
//! top byte emitted while `(low ^ (low + range)) < 2^56`, and `range`
//! clamped to `-low mod 2^48` when it underflows the 48-bit floor without a
//! settled top byte. The encoder flushes eight bytes of `low`; the decoder
//! primes its window with the first eight payload bytes.

use std::collections::HashMap;

use crate::entropy::EntropyEstimate;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LVQ1";
const VERSION: u8 = 1;
const PRIOR_ID: u8 = 0;
const HEADER_LEN: usize = 34;

const TOP: u64 = 1 << 56;
const BOTTOM: u64 = 1 << 48;

const SYMBOL_INC: u64 = 32;
const SYMBOL_MAX_TOTAL: u64 = 1 << 22;
const ESC_UNIT: u64 = 16;
const LEN_INC: u64 = 16;
const LEN_MAX_TOTAL: u64 = 1 << 16;
/// Length-model alphabet: bit lengths 0..=64 plus the end-of-stream mark.
const LEN_SYMBOLS: usize = 66;
const EOS_MARK: u64 = 65;

/// Stream metadata carried by the container header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamHeader {
    pub m: f64,
    pub n: u32,
    pub count: u64,
    pub seed: u64,
}

/// An encoded stream: container header plus range-coder payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitstream {
    bytes: Vec<u8>,
}

impl Bitstream {
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Bitstream { bytes }
    }

    /// Range-coder payload size in bits (flush included, header excluded).
    pub fn payload_bits(&self) -> u64 {
        8 * (self.bytes.len().saturating_sub(HEADER_LEN)) as u64
    }

    pub fn header(&self) -> Result<StreamHeader> {
        parse_header(&self.bytes)
    }
}

fn parse_header(bytes: &[u8]) -> Result<StreamHeader> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::CorruptStream("truncated header".into()));
    }
    if &bytes[0..4] != MAGIC {
        return Err(Error::CorruptStream("bad magic".into()));
    }
    if bytes[4] != VERSION {
        return Err(Error::CorruptStream(format!("unknown version {}", bytes[4])));
    }
    if bytes[5] != PRIOR_ID {
        return Err(Error::CorruptStream(format!("unknown prior {}", bytes[5])));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
    let m = f64::from_le_bytes(bytes[10..18].try_into().unwrap());
    let count = u64::from_le_bytes(bytes[18..26].try_into().unwrap());
    let seed = u64::from_le_bytes(bytes[26..34].try_into().unwrap());
    Ok(StreamHeader { m, n, count, seed })
}

/// Encode a quantizer-index stream.
pub fn encode(indices: &[i64], m: f64, n: u32, seed: u64) -> Bitstream {
    let mut bytes = Vec::with_capacity(HEADER_LEN + indices.len() / 2 + 64);
    bytes.extend_from_slice(MAGIC);
    bytes.push(VERSION);
    bytes.push(PRIOR_ID);
    bytes.extend_from_slice(&n.to_le_bytes());
    bytes.extend_from_slice(&m.to_le_bytes());
    bytes.extend_from_slice(&(indices.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&seed.to_le_bytes());

    let mut enc = RangeEncoder::new(bytes);
    let mut model = EscapeModel::new();
    for &i in indices {
        model.encode_symbol(&mut enc, i);
    }
    model.encode_eos(&mut enc);
    Bitstream {
        bytes: enc.finish(),
    }
}

/// Decode a stream produced by [`encode`] with the same prior.
///
/// Fails on header damage, on an impossible escape payload, or when the
/// end-of-stream marker does not follow the declared symbol count.
pub fn decode(b: &Bitstream) -> Result<(StreamHeader, Vec<i64>)> {
    let header = parse_header(&b.bytes)?;
    let payload = &b.bytes[HEADER_LEN..];
    let mut dec = RangeDecoder::new(payload)?;
    let mut model = EscapeModel::new();
    let mut out = Vec::with_capacity(header.count as usize);
    for _ in 0..header.count {
        match model.decode_symbol(&mut dec)? {
            Decoded::Index(i) => out.push(i),
            Decoded::EndOfStream => {
                return Err(Error::CorruptStream(
                    "end marker before declared count".into(),
                ))
            }
        }
    }
    match model.decode_symbol(&mut dec)? {
        Decoded::EndOfStream => Ok((header, out)),
        Decoded::Index(_) => Err(Error::CorruptStream("missing end marker".into())),
    }
}

/// Coded-rate summary against a measured entropy reference.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RateReport {
    pub symbols: u64,
    pub payload_bits: u64,
    /// Coded size in nats.
    pub total_nats: f64,
    /// Coded nats per unit process time: `bits ln2 * n / symbols`.
    pub per_unit_time_nats: f64,
    /// The measured `H_{m,n}` this stream is compared against.
    pub reference_hmn: f64,
    /// `per_unit_time_nats - reference_hmn`.
    pub gap_nats: f64,
}

/// Compare an encoded stream's rate to a measured `H_{m,n}` on the same
/// `(model, m, n)`.
pub fn rate_report(b: &Bitstream, reference: &EntropyEstimate) -> Result<RateReport> {
    let header = b.header()?;
    let bits = b.payload_bits();
    let total_nats = bits as f64 * std::f64::consts::LN_2;
    let per_unit = if header.count == 0 {
        0.0
    } else {
        total_nats * header.n as f64 / header.count as f64
    };
    Ok(RateReport {
        symbols: header.count,
        payload_bits: bits,
        total_nats,
        per_unit_time_nats: per_unit,
        reference_hmn: reference.value,
        gap_nats: per_unit - reference.value,
    })
}

// --- range coder ---

struct RangeEncoder {
    low: u64,
    range: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    fn new(out: Vec<u8>) -> Self {
        RangeEncoder {
            low: 0,
            range: u64::MAX,
            out,
        }
    }

    fn encode(&mut self, cum: u64, freq: u64, total: u64) {
        debug_assert!(freq > 0 && cum + freq <= total && total < BOTTOM);
        let r = self.range / total;
        self.low = self.low.wrapping_add(r * cum);
        self.range = r * freq;
        self.normalize();
    }

    fn encode_bit(&mut self, bit: bool) {
        self.encode(bit as u64, 1, 2);
    }

    fn normalize(&mut self) {
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) < TOP {
                // top byte settled
            } else if self.range < BOTTOM {
                self.range = self.low.wrapping_neg() & (BOTTOM - 1);
            } else {
                break;
            }
            self.out.push((self.low >> 56) as u8);
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    fn finish(mut self) -> Vec<u8> {
        for _ in 0..8 {
            self.out.push((self.low >> 56) as u8);
            self.low <<= 8;
        }
        self.out
    }
}

struct RangeDecoder<'a> {
    buf: &'a [u8],
    pos: usize,
    low: u64,
    range: u64,
    code: u64,
}

impl<'a> RangeDecoder<'a> {
    fn new(buf: &'a [u8]) -> Result<Self> {
        if buf.len() < 8 {
            return Err(Error::CorruptStream("payload shorter than flush".into()));
        }
        let mut d = RangeDecoder {
            buf,
            pos: 0,
            low: 0,
            range: u64::MAX,
            code: 0,
        };
        for _ in 0..8 {
            d.code = (d.code << 8) | d.next_byte();
        }
        Ok(d)
    }

    fn next_byte(&mut self) -> u64 {
        let b = self.buf.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b as u64
    }

    /// Cumulative target of the pending symbol under `total`.
    fn target(&self, total: u64) -> u64 {
        let r = self.range / total;
        (self.code.wrapping_sub(self.low) / r).min(total - 1)
    }

    fn advance(&mut self, cum: u64, freq: u64, total: u64) {
        let r = self.range / total;
        self.low = self.low.wrapping_add(r * cum);
        self.range = r * freq;
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) < TOP {
                // top byte settled
            } else if self.range < BOTTOM {
                self.range = self.low.wrapping_neg() & (BOTTOM - 1);
            } else {
                break;
            }
            self.code = (self.code << 8) | self.next_byte();
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    fn decode_bit(&mut self) -> bool {
        let bit = self.target(2) == 1;
        self.advance(bit as u64, 1, 2);
        bit
    }
}

// --- Fenwick-tree frequency table ---

struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new() -> Self {
        Fenwick { tree: Vec::new() }
    }

    fn len(&self) -> usize {
        self.tree.len()
    }

    fn push(&mut self, count: u64) {
        // Node k (1-based) covers slots (k - lowbit(k), k]; seed the new
        // node with the already-present part of that range.
        let k = self.tree.len() + 1;
        let lb = k & k.wrapping_neg();
        let base = self.prefix(k - 1) - self.prefix(k - lb);
        self.tree.push(base + count);
    }

    fn add(&mut self, slot: usize, delta: i64) {
        let mut i = slot + 1;
        while i <= self.tree.len() {
            self.tree[i - 1] = (self.tree[i - 1] as i64 + delta) as u64;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of counts in slots `[0, slot)`.
    fn prefix(&self, slot: usize) -> u64 {
        let mut i = slot;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i - 1];
            i -= i & i.wrapping_neg();
        }
        s
    }

    fn total(&self) -> u64 {
        self.prefix(self.tree.len())
    }

    fn count(&self, slot: usize) -> u64 {
        self.prefix(slot + 1) - self.prefix(slot)
    }

    /// Slot whose cumulative range `[prefix(s), prefix(s+1))` contains
    /// `target`.
    fn find(&self, target: u64) -> usize {
        let mut slot = 0usize;
        let mut rest = target;
        let mut mask = self.tree.len().next_power_of_two();
        while mask > 0 {
            let next = slot + mask;
            if next <= self.tree.len() && self.tree[next - 1] <= rest {
                rest -= self.tree[next - 1];
                slot = next;
            }
            mask >>= 1;
        }
        slot
    }

    /// Halve every count, keeping a minimum of one.
    fn halve(&mut self) {
        let counts: Vec<u64> = (0..self.len()).map(|s| self.count(s).div_ceil(2).max(1)).collect();
        self.tree.clear();
        for c in counts {
            self.push(c);
        }
    }
}

// --- adaptive escape model ---

enum Decoded {
    Index(i64),
    EndOfStream,
}

struct EscapeModel {
    symbols: Vec<i64>,
    slot_of: HashMap<i64, usize>,
    counts: Fenwick,
    lengths: Fenwick,
}

fn zigzag(i: i64) -> u64 {
    ((i << 1) ^ (i >> 63)) as u64
}

fn unzigzag(z: u64) -> i64 {
    ((z >> 1) as i64) ^ -((z & 1) as i64)
}

impl EscapeModel {
    fn new() -> Self {
        let mut lengths = Fenwick::new();
        for _ in 0..LEN_SYMBOLS {
            lengths.push(1);
        }
        EscapeModel {
            symbols: Vec::new(),
            slot_of: HashMap::new(),
            counts: Fenwick::new(),
            lengths,
        }
    }

    fn esc_weight(&self) -> u64 {
        ESC_UNIT * (self.symbols.len() as u64).max(1)
    }

    fn encode_symbol(&mut self, enc: &mut RangeEncoder, i: i64) {
        let table_total = self.counts.total();
        let total = table_total + self.esc_weight();
        match self.slot_of.get(&i) {
            Some(&slot) => {
                let cum = self.counts.prefix(slot);
                let freq = self.counts.count(slot);
                enc.encode(cum, freq, total);
                self.bump(slot);
            }
            None => {
                enc.encode(table_total, self.esc_weight(), total);
                self.encode_escape_payload(enc, zigzag(i));
                self.insert(i);
            }
        }
    }

    fn encode_eos(&mut self, enc: &mut RangeEncoder) {
        let table_total = self.counts.total();
        let total = table_total + self.esc_weight();
        enc.encode(table_total, self.esc_weight(), total);
        self.encode_length(enc, EOS_MARK);
    }

    fn encode_escape_payload(&mut self, enc: &mut RangeEncoder, z: u64) {
        let len = (64 - z.leading_zeros()) as u64;
        self.encode_length(enc, len);
        if len >= 2 {
            for bit in (0..len - 1).rev() {
                enc.encode_bit((z >> bit) & 1 == 1);
            }
        }
    }

    fn encode_length(&mut self, enc: &mut RangeEncoder, len: u64) {
        let slot = len as usize;
        let cum = self.lengths.prefix(slot);
        let freq = self.lengths.count(slot);
        enc.encode(cum, freq, self.lengths.total());
        self.bump_length(slot);
    }

    fn decode_symbol(&mut self, dec: &mut RangeDecoder) -> Result<Decoded> {
        let table_total = self.counts.total();
        let total = table_total + self.esc_weight();
        let target = dec.target(total);
        if target < table_total {
            let slot = self.counts.find(target);
            let cum = self.counts.prefix(slot);
            let freq = self.counts.count(slot);
            dec.advance(cum, freq, total);
            let sym = self.symbols[slot];
            self.bump(slot);
            Ok(Decoded::Index(sym))
        } else {
            dec.advance(table_total, self.esc_weight(), total);
            match self.decode_escape_payload(dec)? {
                Some(z) => {
                    let i = unzigzag(z);
                    if self.slot_of.contains_key(&i) {
                        return Err(Error::CorruptStream(
                            "escape produced a known symbol".into(),
                        ));
                    }
                    self.insert(i);
                    Ok(Decoded::Index(i))
                }
                None => Ok(Decoded::EndOfStream),
            }
        }
    }

    fn decode_escape_payload(&mut self, dec: &mut RangeDecoder) -> Result<Option<u64>> {
        let total = self.lengths.total();
        let slot = self.lengths.find(dec.target(total));
        let cum = self.lengths.prefix(slot);
        let freq = self.lengths.count(slot);
        dec.advance(cum, freq, total);
        self.bump_length(slot);
        let len = slot as u64;
        if len == EOS_MARK {
            return Ok(None);
        }
        if len == 0 {
            return Ok(Some(0));
        }
        let mut z: u64 = 1;
        for _ in 0..len - 1 {
            z = (z << 1) | dec.decode_bit() as u64;
        }
        Ok(Some(z))
    }

    fn bump(&mut self, slot: usize) {
        self.counts.add(slot, SYMBOL_INC as i64);
        if self.counts.total() > SYMBOL_MAX_TOTAL {
            self.counts.halve();
        }
    }

    fn bump_length(&mut self, slot: usize) {
        self.lengths.add(slot, LEN_INC as i64);
        if self.lengths.total() > LEN_MAX_TOTAL {
            self.lengths.halve();
        }
    }

    fn insert(&mut self, i: i64) {
        self.slot_of.insert(i, self.symbols.len());
        self.symbols.push(i);
        self.counts.push(SYMBOL_INC);
    }
}
