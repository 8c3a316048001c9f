//! Canonical Huffman codes and the entropy-coded bit streams.

use super::JpegError;

/// Code lengths and symbols as carried in a DHT segment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffSpec {
    pub bits: [u8; 16],
    pub values: Vec<u8>,
}

impl HuffSpec {
    pub fn new(bits: &[u8; 16], values: &[u8]) -> Result<Self, JpegError> {
        let total: usize = bits.iter().map(|&b| b as usize).sum();
        if total != values.len() || total > 256 {
            return Err(JpegError::Format(format!(
                "Huffman table declares {total} codes but carries {} symbols",
                values.len()
            )));
        }
        let spec = HuffSpec {
            bits: *bits,
            values: values.to_vec(),
        };
        // reject over-subscribed length lists
        let mut code = 0u32;
        for (l, &n) in spec.bits.iter().enumerate() {
            code += n as u32;
            if code > 1 << (l + 1) {
                return Err(JpegError::Format("over-subscribed Huffman code lengths".into()));
            }
            code <<= 1;
        }
        Ok(spec)
    }

    /// `(length, code)` per symbol in table order.
    fn codes(&self) -> Vec<(u8, u16)> {
        let mut out = Vec::with_capacity(self.values.len());
        let mut code = 0u16;
        for (l, &n) in self.bits.iter().enumerate() {
            for _ in 0..n {
                out.push((l as u8 + 1, code));
                code = code.wrapping_add(1);
            }
            code <<= 1;
        }
        out
    }
}

pub struct EncodeTable {
    code: [u16; 256],
    len: [u8; 256],
}

impl EncodeTable {
    pub fn new(spec: &HuffSpec) -> Self {
        let mut t = EncodeTable {
            code: [0; 256],
            len: [0; 256],
        };
        for (&sym, (l, c)) in spec.values.iter().zip(spec.codes()) {
            t.code[sym as usize] = c;
            t.len[sym as usize] = l;
        }
        t
    }

    fn put(&self, w: &mut BitWriter, sym: u8) -> Result<(), JpegError> {
        let l = self.len[sym as usize];
        if l == 0 {
            return Err(JpegError::Argument(format!("symbol {sym:#04x} has no Huffman code")));
        }
        w.put(self.code[sym as usize] as u32, l as u32);
        Ok(())
    }
}

/// Annex F style decoder: `maxcode`, `valptr`, `mincode` per length.
pub struct DecodeTable {
    maxcode: [i32; 17],
    mincode: [i32; 17],
    valptr: [usize; 17],
    values: Vec<u8>,
}

impl DecodeTable {
    pub fn new(spec: &HuffSpec) -> Self {
        let mut t = DecodeTable {
            maxcode: [-1; 17],
            mincode: [0; 17],
            valptr: [0; 17],
            values: spec.values.clone(),
        };
        let mut k = 0usize;
        let mut code = 0i32;
        for l in 1..=16 {
            let n = spec.bits[l - 1] as usize;
            if n > 0 {
                t.valptr[l] = k;
                t.mincode[l] = code;
                code += n as i32;
                k += n;
                t.maxcode[l] = code - 1;
            }
            code <<= 1;
        }
        t
    }

    pub fn decode(&self, r: &mut BitReader) -> Result<u8, JpegError> {
        let mut code = r.bit()? as i32;
        for l in 1..=16 {
            if code <= self.maxcode[l] {
                return Ok(self.values[self.valptr[l] + (code - self.mincode[l]) as usize]);
            }
            if l < 16 {
                code = (code << 1) | r.bit()? as i32;
            }
        }
        Err(JpegError::CorruptData("bit pattern matches no Huffman code".into()))
    }
}

/// Magnitude category of a coefficient value.
pub fn category(v: i32) -> u32 {
    32 - v.unsigned_abs().leading_zeros()
}

/// Writes the category-`t` appendix bits of `v`.
fn put_amplitude(w: &mut BitWriter, v: i32, t: u32) {
    if t > 0 {
        let bits = if v < 0 { v - 1 } else { v } as u32 & ((1 << t) - 1);
        w.put(bits, t);
    }
}

/// Inverse of [`put_amplitude`].
pub fn extend(v: u32, t: u32) -> i32 {
    if t == 0 {
        0
    } else if v < 1 << (t - 1) {
        v as i32 - (1 << t) + 1
    } else {
        v as i32
    }
}

/// Huffman-codes one block of quantised coefficients in zigzag order.
pub fn encode_block(
    w: &mut BitWriter,
    zz: &[i32; 64],
    pred: &mut i32,
    dc: &EncodeTable,
    ac: &EncodeTable,
) -> Result<(), JpegError> {
    let diff = zz[0] - *pred;
    *pred = zz[0];
    let t = category(diff);
    if t > 11 {
        return Err(JpegError::Argument(format!("DC difference {diff} exceeds baseline range")));
    }
    dc.put(w, t as u8)?;
    put_amplitude(w, diff, t);

    let mut run = 0u32;
    for &v in &zz[1..] {
        if v == 0 {
            run += 1;
            continue;
        }
        while run > 15 {
            ac.put(w, 0xF0)?;
            run -= 16;
        }
        let t = category(v);
        if t > 10 {
            return Err(JpegError::Argument(format!("AC coefficient {v} exceeds baseline range")));
        }
        ac.put(w, ((run << 4) | t) as u8)?;
        put_amplitude(w, v, t);
        run = 0;
    }
    if run > 0 {
        ac.put(w, 0x00)?;
    }
    Ok(())
}

/// Decodes one block into zigzag order.
pub fn decode_block(
    r: &mut BitReader,
    zz: &mut [i32; 64],
    pred: &mut i32,
    dc: &DecodeTable,
    ac: &DecodeTable,
) -> Result<(), JpegError> {
    let t = dc.decode(r)? as u32;
    if t > 11 {
        return Err(JpegError::CorruptData(format!("DC category {t} out of range")));
    }
    let diff = extend(r.bits(t)?, t);
    *pred += diff;
    zz[0] = *pred;
    let mut k = 1;
    while k < 64 {
        let rs = ac.decode(r)?;
        let (run, t) = ((rs >> 4) as usize, (rs & 15) as u32);
        if t == 0 {
            if run == 15 {
                k += 16;
                continue;
            }
            break; // EOB
        }
        k += run;
        if k > 63 {
            return Err(JpegError::CorruptData("AC run past end of block".into()));
        }
        zz[k] = extend(r.bits(t)?, t);
        k += 1;
    }
    if k > 64 {
        return Err(JpegError::CorruptData("zero run past end of block".into()));
    }
    Ok(())
}

#[derive(Default)]
pub struct BitWriter {
    pub out: Vec<u8>,
    acc: u64,
    n: u32,
}

impl BitWriter {
    /// Continues after already-written header bytes.
    pub fn after(out: Vec<u8>) -> Self {
        BitWriter { out, acc: 0, n: 0 }
    }

    pub fn put(&mut self, bits: u32, len: u32) {
        self.acc = (self.acc << len) | bits as u64;
        self.n += len;
        while self.n >= 8 {
            self.n -= 8;
            let b = (self.acc >> self.n) as u8;
            self.out.push(b);
            if b == 0xFF {
                self.out.push(0);
            }
        }
        self.acc &= (1u64 << self.n) - 1;
    }

    /// Pads the final partial byte with one bits.
    pub fn flush(&mut self) {
        if self.n > 0 {
            let pad = 8 - self.n;
            self.put((1 << pad) - 1, pad);
        }
    }

    #[cfg(test)]
    pub fn restart_marker(&mut self, k: u8) {
        self.flush();
        self.out.extend_from_slice(&[0xFF, 0xD0 + (k & 7)]);
    }
}

/// Bit reader over one scan's entropy-coded segment (byte stuffing removed
/// on the fly; stops at any marker).
pub struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    n: u32,
    marker: Option<u8>,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        BitReader {
            data,
            pos: 0,
            acc: 0,
            n: 0,
            marker: None,
        }
    }

    fn next_byte(&mut self) -> Option<u8> {
        if self.marker.is_some() {
            return None;
        }
        loop {
            let b = *self.data.get(self.pos)?;
            if b != 0xFF {
                self.pos += 1;
                return Some(b);
            }
            match self.data.get(self.pos + 1) {
                Some(0x00) => {
                    self.pos += 2;
                    return Some(0xFF);
                }
                Some(0xFF) => self.pos += 1, // fill byte
                Some(&m) => {
                    self.marker = Some(m);
                    return None;
                }
                None => return None,
            }
        }
    }

    fn refill(&mut self) {
        while self.n <= 56 {
            match self.next_byte() {
                Some(b) => {
                    self.acc = (self.acc << 8) | b as u64;
                    self.n += 8;
                }
                None => break,
            }
        }
    }

    fn exhausted() -> JpegError {
        JpegError::Truncated("entropy-coded data ended before all blocks were decoded".into())
    }

    pub fn bit(&mut self) -> Result<u32, JpegError> {
        if self.n == 0 {
            self.refill();
            if self.n == 0 {
                return Err(Self::exhausted());
            }
        }
        self.n -= 1;
        Ok(((self.acc >> self.n) & 1) as u32)
    }

    pub fn bits(&mut self, len: u32) -> Result<u32, JpegError> {
        if len == 0 {
            return Ok(0);
        }
        if self.n < len {
            self.refill();
            if self.n < len {
                return Err(Self::exhausted());
            }
        }
        self.n -= len;
        Ok(((self.acc >> self.n) & ((1u64 << len) - 1)) as u32)
    }

    /// Drops the partial byte and consumes the expected `RSTn` marker.
    pub fn restart(&mut self, k: u8) -> Result<(), JpegError> {
        self.acc = 0;
        self.n = 0;
        if self.marker.is_none() {
            // the buffer may have stopped short of the marker
            while self.next_byte().is_some() {}
        }
        let expected = 0xD0 + (k & 7);
        match self.marker {
            Some(m) if m == expected => {
                self.pos += 2;
                self.marker = None;
                Ok(())
            }
            Some(m) => Err(JpegError::CorruptData(format!(
                "expected restart marker {expected:#04x}, found {m:#04x}"
            ))),
            None => Err(JpegError::Truncated("missing restart marker".into())),
        }
    }
}
