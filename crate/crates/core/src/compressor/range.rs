//! Binary adaptive range coder with 11-bit probabilities and carry propagation.

pub(crate) const PROB_BITS: u32 = 11;
pub(crate) const PROB_ONE: u16 = 1 << PROB_BITS;
pub(crate) const PROB_INIT: u16 = PROB_ONE / 2;
const ADAPT_SHIFT: u32 = 5;
const TOP: u32 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Truncated;

pub(crate) struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    out: Vec<u8>,
}

impl RangeEncoder {
    pub(crate) fn new(out: Vec<u8>) -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            out,
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut pending = self.cache;
            loop {
                self.out.push(pending.wrapping_add(carry));
                pending = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    #[inline]
    pub(crate) fn encode_bit(&mut self, prob: &mut u16, bit: u32) {
        let bound = (self.range >> PROB_BITS) * u32::from(*prob);
        if bit == 0 {
            self.range = bound;
            *prob += (PROB_ONE - *prob) >> ADAPT_SHIFT;
        } else {
            self.low += u64::from(bound);
            self.range -= bound;
            *prob -= *prob >> ADAPT_SHIFT;
        }
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Equiprobable bits, most significant first.
    pub(crate) fn encode_direct(&mut self, value: u32, count: u32) {
        for i in (0..count).rev() {
            self.range >>= 1;
            if (value >> i) & 1 == 1 {
                self.low += u64::from(self.range);
            }
            while self.range < TOP {
                self.range <<= 8;
                self.shift_low();
            }
        }
    }

    pub(crate) fn encode_tree(&mut self, probs: &mut [u16], bits: u32, value: u32) {
        let mut node = 1usize;
        for i in (0..bits).rev() {
            let bit = (value >> i) & 1;
            self.encode_bit(&mut probs[node], bit);
            node = (node << 1) | bit as usize;
        }
    }

    pub(crate) fn encode_reverse_tree(&mut self, probs: &mut [u16], bits: u32, value: u32) {
        let mut node = 1usize;
        for i in 0..bits {
            let bit = (value >> i) & 1;
            self.encode_bit(&mut probs[node], bit);
            node = (node << 1) | bit as usize;
        }
    }

    pub(crate) fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

/// Prices are in 1/16 bit units.
pub(crate) const PRICE_SHIFT: u32 = 4;
const PRICE_REDUCE: u32 = 4;

/// -log2(p) per probability bucket, by repeated squaring so it is a constant.
static PRICE_TABLE: [u32; (PROB_ONE >> PRICE_REDUCE) as usize] = {
    let mut table = [0u32; (PROB_ONE >> PRICE_REDUCE) as usize];
    let mut k = 0;
    while k < table.len() {
        let mut w = (k as u32) * (1 << PRICE_REDUCE) + (1 << PRICE_REDUCE) / 2;
        let mut bits = 0;
        let mut j = 0;
        while j < PRICE_SHIFT {
            w *= w;
            bits <<= 1;
            while w >= 1 << 16 {
                w >>= 1;
                bits += 1;
            }
            j += 1;
        }
        table[k] = (PROB_BITS << PRICE_SHIFT) - 15 - bits;
        k += 1;
    }
    table
};

#[inline]
pub(crate) fn bit_price(prob: u16, bit: u32) -> u32 {
    let p = if bit == 0 { prob } else { PROB_ONE - prob };
    PRICE_TABLE[(p >> PRICE_REDUCE) as usize]
}

pub(crate) fn tree_price(probs: &[u16], bits: u32, value: u32) -> u32 {
    let mut price = 0;
    let mut node = 1usize;
    for i in (0..bits).rev() {
        let bit = (value >> i) & 1;
        price += bit_price(probs[node], bit);
        node = (node << 1) | bit as usize;
    }
    price
}

/// Prices of every symbol of a bit tree, written to `out[..1 << bits]`.
pub(crate) fn tree_prices(probs: &[u16], bits: u32, base: u32, out: &mut [u32]) {
    let mut node_price = [0u32; 512];
    node_price[1] = base;
    for node in 1..(1usize << bits) {
        let p = node_price[node];
        node_price[2 * node] = p + bit_price(probs[node], 0);
        node_price[2 * node + 1] = p + bit_price(probs[node], 1);
    }
    out[..1 << bits].copy_from_slice(&node_price[1 << bits..2 << bits]);
}

pub(crate) fn reverse_tree_price(probs: &[u16], bits: u32, value: u32) -> u32 {
    let mut price = 0;
    let mut node = 1usize;
    for i in 0..bits {
        let bit = (value >> i) & 1;
        price += bit_price(probs[node], bit);
        node = (node << 1) | bit as usize;
    }
    price
}

pub(crate) struct RangeDecoder<'a> {
    input: &'a [u8],
    pos: usize,
    range: u32,
    code: u32,
}

impl<'a> RangeDecoder<'a> {
    pub(crate) fn new(input: &'a [u8]) -> Result<Self, Truncated> {
        if input.len() < 5 {
            return Err(Truncated);
        }
        let code = u32::from_be_bytes([input[1], input[2], input[3], input[4]]);
        Ok(Self {
            input,
            pos: 5,
            range: u32::MAX,
            code,
        })
    }

    #[inline]
    fn normalize(&mut self) -> Result<(), Truncated> {
        if self.range < TOP {
            let byte = *self.input.get(self.pos).ok_or(Truncated)?;
            self.pos += 1;
            self.range <<= 8;
            self.code = (self.code << 8) | u32::from(byte);
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn decode_bit(&mut self, prob: &mut u16) -> Result<u32, Truncated> {
        let bound = (self.range >> PROB_BITS) * u32::from(*prob);
        let bit = if self.code < bound {
            self.range = bound;
            *prob += (PROB_ONE - *prob) >> ADAPT_SHIFT;
            0
        } else {
            self.code -= bound;
            self.range -= bound;
            *prob -= *prob >> ADAPT_SHIFT;
            1
        };
        self.normalize()?;
        Ok(bit)
    }

    pub(crate) fn decode_direct(&mut self, count: u32) -> Result<u32, Truncated> {
        let mut value = 0u32;
        for _ in 0..count {
            self.range >>= 1;
            let bit = if self.code >= self.range {
                self.code -= self.range;
                1
            } else {
                0
            };
            value = (value << 1) | bit;
            self.normalize()?;
        }
        Ok(value)
    }

    pub(crate) fn decode_tree(&mut self, probs: &mut [u16], bits: u32) -> Result<u32, Truncated> {
        let mut node = 1usize;
        for _ in 0..bits {
            node = (node << 1) | self.decode_bit(&mut probs[node])? as usize;
        }
        Ok((node - (1 << bits)) as u32)
    }

    pub(crate) fn decode_reverse_tree(&mut self, probs: &mut [u16], bits: u32) -> Result<u32, Truncated> {
        let mut node = 1usize;
        let mut value = 0u32;
        for i in 0..bits {
            let bit = self.decode_bit(&mut probs[node])?;
            node = (node << 1) | bit as usize;
            value |= bit << i;
        }
        Ok(value)
    }
}
