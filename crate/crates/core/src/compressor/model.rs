//! Adaptive probability model shared by the encoder and decoder.
//!
//! Token layout follows the classic LZ + binary context-modelling scheme:
//! a 12-state machine over the recent token kinds selects the contexts for
//! the literal/match flags, literals are coded with the previous byte's high
//! bits as context (and against the byte at the last distance right after a
//! match), lengths use a three-tier bit tree, distances a slot plus footer.

use super::range::{
    bit_price, reverse_tree_price, tree_price, tree_prices, RangeDecoder, RangeEncoder, Truncated, PRICE_SHIFT,
    PROB_INIT,
};

pub(crate) const MIN_MATCH: usize = 4;
pub(crate) const MIN_REP: usize = 2;
pub(crate) const MAX_MATCH: usize = 273;
pub(crate) const REPS: usize = 4;

const STATES: usize = 12;
const LIT_STATES: usize = 7;
const POS_BITS: u32 = 2;
const POS_STATES: usize = 1 << POS_BITS;
const LIT_CONTEXT_BITS: u32 = 3;

const LEN_LOW_BITS: u32 = 3;
const LEN_MID_BITS: u32 = 3;
const LEN_HIGH_BITS: u32 = 8;
const LEN_LOW: u32 = 1 << LEN_LOW_BITS;
const LEN_MID: u32 = 1 << LEN_MID_BITS;

const LEN_STATES: usize = 4;
const SLOT_BITS: u32 = 6;
const ALIGN_BITS: u32 = 4;
const FIRST_MODELLED_SLOT: u32 = 4;
const END_MODELLED_SLOT: u32 = 14;
const FULL_DISTANCES: u32 = 1 << (END_MODELLED_SLOT >> 1);
const LEN_SYMBOLS: usize = MAX_MATCH - MIN_REP + 1;
const SLOTS: usize = 1 << SLOT_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub(crate) struct State(u8);

impl State {
    pub(crate) const INITIAL: State = State(0);

    #[inline]
    pub(crate) fn is_literal(self) -> bool {
        (self.0 as usize) < LIT_STATES
    }
    #[inline]
    pub(crate) fn after_literal(self) -> Self {
        State(match self.0 {
            0..=3 => 0,
            4..=9 => self.0 - 3,
            _ => self.0 - 6,
        })
    }
    #[inline]
    pub(crate) fn after_match(self) -> Self {
        State(if self.is_literal() { 7 } else { 10 })
    }
    #[inline]
    pub(crate) fn after_rep(self) -> Self {
        State(if self.is_literal() { 8 } else { 11 })
    }
    #[inline]
    pub(crate) fn after_short_rep(self) -> Self {
        State(if self.is_literal() { 9 } else { 11 })
    }
    #[inline]
    fn index(self) -> usize {
        self.0 as usize
    }
}

#[inline]
pub(crate) fn pos_state(pos: usize) -> usize {
    pos & (POS_STATES - 1)
}

struct LengthModel {
    choice: u16,
    choice2: u16,
    low: Vec<u16>,
    mid: Vec<u16>,
    high: Vec<u16>,
}

impl LengthModel {
    fn new() -> Self {
        Self {
            choice: PROB_INIT,
            choice2: PROB_INIT,
            low: vec![PROB_INIT; POS_STATES << LEN_LOW_BITS],
            mid: vec![PROB_INIT; POS_STATES << LEN_MID_BITS],
            high: vec![PROB_INIT; 1 << LEN_HIGH_BITS],
        }
    }

    fn encode(&mut self, rc: &mut RangeEncoder, len: usize, ps: usize) {
        let v = (len - MIN_REP) as u32;
        if v < LEN_LOW {
            rc.encode_bit(&mut self.choice, 0);
            let base = ps << LEN_LOW_BITS;
            rc.encode_tree(&mut self.low[base..base + LEN_LOW as usize], LEN_LOW_BITS, v);
        } else if v < LEN_LOW + LEN_MID {
            rc.encode_bit(&mut self.choice, 1);
            rc.encode_bit(&mut self.choice2, 0);
            let base = ps << LEN_MID_BITS;
            rc.encode_tree(&mut self.mid[base..base + LEN_MID as usize], LEN_MID_BITS, v - LEN_LOW);
        } else {
            rc.encode_bit(&mut self.choice, 1);
            rc.encode_bit(&mut self.choice2, 1);
            rc.encode_tree(&mut self.high, LEN_HIGH_BITS, v - LEN_LOW - LEN_MID);
        }
    }

    #[cfg(test)]
    fn price(&self, len: usize, ps: usize) -> u32 {
        let v = (len - MIN_REP) as u32;
        if v < LEN_LOW {
            let base = ps << LEN_LOW_BITS;
            bit_price(self.choice, 0) + tree_price(&self.low[base..], LEN_LOW_BITS, v)
        } else if v < LEN_LOW + LEN_MID {
            let base = ps << LEN_MID_BITS;
            bit_price(self.choice, 1)
                + bit_price(self.choice2, 0)
                + tree_price(&self.mid[base..], LEN_MID_BITS, v - LEN_LOW)
        } else {
            bit_price(self.choice, 1)
                + bit_price(self.choice2, 1)
                + tree_price(&self.high, LEN_HIGH_BITS, v - LEN_LOW - LEN_MID)
        }
    }

    fn fill_prices(&self, table: &mut [u32]) {
        let (low, mid) = (LEN_LOW as usize, LEN_MID as usize);
        let mut high = [0u32; 1 << LEN_HIGH_BITS];
        let high_base = bit_price(self.choice, 1) + bit_price(self.choice2, 1);
        tree_prices(&self.high, LEN_HIGH_BITS, high_base, &mut high);
        for ps in 0..POS_STATES {
            let row = &mut table[ps * LEN_SYMBOLS..(ps + 1) * LEN_SYMBOLS];
            tree_prices(
                &self.low[ps << LEN_LOW_BITS..],
                LEN_LOW_BITS,
                bit_price(self.choice, 0),
                row,
            );
            let mid_base = bit_price(self.choice, 1) + bit_price(self.choice2, 0);
            tree_prices(&self.mid[ps << LEN_MID_BITS..], LEN_MID_BITS, mid_base, &mut row[low..]);
            row[low + mid..].copy_from_slice(&high[..LEN_SYMBOLS - low - mid]);
        }
    }

    fn decode(&mut self, rc: &mut RangeDecoder<'_>, ps: usize) -> Result<usize, Truncated> {
        let v = if rc.decode_bit(&mut self.choice)? == 0 {
            let base = ps << LEN_LOW_BITS;
            rc.decode_tree(&mut self.low[base..base + LEN_LOW as usize], LEN_LOW_BITS)?
        } else if rc.decode_bit(&mut self.choice2)? == 0 {
            let base = ps << LEN_MID_BITS;
            LEN_LOW + rc.decode_tree(&mut self.mid[base..base + LEN_MID as usize], LEN_MID_BITS)?
        } else {
            LEN_LOW + LEN_MID + rc.decode_tree(&mut self.high, LEN_HIGH_BITS)?
        };
        Ok(v as usize + MIN_REP)
    }
}

/// Snapshot of length and distance prices, refreshed periodically by the parser.
pub(crate) struct Prices {
    match_len: Vec<u32>,
    rep_len: Vec<u32>,
    slot: Vec<u32>,
    full_distance: Vec<u32>,
    align: [u32; 1 << ALIGN_BITS],
}

impl Prices {
    pub(crate) fn new() -> Self {
        Self {
            match_len: vec![0; POS_STATES * LEN_SYMBOLS],
            rep_len: vec![0; POS_STATES * LEN_SYMBOLS],
            slot: vec![0; LEN_STATES * SLOTS],
            full_distance: vec![0; LEN_STATES * FULL_DISTANCES as usize],
            align: [0; 1 << ALIGN_BITS],
        }
    }

    #[inline]
    pub(crate) fn match_len(&self, len: usize, ps: usize) -> u32 {
        self.match_len[ps * LEN_SYMBOLS + len - MIN_REP]
    }

    #[inline]
    pub(crate) fn rep_len(&self, len: usize, ps: usize) -> u32 {
        self.rep_len[ps * LEN_SYMBOLS + len - MIN_REP]
    }

    /// Price of a 1-based distance coded after a match of `len`.
    #[inline]
    pub(crate) fn distance(&self, distance: usize, len: usize) -> u32 {
        let len_state = (len - MIN_REP).min(LEN_STATES - 1);
        let dist = (distance - 1) as u32;
        if dist < FULL_DISTANCES {
            self.full_distance[len_state * FULL_DISTANCES as usize + dist as usize]
        } else {
            self.slot[len_state * SLOTS + distance_slot(dist) as usize]
                + self.align[(dist & ((1 << ALIGN_BITS) - 1)) as usize]
        }
    }
}

pub(crate) struct Model {
    literal: Vec<u16>,
    is_match: [u16; STATES * POS_STATES],
    is_rep: [u16; STATES],
    is_rep0: [u16; STATES],
    is_rep1: [u16; STATES],
    is_rep2: [u16; STATES],
    is_rep0_long: [u16; STATES * POS_STATES],
    slot: Vec<u16>,
    footer: Vec<u16>,
    align: [u16; 1 << ALIGN_BITS],
    match_len: LengthModel,
    rep_len: LengthModel,
}

/// The kind of token following an `is_match` bit of one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum MatchKind {
    Fresh,
    ShortRep,
    Rep(usize),
}

impl Model {
    pub(crate) fn new() -> Self {
        Self {
            literal: vec![PROB_INIT; 0x300 << LIT_CONTEXT_BITS],
            is_match: [PROB_INIT; STATES * POS_STATES],
            is_rep: [PROB_INIT; STATES],
            is_rep0: [PROB_INIT; STATES],
            is_rep1: [PROB_INIT; STATES],
            is_rep2: [PROB_INIT; STATES],
            is_rep0_long: [PROB_INIT; STATES * POS_STATES],
            slot: vec![PROB_INIT; LEN_STATES << SLOT_BITS],
            footer: vec![PROB_INIT; (FULL_DISTANCES - END_MODELLED_SLOT + 1) as usize],
            align: [PROB_INIT; 1 << ALIGN_BITS],
            match_len: LengthModel::new(),
            rep_len: LengthModel::new(),
        }
    }

    #[inline]
    fn literal_probs(&mut self, prev_byte: u8) -> &mut [u16] {
        let base = 0x300 * (usize::from(prev_byte) >> (8 - LIT_CONTEXT_BITS));
        &mut self.literal[base..base + 0x300]
    }

    pub(crate) fn encode_literal(
        &mut self,
        rc: &mut RangeEncoder,
        state: State,
        ps: usize,
        byte: u8,
        prev_byte: u8,
        match_byte: u8,
    ) {
        rc.encode_bit(&mut self.is_match[state.index() * POS_STATES + ps], 0);
        let probs = self.literal_probs(prev_byte);
        if state.is_literal() {
            rc.encode_tree(probs, 8, u32::from(byte));
        } else {
            let mut offs = 0x100u32;
            let mut symbol = 1u32;
            let mut mb = u32::from(match_byte);
            for i in (0..8).rev() {
                mb <<= 1;
                let match_bit = mb & offs;
                let bit = u32::from(byte >> i) & 1;
                rc.encode_bit(&mut probs[(offs + match_bit + symbol) as usize], bit);
                symbol = (symbol << 1) | bit;
                offs &= if bit == 0 { !match_bit } else { match_bit };
            }
        }
    }

    pub(crate) fn encode_match(&mut self, rc: &mut RangeEncoder, state: State, ps: usize, distance: usize, len: usize) {
        let s = state.index();
        rc.encode_bit(&mut self.is_match[s * POS_STATES + ps], 1);
        rc.encode_bit(&mut self.is_rep[s], 0);
        self.match_len.encode(rc, len, ps);
        self.encode_distance(rc, (distance - 1) as u32, len);
    }

    pub(crate) fn encode_short_rep(&mut self, rc: &mut RangeEncoder, state: State, ps: usize) {
        let s = state.index();
        rc.encode_bit(&mut self.is_match[s * POS_STATES + ps], 1);
        rc.encode_bit(&mut self.is_rep[s], 1);
        rc.encode_bit(&mut self.is_rep0[s], 0);
        rc.encode_bit(&mut self.is_rep0_long[s * POS_STATES + ps], 0);
    }

    pub(crate) fn encode_rep(&mut self, rc: &mut RangeEncoder, state: State, ps: usize, rep_index: usize, len: usize) {
        let s = state.index();
        rc.encode_bit(&mut self.is_match[s * POS_STATES + ps], 1);
        rc.encode_bit(&mut self.is_rep[s], 1);
        if rep_index == 0 {
            rc.encode_bit(&mut self.is_rep0[s], 0);
            rc.encode_bit(&mut self.is_rep0_long[s * POS_STATES + ps], 1);
        } else {
            rc.encode_bit(&mut self.is_rep0[s], 1);
            if rep_index == 1 {
                rc.encode_bit(&mut self.is_rep1[s], 0);
            } else {
                rc.encode_bit(&mut self.is_rep1[s], 1);
                rc.encode_bit(&mut self.is_rep2[s], (rep_index - 2) as u32);
            }
        }
        self.rep_len.encode(rc, len, ps);
    }

    #[inline]
    pub(crate) fn literal_flag_price(&self, state: State, ps: usize) -> u32 {
        bit_price(self.is_match[state.index() * POS_STATES + ps], 0)
    }

    pub(crate) fn literal_price(&self, state: State, byte: u8, prev_byte: u8, match_byte: u8) -> u32 {
        let base = 0x300 * (usize::from(prev_byte) >> (8 - LIT_CONTEXT_BITS));
        let probs = &self.literal[base..base + 0x300];
        if state.is_literal() {
            return tree_price(probs, 8, u32::from(byte));
        }
        let mut price = 0;
        let mut offs = 0x100u32;
        let mut symbol = 1u32;
        let mut mb = u32::from(match_byte);
        for i in (0..8).rev() {
            mb <<= 1;
            let match_bit = mb & offs;
            let bit = u32::from(byte >> i) & 1;
            price += bit_price(probs[(offs + match_bit + symbol) as usize], bit);
            symbol = (symbol << 1) | bit;
            offs &= if bit == 0 { !match_bit } else { match_bit };
        }
        price
    }

    /// Flag bits of a fresh match, without length and distance.
    #[inline]
    pub(crate) fn match_flags_price(&self, state: State, ps: usize) -> u32 {
        let s = state.index();
        bit_price(self.is_match[s * POS_STATES + ps], 1) + bit_price(self.is_rep[s], 0)
    }

    #[inline]
    pub(crate) fn short_rep_price(&self, state: State, ps: usize) -> u32 {
        let s = state.index();
        bit_price(self.is_match[s * POS_STATES + ps], 1)
            + bit_price(self.is_rep[s], 1)
            + bit_price(self.is_rep0[s], 0)
            + bit_price(self.is_rep0_long[s * POS_STATES + ps], 0)
    }

    /// Flag bits of a repeat match, without the length.
    pub(crate) fn rep_flags_price(&self, state: State, ps: usize, rep_index: usize) -> u32 {
        let s = state.index();
        let mut price = bit_price(self.is_match[s * POS_STATES + ps], 1) + bit_price(self.is_rep[s], 1);
        if rep_index == 0 {
            price += bit_price(self.is_rep0[s], 0) + bit_price(self.is_rep0_long[s * POS_STATES + ps], 1);
        } else {
            price += bit_price(self.is_rep0[s], 1);
            if rep_index == 1 {
                price += bit_price(self.is_rep1[s], 0);
            } else {
                price += bit_price(self.is_rep1[s], 1) + bit_price(self.is_rep2[s], (rep_index - 2) as u32);
            }
        }
        price
    }

    pub(crate) fn refresh_len_prices(&self, prices: &mut Prices) {
        self.match_len.fill_prices(&mut prices.match_len);
        self.rep_len.fill_prices(&mut prices.rep_len);
    }

    pub(crate) fn refresh_distance_prices(&self, prices: &mut Prices) {
        for len_state in 0..LEN_STATES {
            let probs = &self.slot[len_state * SLOTS..(len_state + 1) * SLOTS];
            for slot in 0..SLOTS as u32 {
                let mut price = tree_price(probs, SLOT_BITS, slot);
                if slot >= END_MODELLED_SLOT {
                    price += ((slot >> 1) - 1 - ALIGN_BITS) << PRICE_SHIFT;
                }
                prices.slot[len_state * SLOTS + slot as usize] = price;
            }
            for dist in 0..FULL_DISTANCES {
                let slot = distance_slot(dist);
                let mut price = prices.slot[len_state * SLOTS + slot as usize];
                if slot >= FIRST_MODELLED_SLOT {
                    let footer_bits = (slot >> 1) - 1;
                    let slot_base = (2 | (slot & 1)) << footer_bits;
                    let offset = (slot_base - slot) as usize;
                    price += reverse_tree_price(&self.footer[offset..], footer_bits, dist - slot_base);
                }
                prices.full_distance[len_state * FULL_DISTANCES as usize + dist as usize] = price;
            }
        }
        for (rem, slot) in prices.align.iter_mut().enumerate() {
            *slot = reverse_tree_price(&self.align, ALIGN_BITS, rem as u32);
        }
    }

    fn encode_distance(&mut self, rc: &mut RangeEncoder, dist: u32, len: usize) {
        let len_state = (len - MIN_REP).min(LEN_STATES - 1);
        let slot = distance_slot(dist);
        let base = len_state << SLOT_BITS;
        rc.encode_tree(&mut self.slot[base..base + (1 << SLOT_BITS)], SLOT_BITS, slot);
        if slot < FIRST_MODELLED_SLOT {
            return;
        }
        let footer_bits = (slot >> 1) - 1;
        let slot_base = (2 | (slot & 1)) << footer_bits;
        let rem = dist - slot_base;
        if slot < END_MODELLED_SLOT {
            let offset = (slot_base - slot) as usize;
            rc.encode_reverse_tree(&mut self.footer[offset..], footer_bits, rem);
        } else {
            rc.encode_direct(rem >> ALIGN_BITS, footer_bits - ALIGN_BITS);
            rc.encode_reverse_tree(&mut self.align, ALIGN_BITS, rem & ((1 << ALIGN_BITS) - 1));
        }
    }

    pub(crate) fn decode_is_match(
        &mut self,
        rc: &mut RangeDecoder<'_>,
        state: State,
        ps: usize,
    ) -> Result<bool, Truncated> {
        Ok(rc.decode_bit(&mut self.is_match[state.index() * POS_STATES + ps])? == 1)
    }

    pub(crate) fn decode_literal(
        &mut self,
        rc: &mut RangeDecoder<'_>,
        state: State,
        prev_byte: u8,
        match_byte: u8,
    ) -> Result<u8, Truncated> {
        let probs = self.literal_probs(prev_byte);
        if state.is_literal() {
            return Ok(rc.decode_tree(probs, 8)? as u8);
        }
        let mut offs = 0x100u32;
        let mut symbol = 1u32;
        let mut mb = u32::from(match_byte);
        while symbol < 0x100 {
            mb <<= 1;
            let match_bit = mb & offs;
            let bit = rc.decode_bit(&mut probs[(offs + match_bit + symbol) as usize])?;
            symbol = (symbol << 1) | bit;
            offs &= if bit == 0 { !match_bit } else { match_bit };
        }
        Ok(symbol as u8)
    }

    pub(crate) fn decode_match_kind(
        &mut self,
        rc: &mut RangeDecoder<'_>,
        state: State,
        ps: usize,
    ) -> Result<MatchKind, Truncated> {
        let s = state.index();
        if rc.decode_bit(&mut self.is_rep[s])? == 0 {
            return Ok(MatchKind::Fresh);
        }
        if rc.decode_bit(&mut self.is_rep0[s])? == 0 {
            if rc.decode_bit(&mut self.is_rep0_long[s * POS_STATES + ps])? == 0 {
                return Ok(MatchKind::ShortRep);
            }
            return Ok(MatchKind::Rep(0));
        }
        if rc.decode_bit(&mut self.is_rep1[s])? == 0 {
            return Ok(MatchKind::Rep(1));
        }
        Ok(MatchKind::Rep(2 + rc.decode_bit(&mut self.is_rep2[s])? as usize))
    }

    pub(crate) fn decode_match_len(&mut self, rc: &mut RangeDecoder<'_>, ps: usize) -> Result<usize, Truncated> {
        self.match_len.decode(rc, ps)
    }

    pub(crate) fn decode_rep_len(&mut self, rc: &mut RangeDecoder<'_>, ps: usize) -> Result<usize, Truncated> {
        self.rep_len.decode(rc, ps)
    }

    /// Returns the 1-based distance.
    pub(crate) fn decode_distance(&mut self, rc: &mut RangeDecoder<'_>, len: usize) -> Result<u64, Truncated> {
        let len_state = (len - MIN_REP).min(LEN_STATES - 1);
        let base = len_state << SLOT_BITS;
        let slot = rc.decode_tree(&mut self.slot[base..base + (1 << SLOT_BITS)], SLOT_BITS)?;
        if slot < FIRST_MODELLED_SLOT {
            return Ok(u64::from(slot) + 1);
        }
        let footer_bits = (slot >> 1) - 1;
        let slot_base = (2 | (slot & 1)) << footer_bits;
        let rem = if slot < END_MODELLED_SLOT {
            let offset = (slot_base - slot) as usize;
            rc.decode_reverse_tree(&mut self.footer[offset..], footer_bits)?
        } else {
            let high = rc.decode_direct(footer_bits - ALIGN_BITS)?;
            (high << ALIGN_BITS) | rc.decode_reverse_tree(&mut self.align, ALIGN_BITS)?
        };
        Ok(u64::from(slot_base) + u64::from(rem) + 1)
    }
}

#[inline]
pub(crate) fn distance_slot(dist: u32) -> u32 {
    if dist < FIRST_MODELLED_SLOT {
        return dist;
    }
    let top = 31 - dist.leading_zeros();
    (top << 1) | ((dist >> (top - 1)) & 1)
}
