//! Binary-tree match finder and a price-driven optimal parser.
//!
//! The parser works on blocks of up to [`OPT_LIMIT`] positions. Inside a block
//! every reachable position keeps the cheapest known way to get there under a
//! snapshot of the model's prices, then the cheapest path is emitted with the
//! live model.

use super::model::{pos_state, Model, Prices, State, MAX_MATCH, MIN_MATCH, MIN_REP, REPS};
use super::range::RangeEncoder;

const NONE: u32 = u32::MAX;
const CHAIN_DEPTH: usize = 48;
const NICE_LEN: usize = 64;
const OPT_LIMIT: usize = 4096;
const PRICE_REFRESH: u32 = 64;
const INFINITE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Candidate {
    len: usize,
    distance: usize,
}

/// Binary-tree match finder over a cyclic buffer of positions.
///
/// Each hash bucket roots a tree of earlier positions ordered by the bytes
/// that follow them, so one descent yields matches of increasing length.
struct MatchFinder<'a> {
    data: &'a [u8],
    window: usize,
    head: Vec<u32>,
    son: Vec<u32>,
    cyclic: usize,
    hash_shift: u32,
    next_insert: usize,
}

impl<'a> MatchFinder<'a> {
    fn new(data: &'a [u8], window: usize) -> Self {
        let bits = (usize::BITS - data.len().leading_zeros()).clamp(12, 24);
        let cyclic = data.len().min(window.saturating_add(1)).max(1);
        Self {
            data,
            window,
            head: vec![NONE; 1 << bits],
            son: vec![NONE; 2 * cyclic],
            cyclic,
            hash_shift: 32 - bits,
            next_insert: 0,
        }
    }

    #[inline]
    fn hash(&self, pos: usize) -> usize {
        let d = &self.data[pos..pos + 4];
        let v = u32::from_le_bytes([d[0], d[1], d[2], d[3]]);
        (v.wrapping_mul(0x9E37_79B1) >> self.hash_shift) as usize
    }

    /// Inserts every position before `end` not yet in the trees.
    fn insert_until(&mut self, end: usize) {
        while self.next_insert < end {
            self.descend(self.next_insert, None);
            self.next_insert += 1;
        }
    }

    /// Matches at `pos` in order of increasing length; inserts `pos`.
    fn find(&mut self, pos: usize, out: &mut Vec<Candidate>) {
        out.clear();
        self.insert_until(pos);
        self.descend(pos, Some(out));
        self.next_insert = pos + 1;
        let avail = MAX_MATCH.min(self.data.len() - pos);
        if let Some(last) = out.last_mut() {
            if last.len == NICE_LEN && avail > NICE_LEN {
                last.len = common_prefix(self.data, pos - last.distance, pos, NICE_LEN, avail);
            }
        }
    }

    /// Re-roots the tree for `pos` at `pos`, optionally reporting matches.
    fn descend(&mut self, pos: usize, mut out: Option<&mut Vec<Candidate>>) {
        let avail = self.data.len() - pos;
        if avail < MIN_MATCH {
            return;
        }
        let limit = NICE_LEN.min(avail);
        let h = self.hash(pos);
        let mut cur = self.head[h];
        self.head[h] = pos as u32;

        let cyc_pos = pos % self.cyclic;
        let mut ptr0 = 2 * cyc_pos + 1;
        let mut ptr1 = 2 * cyc_pos;
        let (mut len0, mut len1) = (0, 0);
        let mut best = MIN_MATCH - 1;
        let mut depth = CHAIN_DEPTH;
        loop {
            let delta = pos.wrapping_sub(cur as usize);
            if cur == NONE || depth == 0 || delta > self.window || delta >= self.cyclic {
                self.son[ptr0] = NONE;
                self.son[ptr1] = NONE;
                return;
            }
            depth -= 1;
            let pair = 2 * ((cyc_pos + self.cyclic - delta) % self.cyclic);
            let c = cur as usize;
            let mut len = len0.min(len1);
            if self.data[c + len] == self.data[pos + len] {
                len = common_prefix(self.data, c, pos, len + 1, limit);
                if len > best {
                    best = len;
                    if let Some(out) = out.as_mut() {
                        out.push(Candidate { len, distance: delta });
                    }
                }
                if len == limit {
                    self.son[ptr1] = self.son[pair];
                    self.son[ptr0] = self.son[pair + 1];
                    return;
                }
            }
            if self.data[c + len] < self.data[pos + len] {
                self.son[ptr1] = cur;
                ptr1 = pair + 1;
                cur = self.son[ptr1];
                len1 = len;
            } else {
                self.son[ptr0] = cur;
                ptr0 = pair;
                cur = self.son[ptr0];
                len0 = len;
            }
        }
    }
}

/// Length of the common prefix of `data[a..]` and `data[b..]`, known to be at least `from`.
#[inline]
fn common_prefix(data: &[u8], a: usize, b: usize, from: usize, max_len: usize) -> usize {
    let mut len = from;
    while len + 8 <= max_len {
        let x = u64::from_le_bytes(data[a + len..a + len + 8].try_into().unwrap());
        let y = u64::from_le_bytes(data[b + len..b + len + 8].try_into().unwrap());
        let diff = x ^ y;
        if diff != 0 {
            return len + (diff.trailing_zeros() / 8) as usize;
        }
        len += 8;
    }
    while len < max_len && data[a + len] == data[b + len] {
        len += 1;
    }
    len
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Token {
    Literal,
    ShortRep,
    Rep { index: usize, len: usize },
    Match { distance: usize, len: usize },
}

impl Token {
    fn len(self) -> usize {
        match self {
            Token::Literal | Token::ShortRep => 1,
            Token::Rep { len, .. } | Token::Match { len, .. } => len,
        }
    }
}

#[derive(Clone, Copy)]
struct Node {
    price: u32,
    prev: usize,
    token: Token,
    state: State,
    reps: [usize; REPS],
}

impl Node {
    const UNREACHED: Node = Node {
        price: INFINITE,
        prev: 0,
        token: Token::Literal,
        state: State::INITIAL,
        reps: [0; REPS],
    };
}

fn apply(token: Token, state: State, reps: &mut [usize; REPS]) -> State {
    match token {
        Token::Literal => state.after_literal(),
        Token::ShortRep => state.after_short_rep(),
        Token::Rep { index, .. } => {
            let distance = reps[index];
            reps.copy_within(0..index, 1);
            reps[0] = distance;
            state.after_rep()
        }
        Token::Match { distance, .. } => {
            reps.copy_within(0..REPS - 1, 1);
            reps[0] = distance;
            state.after_match()
        }
    }
}

struct Encoder<'a> {
    data: &'a [u8],
    finder: MatchFinder<'a>,
    model: Model,
    prices: Prices,
    since_refresh: u32,
    rc: RangeEncoder,
    state: State,
    reps: [usize; REPS],
    nodes: Vec<Node>,
    matches: Vec<Candidate>,
    pending: Option<(usize, Vec<Candidate>)>,
    path: Vec<Token>,
}

impl<'a> Encoder<'a> {
    fn rep_len(&self, pos: usize, distance: usize) -> usize {
        if distance == 0 || distance > pos || pos + MIN_REP > self.data.len() {
            return 0;
        }
        let src = pos - distance;
        if self.data[src] != self.data[pos] || self.data[src + 1] != self.data[pos + 1] {
            return 0;
        }
        common_prefix(self.data, src, pos, 2, MAX_MATCH.min(self.data.len() - pos))
    }

    fn load_matches(&mut self, pos: usize) {
        if let Some((p, cands)) = self.pending.take() {
            if p == pos {
                self.matches = cands;
                return;
            }
        }
        self.finder.find(pos, &mut self.matches);
    }

    fn run(mut self) -> Vec<u8> {
        let n = self.data.len();
        let mut pos = 0;
        while pos < n {
            if self.since_refresh >= PRICE_REFRESH {
                self.model.refresh_len_prices(&mut self.prices);
                self.model.refresh_distance_prices(&mut self.prices);
                self.since_refresh = 0;
            }
            self.load_matches(pos);

            let (best_rep, best_rep_idx) = (0..REPS)
                .map(|i| (self.rep_len(pos, self.reps[i]), i))
                .max_by_key(|&(len, i)| (len, std::cmp::Reverse(i)))
                .unwrap_or((0, 0));
            if best_rep >= NICE_LEN {
                self.emit(
                    pos,
                    Token::Rep {
                        index: best_rep_idx,
                        len: best_rep,
                    },
                );
                pos += best_rep;
                continue;
            }
            if let Some(&m) = self.matches.last() {
                if m.len >= NICE_LEN {
                    self.emit(
                        pos,
                        Token::Match {
                            distance: m.distance,
                            len: m.len,
                        },
                    );
                    pos += m.len;
                    continue;
                }
            }
            pos += self.parse_block(pos);
        }
        self.rc.finish()
    }

    /// Runs the optimal parse from `pos`, emits it, and returns the bytes covered.
    fn parse_block(&mut self, pos: usize) -> usize {
        let n = self.data.len();
        self.nodes.clear();
        self.nodes.push(Node {
            price: 0,
            prev: 0,
            token: Token::Literal,
            state: self.state,
            reps: self.reps,
        });
        let mut end = 0;
        let mut cur = 0;
        loop {
            let p = pos + cur;
            if cur > 0 {
                let node = self.nodes[cur];
                let mut reps = self.nodes[node.prev].reps;
                let state = apply(node.token, self.nodes[node.prev].state, &mut reps);
                self.nodes[cur].state = state;
                self.nodes[cur].reps = reps;
                if cur >= end || cur >= OPT_LIMIT || p >= n {
                    break;
                }
                self.finder.find(p, &mut self.matches);
                let long_rep = reps.iter().any(|&d| self.rep_len(p, d) >= NICE_LEN);
                if long_rep || self.matches.last().is_some_and(|m| m.len >= NICE_LEN) {
                    self.pending = Some((p, std::mem::take(&mut self.matches)));
                    break;
                }
            }
            end = end.max(self.relax_from(pos, cur));
            cur += 1;
        }
        self.emit_path(pos, cur);
        cur
    }

    /// Relaxes every token starting at node `cur`; returns the furthest node reached.
    fn relax_from(&mut self, pos: usize, cur: usize) -> usize {
        let p = pos + cur;
        let node = self.nodes[cur];
        let (state, reps, base) = (node.state, node.reps, node.price);
        let ps = pos_state(p);
        let byte = self.data[p];
        let prev_byte = if p > 0 { self.data[p - 1] } else { 0 };
        let rep0_ok = reps[0] != 0 && reps[0] <= p;
        let match_byte = if rep0_ok { self.data[p - reps[0]] } else { 0 };

        let mut furthest = cur + 1;
        self.reach(cur + 1);
        let literal = base
            + self.model.literal_flag_price(state, ps)
            + self.model.literal_price(state, byte, prev_byte, match_byte);
        self.relax(cur + 1, literal, cur, Token::Literal);
        if rep0_ok && match_byte == byte {
            let price = base + self.model.short_rep_price(state, ps);
            self.relax(cur + 1, price, cur, Token::ShortRep);
        }

        for (index, &rep) in reps.iter().enumerate() {
            let len = self.rep_len(p, rep);
            if len < MIN_REP {
                continue;
            }
            let flags = base + self.model.rep_flags_price(state, ps, index);
            self.reach(cur + len);
            furthest = furthest.max(cur + len);
            for l in MIN_REP..=len {
                let price = flags + self.prices.rep_len(l, ps);
                self.relax(cur + l, price, cur, Token::Rep { index, len: l });
            }
        }

        if let Some(longest) = self.matches.last().copied() {
            let flags = base + self.model.match_flags_price(state, ps);
            self.reach(cur + longest.len);
            furthest = furthest.max(cur + longest.len);
            let mut l = MIN_MATCH;
            for i in 0..self.matches.len() {
                let m = self.matches[i];
                while l <= m.len {
                    let price = flags + self.prices.match_len(l, ps) + self.prices.distance(m.distance, l);
                    self.relax(
                        cur + l,
                        price,
                        cur,
                        Token::Match {
                            distance: m.distance,
                            len: l,
                        },
                    );
                    l += 1;
                }
            }
        }
        furthest
    }

    #[inline]
    fn reach(&mut self, index: usize) {
        if self.nodes.len() <= index {
            self.nodes.resize(index + 1, Node::UNREACHED);
        }
    }

    #[inline]
    fn relax(&mut self, index: usize, price: u32, prev: usize, token: Token) {
        let node = &mut self.nodes[index];
        if price < node.price {
            node.price = price;
            node.prev = prev;
            node.token = token;
        }
    }

    fn emit_path(&mut self, pos: usize, end: usize) {
        self.path.clear();
        let mut at = end;
        while at > 0 {
            let node = self.nodes[at];
            self.path.push(node.token);
            at = node.prev;
        }
        let mut p = pos;
        while let Some(token) = self.path.pop() {
            self.emit(p, token);
            p += token.len();
        }
    }

    fn emit(&mut self, pos: usize, token: Token) {
        let ps = pos_state(pos);
        match token {
            Token::Literal => {
                let prev = if pos > 0 { self.data[pos - 1] } else { 0 };
                let rep0 = self.reps[0];
                let match_byte = if rep0 != 0 && rep0 <= pos {
                    self.data[pos - rep0]
                } else {
                    0
                };
                self.model
                    .encode_literal(&mut self.rc, self.state, ps, self.data[pos], prev, match_byte);
            }
            Token::ShortRep => self.model.encode_short_rep(&mut self.rc, self.state, ps),
            Token::Rep { index, len } => {
                self.model.encode_rep(&mut self.rc, self.state, ps, index, len);
                self.since_refresh += 1;
            }
            Token::Match { distance, len } => {
                self.model.encode_match(&mut self.rc, self.state, ps, distance, len);
                self.since_refresh += 1;
            }
        }
        self.state = apply(token, self.state, &mut self.reps);
    }
}

/// Encodes `data` into a raw token stream (no header).
pub(crate) fn encode_tokens(data: &[u8], window: usize, out: Vec<u8>) -> Vec<u8> {
    Encoder {
        data,
        finder: MatchFinder::new(data, window),
        model: Model::new(),
        prices: Prices::new(),
        since_refresh: PRICE_REFRESH,
        rc: RangeEncoder::new(out),
        state: State::INITIAL,
        reps: [0; REPS],
        nodes: Vec::with_capacity(OPT_LIMIT + MAX_MATCH + 1),
        matches: Vec::new(),
        pending: None,
        path: Vec::new(),
    }
    .run()
}
