use super::model::{pos_state, MatchKind, Model, State, REPS};
use super::range::{RangeDecoder, Truncated};
use super::CodecError;

impl From<Truncated> for CodecError {
    fn from(_: Truncated) -> Self {
        CodecError::Truncated
    }
}

/// Decodes a raw token stream into exactly `len` bytes.
pub(crate) fn decode_tokens(stream: &[u8], len: usize) -> Result<Vec<u8>, CodecError> {
    let mut out: Vec<u8> = Vec::with_capacity(len);
    if len == 0 {
        return Ok(out);
    }
    let mut rc = RangeDecoder::new(stream)?;
    let mut model = Model::new();
    let mut state = State::default();
    let mut reps = [0usize; REPS];

    while out.len() < len {
        let pos = out.len();
        let ps = pos_state(pos);
        if !model.decode_is_match(&mut rc, state, ps)? {
            let prev = out.last().copied().unwrap_or(0);
            let match_byte = if reps[0] != 0 && reps[0] <= pos {
                out[pos - reps[0]]
            } else {
                0
            };
            out.push(model.decode_literal(&mut rc, state, prev, match_byte)?);
            state = state.after_literal();
            continue;
        }
        let copy_len = match model.decode_match_kind(&mut rc, state, ps)? {
            MatchKind::ShortRep => {
                state = state.after_short_rep();
                1
            }
            MatchKind::Rep(idx) => {
                let distance = reps[idx];
                reps.copy_within(0..idx, 1);
                reps[0] = distance;
                state = state.after_rep();
                model.decode_rep_len(&mut rc, ps)?
            }
            MatchKind::Fresh => {
                let match_len = model.decode_match_len(&mut rc, ps)?;
                let distance = model.decode_distance(&mut rc, match_len)?;
                reps.copy_within(0..REPS - 1, 1);
                reps[0] = usize::try_from(distance).map_err(|_| CodecError::BadDistance)?;
                state = state.after_match();
                match_len
            }
        };
        let distance = reps[0];
        if distance == 0 || distance > pos {
            return Err(CodecError::BadDistance);
        }
        if pos + copy_len > len {
            return Err(CodecError::Overrun);
        }
        let start = pos - distance;
        if distance >= copy_len {
            out.extend_from_within(start..start + copy_len);
        } else {
            for i in 0..copy_len {
                let b = out[start + i];
                out.push(b);
            }
        }
    }
    Ok(out)
}
