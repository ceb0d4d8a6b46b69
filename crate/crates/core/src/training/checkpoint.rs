//! Checkpoints: a model container followed by an optimizer appendix.
//!
//! ```text
//! <PMM1 model container>
//! "OPT1"
//! u64 epochs_done, u64 steps_done, f64 lr, u64 average_count
//! u8 has_average, then (if set) u32 count, count × (u64 len, len × f64)
//! u64 FNV-1a checksum of the appendix bytes
//! ```

use std::fs;
use std::path::Path;

use crate::encoders::{model_from_bytes, model_to_bytes, ByteReader, ByteWriter, EncoderError, ModelState};

use super::{OptimizerState, TrainError};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"OPT1";

pub fn checkpoint_to_bytes(state: &ModelState, opt: &OptimizerState) -> Vec<u8> {
    let mut bytes = model_to_bytes(state);
    let mut w = ByteWriter::new();
    w.bytes(CHECKPOINT_MAGIC);
    w.u64(opt.epochs_done);
    w.u64(opt.steps_done);
    w.f64(opt.lr);
    w.u64(opt.average_count);
    match &opt.average {
        None => w.u8(0),
        Some(tensors) => {
            w.u8(1);
            w.u32(tensors.len() as u32);
            for t in tensors {
                w.u64(t.len() as u64);
                t.iter().for_each(|&x| w.f64(x));
            }
        }
    }
    w.checksum();
    bytes.extend_from_slice(&w.buf);
    bytes
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<(ModelState, OptimizerState), TrainError> {
    let (state, used) = model_from_bytes(bytes)?;
    let mut r = ByteReader::new(&bytes[used..]);
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(EncoderError::Format("missing optimizer appendix".into()).into());
    }
    let epochs_done = r.u64()?;
    let steps_done = r.u64()?;
    let lr = r.f64()?;
    let average_count = r.u64()?;
    let average = match r.u8()? {
        0 => None,
        1 => {
            let count = r.u32()? as usize;
            let mut tensors = Vec::with_capacity(count.min(1 << 16));
            for _ in 0..count {
                let len = r.u64()? as usize;
                if len.saturating_mul(8) > bytes.len() {
                    return Err(EncoderError::Format("average tensor too large".into()).into());
                }
                tensors.push((0..len).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?);
            }
            Some(tensors)
        }
        f => return Err(EncoderError::Format(format!("bad average flag {f}")).into()),
    };
    r.verify_checksum(0)?;
    if r.pos != r.buf.len() {
        return Err(EncoderError::Format("trailing bytes after checkpoint".into()).into());
    }
    Ok((state, OptimizerState { epochs_done, steps_done, lr, average_count, average }))
}

pub fn write_checkpoint(path: impl AsRef<Path>, state: &ModelState, opt: &OptimizerState) -> Result<(), TrainError> {
    fs::write(path, checkpoint_to_bytes(state, opt)).map_err(EncoderError::from)?;
    Ok(())
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<(ModelState, OptimizerState), TrainError> {
    let bytes = fs::read(path).map_err(EncoderError::from)?;
    checkpoint_from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Font, PairRecord, SplitTag, Token};
    use crate::encoders::{build_vocab, EncoderConfig};

    #[test]
    fn round_trip_and_corruption() {
        let pair = PairRecord {
            pair_id: "p".into(),
            article_id: "a".into(),
            categories: vec![],
            statement: vec![Token::math("x", Font::Normal).unwrap(), Token::text("if").unwrap()],
            proof: vec![],
        };
        let vocab = build_vocab(&Corpus::new(vec![pair], SplitTag::Unsplit).unwrap(), 1).unwrap();
        let state =
            ModelState::init(vocab, EncoderConfig { d: 4, heads: 2, d_k: 2, ..EncoderConfig::desk() }, 9).unwrap();
        for average in [None, Some(state.tensors().iter().map(|t| t.iter().map(|x| x / 3.0).collect()).collect())] {
            let opt = OptimizerState { epochs_done: 3, steps_done: 17, lr: 0.1 * 0.99, average_count: 5, average };
            let bytes = checkpoint_to_bytes(&state, &opt);
            let (s, o) = checkpoint_from_bytes(&bytes).unwrap();
            assert_eq!(s, state);
            assert_eq!(o, opt);
            let mut bad = bytes.clone();
            let last = bad.len() - 12;
            bad[last] ^= 0x40;
            assert!(checkpoint_from_bytes(&bad).is_err());
        }
    }
}
