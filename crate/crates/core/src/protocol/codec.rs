//! Binary frames exchanged between master and workers.
//!
//! Every frame starts with a one-byte tag and a little-endian `u32` round.
//! Labels are bit-packed at `ceil(log2 K)` bits each (LSB first), counts are
//! `u64` and reals are `f64`. [`Message::payload_bits`] is the information
//! content that communication accounting charges; framing bytes and the
//! padding of the last label byte are not charged.

use thiserror::Error;

use crate::labels::LabelVector;
use crate::matrix::Square;
use crate::worker::{Mode, ModelParams, WorkerSummary};

const TAG_LABELS: u8 = 1;
const TAG_SUMMARY: u8 = 2;
const TAG_PARAMS: u8 = 3;
const TAG_LOCAL: u8 = 4;
const TAG_SHUTDOWN: u8 = 5;

/// Largest K a frame may declare.
const MAX_K: u32 = 1 << 16;

/// With K = 1 labels take no bits, so the declared length is the only bound
/// on what a frame expands to.
pub const MAX_EMPTY_LABELS: usize = 1 << 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("frame truncated")]
    Truncated,
    #[error("unknown message tag {0}")]
    UnknownTag(u8),
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
    #[error("invalid field: {0}")]
    Invalid(&'static str),
}

/// Bits per packed label for `k` communities: `ceil(log2 k)`, 0 when `k <= 1`.
pub fn label_width(k: usize) -> u32 {
    if k <= 1 {
        0
    } else {
        usize::BITS - (k - 1).leading_zeros()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Message {
    /// Master to worker: the current global label vector.
    Labels { round: u32, k: u32, labels: LabelVector },
    /// Worker to master: `O_r` and `n_r`.
    Summary {
        round: u32,
        worker: u32,
        summary: WorkerSummary,
    },
    /// Master to worker: aggregated `(pi, Lambda)` or `(pi, Psi)`.
    Params { round: u32, params: ModelParams },
    /// Worker to master: updated in-worker labels and the worker's final
    /// pseudo log-likelihood.
    LocalLabels {
        round: u32,
        worker: u32,
        k: u32,
        labels: LabelVector,
        objective: f64,
    },
    Shutdown,
}

impl Message {
    /// Charged size in bits.
    pub fn payload_bits(&self) -> u64 {
        match self {
            Message::Labels { k, labels, .. } => labels.len() as u64 * label_width(*k as usize) as u64,
            Message::Summary { summary, .. } => {
                64 * (summary.block_counts.len() + summary.node_counts.len()) as u64
            }
            Message::Params { params, .. } => 64 * (params.pi.len() + params.rates.as_slice().len()) as u64,
            Message::LocalLabels { k, labels, .. } => {
                labels.len() as u64 * label_width(*k as usize) as u64 + 64
            }
            Message::Shutdown => 0,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            Message::Labels { round, k, labels } => {
                out.push(TAG_LABELS);
                put_u32(&mut out, *round);
                put_u32(&mut out, *k);
                put_labels(&mut out, labels, *k);
            }
            Message::Summary {
                round,
                worker,
                summary,
            } => {
                out.push(TAG_SUMMARY);
                put_u32(&mut out, *round);
                put_u32(&mut out, *worker);
                put_u32(&mut out, summary.k as u32);
                for &c in summary.block_counts.iter().chain(&summary.node_counts) {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            Message::Params { round, params } => {
                out.push(TAG_PARAMS);
                put_u32(&mut out, *round);
                out.push(match params.mode {
                    Mode::Sbm => 0,
                    Mode::Dcsbm => 1,
                });
                put_u32(&mut out, params.k() as u32);
                for &x in params.pi.iter().chain(params.rates.as_slice()) {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Message::LocalLabels {
                round,
                worker,
                k,
                labels,
                objective,
            } => {
                out.push(TAG_LOCAL);
                put_u32(&mut out, *round);
                put_u32(&mut out, *worker);
                out.extend_from_slice(&objective.to_le_bytes());
                put_u32(&mut out, *k);
                put_labels(&mut out, labels, *k);
            }
            Message::Shutdown => out.push(TAG_SHUTDOWN),
        }
        out
    }

    /// Strict decoder: rejects unknown tags, out-of-range labels, negative or
    /// non-finite parameters, and frames with missing or extra bytes.
    pub fn decode(bytes: &[u8]) -> Result<Self, CodecError> {
        let mut r = Reader { bytes, pos: 0 };
        let tag = r.u8()?;
        if tag == TAG_SHUTDOWN {
            r.finish()?;
            return Ok(Message::Shutdown);
        }
        let round = r.u32()?;
        let msg = match tag {
            TAG_LABELS => {
                let k = r.k()?;
                let labels = r.labels(k)?;
                Message::Labels { round, k, labels }
            }
            TAG_SUMMARY => {
                let worker = r.u32()?;
                let k = r.k()? as usize;
                let cells = k.checked_mul(k + 1).ok_or(CodecError::Invalid("k"))?;
                if r.remaining() != cells.checked_mul(8).ok_or(CodecError::Invalid("k"))? {
                    return Err(CodecError::Truncated);
                }
                let mut values = (0..cells).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
                let node_counts = values.split_off(k * k);
                Message::Summary {
                    round,
                    worker,
                    summary: WorkerSummary {
                        k,
                        block_counts: values,
                        node_counts,
                    },
                }
            }
            TAG_PARAMS => {
                let mode = match r.u8()? {
                    0 => Mode::Sbm,
                    1 => Mode::Dcsbm,
                    _ => return Err(CodecError::Invalid("mode")),
                };
                let k = r.k()? as usize;
                let cells = k.checked_mul(k + 1).ok_or(CodecError::Invalid("k"))?;
                if r.remaining() != cells.checked_mul(8).ok_or(CodecError::Invalid("k"))? {
                    return Err(CodecError::Truncated);
                }
                let pi = (0..k).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
                let mut rates = Square::zeros(k);
                for l in 0..k {
                    for c in 0..k {
                        rates[(l, c)] = r.f64()?;
                    }
                }
                if pi.iter().chain(rates.as_slice()).any(|x| !(x.is_finite() && *x >= 0.0)) {
                    return Err(CodecError::Invalid("parameter value"));
                }
                Message::Params {
                    round,
                    params: ModelParams { mode, pi, rates },
                }
            }
            TAG_LOCAL => {
                let worker = r.u32()?;
                let objective = r.f64()?;
                let k = r.k()?;
                let labels = r.labels(k)?;
                Message::LocalLabels {
                    round,
                    worker,
                    k,
                    labels,
                    objective,
                }
            }
            other => return Err(CodecError::UnknownTag(other)),
        };
        r.finish()?;
        Ok(msg)
    }
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_labels(out: &mut Vec<u8>, labels: &LabelVector, k: u32) {
    put_u32(out, labels.len() as u32);
    let width = label_width(k as usize);
    let total_bits = labels.len() as u64 * width as u64;
    let start = out.len();
    out.resize(start + total_bits.div_ceil(8) as usize, 0);
    let packed = &mut out[start..];
    let mut bit = 0usize;
    for &l in labels.iter() {
        debug_assert!(k == 0 || l < k.max(1));
        for b in 0..width {
            if (l >> b) & 1 == 1 {
                packed[bit / 8] |= 1 << (bit % 8);
            }
            bit += 1;
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        if self.remaining() < n {
            return Err(CodecError::Truncated);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn k(&mut self) -> Result<u32, CodecError> {
        let k = self.u32()?;
        if k == 0 || k > MAX_K {
            return Err(CodecError::Invalid("k"));
        }
        Ok(k)
    }

    fn labels(&mut self, k: u32) -> Result<LabelVector, CodecError> {
        let len = self.u32()? as usize;
        let width = label_width(k as usize) as usize;
        if width == 0 && len > MAX_EMPTY_LABELS {
            return Err(CodecError::Invalid("label count"));
        }
        let bytes = (len as u64 * width as u64).div_ceil(8);
        if bytes != self.remaining() as u64 {
            return Err(CodecError::Truncated);
        }
        let packed = self.take(bytes as usize)?;
        let mut labels = Vec::with_capacity(len);
        let mut bit = 0usize;
        for _ in 0..len {
            let mut l = 0u32;
            for b in 0..width {
                if packed[bit / 8] >> (bit % 8) & 1 == 1 {
                    l |= 1 << b;
                }
                bit += 1;
            }
            if l >= k {
                return Err(CodecError::Invalid("label out of range"));
            }
            labels.push(l);
        }
        if bit % 8 != 0 && packed[bit / 8] >> (bit % 8) != 0 {
            return Err(CodecError::Invalid("non-zero padding"));
        }
        Ok(LabelVector::new(labels))
    }

    fn finish(&self) -> Result<(), CodecError> {
        match self.remaining() {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }
}
