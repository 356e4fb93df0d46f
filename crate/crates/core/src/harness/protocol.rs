//! Coordinator/worker wire protocol.
//!
//! Every message travels in one frame; all integers are little-endian.
//!
//! ```text
//! frame   := u32 payload_length, payload
//! payload := "SDMM" (4 bytes), u8 version = 1, u8 msg_type, body
//!
//! 0x01 COMPUTE := u64 q, u32 rows_a, u32 cols_a, u32 cols_b,
//!                 rows_a*cols_a u64 (share_a, row-major),
//!                 cols_a*cols_b u64 (share_b, row-major)
//! 0x02 RESULT  := u32 rows, u32 cols, rows*cols u64 (row-major)
//! 0xFF ERROR   := u32 code
//! ```
//!
//! A COMPUTE body whose element bytes are not a whole number of `u64`s, or
//! that ends inside the fixed header, is malformed (code 2). A body with a
//! whole number of elements that disagrees with the declared shape, or a
//! zero dimension, is a dimension error (code 3).

use std::fmt;
use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"SDMM";
pub const VERSION: u8 = 1;
pub const MSG_COMPUTE: u8 = 0x01;
pub const MSG_RESULT: u8 = 0x02;
pub const MSG_ERROR: u8 = 0xFF;

/// Largest payload a peer will accept.
pub const MAX_PAYLOAD: u32 = 256 * 1024 * 1024;

const PREAMBLE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum ErrorCode {
    BadMagic = 1,
    Malformed = 2,
    Dimension = 3,
    ElementRange = 4,
}

impl ErrorCode {
    pub fn from_u32(code: u32) -> Option<Self> {
        match code {
            1 => Some(Self::BadMagic),
            2 => Some(Self::Malformed),
            3 => Some(Self::Dimension),
            4 => Some(Self::ElementRange),
            _ => None,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = match self {
            Self::BadMagic => "bad magic or version",
            Self::Malformed => "malformed body",
            Self::Dimension => "dimension mismatch",
            Self::ElementRange => "element not below q",
        };
        write!(f, "{} ({text})", *self as u32)
    }
}

/// Row-major matrix as carried on the wire; entries are not interpreted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMatrix {
    pub rows: u32,
    pub cols: u32,
    pub data: Vec<u64>,
}

impl WireMatrix {
    pub fn new(rows: u32, cols: u32, data: Vec<u64>) -> Self {
        debug_assert_eq!(data.len(), rows as usize * cols as usize);
        Self { rows, cols, data }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Compute {
        modulus: u64,
        share_a: WireMatrix,
        share_b: WireMatrix,
    },
    Result(WireMatrix),
    Error(u32),
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("frame of {0} bytes exceeds the {MAX_PAYLOAD}-byte limit")]
    TooLarge(u32),
    #[error("connection closed mid-frame")]
    Truncated,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Serializes a message payload (without the length prefix).
pub fn encode_payload(msg: &Message) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    match msg {
        Message::Compute {
            modulus,
            share_a,
            share_b,
        } => {
            out.push(MSG_COMPUTE);
            put_u64(&mut out, *modulus);
            put_u32(&mut out, share_a.rows);
            put_u32(&mut out, share_a.cols);
            put_u32(&mut out, share_b.cols);
            for &v in share_a.data.iter().chain(&share_b.data) {
                put_u64(&mut out, v);
            }
        }
        Message::Result(m) => {
            out.push(MSG_RESULT);
            put_u32(&mut out, m.rows);
            put_u32(&mut out, m.cols);
            for &v in &m.data {
                put_u64(&mut out, v);
            }
        }
        Message::Error(code) => {
            out.push(MSG_ERROR);
            put_u32(&mut out, *code);
        }
    }
    out
}

/// Length-prefixed frame ready for the socket.
pub fn encode_frame(msg: &Message) -> Vec<u8> {
    let payload = encode_payload(msg);
    let mut frame = Vec::with_capacity(4 + payload.len());
    put_u32(&mut frame, payload.len() as u32);
    frame.extend_from_slice(&payload);
    frame
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.buf.len() < n {
            return None;
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Some(head)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn elements(&mut self) -> Result<Vec<u64>, ErrorCode> {
        if !self.buf.len().is_multiple_of(8) {
            return Err(ErrorCode::Malformed);
        }
        let out = self
            .buf
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        self.buf = &[];
        Ok(out)
    }
}

fn area(rows: u32, cols: u32) -> Result<usize, ErrorCode> {
    if rows == 0 || cols == 0 {
        return Err(ErrorCode::Dimension);
    }
    (rows as usize)
        .checked_mul(cols as usize)
        .ok_or(ErrorCode::Dimension)
}

/// Parses and validates a payload; the error is the code a worker replies with.
pub fn decode_payload(payload: &[u8]) -> Result<Message, ErrorCode> {
    if payload.len() < PREAMBLE {
        return Err(if payload.len() >= 4 && payload[..4] != MAGIC {
            ErrorCode::BadMagic
        } else {
            ErrorCode::Malformed
        });
    }
    if payload[..4] != MAGIC || payload[4] != VERSION {
        return Err(ErrorCode::BadMagic);
    }
    let mut cur = Cursor {
        buf: &payload[PREAMBLE..],
    };
    match payload[5] {
        MSG_COMPUTE => {
            let modulus = cur.u64().ok_or(ErrorCode::Malformed)?;
            let rows_a = cur.u32().ok_or(ErrorCode::Malformed)?;
            let cols_a = cur.u32().ok_or(ErrorCode::Malformed)?;
            let cols_b = cur.u32().ok_or(ErrorCode::Malformed)?;
            if modulus < 2 {
                return Err(ErrorCode::Malformed);
            }
            let elements = cur.elements()?;
            let len_a = area(rows_a, cols_a)?;
            let len_b = area(cols_a, cols_b)?;
            if len_a.checked_add(len_b) != Some(elements.len()) {
                return Err(ErrorCode::Dimension);
            }
            if elements.iter().any(|&v| v >= modulus) {
                return Err(ErrorCode::ElementRange);
            }
            let data_b = elements[len_a..].to_vec();
            let mut data_a = elements;
            data_a.truncate(len_a);
            Ok(Message::Compute {
                modulus,
                share_a: WireMatrix::new(rows_a, cols_a, data_a),
                share_b: WireMatrix::new(cols_a, cols_b, data_b),
            })
        }
        MSG_RESULT => {
            let rows = cur.u32().ok_or(ErrorCode::Malformed)?;
            let cols = cur.u32().ok_or(ErrorCode::Malformed)?;
            let data = cur.elements()?;
            if area(rows, cols)? != data.len() {
                return Err(ErrorCode::Dimension);
            }
            Ok(Message::Result(WireMatrix::new(rows, cols, data)))
        }
        MSG_ERROR => {
            let code = cur.u32().ok_or(ErrorCode::Malformed)?;
            if !cur.buf.is_empty() {
                return Err(ErrorCode::Malformed);
            }
            Ok(Message::Error(code))
        }
        _ => Err(ErrorCode::Malformed),
    }
}

/// Reads one frame's payload. `Ok(None)` means the peer closed the
/// connection cleanly between frames.
pub fn read_frame<R: Read>(reader: &mut R) -> Result<Option<Vec<u8>>, FrameError> {
    let mut len = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match reader.read(&mut len[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(FrameError::Truncated),
            Ok(k) => filled += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(len);
    if len > MAX_PAYLOAD {
        return Err(FrameError::TooLarge(len));
    }
    let mut payload = Vec::new();
    let got = reader.take(len as u64).read_to_end(&mut payload)?;
    if got < len as usize {
        return Err(FrameError::Truncated);
    }
    Ok(Some(payload))
}

pub fn write_message<W: Write>(writer: &mut W, msg: &Message) -> io::Result<()> {
    writer.write_all(&encode_frame(msg))?;
    writer.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn compute(q: u64, a: (u32, u32, Vec<u64>), cols_b: u32, b: Vec<u64>) -> Message {
        Message::Compute {
            modulus: q,
            share_a: WireMatrix::new(a.0, a.1, a.2),
            share_b: WireMatrix::new(a.1, cols_b, b),
        }
    }

    #[test]
    fn compute_layout_is_bit_exact() {
        let msg = compute(53, (1, 1, vec![3]), 1, vec![4]);
        let frame = encode_frame(&msg);
        let mut expect = vec![];
        expect.extend_from_slice(&42u32.to_le_bytes());
        expect.extend_from_slice(b"SDMM");
        expect.extend_from_slice(&[1, 0x01]);
        expect.extend_from_slice(&53u64.to_le_bytes());
        for v in [1u32, 1, 1] {
            expect.extend_from_slice(&v.to_le_bytes());
        }
        expect.extend_from_slice(&3u64.to_le_bytes());
        expect.extend_from_slice(&4u64.to_le_bytes());
        assert_eq!(frame, expect);
        assert_eq!(decode_payload(&frame[4..]), Ok(msg));
    }

    #[test]
    fn error_layout() {
        let frame = encode_frame(&Message::Error(3));
        assert_eq!(
            frame,
            [10, 0, 0, 0, b'S', b'D', b'M', b'M', 1, 0xFF, 3, 0, 0, 0]
        );
    }

    #[test]
    fn error_codes() {
        let good = encode_payload(&compute(53, (1, 2, vec![1, 2]), 1, vec![3, 4]));
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert_eq!(decode_payload(&bad_magic), Err(ErrorCode::BadMagic));
        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert_eq!(decode_payload(&bad_version), Err(ErrorCode::BadMagic));
        // cut inside an element
        assert_eq!(
            decode_payload(&good[..good.len() - 3]),
            Err(ErrorCode::Malformed)
        );
        // cut inside the fixed header
        assert_eq!(decode_payload(&good[..10]), Err(ErrorCode::Malformed));
        // a whole element missing: shape disagrees with declared dims
        assert_eq!(
            decode_payload(&good[..good.len() - 8]),
            Err(ErrorCode::Dimension)
        );
        let mut unknown = good.clone();
        unknown[5] = 0x07;
        assert_eq!(decode_payload(&unknown), Err(ErrorCode::Malformed));
        let too_big = encode_payload(&compute(5, (1, 1, vec![5]), 1, vec![0]));
        assert_eq!(decode_payload(&too_big), Err(ErrorCode::ElementRange));
        let zero_dim = encode_payload(&compute(5, (0, 1, vec![]), 1, vec![0]));
        assert_eq!(decode_payload(&zero_dim), Err(ErrorCode::Dimension));
    }

    #[test]
    fn read_frame_boundaries() {
        let frame = encode_frame(&Message::Error(2));
        let mut stream = frame.clone();
        stream.extend_from_slice(&frame);
        let mut r = &stream[..];
        assert!(read_frame(&mut r).unwrap().is_some());
        assert!(read_frame(&mut r).unwrap().is_some());
        assert!(read_frame(&mut r).unwrap().is_none());
        let mut short = &frame[..frame.len() - 1];
        assert!(matches!(read_frame(&mut short), Err(FrameError::Truncated)));
        let huge = u32::MAX.to_le_bytes();
        assert!(matches!(
            read_frame(&mut &huge[..]),
            Err(FrameError::TooLarge(_))
        ));
    }

    fn matrix() -> impl Strategy<Value = (u32, u32)> {
        (1u32..5, 1u32..5)
    }

    proptest! {
        #[test]
        fn round_trip(q in 2u64.., (r, k) in matrix(), c in 1u32..5, seed in any::<u64>(), kind in 0u8..3) {
            let gen = |n: usize, salt: u64| -> Vec<u64> {
                (0..n as u64).map(|i| (seed ^ (i * 0x9E37_79B9 + salt)) % q).collect()
            };
            let msg = match kind {
                0 => compute(q, (r, k, gen((r * k) as usize, 1)), c, gen((k * c) as usize, 2)),
                1 => Message::Result(WireMatrix::new(r, c, gen((r * c) as usize, 3))),
                _ => Message::Error((seed % 5) as u32),
            };
            let frame = encode_frame(&msg);
            let payload = read_frame(&mut &frame[..]).unwrap().unwrap();
            prop_assert_eq!(decode_payload(&payload), Ok(msg));
        }

        #[test]
        fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..128)) {
            let _ = decode_payload(&bytes);
            let _ = read_frame(&mut &bytes[..]);
        }
    }
}
