use std::io::{self, Read, Write};

use thiserror::Error;

use crate::instance::StreamUpdate;
use crate::runner::Verdict;

pub const PROTOCOL_VERSION: u8 = 1;
pub const MAX_PAYLOAD: usize = 65_535;

pub const TAG_HELLO: u8 = 0x01;
pub const TAG_HELLO_ACK: u8 = 0x02;
pub const TAG_NEXT: u8 = 0x03;
pub const TAG_VERTEX: u8 = 0x04;
pub const TAG_EDGE: u8 = 0x05;
pub const TAG_END: u8 = 0x06;
pub const TAG_RESULT: u8 = 0x07;
pub const TAG_ERROR: u8 = 0x7F;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ErrorCode {
    ProtocolOrder = 0x01,
    StreamExhausted = 0x02,
    Malformed = 0x03,
    UnsupportedVersion = 0x04,
}

impl ErrorCode {
    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x01 => Some(ErrorCode::ProtocolOrder),
            0x02 => Some(ErrorCode::StreamExhausted),
            0x03 => Some(ErrorCode::Malformed),
            0x04 => Some(ErrorCode::UnsupportedVersion),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Hello { version: u8 },
    HelloAck { version: u8, n: u64, num_edges: u64, session_id: u64 },
    Next,
    Vertex { v: u64, label: bool },
    Edge { u: u64, v: u64, label: bool },
    End,
    Result { outcome: Verdict, terminating_step: u64 },
    /// `code` is kept raw so unknown codes from newer peers still parse.
    Error { code: u8, message: String },
}

impl Message {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Self {
        Message::Error { code: code as u8, message: message.into() }
    }

    pub fn from_update(u: StreamUpdate) -> Self {
        match u {
            StreamUpdate::Vertex { v, label } => Message::Vertex { v, label },
            StreamUpdate::Edge { u, v, label } => Message::Edge { u, v, label },
            StreamUpdate::End => Message::End,
        }
    }

    pub fn as_update(&self) -> Option<StreamUpdate> {
        match *self {
            Message::Vertex { v, label } => Some(StreamUpdate::Vertex { v, label }),
            Message::Edge { u, v, label } => Some(StreamUpdate::Edge { u, v, label }),
            Message::End => Some(StreamUpdate::End),
            _ => None,
        }
    }

    pub fn tag(&self) -> u8 {
        match self {
            Message::Hello { .. } => TAG_HELLO,
            Message::HelloAck { .. } => TAG_HELLO_ACK,
            Message::Next => TAG_NEXT,
            Message::Vertex { .. } => TAG_VERTEX,
            Message::Edge { .. } => TAG_EDGE,
            Message::End => TAG_END,
            Message::Result { .. } => TAG_RESULT,
            Message::Error { .. } => TAG_ERROR,
        }
    }
}

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    /// The peer closed the connection on a frame boundary.
    #[error("connection closed")]
    Closed,
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

fn malformed<T>(msg: impl Into<String>) -> Result<T, CodecError> {
    Err(CodecError::Malformed(msg.into()))
}

pub fn outcome_byte(v: Verdict) -> u8 {
    match v {
        Verdict::Null => 0,
        Verdict::Yes => 1,
        Verdict::No => 2,
    }
}

/// Tag and body, without the length prefix.
pub fn encode_payload(msg: &Message) -> Vec<u8> {
    let mut out = vec![msg.tag()];
    match msg {
        Message::Hello { version } => out.push(*version),
        Message::HelloAck { version, n, num_edges, session_id } => {
            out.push(*version);
            out.extend_from_slice(&n.to_le_bytes());
            out.extend_from_slice(&num_edges.to_le_bytes());
            out.extend_from_slice(&session_id.to_le_bytes());
        }
        Message::Next | Message::End => {}
        Message::Vertex { v, label } => {
            out.extend_from_slice(&v.to_le_bytes());
            out.push(u8::from(*label));
        }
        Message::Edge { u, v, label } => {
            out.extend_from_slice(&u.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
            out.push(u8::from(*label));
        }
        Message::Result { outcome, terminating_step } => {
            out.push(outcome_byte(*outcome));
            out.extend_from_slice(&terminating_step.to_le_bytes());
        }
        Message::Error { code, message } => {
            // 1 tag + 1 code + 2 length bytes
            let room = MAX_PAYLOAD - 4;
            let mut end = message.len().min(room);
            while !message.is_char_boundary(end) {
                end -= 1;
            }
            out.push(*code);
            out.extend_from_slice(&(end as u16).to_le_bytes());
            out.extend_from_slice(&message.as_bytes()[..end]);
        }
    }
    out
}

/// Full frame: length prefix and payload.
pub fn encode(msg: &Message) -> Vec<u8> {
    let payload = encode_payload(msg);
    let mut out = Vec::with_capacity(payload.len() + 4);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        if self.buf.len() < n {
            return malformed("body too short");
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn bit(&mut self) -> Result<bool, CodecError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => malformed(format!("label byte {b} is not 0 or 1")),
        }
    }
}

pub fn decode_payload(payload: &[u8]) -> Result<Message, CodecError> {
    let (&tag, body) = payload.split_first().ok_or_else(|| CodecError::Malformed("empty payload".into()))?;
    let mut c = Cursor { buf: body };
    let msg = match tag {
        TAG_HELLO => Message::Hello { version: c.u8()? },
        TAG_HELLO_ACK => Message::HelloAck { version: c.u8()?, n: c.u64()?, num_edges: c.u64()?, session_id: c.u64()? },
        TAG_NEXT => Message::Next,
        TAG_VERTEX => Message::Vertex { v: c.u64()?, label: c.bit()? },
        TAG_EDGE => Message::Edge { u: c.u64()?, v: c.u64()?, label: c.bit()? },
        TAG_END => Message::End,
        TAG_RESULT => {
            let outcome = match c.u8()? {
                0 => Verdict::Null,
                1 => Verdict::Yes,
                2 => Verdict::No,
                b => return malformed(format!("outcome byte {b}")),
            };
            Message::Result { outcome, terminating_step: c.u64()? }
        }
        TAG_ERROR => {
            let code = c.u8()?;
            let len = c.u16()? as usize;
            let text = c.take(len)?;
            let message = std::str::from_utf8(text).map_err(|_| CodecError::Malformed("error text is not UTF-8".into()))?;
            Message::Error { code, message: message.to_owned() }
        }
        t => return malformed(format!("unknown tag {t:#04x}")),
    };
    if !c.buf.is_empty() {
        return malformed(format!("{} trailing bytes", c.buf.len()));
    }
    Ok(msg)
}

fn check_length(len: usize) -> Result<(), CodecError> {
    if len == 0 || len > MAX_PAYLOAD {
        return malformed(format!("payload length {len} outside 1..={MAX_PAYLOAD}"));
    }
    Ok(())
}

/// Parses exactly one frame occupying all of `frame`.
pub fn decode(frame: &[u8]) -> Result<Message, CodecError> {
    if frame.len() < 4 {
        return malformed("frame shorter than its length prefix");
    }
    let len = u32::from_le_bytes(frame[..4].try_into().expect("4 bytes")) as usize;
    check_length(len)?;
    if len != frame.len() - 4 {
        return malformed(format!("length prefix {len} but payload has {} bytes", frame.len() - 4));
    }
    decode_payload(&frame[4..])
}

pub fn read_message(r: &mut impl Read) -> Result<Message, CodecError> {
    let mut prefix = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut prefix[got..]) {
            Ok(0) if got == 0 => return Err(CodecError::Closed),
            Ok(0) => return malformed("connection closed inside a length prefix"),
            Ok(k) => got += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(prefix) as usize;
    check_length(len)?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => CodecError::Malformed(format!("connection closed inside a {len}-byte payload")),
        _ => CodecError::Io(e),
    })?;
    decode_payload(&payload)
}

pub fn write_message(w: &mut impl Write, msg: &Message) -> io::Result<()> {
    w.write_all(&encode(msg))?;
    w.flush()
}
