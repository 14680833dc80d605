//! Length-prefixed binary stream protocol.
//!
//! Every frame is a `u32` little-endian payload length followed by the
//! payload: one tag byte and a tag-specific body. All integers are
//! little-endian. The client pulls updates one at a time with `NEXT`.

pub mod client;
pub mod codec;
pub mod server;

pub use client::{ClientError, StreamClient};
pub use codec::{read_message, write_message, CodecError, ErrorCode, Message};
pub use server::{LogSink, MemoryLog, ResultRecord, ServerConfig, SessionLog, ShutdownHandle, StreamServer, WriterLog};
