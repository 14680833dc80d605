use std::io::{BufReader, BufWriter};
use std::net::{Shutdown, SocketAddr, TcpStream, ToSocketAddrs};
use std::time::Duration;

use thiserror::Error;

use super::codec::{read_message, write_message, CodecError, ErrorCode, Message, PROTOCOL_VERSION};
use crate::instance::{SourceError, StreamUpdate, UpdateSource};
use crate::runner::SketchOutcome;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("cannot reach {addr}: {source}")]
    Connect { addr: String, source: std::io::Error },
    #[error("handshake: {0}")]
    Handshake(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Pull-based client for one session.
pub struct StreamClient {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    n: u64,
    num_edges: u64,
    session_id: u64,
    received: u64,
}

impl StreamClient {
    pub fn connect(addr: impl ToSocketAddrs, timeout: Duration) -> Result<Self, ClientError> {
        let addrs: Vec<SocketAddr> = addr
            .to_socket_addrs()
            .map_err(|e| ClientError::Connect { addr: "<unresolved>".into(), source: e })?
            .collect();
        let mut last = None;
        let mut stream = None;
        for a in &addrs {
            match TcpStream::connect_timeout(a, timeout) {
                Ok(s) => {
                    stream = Some(s);
                    break;
                }
                Err(e) => last = Some((a.to_string(), e)),
            }
        }
        let stream = match (stream, last) {
            (Some(s), _) => s,
            (None, Some((addr, source))) => return Err(ClientError::Connect { addr, source }),
            (None, None) => {
                let source = std::io::Error::new(std::io::ErrorKind::NotFound, "no addresses");
                return Err(ClientError::Connect { addr: String::new(), source });
            }
        };
        let connect_err = |e: std::io::Error| ClientError::Connect { addr: format!("{addrs:?}"), source: e };
        stream.set_nodelay(true).map_err(connect_err)?;
        stream.set_read_timeout(Some(timeout)).map_err(connect_err)?;
        let reader = BufReader::new(stream.try_clone().map_err(connect_err)?);
        let mut client =
            StreamClient { reader, writer: BufWriter::new(stream), n: 0, num_edges: 0, session_id: 0, received: 0 };
        client.send(&Message::Hello { version: PROTOCOL_VERSION })?;
        match read_message(&mut client.reader)? {
            Message::HelloAck { version, n, num_edges, session_id } if version == PROTOCOL_VERSION => {
                client.n = n;
                client.num_edges = num_edges;
                client.session_id = session_id;
                Ok(client)
            }
            other => Err(ClientError::Handshake(format!("unexpected reply {other:?}"))),
        }
    }

    pub fn session_id(&self) -> u64 {
        self.session_id
    }

    pub fn received(&self) -> u64 {
        self.received
    }

    fn send(&mut self, msg: &Message) -> Result<(), CodecError> {
        write_message(&mut self.writer, msg)?;
        Ok(())
    }

    /// Sends `RESULT` and closes the session.
    pub fn report(mut self, outcome: &SketchOutcome) -> Result<(), ClientError> {
        self.send(&Message::Result { outcome: outcome.verdict, terminating_step: outcome.terminating_step })?;
        let _ = self.writer.get_ref().shutdown(Shutdown::Write);
        // drain until the server closes so the result is on the log before we return
        while read_message(&mut self.reader).is_ok() {}
        Ok(())
    }
}

impl UpdateSource for StreamClient {
    fn n(&self) -> u64 {
        self.n
    }

    fn num_edges(&self) -> u64 {
        self.num_edges
    }

    fn next_update(&mut self) -> Result<StreamUpdate, SourceError> {
        self.send(&Message::Next).map_err(|e| SourceError::Transport(e.to_string()))?;
        let reply = read_message(&mut self.reader).map_err(|e| SourceError::Transport(e.to_string()))?;
        if let Some(u) = reply.as_update() {
            self.received += 1;
            return Ok(u);
        }
        match reply {
            Message::Error { code, .. } if code == ErrorCode::StreamExhausted as u8 => Err(SourceError::Exhausted),
            Message::Error { code, message } => Err(SourceError::Protocol(format!("server error {code:#04x}: {message}"))),
            other => Err(SourceError::Protocol(format!("unexpected reply {other:?}"))),
        }
    }
}
