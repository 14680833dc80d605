use std::io::{self, BufReader, BufWriter, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::codec::{read_message, write_message, CodecError, ErrorCode, Message, PROTOCOL_VERSION};
use crate::instance::{HmInstance, LocalStream, SourceError, UpdateSource};
use crate::runner::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub outcome: Verdict,
    pub terminating_step: u64,
}

/// One line of the session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionLog {
    pub session_id: u64,
    pub updates_served: u64,
    pub result: Option<ResultRecord>,
    pub wall_ms: f64,
}

pub trait LogSink: Send + Sync {
    fn record(&self, log: &SessionLog);
}

#[derive(Debug, Default)]
pub struct MemoryLog {
    entries: Mutex<Vec<SessionLog>>,
}

impl MemoryLog {
    pub fn entries(&self) -> Vec<SessionLog> {
        self.entries.lock().expect("log lock").clone()
    }
}

impl LogSink for MemoryLog {
    fn record(&self, log: &SessionLog) {
        self.entries.lock().expect("log lock").push(log.clone());
    }
}

/// Writes each session as a JSON line.
pub struct WriterLog<W: Write + Send> {
    out: Mutex<W>,
}

impl<W: Write + Send> WriterLog<W> {
    pub fn new(out: W) -> Self {
        WriterLog { out: Mutex::new(out) }
    }
}

impl<W: Write + Send> LogSink for WriterLog<W> {
    fn record(&self, log: &SessionLog) {
        let line = serde_json::to_string(log).expect("session log serializes");
        let mut out = self.out.lock().expect("log lock");
        // A broken log sink must not take the server down.
        let _ = writeln!(out, "{line}").and_then(|_| out.flush());
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ServerConfig {
    /// Idle limit per connection; `None` waits forever.
    pub read_timeout: Option<Duration>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig { read_timeout: Some(Duration::from_secs(30)) }
    }
}

/// Stops a running server from another thread or a signal handler.
#[derive(Debug, Clone)]
pub struct ShutdownHandle {
    flag: Arc<AtomicBool>,
    addr: SocketAddr,
}

impl ShutdownHandle {
    pub fn trigger(&self) {
        if !self.flag.swap(true, Ordering::SeqCst) {
            // wake the blocking accept
            let _ = TcpStream::connect_timeout(&self.addr, Duration::from_secs(1));
        }
    }

    pub fn is_triggered(&self) -> bool {
        self.flag.load(Ordering::SeqCst)
    }
}

/// Serves one instance to any number of sequential or concurrent clients,
/// each with its own cursor.
pub struct StreamServer {
    handle: ShutdownHandle,
    accept: Option<JoinHandle<()>>,
}

impl StreamServer {
    pub fn bind(
        addr: impl ToSocketAddrs,
        instance: Arc<HmInstance>,
        sink: Arc<dyn LogSink>,
        config: ServerConfig,
    ) -> io::Result<Self> {
        let listener = TcpListener::bind(addr)?;
        let local = listener.local_addr()?;
        let flag = Arc::new(AtomicBool::new(false));
        let handle = ShutdownHandle { flag: flag.clone(), addr: local };
        let sessions = Arc::new(AtomicU64::new(1));
        let accept = thread::Builder::new().name("stream-accept".into()).spawn(move || {
            for conn in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let id = sessions.fetch_add(1, Ordering::SeqCst);
                let (instance, sink) = (instance.clone(), sink.clone());
                let _ = thread::Builder::new().name(format!("session-{id}")).spawn(move || {
                    let _ = stream.set_nodelay(true);
                    let _ = stream.set_read_timeout(config.read_timeout);
                    serve_session(stream, id, &instance, sink.as_ref());
                });
            }
        })?;
        Ok(StreamServer { handle, accept: Some(accept) })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.handle.addr
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        self.handle.clone()
    }

    /// Blocks until the server is shut down through a handle.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    pub fn shutdown(mut self) {
        self.stop();
    }

    fn stop(&mut self) {
        self.handle.trigger();
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for StreamServer {
    fn drop(&mut self) {
        self.stop();
    }
}

fn serve_session(stream: TcpStream, session_id: u64, instance: &HmInstance, sink: &dyn LogSink) {
    let start = Instant::now();
    let mut log = SessionLog { session_id, updates_served: 0, result: None, wall_ms: 0.0 };
    let Ok(read_half) = stream.try_clone() else { return };
    let mut reader = BufReader::new(read_half);
    let mut writer = BufWriter::new(&stream);
    let mut cursor = LocalStream::new(instance);
    let mut greeted = false;

    fn reply(w: &mut BufWriter<&TcpStream>, m: &Message) -> bool {
        write_message(w, m).is_ok()
    }
    loop {
        let msg = match read_message(&mut reader) {
            Ok(m) => m,
            Err(CodecError::Malformed(why)) => {
                reply(&mut writer, &Message::error(ErrorCode::Malformed, why));
                break;
            }
            Err(_) => break,
        };
        let keep_going = match msg {
            Message::Hello { version } if !greeted => {
                if version != PROTOCOL_VERSION {
                    reply(&mut writer, &Message::error(ErrorCode::UnsupportedVersion, format!("version {version}")));
                    false
                } else {
                    greeted = true;
                    reply(
                        &mut writer,
                        &Message::HelloAck {
                            version: PROTOCOL_VERSION,
                            n: instance.n,
                            num_edges: instance.num_edges(),
                            session_id,
                        },
                    )
                }
            }
            Message::Next if greeted => match cursor.next_update() {
                Ok(u) => {
                    log.updates_served += 1;
                    reply(&mut writer, &Message::from_update(u))
                }
                Err(SourceError::Exhausted) => {
                    reply(&mut writer, &Message::error(ErrorCode::StreamExhausted, "stream exhausted"))
                }
                Err(e) => {
                    reply(&mut writer, &Message::error(ErrorCode::ProtocolOrder, e.to_string()));
                    false
                }
            },
            Message::Result { outcome, terminating_step } if greeted => {
                log.result = Some(ResultRecord { outcome, terminating_step });
                false
            }
            other => {
                let why = if greeted { format!("unexpected tag {:#04x}", other.tag()) } else { "expected HELLO".into() };
                reply(&mut writer, &Message::error(ErrorCode::ProtocolOrder, why))
            }
        };
        if !keep_going {
            break;
        }
    }
    let _ = writer.flush();
    drop(writer);
    // log before closing so a client that saw the close also sees its entry
    log.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    sink.record(&log);
    let _ = stream.shutdown(Shutdown::Both);
}
