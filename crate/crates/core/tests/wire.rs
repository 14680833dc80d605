use std::io::{Read, Write};
use std::net::{Shutdown, TcpStream};
use std::sync::Arc;
use std::time::Duration;

use hm_core::instance::{Alpha, Case, HmInstance, LocalStream, SourceError, UpdateSource};
use hm_core::rng::rng_from_seed;
use hm_core::runner::{run_quantum_shot, ShotConfig};
use hm_core::wire::codec::{decode, encode, read_message, PROTOCOL_VERSION};
use hm_core::wire::{ErrorCode, MemoryLog, Message, ServerConfig, StreamClient, StreamServer};
use hm_core::Verdict;
use proptest::prelude::*;
use rand::Rng;

fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Yes), Just(Verdict::No), Just(Verdict::Null)]
}

fn message() -> impl Strategy<Value = Message> {
    prop_oneof![
        any::<u8>().prop_map(|version| Message::Hello { version }),
        (any::<u8>(), any::<u64>(), any::<u64>(), any::<u64>())
            .prop_map(|(version, n, num_edges, session_id)| Message::HelloAck { version, n, num_edges, session_id }),
        Just(Message::Next),
        (any::<u64>(), any::<bool>()).prop_map(|(v, label)| Message::Vertex { v, label }),
        (any::<u64>(), any::<u64>(), any::<bool>()).prop_map(|(u, v, label)| Message::Edge { u, v, label }),
        Just(Message::End),
        (verdict(), any::<u64>()).prop_map(|(outcome, terminating_step)| Message::Result { outcome, terminating_step }),
        (any::<u8>(), ".{0,200}").prop_map(|(code, message)| Message::Error { code, message }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn frames_round_trip(msg in message()) {
        let frame = encode(&msg);
        prop_assert_eq!(decode(&frame).unwrap(), msg.clone());
        prop_assert_eq!(read_message(&mut frame.as_slice()).unwrap(), msg);
    }
}

fn instance(n: u64, seed: u64) -> Arc<HmInstance> {
    Arc::new(HmInstance::generate(n, Alpha::QUARTER, Case::Yes, seed).unwrap())
}

fn start(inst: Arc<HmInstance>) -> (StreamServer, Arc<MemoryLog>) {
    let log = Arc::new(MemoryLog::default());
    let cfg = ServerConfig { read_timeout: Some(Duration::from_secs(5)) };
    let server = StreamServer::bind("127.0.0.1:0", inst, log.clone(), cfg).unwrap();
    (server, log)
}

const TIMEOUT: Duration = Duration::from_secs(5);

#[test]
fn full_stream_then_exhausted() {
    let inst = instance(32, 1);
    let (server, log) = start(inst.clone());
    let mut client = StreamClient::connect(server.local_addr(), TIMEOUT).unwrap();
    assert_eq!((client.n(), client.num_edges()), (32, 8));
    let served: Vec<_> = (0..41).map(|_| client.next_update().unwrap()).collect();
    assert_eq!(served, inst.to_stream());
    assert_eq!(client.next_update(), Err(SourceError::Exhausted));
    assert_eq!(client.next_update(), Err(SourceError::Exhausted));
    client.report(&hm_core::SketchOutcome { verdict: Verdict::Null, terminating_step: 32 }).unwrap();
    server.shutdown();
    let entries = log.entries();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].updates_served, 41);
    assert_eq!(entries[0].result.map(|r| r.terminating_step), Some(32));
}

#[test]
fn sessions_are_isolated() {
    let inst = instance(16, 2);
    let (server, log) = start(inst.clone());
    let mut a = StreamClient::connect(server.local_addr(), TIMEOUT).unwrap();
    let mut b = StreamClient::connect(server.local_addr(), TIMEOUT).unwrap();
    assert_ne!(a.session_id(), b.session_id());
    let mut local = LocalStream::new(&inst);
    let first = local.next_update().unwrap();
    for _ in 0..5 {
        a.next_update().unwrap();
    }
    assert_eq!(b.next_update().unwrap(), first);
    let threads: Vec<_> = (0..8u64)
        .map(|i| {
            let addr = server.local_addr();
            std::thread::spawn(move || {
                let mut c = StreamClient::connect(addr, TIMEOUT).unwrap();
                let out = run_quantum_shot(&mut c, &ShotConfig::noiseless(), rng_from_seed(i)).unwrap();
                c.report(&out).unwrap();
                out
            })
        })
        .collect();
    let outcomes: Vec<_> = threads.into_iter().map(|t| t.join().unwrap()).collect();
    drop((a, b));
    server.shutdown();
    let entries = log.entries();
    let reported: Vec<_> = entries.iter().filter_map(|e| e.result).collect();
    assert_eq!(reported.len(), outcomes.len());
    let mut ids: Vec<_> = entries.iter().map(|e| e.session_id).collect();
    ids.sort_unstable();
    ids.dedup();
    assert_eq!(ids.len(), entries.len());
}

/// Sends `bytes` as the opening of a fresh session, half-closes, and
/// collects every reply until the server hangs up.
fn replies(addr: std::net::SocketAddr, bytes: &[u8]) -> Vec<Message> {
    let mut s = TcpStream::connect(addr).unwrap();
    s.set_read_timeout(Some(TIMEOUT)).unwrap();
    // The server may close before reading everything; that is fine.
    let _ = s.write_all(bytes);
    let _ = s.shutdown(Shutdown::Write);
    let mut out = vec![];
    while let Ok(m) = read_message(&mut s) {
        out.push(m);
    }
    let mut rest = vec![];
    let _ = s.read_to_end(&mut rest);
    out
}

fn first_reply(addr: std::net::SocketAddr, bytes: &[u8]) -> Message {
    replies(addr, bytes).into_iter().next().expect("server must answer")
}

#[test]
fn protocol_errors() {
    let (server, _log) = start(instance(8, 3));
    let addr = server.local_addr();
    let code = |m: Message| match m {
        Message::Error { code, .. } => code,
        other => panic!("expected ERROR, got {other:?}"),
    };
    assert_eq!(code(first_reply(addr, &encode(&Message::Next))), ErrorCode::ProtocolOrder as u8);
    assert_eq!(code(first_reply(addr, &encode(&Message::Hello { version: 9 }))), ErrorCode::UnsupportedVersion as u8);
    assert_eq!(code(first_reply(addr, &[0, 0, 0, 0])), ErrorCode::Malformed as u8);
    assert_eq!(code(first_reply(addr, &[3, 0, 0, 0, 0x42, 0, 0])), ErrorCode::Malformed as u8);
    assert_eq!(code(first_reply(addr, &[0xff, 0xff, 0xff, 0x00])), ErrorCode::Malformed as u8);
    let hello = encode(&Message::Hello { version: PROTOCOL_VERSION });
    assert!(matches!(first_reply(addr, &hello), Message::HelloAck { .. }));
}

fn mutate(rng: &mut impl Rng, frame: &[u8]) -> Vec<u8> {
    let mut f = frame.to_vec();
    match rng.gen_range(0..6) {
        0 => {
            let i = rng.gen_range(0..f.len());
            f[i] ^= 1 << rng.gen_range(0..8);
        }
        1 => {
            let i = rng.gen_range(0..f.len());
            f[i] = rng.gen();
        }
        2 => f.truncate(rng.gen_range(0..f.len())),
        3 => f.extend((0..rng.gen_range(1..16)).map(|_| rng.gen::<u8>())),
        4 => {
            let len: u32 = rng.gen_range(0..70_000);
            f[..4].copy_from_slice(&len.to_le_bytes());
        }
        _ => {
            let i = 4 + rng.gen_range(0..f.len() - 4);
            f[i] = rng.gen();
            f.swap(0, 1);
        }
    }
    f
}

#[test]
fn mutated_frames_get_errors() {
    let (server, _log) = start(instance(8, 4));
    let addr = server.local_addr();
    let seeds = [
        Message::Hello { version: PROTOCOL_VERSION },
        Message::HelloAck { version: 1, n: 8, num_edges: 2, session_id: 3 },
        Message::Next,
        Message::Vertex { v: 3, label: true },
        Message::Edge { u: 1, v: 2, label: false },
        Message::End,
        Message::Result { outcome: Verdict::Yes, terminating_step: 4 },
        Message::error(ErrorCode::Malformed, "oops"),
    ];
    let hello = encode(&Message::Hello { version: PROTOCOL_VERSION });
    let mut rng = rng_from_seed(13);
    let mut sent = 0;
    while sent < 1000 {
        let base = encode(&seeds[rng.gen_range(0..seeds.len())]);
        let frame = mutate(&mut rng, &base);
        // a mutation can land on the one opening the server accepts
        if frame == hello || frame.is_empty() {
            continue;
        }
        // a shortened length prefix can expose a valid HELLO; the tail must still be refused
        let got = replies(addr, &frame);
        assert!(got.iter().any(|m| matches!(m, Message::Error { .. })), "{frame:?} → {got:?}");
        sent += 1;
    }
}
