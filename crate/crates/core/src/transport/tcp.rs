//! Full-mesh TCP backend.
//!
//! Rank `r` binds `hosts[r]`, dials every lower rank and accepts a connection
//! from every higher rank. The dialer opens with a zero-length frame tagged
//! [`HELLO_TAG`] so the acceptor learns who is on the other end. One reader
//! thread per peer drains its socket into the endpoint's inbox, so writers
//! never wait on a slow receiver.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io::BufReader;
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::{Arc, Condvar, Mutex, PoisonError};
use std::thread;
use std::time::{Duration, Instant};

use super::wire::{read_frame, write_frame, HELLO_TAG};
use super::{Backend, Endpoint, Frame, Rank, Tag, TransportError};

#[derive(Debug, Clone)]
pub struct TcpOptions {
    /// How long a receive waits before failing as starved.
    pub receive_timeout: Duration,
    /// How long startup keeps retrying unreachable peers.
    pub connect_timeout: Duration,
}

impl Default for TcpOptions {
    fn default() -> Self {
        Self {
            receive_timeout: Duration::from_secs(30),
            connect_timeout: Duration::from_secs(30),
        }
    }
}

/// Parses a hosts file: one `address port` pair per line, line index = rank.
/// Blank lines and lines starting with `#` are skipped.
pub fn read_hosts(path: impl AsRef<Path>) -> Result<Vec<SocketAddr>, TransportError> {
    let text = fs::read_to_string(path)?;
    parse_hosts(&text)
}

pub fn parse_hosts(text: &str) -> Result<Vec<SocketAddr>, TransportError> {
    let mut hosts = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(host), Some(port), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(TransportError::Protocol(format!(
                "hosts line {}: expected `address port`, got {line:?}",
                lineno + 1
            )));
        };
        let port: u16 = port.parse().map_err(|_| {
            TransportError::Protocol(format!("hosts line {}: bad port {port:?}", lineno + 1))
        })?;
        let addr = (host, port).to_socket_addrs()?.next().ok_or_else(|| {
            TransportError::Protocol(format!("hosts line {}: {host} does not resolve", lineno + 1))
        })?;
        hosts.push(addr);
    }
    Ok(hosts)
}

/// Joins the mesh as `rank`, listening on `hosts[rank]`.
pub fn connect_tcp(rank: Rank, hosts: &[SocketAddr]) -> Result<Endpoint, TransportError> {
    let addr = hosts.get(rank).ok_or(TransportError::UnknownRank {
        rank,
        world_size: hosts.len(),
    })?;
    let listener = TcpListener::bind(addr)?;
    connect_tcp_with_listener(rank, listener, hosts, &TcpOptions::default())
}

/// Like [`connect_tcp`] with a listener the caller already bound.
pub fn connect_tcp_with_listener(
    rank: Rank,
    listener: TcpListener,
    hosts: &[SocketAddr],
    options: &TcpOptions,
) -> Result<Endpoint, TransportError> {
    let world_size = hosts.len();
    if rank >= world_size {
        return Err(TransportError::UnknownRank { rank, world_size });
    }
    let inbox = Arc::new(Inbox::new(world_size));
    let mut streams: Vec<Option<TcpStream>> = (0..world_size).map(|_| None).collect();

    for peer in 0..rank {
        let mut stream = dial(peer, hosts[peer], options.connect_timeout)?;
        stream.set_nodelay(true)?;
        write_frame(
            &mut stream,
            &Frame {
                src: rank,
                dst: peer,
                tag: HELLO_TAG,
                payload: vec![],
            },
        )?;
        streams[peer] = Some(stream);
    }

    listener.set_nonblocking(true)?;
    let deadline = Instant::now() + options.connect_timeout;
    let mut pending = world_size - rank - 1;
    while pending > 0 {
        match listener.accept() {
            Ok((stream, _)) => {
                stream.set_nonblocking(false)?;
                stream.set_nodelay(true)?;
                stream.set_read_timeout(Some(options.connect_timeout))?;
                let hello = read_frame(&mut &stream)?.ok_or_else(|| {
                    TransportError::Protocol("peer closed before handshake".into())
                })?;
                let peer = hello.src;
                if hello.tag != HELLO_TAG || hello.dst != rank || peer <= rank || peer >= world_size {
                    return Err(TransportError::Protocol(format!(
                        "unexpected handshake {hello:?} at rank {rank}"
                    )));
                }
                if streams[peer].is_some() {
                    return Err(TransportError::Protocol(format!("rank {peer} connected twice")));
                }
                stream.set_read_timeout(None)?;
                streams[peer] = Some(stream);
                pending -= 1;
            }
            Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                if Instant::now() >= deadline {
                    let missing = (rank + 1..world_size)
                        .find(|&p| streams[p].is_none())
                        .expect("pending count out of sync");
                    return Err(TransportError::Unreachable {
                        rank: missing,
                        addr: hosts[missing].to_string(),
                        source: std::io::ErrorKind::TimedOut.into(),
                    });
                }
                thread::sleep(Duration::from_millis(5));
            }
            Err(e) => return Err(e.into()),
        }
    }

    let mut writers = Vec::with_capacity(world_size);
    for (peer, stream) in streams.into_iter().enumerate() {
        match stream {
            Some(stream) => {
                let reader = stream.try_clone()?;
                let inbox = Arc::clone(&inbox);
                thread::Builder::new()
                    .name(format!("tcp-{rank}-from-{peer}"))
                    .spawn(move || pump(rank, peer, reader, &inbox))?;
                writers.push(Some(Mutex::new(stream)));
            }
            None => writers.push(None),
        }
    }

    Ok(Endpoint::new(
        rank,
        world_size,
        Box::new(TcpBackend {
            rank,
            writers,
            inbox,
            receive_timeout: options.receive_timeout,
        }),
    ))
}

fn dial(peer: Rank, addr: SocketAddr, timeout: Duration) -> Result<TcpStream, TransportError> {
    let deadline = Instant::now() + timeout;
    loop {
        match TcpStream::connect_timeout(&addr, Duration::from_millis(500)) {
            Ok(stream) => return Ok(stream),
            Err(e) if Instant::now() < deadline => {
                let _ = e;
                thread::sleep(Duration::from_millis(20));
            }
            Err(source) => {
                return Err(TransportError::Unreachable {
                    rank: peer,
                    addr: addr.to_string(),
                    source,
                })
            }
        }
    }
}

fn pump(me: Rank, peer: Rank, stream: TcpStream, inbox: &Inbox) {
    let mut reader = BufReader::new(stream);
    loop {
        match read_frame(&mut reader) {
            Ok(Some(frame)) if frame.src == peer && frame.dst == me => inbox.push(frame),
            // Misaddressed frames and stream errors both end the channel.
            Ok(Some(_)) | Ok(None) | Err(_) => break,
        }
    }
    inbox.close(peer);
}

struct InboxState {
    queues: HashMap<(Rank, Tag), VecDeque<Vec<u8>>>,
    closed: Vec<bool>,
}

struct Inbox {
    state: Mutex<InboxState>,
    arrived: Condvar,
}

impl Inbox {
    fn new(world_size: usize) -> Self {
        Self {
            state: Mutex::new(InboxState {
                queues: HashMap::new(),
                closed: vec![false; world_size],
            }),
            arrived: Condvar::new(),
        }
    }

    fn push(&self, frame: Frame) {
        let mut st = self.state.lock().unwrap_or_else(PoisonError::into_inner);
        st.queues
            .entry((frame.src, frame.tag))
            .or_default()
            .push_back(frame.payload);
        self.arrived.notify_all();
    }

    fn close(&self, peer: Rank) {
        let mut st = self.state.lock().unwrap_or_else(PoisonError::into_inner);
        st.closed[peer] = true;
        self.arrived.notify_all();
    }

    fn pop(&self, src: Rank, tag: Tag, timeout: Duration) -> Result<Vec<u8>, TransportError> {
        let deadline = Instant::now() + timeout;
        let mut st = self.state.lock().unwrap_or_else(PoisonError::into_inner);
        loop {
            if let Some(payload) = st.queues.get_mut(&(src, tag)).and_then(VecDeque::pop_front) {
                return Ok(payload);
            }
            if st.closed[src] {
                return Err(TransportError::Starved { src, tag });
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(TransportError::Timeout {
                    src,
                    tag,
                    after: timeout,
                });
            }
            st = self
                .arrived
                .wait_timeout(st, deadline - now)
                .unwrap_or_else(PoisonError::into_inner)
                .0;
        }
    }
}

struct TcpBackend {
    rank: Rank,
    writers: Vec<Option<Mutex<TcpStream>>>,
    inbox: Arc<Inbox>,
    receive_timeout: Duration,
}

impl Backend for TcpBackend {
    fn send(&self, frame: Frame) -> Result<(), TransportError> {
        if frame.dst == self.rank {
            self.inbox.push(frame);
            return Ok(());
        }
        let writer = self.writers[frame.dst].as_ref().ok_or(TransportError::Closed)?;
        let mut stream = writer.lock().unwrap_or_else(PoisonError::into_inner);
        write_frame(&mut *stream, &frame)
    }

    fn receive(&self, src: Rank, tag: Tag) -> Result<Vec<u8>, TransportError> {
        self.inbox.pop(src, tag, self.receive_timeout)
    }
}

impl Drop for TcpBackend {
    fn drop(&mut self) {
        // Half-close only: the peer may still be sending to us and our reader
        // threads keep draining until it finishes too.
        for writer in self.writers.iter().flatten() {
            let stream = writer.lock().unwrap_or_else(PoisonError::into_inner);
            let _ = stream.shutdown(Shutdown::Write);
        }
    }
}
