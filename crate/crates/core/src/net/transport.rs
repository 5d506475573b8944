//! Point-to-point frame delivery between nodes. Node 0 is the System, nodes
//! `1..=k` are monitor parties. Both transports preserve per-sender order.

use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;
use std::time::{Duration, Instant};

use super::wire::PREFIX_LEN;
use super::NetError;

pub trait Transport: Send {
    fn me(&self) -> usize;
    /// Queues one frame body for `to`; never blocks on the peer.
    fn send(&mut self, to: usize, body: Vec<u8>) -> Result<(), NetError>;
    /// Next frame body from `from`, blocking.
    fn recv(&mut self, from: usize) -> Result<Vec<u8>, NetError>;
}

/// Lossless FIFO links between threads of one process.
pub struct InProcess {
    me: usize,
    tx: HashMap<usize, Sender<Vec<u8>>>,
    rx: HashMap<usize, Receiver<Vec<u8>>>,
}

impl InProcess {
    /// Fully connected mesh over nodes `0..nodes`.
    pub fn mesh(nodes: usize) -> Vec<InProcess> {
        let mut ends: Vec<InProcess> = (0..nodes)
            .map(|me| InProcess {
                me,
                tx: HashMap::new(),
                rx: HashMap::new(),
            })
            .collect();
        for a in 0..nodes {
            for b in 0..nodes {
                if a != b {
                    let (tx, rx) = channel();
                    ends[a].tx.insert(b, tx);
                    ends[b].rx.insert(a, rx);
                }
            }
        }
        ends
    }
}

impl Transport for InProcess {
    fn me(&self) -> usize {
        self.me
    }

    fn send(&mut self, to: usize, body: Vec<u8>) -> Result<(), NetError> {
        self.tx
            .get(&to)
            .ok_or(NetError::UnknownPeer(to))?
            .send(body)
            .map_err(|_| NetError::Disconnected(to))
    }

    fn recv(&mut self, from: usize) -> Result<Vec<u8>, NetError> {
        self.rx
            .get(&from)
            .ok_or(NetError::UnknownPeer(from))?
            .recv()
            .map_err(|_| NetError::Disconnected(from))
    }
}

/// Length-prefixed frames over TCP, one connection per node pair.
///
/// Each connection gets a reader and a writer thread so that sends never
/// block on a slow peer.
pub struct Tcp {
    me: usize,
    tx: HashMap<usize, Sender<Vec<u8>>>,
    rx: HashMap<usize, Receiver<Vec<u8>>>,
    timeout: Option<Duration>,
    writers: Vec<thread::JoinHandle<()>>,
}

/// Upper bound on one frame body; guards against garbage length prefixes.
const MAX_FRAME: usize = 1 << 28;

impl Tcp {
    /// Joins the mesh as party `me` (1..=k). Party `i` dials every party
    /// `j < i` and accepts parties `j > i` plus the System.
    pub fn party(
        me: usize,
        listener: TcpListener,
        parties: &[SocketAddr],
        connect_timeout: Duration,
    ) -> Result<Tcp, NetError> {
        let k = parties.len();
        if me == 0 || me > k {
            return Err(NetError::UnknownPeer(me));
        }
        let mut streams = HashMap::new();
        for j in 1..me {
            let s = dial(parties[j - 1], me, connect_timeout)?;
            streams.insert(j, s);
        }
        let expected = (k - me) + 1;
        while streams.len() < (me - 1) + expected {
            let (mut s, _) = listener.accept().map_err(io)?;
            let mut hello = [0u8; 4];
            s.read_exact(&mut hello).map_err(io)?;
            let peer = u32::from_le_bytes(hello) as usize;
            if peer == me || peer > k || (peer != 0 && peer < me) || streams.contains_key(&peer) {
                return Err(NetError::Protocol(format!("unexpected hello from node {peer}")));
            }
            streams.insert(peer, s);
        }
        Tcp::from_streams(me, streams)
    }

    /// Connects the System (node 0) to every party.
    pub fn system(parties: &[SocketAddr], connect_timeout: Duration) -> Result<Tcp, NetError> {
        let mut streams = HashMap::new();
        for (i, addr) in parties.iter().enumerate() {
            streams.insert(i + 1, dial(*addr, 0, connect_timeout)?);
        }
        Tcp::from_streams(0, streams)
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = Some(timeout);
        self
    }

    fn from_streams(me: usize, streams: HashMap<usize, TcpStream>) -> Result<Tcp, NetError> {
        let mut tx = HashMap::new();
        let mut rx = HashMap::new();
        let mut writers = Vec::new();
        for (peer, stream) in streams {
            stream.set_nodelay(true).map_err(io)?;
            let read_half = stream.try_clone().map_err(io)?;
            let (in_tx, in_rx) = channel::<Vec<u8>>();
            thread::Builder::new()
                .name(format!("tcp-read-{me}-{peer}"))
                .spawn(move || {
                    let mut r = BufReader::new(read_half);
                    loop {
                        let mut len = [0u8; PREFIX_LEN];
                        if r.read_exact(&mut len).is_err() {
                            return;
                        }
                        let len = u32::from_le_bytes(len) as usize;
                        if len > MAX_FRAME {
                            log::error!("node {me}: oversized frame from {peer}");
                            return;
                        }
                        let mut body = vec![0u8; len];
                        if r.read_exact(&mut body).is_err() || in_tx.send(body).is_err() {
                            return;
                        }
                    }
                })
                .map_err(io)?;
            let (out_tx, out_rx) = channel::<Vec<u8>>();
            let writer = thread::Builder::new()
                .name(format!("tcp-write-{me}-{peer}"))
                .spawn(move || {
                    let mut w = BufWriter::new(stream);
                    while let Ok(body) = out_rx.recv() {
                        let len = (body.len() as u32).to_le_bytes();
                        if w.write_all(&len).and_then(|_| w.write_all(&body)).is_err() {
                            return;
                        }
                        // Coalesce queued frames into one flush.
                        while let Ok(more) = out_rx.try_recv() {
                            let len = (more.len() as u32).to_le_bytes();
                            if w.write_all(&len).and_then(|_| w.write_all(&more)).is_err() {
                                return;
                            }
                        }
                        if w.flush().is_err() {
                            return;
                        }
                    }
                    let _ = w.flush();
                    let _ = w.get_ref().shutdown(std::net::Shutdown::Write);
                })
                .map_err(io)?;
            writers.push(writer);
            tx.insert(peer, out_tx);
            rx.insert(peer, in_rx);
        }
        Ok(Tcp {
            me,
            tx,
            rx,
            timeout: None,
            writers,
        })
    }
}

impl Drop for Tcp {
    /// Flushes queued frames before the connections close.
    fn drop(&mut self) {
        self.tx.clear();
        for w in self.writers.drain(..) {
            let _ = w.join();
        }
    }
}

fn io(e: std::io::Error) -> NetError {
    NetError::Io(e.to_string())
}

fn dial(addr: SocketAddr, me: usize, timeout: Duration) -> Result<TcpStream, NetError> {
    let start = Instant::now();
    loop {
        match TcpStream::connect(addr) {
            Ok(mut s) => {
                s.write_all(&(me as u32).to_le_bytes()).map_err(io)?;
                return Ok(s);
            }
            Err(e) if start.elapsed() < timeout => {
                log::debug!("node {me}: {addr} not up yet ({e})");
                thread::sleep(Duration::from_millis(50));
            }
            Err(e) => return Err(NetError::Io(format!("connecting to {addr}: {e}"))),
        }
    }
}

impl Transport for Tcp {
    fn me(&self) -> usize {
        self.me
    }

    fn send(&mut self, to: usize, body: Vec<u8>) -> Result<(), NetError> {
        self.tx
            .get(&to)
            .ok_or(NetError::UnknownPeer(to))?
            .send(body)
            .map_err(|_| NetError::Disconnected(to))
    }

    fn recv(&mut self, from: usize) -> Result<Vec<u8>, NetError> {
        let rx = self.rx.get(&from).ok_or(NetError::UnknownPeer(from))?;
        match self.timeout {
            None => rx.recv().map_err(|_| NetError::Disconnected(from)),
            Some(t) => rx.recv_timeout(t).map_err(|e| match e {
                std::sync::mpsc::RecvTimeoutError::Timeout => NetError::Timeout(from),
                std::sync::mpsc::RecvTimeoutError::Disconnected => NetError::Disconnected(from),
            }),
        }
    }
}
