//! Vehicle side of the CCC connection, on plain threads.
//!
//! The tick loop never blocks on the network: outgoing messages go into a
//! bounded outbox that drops its oldest entry when full, and incoming frames
//! are parsed on a reader thread into a queue drained at tick boundaries.

use std::collections::VecDeque;
use std::io::BufReader;
use std::net::{Shutdown, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use dcage_protocol::framing::{read_frame, write_frame};
use dcage_protocol::{encode, WireMessage};
use tracing::{debug, info, warn};

use crate::inbound::handle_ccc_frame;
use crate::runtime::Inbound;

pub const DEFAULT_OUTBOX_CAPACITY: usize = 256;
const RECONNECT_DELAY: Duration = Duration::from_millis(500);

#[derive(Default)]
struct Outbox {
    queue: Mutex<VecDeque<Vec<u8>>>,
    ready: Condvar,
}

struct Shared {
    outbox: Outbox,
    capacity: usize,
    inbox: Mutex<VecDeque<Inbound>>,
    dropped: AtomicU64,
    connected: AtomicBool,
    shutdown: AtomicBool,
}

pub struct CccLink {
    shared: Arc<Shared>,
    writer: Option<JoinHandle<()>>,
}

impl CccLink {
    /// Starts connecting in the background. `register` is sent first on
    /// every (re)connection.
    pub fn start(addr: String, register: WireMessage, capacity: usize) -> Self {
        let shared = Arc::new(Shared {
            outbox: Outbox::default(),
            capacity: capacity.max(1),
            inbox: Mutex::new(VecDeque::new()),
            dropped: AtomicU64::new(0),
            connected: AtomicBool::new(false),
            shutdown: AtomicBool::new(false),
        });
        let s = shared.clone();
        let register = encode(&register);
        let writer = thread::Builder::new()
            .name("ccc-writer".into())
            .spawn(move || writer_loop(&addr, &register, &s))
            .expect("spawn writer thread");
        Self { shared, writer: Some(writer) }
    }

    /// Queues a message without blocking; drops the oldest one when full.
    pub fn send(&self, msg: &WireMessage) {
        let bytes = encode(msg);
        let mut q = self.shared.outbox.queue.lock().expect("outbox lock");
        if q.len() >= self.shared.capacity {
            q.pop_front();
            self.shared.dropped.fetch_add(1, Ordering::Relaxed);
        }
        q.push_back(bytes);
        self.shared.outbox.ready.notify_one();
    }

    /// Moves everything received since the last call into `queue`.
    pub fn drain_into(&self, queue: &mut VecDeque<Inbound>) {
        queue.extend(self.shared.inbox.lock().expect("inbox lock").drain(..));
    }

    /// Messages discarded because the outbox was full.
    pub fn dropped(&self) -> u64 {
        self.shared.dropped.load(Ordering::Relaxed)
    }

    pub fn is_connected(&self) -> bool {
        self.shared.connected.load(Ordering::Relaxed)
    }
}

impl Drop for CccLink {
    fn drop(&mut self) {
        self.shared.shutdown.store(true, Ordering::Relaxed);
        self.shared.outbox.ready.notify_all();
        if let Some(h) = self.writer.take() {
            let _ = h.join();
        }
    }
}

fn connect(addr: &str) -> std::io::Result<TcpStream> {
    let mut last = std::io::Error::new(std::io::ErrorKind::NotFound, "address did not resolve");
    for a in addr.to_socket_addrs()? {
        match TcpStream::connect_timeout(&a, Duration::from_secs(2)) {
            Ok(s) => {
                s.set_nodelay(true)?;
                return Ok(s);
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

fn writer_loop(addr: &str, register: &[u8], shared: &Arc<Shared>) {
    while !shared.shutdown.load(Ordering::Relaxed) {
        let mut stream = match connect(addr) {
            Ok(s) => s,
            Err(e) => {
                debug!(addr, error = %e, "connect failed");
                thread::sleep(RECONNECT_DELAY);
                continue;
            }
        };
        if let Err(e) = write_frame(&mut stream, register) {
            warn!(error = %e, "register failed");
            continue;
        }
        info!(addr, "connected to ccc");
        shared.connected.store(true, Ordering::Relaxed);
        let reader = stream.try_clone().map(|r| {
            let s = shared.clone();
            thread::spawn(move || reader_loop(r, &s))
        });
        pump(&mut stream, shared);
        shared.connected.store(false, Ordering::Relaxed);
        let _ = stream.shutdown(Shutdown::Both);
        if let Ok(h) = reader {
            let _ = h.join();
        }
        if !shared.shutdown.load(Ordering::Relaxed) {
            warn!("ccc connection lost, reconnecting");
            thread::sleep(RECONNECT_DELAY);
        }
    }
}

/// Writes queued messages until the connection fails or shutdown.
fn pump(stream: &mut TcpStream, shared: &Shared) {
    loop {
        let next = {
            let mut q = shared.outbox.queue.lock().expect("outbox lock");
            loop {
                if shared.shutdown.load(Ordering::Relaxed) {
                    return;
                }
                if let Some(b) = q.pop_front() {
                    break b;
                }
                q = shared
                    .outbox
                    .ready
                    .wait_timeout(q, Duration::from_millis(200))
                    .expect("outbox lock")
                    .0;
            }
        };
        if let Err(e) = write_frame(stream, &next) {
            debug!(error = %e, "write failed");
            return;
        }
    }
}

fn reader_loop(stream: TcpStream, shared: &Shared) {
    let mut r = BufReader::new(stream);
    loop {
        match read_frame(&mut r) {
            Ok(Some(frame)) => {
                let item = handle_ccc_frame(&frame);
                shared.inbox.lock().expect("inbox lock").push_back(item);
            }
            Ok(None) => break,
            Err(e) => {
                debug!(error = %e, "read failed");
                break;
            }
        }
    }
}
