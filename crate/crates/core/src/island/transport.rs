//! Best-effort broadcast transports. Loss is never an error: a send that
//! does not arrive simply leaves the receiver's evolution untouched.

use std::io::ErrorKind;
use std::net::{SocketAddr, UdpSocket};
use std::sync::{Arc, Mutex};

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::envelope::MigrantEnvelope;

pub trait Transport: Send {
    /// Broadcasts one envelope; failures are swallowed.
    fn send(&mut self, envelope: &MigrantEnvelope);

    /// Takes every envelope received so far. Frames that fail to decode
    /// are dropped and counted in the second element.
    fn drain(&mut self) -> (Vec<MigrantEnvelope>, usize);
}

fn decode_all(frames: Vec<Vec<u8>>) -> (Vec<MigrantEnvelope>, usize) {
    let mut bad = 0;
    let good = frames
        .into_iter()
        .filter_map(|f| match MigrantEnvelope::decode(&f) {
            Ok(e) => Some(e),
            Err(e) => {
                debug!("dropping frame: {e}");
                bad += 1;
                None
            }
        })
        .collect();
    (good, bad)
}

struct BusState {
    pending: Vec<(usize, Vec<u8>)>,
    inboxes: Vec<Vec<Vec<u8>>>,
    loss: f64,
    rng: ChaCha8Rng,
    delivered: usize,
    lost: usize,
}

/// In-process broadcast bus for lock-step simulation. Sends are queued and
/// delivered to every other endpoint at [`SimulatedBus::flush`], each copy
/// independently lost with the configured probability.
#[derive(Clone)]
pub struct SimulatedBus {
    state: Arc<Mutex<BusState>>,
}

impl SimulatedBus {
    pub fn new(endpoints: usize, loss: f64, seed: u64) -> Self {
        Self {
            state: Arc::new(Mutex::new(BusState {
                pending: Vec::new(),
                inboxes: vec![Vec::new(); endpoints],
                loss: loss.clamp(0.0, 1.0),
                rng: ChaCha8Rng::seed_from_u64(seed),
                delivered: 0,
                lost: 0,
            })),
        }
    }

    pub fn endpoint(&self, id: usize) -> SimEndpoint {
        SimEndpoint {
            id,
            bus: self.clone(),
        }
    }

    /// Generation barrier: moves queued frames into inboxes. Frames are
    /// processed in sender order so concurrent senders stay deterministic.
    pub fn flush(&self) {
        let mut state = self.state.lock().expect("bus lock poisoned");
        let mut pending = std::mem::take(&mut state.pending);
        pending.sort_by_key(|(from, _)| *from);
        let receivers = state.inboxes.len();
        for (from, frame) in pending {
            for to in (0..receivers).filter(|&to| to != from) {
                let loss = state.loss;
                if state.rng.gen_bool(loss) {
                    state.lost += 1;
                } else {
                    state.delivered += 1;
                    state.inboxes[to].push(frame.clone());
                }
            }
        }
    }

    /// `(delivered, lost)` copies so far.
    pub fn counters(&self) -> (usize, usize) {
        let state = self.state.lock().expect("bus lock poisoned");
        (state.delivered, state.lost)
    }

    /// Queues a raw frame as if endpoint `from` had sent it.
    pub fn inject_raw(&self, from: usize, frame: Vec<u8>) {
        self.state
            .lock()
            .expect("bus lock poisoned")
            .pending
            .push((from, frame));
    }
}

pub struct SimEndpoint {
    id: usize,
    bus: SimulatedBus,
}

impl Transport for SimEndpoint {
    fn send(&mut self, envelope: &MigrantEnvelope) {
        self.bus.inject_raw(self.id, envelope.encode());
    }

    fn drain(&mut self) -> (Vec<MigrantEnvelope>, usize) {
        let frames = {
            let mut state = self.bus.state.lock().expect("bus lock poisoned");
            std::mem::take(&mut state.inboxes[self.id])
        };
        decode_all(frames)
    }
}

/// One envelope per UDP datagram, sent to each configured destination
/// (which may be a broadcast address). Receiving is non-blocking.
pub struct UdpTransport {
    socket: UdpSocket,
    local: SocketAddr,
    destinations: Vec<SocketAddr>,
    loss: f64,
    rng: ChaCha8Rng,
}

/// Largest datagram read back; longer frames are truncated and then fail
/// to decode.
const MAX_DATAGRAM: usize = 64 * 1024;

impl UdpTransport {
    pub fn bind(addr: SocketAddr) -> std::io::Result<Self> {
        let socket = UdpSocket::bind(addr)?;
        socket.set_nonblocking(true)?;
        socket.set_broadcast(true)?;
        let local = socket.local_addr()?;
        Ok(Self {
            socket,
            local,
            destinations: Vec::new(),
            loss: 0.0,
            rng: ChaCha8Rng::seed_from_u64(0),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.local
    }

    pub fn with_destinations(mut self, destinations: Vec<SocketAddr>) -> Self {
        self.destinations = destinations;
        self
    }

    /// Extra simulated loss on top of whatever the network does.
    pub fn with_loss(mut self, loss: f64, seed: u64) -> Self {
        self.loss = loss.clamp(0.0, 1.0);
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self
    }
}

impl Transport for UdpTransport {
    fn send(&mut self, envelope: &MigrantEnvelope) {
        let frame = envelope.encode();
        for dest in &self.destinations {
            if self.rng.gen_bool(self.loss) {
                continue;
            }
            if let Err(e) = self.socket.send_to(&frame, dest) {
                debug!("udp send to {dest} failed: {e}");
            }
        }
    }

    fn drain(&mut self) -> (Vec<MigrantEnvelope>, usize) {
        let mut frames = Vec::new();
        let mut buf = vec![0u8; MAX_DATAGRAM];
        loop {
            match self.socket.recv_from(&mut buf) {
                // our own broadcasts loop back; skip them by source address
                Ok((_, from)) if from == self.local => continue,
                Ok((len, _)) => frames.push(buf[..len].to_vec()),
                Err(e) if e.kind() == ErrorKind::WouldBlock => break,
                Err(e) if e.kind() == ErrorKind::Interrupted => continue,
                Err(e) => {
                    debug!("udp receive failed: {e}");
                    break;
                }
            }
        }
        decode_all(frames)
    }
}
