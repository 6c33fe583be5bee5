//! Deterministic broadcast medium.
//!
//! Frames sent during tick `t` go on air at tick `t + 1`. Routing reads only
//! the destination address (bytes 7..13); the source address is never
//! checked, so any endpoint can claim any MAC. Each frame on air gets one
//! Bernoulli loss draw from the medium's seeded generator, is copied to every
//! promiscuous tap, and then either delivered or dropped.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::frame::MacAddress;

/// Default guard for [`Medium::run_until_idle`].
pub const DEFAULT_MAX_TICKS: u64 = 10_000;

/// Identifier endpoints are attached under (e.g. `"ap0"`, `"attacker1"`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct EndpointId(pub String);

impl From<&str> for EndpointId {
    fn from(s: &str) -> Self {
        EndpointId(s.to_string())
    }
}

impl From<String> for EndpointId {
    fn from(s: String) -> Self {
        EndpointId(s)
    }
}

impl fmt::Display for EndpointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediumConfig {
    /// Per-frame loss probability in `[0, 1]`.
    pub loss_probability: f64,
    pub seed: u64,
    /// Endpoints that observe every frame on air.
    pub promiscuous_taps: Vec<EndpointId>,
    /// Upper bound on ticks processed by one `run_until_idle` call.
    pub max_ticks: u64,
}

impl Default for MediumConfig {
    fn default() -> Self {
        MediumConfig {
            loss_probability: 0.0,
            seed: 0,
            promiscuous_taps: Vec::new(),
            max_ticks: DEFAULT_MAX_TICKS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Delivered,
    Dropped,
    Injected,
    Sniffed,
}

/// Recipient label for broadcast deliveries.
pub const BROADCAST_LABEL: &str = "broadcast";
/// Recipient label for frames whose destination no endpoint owns.
pub const UNROUTABLE_LABEL: &str = "unroutable";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MediumEvent {
    pub tick: u64,
    pub kind: EventKind,
    pub from: EndpointId,
    pub to: EndpointId,
    #[serde(rename = "frame", serialize_with = "as_hex")]
    pub frame_bytes: Vec<u8>,
}

fn as_hex<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&hex::encode(bytes))
}

impl MediumEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("event serializes")
    }
}

/// Writes events as JSON Lines.
pub fn write_jsonl<W: Write>(mut w: W, events: &[MediumEvent]) -> io::Result<()> {
    for e in events {
        writeln!(w, "{}", e.to_json_line())?;
    }
    Ok(())
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MediumError {
    #[error("endpoint {0} is already attached")]
    DuplicateEndpoint(EndpointId),
    #[error("MAC {0} is already owned by another endpoint")]
    DuplicateMac(MacAddress),
    #[error("endpoint handle is not attached")]
    Detached,
    #[error("medium still busy after {0} ticks")]
    TickLimitExceeded(u64),
}

/// Context handed to an endpoint alongside each delivered frame.
#[derive(Debug, Clone, Copy)]
pub struct Delivery<'a> {
    pub tick: u64,
    /// Attached identity of the sender, regardless of the MAC it claims.
    pub from: &'a EndpointId,
}

/// Something attached to the medium.
pub trait Endpoint {
    /// The MAC frames are routed to; `None` for pure transmitters/observers.
    fn mac(&self) -> Option<MacAddress>;

    /// Handles a delivered frame, returning frames to send in reply.
    fn receive(&mut self, delivery: Delivery<'_>, bytes: &[u8]) -> Vec<Vec<u8>>;

    /// Called for taps with a copy of every frame on air.
    fn sniff(&mut self, _event: &MediumEvent) {}
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Handle(usize);

struct Slot<E> {
    id: EndpointId,
    endpoint: Option<E>,
}

struct InFlight {
    from: usize,
    bytes: Vec<u8>,
}

/// Counters over the medium's lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MediumStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
}

pub struct Medium<E> {
    config: MediumConfig,
    rng: ChaCha20Rng,
    slots: Vec<Slot<E>>,
    ids: HashMap<EndpointId, usize>,
    macs: HashMap<MacAddress, usize>,
    /// Frames to go on air at `tick + 1`.
    queue: VecDeque<InFlight>,
    tick: u64,
    log: Vec<MediumEvent>,
    stats: MediumStats,
}

impl<E: Endpoint> Medium<E> {
    pub fn new(config: MediumConfig) -> Self {
        Medium {
            rng: loss_rng(config.seed),
            config,
            slots: Vec::new(),
            ids: HashMap::new(),
            macs: HashMap::new(),
            queue: VecDeque::new(),
            tick: 0,
            log: Vec::new(),
            stats: MediumStats::default(),
        }
    }

    pub fn config(&self) -> &MediumConfig {
        &self.config
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn log(&self) -> &[MediumEvent] {
        &self.log
    }

    pub fn stats(&self) -> MediumStats {
        self.stats
    }

    pub fn attach(&mut self, id: impl Into<EndpointId>, endpoint: E) -> Result<Handle, MediumError> {
        let id = id.into();
        if self.ids.contains_key(&id) {
            return Err(MediumError::DuplicateEndpoint(id));
        }
        if let Some(mac) = endpoint.mac() {
            if self.macs.contains_key(&mac) {
                return Err(MediumError::DuplicateMac(mac));
            }
            self.macs.insert(mac, self.slots.len());
        }
        self.ids.insert(id.clone(), self.slots.len());
        self.slots.push(Slot {
            id,
            endpoint: Some(endpoint),
        });
        Ok(Handle(self.slots.len() - 1))
    }

    /// Removes an endpoint, returning it. Its id stays reserved.
    pub fn detach(&mut self, handle: Handle) -> Result<E, MediumError> {
        let slot = self.slots.get_mut(handle.0).ok_or(MediumError::Detached)?;
        let endpoint = slot.endpoint.take().ok_or(MediumError::Detached)?;
        self.macs.retain(|_, idx| *idx != handle.0);
        Ok(endpoint)
    }

    pub fn handle(&self, id: &EndpointId) -> Option<Handle> {
        self.ids.get(id).copied().map(Handle)
    }

    pub fn endpoint(&self, handle: Handle) -> Option<&E> {
        self.slots.get(handle.0).and_then(|s| s.endpoint.as_ref())
    }

    pub fn endpoint_mut(&mut self, handle: Handle) -> Option<&mut E> {
        self.slots.get_mut(handle.0).and_then(|s| s.endpoint.as_mut())
    }

    pub fn endpoints(&self) -> impl Iterator<Item = (&EndpointId, &E)> {
        self.slots
            .iter()
            .filter_map(|s| s.endpoint.as_ref().map(|e| (&s.id, e)))
    }

    pub fn id(&self, handle: Handle) -> Option<&EndpointId> {
        self.slots.get(handle.0).map(|s| &s.id)
    }

    /// Queues `bytes` for transmission at the next tick. The medium does not
    /// look at the payload beyond the destination address.
    pub fn send(&mut self, from: Handle, bytes: Vec<u8>) -> Result<(), MediumError> {
        self.check_attached(from)?;
        self.enqueue(from.0, bytes);
        Ok(())
    }

    /// Like [`send`](Self::send) but also logs an `Injected` event, marking
    /// adversarial transmissions in the log.
    pub fn inject(&mut self, from: Handle, bytes: Vec<u8>) -> Result<(), MediumError> {
        self.check_attached(from)?;
        self.log.push(MediumEvent {
            tick: self.tick,
            kind: EventKind::Injected,
            from: self.slots[from.0].id.clone(),
            to: self.destination_label(&bytes),
            frame_bytes: bytes.clone(),
        });
        self.enqueue(from.0, bytes);
        Ok(())
    }

    fn check_attached(&self, h: Handle) -> Result<(), MediumError> {
        match self.slots.get(h.0) {
            Some(Slot {
                endpoint: Some(_), ..
            }) => Ok(()),
            _ => Err(MediumError::Detached),
        }
    }

    fn enqueue(&mut self, from: usize, bytes: Vec<u8>) {
        self.stats.sent += 1;
        self.queue.push_back(InFlight { from, bytes });
    }

    pub fn is_idle(&self) -> bool {
        self.queue.is_empty()
    }

    /// Processes queued frames tick by tick until nothing is in flight.
    /// Returns the events logged by this call.
    pub fn run_until_idle(&mut self) -> Result<Vec<MediumEvent>, MediumError> {
        let first_event = self.log.len();
        let mut ticks = 0;
        while !self.queue.is_empty() {
            if ticks >= self.config.max_ticks {
                return Err(MediumError::TickLimitExceeded(self.config.max_ticks));
            }
            ticks += 1;
            self.tick += 1;
            let on_air: Vec<_> = self.queue.drain(..).collect();
            for frame in on_air {
                self.transmit(frame);
            }
        }
        Ok(self.log[first_event..].to_vec())
    }

    fn destination(&self, bytes: &[u8]) -> Destination {
        let Some(dst) = bytes.get(7..13) else {
            return Destination::Unroutable;
        };
        let mac = MacAddress(dst.try_into().unwrap());
        if mac.is_broadcast() {
            return Destination::Broadcast;
        }
        match self.macs.get(&mac) {
            Some(&idx) => Destination::Unicast(idx),
            None => Destination::Unroutable,
        }
    }

    fn destination_label(&self, bytes: &[u8]) -> EndpointId {
        match self.destination(bytes) {
            Destination::Unicast(idx) => self.slots[idx].id.clone(),
            Destination::Broadcast => BROADCAST_LABEL.into(),
            Destination::Unroutable => UNROUTABLE_LABEL.into(),
        }
    }

    fn transmit(&mut self, frame: InFlight) {
        let lost = self.rng.random::<f64>() < self.config.loss_probability;
        let from_id = self.slots[frame.from].id.clone();

        for tap in self.config.promiscuous_taps.clone() {
            let Some(&idx) = self.ids.get(&tap) else { continue };
            let event = MediumEvent {
                tick: self.tick,
                kind: EventKind::Sniffed,
                from: from_id.clone(),
                to: tap,
                frame_bytes: frame.bytes.clone(),
            };
            if let Some(ep) = self.slots[idx].endpoint.as_mut() {
                ep.sniff(&event);
            }
            self.log.push(event);
        }

        let dest = self.destination(&frame.bytes);
        let to = self.destination_label(&frame.bytes);
        let routable = !matches!(dest, Destination::Unroutable);
        let kind = if lost || !routable {
            self.stats.dropped += 1;
            EventKind::Dropped
        } else {
            self.stats.delivered += 1;
            EventKind::Delivered
        };
        self.log.push(MediumEvent {
            tick: self.tick,
            kind,
            from: from_id.clone(),
            to,
            frame_bytes: frame.bytes.clone(),
        });
        if kind == EventKind::Dropped {
            return;
        }

        let recipients: Vec<usize> = match dest {
            Destination::Unicast(idx) => vec![idx],
            Destination::Broadcast => self
                .macs
                .values()
                .copied()
                .filter(|&i| i != frame.from)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect(),
            Destination::Unroutable => unreachable!(),
        };
        for idx in recipients {
            let tick = self.tick;
            let Some(ep) = self.slots[idx].endpoint.as_mut() else { continue };
            let replies = ep.receive(Delivery { tick, from: &from_id }, &frame.bytes);
            for reply in replies {
                self.enqueue(idx, reply);
            }
        }
    }
}

enum Destination {
    Unicast(usize),
    Broadcast,
    Unroutable,
}

/// The loss generator a medium seeded with `seed` uses.
pub fn loss_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}
