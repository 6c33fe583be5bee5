//! Client and access-point state machines.
//!
//! Association is extended with a hash commitment on each side: the client
//! sends `SHA-512(u1)` in its association request and the AP answers with
//! `SHA-512(u2)`. A later deauthentication or disassociation is honoured only
//! when it reveals the token behind the commitment the receiver holds for the
//! sender. In [`Mode::Legacy`] teardown frames are accepted unchecked, which
//! is how stock 802.11 behaves.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::RngCore;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{ManagementFrame, MacAddress, ReasonClass, ReasonCode, Subtype};
use crate::tokens::{generate_token, hash_token, hash_token_bytes, Digest, Token, TOKEN_LEN};

/// Status code in an association response: success.
pub const STATUS_SUCCESS: u16 = 0;
/// Status code in an association response: refused.
pub const STATUS_REFUSED: u16 = 1;

/// Per-peer link state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum LifecycleState {
    /// State 1: unauthenticated and unassociated.
    #[serde(rename = "S1")]
    Unauthenticated,
    /// State 2: authenticated, not associated.
    #[serde(rename = "S2")]
    Authenticated,
    /// State 3: authenticated and associated.
    #[serde(rename = "S3")]
    Associated,
    /// State 4: associated and 802.1X authenticated. Label only.
    #[serde(rename = "S4")]
    Dot1xAuthenticated,
}

impl LifecycleState {
    pub const ALL: [LifecycleState; 4] = [
        LifecycleState::Unauthenticated,
        LifecycleState::Authenticated,
        LifecycleState::Associated,
        LifecycleState::Dot1xAuthenticated,
    ];

    pub fn label(self) -> &'static str {
        match self {
            LifecycleState::Unauthenticated => "S1",
            LifecycleState::Authenticated => "S2",
            LifecycleState::Associated => "S3",
            LifecycleState::Dot1xAuthenticated => "S4",
        }
    }

    pub fn is_associated(self) -> bool {
        self >= LifecycleState::Associated
    }
}

impl fmt::Display for LifecycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LifecycleEvent {
    AuthOk,
    AssocOk,
    Dot1xOk,
    VerifiedDisassoc,
    VerifiedDeauth,
}

impl LifecycleEvent {
    pub const ALL: [LifecycleEvent; 5] = [
        LifecycleEvent::AuthOk,
        LifecycleEvent::AssocOk,
        LifecycleEvent::Dot1xOk,
        LifecycleEvent::VerifiedDisassoc,
        LifecycleEvent::VerifiedDeauth,
    ];

    /// The event a teardown frame of this subtype triggers once accepted.
    pub fn for_teardown(subtype: Subtype) -> Option<Self> {
        match subtype {
            Subtype::Deauthentication => Some(LifecycleEvent::VerifiedDeauth),
            Subtype::Disassociation => Some(LifecycleEvent::VerifiedDisassoc),
            _ => None,
        }
    }
}

/// Total transition function. Pairs without an edge leave the state as is.
pub fn transition(state: LifecycleState, event: LifecycleEvent) -> LifecycleState {
    use LifecycleEvent::*;
    use LifecycleState::*;
    match (state, event) {
        (Unauthenticated, AuthOk) => Authenticated,
        (Authenticated, AssocOk) => Associated,
        (Associated, Dot1xOk) => Dot1xAuthenticated,
        (Associated | Dot1xAuthenticated, VerifiedDisassoc) => Authenticated,
        (_, VerifiedDeauth) => Unauthenticated,
        (s, _) => s,
    }
}

/// Whether teardown frames are verified against tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Protected,
    Legacy,
}

/// One side's record of an association.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionRecord {
    pub peer: MacAddress,
    own_token: Token,
    own_hash: Digest,
    /// The peer's commitment; `None` only while the client's request is in
    /// flight.
    pub peer_hash: Option<Digest>,
    pub state: LifecycleState,
}

impl SessionRecord {
    pub fn new(peer: MacAddress, own_token: Token, state: LifecycleState) -> Self {
        SessionRecord {
            peer,
            own_token,
            own_hash: hash_token(&own_token),
            peer_hash: None,
            state,
        }
    }

    pub fn own_token(&self) -> &Token {
        &self.own_token
    }

    pub fn own_hash(&self) -> &Digest {
        &self.own_hash
    }

    pub fn is_established(&self) -> bool {
        self.state.is_associated() && self.peer_hash.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Accept,
    Ignore,
    Reject,
}

/// Why a frame was accepted, ignored or rejected. Rendered as stable
/// snake_case tags in scenario logs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cause {
    AssocAccepted,
    AssocConfirmed,
    TokenVerified,
    LegacyAccepted,
    MissingHash,
    ReplayedHash,
    SessionActive,
    AssocRefused,
    NoSession,
    MissingToken,
    TokenMismatch,
    ReservedReason,
    UnspecifiedReason,
    UnauthenticatedReason,
    UnexpectedFrame,
}

impl Cause {
    pub fn as_str(self) -> &'static str {
        match self {
            Cause::AssocAccepted => "assoc_accepted",
            Cause::AssocConfirmed => "assoc_confirmed",
            Cause::TokenVerified => "token_verified",
            Cause::LegacyAccepted => "legacy_accepted",
            Cause::MissingHash => "missing_hash",
            Cause::ReplayedHash => "replayed_hash",
            Cause::SessionActive => "session_active",
            Cause::AssocRefused => "assoc_refused",
            Cause::NoSession => "no_session",
            Cause::MissingToken => "missing_token",
            Cause::TokenMismatch => "token_mismatch",
            Cause::ReservedReason => "reserved_reason",
            Cause::UnspecifiedReason => "unspecified_reason",
            Cause::UnauthenticatedReason => "unauthenticated_reason",
            Cause::UnexpectedFrame => "unexpected_frame",
        }
    }
}

impl fmt::Display for Cause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of handling one frame. `Accept` on a teardown frame means a
/// session was deleted; `Ignore` and `Reject` leave station state untouched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Verdict {
    pub action: Action,
    pub cause: Cause,
}

impl Verdict {
    pub const fn accept(cause: Cause) -> Self {
        Verdict { action: Action::Accept, cause }
    }
    pub const fn ignore(cause: Cause) -> Self {
        Verdict { action: Action::Ignore, cause }
    }
    pub const fn reject(cause: Cause) -> Self {
        Verdict { action: Action::Reject, cause }
    }

    pub fn is_accept(&self) -> bool {
        self.action == Action::Accept
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}({})", self.action, self.cause)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StationError {
    #[error("link with {peer} is in state {state}, expected {expected}")]
    WrongState {
        peer: MacAddress,
        state: LifecycleState,
        expected: &'static str,
    },
    #[error("frame subtype {got:?} cannot be handled here, expected {expected}")]
    MalformedFrame {
        got: Subtype,
        expected: &'static str,
    },
    #[error("no association in flight with {0}")]
    NoPendingSession(MacAddress),
    #[error("no session with {0}")]
    NoSession(MacAddress),
}

/// Builds the token-revealing teardown frame for `session`.
///
/// Reason 8 is sent as a disassociation; every other reason as a
/// deauthentication.
pub fn make_verified_deauth(
    own_mac: MacAddress,
    session: &SessionRecord,
    reason: ReasonCode,
) -> Result<ManagementFrame, StationError> {
    if !session.is_established() {
        return Err(StationError::WrongState {
            peer: session.peer,
            state: session.state,
            expected: "S3 or S4",
        });
    }
    let token = Some(*session.own_token.as_bytes());
    Ok(if reason == ReasonCode::DISASSOC_LEAVING {
        ManagementFrame::disassoc(own_mac, session.peer, reason, token)
    } else {
        ManagementFrame::deauth(own_mac, session.peer, reason, token)
    })
}

/// A deleted session together with the token that authorised the deletion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Teardown {
    pub peer: MacAddress,
    /// The commitment held for the peer when the session was deleted.
    pub expected: Digest,
    /// Token carried by the frame; `None` for legacy deletions of token-less
    /// frames.
    pub presented: Option<[u8; TOKEN_LEN]>,
    pub event: LifecycleEvent,
}

impl Teardown {
    /// True when the presented token opens the commitment.
    pub fn is_authorised(&self) -> bool {
        self.presented
            .is_some_and(|t| hash_token_bytes(&t) == self.expected)
    }
}

/// Anything holding established sessions keyed by peer MAC: the AP's store
/// or a client's set of links.
pub trait SessionTable {
    fn established(&self, peer: &MacAddress) -> Option<&SessionRecord>;

    /// Deletes the session with `peer` and applies `event` to the link.
    fn end_session(&mut self, teardown: Teardown);
}

fn teardown_event(frame: &ManagementFrame) -> Result<LifecycleEvent, StationError> {
    LifecycleEvent::for_teardown(frame.subtype).ok_or(StationError::MalformedFrame {
        got: frame.subtype,
        expected: "deauthentication or disassociation",
    })
}

/// Token-checked handling of a deauthentication or disassociation frame.
pub fn verify_deauth<T: SessionTable + ?Sized>(
    table: &mut T,
    frame: &ManagementFrame,
) -> Result<Verdict, StationError> {
    let event = teardown_event(frame)?;
    let session = table.established(&frame.src);
    let verdict = match frame.reason().class() {
        ReasonClass::Reserved => Verdict::ignore(Cause::ReservedReason),
        ReasonClass::Unspecified => Verdict::reject(Cause::UnspecifiedReason),
        ReasonClass::Unauthenticated => match session {
            None => Verdict::ignore(Cause::NoSession),
            Some(_) => Verdict::ignore(Cause::UnauthenticatedReason),
        },
        ReasonClass::Departure => {
            let Some(session) = session else {
                return Ok(Verdict::ignore(Cause::NoSession));
            };
            let Some(token) = frame.token_ie() else {
                return Ok(Verdict::ignore(Cause::MissingToken));
            };
            let expected = session.peer_hash.expect("established session has a peer hash");
            if hash_token_bytes(token) != expected {
                return Ok(Verdict::ignore(Cause::TokenMismatch));
            }
            table.end_session(Teardown {
                peer: frame.src,
                expected,
                presented: Some(*token),
                event,
            });
            Verdict::accept(Cause::TokenVerified)
        }
    };
    Ok(verdict)
}

/// Stock 802.11 handling: any teardown frame from a MAC with a session ends
/// it.
pub fn legacy_verify_deauth<T: SessionTable + ?Sized>(
    table: &mut T,
    frame: &ManagementFrame,
) -> Result<Verdict, StationError> {
    let event = teardown_event(frame)?;
    let Some(session) = table.established(&frame.src) else {
        return Ok(Verdict::ignore(Cause::NoSession));
    };
    let teardown = Teardown {
        peer: frame.src,
        expected: session.peer_hash.expect("established session has a peer hash"),
        presented: frame.token_ie().copied(),
        event,
    };
    table.end_session(teardown);
    Ok(Verdict::accept(Cause::LegacyAccepted))
}

/// The AP's association memory.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ApStore {
    pub sessions: BTreeMap<MacAddress, SessionRecord>,
    /// Every client commitment ever accepted. Never shrinks.
    pub seen_hashes: BTreeSet<Digest>,
    /// Audit trail of deleted sessions.
    pub teardowns: Vec<Teardown>,
}

impl SessionTable for ApStore {
    fn established(&self, peer: &MacAddress) -> Option<&SessionRecord> {
        self.sessions.get(peer).filter(|s| s.is_established())
    }

    fn end_session(&mut self, teardown: Teardown) {
        self.sessions.remove(&teardown.peer);
        self.teardowns.push(teardown);
    }
}

/// Handles an association request at the AP.
///
/// A fresh commitment is recorded and answered with the AP's own; a missing
/// commitment, one seen before, or a request from a client that already has
/// a session is refused with status 1 and no state change.
pub fn ap_handle_assoc_request<R: RngCore + ?Sized>(
    ap: &mut ApStore,
    frame: &ManagementFrame,
    rng: &mut R,
) -> Result<(ManagementFrame, Verdict), StationError> {
    if frame.subtype != Subtype::AssocRequest {
        return Err(StationError::MalformedFrame {
            got: frame.subtype,
            expected: "association request",
        });
    }
    let refuse = |cause| {
        (
            ManagementFrame::assoc_response(frame.dst, frame.src, STATUS_REFUSED, None),
            Verdict::reject(cause),
        )
    };
    let Some(h1) = frame.hash_ie() else {
        return Ok(refuse(Cause::MissingHash));
    };
    if ap.seen_hashes.contains(h1) {
        return Ok(refuse(Cause::ReplayedHash));
    }
    if ap.sessions.contains_key(&frame.src) {
        return Ok(refuse(Cause::SessionActive));
    }

    ap.seen_hashes.insert(*h1);
    let mut session = SessionRecord::new(frame.src, generate_token(rng), LifecycleState::Associated);
    session.peer_hash = Some(*h1);
    let response = ManagementFrame::assoc_response(
        frame.dst,
        frame.src,
        STATUS_SUCCESS,
        Some(*session.own_hash()),
    );
    ap.sessions.insert(frame.src, session);
    Ok((response, Verdict::accept(Cause::AssocAccepted)))
}

/// An access point: its MAC, store, mode and token generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ApStation {
    mac: MacAddress,
    mode: Mode,
    store: ApStore,
    rng: ChaCha20Rng,
}

/// What a station did with one received frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reception {
    pub replies: Vec<ManagementFrame>,
    /// Set for association requests and teardown frames.
    pub verdict: Option<Verdict>,
}

impl ApStation {
    pub fn new(mac: MacAddress, mode: Mode, rng: ChaCha20Rng) -> Self {
        ApStation {
            mac,
            mode,
            store: ApStore::default(),
            rng,
        }
    }

    pub fn mac(&self) -> MacAddress {
        self.mac
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn store(&self) -> &ApStore {
        &self.store
    }

    pub fn session(&self, client: &MacAddress) -> Option<&SessionRecord> {
        self.store.sessions.get(client)
    }

    pub fn handle_assoc_request(
        &mut self,
        frame: &ManagementFrame,
    ) -> Result<(ManagementFrame, Verdict), StationError> {
        ap_handle_assoc_request(&mut self.store, frame, &mut self.rng)
    }

    pub fn handle_teardown(&mut self, frame: &ManagementFrame) -> Result<Verdict, StationError> {
        match self.mode {
            Mode::Protected => verify_deauth(&mut self.store, frame),
            Mode::Legacy => legacy_verify_deauth(&mut self.store, frame),
        }
    }

    /// Ends the session with `client`, returning the frame to send.
    pub fn disconnect(
        &mut self,
        client: MacAddress,
        reason: ReasonCode,
    ) -> Result<ManagementFrame, StationError> {
        let session = self
            .store
            .sessions
            .get(&client)
            .ok_or(StationError::NoSession(client))?;
        let frame = make_verified_deauth(self.mac, session, reason)?;
        self.store.sessions.remove(&client);
        Ok(frame)
    }

    /// Disconnects every client, one unicast frame per session since each
    /// client holds a different AP token.
    pub fn disconnect_all(&mut self, reason: ReasonCode) -> Vec<ManagementFrame> {
        let clients: Vec<_> = self.store.sessions.keys().copied().collect();
        clients
            .into_iter()
            .filter_map(|c| self.disconnect(c, reason).ok())
            .collect()
    }

    pub fn receive(&mut self, frame: &ManagementFrame) -> Reception {
        if frame.dst != self.mac && !frame.dst.is_broadcast() {
            return Reception::default();
        }
        match frame.subtype {
            // Open system authentication: always granted, no AP-side state.
            Subtype::AuthRequest => Reception {
                replies: vec![ManagementFrame::auth_response(self.mac, frame.src)],
                verdict: None,
            },
            Subtype::AssocRequest => {
                let (reply, verdict) = self
                    .handle_assoc_request(frame)
                    .expect("subtype checked above");
                Reception {
                    replies: vec![reply],
                    verdict: Some(verdict),
                }
            }
            s if s.is_teardown() => Reception {
                replies: vec![],
                verdict: Some(self.handle_teardown(frame).expect("subtype checked above")),
            },
            _ => Reception::default(),
        }
    }
}

/// A client's view of one AP.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientLink {
    pub state: LifecycleState,
    pub session: Option<SessionRecord>,
}

impl Default for ClientLink {
    fn default() -> Self {
        ClientLink {
            state: LifecycleState::Unauthenticated,
            session: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClientLinks {
    pub links: BTreeMap<MacAddress, ClientLink>,
    pub teardowns: Vec<Teardown>,
}

impl SessionTable for ClientLinks {
    fn established(&self, peer: &MacAddress) -> Option<&SessionRecord> {
        self.links
            .get(peer)
            .and_then(|l| l.session.as_ref())
            .filter(|s| s.is_established())
    }

    fn end_session(&mut self, teardown: Teardown) {
        if let Some(link) = self.links.get_mut(&teardown.peer) {
            link.session = None;
            link.state = transition(link.state, teardown.event);
        }
        self.teardowns.push(teardown);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientStation {
    mac: MacAddress,
    mode: Mode,
    links: ClientLinks,
    rng: ChaCha20Rng,
}

impl ClientStation {
    pub fn new(mac: MacAddress, mode: Mode, rng: ChaCha20Rng) -> Self {
        ClientStation {
            mac,
            mode,
            links: ClientLinks::default(),
            rng,
        }
    }

    pub fn mac(&self) -> MacAddress {
        self.mac
    }

    pub fn links(&self) -> &ClientLinks {
        &self.links
    }

    pub fn state_with(&self, ap: &MacAddress) -> LifecycleState {
        self.links
            .links
            .get(ap)
            .map_or(LifecycleState::Unauthenticated, |l| l.state)
    }

    pub fn session_with(&self, ap: &MacAddress) -> Option<&SessionRecord> {
        self.links.links.get(ap).and_then(|l| l.session.as_ref())
    }

    /// Overall state: the most advanced state over all links.
    pub fn state(&self) -> LifecycleState {
        self.links
            .links
            .values()
            .map(|l| l.state)
            .max()
            .unwrap_or(LifecycleState::Unauthenticated)
    }

    pub fn begin_authentication(&mut self, ap: MacAddress) -> ManagementFrame {
        self.links.links.entry(ap).or_default();
        ManagementFrame::auth_request(self.mac, ap)
    }

    /// Marks authentication with `ap` complete. Stands in for whichever
    /// authentication exchange the network runs.
    pub fn authentication_succeeded(&mut self, ap: MacAddress) {
        let link = self.links.links.entry(ap).or_default();
        link.state = transition(link.state, LifecycleEvent::AuthOk);
    }

    /// Draws `u1` and builds the association request carrying `SHA-512(u1)`.
    pub fn begin_association(&mut self, ap: MacAddress) -> Result<ManagementFrame, StationError> {
        let link = self.links.links.entry(ap).or_default();
        if link.state != LifecycleState::Authenticated {
            return Err(StationError::WrongState {
                peer: ap,
                state: link.state,
                expected: "S2",
            });
        }
        let session = SessionRecord::new(ap, generate_token(&mut self.rng), LifecycleState::Authenticated);
        let frame = ManagementFrame::assoc_request(self.mac, ap, Some(*session.own_hash()));
        link.session = Some(session);
        Ok(frame)
    }

    pub fn handle_assoc_response(&mut self, frame: &ManagementFrame) -> Result<Verdict, StationError> {
        if frame.subtype != Subtype::AssocResponse {
            return Err(StationError::MalformedFrame {
                got: frame.subtype,
                expected: "association response",
            });
        }
        let link = self
            .links
            .links
            .get_mut(&frame.src)
            .filter(|l| l.session.as_ref().is_some_and(|s| s.peer_hash.is_none()))
            .ok_or(StationError::NoPendingSession(frame.src))?;

        match (frame.status_or_reason, frame.hash_ie()) {
            (STATUS_SUCCESS, Some(h2)) => {
                let session = link.session.as_mut().expect("filtered above");
                session.peer_hash = Some(*h2);
                link.state = transition(link.state, LifecycleEvent::AssocOk);
                session.state = link.state;
                Ok(Verdict::accept(Cause::AssocConfirmed))
            }
            _ => {
                link.session = None;
                Ok(Verdict::reject(Cause::AssocRefused))
            }
        }
    }

    pub fn handle_teardown(&mut self, frame: &ManagementFrame) -> Result<Verdict, StationError> {
        match self.mode {
            Mode::Protected => verify_deauth(&mut self.links, frame),
            Mode::Legacy => legacy_verify_deauth(&mut self.links, frame),
        }
    }

    /// Leaves `ap`, returning the token-revealing frame to send.
    pub fn disconnect(
        &mut self,
        ap: MacAddress,
        reason: ReasonCode,
    ) -> Result<ManagementFrame, StationError> {
        let link = self
            .links
            .links
            .get_mut(&ap)
            .ok_or(StationError::NoSession(ap))?;
        let session = link.session.as_ref().ok_or(StationError::NoSession(ap))?;
        let frame = make_verified_deauth(self.mac, session, reason)?;
        let event = LifecycleEvent::for_teardown(frame.subtype).expect("teardown frame");
        link.session = None;
        link.state = transition(link.state, event);
        Ok(frame)
    }

    /// APs this client currently has an established session with.
    pub fn associated_aps(&self) -> Vec<MacAddress> {
        self.links
            .links
            .iter()
            .filter(|(_, l)| l.session.as_ref().is_some_and(SessionRecord::is_established))
            .map(|(mac, _)| *mac)
            .collect()
    }

    pub fn receive(&mut self, frame: &ManagementFrame) -> Reception {
        if frame.dst != self.mac && !frame.dst.is_broadcast() {
            return Reception::default();
        }
        match frame.subtype {
            Subtype::AuthResponse => {
                if self.state_with(&frame.src) != LifecycleState::Unauthenticated
                    || !self.links.links.contains_key(&frame.src)
                {
                    return Reception::default();
                }
                self.authentication_succeeded(frame.src);
                Reception {
                    replies: self.begin_association(frame.src).into_iter().collect(),
                    verdict: None,
                }
            }
            Subtype::AssocResponse => Reception {
                replies: vec![],
                // Responses nobody asked for are dropped without a verdict.
                verdict: self.handle_assoc_response(frame).ok(),
            },
            Subtype::AssocRequest => Reception {
                replies: vec![],
                verdict: Some(Verdict::ignore(Cause::UnexpectedFrame)),
            },
            s if s.is_teardown() => Reception {
                replies: vec![],
                verdict: Some(self.handle_teardown(frame).expect("subtype checked above")),
            },
            _ => Reception::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use LifecycleEvent::*;
    use LifecycleState::*;

    const AP: MacAddress = MacAddress([0x02, 0, 0, 0, 0, 0x01]);
    const STA: MacAddress = MacAddress([0x02, 0, 0, 0, 0, 0x02]);
    const OTHER: MacAddress = MacAddress([0x02, 0, 0, 0, 0, 0x03]);

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn associated(mode: Mode) -> (ApStation, ClientStation) {
        let mut ap = ApStation::new(AP, mode, rng(1));
        let mut sta = ClientStation::new(STA, mode, rng(2));
        sta.begin_authentication(AP);
        sta.authentication_succeeded(AP);
        let req = sta.begin_association(AP).unwrap();
        let (resp, v) = ap.handle_assoc_request(&req).unwrap();
        assert_eq!(v, Verdict::accept(Cause::AssocAccepted));
        assert_eq!(sta.handle_assoc_response(&resp).unwrap(), Verdict::accept(Cause::AssocConfirmed));
        (ap, sta)
    }

    #[test]
    fn transition_edges() {
        assert_eq!(transition(Associated, VerifiedDeauth), Unauthenticated);
        assert_eq!(transition(Dot1xAuthenticated, VerifiedDisassoc), Authenticated);
        assert_eq!(transition(Unauthenticated, AssocOk), Unauthenticated);
        assert_eq!(transition(Unauthenticated, AuthOk), Authenticated);
        assert_eq!(transition(Authenticated, AssocOk), Associated);
        assert_eq!(transition(Associated, Dot1xOk), Dot1xAuthenticated);
        assert_eq!(transition(Authenticated, VerifiedDisassoc), Authenticated);
        for s in LifecycleState::ALL {
            assert_eq!(transition(s, VerifiedDeauth), Unauthenticated);
        }
    }

    #[test]
    fn association_request_carries_commitment() {
        let mut sta = ClientStation::new(STA, Mode::Protected, rng(3));
        sta.begin_authentication(AP);
        sta.authentication_succeeded(AP);
        let req = sta.begin_association(AP).unwrap();
        assert_eq!(req.encode().len(), 82);
        let session = sta.session_with(&AP).unwrap();
        assert_eq!(req.hash_ie(), Some(session.own_hash()));
        assert_eq!(*session.own_hash(), hash_token(session.own_token()));
    }

    #[test]
    fn association_requires_s2() {
        let mut sta = ClientStation::new(STA, Mode::Protected, rng(3));
        assert!(matches!(
            sta.begin_association(AP),
            Err(StationError::WrongState { state: Unauthenticated, .. })
        ));
    }

    #[test]
    fn clients_draw_distinct_tokens() {
        let mut rng_a = rng(9);
        rng_a.set_stream(1);
        let mut rng_b = rng(9);
        rng_b.set_stream(2);
        let mut a = ClientStation::new(STA, Mode::Protected, rng_a);
        let mut b = ClientStation::new(OTHER, Mode::Protected, rng_b);
        for c in [&mut a, &mut b] {
            c.authentication_succeeded(AP);
            c.begin_association(AP).unwrap();
        }
        assert_ne!(
            a.session_with(&AP).unwrap().own_token(),
            b.session_with(&AP).unwrap().own_token()
        );
    }

    #[test]
    fn ap_accepts_fresh_and_rejects_replayed() {
        let mut ap = ApStation::new(AP, Mode::Protected, rng(1));
        let req = ManagementFrame::assoc_request(STA, AP, Some(Digest::of(b"h1")));
        let (resp, v) = ap.handle_assoc_request(&req).unwrap();
        assert!(v.is_accept());
        assert_eq!(resp.status_or_reason, STATUS_SUCCESS);
        assert_eq!(resp.hash_ie(), Some(ap.session(&STA).unwrap().own_hash()));
        assert_eq!(resp.dst, STA);

        let before = ap.clone();
        let (resp, v) = ap.handle_assoc_request(&req).unwrap();
        assert_eq!(v, Verdict::reject(Cause::ReplayedHash));
        assert_eq!(resp.status_or_reason, STATUS_REFUSED);
        assert!(resp.ie.is_none());
        assert_eq!(ap, before);
    }

    #[test]
    fn ap_rejects_missing_hash() {
        let mut ap = ApStation::new(AP, Mode::Protected, rng(1));
        let (resp, v) = ap
            .handle_assoc_request(&ManagementFrame::assoc_request(STA, AP, None))
            .unwrap();
        assert_eq!(v, Verdict::reject(Cause::MissingHash));
        assert_eq!(resp.status_or_reason, STATUS_REFUSED);
        assert!(ap.store().sessions.is_empty());
        assert!(ap.store().seen_hashes.is_empty());
    }

    #[test]
    fn ap_refuses_second_session_for_same_mac() {
        let (mut ap, _) = associated(Mode::Protected);
        let before = ap.clone();
        let (_, v) = ap
            .handle_assoc_request(&ManagementFrame::assoc_request(STA, AP, Some(Digest::of(b"fresh"))))
            .unwrap();
        assert_eq!(v, Verdict::reject(Cause::SessionActive));
        assert_eq!(ap, before);
    }

    #[test]
    fn ap_assoc_wrong_subtype() {
        let mut ap = ApStation::new(AP, Mode::Protected, rng(1));
        let f = ManagementFrame::deauth(STA, AP, ReasonCode(3), None);
        assert!(matches!(
            ap.handle_assoc_request(&f),
            Err(StationError::MalformedFrame { .. })
        ));
    }

    #[test]
    fn client_response_paths() {
        let (_, sta) = associated(Mode::Protected);
        assert_eq!(sta.state_with(&AP), Associated);
        assert!(sta.session_with(&AP).unwrap().is_established());

        let mut sta = ClientStation::new(STA, Mode::Protected, rng(4));
        sta.authentication_succeeded(AP);
        sta.begin_association(AP).unwrap();
        let refused = ManagementFrame::assoc_response(AP, STA, STATUS_REFUSED, None);
        assert_eq!(sta.handle_assoc_response(&refused).unwrap(), Verdict::reject(Cause::AssocRefused));
        assert!(sta.session_with(&AP).is_none());
        assert_eq!(sta.state_with(&AP), Authenticated);

        let stranger = ManagementFrame::assoc_response(OTHER, STA, STATUS_SUCCESS, Some(Digest::of(b"")));
        assert_eq!(sta.handle_assoc_response(&stranger), Err(StationError::NoPendingSession(OTHER)));

        let no_ie = ManagementFrame::assoc_response(AP, STA, STATUS_SUCCESS, None);
        sta.begin_association(AP).unwrap();
        assert_eq!(sta.handle_assoc_response(&no_ie).unwrap(), Verdict::reject(Cause::AssocRefused));
    }

    #[test]
    fn client_deauth_verifies_at_ap() {
        let (mut ap, mut sta) = associated(Mode::Protected);
        let frame = sta.disconnect(AP, ReasonCode(3)).unwrap();
        assert_eq!(frame.subtype, Subtype::Deauthentication);
        assert_eq!(sta.state_with(&AP), Unauthenticated);
        assert_eq!(
            hash_token_bytes(frame.token_ie().unwrap()),
            ap.session(&STA).unwrap().peer_hash.unwrap()
        );
        assert_eq!(ap.handle_teardown(&frame).unwrap(), Verdict::accept(Cause::TokenVerified));
        assert!(ap.session(&STA).is_none());
        assert!(ap.store().teardowns[0].is_authorised());
        assert_eq!(ap.handle_teardown(&frame).unwrap(), Verdict::ignore(Cause::NoSession));
    }

    #[test]
    fn ap_deauth_verifies_at_client() {
        let (mut ap, mut sta) = associated(Mode::Protected);
        let frame = ap.disconnect(STA, ReasonCode(5)).unwrap();
        assert_eq!(frame.subtype, Subtype::Deauthentication);
        assert_eq!(sta.handle_teardown(&frame).unwrap(), Verdict::accept(Cause::TokenVerified));
        assert_eq!(sta.state_with(&AP), Unauthenticated);
        assert!(sta.session_with(&AP).is_none());
    }

    #[test]
    fn disassoc_drops_to_s2() {
        let (mut ap, mut sta) = associated(Mode::Protected);
        let frame = sta.disconnect(AP, ReasonCode(8)).unwrap();
        assert_eq!(frame.subtype, Subtype::Disassociation);
        assert_eq!(sta.state_with(&AP), Authenticated);
        assert!(ap.handle_teardown(&frame).unwrap().is_accept());
        assert_eq!(ap.store().teardowns[0].event, VerifiedDisassoc);

        let (mut ap, mut sta) = associated(Mode::Protected);
        let frame = ap.disconnect(STA, ReasonCode(8)).unwrap();
        assert!(sta.handle_teardown(&frame).unwrap().is_accept());
        assert_eq!(sta.state_with(&AP), Authenticated);
    }

    #[test]
    fn make_verified_deauth_needs_established_session() {
        let s = SessionRecord::new(AP, Token::random(), Authenticated);
        assert!(matches!(
            make_verified_deauth(STA, &s, ReasonCode(3)),
            Err(StationError::WrongState { state: Authenticated, .. })
        ));
    }

    #[test]
    fn forged_deauth_contrast() {
        let forged = ManagementFrame::deauth(AP, STA, ReasonCode(3), None);

        let (_, mut sta) = associated(Mode::Protected);
        let before = sta.clone();
        assert_eq!(sta.handle_teardown(&forged).unwrap(), Verdict::ignore(Cause::MissingToken));
        assert_eq!(sta, before);

        let guessed = ManagementFrame::deauth(AP, STA, ReasonCode(3), Some([0x5a; 16]));
        assert_eq!(sta.handle_teardown(&guessed).unwrap(), Verdict::ignore(Cause::TokenMismatch));
        assert_eq!(sta, before);

        let (_, mut sta) = associated(Mode::Legacy);
        assert_eq!(sta.handle_teardown(&forged).unwrap(), Verdict::accept(Cause::LegacyAccepted));
        assert_eq!(sta.state_with(&AP), Unauthenticated);
        assert!(!sta.links().teardowns[0].is_authorised());
    }

    #[test]
    fn legacy_without_session_ignores() {
        let mut ap = ApStation::new(AP, Mode::Legacy, rng(1));
        let f = ManagementFrame::deauth(STA, AP, ReasonCode(3), None);
        assert_eq!(ap.handle_teardown(&f).unwrap(), Verdict::ignore(Cause::NoSession));
    }

    #[test]
    fn teardown_wrong_subtype() {
        let mut ap = ApStation::new(AP, Mode::Protected, rng(1));
        let f = ManagementFrame::auth_request(STA, AP);
        assert!(matches!(verify_deauth(&mut ap.store, &f), Err(StationError::MalformedFrame { .. })));
        assert!(matches!(
            legacy_verify_deauth(&mut ap.store, &f),
            Err(StationError::MalformedFrame { .. })
        ));
    }

    #[test]
    fn code_one_rejected_even_with_valid_token() {
        let (mut ap, mut sta) = associated(Mode::Protected);
        let session = sta.session_with(&AP).unwrap().clone();
        let frame = make_verified_deauth(STA, &session, ReasonCode(1)).unwrap();
        let before = ap.clone();
        assert_eq!(ap.handle_teardown(&frame).unwrap(), Verdict::reject(Cause::UnspecifiedReason));
        assert_eq!(ap, before);
        // the client still holds a working session
        assert!(ap.handle_teardown(&sta.disconnect(AP, ReasonCode(3)).unwrap()).unwrap().is_accept());
    }

    #[test]
    fn ap_receive_ignores_frames_for_others() {
        let mut ap = ApStation::new(AP, Mode::Protected, rng(1));
        let f = ManagementFrame::auth_request(STA, OTHER);
        assert_eq!(ap.receive(&f), Reception::default());
    }

    #[test]
    fn receive_drives_handshake() {
        let mut ap = ApStation::new(AP, Mode::Protected, rng(1));
        let mut sta = ClientStation::new(STA, Mode::Protected, rng(2));
        let mut inflight = vec![sta.begin_authentication(AP)];
        let mut hops = 0;
        while let Some(f) = inflight.pop() {
            hops += 1;
            let r = if f.dst == AP { ap.receive(&f) } else { sta.receive(&f) };
            inflight.extend(r.replies);
        }
        assert_eq!(hops, 4);
        assert_eq!(sta.state(), Associated);
        assert!(ap.session(&STA).unwrap().is_established());
    }
}
