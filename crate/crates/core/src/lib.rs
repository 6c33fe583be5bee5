//! Token-verified 802.11 association and deauthentication.
//!
//! Stock 802.11 accepts deauthentication and disassociation frames from
//! anyone who writes the right source MAC into them. This crate extends the
//! association handshake so that each side commits to a random UUID token
//! (by sending its SHA-512 digest) and only honours a later teardown that
//! reveals the matching token.
//!
//! - [`frame`]: management frames and their byte layout
//! - [`tokens`]: UUID v4 tokens and SHA-512 commitments
//! - [`station`]: client and AP state machines, teardown verification
//! - [`medium`]: deterministic, seeded broadcast medium
//! - [`adversary`]: spoofing and replay attackers
//! - [`scenario`]: scenario files and the end-to-end runner
//! - [`bench`]: timing of token generation and hashing

pub mod adversary;
pub mod bench;
pub mod frame;
pub mod medium;
pub mod scenario;
pub mod station;
pub mod tokens;

pub use adversary::{AttackError, AttackKind, AttackerConfig};
pub use frame::{
    decode_frame, encode_frame, DecodeError, InformationElement, MacAddress, ManagementFrame, ReasonClass,
    ReasonCode, Subtype,
};
pub use medium::{EndpointId, EventKind, Medium, MediumConfig, MediumError, MediumEvent};
pub use scenario::{run_scenario, ConfigError, ScenarioConfig, ScenarioError, ScenarioOutcome, ScenarioRun};
pub use station::{
    legacy_verify_deauth, make_verified_deauth, transition, verify_deauth, Action, ApStation, ApStore, Cause,
    ClientStation, LifecycleEvent, LifecycleState, Mode, SessionRecord, StationError, Verdict,
};
pub use tokens::{generate_token, hash_token, Digest, Token};
