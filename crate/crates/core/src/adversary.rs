//! Scripted attackers.
//!
//! Attackers only produce raw frame bytes for injection into the medium; they
//! never touch station state directly. Replay attackers work from the frames
//! their promiscuous tap captured.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frame::{decode_frame, ManagementFrame, MacAddress, ReasonCode, Subtype};
use crate::medium::{Delivery, Endpoint, EventKind, MediumEvent};
use crate::tokens::TOKEN_LEN;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    /// Token-less deauthentication frames with a spoofed source.
    ForgedDeauth,
    /// Deauthentication frames carrying uniformly random tokens.
    TokenGuess,
    /// Verbatim replay of a captured association request.
    AssocReplay,
    /// Verbatim replay of a captured token-bearing teardown frame.
    DeauthReplay,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackerConfig {
    pub kind: AttackKind,
    /// Source address written into forged frames.
    pub spoof_src: MacAddress,
    pub target: MacAddress,
    #[serde(default = "one")]
    pub frame_count: u32,
    #[serde(default = "leaving")]
    pub reason: ReasonCode,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> u32 {
    1
}

fn leaving() -> ReasonCode {
    ReasonCode::DEAUTH_LEAVING
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AttackError {
    #[error("frame_count must be at least 1")]
    ZeroFrameCount,
    #[error("attack kind {got:?} cannot generate {wanted:?} frames")]
    WrongKind { got: AttackKind, wanted: AttackKind },
    #[error("no association request captured")]
    NoCapturedAssoc,
    #[error("no token-bearing deauthentication captured")]
    NoCapturedDeauth,
}

impl AttackerConfig {
    pub fn new(kind: AttackKind, spoof_src: MacAddress, target: MacAddress) -> Self {
        AttackerConfig {
            kind,
            spoof_src,
            target,
            frame_count: 1,
            reason: ReasonCode::DEAUTH_LEAVING,
            seed: 0,
        }
    }

    pub fn with_count(mut self, frame_count: u32) -> Self {
        self.frame_count = frame_count;
        self
    }

    pub fn with_reason(mut self, reason: ReasonCode) -> Self {
        self.reason = reason;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), AttackError> {
        if self.frame_count == 0 {
            return Err(AttackError::ZeroFrameCount);
        }
        Ok(())
    }

    fn expect_kind(&self, wanted: AttackKind) -> Result<(), AttackError> {
        self.validate()?;
        if self.kind != wanted {
            return Err(AttackError::WrongKind {
                got: self.kind,
                wanted,
            });
        }
        Ok(())
    }
}

/// The aireplay-style attack: deauthentication frames with a spoofed source
/// and no token.
pub fn forged_deauth_frames(cfg: &AttackerConfig) -> Result<Vec<ManagementFrame>, AttackError> {
    cfg.expect_kind(AttackKind::ForgedDeauth)?;
    let frame = ManagementFrame::deauth(cfg.spoof_src, cfg.target, cfg.reason, None);
    Ok(vec![frame; cfg.frame_count as usize])
}

/// Deauthentication frames each carrying 16 uniformly random bytes as token.
pub fn token_guess_frames<R: RngCore + ?Sized>(
    cfg: &AttackerConfig,
    rng: &mut R,
) -> Result<Vec<ManagementFrame>, AttackError> {
    cfg.expect_kind(AttackKind::TokenGuess)?;
    Ok((0..cfg.frame_count)
        .map(|_| {
            let mut guess = [0u8; TOKEN_LEN];
            rng.fill(&mut guess[..]);
            ManagementFrame::deauth(cfg.spoof_src, cfg.target, cfg.reason, Some(guess))
        })
        .collect())
}

fn captured_frames(log: &[MediumEvent]) -> impl Iterator<Item = (&[u8], ManagementFrame)> {
    log.iter()
        .filter(|e| matches!(e.kind, EventKind::Sniffed | EventKind::Delivered))
        .filter_map(|e| decode_frame(&e.frame_bytes).ok().map(|f| (&e.frame_bytes[..], f)))
}

/// Replays the first captured association request from `cfg.spoof_src`
/// (or any client when no request from that address was seen).
pub fn assoc_replay_frames(
    sniffed_log: &[MediumEvent],
    cfg: &AttackerConfig,
) -> Result<Vec<Vec<u8>>, AttackError> {
    cfg.expect_kind(AttackKind::AssocReplay)?;
    let requests: Vec<_> = captured_frames(sniffed_log)
        .filter(|(_, f)| f.subtype == Subtype::AssocRequest)
        .collect();
    let chosen = requests
        .iter()
        .find(|(_, f)| f.src == cfg.spoof_src)
        .or(requests.first())
        .ok_or(AttackError::NoCapturedAssoc)?;
    Ok(vec![chosen.0.to_vec(); cfg.frame_count as usize])
}

/// Replays the first captured token-bearing teardown frame from
/// `cfg.spoof_src` (or any sender when none from that address was seen).
pub fn deauth_replay_frames(
    sniffed_log: &[MediumEvent],
    cfg: &AttackerConfig,
) -> Result<Vec<Vec<u8>>, AttackError> {
    cfg.expect_kind(AttackKind::DeauthReplay)?;
    let teardowns: Vec<_> = captured_frames(sniffed_log)
        .filter(|(_, f)| f.subtype.is_teardown() && f.token_ie().is_some())
        .collect();
    let chosen = teardowns
        .iter()
        .find(|(_, f)| f.src == cfg.spoof_src)
        .or(teardowns.first())
        .ok_or(AttackError::NoCapturedDeauth)?;
    Ok(vec![chosen.0.to_vec(); cfg.frame_count as usize])
}

/// Encoded frames for any attack kind.
pub fn attack_bytes<R: RngCore + ?Sized>(
    cfg: &AttackerConfig,
    sniffed_log: &[MediumEvent],
    rng: &mut R,
) -> Result<Vec<Vec<u8>>, AttackError> {
    let encode = |frames: Vec<ManagementFrame>| frames.iter().map(ManagementFrame::encode).collect();
    match cfg.kind {
        AttackKind::ForgedDeauth => forged_deauth_frames(cfg).map(encode),
        AttackKind::TokenGuess => token_guess_frames(cfg, rng).map(encode),
        AttackKind::AssocReplay => assoc_replay_frames(sniffed_log, cfg),
        AttackKind::DeauthReplay => deauth_replay_frames(sniffed_log, cfg),
    }
}

/// A medium endpoint for an attacker: receives nothing, keeps whatever its
/// tap overhears.
#[derive(Debug, Clone, Default)]
pub struct Eavesdropper {
    pub captured: Vec<MediumEvent>,
}

impl Endpoint for Eavesdropper {
    fn mac(&self) -> Option<MacAddress> {
        None
    }

    fn receive(&mut self, _: Delivery<'_>, _: &[u8]) -> Vec<Vec<u8>> {
        Vec::new()
    }

    fn sniff(&mut self, event: &MediumEvent) {
        self.captured.push(event.clone());
    }
}
