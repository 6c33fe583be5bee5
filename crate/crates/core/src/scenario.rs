//! Scenario files and the end-to-end runner.
//!
//! A scenario is a TOML document naming the stations, the attackers and an
//! ordered script. The runner attaches everything to a [`Medium`], executes
//! each script action and lets the medium run to quiescence after each one.
//!
//! ```toml
//! schema = 1
//! name = "legacy_forged_deauth"
//! mode = "legacy"            # or "protected"
//! seed = 7
//! loss_probability = 0.0
//! max_ticks = 1000
//!
//! [[stations]]
//! role = "ap"
//! mac = "02:00:00:00:00:01"
//!
//! [[stations]]
//! role = "client"
//! mac = "02:00:00:00:00:02"
//!
//! [[attackers]]
//! kind = "forged_deauth"     # token_guess | assoc_replay | deauth_replay
//! spoof_src = "02:00:00:00:00:01"
//! target = "02:00:00:00:00:02"
//! frame_count = 1
//! reason = 3
//! seed = 99
//!
//! [[script]]
//! action = "associate"
//! client = "02:00:00:00:00:02"
//! ap = "02:00:00:00:00:01"
//!
//! [[script]]
//! action = "attack"
//! index = 0
//!
//! [[script]]
//! action = "deauth"
//! initiator = "02:00:00:00:00:02"
//! reason = 3
//! # peer = "..."  optional; defaults to every associated peer
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{attack_bytes, AttackError, AttackerConfig, Eavesdropper};
use crate::frame::{decode_frame, MacAddress, ManagementFrame, ReasonCode, Subtype};
use crate::medium::{Delivery, Endpoint, EndpointId, Handle, Medium, MediumConfig, MediumError, MediumEvent};
use crate::station::{Action, ApStation, ClientStation, LifecycleState, Mode, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Client,
    Ap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSpec {
    pub role: Role,
    pub mac: MacAddress,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScriptAction {
    Associate {
        client: MacAddress,
        ap: MacAddress,
    },
    Deauth {
        initiator: MacAddress,
        reason: ReasonCode,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        peer: Option<MacAddress>,
    },
    Attack {
        index: usize,
    },
}

fn default_max_ticks() -> u64 {
    1_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema: u32,
    pub name: String,
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub loss_probability: f64,
    #[serde(default = "default_max_ticks")]
    pub max_ticks: u64,
    pub stations: Vec<StationSpec>,
    #[serde(default)]
    pub attackers: Vec<AttackerConfig>,
    pub script: Vec<ScriptAction>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot parse scenario: {0}")]
    Parse(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("unsupported schema version {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
    #[error("duplicate station MAC {0}")]
    DuplicateMac(MacAddress),
    #[error("station MAC {0} is the broadcast address")]
    BroadcastMac(MacAddress),
    #[error("script step {step}: {mac} is not a {expected}")]
    UnknownStation {
        step: usize,
        mac: MacAddress,
        expected: &'static str,
    },
    #[error("script step {step}: attack index {index} out of range")]
    UnknownAttack { step: usize, index: usize },
    #[error("loss_probability {0} outside [0, 1]")]
    LossProbability(f64),
    #[error("attacker {index}: {source}")]
    Attacker { index: usize, source: AttackError },
    #[error("max_ticks must be at least 1")]
    MaxTicks,
    #[error("no bundled scenario named {0:?}")]
    UnknownPreset(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("script step {step}: {source}")]
    Attack { step: usize, source: AttackError },
    #[error("script step {step}: medium still busy after {max_ticks} ticks")]
    TickLimitExceeded { step: usize, max_ticks: u64 },
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != SCHEMA_VERSION {
            return Err(ConfigError::Schema(self.schema));
        }
        if !(0.0..=1.0).contains(&self.loss_probability) {
            return Err(ConfigError::LossProbability(self.loss_probability));
        }
        if self.max_ticks == 0 {
            return Err(ConfigError::MaxTicks);
        }
        let mut macs = BTreeSet::new();
        for s in &self.stations {
            if s.mac.is_broadcast() {
                return Err(ConfigError::BroadcastMac(s.mac));
            }
            if !macs.insert(s.mac) {
                return Err(ConfigError::DuplicateMac(s.mac));
            }
        }
        for (index, a) in self.attackers.iter().enumerate() {
            a.validate()
                .map_err(|source| ConfigError::Attacker { index, source })?;
        }
        let has = |mac: &MacAddress, role: Role| {
            self.stations.iter().any(|s| s.mac == *mac && s.role == role)
        };
        for (step, action) in self.script.iter().enumerate() {
            match action {
                ScriptAction::Associate { client, ap } => {
                    if !has(client, Role::Client) {
                        return Err(ConfigError::UnknownStation { step, mac: *client, expected: "client" });
                    }
                    if !has(ap, Role::Ap) {
                        return Err(ConfigError::UnknownStation { step, mac: *ap, expected: "ap" });
                    }
                }
                ScriptAction::Deauth { initiator, .. } => {
                    if !self.stations.iter().any(|s| s.mac == *initiator) {
                        return Err(ConfigError::UnknownStation {
                            step,
                            mac: *initiator,
                            expected: "station",
                        });
                    }
                }
                ScriptAction::Attack { index } => {
                    if *index >= self.attackers.len() {
                        return Err(ConfigError::UnknownAttack { step, index: *index });
                    }
                }
            }
        }
        Ok(())
    }
}

/// One station's verdict on one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerdictRecord {
    pub tick: u64,
    pub from: EndpointId,
    pub subtype: Subtype,
    pub verdict: Verdict,
}

enum Station {
    Ap(ApStation),
    Client(ClientStation),
}

// a handful per scenario; boxing buys nothing
#[allow(clippy::large_enum_variant)]
enum Node {
    Station {
        station: Station,
        records: Vec<VerdictRecord>,
        /// Association requests and teardown frames addressed to this node.
        processed: u64,
    },
    Attacker(Eavesdropper),
}

impl Endpoint for Node {
    fn mac(&self) -> Option<MacAddress> {
        match self {
            Node::Station { station: Station::Ap(s), .. } => Some(s.mac()),
            Node::Station { station: Station::Client(s), .. } => Some(s.mac()),
            Node::Attacker(_) => None,
        }
    }

    fn receive(&mut self, delivery: Delivery<'_>, bytes: &[u8]) -> Vec<Vec<u8>> {
        let own_mac = self.mac();
        let Node::Station {
            station,
            records,
            processed,
        } = self
        else {
            return Vec::new();
        };
        let Ok(frame) = decode_frame(bytes) else {
            return Vec::new();
        };
        let addressed = Some(frame.dst) == own_mac || frame.dst.is_broadcast();
        if addressed && counts_toward_verdicts(frame.subtype) {
            *processed += 1;
        }
        let reception = match station {
            Station::Ap(s) => s.receive(&frame),
            Station::Client(s) => s.receive(&frame),
        };
        if let Some(verdict) = reception.verdict {
            records.push(VerdictRecord {
                tick: delivery.tick,
                from: delivery.from.clone(),
                subtype: frame.subtype,
                verdict,
            });
        }
        reception.replies.iter().map(ManagementFrame::encode).collect()
    }

    fn sniff(&mut self, event: &MediumEvent) {
        if let Node::Attacker(e) = self {
            e.sniff(event);
        }
    }
}

fn counts_toward_verdicts(subtype: Subtype) -> bool {
    subtype == Subtype::AssocRequest || subtype.is_teardown()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub name: String,
    pub mode: Mode,
    pub seed: u64,
    pub frames_sent: u64,
    pub frames_delivered: u64,
    pub frames_dropped: u64,
    /// Association requests and teardown frames handled by stations.
    pub frames_processed: u64,
    /// Cause tag to count, over every processed frame.
    pub verdicts: BTreeMap<String, u64>,
    pub attack_frames: u64,
    /// Attacker frames a station accepted.
    pub attack_success_count: u64,
    /// Every scripted deauth produced at least one frame and the peer
    /// accepted each of them. False when the script has no deauth step.
    pub legit_disconnect_success: bool,
    /// Client MAC to its most advanced link state.
    pub final_states: BTreeMap<MacAddress, LifecycleState>,
    /// AP MAC to clients it still holds a session for.
    pub ap_sessions: BTreeMap<MacAddress, Vec<MacAddress>>,
}

impl ScenarioOutcome {
    pub fn verdict_total(&self) -> u64 {
        self.verdicts.values().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serializes")
    }

    /// Plain-text summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let mut row = |k: &str, v: String| out.push_str(&format!("{k:<28}{v}\n"));
        row("scenario", self.name.clone());
        row("mode", format!("{:?}", self.mode).to_lowercase());
        row("seed", self.seed.to_string());
        row("frames sent", self.frames_sent.to_string());
        row("frames delivered", self.frames_delivered.to_string());
        row("frames dropped", self.frames_dropped.to_string());
        row("frames processed", self.frames_processed.to_string());
        row("attack frames", self.attack_frames.to_string());
        row("attack successes", self.attack_success_count.to_string());
        row("legit disconnect success", self.legit_disconnect_success.to_string());
        for (cause, n) in &self.verdicts {
            row(&format!("verdict {cause}"), n.to_string());
        }
        for (mac, state) in &self.final_states {
            row(&format!("client {mac}"), state.to_string());
        }
        for (mac, clients) in &self.ap_sessions {
            let list: Vec<_> = clients.iter().map(|c| c.to_string()).collect();
            row(&format!("ap {mac} sessions"), format!("[{}]", list.join(", ")));
        }
        out
    }
}

/// Outcome plus the complete medium event log.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub outcome: ScenarioOutcome,
    pub events: Vec<MediumEvent>,
}

impl ScenarioRun {
    pub fn events_jsonl(&self) -> String {
        let mut buf = Vec::new();
        crate::medium::write_jsonl(&mut buf, &self.events).expect("write to Vec");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

/// Stream ids for the per-station generators; stream 0 is left to the
/// medium's loss draws (which use their own seeded instance).
fn station_rng(seed: u64, index: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index as u64 + 1);
    rng
}

struct Runner {
    medium: Medium<Node>,
    stations: BTreeMap<MacAddress, Handle>,
    attackers: Vec<Handle>,
    attack_frames: u64,
}

impl Runner {
    fn build(cfg: &ScenarioConfig) -> Result<Self, ConfigError> {
        let attacker_ids: Vec<EndpointId> = (0..cfg.attackers.len())
            .map(|i| format!("attacker{i}").into())
            .collect();
        let mut medium = Medium::new(MediumConfig {
            loss_probability: cfg.loss_probability,
            seed: cfg.seed,
            promiscuous_taps: attacker_ids.clone(),
            max_ticks: cfg.max_ticks,
        });

        let mut stations = BTreeMap::new();
        let (mut aps, mut clients) = (0, 0);
        for (i, spec) in cfg.stations.iter().enumerate() {
            let rng = station_rng(cfg.seed, i);
            let (id, station) = match spec.role {
                Role::Ap => {
                    aps += 1;
                    (format!("ap{}", aps - 1), Station::Ap(ApStation::new(spec.mac, cfg.mode, rng)))
                }
                Role::Client => {
                    clients += 1;
                    (
                        format!("client{}", clients - 1),
                        Station::Client(ClientStation::new(spec.mac, cfg.mode, rng)),
                    )
                }
            };
            let node = Node::Station {
                station,
                records: Vec::new(),
                processed: 0,
            };
            let handle = medium.attach(id, node).map_err(|e| match e {
                MediumError::DuplicateMac(m) => ConfigError::DuplicateMac(m),
                other => ConfigError::Parse(other.to_string()),
            })?;
            stations.insert(spec.mac, handle);
        }
        let attackers = attacker_ids
            .into_iter()
            .map(|id| {
                medium
                    .attach(id, Node::Attacker(Eavesdropper::default()))
                    .expect("attacker ids are unique")
            })
            .collect();
        Ok(Runner {
            medium,
            stations,
            attackers,
            attack_frames: 0,
        })
    }

    fn station_mut(&mut self, mac: &MacAddress) -> &mut Station {
        let handle = self.stations[mac];
        match self.medium.endpoint_mut(handle) {
            Some(Node::Station { station, .. }) => station,
            _ => unreachable!("station handles point at stations"),
        }
    }

    fn records(&self) -> Vec<(Handle, &[VerdictRecord])> {
        self.stations
            .values()
            .filter_map(|&h| match self.medium.endpoint(h) {
                Some(Node::Station { records, .. }) => Some((h, &records[..])),
                _ => None,
            })
            .collect()
    }

    fn settle(&mut self, step: usize) -> Result<(), ScenarioError> {
        self.medium
            .run_until_idle()
            .map(drop)
            .map_err(|e| match e {
                MediumError::TickLimitExceeded(max_ticks) => ScenarioError::TickLimitExceeded { step, max_ticks },
                other => unreachable!("runner only sends from attached handles: {other}"),
            })
    }

    /// Runs one scripted deauth; true when every frame it sent was accepted.
    fn deauth(
        &mut self,
        step: usize,
        initiator: MacAddress,
        reason: ReasonCode,
        peer: Option<MacAddress>,
    ) -> Result<bool, ScenarioError> {
        let frames: Vec<ManagementFrame> = match self.station_mut(&initiator) {
            Station::Client(c) => {
                let aps = peer.map_or_else(|| c.associated_aps(), |p| vec![p]);
                aps.into_iter().filter_map(|ap| c.disconnect(ap, reason).ok()).collect()
            }
            Station::Ap(a) => match peer {
                Some(p) => a.disconnect(p, reason).into_iter().collect(),
                None => a.disconnect_all(reason),
            },
        };
        let handle = self.stations[&initiator];
        let initiator_id = self.medium.id(handle).expect("attached").clone();
        let before: Vec<usize> = self.records().iter().map(|(_, r)| r.len()).collect();
        for f in &frames {
            self.medium.send(handle, f.encode()).expect("attached");
        }
        self.settle(step)?;
        let accepted = self
            .records()
            .iter()
            .zip(before)
            .flat_map(|((_, r), n)| &r[n..])
            .filter(|r| r.from == initiator_id && r.subtype.is_teardown() && r.verdict.is_accept())
            .count();
        Ok(!frames.is_empty() && accepted == frames.len())
    }

    fn attack(&mut self, step: usize, index: usize, cfg: &AttackerConfig) -> Result<(), ScenarioError> {
        let handle = self.attackers[index];
        let captured = match self.medium.endpoint(handle) {
            Some(Node::Attacker(e)) => e.captured.clone(),
            _ => unreachable!("attacker handles point at attackers"),
        };
        let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed);
        let frames = attack_bytes(cfg, &captured, &mut rng)
            .map_err(|source| ScenarioError::Attack { step, source })?;
        self.attack_frames += frames.len() as u64;
        for bytes in frames {
            self.medium.inject(handle, bytes).expect("attached");
        }
        self.settle(step)
    }
}

/// Runs `cfg` to completion. Deterministic for a fixed configuration.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, ScenarioError> {
    cfg.validate()?;
    let mut runner = Runner::build(cfg)?;
    let mut deauth_results = Vec::new();

    for (step, action) in cfg.script.iter().enumerate() {
        match action {
            ScriptAction::Associate { client, ap } => {
                let frame = match runner.station_mut(client) {
                    Station::Client(c) => c.begin_authentication(*ap),
                    Station::Ap(_) => unreachable!("validated"),
                };
                let handle = runner.stations[client];
                runner.medium.send(handle, frame.encode()).expect("attached");
                runner.settle(step)?;
            }
            ScriptAction::Deauth {
                initiator,
                reason,
                peer,
            } => {
                let ok = runner.deauth(step, *initiator, *reason, *peer)?;
                deauth_results.push(ok);
            }
            ScriptAction::Attack { index } => {
                runner.attack(step, *index, &cfg.attackers[*index])?;
            }
        }
    }

    let events = runner.medium.log().to_vec();
    Ok(ScenarioRun {
        outcome: summarize(cfg, runner, deauth_results),
        events,
    })
}

fn summarize(cfg: &ScenarioConfig, runner: Runner, deauth_results: Vec<bool>) -> ScenarioOutcome {
    let attacker_ids: BTreeSet<EndpointId> = runner
        .attackers
        .iter()
        .filter_map(|&h| runner.medium.id(h).cloned())
        .collect();

    let mut verdicts = BTreeMap::new();
    let mut frames_processed = 0;
    let mut attack_success_count = 0;
    let mut final_states = BTreeMap::new();
    let mut ap_sessions = BTreeMap::new();

    for (_, node) in runner.medium.endpoints() {
        let Node::Station {
            station,
            records,
            processed,
        } = node
        else {
            continue;
        };
        frames_processed += processed;
        for r in records.iter().filter(|r| counts_toward_verdicts(r.subtype)) {
            *verdicts.entry(r.verdict.cause.as_str().to_string()).or_insert(0) += 1;
        }
        attack_success_count += records
            .iter()
            .filter(|r| r.verdict.action == Action::Accept && attacker_ids.contains(&r.from))
            .count() as u64;
        match station {
            Station::Client(c) => {
                final_states.insert(c.mac(), c.state());
            }
            Station::Ap(a) => {
                ap_sessions.insert(a.mac(), a.store().sessions.keys().copied().collect());
            }
        }
    }

    let stats = runner.medium.stats();
    ScenarioOutcome {
        name: cfg.name.clone(),
        mode: cfg.mode,
        seed: cfg.seed,
        frames_sent: stats.sent,
        frames_delivered: stats.delivered,
        frames_dropped: stats.dropped,
        frames_processed,
        verdicts,
        attack_frames: runner.attack_frames,
        attack_success_count,
        legit_disconnect_success: !deauth_results.is_empty() && deauth_results.iter().all(|&ok| ok),
        final_states,
        ap_sessions,
    }
}

/// Scenario files shipped with the crate, by name.
pub const PRESETS: &[(&str, &str)] = &[
    ("legacy_forged_deauth", include_str!("../scenarios/legacy_forged_deauth.toml")),
    ("protected_forged_deauth", include_str!("../scenarios/protected_forged_deauth.toml")),
    ("protected_legit_teardown", include_str!("../scenarios/protected_legit_teardown.toml")),
    ("protected_ap_teardown", include_str!("../scenarios/protected_ap_teardown.toml")),
    ("protected_token_guess", include_str!("../scenarios/protected_token_guess.toml")),
    ("protected_assoc_replay", include_str!("../scenarios/protected_assoc_replay.toml")),
    ("protected_deauth_replay", include_str!("../scenarios/protected_deauth_replay.toml")),
    ("legacy_deauth_replay", include_str!("../scenarios/legacy_deauth_replay.toml")),
    ("protected_lossy_bss", include_str!("../scenarios/protected_lossy_bss.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ConfigError::UnknownPreset(name.to_string()))?;
    ScenarioConfig::from_toml(text)
}
