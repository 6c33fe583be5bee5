//! Management frames and their simulation wire format.
//!
//! The layout is a compact stand-in for an 802.11 management MPDU:
//!
//! ```text
//! byte  0       subtype code
//! bytes 1..7    source MAC
//! bytes 7..13   destination MAC
//! bytes 13..15  status (assoc response) or reason (deauth/disassoc), little-endian
//! byte  15      0xDD  (vendor-specific element id)        -- only when an IE is present
//! byte  16      payload length + 1
//! byte  17      payload kind (0x01 hash, 0x02 token)
//! bytes 18..    payload (64-byte digest or 16-byte token)
//! ```
//!
//! Encoded frames are therefore 15, 34 or 82 bytes long.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::tokens::{Digest, Token, DIGEST_LEN, TOKEN_LEN};

pub const HEADER_LEN: usize = 15;
pub const VENDOR_ELEMENT_ID: u8 = 0xDD;
pub const IE_KIND_HASH: u8 = 0x01;
pub const IE_KIND_TOKEN: u8 = 0x02;
const IE_HEADER_LEN: usize = 3;

pub const HASH_FRAME_LEN: usize = HEADER_LEN + IE_HEADER_LEN + DIGEST_LEN;
pub const TOKEN_FRAME_LEN: usize = HEADER_LEN + IE_HEADER_LEN + TOKEN_LEN;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MacAddress(pub [u8; 6]);

impl MacAddress {
    pub const BROADCAST: MacAddress = MacAddress([0xff; 6]);

    pub const fn new(octets: [u8; 6]) -> Self {
        MacAddress(octets)
    }

    pub fn octets(&self) -> [u8; 6] {
        self.0
    }

    pub fn is_broadcast(&self) -> bool {
        *self == Self::BROADCAST
    }
}

impl fmt::Display for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let o = self.0;
        write!(
            f,
            "{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            o[0], o[1], o[2], o[3], o[4], o[5]
        )
    }
}

impl fmt::Debug for MacAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid MAC address {0:?}")]
pub struct ParseMacError(String);

impl FromStr for MacAddress {
    type Err = ParseMacError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut octets = [0u8; 6];
        let mut parts = s.split([':', '-']);
        for octet in octets.iter_mut() {
            let part = parts.next().ok_or_else(|| ParseMacError(s.to_string()))?;
            if part.len() != 2 {
                return Err(ParseMacError(s.to_string()));
            }
            *octet = u8::from_str_radix(part, 16).map_err(|_| ParseMacError(s.to_string()))?;
        }
        if parts.next().is_some() {
            return Err(ParseMacError(s.to_string()));
        }
        Ok(MacAddress(octets))
    }
}

impl Serialize for MacAddress {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MacAddress {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How a reason code is handled by the deauthentication verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReasonClass {
    /// 0 and 10..=65535.
    Reserved,
    /// 1.
    Unspecified,
    /// 2, 6, 7, 9: causes that only make sense for a sender that never
    /// completed authentication or association.
    Unauthenticated,
    /// 3, 4, 5, 8: an associated peer leaving; verified with its token.
    Departure,
}

/// 16-bit deauthentication / disassociation reason code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReasonCode(pub u16);

impl ReasonCode {
    pub const RESERVED: ReasonCode = ReasonCode(0);
    pub const UNSPECIFIED: ReasonCode = ReasonCode(1);
    pub const PREV_AUTH_NOT_VALID: ReasonCode = ReasonCode(2);
    pub const DEAUTH_LEAVING: ReasonCode = ReasonCode(3);
    pub const DISASSOC_INACTIVITY: ReasonCode = ReasonCode(4);
    pub const DISASSOC_AP_BUSY: ReasonCode = ReasonCode(5);
    pub const CLASS2_FROM_NONAUTH: ReasonCode = ReasonCode(6);
    pub const CLASS3_FROM_NONASSOC: ReasonCode = ReasonCode(7);
    pub const DISASSOC_LEAVING: ReasonCode = ReasonCode(8);
    pub const NOT_AUTHENTICATED: ReasonCode = ReasonCode(9);

    pub fn class(self) -> ReasonClass {
        match self.0 {
            1 => ReasonClass::Unspecified,
            2 | 6 | 7 | 9 => ReasonClass::Unauthenticated,
            3 | 4 | 5 | 8 => ReasonClass::Departure,
            _ => ReasonClass::Reserved,
        }
    }

    pub fn description(self) -> &'static str {
        match self.0 {
            1 => "unspecified",
            2 => "prior authentication is not valid",
            3 => "station left the BSS and is deauthenticated",
            4 => "inactivity timer expired, station disassociated",
            5 => "disassociated, AP cannot handle all associated stations",
            6 => "class 2 frame received from unauthenticated station",
            7 => "class 3 frame received from nonassociated station",
            8 => "station left the BSS and is disassociated",
            9 => "association requested before authentication completed",
            _ => "reserved",
        }
    }
}

impl fmt::Debug for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ReasonCode({})", self.0)
    }
}

impl fmt::Display for ReasonCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u16> for ReasonCode {
    fn from(v: u16) -> Self {
        ReasonCode(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subtype {
    AuthRequest,
    AuthResponse,
    AssocRequest,
    AssocResponse,
    Disassociation,
    Deauthentication,
}

impl Subtype {
    pub const ALL: [Subtype; 6] = [
        Subtype::AuthRequest,
        Subtype::AuthResponse,
        Subtype::AssocRequest,
        Subtype::AssocResponse,
        Subtype::Disassociation,
        Subtype::Deauthentication,
    ];

    pub fn code(self) -> u8 {
        match self {
            Subtype::AuthRequest => 0x10,
            Subtype::AuthResponse => 0x11,
            Subtype::AssocRequest => 0x00,
            Subtype::AssocResponse => 0x01,
            Subtype::Disassociation => 0x0A,
            Subtype::Deauthentication => 0x0C,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Subtype::ALL.into_iter().find(|s| s.code() == code)
    }

    /// Deauthentication or disassociation.
    pub fn is_teardown(self) -> bool {
        matches!(self, Subtype::Deauthentication | Subtype::Disassociation)
    }
}

/// Vendor-specific element carrying either a hash commitment or a revealed
/// token. Token payloads are raw bytes: a forged frame may carry anything.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InformationElement {
    Hash(Digest),
    Token([u8; TOKEN_LEN]),
}

impl InformationElement {
    pub fn token(token: &Token) -> Self {
        InformationElement::Token(*token.as_bytes())
    }

    pub fn kind(&self) -> u8 {
        match self {
            InformationElement::Hash(_) => IE_KIND_HASH,
            InformationElement::Token(_) => IE_KIND_TOKEN,
        }
    }

    pub fn payload(&self) -> &[u8] {
        match self {
            InformationElement::Hash(d) => d.as_bytes(),
            InformationElement::Token(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ManagementFrame {
    pub subtype: Subtype,
    pub src: MacAddress,
    pub dst: MacAddress,
    /// Status for association responses, reason for teardown frames, zero
    /// otherwise.
    pub status_or_reason: u16,
    pub ie: Option<InformationElement>,
}

impl ManagementFrame {
    pub fn new(subtype: Subtype, src: MacAddress, dst: MacAddress) -> Self {
        ManagementFrame {
            subtype,
            src,
            dst,
            status_or_reason: 0,
            ie: None,
        }
    }

    pub fn auth_request(src: MacAddress, dst: MacAddress) -> Self {
        Self::new(Subtype::AuthRequest, src, dst)
    }

    pub fn auth_response(src: MacAddress, dst: MacAddress) -> Self {
        Self::new(Subtype::AuthResponse, src, dst)
    }

    pub fn assoc_request(src: MacAddress, dst: MacAddress, commitment: Option<Digest>) -> Self {
        ManagementFrame {
            ie: commitment.map(InformationElement::Hash),
            ..Self::new(Subtype::AssocRequest, src, dst)
        }
    }

    pub fn assoc_response(
        src: MacAddress,
        dst: MacAddress,
        status: u16,
        commitment: Option<Digest>,
    ) -> Self {
        ManagementFrame {
            status_or_reason: status,
            ie: commitment.map(InformationElement::Hash),
            ..Self::new(Subtype::AssocResponse, src, dst)
        }
    }

    pub fn deauth(
        src: MacAddress,
        dst: MacAddress,
        reason: ReasonCode,
        token: Option<[u8; TOKEN_LEN]>,
    ) -> Self {
        Self::teardown(Subtype::Deauthentication, src, dst, reason, token)
    }

    pub fn disassoc(
        src: MacAddress,
        dst: MacAddress,
        reason: ReasonCode,
        token: Option<[u8; TOKEN_LEN]>,
    ) -> Self {
        Self::teardown(Subtype::Disassociation, src, dst, reason, token)
    }

    fn teardown(
        subtype: Subtype,
        src: MacAddress,
        dst: MacAddress,
        reason: ReasonCode,
        token: Option<[u8; TOKEN_LEN]>,
    ) -> Self {
        ManagementFrame {
            subtype,
            src,
            dst,
            status_or_reason: reason.0,
            ie: token.map(InformationElement::Token),
        }
    }

    pub fn reason(&self) -> ReasonCode {
        ReasonCode(self.status_or_reason)
    }

    pub fn hash_ie(&self) -> Option<&Digest> {
        match &self.ie {
            Some(InformationElement::Hash(d)) => Some(d),
            _ => None,
        }
    }

    pub fn token_ie(&self) -> Option<&[u8; TOKEN_LEN]> {
        match &self.ie {
            Some(InformationElement::Token(t)) => Some(t),
            _ => None,
        }
    }

    pub fn encoded_len(&self) -> usize {
        match self.ie {
            None => HEADER_LEN,
            Some(ie) => HEADER_LEN + IE_HEADER_LEN + ie.payload().len(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        encode_frame(self)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DecodeError> {
        decode_frame(bytes)
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    #[error("frame shorter than the {HEADER_LEN}-byte header")]
    TooShort,
    #[error("unknown subtype code {0:#04x}")]
    UnknownSubtype(u8),
    #[error("unknown element id {0:#04x}")]
    UnknownElement(u8),
    #[error("unknown element payload kind {0:#04x}")]
    UnknownPayloadKind(u8),
    #[error("element length does not match its payload kind or the bytes present")]
    BadIeLength,
    #[error("{0} bytes after the end of the frame")]
    TrailingBytes(usize),
}

pub fn encode_frame(frame: &ManagementFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(frame.encoded_len());
    out.push(frame.subtype.code());
    out.extend_from_slice(&frame.src.0);
    out.extend_from_slice(&frame.dst.0);
    out.extend_from_slice(&frame.status_or_reason.to_le_bytes());
    if let Some(ie) = &frame.ie {
        let payload = ie.payload();
        out.push(VENDOR_ELEMENT_ID);
        out.push(payload.len() as u8 + 1);
        out.push(ie.kind());
        out.extend_from_slice(payload);
    }
    out
}

pub fn decode_frame(bytes: &[u8]) -> Result<ManagementFrame, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::TooShort);
    }
    let subtype = Subtype::from_code(bytes[0]).ok_or(DecodeError::UnknownSubtype(bytes[0]))?;
    let src = MacAddress(bytes[1..7].try_into().unwrap());
    let dst = MacAddress(bytes[7..13].try_into().unwrap());
    let status_or_reason = u16::from_le_bytes([bytes[13], bytes[14]]);

    let rest = &bytes[HEADER_LEN..];
    let ie = if rest.is_empty() {
        None
    } else {
        Some(decode_ie(rest)?)
    };

    Ok(ManagementFrame {
        subtype,
        src,
        dst,
        status_or_reason,
        ie,
    })
}

fn decode_ie(bytes: &[u8]) -> Result<InformationElement, DecodeError> {
    if bytes[0] != VENDOR_ELEMENT_ID {
        return Err(DecodeError::UnknownElement(bytes[0]));
    }
    if bytes.len() < IE_HEADER_LEN {
        return Err(DecodeError::BadIeLength);
    }
    let declared = bytes[1] as usize;
    let kind = bytes[2];
    let expected = match kind {
        IE_KIND_HASH => DIGEST_LEN,
        IE_KIND_TOKEN => TOKEN_LEN,
        other => return Err(DecodeError::UnknownPayloadKind(other)),
    };
    if declared != expected + 1 {
        return Err(DecodeError::BadIeLength);
    }
    let payload = &bytes[IE_HEADER_LEN..];
    if payload.len() < expected {
        return Err(DecodeError::BadIeLength);
    }
    if payload.len() > expected {
        return Err(DecodeError::TrailingBytes(payload.len() - expected));
    }
    Ok(match kind {
        IE_KIND_HASH => InformationElement::Hash(Digest::from_bytes(payload.try_into().unwrap())),
        _ => InformationElement::Token(payload.try_into().unwrap()),
    })
}

/// Lowercase hex rendering used in logs.
pub fn hex_dump(bytes: &[u8]) -> String {
    hex::encode(bytes)
}

impl fmt::Display for ManagementFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} {} -> {}", self.subtype, self.src, self.dst)?;
        match self.subtype {
            Subtype::AssocResponse => write!(f, " status={}", self.status_or_reason)?,
            s if s.is_teardown() => write!(f, " reason={}", self.status_or_reason)?,
            _ => {}
        }
        match &self.ie {
            Some(InformationElement::Hash(d)) => write!(f, " hash={d}"),
            Some(InformationElement::Token(t)) => write!(f, " token={}", hex::encode(t)),
            None => Ok(()),
        }
    }
}
