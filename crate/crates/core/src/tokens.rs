//! Association tokens and their SHA-512 commitments.
//!
//! Each side of an association draws a random RFC 4122 version 4 UUID and
//! keeps it secret. Only the SHA-512 digest of the 16 raw token bytes is sent
//! during association; the token itself is revealed once, inside the
//! deauthentication frame that ends the session.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use sha2::{Digest as _, Sha512};
use thiserror::Error;
use uuid::Uuid;

/// Length in bytes of a token.
pub const TOKEN_LEN: usize = 16;
/// Length in bytes of a SHA-512 digest.
pub const DIGEST_LEN: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TokenError {
    #[error("token is not an RFC 4122 version 4 / variant 1 UUID")]
    NotVersion4,
    #[error("malformed token text: {0}")]
    BadText(String),
    #[error("malformed digest text: {0}")]
    BadDigest(String),
}

/// A secret 128-bit association token (RFC 4122 v4 UUID).
///
/// Values produced by [`generate_token`] always carry the version 4 and
/// variant 1 bits, leaving 122 random bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token([u8; TOKEN_LEN]);

impl Token {
    /// Wraps raw bytes, checking the version and variant bits.
    pub fn from_bytes(bytes: [u8; TOKEN_LEN]) -> Result<Self, TokenError> {
        if is_version4(&bytes) {
            Ok(Token(bytes))
        } else {
            Err(TokenError::NotVersion4)
        }
    }

    pub fn as_bytes(&self) -> &[u8; TOKEN_LEN] {
        &self.0
    }

    /// Draws a token from the thread-local OS-seeded generator.
    pub fn random() -> Self {
        generate_token(&mut rand::rng())
    }
}

impl fmt::Display for Token {
    /// Lowercase hyphenated 8-4-4-4-12 form.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Uuid::from_bytes(self.0).hyphenated().fmt(f)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Token({self})")
    }
}

impl FromStr for Token {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let uuid = Uuid::parse_str(s).map_err(|e| TokenError::BadText(e.to_string()))?;
        Token::from_bytes(uuid.into_bytes())
    }
}

/// True when `bytes` carries the RFC 4122 version 4 and variant 1 bits.
pub fn is_version4(bytes: &[u8; TOKEN_LEN]) -> bool {
    bytes[6] >> 4 == 0x4 && bytes[8] >> 6 == 0b10
}

/// Draws a fresh token from `rng`.
///
/// Simulation code passes a seeded generator so runs replay exactly.
pub fn generate_token<R: RngCore + ?Sized>(rng: &mut R) -> Token {
    let mut bytes = [0u8; TOKEN_LEN];
    rng.fill(&mut bytes[..]);
    let uuid = uuid::Builder::from_random_bytes(bytes).into_uuid();
    Token(uuid.into_bytes())
}

/// A 512-bit SHA-512 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub const fn from_bytes(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    /// SHA-512 over an arbitrary byte string.
    pub fn of(data: &[u8]) -> Self {
        Digest(Sha512::digest(data).into())
    }

    /// 128 lowercase hex characters.
    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({}..)", &self.to_hex()[..16])
    }
}

impl FromStr for Digest {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut out = [0u8; DIGEST_LEN];
        hex::decode_to_slice(s, &mut out).map_err(|e| TokenError::BadDigest(e.to_string()))?;
        Ok(Digest(out))
    }
}

/// Commitment to a token: SHA-512 over its 16 raw bytes.
pub fn hash_token(token: &Token) -> Digest {
    hash_token_bytes(token.as_bytes())
}

/// Same as [`hash_token`] for token bytes received off the air, which may
/// not be a well-formed UUID.
pub fn hash_token_bytes(bytes: &[u8; TOKEN_LEN]) -> Digest {
    Digest::of(bytes)
}
