mod common;

use common::{fips_vectors, sha512_oracle};
use deauthguard::tokens::{hash_token, Digest, Token};
use proptest::prelude::*;

#[test]
fn oracle_matches_published_vectors() {
    for (msg, expected) in fips_vectors() {
        assert_eq!(hex::encode(sha512_oracle::digest(&msg)), expected, "len {}", msg.len());
    }
}

#[test]
fn backend_matches_published_vectors() {
    for (msg, expected) in fips_vectors() {
        assert_eq!(Digest::of(&msg).to_hex(), expected, "len {}", msg.len());
    }
}

#[test]
fn forced_zero_token() {
    let mut bytes = [0u8; 16];
    bytes[6] = 0x40;
    bytes[8] = 0x80;
    let token = Token::from_bytes(bytes).unwrap();
    assert_eq!(token.to_string(), "00000000-0000-4000-8000-000000000000");
    assert_eq!(*hash_token(&token).as_bytes(), sha512_oracle::digest(&bytes));
}

proptest! {
    #[test]
    fn backend_agrees_with_oracle(msg in proptest::collection::vec(any::<u8>(), 0..300)) {
        prop_assert_eq!(*Digest::of(&msg).as_bytes(), sha512_oracle::digest(&msg));
    }

    #[test]
    fn token_hash_agrees_with_oracle(seed in any::<u64>()) {
        let token = deauthguard::generate_token(&mut common::rng(seed));
        prop_assert_eq!(*hash_token(&token).as_bytes(), sha512_oracle::digest(token.as_bytes()));
    }
}
