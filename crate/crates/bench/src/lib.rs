//! Fixtures shared by the benchmarks.

use deauthguard::station::{ApStation, ClientStation, Mode};
use deauthguard::{MacAddress, ManagementFrame};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub const AP: MacAddress = MacAddress([0x02, 0, 0, 0, 0, 0x01]);
pub const STA: MacAddress = MacAddress([0x02, 0, 0, 0, 0, 0x02]);

/// An AP and client that have completed the extended association.
pub fn associated(mode: Mode, seed: u64) -> (ApStation, ClientStation) {
    let mut ap = ApStation::new(AP, mode, ChaCha20Rng::seed_from_u64(seed));
    let mut sta = ClientStation::new(STA, mode, ChaCha20Rng::seed_from_u64(seed.wrapping_add(1)));
    sta.authentication_succeeded(AP);
    let req = sta.begin_association(AP).expect("client in S2");
    let (resp, _) = ap.handle_assoc_request(&req).expect("assoc request");
    sta.handle_assoc_response(&resp).expect("pending association");
    (ap, sta)
}

/// One frame of each size class: bare header, token element, hash element.
pub fn sample_frames() -> Vec<ManagementFrame> {
    let (_, mut sta) = associated(Mode::Protected, 0);
    let req = ManagementFrame::assoc_request(STA, AP, Some(*sta.session_with(&AP).unwrap().own_hash()));
    let deauth = sta.disconnect(AP, deauthguard::ReasonCode(3)).unwrap();
    vec![ManagementFrame::auth_request(STA, AP), deauth, req]
}
