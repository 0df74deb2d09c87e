//
// Copyright 2026 The shufdp-kde Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

//! Domain-separated randomness streams.
//!
//! Every random quantity in a protocol run is drawn from a ChaCha20 stream
//! keyed by `SHA-256(master seed, domain, index)`, so public randomness,
//! each user's private randomness, the shuffler and the analyzer never share
//! a stream and every run is reproducible from its master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

pub type Stream = ChaCha20Rng;

pub fn derive_key(master: u64, domain: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(b"shufdp-kde/stream/v1");
    hasher.update(master.to_le_bytes());
    hasher.update((domain.len() as u64).to_le_bytes());
    hasher.update(domain.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    key
}

/// Opens the stream for `(master, domain, index)`.
pub fn stream(master: u64, domain: &str, index: u64) -> Stream {
    ChaCha20Rng::from_seed(derive_key(master, domain, index))
}

/// Derives a child seed, used where a seed (not a stream) must be published.
pub fn derive_seed(master: u64, domain: &str, index: u64) -> u64 {
    let key = derive_key(master, domain, index);
    u64::from_le_bytes(key[..8].try_into().expect("8 bytes"))
}
