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

//! Simulated trusted shuffler: envelope tagging, uniform permutation,
//! routing to protocol instances, and communication metering.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bitsum::{Payload, PayloadTally};
use crate::error::{Error, Result};

/// The `I x Q` grid of bitsum instances a run is made of.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceGrid {
    repetitions: usize,
    width: usize,
}

impl InstanceGrid {
    pub fn new(repetitions: usize, width: usize) -> Result<Self> {
        if repetitions == 0 || width == 0 {
            return Err(Error::invalid("instance grid dimensions must be positive"));
        }
        if repetitions
            .checked_mul(width)
            .is_none_or(|c| c > u32::MAX as usize)
        {
            return Err(Error::invalid("instance grid too large for 32-bit tags"));
        }
        Ok(InstanceGrid { repetitions, width })
    }

    pub fn repetitions(&self) -> usize {
        self.repetitions
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn cells(&self) -> usize {
        self.repetitions * self.width
    }

    /// Flattened row-major tag of instance `(i, j)`, zero-based.
    pub fn tag(&self, i: usize, j: usize) -> Result<InstanceTag> {
        if i >= self.repetitions || j >= self.width {
            return Err(Error::TagOutOfRange {
                tag: (i * self.width + j).min(u32::MAX as usize) as u32,
                cells: self.cells(),
            });
        }
        Ok(InstanceTag((i * self.width + j) as u32))
    }

    /// Per-message size: `ceil(log2(I Q))` tag bits plus one payload bit.
    pub fn bits_per_message(&self) -> u32 {
        let cells = self.cells() as u64;
        let tag_bits = if cells <= 1 {
            0
        } else {
            u64::BITS - (cells - 1).leading_zeros()
        };
        tag_bits + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct InstanceTag(pub u32);

impl InstanceTag {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One message as handed to the shuffler: `(payload, (i, j))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Envelope {
    pub tag: InstanceTag,
    pub payload: Payload,
}

/// Uniformly permutes the envelopes in place. Envelopes carry no sender field,
/// so once merged and permuted nothing links a message to its user.
pub fn shuffle<R: Rng + ?Sized>(envelopes: &mut [Envelope], rng: &mut R) {
    envelopes.shuffle(rng);
}

/// Partitions a shuffled stream into per-instance payload multisets.
pub fn route(envelopes: &[Envelope], grid: InstanceGrid) -> Result<Vec<PayloadTally>> {
    let mut cells = vec![PayloadTally::default(); grid.cells()];
    for env in envelopes {
        let cell = cells.get_mut(env.tag.index()).ok_or(Error::TagOutOfRange {
            tag: env.tag.0,
            cells: grid.cells(),
        })?;
        cell.add(env.payload);
    }
    Ok(cells)
}

/// Exact accounting of the user-to-shuffler leg.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptMeter {
    per_user: Vec<u64>,
    bits_per_message: u32,
    total_bits: u64,
}

impl TranscriptMeter {
    pub fn from_counts(per_user: Vec<u64>, grid: InstanceGrid) -> Self {
        let bits_per_message = grid.bits_per_message();
        let total_bits = per_user.iter().sum::<u64>() * u64::from(bits_per_message);
        TranscriptMeter {
            per_user,
            bits_per_message,
            total_bits,
        }
    }

    pub fn per_user_message_counts(&self) -> &[u64] {
        &self.per_user
    }

    pub fn bits_per_message(&self) -> u32 {
        self.bits_per_message
    }

    pub fn total_bits(&self) -> u64 {
        self.total_bits
    }

    pub fn total_messages(&self) -> u64 {
        self.per_user.iter().sum()
    }

    pub fn mean_messages_per_user(&self) -> f64 {
        if self.per_user.is_empty() {
            return 0.0;
        }
        self.total_messages() as f64 / self.per_user.len() as f64
    }
}

/// Meters envelopes grouped by sender. Observes only; the stream is untouched.
pub fn meter<E: AsRef<[Envelope]>>(by_sender: &[E], grid: InstanceGrid) -> TranscriptMeter {
    let counts = by_sender.iter().map(|e| e.as_ref().len() as u64).collect();
    TranscriptMeter::from_counts(counts, grid)
}

/// Audit dump, one `tag_index,payload_bit` line per envelope in stream order.
pub fn write_transcript<W: Write>(mut w: W, envelopes: &[Envelope]) -> std::io::Result<()> {
    for env in envelopes {
        writeln!(w, "{},{}", env.tag.0, env.payload.wire_bit())?;
    }
    Ok(())
}
