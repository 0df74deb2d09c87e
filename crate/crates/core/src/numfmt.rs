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

//! Round-trip float formatting: every float written to a model or data file
//! carries 17 significant digits.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

/// Formats `v` with 17 significant digits in scientific notation.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn serialize_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !v.is_finite() {
        return Err(serde::ser::Error::custom(format!("non-finite value {v}")));
    }
    let raw = RawValue::from_string(sig17(*v)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub(crate) fn serialize_f64_slice<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Sig17(*x))?;
    }
    seq.end()
}

/// Like [`serialize_f64`] but writes `+inf` as the string `"inf"`.
pub(crate) fn serialize_f64_or_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if *v == f64::INFINITY {
        s.serialize_str("inf")
    } else {
        serialize_f64(v, s)
    }
}

pub(crate) fn deserialize_f64_or_inf<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Text(t) => parse_f64_or_inf(&t).map_err(serde::de::Error::custom),
    }
}

/// Parses a float, accepting `inf` and `infinity` for `+inf`.
pub fn parse_f64_or_inf(t: &str) -> Result<f64, String> {
    match t.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        other => other.parse().map_err(|_| format!("not a number: '{t}'")),
    }
}

struct Sig17(f64);

impl serde::Serialize for Sig17 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serialize_f64(&self.0, s)
    }
}
