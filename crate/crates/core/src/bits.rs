//! Computational-basis strings. Qubit 0 is the least significant bit everywhere.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest qubit count addressable by a [`BitString`].
pub const MAX_BASIS_QUBITS: usize = 63;

/// A basis state `|x>` of `n` qubits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    value: u64,
    n: usize,
}

impl BitString {
    pub fn new(value: u64, n: usize) -> Result<Self> {
        if n > MAX_BASIS_QUBITS {
            return Err(Error::Precondition(format!(
                "{n} qubits exceed the basis-string width {MAX_BASIS_QUBITS}"
            )));
        }
        if value >> n != 0 {
            return Err(Error::BitStringOutOfRange { value, n });
        }
        Ok(Self { value, n })
    }

    pub fn zeros(n: usize) -> Self {
        Self { value: 0, n }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.value
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn bit(&self, q: usize) -> bool {
        (self.value >> q) & 1 == 1
    }

    pub fn with_value(&self, value: u64) -> Self {
        debug_assert!(value >> self.n == 0);
        Self { value, n: self.n }
    }

    /// Parses `0b...` (most significant qubit first), `0x...`, or a decimal
    /// integer. A binary literal with no explicit width fixes `n` to its digit
    /// count.
    pub fn parse(text: &str, n: Option<usize>) -> Result<Self> {
        let t = text.trim();
        let err = |msg: &str| Error::Parse {
            line: 1,
            msg: format!("bad basis string {t:?}: {msg}"),
        };
        let (value, digits) = if let Some(b) = t.strip_prefix("0b") {
            if b.is_empty() {
                return Err(err("empty binary literal"));
            }
            (
                u64::from_str_radix(b, 2).map_err(|e| err(&e.to_string()))?,
                Some(b.len()),
            )
        } else if let Some(h) = t.strip_prefix("0x") {
            (
                u64::from_str_radix(h, 16).map_err(|e| err(&e.to_string()))?,
                None,
            )
        } else {
            (t.parse::<u64>().map_err(|e| err(&e.to_string()))?, None)
        };
        let n = match (n, digits) {
            (Some(n), _) => n,
            (None, Some(d)) => d,
            (None, None) => (64 - value.leading_zeros() as usize).max(1),
        };
        Self::new(value, n)
    }

    /// Binary literal with exactly `n` digits, highest qubit first.
    pub fn to_binary(&self) -> String {
        if self.n == 0 {
            return "0b".to_string();
        }
        format!("0b{:0width$b}", self.value, width = self.n)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_binary())
    }
}

impl serde::Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_binary())
    }
}

impl<'de> serde::Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::parse(&text, None).map_err(serde::de::Error::custom)
    }
}

impl FromStr for BitString {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, None)
    }
}

/// Gathers the bits of `value` at `support` into a local index
/// (`support[i]` becomes local bit `i`).
#[inline]
pub fn gather(value: u64, support: &[usize]) -> usize {
    let mut local = 0usize;
    for (i, &q) in support.iter().enumerate() {
        local |= (((value >> q) & 1) as usize) << i;
    }
    local
}

/// Overwrites the bits of `value` at `support` with the local index `local`.
#[inline]
pub fn scatter(value: u64, support: &[usize], local: usize) -> u64 {
    let mut out = value;
    for (i, &q) in support.iter().enumerate() {
        let b = ((local >> i) & 1) as u64;
        out = (out & !(1u64 << q)) | (b << q);
    }
    out
}

/// Mask with ones at every qubit of `support`.
#[inline]
pub fn support_mask(support: &[usize]) -> u64 {
    support.iter().fold(0u64, |m, &q| m | (1u64 << q))
}
