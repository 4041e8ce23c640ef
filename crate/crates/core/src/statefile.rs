//! Versioned JSON state files and report documents.
//!
//! A state file looks like
//!
//! ```json
//! {
//!   "format": "qcr-state",
//!   "version": 1,
//!   "layout": {
//!     "d": 2,
//!     "players": 1,
//!     "subsystems": [
//!       { "label": "D.i", "role": "dealer-info", "dim": 2 },
//!       { "label": "A1.i", "role": "player-info:1", "dim": 2 }
//!     ]
//!   },
//!   "representation": "pure",
//!   "entries": [[0.7071067811865476, 0.0], [0.0, 0.0], [0.0, 0.0], [0.7071067811865476, 0.0]],
//!   "note": "optional free text"
//! }
//! ```
//!
//! Entries are `(re, im)` pairs in row-major order: the amplitude vector for
//! `pure`, the full matrix for `density`. Floats are written with shortest
//! round-trip formatting, so files written here read back bit-exactly.
//! `d` and `players` are `null` when the registers do not form a
//! dealer/player layout.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{QcrError, Result};
use crate::registers::SystemLayout;
use crate::tensor::{ComplexMatrix, ComplexVector, QuantumState, Role, StateData, Subsystem};

pub const STATE_FORMAT: &str = "qcr-state";
pub const FORMAT_VERSION: u32 = 1;

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::DealerInfo => f.write_str("dealer-info"),
            Role::DealerShield => f.write_str("dealer-shield"),
            Role::PlayerInfo(k) => write!(f, "player-info:{k}"),
            Role::PlayerShield(k) => write!(f, "player-shield:{k}"),
            Role::Environment => f.write_str("environment"),
            Role::Other => f.write_str("other"),
        }
    }
}

impl std::str::FromStr for Role {
    type Err = QcrError;

    fn from_str(s: &str) -> Result<Self> {
        let player = |rest: &str| -> Result<usize> {
            rest.parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| QcrError::Format(format!("bad player index in role `{s}`")))
        };
        match s {
            "dealer-info" => Ok(Role::DealerInfo),
            "dealer-shield" => Ok(Role::DealerShield),
            "environment" => Ok(Role::Environment),
            "other" => Ok(Role::Other),
            _ => {
                if let Some(rest) = s.strip_prefix("player-info:") {
                    Ok(Role::PlayerInfo(player(rest)?))
                } else if let Some(rest) = s.strip_prefix("player-shield:") {
                    Ok(Role::PlayerShield(player(rest)?))
                } else {
                    Err(QcrError::Format(format!("unknown role `{s}`")))
                }
            }
        }
    }
}

impl Serialize for Role {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct RoleVisitor;
        impl Visitor<'_> for RoleVisitor {
            type Value = Role;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a register role string")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Role, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_str(RoleVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Pure,
    Density,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub d: Option<usize>,
    pub players: Option<usize>,
    pub subsystems: Vec<Subsystem>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub format: String,
    pub version: u32,
    pub layout: LayoutRecord,
    pub representation: Representation,
    pub entries: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl StateFile {
    pub fn from_state(s: &QuantumState, note: Option<String>) -> Self {
        let layout = SystemLayout::from_registers(s.registers()).ok();
        let (representation, entries) = match s.data() {
            StateData::Pure(v) => (
                Representation::Pure,
                v.iter().map(|z| [z.re, z.im]).collect(),
            ),
            StateData::Density(m) => {
                let n = m.nrows();
                let mut out = Vec::with_capacity(n * n);
                for r in 0..n {
                    for c in 0..n {
                        let z = m[(r, c)];
                        out.push([z.re, z.im]);
                    }
                }
                (Representation::Density, out)
            }
        };
        Self {
            format: STATE_FORMAT.to_string(),
            version: FORMAT_VERSION,
            layout: LayoutRecord {
                d: layout.as_ref().map(|l| l.d()),
                players: layout.as_ref().map(|l| l.players()),
                subsystems: s.registers().to_vec(),
            },
            representation,
            entries,
            note,
        }
    }

    /// Validate and convert into a state.
    pub fn to_state(&self) -> Result<QuantumState> {
        if self.format != STATE_FORMAT {
            return Err(QcrError::Format(format!(
                "format `{}` is not `{STATE_FORMAT}`",
                self.format
            )));
        }
        if self.version != FORMAT_VERSION {
            return Err(QcrError::Format(format!(
                "unsupported version {}",
                self.version
            )));
        }
        let regs = self.layout.subsystems.clone();
        let dim = regs
            .iter()
            .try_fold(1usize, |acc, r| acc.checked_mul(r.dim))
            .ok_or_else(|| QcrError::Format("dimension overflow".into()))?;
        let values: Vec<Complex64> = self
            .entries
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        let expected = match self.representation {
            Representation::Pure => dim,
            Representation::Density => dim * dim,
        };
        if values.len() != expected {
            return Err(QcrError::Format(format!(
                "{} entries for declared dimension {dim} ({:?})",
                values.len(),
                self.representation
            )));
        }
        let state = match self.representation {
            Representation::Pure => QuantumState::pure(regs, ComplexVector::from_vec(values))?,
            Representation::Density => {
                QuantumState::density(regs, ComplexMatrix::from_row_slice(dim, dim, &values))?
            }
        };
        let layout = SystemLayout::from_registers(state.registers()).ok();
        let declared = (self.layout.d, self.layout.players);
        let actual = (
            layout.as_ref().map(|l| l.d()),
            layout.as_ref().map(|l| l.players()),
        );
        if declared != actual {
            return Err(QcrError::Format(format!(
                "declared (d, players) {declared:?} do not match registers {actual:?}"
            )));
        }
        Ok(state)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state files serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| QcrError::Format(e.to_string()))
    }
}

pub fn state_to_json(s: &QuantumState, note: Option<String>) -> String {
    StateFile::from_state(s, note).to_json()
}

pub fn state_from_json(text: &str) -> Result<QuantumState> {
    StateFile::from_json(text)?.to_state()
}

pub fn write_state(path: impl AsRef<Path>, s: &QuantumState, note: Option<String>) -> Result<()> {
    std::fs::write(path, state_to_json(s, note) + "\n")?;
    Ok(())
}

pub fn read_state(path: impl AsRef<Path>) -> Result<QuantumState> {
    let text = std::fs::read_to_string(path)?;
    state_from_json(&text)
}

/// A report wrapped with its format tag and version.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document<T> {
    pub format: String,
    pub version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T: Serialize> Document<T> {
    pub fn new(format: &str, body: T) -> Self {
        Self {
            format: format.to_string(),
            version: FORMAT_VERSION,
            body,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
