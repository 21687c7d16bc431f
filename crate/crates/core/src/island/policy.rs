use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MigrationMode {
    /// Exchange copies of local members between islands.
    Migrate,
    /// Append freshly generated programs instead of migrants.
    #[serde(alias = "random-inject")]
    Random,
    #[default]
    None,
}

impl FromStr for MigrationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "migrate" => Ok(Self::Migrate),
            "random" | "random-inject" => Ok(Self::Random),
            "none" => Ok(Self::None),
            other => Err(format!("unknown migration mode `{other}`")),
        }
    }
}

impl fmt::Display for MigrationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Migrate => "migrate",
            Self::Random => "random",
            Self::None => "none",
        })
    }
}

/// When and how many programs move.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MigrationPolicy {
    /// Generations between events.
    pub interval: u64,
    /// Fraction of capacity emitted (or injected) per event.
    pub rate: f64,
    pub mode: MigrationMode,
}

impl MigrationPolicy {
    pub fn none() -> Self {
        Self {
            interval: 0,
            rate: 0.0,
            mode: MigrationMode::None,
        }
    }

    pub fn migrate(interval: u64, rate: f64) -> Self {
        Self {
            interval,
            rate,
            mode: MigrationMode::Migrate,
        }
    }

    pub fn random(interval: u64, rate: f64) -> Self {
        Self {
            interval,
            rate,
            mode: MigrationMode::Random,
        }
    }

    /// `rate * capacity` rounded half-up.
    pub fn count(&self, capacity: usize) -> usize {
        (self.rate * capacity as f64 + 0.5).floor().max(0.0) as usize
    }

    /// Whether an event happens once `completed` generations have been
    /// evaluated: positive multiples of the interval.
    pub fn is_event(&self, completed: u64) -> bool {
        self.mode != MigrationMode::None
            && self.interval > 0
            && completed > 0
            && completed.is_multiple_of(self.interval)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.mode == MigrationMode::None {
            return Ok(());
        }
        if self.interval == 0 {
            return Err("migration interval must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.rate) {
            return Err(format!("migration rate {} outside [0, 1]", self.rate));
        }
        Ok(())
    }
}
