use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::apps::{feed, localisation};
use crate::evolve::EvolutionStrategy;
use crate::island::{MigrationMode, MigrationPolicy};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum App {
    #[default]
    Feed,
    Localisation,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Landscape {
    /// Every island evaluates against the same user or world.
    #[default]
    #[serde(rename = "homo", alias = "homogeneous")]
    Homogeneous,
    /// Islands evaluate against different users or worlds.
    #[serde(rename = "hetero", alias = "heterogeneous")]
    Heterogeneous,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Sim,
    Udp,
}

macro_rules! text_enum {
    ($ty:ty, $($name:literal => $variant:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($name => Ok($variant),)+
                    other => Err(format!("unknown value `{other}`")),
                }
            }
        }
    };
}

text_enum!(App, "feed" => App::Feed, "localisation" => App::Localisation, "localization" => App::Localisation);
text_enum!(Landscape,
    "homo" => Landscape::Homogeneous, "homogeneous" => Landscape::Homogeneous,
    "hetero" => Landscape::Heterogeneous, "heterogeneous" => Landscape::Heterogeneous);
text_enum!(TransportKind, "sim" => TransportKind::Sim, "udp" => TransportKind::Udp);

impl fmt::Display for App {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            App::Feed => "feed",
            App::Localisation => "localisation",
        })
    }
}

/// Everything that determines an experiment. Two runs of the same config
/// produce identical datasets (simulated transport only).
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub app: App,
    pub islands: usize,
    pub capacity: usize,
    pub generations: u64,
    pub iterations: usize,
    pub policy: MigrationPolicy,
    pub landscape: Landscape,
    pub seed: u64,
    pub transport: TransportKind,
    pub loss: f64,
    /// Generation-time helper (localisation only).
    pub helper: bool,
    pub max_depth: Option<usize>,
    /// Breeding plan; defaults by app and capacity when absent.
    pub strategy: Option<EvolutionStrategy>,
    pub feed: Option<feed::FeedConfig>,
    pub world: Option<localisation::World>,
    /// Virtual seconds per localisation evaluation.
    pub seconds: u32,
    /// Worker threads for iterations; 0 picks the machine's parallelism.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            app: App::Feed,
            islands: 2,
            capacity: 10,
            generations: 20,
            iterations: 15,
            policy: MigrationPolicy::migrate(5, 0.2),
            landscape: Landscape::Homogeneous,
            seed: 0,
            transport: TransportKind::Sim,
            loss: 0.0,
            helper: true,
            max_depth: None,
            strategy: None,
            feed: None,
            world: None,
            seconds: localisation::DEFAULT_SECONDS,
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn max_depth(&self) -> usize {
        self.max_depth.unwrap_or(match self.app {
            App::Feed => feed::DEFAULT_MAX_DEPTH,
            App::Localisation => localisation::DEFAULT_MAX_DEPTH,
        })
    }

    /// The configured plan, or the standard one for this app and capacity.
    pub fn strategy(&self) -> EvolutionStrategy {
        if let Some(s) = &self.strategy {
            return s.clone();
        }
        match (self.app, self.capacity) {
            (App::Feed, 5) => EvolutionStrategy::feed_standalone(),
            (App::Localisation, 12) => EvolutionStrategy::localisation_standalone(),
            (_, n) => EvolutionStrategy::island(n),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.islands == 0 {
            return bad("islands must be at least 1".into());
        }
        if self.capacity == 0 {
            return bad("capacity must be at least 1".into());
        }
        if self.generations == 0 {
            return bad("generations must be at least 1".into());
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.max_depth() == 0 {
            return bad("max depth must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.loss) {
            return bad(format!("loss probability {} outside [0, 1]", self.loss));
        }
        if self.app == App::Localisation && self.seconds == 0 {
            return bad("localisation needs at least one virtual second".into());
        }
        self.policy.validate().map_err(HarnessError::Config)?;
        self.strategy()
            .validate(self.capacity)
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(())
    }
}

/// On-disk form of [`ExperimentConfig`]; every field is optional and
/// missing ones keep their defaults.
///
/// ```toml
/// app = "feed"
/// islands = 2
/// interval = 5
/// rate = 0.3
/// mode = "migrate"
///
/// [strategy]
/// selector = [{ name = "HR", kind = "wheel", pool = { n_best = 3 } }]
/// step = [{ selector = "HR", operator = "MUTATION", count = 10 }]
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub app: Option<App>,
    pub islands: Option<usize>,
    pub capacity: Option<usize>,
    pub generations: Option<u64>,
    pub iterations: Option<usize>,
    pub interval: Option<u64>,
    pub rate: Option<f64>,
    pub mode: Option<MigrationMode>,
    pub landscape: Option<Landscape>,
    pub seed: Option<u64>,
    pub transport: Option<TransportKind>,
    pub loss: Option<f64>,
    pub helper: Option<bool>,
    pub max_depth: Option<usize>,
    pub seconds: Option<u32>,
    pub threads: Option<usize>,
    pub strategy: Option<EvolutionStrategy>,
    /// Path of a feed catalog file, relative to the config file.
    pub feed_config: Option<PathBuf>,
    /// Path of a localisation world file, relative to the config file.
    pub world: Option<PathBuf>,
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut file = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.feed_config = file.feed_config.map(|p| base.join(p));
        file.world = file.world.map(|p| base.join(p));
        Ok(file)
    }

    /// Overlays the file onto `cfg`.
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), HarnessError> {
        macro_rules! take {
            ($($field:ident),+) => { $(if let Some(v) = self.$field.clone() { cfg.$field = v; })+ };
        }
        take!(app, islands, capacity, generations, iterations, landscape, seed, transport, loss, helper, seconds, threads);
        if self.max_depth.is_some() {
            cfg.max_depth = self.max_depth;
        }
        if let Some(v) = self.interval {
            cfg.policy.interval = v;
        }
        if let Some(v) = self.rate {
            cfg.policy.rate = v;
        }
        if let Some(v) = self.mode {
            cfg.policy.mode = v;
        }
        if self.strategy.is_some() {
            cfg.strategy = self.strategy.clone();
        }
        if let Some(p) = &self.feed_config {
            cfg.feed = Some(feed::FeedConfig::load(p).map_err(HarnessError::Config)?);
        }
        if let Some(p) = &self.world {
            cfg.world = Some(localisation::World::load(p).map_err(HarnessError::Config)?);
        }
        Ok(())
    }
}
