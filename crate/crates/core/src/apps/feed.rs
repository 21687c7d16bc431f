//! Feed personalisation.
//!
//! A program is run once per feed with that feed's attributes bound to its
//! terminals and yields a score. Feeds with a positive score are ranked
//! (highest first, ties by catalog order) and their unread items are dealt
//! round-robin into a report until the desired quantity is reached. A
//! synthetic user then clicks each displayed item with its feed's click
//! probability.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evolve::{EvalError, Evaluator};
use crate::interp::{execute, Environment, SupervisorPolicy, Value};
use crate::program::{ConstantSource, NodeKind, PrimitiveSet, ProgramTree, Sort};

pub const DEFAULT_DESIRED_QTY: usize = 10;
pub const DEFAULT_MAX_DEPTH: usize = 3;
pub const PREFERRED_CLICK: f64 = 0.9;
pub const OTHER_CLICK: f64 = 0.1;
/// Click probability of a paired reader's two feeds.
pub const PAIR_CLICK: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Tech,
    Other,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feed {
    pub id: String,
    pub group: Group,
    /// Unread items available each time a report is requested.
    pub unread: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeedCatalog {
    pub feeds: Vec<Feed>,
}

impl FeedCatalog {
    /// Terminal name testing for feed `id`.
    pub fn identity_terminal(id: &str) -> String {
        format!("is_{}", id.to_ascii_lowercase())
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.feeds.iter().position(|f| f.id == id)
    }
}

impl Default for FeedCatalog {
    /// Four tech and three other feeds. The news and video sources publish
    /// eight items per round, the rest two.
    fn default() -> Self {
        let feed = |id: &str, group, unread| Feed {
            id: id.to_string(),
            group,
            unread,
        };
        Self {
            feeds: vec![
                feed("TechCrunch", Group::Tech, 8),
                feed("TechLand", Group::Tech, 2),
                feed("Engadget", Group::Tech, 8),
                feed("DigitalTrends", Group::Tech, 8),
                feed("VisualLoop", Group::Other, 2),
                feed("BreakVideos", Group::Other, 8),
                feed("BusinessGreen", Group::Other, 2),
            ],
        }
    }
}

/// Click probability per catalog feed.
#[derive(Clone, Debug, PartialEq)]
pub struct UserModel {
    pub click: Vec<f64>,
}

impl UserModel {
    /// Clicks tech feeds with `PREFERRED_CLICK`, the rest with `OTHER_CLICK`.
    pub fn tech_reader(catalog: &FeedCatalog) -> Self {
        Self {
            click: catalog
                .feeds
                .iter()
                .map(|f| match f.group {
                    Group::Tech => PREFERRED_CLICK,
                    Group::Other => OTHER_CLICK,
                })
                .collect(),
        }
    }

    /// Clicks the named feeds with `preferred` and the rest with `other`.
    pub fn preferring(catalog: &FeedCatalog, ids: &[&str], preferred: f64, other: f64) -> Self {
        Self {
            click: catalog
                .feeds
                .iter()
                .map(|f| if ids.contains(&f.id.as_str()) { preferred } else { other })
                .collect(),
        }
    }

    /// Reader who always clicks two feeds: island 0 reads TechCrunch and
    /// Engadget, island 1 BreakVideos and DigitalTrends; further islands
    /// alternate.
    pub fn paired(catalog: &FeedCatalog, island: usize) -> Self {
        let pair: &[&str] = if island.is_multiple_of(2) {
            &["TechCrunch", "Engadget"]
        } else {
            &["BreakVideos", "DigitalTrends"]
        };
        Self::preferring(catalog, pair, PAIR_CLICK, OTHER_CLICK)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Item {
    pub feed: usize,
    /// Position within the feed's unread list.
    pub item: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeedReport {
    pub displayed: Vec<Item>,
    pub desired_qty: usize,
    pub clicked: Vec<Item>,
}

impl FeedReport {
    pub fn count_group(&self, catalog: &FeedCatalog, group: Group) -> usize {
        self.displayed
            .iter()
            .filter(|i| catalog.feeds[i.feed].group == group)
            .count()
    }
}

/// Terminals: `group_is_tech`, `unread_count`, one `is_<feed>` per feed and
/// `const:FeedScore`; functions: `add`, `sub`, `mul`, `if_greater`.
pub fn primitive_set(catalog: &FeedCatalog) -> PrimitiveSet {
    let s = Sort::FeedScore;
    let mut kinds = vec![
        NodeKind::function("add", &[s, s], s),
        NodeKind::function("sub", &[s, s], s),
        NodeKind::function("mul", &[s, s], s),
        NodeKind::function("if_greater", &[s, s, s, s], s),
        NodeKind::terminal("group_is_tech", s),
        NodeKind::terminal("unread_count", s),
    ];
    kinds.extend(
        catalog
            .feeds
            .iter()
            .map(|f| NodeKind::terminal(FeedCatalog::identity_terminal(&f.id), s)),
    );
    kinds.push(NodeKind::constant(s));
    PrimitiveSet::new(
        kinds,
        s,
        BTreeMap::from([(s, ConstantSource::Uniform { lo: -1.0, hi: 1.0 })]),
    )
    .expect("feed primitive set is well formed")
}

struct FeedEnv<'a> {
    feed: &'a Feed,
}

impl Environment for FeedEnv<'_> {
    fn terminal(&mut self, kind: &NodeKind) -> Option<Value> {
        let hit = |b: bool| Some(Value::Number(f64::from(u8::from(b))));
        match kind.name.as_str() {
            "group_is_tech" => hit(self.feed.group == Group::Tech),
            "unread_count" => Some(Value::Number(self.feed.unread as f64)),
            name => name
                .strip_prefix("is_")
                .map(|id| self.feed.id.eq_ignore_ascii_case(id))
                .and_then(hit),
        }
    }
}

/// Scores each feed with `tree` and fills the report. A program the
/// supervisor kills (or that references an unbound terminal) yields an
/// empty report.
pub fn run_feed_program(
    tree: &ProgramTree,
    catalog: &FeedCatalog,
    desired_qty: usize,
    policy: SupervisorPolicy,
) -> FeedReport {
    let mut empty = FeedReport {
        desired_qty,
        ..FeedReport::default()
    };
    let mut scored = Vec::with_capacity(catalog.feeds.len());
    for (idx, feed) in catalog.feeds.iter().enumerate() {
        let outcome = match execute(tree, &mut FeedEnv { feed }, policy) {
            Ok(o) if o.completed() => o,
            _ => return empty,
        };
        let score = outcome.value.map(Value::as_number).unwrap_or(0.0);
        if score > 0.0 {
            scored.push((idx, score));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));

    let deepest = scored
        .iter()
        .map(|&(f, _)| catalog.feeds[f].unread)
        .max()
        .unwrap_or(0);
    'fill: for round in 0..deepest {
        for &(feed, _) in &scored {
            if empty.displayed.len() >= desired_qty {
                break 'fill;
            }
            if round < catalog.feeds[feed].unread {
                empty.displayed.push(Item { feed, item: round });
            }
        }
    }
    empty
}

/// Each displayed item is clicked independently with its feed's probability.
pub fn simulate_clicks<R: Rng + ?Sized>(report: &mut FeedReport, user: &UserModel, rng: &mut R) {
    report.clicked = report
        .displayed
        .iter()
        .copied()
        .filter(|item| rng.gen_bool(user.click[item.feed].clamp(0.0, 1.0)))
        .collect();
}

/// `min(displayed / desired, 1) * clicked / displayed`, 0 when nothing shows.
pub fn feed_fitness(displayed: usize, desired_qty: usize, clicked: usize) -> f64 {
    if displayed == 0 || desired_qty == 0 {
        return 0.0;
    }
    let count = if displayed <= desired_qty {
        displayed as f64 / desired_qty as f64
    } else {
        1.0
    };
    count * (clicked as f64 / displayed as f64)
}

pub fn report_fitness(report: &FeedReport) -> f64 {
    feed_fitness(
        report.displayed.len(),
        report.desired_qty,
        report.clicked.len(),
    )
}

/// Running totals of displayed items per group.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GroupTally {
    pub reports: usize,
    pub tech: usize,
    pub other: usize,
}

impl GroupTally {
    pub fn tech_share(&self) -> f64 {
        self.share(self.tech)
    }

    pub fn other_share(&self) -> f64 {
        self.share(self.other)
    }

    fn share(&self, n: usize) -> f64 {
        let total = self.tech + self.other;
        if total == 0 {
            0.0
        } else {
            n as f64 / total as f64
        }
    }
}

/// One simulated news report per evaluation.
#[derive(Clone, Debug)]
pub struct FeedEvaluator {
    pub catalog: FeedCatalog,
    pub user: UserModel,
    pub desired_qty: usize,
    pub policy: SupervisorPolicy,
    pub tally: GroupTally,
    rng: ChaCha8Rng,
}

impl FeedEvaluator {
    pub fn new(catalog: FeedCatalog, user: UserModel, desired_qty: usize, seed: u64) -> Self {
        Self {
            catalog,
            user,
            desired_qty,
            policy: SupervisorPolicy::steps(1_000),
            tally: GroupTally::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn take_tally(&mut self) -> GroupTally {
        std::mem::take(&mut self.tally)
    }
}

impl Evaluator for FeedEvaluator {
    fn evaluate(&mut self, tree: &ProgramTree) -> Result<f64, EvalError> {
        let mut report = run_feed_program(tree, &self.catalog, self.desired_qty, self.policy);
        simulate_clicks(&mut report, &self.user, &mut self.rng);
        self.tally.reports += 1;
        self.tally.tech += report.count_group(&self.catalog, Group::Tech);
        self.tally.other += report.count_group(&self.catalog, Group::Other);
        Ok(report_fitness(&report))
    }
}

/// Catalog plus user model as stored on disk.
///
/// ```toml
/// desired_qty = 10
///
/// [[feed]]
/// id = "TechCrunch"
/// group = "tech"
/// unread = 8
/// click = 0.9
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedConfig {
    #[serde(default = "default_desired")]
    pub desired_qty: usize,
    #[serde(rename = "feed")]
    pub feeds: Vec<FeedEntry>,
}

fn default_desired() -> usize {
    DEFAULT_DESIRED_QTY
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeedEntry {
    pub id: String,
    pub group: Group,
    pub unread: usize,
    pub click: f64,
}

impl FeedConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        if cfg.desired_qty == 0 {
            return Err("desired_qty must be at least 1".into());
        }
        if let Some(bad) = cfg.feeds.iter().find(|f| !(0.0..=1.0).contains(&f.click)) {
            return Err(format!("click probability of `{}` outside [0, 1]", bad.id));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn catalog(&self) -> FeedCatalog {
        FeedCatalog {
            feeds: self
                .feeds
                .iter()
                .map(|f| Feed {
                    id: f.id.clone(),
                    group: f.group,
                    unread: f.unread,
                })
                .collect(),
        }
    }

    pub fn user(&self) -> UserModel {
        UserModel {
            click: self.feeds.iter().map(|f| f.click).collect(),
        }
    }
}
