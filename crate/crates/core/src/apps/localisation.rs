//! Energy/accuracy localisation.
//!
//! A program runs once per virtual second. Its Action terminals switch
//! simulated providers on and off and ask for a position update; enabled
//! providers draw current and deliver fixes once they have been on (and
//! available) for their latency. Each second the program's last position is
//! scored against the best available position, computed in a parallel
//! reference run with every provider forced on (its power is not charged to
//! the program), and multiplied by the energy score of the current draw.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::evolve::{EvalError, Evaluator, HelperGuard};
use crate::interp::{execute, Environment, SupervisorPolicy, Value};
use crate::program::{ConstantSource, NodeKind, PrimitiveSet, ProgramTree, Sort};

pub const DEFAULT_SECONDS: u32 = 60;
pub const DEFAULT_MAX_DEPTH: usize = 4;
/// Reported by `last_fix_age` / `last_accuracy` before the first fix.
pub const NO_FIX: f64 = 999.0;

pub type Point = (f64, f64);

fn distance(a: Point, b: Point) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Piecewise-linear accuracy score of `program` against the best available
/// position with accuracy radius `a`: 1 at the centre, 0.5 on the radius,
/// 0 from twice the radius outwards.
pub fn accuracy_fitness(program: Option<Point>, best: Point, a: f64) -> f64 {
    let Some(pos) = program else {
        return 0.0;
    };
    let d = distance(pos, best);
    if a <= 0.0 {
        // exact reference: only an identical position counts
        return if d == 0.0 { 1.0 } else { 0.0 };
    }
    let ratio = d / a;
    if ratio <= 1.0 {
        1.0 - 0.5 * ratio
    } else if ratio <= 2.0 {
        0.5 - 0.5 * (ratio - 1.0)
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub battery_mah: f64,
    pub day_hours: f64,
    /// Average current allowed over a day, in mA.
    pub budget_ma: f64,
}

impl EnergyBudget {
    /// Budget current derived from capacity and day length (unrounded).
    pub fn derived_ma(&self) -> f64 {
        self.battery_mah / self.day_hours
    }
}

impl Default for EnergyBudget {
    /// 1400 mAh over a 22 h day, 63.6 mA, used as the whole-mA floor 63.
    fn default() -> Self {
        let battery_mah = 1400.0;
        let day_hours = 22.0;
        Self {
            battery_mah,
            day_hours,
            budget_ma: (battery_mah / day_hours).floor(),
        }
    }
}

/// 1 for zero draw, falling linearly to 0 at the budget current.
pub fn energy_fitness(power_ma: f64, budget: &EnergyBudget) -> f64 {
    (1.0 - power_ma.max(0.0) / budget.budget_ma).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Gps,
    Wifi,
    Cell,
}

impl ProviderKind {
    pub const ALL: [ProviderKind; 3] = [ProviderKind::Gps, ProviderKind::Wifi, ProviderKind::Cell];

    pub fn name(self) -> &'static str {
        match self {
            ProviderKind::Gps => "gps",
            ProviderKind::Wifi => "wifi",
            ProviderKind::Cell => "cell",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Context {
    Outdoor,
    Indoor,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProviderSpec {
    pub kind: ProviderKind,
    /// Fixes land uniformly within this radius of the truth.
    pub radius_m: f64,
    pub current_ma: f64,
    /// Seconds a provider must be on (and available) before its first fix.
    pub latency_s: u32,
    pub outdoor: bool,
    pub indoor: bool,
}

impl ProviderSpec {
    pub fn available(&self, context: Context) -> bool {
        match context {
            Context::Outdoor => self.outdoor,
            Context::Indoor => self.indoor,
        }
    }

    pub fn gps() -> Self {
        Self {
            kind: ProviderKind::Gps,
            radius_m: 5.0,
            current_ma: 140.0,
            latency_s: 10,
            outdoor: true,
            indoor: false,
        }
    }

    pub fn wifi() -> Self {
        Self {
            kind: ProviderKind::Wifi,
            radius_m: 40.0,
            current_ma: 30.0,
            latency_s: 2,
            outdoor: true,
            indoor: true,
        }
    }

    pub fn cell() -> Self {
        Self {
            kind: ProviderKind::Cell,
            radius_m: 400.0,
            current_ma: 5.0,
            latency_s: 1,
            outdoor: true,
            indoor: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub context: Context,
    pub seconds: u32,
}

/// Simulated surroundings: providers, a trajectory in metres on a flat
/// plane, and a repeating cycle of indoor/outdoor segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct World {
    #[serde(rename = "provider")]
    pub providers: Vec<ProviderSpec>,
    #[serde(rename = "waypoint")]
    pub trajectory: Vec<Waypoint>,
    #[serde(rename = "segment")]
    pub segments: Vec<Segment>,
    #[serde(default)]
    pub noise_seed: u64,
}

impl Default for World {
    fn default() -> Self {
        Self {
            providers: vec![ProviderSpec::gps(), ProviderSpec::wifi(), ProviderSpec::cell()],
            trajectory: vec![
                Waypoint { t: 0.0, x: 0.0, y: 0.0 },
                Waypoint { t: 30.0, x: 36.0, y: 0.0 },
                Waypoint { t: 60.0, x: 36.0, y: 36.0 },
            ],
            segments: vec![
                Segment {
                    context: Context::Outdoor,
                    seconds: 20,
                },
                Segment {
                    context: Context::Indoor,
                    seconds: 20,
                },
            ],
            noise_seed: 0,
        }
    }
}

impl World {
    pub fn with_noise_seed(mut self, seed: u64) -> Self {
        self.noise_seed = seed;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, String> {
        let world: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        world.check()?;
        Ok(world)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    fn check(&self) -> Result<(), String> {
        if self.trajectory.is_empty() {
            return Err("world needs at least one waypoint".into());
        }
        if self.segments.iter().map(|s| s.seconds).sum::<u32>() == 0 {
            return Err("world needs a segment with positive duration".into());
        }
        for p in &self.providers {
            if !(p.radius_m >= 0.0 && p.current_ma >= 0.0) {
                return Err(format!("provider {} has a negative radius or draw", p.kind.name()));
            }
        }
        Ok(())
    }

    /// Context during second `tick` (1-based).
    pub fn context(&self, tick: u32) -> Context {
        let cycle: u32 = self.segments.iter().map(|s| s.seconds).sum();
        if cycle == 0 {
            return Context::Outdoor;
        }
        let mut offset = (tick.saturating_sub(1)) % cycle;
        for s in &self.segments {
            if offset < s.seconds {
                return s.context;
            }
            offset -= s.seconds;
        }
        Context::Outdoor
    }

    /// True position at second `tick`, interpolated along the waypoints.
    pub fn truth(&self, tick: u32) -> Point {
        let t = f64::from(tick);
        let pts = &self.trajectory;
        let Some(first) = pts.first() else {
            return (0.0, 0.0);
        };
        if t <= first.t {
            return (first.x, first.y);
        }
        for pair in pts.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            if t <= b.t {
                let span = b.t - a.t;
                let w = if span > 0.0 { (t - a.t) / span } else { 1.0 };
                return (a.x + w * (b.x - a.x), a.y + w * (b.y - a.y));
            }
        }
        let last = pts[pts.len() - 1];
        (last.x, last.y)
    }

    /// Fix delivered by provider `idx` at second `tick`. Deterministic in
    /// `(noise_seed, idx, tick)`, so two runs asking the same provider at the
    /// same second see the same fix.
    pub fn fix(&self, idx: usize, tick: u32) -> Point {
        let (x, y) = self.truth(tick);
        let radius = self.providers[idx].radius_m;
        if radius <= 0.0 {
            return (x, y);
        }
        let key = self
            .noise_seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((idx as u64) << 32 | u64::from(tick));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let r = radius * rng.gen::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.gen::<f64>();
        (x + r * theta.cos(), y + r * theta.sin())
    }

    fn provider_index(&self, kind: ProviderKind) -> Option<usize> {
        self.providers.iter().position(|p| p.kind == kind)
    }
}

/// Provider on/off state with the second each uninterrupted run started.
#[derive(Clone, Debug)]
struct Radios {
    enabled: Vec<bool>,
    since: Vec<Option<u32>>,
}

impl Radios {
    fn new(n: usize, on: bool) -> Self {
        Self {
            enabled: vec![on; n],
            since: vec![None; n],
        }
    }

    /// Start-of-second bookkeeping: runs break when a provider is unavailable.
    fn refresh(&mut self, world: &World, tick: u32) {
        let ctx = world.context(tick);
        for (idx, spec) in world.providers.iter().enumerate() {
            if self.enabled[idx] && spec.available(ctx) {
                self.since[idx].get_or_insert(tick);
            } else {
                self.since[idx] = None;
            }
        }
    }

    fn enable(&mut self, world: &World, idx: usize, tick: u32) {
        self.enabled[idx] = true;
        if world.providers[idx].available(world.context(tick)) {
            self.since[idx].get_or_insert(tick);
        }
    }

    fn disable(&mut self, idx: usize) {
        self.enabled[idx] = false;
        self.since[idx] = None;
    }

    /// Most accurate provider with a fix at `tick`.
    fn best_ready(&self, world: &World, tick: u32) -> Option<usize> {
        world
            .providers
            .iter()
            .enumerate()
            .filter(|(idx, spec)| {
                self.enabled[*idx]
                    && self.since[*idx].is_some_and(|s| tick - s >= spec.latency_s)
            })
            .min_by(|a, b| a.1.radius_m.total_cmp(&b.1.radius_m))
            .map(|(idx, _)| idx)
    }

    fn power(&self, world: &World) -> f64 {
        world
            .providers
            .iter()
            .zip(&self.enabled)
            .filter(|(_, on)| **on)
            .map(|(p, _)| p.current_ma)
            .sum()
    }
}

struct Handset<'w> {
    world: &'w World,
    radios: Radios,
    position: Option<Point>,
    fix_tick: Option<u32>,
    fix_radius: Option<f64>,
    tick: u32,
}

impl Environment for Handset<'_> {
    fn terminal(&mut self, kind: &NodeKind) -> Option<Value> {
        let name = kind.name.as_str();
        let provider = |suffix: &str| {
            ProviderKind::ALL
                .into_iter()
                .find(|k| k.name() == suffix)
        };
        if let Some(p) = name.strip_prefix("enable_").and_then(provider) {
            if let Some(idx) = self.world.provider_index(p) {
                self.radios.enable(self.world, idx, self.tick);
            }
            return Some(Value::Unit);
        }
        if let Some(p) = name.strip_prefix("disable_").and_then(provider) {
            if let Some(idx) = self.world.provider_index(p) {
                self.radios.disable(idx);
            }
            return Some(Value::Unit);
        }
        match name {
            "request_update" => {
                if let Some(idx) = self.radios.best_ready(self.world, self.tick) {
                    self.position = Some(self.world.fix(idx, self.tick));
                    self.fix_tick = Some(self.tick);
                    self.fix_radius = Some(self.world.providers[idx].radius_m);
                }
                Some(Value::Unit)
            }
            "last_fix_age" => Some(Value::Number(
                self.fix_tick
                    .map_or(NO_FIX, |t| f64::from(self.tick - t)),
            )),
            "last_accuracy" => Some(Value::Number(self.fix_radius.unwrap_or(NO_FIX))),
            _ => None,
        }
    }

    fn clock(&self) -> f64 {
        f64::from(self.tick)
    }
}

/// Per-second record of an evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalisationTick {
    pub second: u32,
    pub program_pos: Option<Point>,
    pub best_pos: Option<Point>,
    pub accuracy_radius: f64,
    pub power_ma: f64,
    pub accuracy_fitness: f64,
    pub energy_fitness: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalisationRun {
    pub fitness: f64,
    pub ticks: Vec<LocalisationTick>,
    /// Second at which the supervisor killed the program.
    pub killed_at: Option<u32>,
}

/// Runs `tree` for `seconds` virtual seconds and returns the mean over all
/// seconds of accuracy fitness times energy fitness. A killed second and
/// every second after it score 0.
pub fn evaluate_localisation(
    tree: &ProgramTree,
    world: &World,
    seconds: u32,
    budget: &EnergyBudget,
    policy: SupervisorPolicy,
) -> Result<LocalisationRun, EvalError> {
    let n = world.providers.len();
    let mut phone = Handset {
        world,
        radios: Radios::new(n, false),
        position: None,
        fix_tick: None,
        fix_radius: None,
        tick: 0,
    };
    let mut reference = Radios::new(n, true);
    let mut ticks = Vec::with_capacity(seconds as usize);
    let mut total = 0.0;
    let mut killed_at = None;

    for tick in 1..=seconds {
        phone.tick = tick;
        phone.radios.refresh(world, tick);
        reference.refresh(world, tick);

        let outcome = execute(tree, &mut phone, policy).map_err(|e| EvalError(e.to_string()))?;
        if !outcome.completed() {
            killed_at = Some(tick);
            break;
        }

        let best = reference
            .best_ready(world, tick)
            .map(|idx| (world.fix(idx, tick), world.providers[idx].radius_m));
        let power = phone.radios.power(world);
        let acc = best.map_or(0.0, |(pos, a)| accuracy_fitness(phone.position, pos, a));
        let en = energy_fitness(power, budget);
        total += acc * en;
        ticks.push(LocalisationTick {
            second: tick,
            program_pos: phone.position,
            best_pos: best.map(|(p, _)| p),
            accuracy_radius: best.map_or(0.0, |(_, a)| a),
            power_ma: power,
            accuracy_fitness: acc,
            energy_fitness: en,
        });
    }

    let fitness = if seconds == 0 {
        0.0
    } else {
        total / f64::from(seconds)
    };
    Ok(LocalisationRun {
        fitness,
        ticks,
        killed_at,
    })
}

/// Action functions `seq`, `if_greater`; Action terminals to switch each
/// provider and `request_update`; Number terminals `last_fix_age`,
/// `last_accuracy`, constants, with `add` and `mul`.
pub fn primitive_set() -> PrimitiveSet {
    let (a, n) = (Sort::Action, Sort::Number);
    let mut kinds = vec![
        NodeKind::function("seq", &[a, a], a),
        NodeKind::function("if_greater", &[n, n, a, a], a),
        NodeKind::function("add", &[n, n], n),
        NodeKind::function("mul", &[n, n], n),
    ];
    for p in ProviderKind::ALL {
        kinds.push(NodeKind::terminal(format!("enable_{}", p.name()), a));
        kinds.push(NodeKind::terminal(format!("disable_{}", p.name()), a));
    }
    kinds.extend([
        NodeKind::terminal("request_update", a),
        NodeKind::terminal("last_fix_age", n),
        NodeKind::terminal("last_accuracy", n),
        NodeKind::constant(n),
    ]);
    PrimitiveSet::new(
        kinds,
        a,
        BTreeMap::from([(n, ConstantSource::Uniform { lo: 0.0, hi: 50.0 })]),
    )
    .expect("localisation primitive set is well formed")
}

/// Rejects programs that never switch a provider on or never ask for a
/// position: they cannot localise the phone.
pub fn localisation_helper(tree: &ProgramTree) -> bool {
    let mut enables = false;
    let mut requests = false;
    tree.root().walk(1, &mut |node, _| {
        enables |= node.kind.name.starts_with("enable_");
        requests |= node.kind.name == "request_update";
    });
    enables && requests
}

pub fn helper_guard() -> HelperGuard {
    HelperGuard::new(localisation_helper)
}

/// Deterministic evaluator over a fixed world.
#[derive(Clone, Debug)]
pub struct LocalisationEvaluator {
    pub world: World,
    pub seconds: u32,
    pub budget: EnergyBudget,
    pub policy: SupervisorPolicy,
}

impl LocalisationEvaluator {
    pub fn new(world: World) -> Self {
        Self {
            world,
            seconds: DEFAULT_SECONDS,
            budget: EnergyBudget::default(),
            policy: SupervisorPolicy::steps(200),
        }
    }
}

impl Evaluator for LocalisationEvaluator {
    fn evaluate(&mut self, tree: &ProgramTree) -> Result<f64, EvalError> {
        evaluate_localisation(tree, &self.world, self.seconds, &self.budget, self.policy)
            .map(|run| run.fitness)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::program::deserialize;

    fn tree(text: &str) -> ProgramTree {
        deserialize(text, &primitive_set()).unwrap()
    }

    #[test]
    fn accuracy_breakpoints() {
        let a = 10.0;
        let at = |d: f64| accuracy_fitness(Some((d, 0.0)), (0.0, 0.0), a);
        assert!((at(0.0) - 1.0).abs() < 1e-12);
        assert!((at(a) - 0.5).abs() < 1e-12);
        assert!((at(1.5 * a) - 0.25).abs() < 1e-12);
        assert!(at(2.0 * a).abs() < 1e-12);
        assert_eq!(at(3.0 * a), 0.0);
        assert_eq!(accuracy_fitness(None, (0.0, 0.0), a), 0.0);
    }

    #[test]
    fn energy_breakpoints() {
        let b = EnergyBudget::default();
        assert_eq!(b.budget_ma, 63.0);
        assert!((b.derived_ma() - 1400.0 / 22.0).abs() < 1e-12);
        assert!((energy_fitness(0.0, &b) - 1.0).abs() < 1e-12);
        assert!((energy_fitness(31.5, &b) - 0.5).abs() < 1e-12);
        assert!(energy_fitness(63.0, &b).abs() < 1e-12);
        assert_eq!(energy_fitness(100.0, &b), 0.0);
    }

    #[test]
    fn helper_rule() {
        assert!(localisation_helper(&tree("(seq (enable_gps) (request_update))")));
        assert!(!localisation_helper(&tree("(enable_gps)")));
        assert!(!localisation_helper(&tree("(request_update)")));
        let numeric = PrimitiveSet::new(
            vec![
                NodeKind::function("add", &[Sort::Number, Sort::Number], Sort::Number),
                NodeKind::constant(Sort::Number),
            ],
            Sort::Number,
            BTreeMap::from([(Sort::Number, ConstantSource::Choice(vec![1.0, 2.0]))]),
        )
        .unwrap();
        let sum = deserialize("(add (const:Number 1) (const:Number 2))", &numeric).unwrap();
        assert!(!localisation_helper(&sum));
    }

    #[test]
    fn idle_program_scores_zero() {
        let run = evaluate_localisation(
            &tree("(disable_wifi)"),
            &World::default(),
            60,
            &EnergyBudget::default(),
            SupervisorPolicy::default(),
        )
        .unwrap();
        assert_eq!(run.fitness, 0.0);
        assert_eq!(run.ticks.len(), 60);
    }

    #[test]
    fn gps_unavailable_indoors() {
        let w = World::default();
        assert_eq!(w.context(1), Context::Outdoor);
        assert_eq!(w.context(20), Context::Outdoor);
        assert_eq!(w.context(21), Context::Indoor);
        assert_eq!(w.context(41), Context::Outdoor);
        assert!(!ProviderSpec::gps().available(Context::Indoor));
    }

    #[test]
    fn kill_zeroes_the_rest() {
        let run = evaluate_localisation(
            &tree("(seq (enable_wifi) (request_update))"),
            &World::default(),
            60,
            &EnergyBudget::default(),
            SupervisorPolicy::steps(2),
        )
        .unwrap();
        assert_eq!(run.killed_at, Some(1));
        assert_eq!(run.fitness, 0.0);
    }

    #[test]
    fn same_provider_same_second_matches_reference() {
        let w = World::default().with_noise_seed(4);
        assert_eq!(w.fix(1, 7), w.fix(1, 7));
        assert_ne!(w.fix(1, 7), w.fix(1, 8));
        let truth = w.truth(7);
        assert!(distance(w.fix(1, 7), truth) <= 40.0);
    }

    #[test]
    fn config_file() {
        let text = r#"
            noise_seed = 3
            [[provider]]
            kind = "gps"
            radius_m = 0.0
            current_ma = 20.0
            latency_s = 10
            outdoor = true
            indoor = false
            [[waypoint]]
            t = 0.0
            x = 0.0
            y = 0.0
            [[segment]]
            context = "outdoor"
            seconds = 60
        "#;
        let w = World::from_toml(text).unwrap();
        assert_eq!(w.providers.len(), 1);
        assert_eq!(w.context(59), Context::Outdoor);
        assert!(World::from_toml(&text.replace("seconds = 60", "seconds = 0")).is_err());
    }
}
