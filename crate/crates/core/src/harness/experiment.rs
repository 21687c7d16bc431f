use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use log::info;

use super::config::{App, ExperimentConfig, Landscape, TransportKind};
use super::dataset::{aggregate, Aggregate, StatRow};
use super::HarnessError;
use crate::apps::feed::{self, FeedCatalog, FeedEvaluator, UserModel};
use crate::apps::localisation::{self, LocalisationEvaluator, World};
use crate::evolve::{Evaluator, ProgramSpace};
use crate::island::{
    derive_seed, run_islands, DatagramConfig, IslandRun, IslandSpec, TransportMode,
};

const EVALUATOR_STREAM: u64 = 0xE7A1;
const WORLD_STREAM: u64 = 0x3071D;
const BUS_STREAM: u64 = 0xB05;

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub config: ExperimentConfig,
    /// Sorted by (iteration, generation, island).
    pub rows: Vec<StatRow>,
}

impl Dataset {
    pub fn aggregates(&self) -> Vec<Aggregate> {
        aggregate(&self.rows)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, HarnessError> {
        let mut buf = Vec::new();
        super::write_csv(&self.rows, &mut buf)?;
        Ok(buf)
    }
}

fn iteration_seed(cfg: &ExperimentConfig, iteration: usize) -> u64 {
    derive_seed(cfg.seed, iteration as u64)
}

fn feed_setup(cfg: &ExperimentConfig) -> (FeedCatalog, usize) {
    match &cfg.feed {
        Some(f) => (f.catalog(), f.desired_qty),
        None => (FeedCatalog::default(), feed::DEFAULT_DESIRED_QTY),
    }
}

fn feed_user(cfg: &ExperimentConfig, catalog: &FeedCatalog, island: usize) -> UserModel {
    match (cfg.landscape, &cfg.feed) {
        (Landscape::Heterogeneous, _) => UserModel::paired(catalog, island),
        (Landscape::Homogeneous, Some(f)) => f.user(),
        (Landscape::Homogeneous, None) => UserModel::paired(catalog, 0),
    }
}

/// Island `k` of a heterogeneous localisation landscape walks the same
/// route with its own sensor noise and its indoor/outdoor cycle rotated by
/// `k` segments.
fn island_world(cfg: &ExperimentConfig, iter_seed: u64, island: usize) -> World {
    let mut world = cfg.world.clone().unwrap_or_default();
    let noise = derive_seed(iter_seed, WORLD_STREAM);
    match cfg.landscape {
        Landscape::Homogeneous => world.with_noise_seed(noise),
        Landscape::Heterogeneous => {
            if !world.segments.is_empty() {
                let k = island % world.segments.len();
                world.segments.rotate_left(k);
            }
            world.with_noise_seed(derive_seed(noise, island as u64))
        }
    }
}

/// The island specs of one iteration.
pub fn build_islands(cfg: &ExperimentConfig, iteration: usize) -> Vec<IslandSpec> {
    let iter_seed = iteration_seed(cfg, iteration);
    let strategy = cfg.strategy();
    let depth = cfg.max_depth();
    let (catalog, desired) = feed_setup(cfg);
    let space = match cfg.app {
        App::Feed => ProgramSpace::new(feed::primitive_set(&catalog), depth),
        App::Localisation => {
            let space = ProgramSpace::new(localisation::primitive_set(), depth);
            if cfg.helper {
                space.with_guard(localisation::helper_guard())
            } else {
                space
            }
        }
    };
    (0..cfg.islands)
        .map(|k| {
            let seed = derive_seed(iter_seed, k as u64);
            let evaluator: Box<dyn Evaluator + Send> = match cfg.app {
                App::Feed => Box::new(FeedEvaluator::new(
                    catalog.clone(),
                    feed_user(cfg, &catalog, k),
                    desired,
                    derive_seed(seed, EVALUATOR_STREAM),
                )),
                App::Localisation => {
                    let mut e = LocalisationEvaluator::new(island_world(cfg, iter_seed, k));
                    e.seconds = cfg.seconds;
                    Box::new(e)
                }
            };
            IslandSpec {
                space: space.clone(),
                strategy: strategy.clone(),
                capacity: cfg.capacity,
                evaluator,
                seed,
            }
        })
        .collect()
}

/// Runs one iteration and returns its rows, ordered by (generation, island).
pub fn run_iteration(cfg: &ExperimentConfig, iteration: usize) -> Result<Vec<StatRow>, HarnessError> {
    let iter_seed = iteration_seed(cfg, iteration);
    let transport = match cfg.transport {
        TransportKind::Sim => TransportMode::Simulated {
            loss: cfg.loss,
            seed: derive_seed(iter_seed, BUS_STREAM),
        },
        TransportKind::Udp => TransportMode::Datagram(DatagramConfig {
            loss: cfg.loss,
            seed: derive_seed(iter_seed, BUS_STREAM),
            ..DatagramConfig::default()
        }),
    };
    let per_island = run_islands(IslandRun {
        islands: build_islands(cfg, iteration),
        policy: cfg.policy,
        generations: cfg.generations,
        transport,
    })?;
    let mut rows: Vec<StatRow> = per_island
        .into_iter()
        .flatten()
        .map(|r| StatRow {
            iteration,
            generation: r.generation,
            island: r.island,
            max_fitness: r.stats.max_fitness,
            mean_fitness: r.stats.mean_fitness,
            mean_size: r.stats.mean_size,
            mean_depth: r.stats.mean_depth,
            immigrants_admitted: r.immigrants_admitted,
            emigrants_sent: r.emigrants_sent,
            helper_rejections: r.stats.helper_rejections,
        })
        .collect();
    rows.sort_by_key(|r| (r.generation, r.island));
    Ok(rows)
}

type IterationOutcome = (usize, Result<Vec<StatRow>, HarnessError>);

/// Runs every iteration (in parallel where possible) and merges the rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Dataset, HarnessError> {
    cfg.validate()?;
    let threads = match cfg.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(cfg.iterations);
    info!(
        "{} iterations of {} islands x {} generations on {threads} threads",
        cfg.iterations, cfg.islands, cfg.generations
    );
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<IterationOutcome>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let it = next.fetch_add(1, Ordering::Relaxed);
                if it >= cfg.iterations {
                    break;
                }
                let out = run_iteration(cfg, it);
                results.lock().expect("result lock poisoned").push((it, out));
            });
        }
    });
    let mut results = results.into_inner().expect("result lock poisoned");
    results.sort_by_key(|(it, _)| *it);
    let mut rows = Vec::new();
    for (_, out) in results {
        rows.extend(out?);
    }
    Ok(Dataset {
        config: cfg.clone(),
        rows,
    })
}
