use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::migration::{admit_immigrants, inject_random, select_emigrants};
use super::policy::{MigrationMode, MigrationPolicy};
use super::transport::{SimulatedBus, Transport, UdpTransport};
use crate::evolve::{
    breed_next_generation, evaluate_population, evaluate_unscored, summarize, EvolutionStrategy,
    EvolveError, Evaluator, GenerationStats, Population, ProgramSpace,
};
use crate::program::ConfigError;

#[derive(Debug, Error)]
pub enum IslandError {
    #[error("invalid island configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Primitives(#[from] ConfigError),
    #[error("datagram transport: {0}")]
    Io(#[from] std::io::Error),
    #[error("island {0} worker panicked")]
    Worker(usize),
}

/// One island: its program space, breeding plan, fitness source and seed.
pub struct IslandSpec {
    pub space: ProgramSpace,
    pub strategy: EvolutionStrategy,
    pub capacity: usize,
    pub evaluator: Box<dyn Evaluator + Send>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatagramConfig {
    /// Local address every island socket binds to (ephemeral ports).
    pub bind: IpAddr,
    /// Extra simulated loss applied on send.
    pub loss: f64,
    pub seed: u64,
    /// How long an island waits after emitting before it drains its socket.
    pub pause: Duration,
}

impl Default for DatagramConfig {
    fn default() -> Self {
        Self {
            bind: IpAddr::V4(Ipv4Addr::LOCALHOST),
            loss: 0.0,
            seed: 0,
            pause: Duration::from_millis(20),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransportMode {
    /// In-process bus with generation barriers; fully deterministic.
    Simulated { loss: f64, seed: u64 },
    /// Real UDP datagrams, one thread per island, no barrier.
    Datagram(DatagramConfig),
}

pub struct IslandRun {
    pub islands: Vec<IslandSpec>,
    pub policy: MigrationPolicy,
    pub generations: u64,
    pub transport: TransportMode,
}

/// One island's record for one (0-indexed) generation, taken after any
/// immigrants of that generation were evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct IslandGenerationStats {
    pub island: usize,
    pub generation: u64,
    pub stats: GenerationStats,
    /// Immigrants, or random programs in injection mode, appended this row.
    pub immigrants_admitted: usize,
    pub emigrants_sent: usize,
    pub malformed_dropped: usize,
    pub migration_event: bool,
}

/// SplitMix64 step over `base` and `index`, for per-island and
/// per-iteration seeds.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Island {
    id: usize,
    space: ProgramSpace,
    strategy: EvolutionStrategy,
    evaluator: Box<dyn Evaluator + Send>,
    pop: Population,
    evo_rng: ChaCha8Rng,
    // migration draws use their own stream so that a run whose migrants are
    // all lost replays exactly like one without migration
    mig_rng: ChaCha8Rng,
    rows: Vec<IslandGenerationStats>,
}

impl Island {
    fn new(id: usize, spec: IslandSpec) -> Result<Self, IslandError> {
        let mut evo_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut mig_rng = ChaCha8Rng::seed_from_u64(spec.seed);
        mig_rng.set_stream(1);
        let pop = spec.space.initial_population(spec.capacity, &mut evo_rng)?;
        Ok(Self {
            id,
            space: spec.space,
            strategy: spec.strategy,
            evaluator: spec.evaluator,
            pop,
            evo_rng,
            mig_rng,
            rows: Vec::new(),
        })
    }

    fn evaluate(&mut self) -> usize {
        evaluate_population(&mut self.pop, &mut self.evaluator).evaluation_failures
    }

    fn emigrate(&mut self, policy: &MigrationPolicy, transport: &mut dyn Transport) -> usize {
        let out = select_emigrants(&self.pop, policy, &mut self.mig_rng);
        for envelope in &out {
            transport.send(envelope);
        }
        out.len()
    }

    fn immigrate(&mut self, transport: &mut dyn Transport) -> (usize, usize) {
        let (envelopes, undecodable) = transport.drain();
        let report = admit_immigrants(&mut self.pop, &envelopes, &self.space);
        (report.admitted, report.malformed + undecodable)
    }

    fn inject(&mut self, policy: &MigrationPolicy, completed: u64) -> Result<usize, IslandError> {
        Ok(inject_random(&mut self.pop, policy, completed, &self.space, &mut self.mig_rng)?)
    }

    fn record(&mut self, generation: u64, failures: usize, row: Row) {
        let failures = failures + evaluate_unscored(&mut self.pop, &mut self.evaluator);
        let mut stats: GenerationStats = summarize(&self.pop);
        stats.evaluation_failures = failures;
        self.rows.push(IslandGenerationStats {
            island: self.id,
            generation,
            stats,
            immigrants_admitted: row.admitted,
            emigrants_sent: row.sent,
            malformed_dropped: row.malformed,
            migration_event: row.event,
        });
    }

    fn breed(&mut self) -> Result<(), IslandError> {
        self.pop = breed_next_generation(&self.pop, &self.strategy, &self.space, &mut self.evo_rng)?;
        Ok(())
    }
}

#[derive(Default)]
struct Row {
    admitted: usize,
    sent: usize,
    malformed: usize,
    event: bool,
}

fn validate(run: &IslandRun) -> Result<(), IslandError> {
    if run.islands.is_empty() {
        return Err(IslandError::Config("at least one island is required".into()));
    }
    if run.generations == 0 {
        return Err(IslandError::Config("at least one generation is required".into()));
    }
    run.policy.validate().map_err(IslandError::Config)?;
    for (k, island) in run.islands.iter().enumerate() {
        if island.capacity == 0 {
            return Err(IslandError::Config(format!("island {k} has zero capacity")));
        }
        island.strategy.validate(island.capacity)?;
    }
    let loss = match &run.transport {
        TransportMode::Simulated { loss, .. } => *loss,
        TransportMode::Datagram(cfg) => cfg.loss,
    };
    if !(0.0..=1.0).contains(&loss) {
        return Err(IslandError::Config(format!("loss probability {loss} outside [0, 1]")));
    }
    Ok(())
}

/// Evolves every island for `generations` generations and returns the
/// per-generation records of each island, indexed by island.
///
/// Within a generation an island evaluates its members, then on migration
/// generations emits emigrants (or injects random programs), appends and
/// evaluates whatever arrived, records its statistics, and finally breeds
/// the next generation.
pub fn run_islands(run: IslandRun) -> Result<Vec<Vec<IslandGenerationStats>>, IslandError> {
    validate(&run)?;
    match run.transport.clone() {
        TransportMode::Simulated { loss, seed } => run_simulated(run, loss, seed),
        TransportMode::Datagram(cfg) => run_datagram(run, &cfg),
    }
}

fn run_simulated(
    run: IslandRun,
    loss: f64,
    seed: u64,
) -> Result<Vec<Vec<IslandGenerationStats>>, IslandError> {
    let policy = run.policy;
    let bus = SimulatedBus::new(run.islands.len(), loss, seed);
    let mut endpoints: Vec<_> = (0..run.islands.len()).map(|k| bus.endpoint(k)).collect();
    let mut islands = run
        .islands
        .into_iter()
        .enumerate()
        .map(|(k, spec)| Island::new(k, spec))
        .collect::<Result<Vec<_>, _>>()?;

    for g in 0..run.generations {
        let completed = g + 1;
        let event = policy.is_event(completed);
        let failures: Vec<usize> = islands.iter_mut().map(Island::evaluate).collect();
        let mut rows: Vec<Row> = islands.iter().map(|_| Row { event, ..Row::default() }).collect();
        if event {
            match policy.mode {
                MigrationMode::Migrate => {
                    for ((island, ep), row) in islands.iter_mut().zip(&mut endpoints).zip(&mut rows) {
                        row.sent = island.emigrate(&policy, ep);
                    }
                    bus.flush();
                    for ((island, ep), row) in islands.iter_mut().zip(&mut endpoints).zip(&mut rows) {
                        (row.admitted, row.malformed) = island.immigrate(ep);
                    }
                }
                MigrationMode::Random => {
                    for (island, row) in islands.iter_mut().zip(&mut rows) {
                        row.admitted = island.inject(&policy, completed)?;
                    }
                }
                MigrationMode::None => {}
            }
        }
        for ((island, row), failed) in islands.iter_mut().zip(rows).zip(failures) {
            island.record(g, failed, row);
        }
        if completed < run.generations {
            for island in &mut islands {
                island.breed()?;
            }
        }
    }
    Ok(islands.into_iter().map(|i| i.rows).collect())
}

fn run_datagram(
    run: IslandRun,
    cfg: &DatagramConfig,
) -> Result<Vec<Vec<IslandGenerationStats>>, IslandError> {
    let policy = run.policy;
    let generations = run.generations;
    let mut sockets = (0..run.islands.len())
        .map(|_| UdpTransport::bind(SocketAddr::new(cfg.bind, 0)))
        .collect::<Result<Vec<_>, _>>()?;
    let addrs: Vec<SocketAddr> = sockets.iter().map(UdpTransport::local_addr).collect();
    sockets = sockets
        .into_iter()
        .enumerate()
        .map(|(k, s)| {
            let peers = addrs.iter().copied().filter(|a| *a != addrs[k]).collect();
            s.with_destinations(peers)
                .with_loss(cfg.loss, derive_seed(cfg.seed, k as u64))
        })
        .collect();
    let islands = run
        .islands
        .into_iter()
        .enumerate()
        .map(|(k, spec)| Island::new(k, spec))
        .collect::<Result<Vec<_>, _>>()?;

    let pause = cfg.pause;
    std::thread::scope(|scope| {
        let handles: Vec<_> = islands
            .into_iter()
            .zip(sockets)
            .map(|(mut island, mut socket)| {
                scope.spawn(move || -> Result<Vec<IslandGenerationStats>, IslandError> {
                    for g in 0..generations {
                        let completed = g + 1;
                        let event = policy.is_event(completed);
                        let failed = island.evaluate();
                        let mut row = Row { event, ..Row::default() };
                        if event {
                            match policy.mode {
                                MigrationMode::Migrate => {
                                    row.sent = island.emigrate(&policy, &mut socket);
                                    std::thread::sleep(pause);
                                    (row.admitted, row.malformed) = island.immigrate(&mut socket);
                                }
                                MigrationMode::Random => {
                                    row.admitted = island.inject(&policy, completed)?;
                                }
                                MigrationMode::None => {}
                            }
                        }
                        island.record(g, failed, row);
                        if completed < generations {
                            island.breed()?;
                        }
                    }
                    Ok(island.rows)
                })
            })
            .collect();
        handles
            .into_iter()
            .enumerate()
            .map(|(k, h)| h.join().map_err(|_| IslandError::Worker(k))?)
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::evolve::{EvalError, Origin};
    use crate::program::{ConstantSource, NodeKind, PrimitiveSet, ProgramTree, Sort};

    fn space() -> ProgramSpace {
        ProgramSpace::new(
            PrimitiveSet::new(
                vec![
                    NodeKind::function("add", &[Sort::Number, Sort::Number], Sort::Number),
                    NodeKind::function("mul", &[Sort::Number, Sort::Number], Sort::Number),
                    NodeKind::terminal("x", Sort::Number),
                    NodeKind::constant(Sort::Number),
                ],
                Sort::Number,
                BTreeMap::from([(Sort::Number, ConstantSource::Uniform { lo: 0.0, hi: 1.0 })]),
            )
            .unwrap(),
            3,
        )
    }

    fn by_size(tree: &ProgramTree) -> Result<f64, EvalError> {
        Ok(tree.size() as f64 / 7.0)
    }

    fn spec(seed: u64) -> IslandSpec {
        IslandSpec {
            space: space(),
            strategy: EvolutionStrategy::island(10),
            capacity: 10,
            evaluator: Box::new(by_size),
            seed,
        }
    }

    fn run(policy: MigrationPolicy, transport: TransportMode, generations: u64) -> Vec<Vec<IslandGenerationStats>> {
        run_islands(IslandRun {
            islands: vec![spec(11), spec(22)],
            policy,
            generations,
            transport,
        })
        .unwrap()
    }

    fn sim(loss: f64) -> TransportMode {
        TransportMode::Simulated { loss, seed: 9 }
    }

    fn trajectory(rows: &[IslandGenerationStats]) -> Vec<GenerationStats> {
        rows.iter().map(|r| r.stats).collect()
    }

    #[test]
    fn no_migration_matches_standalone_runs() {
        let pair = run(MigrationPolicy::none(), sim(0.0), 8);
        for (k, seed) in [(0usize, 11u64), (1, 22)] {
            let alone = run_islands(IslandRun {
                islands: vec![spec(seed)],
                policy: MigrationPolicy::none(),
                generations: 8,
                transport: sim(0.0),
            })
            .unwrap();
            assert_eq!(trajectory(&pair[k]), trajectory(&alone[0]));
        }
    }

    #[test]
    fn events_fall_on_multiples_of_the_interval() {
        let rows = run(MigrationPolicy::migrate(5, 0.2), sim(0.0), 20);
        let events: Vec<u64> = rows[0]
            .iter()
            .filter(|r| r.migration_event)
            .map(|r| r.generation + 1)
            .collect();
        assert_eq!(events, vec![5, 10, 15, 20]);
        for r in rows.iter().flatten().filter(|r| r.migration_event) {
            assert_eq!(r.emigrants_sent, 2);
            assert_eq!(r.immigrants_admitted, 2);
        }
        for r in rows.iter().flatten().filter(|r| !r.migration_event) {
            assert_eq!((r.emigrants_sent, r.immigrants_admitted), (0, 0));
        }
    }

    #[test]
    fn total_loss_replays_the_isolated_run() {
        let lost = run(MigrationPolicy::migrate(5, 0.3), sim(1.0), 20);
        let none = run(MigrationPolicy::none(), sim(0.0), 20);
        for k in 0..2 {
            assert_eq!(trajectory(&lost[k]), trajectory(&none[k]));
            assert!(lost[k].iter().all(|r| r.immigrants_admitted == 0));
        }
    }

    #[test]
    fn random_mode_appends_fresh_programs() {
        let rows = run(MigrationPolicy::random(5, 0.3), sim(0.0), 10);
        let injected: Vec<usize> = rows[0].iter().map(|r| r.immigrants_admitted).collect();
        assert_eq!(injected, vec![0, 0, 0, 0, 3, 0, 0, 0, 0, 3]);
        assert!(rows[0].iter().all(|r| r.emigrants_sent == 0));
    }

    #[test]
    fn capacity_is_restored_after_each_breed() {
        let mut island = Island::new(0, spec(3)).unwrap();
        let donor = Island::new(1, spec(4)).unwrap();
        let bus = SimulatedBus::new(2, 0.0, 0);
        let mut ep0 = bus.endpoint(0);
        let mut ep1 = bus.endpoint(1);
        let policy = MigrationPolicy::migrate(1, 0.3);
        for e in select_emigrants(&donor.pop, &policy, &mut ChaCha8Rng::seed_from_u64(0)) {
            ep1.send(&e);
        }
        bus.flush();
        island.evaluate();
        island.immigrate(&mut ep0);
        assert_eq!(island.pop.len(), 13);
        assert_eq!(island.pop.count_origin(Origin::Immigrant), 3);
        island.record(0, 0, Row::default());
        island.breed().unwrap();
        assert_eq!(island.pop.len(), 10);
    }

    #[test]
    fn wire_bytes_carry_no_island_identity() {
        let a = Island::new(0, spec(5)).unwrap();
        let policy = MigrationPolicy::migrate(1, 1.0);
        for e in select_emigrants(&a.pop, &policy, &mut ChaCha8Rng::seed_from_u64(0)) {
            let bytes = String::from_utf8(e.encode()).unwrap();
            let mut lines = bytes.lines();
            assert_eq!(lines.next(), Some(super::super::WIRE_TAG));
            let body = lines.next().unwrap();
            assert!(body.starts_with('('));
            assert_eq!(lines.next(), None);
            assert!(!bytes.contains("island"));
        }
    }

    #[test]
    fn simulated_runs_are_reproducible() {
        let a = run(MigrationPolicy::migrate(5, 0.3), sim(0.5), 20);
        let b = run(MigrationPolicy::migrate(5, 0.3), sim(0.5), 20);
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_configuration() {
        let err = run_islands(IslandRun {
            islands: vec![spec(1)],
            policy: MigrationPolicy::none(),
            generations: 0,
            transport: sim(0.0),
        });
        assert!(matches!(err, Err(IslandError::Config(_))));
        let err = run_islands(IslandRun {
            islands: vec![spec(1)],
            policy: MigrationPolicy::none(),
            generations: 3,
            transport: sim(1.5),
        });
        assert!(matches!(err, Err(IslandError::Config(_))));
    }

    #[test]
    fn datagram_mode_exchanges_programs_on_loopback() {
        let rows = run(
            MigrationPolicy::migrate(2, 0.3),
            TransportMode::Datagram(DatagramConfig {
                pause: Duration::from_millis(50),
                ..DatagramConfig::default()
            }),
            6,
        );
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.len() == 6));
        let sent: usize = rows.iter().flatten().map(|r| r.emigrants_sent).sum();
        assert_eq!(sent, 2 * 3 * 3);
        let admitted: usize = rows.iter().flatten().map(|r| r.immigrants_admitted).sum();
        assert!(admitted > 0, "no datagram arrived");
    }
}
