//! Acceptance suite. Runs every criterion, prints one line each and exits
//! non-zero if any failed.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use islandgp::apps::feed::{self, FeedCatalog, FeedConfig, FeedEntry, FeedEvaluator, UserModel};
use islandgp::apps::localisation::{accuracy_fitness, energy_fitness, EnergyBudget};
use islandgp::evolve::{breed_next_generation, crossover, evaluate_population, mutate, EvolutionStrategy, ProgramSpace};
use islandgp::harness::{compare_runs, run_experiment, App, ExperimentConfig, Landscape, StatRow};
use islandgp::island::{derive_seed, MigrationPolicy};
use islandgp::program::build_random_tree;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXACT: f64 = 1e-12;
const THRESHOLD: f64 = 0.9;
const ITERATIONS: usize = 15;
const CONFIGS: [(u64, f64); 6] = [(5, 0.1), (5, 0.2), (5, 0.3), (10, 0.1), (10, 0.2), (10, 0.3)];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= EXACT
}

fn formulas() -> Verdict {
    let feed_cases = [(10, 10, 10, 1.0), (5, 10, 5, 0.5), (12, 10, 6, 0.5), (0, 10, 0, 0.0)];
    let feed_ok = feed_cases
        .iter()
        .all(|&(d, q, c, want)| close(feed::feed_fitness(d, q, c), want));

    let a = 12.5;
    let acc = |d: f64| accuracy_fitness(Some((d, 0.0)), (0.0, 0.0), a);
    let acc_cases = [(0.0, 1.0), (a, 0.5), (1.5 * a, 0.25), (2.0 * a, 0.0), (3.0 * a, 0.0)];
    let acc_ok = acc_cases.iter().all(|&(d, want)| close(acc(d), want));

    let budget = EnergyBudget::default();
    let en_cases = [(0.0, 1.0), (31.5, 0.5), (63.0, 0.0), (100.0, 0.0)];
    let en_ok = en_cases
        .iter()
        .all(|&(ma, want)| close(energy_fitness(ma, &budget), want));
    let budget_ok = budget.budget_ma == 63.0 && close(budget.derived_ma(), 1400.0 / 22.0);

    verdict(
        feed_ok && acc_ok && en_ok && budget_ok,
        format!("feed {feed_ok}, accuracy {acc_ok}, energy {en_ok}, budget {} mA", budget.budget_ma),
    )
}

fn operator_closure() -> Verdict {
    let prims = feed::primitive_set(&FeedCatalog::default());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = 0;
    for _ in 0..10_000 {
        let a = build_random_tree(&prims, 3, &mut rng).unwrap();
        let b = build_random_tree(&prims, 3, &mut rng).unwrap();
        for child in [mutate(&a, &prims, 3, &mut rng), crossover(&a, &b, 3, &mut rng)] {
            if child.depth() > 3 || child.validate(&prims, Some(3)).is_err() {
                failures += 1;
            }
        }
    }
    verdict(failures == 0, format!("{failures} invalid of 20000"))
}

fn standalone_feed() -> Verdict {
    let catalog = FeedCatalog::default();
    let space = ProgramSpace::new(feed::primitive_set(&catalog), feed::DEFAULT_MAX_DEPTH);
    let strategy = EvolutionStrategy::feed_standalone();
    let generations = 30;
    let mut reached = 0;
    let mut tech = vec![0.0; generations];
    let mut other = vec![0.0; generations];
    for it in 0..ITERATIONS {
        let seed = derive_seed(0, it as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut eval = FeedEvaluator::new(
            catalog.clone(),
            UserModel::tech_reader(&catalog),
            feed::DEFAULT_DESIRED_QTY,
            derive_seed(seed, 1),
        );
        let mut pop = space.initial_population(5, &mut rng).unwrap();
        let mut hit = false;
        for g in 0..generations {
            let stats = evaluate_population(&mut pop, &mut eval);
            let tally = eval.take_tally();
            tech[g] += tally.tech_share() / ITERATIONS as f64;
            other[g] += tally.other_share() / ITERATIONS as f64;
            hit |= stats.max_fitness >= THRESHOLD;
            pop = breed_next_generation(&pop, &strategy, &space, &mut rng).unwrap();
        }
        reached += usize::from(hit);
    }
    let learned = tech[10] > other[10];
    verdict(
        reached >= 13 && learned,
        format!(
            "{reached}/{ITERATIONS} reach {THRESHOLD}; generation 10 tech share {:.3} vs other {:.3}",
            tech[10], other[10]
        ),
    )
}

fn feed_run(landscape: Landscape, policy: MigrationPolicy) -> Vec<StatRow> {
    let cfg = ExperimentConfig {
        landscape,
        policy,
        ..ExperimentConfig::default()
    };
    run_experiment(&cfg).unwrap().rows
}

fn island_speedup() -> Verdict {
    let baseline = feed_run(Landscape::Homogeneous, MigrationPolicy::none());
    let mut all_earlier = true;
    let mut best = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for (i, r) in CONFIGS {
        let rows = feed_run(Landscape::Homogeneous, MigrationPolicy::migrate(i, r));
        let c = compare_runs(&baseline, &rows, THRESHOLD).unwrap();
        let earlier = match (c.baseline, c.treatment) {
            (Some(b), Some(t)) => t < b,
            (None, Some(_)) => true,
            _ => false,
        };
        all_earlier &= earlier;
        best = best.max(c.improvement.unwrap_or(f64::NEG_INFINITY));
        parts.push(format!("i{i}r{r}:{}", c.treatment.map_or("-".into(), |g| g.to_string())));
    }
    let b = compare_runs(&baseline, &baseline, THRESHOLD).unwrap().baseline;
    verdict(
        all_earlier && best >= 0.3,
        format!(
            "baseline {} [{}] best improvement {best:.2}",
            b.map_or("-".into(), |g| g.to_string()),
            parts.join(" ")
        ),
    )
}

/// Per island, the mean over iterations of `mean_fitness` at each generation.
fn island_means(rows: &[StatRow]) -> BTreeMap<(usize, u64), f64> {
    let mut sums: BTreeMap<(usize, u64), (f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = sums.entry((r.island, r.generation)).or_default();
        e.0 += r.mean_fitness;
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// (dips, events): the generation receiving newcomers against the one before.
fn dips(rows: &[StatRow], policy: MigrationPolicy, islands: usize, generations: u64) -> (usize, usize) {
    let means = island_means(rows);
    let mut dips = 0;
    let mut events = 0;
    for g in 1..generations {
        if !policy.is_event(g + 1) {
            continue;
        }
        for k in 0..islands {
            events += 1;
            dips += usize::from(means[&(k, g)] < means[&(k, g - 1)]);
        }
    }
    (dips, events)
}

fn post_migration_dip() -> Verdict {
    let mut total = (0, 0);
    for (i, r) in CONFIGS {
        let policy = MigrationPolicy::migrate(i, r);
        let rows = feed_run(Landscape::Heterogeneous, policy);
        let (d, e) = dips(&rows, policy, 2, 20);
        total.0 += d;
        total.1 += e;
    }
    verdict(2 * total.0 > total.1, format!("{}/{} events dip", total.0, total.1))
}

fn without_emigrant_counts(rows: &[StatRow]) -> Vec<StatRow> {
    rows.iter()
        .cloned()
        .map(|mut r| {
            r.emigrants_sent = 0;
            r
        })
        .collect()
}

fn csv(rows: &[StatRow]) -> Vec<u8> {
    let mut out = Vec::new();
    islandgp::harness::write_csv(rows, &mut out).unwrap();
    out
}

fn total_loss() -> Verdict {
    let mut identical = true;
    for app in [App::Feed, App::Localisation] {
        let base = ExperimentConfig {
            app,
            iterations: 5,
            ..ExperimentConfig::default()
        };
        let lossy = ExperimentConfig {
            loss: 1.0,
            ..base.clone()
        };
        let isolated = ExperimentConfig {
            policy: MigrationPolicy::none(),
            ..base
        };
        let a = run_experiment(&lossy).unwrap().rows;
        let b = run_experiment(&isolated).unwrap().rows;
        identical &= a.iter().all(|r| r.immigrants_admitted == 0);
        identical &= csv(&without_emigrant_counts(&a)) == csv(&b);
    }
    verdict(identical, "feed and localisation trajectories match isolation")
}

fn localisation(helper: bool, policy: MigrationPolicy, islands: usize, capacity: usize, generations: u64) -> Vec<StatRow> {
    let cfg = ExperimentConfig {
        app: App::Localisation,
        islands,
        capacity,
        generations,
        helper,
        policy,
        ..ExperimentConfig::default()
    };
    run_experiment(&cfg).unwrap().rows
}

fn elite(rows: &[StatRow], it: usize, g: u64) -> f64 {
    rows.iter()
        .find(|r| r.iteration == it && r.generation == g)
        .map(|r| r.max_fitness)
        .unwrap()
}

fn helper_ablation() -> Verdict {
    let off = localisation(false, MigrationPolicy::none(), 1, 12, 10);
    let on = localisation(true, MigrationPolicy::none(), 1, 12, 10);
    let stuck = (0..ITERATIONS)
        .filter(|&it| elite(&off, it, 0) == 0.0 && elite(&off, it, 1) == 0.0)
        .count();
    let working = (0..ITERATIONS).filter(|&it| elite(&on, it, 0) > 0.0).count();
    verdict(
        2 * stuck > ITERATIONS && working == ITERATIONS,
        format!("without helper {stuck}/{ITERATIONS} zero for 2 generations, with helper {working}/{ITERATIONS} nonzero at 0"),
    )
}

fn random_injection() -> Verdict {
    let policy = MigrationPolicy::random(5, 0.3);
    let rows = localisation(true, policy, 2, 10, 20);
    let counts_ok = rows.iter().all(|r| {
        let want = if policy.is_event(r.generation + 1) { 3 } else { 0 };
        r.immigrants_admitted == want
    });
    let (d, e) = dips(&rows, policy, 2, 20);
    verdict(
        counts_ok && 2 * d > e,
        format!("3 injected per event: {counts_ok}; {d}/{e} events dip"),
    )
}

fn reproducible() -> Verdict {
    let tech = FeedCatalog::default();
    let user = UserModel::tech_reader(&tech);
    let feed_file = FeedConfig {
        desired_qty: feed::DEFAULT_DESIRED_QTY,
        feeds: tech
            .feeds
            .iter()
            .zip(&user.click)
            .map(|(f, &click)| FeedEntry {
                id: f.id.clone(),
                group: f.group,
                unread: f.unread,
                click,
            })
            .collect(),
    };
    let cfgs = [
        ExperimentConfig {
            iterations: 6,
            seed: 11,
            ..ExperimentConfig::default()
        },
        ExperimentConfig {
            iterations: 6,
            landscape: Landscape::Heterogeneous,
            feed: Some(feed_file),
            seed: 12,
            ..ExperimentConfig::default()
        },
        ExperimentConfig {
            app: App::Localisation,
            iterations: 4,
            generations: 8,
            policy: MigrationPolicy::random(3, 0.3),
            landscape: Landscape::Heterogeneous,
            ..ExperimentConfig::default()
        },
    ];
    let mut same = true;
    for cfg in cfgs {
        let first = run_experiment(&cfg).unwrap().to_csv().unwrap();
        let again = run_experiment(&cfg).unwrap().to_csv().unwrap();
        let serial = run_experiment(&ExperimentConfig { threads: 1, ..cfg }).unwrap().to_csv().unwrap();
        same &= first == again && first == serial;
    }
    verdict(same, "three configurations rerun byte-identical")
}

type Criterion = (&'static str, Duration, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 9] = [
        ("formula exactness", Duration::from_secs(1), formulas),
        ("operator closure", Duration::from_secs(30), operator_closure),
        ("standalone feed convergence", Duration::from_secs(120), standalone_feed),
        ("island speedup", Duration::from_secs(600), island_speedup),
        ("post-migration dip", Duration::from_secs(600), post_migration_dip),
        ("total loss equals isolation", Duration::from_secs(60), total_loss),
        ("helper ablation", Duration::from_secs(300), helper_ablation),
        ("random injection", Duration::from_secs(300), random_injection),
        ("reproducibility", Duration::from_secs(600), reproducible),
    ];
    let mut failed = 0;
    for (n, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let v = check();
        let took = start.elapsed();
        let pass = v.pass && took <= limit;
        failed += usize::from(!pass);
        println!(
            "criterion {} {name}: {} ({}; {:.2}s of {}s)",
            n + 1,
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            took.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
