use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::HarnessError;

pub const CSV_HEADER: [&str; 10] = [
    "iteration",
    "generation",
    "island",
    "max_fitness",
    "mean_fitness",
    "mean_size",
    "mean_depth",
    "immigrants_admitted",
    "emigrants_sent",
    "helper_rejections",
];

/// One CSV row: one island in one generation of one iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub iteration: usize,
    pub generation: u64,
    pub island: usize,
    pub max_fitness: f64,
    pub mean_fitness: f64,
    pub mean_size: f64,
    pub mean_depth: f64,
    pub immigrants_admitted: usize,
    pub emigrants_sent: usize,
    pub helper_rejections: usize,
}

pub fn write_csv<W: Write>(rows: &[StatRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<StatRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(HarnessError::Config(format!(
            "unexpected CSV header: {}",
            header.join(",")
        )));
    }
    Ok(r.deserialize().collect::<Result<Vec<StatRow>, _>>()?)
}

/// Mean, sample standard deviation and standard error of one quantity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
}

impl Moments {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Self::default();
        }
        let mean = xs.iter().sum::<f64>() / n;
        let sd = if xs.len() > 1 {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            sd,
            se: sd / n.sqrt(),
        }
    }
}

/// Across-iteration statistics for one (generation, island).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate {
    pub generation: u64,
    pub island: usize,
    pub n: usize,
    pub max_fitness: Moments,
    pub mean_fitness: Moments,
}

pub fn aggregate(rows: &[StatRow]) -> Vec<Aggregate> {
    let mut groups: BTreeMap<(u64, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in rows {
        let g = groups.entry((r.generation, r.island)).or_default();
        g.0.push(r.max_fitness);
        g.1.push(r.mean_fitness);
    }
    groups
        .into_iter()
        .map(|((generation, island), (max, mean))| Aggregate {
            generation,
            island,
            n: max.len(),
            max_fitness: Moments::of(&max),
            mean_fitness: Moments::of(&mean),
        })
        .collect()
}

pub fn write_aggregates<W: Write>(aggs: &[Aggregate], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "generation", "island", "n", "max_fitness_mean", "max_fitness_sd", "max_fitness_se",
        "mean_fitness_mean", "mean_fitness_sd", "mean_fitness_se",
    ])?;
    for a in aggs {
        w.write_record([
            a.generation.to_string(),
            a.island.to_string(),
            a.n.to_string(),
            a.max_fitness.mean.to_string(),
            a.max_fitness.sd.to_string(),
            a.max_fitness.se.to_string(),
            a.mean_fitness.mean.to_string(),
            a.mean_fitness.sd.to_string(),
            a.mean_fitness.se.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Generations-to-threshold of two datasets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Comparison {
    pub threshold: f64,
    pub baseline: Option<u64>,
    pub treatment: Option<u64>,
    /// `1 - treatment / baseline`; absent unless both reached the threshold.
    pub improvement: Option<f64>,
}

/// Per generation, the mean over all iterations and islands of max fitness.
pub fn max_fitness_curve(rows: &[StatRow]) -> BTreeMap<u64, f64> {
    let mut sums: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for r in rows {
        let e = sums.entry(r.generation).or_default();
        e.0 += r.max_fitness;
        e.1 += 1;
    }
    sums.into_iter().map(|(g, (s, n))| (g, s / n as f64)).collect()
}

fn first_reaching(rows: &[StatRow], threshold: f64) -> Option<u64> {
    max_fitness_curve(rows)
        .into_iter()
        .find(|&(_, v)| v >= threshold)
        .map(|(g, _)| g)
}

pub fn compare_runs(
    baseline: &[StatRow],
    treatment: &[StatRow],
    threshold: f64,
) -> Result<Comparison, HarnessError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(HarnessError::Config(format!("threshold {threshold} outside (0, 1]")));
    }
    let b = first_reaching(baseline, threshold);
    let t = first_reaching(treatment, threshold);
    let improvement = match (b, t) {
        (Some(0), Some(_)) => Some(0.0),
        (Some(b), Some(t)) => Some(1.0 - t as f64 / b as f64),
        _ => None,
    };
    Ok(Comparison {
        threshold,
        baseline: b,
        treatment: t,
        improvement,
    })
}
