use std::time::Duration;

use clap::ValueEnum;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rmdp_core::baselines::{rrvi_with, rvi_with, BaselineOptions};
use rmdp_core::benchgen::{
    default_holes, gen_contamination, gen_frozen_lake, ContaminationSpec, FrozenLakeSpec, LakeVariant,
};
use rmdp_core::game::{rppi_with, RppiOptions, MAX_OUTER};
use rmdp_core::{Algorithm, Deadline, Error, Result, Rmdp, SolveReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Contamination,
    FrozenLakeUnichain,
    FrozenLakeMultichain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Timeout,
    Inapplicable,
    Error,
}

/// One CSV row. Timed-out rows carry the configured limit as their time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub family: Family,
    pub n: usize,
    pub seed: u64,
    pub algorithm: Algorithm,
    pub value: Option<f64>,
    pub wall_clock_seconds: Option<f64>,
    pub status: Status,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub families: Vec<Family>,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub contamination: f64,
    pub d: f64,
    pub ppe_tol: f64,
    pub gap: f64,
    pub rrvi_max_iterations: usize,
    pub timeout: Duration,
}

/// RVI needs every policy pair to be unichain and RRVI additionally
/// aperiodic; neither holds on the Frozen Lake variants they are excluded from.
pub fn applicable(family: Family, algorithm: Algorithm) -> bool {
    match (family, algorithm) {
        (_, Algorithm::Rppi) => true,
        (Family::FrozenLakeMultichain, Algorithm::Rvi) => false,
        (Family::FrozenLakeUnichain | Family::FrozenLakeMultichain, Algorithm::Rrvi) => false,
        (_, Algorithm::Rvi | Algorithm::Rrvi) => true,
        (_, Algorithm::Brute) => false,
    }
}

pub fn instance(family: Family, n: usize, seed: u64, config: &BenchConfig) -> Result<Rmdp> {
    let lake = |variant| gen_frozen_lake(&FrozenLakeSpec { n, holes: default_holes(n), d: config.d, variant, seed });
    match family {
        Family::Contamination => gen_contamination(&ContaminationSpec { n, r: config.contamination, seed }),
        Family::FrozenLakeUnichain => lake(LakeVariant::Unichain),
        Family::FrozenLakeMultichain => lake(LakeVariant::Multichain),
    }
}

fn row_of(family: Family, n: usize, seed: u64, algorithm: Algorithm, result: Result<SolveReport>, limit: f64) -> BenchRow {
    let (value, wall_clock_seconds, status) = match result {
        Ok(r) => (Some(r.value_at_initial), Some(r.wall_clock_seconds), Status::Ok),
        Err(Error::Timeout) => (None, Some(limit), Status::Timeout),
        Err(e) => {
            eprintln!("{family:?} n={n} seed={seed} {algorithm}: {e}");
            (None, None, Status::Error)
        }
    };
    BenchRow { family, n, seed, algorithm, value, wall_clock_seconds, status }
}

/// All rows of one instance. RPPI runs first because its value is the
/// stopping reference of both baselines.
fn instance_rows(family: Family, n: usize, seed: u64, config: &BenchConfig) -> Vec<BenchRow> {
    let limit = config.timeout.as_secs_f64();
    let model = instance(family, n, seed, config);
    let mut reference = None;
    let mut rows = Vec::new();
    let mut ordered = config.algorithms.clone();
    ordered.sort();
    if !ordered.contains(&Algorithm::Rppi) && ordered.iter().any(|&a| applicable(family, a)) {
        ordered.insert(0, Algorithm::Rppi);
    }
    for algorithm in ordered {
        let result = match (&model, algorithm) {
            (_, a) if !applicable(family, a) => {
                rows.push(BenchRow {
                    family,
                    n,
                    seed,
                    algorithm,
                    value: None,
                    wall_clock_seconds: None,
                    status: Status::Inapplicable,
                });
                continue;
            }
            (Err(e), _) => Err(Error::Parse(e.to_string())),
            (Ok(m), Algorithm::Rppi) => {
                let opts = RppiOptions {
                    ppe_tol: config.ppe_tol,
                    max_outer: MAX_OUTER,
                    deadline: Deadline::after(config.timeout),
                };
                rppi_with(m, &opts).map(|o| o.report)
            }
            (Ok(m), a) => match reference {
                Some(reference_value) => {
                    let mut opts = BaselineOptions {
                        reference_value,
                        stop_gap: config.gap,
                        max_iterations: MAX_OUTER,
                        deadline: Deadline::after(config.timeout),
                    };
                    if a == Algorithm::Rvi {
                        rvi_with(m, &opts)
                    } else {
                        opts.max_iterations = config.rrvi_max_iterations;
                        rrvi_with(m, &opts)
                    }
                }
                None => Err(Error::Parse("no RPPI reference value for this instance".into())),
            },
        };
        if algorithm == Algorithm::Rppi {
            reference = result.as_ref().ok().map(|r| r.value_at_initial);
            if !config.algorithms.contains(&Algorithm::Rppi) {
                continue;
            }
        }
        rows.push(row_of(family, n, seed, algorithm, result, limit));
    }
    rows
}

/// Runs every (family, size, seed) instance, in parallel on the current
/// rayon pool, and returns the rows sorted by family, size, algorithm, seed.
pub fn run(config: &BenchConfig) -> Vec<BenchRow> {
    let jobs: Vec<(Family, usize, u64)> = config
        .families
        .iter()
        .flat_map(|&f| config.sizes.iter().flat_map(move |&n| config.seeds.iter().map(move |&s| (f, n, s))))
        .collect();
    let mut rows: Vec<BenchRow> =
        jobs.par_iter().flat_map_iter(|&(f, n, s)| instance_rows(f, n, s, config)).collect();
    rows.sort_by_key(|r| (r.family, r.n, r.algorithm, r.seed));
    rows
}

pub fn write_csv(rows: &[BenchRow], out: impl std::io::Write) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(families: Vec<Family>, sizes: Vec<usize>) -> BenchConfig {
        BenchConfig {
            families,
            sizes,
            seeds: vec![0],
            algorithms: vec![Algorithm::Rppi, Algorithm::Rvi, Algorithm::Rrvi],
            contamination: 0.4,
            d: 0.2,
            ppe_tol: 1e-5,
            gap: 1e-3,
            rrvi_max_iterations: 1_000_000,
            timeout: Duration::from_secs(600),
        }
    }

    #[test]
    fn applicability_rules() {
        let rows = run(&config(vec![Family::FrozenLakeMultichain], vec![2]));
        let status: Vec<_> = rows.iter().map(|r| (r.algorithm, r.status)).collect();
        assert_eq!(
            status,
            vec![
                (Algorithm::Rppi, Status::Ok),
                (Algorithm::Rvi, Status::Inapplicable),
                (Algorithm::Rrvi, Status::Inapplicable)
            ]
        );
    }

    #[test]
    fn single_state_contamination() {
        let cfg = config(vec![Family::Contamination], vec![1]);
        let m = instance(Family::Contamination, 1, 0, &cfg).unwrap();
        let best = m.rewards[0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rows = run(&cfg);
        assert_eq!(rows.len(), 3);
        for r in rows {
            assert_eq!(r.status, Status::Ok);
            assert!((r.value.unwrap() - best).abs() <= 1e-3, "{r:?}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let rows = run(&config(vec![Family::FrozenLakeUnichain, Family::FrozenLakeMultichain], vec![2]));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("family,n,seed,algorithm,value,wall_clock_seconds,status\n"));
        let back: Vec<BenchRow> =
            csv::Reader::from_reader(text.as_bytes()).deserialize().collect::<Result<_, _>>().unwrap();
        assert_eq!(back, rows);
    }
}
