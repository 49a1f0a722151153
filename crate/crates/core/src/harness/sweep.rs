use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::link::run_link;
use super::scenario::Scenario;
use crate::error::{Error, Result};

/// One channel of one (value, seed) point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: String,
    pub value: f64,
    pub seed: u64,
    pub channel: String,
    pub ber: f64,
    pub q_db: f64,
    pub osnr_db: f64,
    pub rop_dbm: f64,
    pub pass: bool,
}

/// `points` evenly spaced values from `from` to `to` inclusive.
pub fn linspace(from: f64, to: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..points)
            .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
            .collect(),
    }
}

fn worker_count() -> Result<Option<usize>> {
    match std::env::var("THZLINK_WORKERS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Scenario(format!("THZLINK_WORKERS must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Run `sc` at each value of the parameter at `path` for each seed. Rows are
/// ordered by value, seed and channel regardless of the worker count.
pub fn sweep(sc: &Scenario, path: &str, values: &[f64], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    let mut points = Vec::new();
    for &v in values {
        for &seed in seeds {
            let mut s = sc.with_param(path, v)?;
            s.seed = seed;
            s.validate()?;
            points.push((v, seed, s));
        }
    }
    let run = || {
        points
            .par_iter()
            .map(|(v, seed, s)| {
                let r = run_link(s)?;
                Ok(r.channels
                    .into_iter()
                    .map(|c| SweepRow {
                        param: path.to_string(),
                        value: *v,
                        seed: *seed,
                        channel: c.label,
                        ber: c.ber,
                        q_db: c.q_factor_db,
                        osnr_db: c.osnr_db,
                        rop_dbm: c.rop_dbm,
                        pass: c.pre_fec_pass,
                    })
                    .collect::<Vec<_>>())
            })
            .collect::<Result<Vec<_>>>()
    };
    let nested = match worker_count()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Scenario(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    let mut rows: Vec<SweepRow> = nested.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        a.value
            .total_cmp(&b.value)
            .then(a.seed.cmp(&b.seed))
            .then(a.channel.cmp(&b.channel))
    });
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
