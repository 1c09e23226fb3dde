//! Discrete-event Monte Carlo of the finite-capacity M/M/1-PS queue.
//!
//! With `m` customers present the total service completion rate is one and
//! the arrival rate is `rho` while `m < K`. A completion removes a uniformly
//! chosen customer, which is exact for egalitarian sharing of exponential
//! work. Every replication draws from its own ChaCha stream, so results do
//! not depend on how replications are spread over threads.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::spectrum::theta_s_exact;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    /// Tagged customer arrives to find `n` others.
    Conditional(usize),
    /// Tagged customer is an admitted arrival to the stationary queue.
    Stationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SojournSamples {
    pub params: ModelParams,
    pub n_initial: Initial,
    pub seed: u64,
    pub samples: Vec<f64>,
    /// Arrivals that found the system full while a tag was pending
    /// (stationary mode only).
    pub blocked_count: u64,
    /// Number of others seen by each tagged arrival, indexed `0..K`
    /// (stationary mode only; empty otherwise).
    pub occupancy_histogram: Vec<u64>,
}

/// Count, mean and centred second moment, mergeable in any grouping.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunningStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &RunningStats) -> RunningStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let (na, nb) = (self.count as f64, other.count as f64);
        RunningStats {
            count: n,
            mean: self.mean + d * nb / n as f64,
            m2: self.m2 + other.m2 + d * d * na * nb / n as f64,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn from_slice(xs: &[f64]) -> RunningStats {
        let mut s = RunningStats::default();
        xs.iter().for_each(|&x| s.push(x));
        s
    }
}

const STATS_CHUNK: usize = 1 << 14;

/// Statistics of `f(x)` over `xs`: chunks in parallel, merged in input order.
pub fn stats_of<F: Fn(f64) -> f64 + Sync>(xs: &[f64], f: F) -> RunningStats {
    let parts: Vec<RunningStats> = xs
        .par_chunks(STATS_CHUNK)
        .map(|c| {
            let mut s = RunningStats::default();
            c.iter().for_each(|&x| s.push(f(x)));
            s
        })
        .collect();
    parts.iter().fold(RunningStats::default(), |a, b| a.merge(b))
}

impl SojournSamples {
    pub fn stats(&self) -> RunningStats {
        stats_of(&self.samples, |x| x)
    }

    /// Mean of `exp(-theta V)` with its standard error.
    pub fn laplace_functional(&self, theta: f64) -> RunningStats {
        stats_of(&self.samples, |x| (-theta * x).exp())
    }

    /// Fraction of samples strictly above each `t`.
    pub fn empirical_survival(&self, times: &[f64]) -> Vec<f64> {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        times
            .iter()
            .map(|&t| {
                let at_or_below = sorted.partition_point(|&x| x <= t);
                (sorted.len() - at_or_below) as f64 / n
            })
            .collect()
    }

    /// Least-squares slope of `ln S(t)` over `times`, using only points
    /// where the empirical survival is positive.
    pub fn empirical_tail_slope(&self, times: &[f64]) -> Result<f64> {
        let surv = self.empirical_survival(times);
        let pts: Vec<(f64, f64)> = times
            .iter()
            .zip(&surv)
            .filter(|(_, s)| **s > 0.0)
            .map(|(t, s)| (*t, s.ln()))
            .collect();
        if pts.len() < 2 {
            return Err(Error::Domain("empirical survival vanishes on the fit window".into()));
        }
        let m = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / m;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
        Ok(sxy / sxx)
    }

    /// Kolmogorov-Smirnov distance to a continuous CDF.
    pub fn ks_statistic<F: Fn(f64) -> f64>(&self, cdf: F) -> f64 {
        let mut sorted = self.samples.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    /// One sojourn per line after the header `sojourn_time`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["sojourn_time"])?;
        for x in &self.samples {
            w.write_record([format!("{x:.16e}")])?;
        }
        w.flush()
    }

    pub fn write_csv_file(&self, path: &Path) -> std::io::Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Reads a sample dump written by [`SojournSamples::write_csv`].
pub fn read_csv_samples(path: &Path) -> std::io::Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let x: f64 = rec[0]
            .parse()
            .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
        out.push(x);
    }
    Ok(out)
}

fn stream(seed: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replication);
    rng
}

/// Time until the tagged customer leaves, starting with `m` present
/// (tagged included).
fn tagged_sojourn(rho: f64, capacity: usize, mut m: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut t = 0.0;
    loop {
        let arrival = if m < capacity { rho } else { 0.0 };
        let rate = 1.0 + arrival;
        let e: f64 = rng.sample(Exp1);
        t += e / rate;
        if rng.gen::<f64>() * rate < arrival {
            m += 1;
        } else {
            if rng.gen_range(0..m) == 0 {
                return t;
            }
            m -= 1;
        }
    }
}

/// Sojourns of a customer who finds `n` others present.
pub fn simulate_conditional(params: &ModelParams, n: usize, count: usize, seed: u64) -> Result<SojournSamples> {
    let k = params.capacity();
    if n >= k {
        return Err(Error::InvalidInitial { n, capacity: k });
    }
    let rho = params.rho();
    let samples = (0..count as u64)
        .into_par_iter()
        .map(|i| tagged_sojourn(rho, k, n + 1, &mut stream(seed, i)))
        .collect();
    Ok(SojournSamples {
        params: *params,
        n_initial: Initial::Conditional(n),
        seed,
        samples,
        blocked_count: 0,
        occupancy_histogram: Vec::new(),
    })
}

/// Burn-in used by [`simulate_stationary`], counted in arrivals: at least
/// `rho * 50/|θ_s|` and at least 50.
pub fn burn_in_arrivals(params: &ModelParams) -> u64 {
    let time = 50.0 / theta_s_exact(params).abs();
    (params.rho() * time).ceil().max(50.0) as u64
}

/// Runs the untagged queue from state `m` through `arrivals` arrival
/// epochs and returns the occupancy seen by the last one (before it is
/// admitted or blocked).
fn advance_arrivals(rho: f64, capacity: usize, mut m: usize, arrivals: u64, rng: &mut ChaCha8Rng) -> usize {
    let mut seen = 0;
    loop {
        let service = if m > 0 { 1.0 } else { 0.0 };
        let rate = rho + service;
        // holding times do not affect the embedded jump chain
        if rng.gen::<f64>() * rate < rho {
            seen += 1;
            if seen == arrivals {
                return m;
            }
            if m < capacity {
                m += 1;
            }
        } else {
            m -= 1;
        }
    }
}

/// Sojourns of admitted arrivals to the stationary queue.
///
/// Each replication starts empty and looks at the arrival with index
/// [`burn_in_arrivals`]. Occupancies seen by successive arrivals form a
/// Markov chain whose stationary law is the time-stationary one, so this
/// arrival sees that law. If it is blocked it is counted and a fresh
/// burn-in of the same length is run. Tagged arrivals are independent
/// across replications and see the stationary law restricted to `n < K`.
pub fn simulate_stationary(params: &ModelParams, count: usize, seed: u64) -> Result<SojournSamples> {
    if count == 0 {
        return Err(Error::Domain("count must be at least 1".into()));
    }
    let k = params.capacity();
    let rho = params.rho();
    let burn = burn_in_arrivals(params);
    let runs: Vec<(f64, usize, u64)> = (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream(seed, i);
            let mut m = 0;
            let mut blocked = 0;
            loop {
                m = advance_arrivals(rho, k, m, burn, &mut rng);
                if m < k {
                    return (tagged_sojourn(rho, k, m + 1, &mut rng), m, blocked);
                }
                blocked += 1;
            }
        })
        .collect();
    let mut histogram = vec![0u64; k];
    let mut blocked_count = 0;
    let mut samples = Vec::with_capacity(count);
    for (v, m, b) in runs {
        samples.push(v);
        histogram[m] += 1;
        blocked_count += b;
    }
    Ok(SojournSamples {
        params: *params,
        n_initial: Initial::Stationary,
        seed,
        samples,
        blocked_count,
        occupancy_histogram: histogram,
    })
}

/// Stationary weights of the occupancy seen by admitted arrivals, `∝ rho^n`.
pub fn admission_weights(params: &ModelParams) -> Vec<f64> {
    let k = params.capacity();
    let raw: Vec<f64> = (0..k).map(|n| params.rho().powi(n as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Pearson statistic of observed counts against expected probabilities.
pub fn chi_square(observed: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = observed.iter().sum();
    observed
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * n as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}
