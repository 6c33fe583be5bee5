//! Wall-clock cost of the two per-association primitives: drawing a token
//! and hashing it.

use std::fmt;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::tokens::{generate_token, hash_token};

pub const MIN_ITERATIONS: usize = 100;

/// Published timings for constrained hardware, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub device: &'static str,
    pub uuid_s: f64,
    pub sha512_s: f64,
    pub total_s: f64,
}

pub const REFERENCE_ROWS: [ReferenceRow; 2] = [
    ReferenceRow {
        device: "Raspberry Pi 3 Model B",
        uuid_s: 0.076341,
        sha512_s: 0.117223,
        total_s: 0.193564,
    },
    ReferenceRow {
        device: "ESP8266",
        uuid_s: 0.058025,
        sha512_s: 0.123348,
        total_s: 0.181373,
    },
];

/// The slowest reference total; desk hardware must come in under it.
pub const SLOWEST_REFERENCE_TOTAL_S: f64 = 0.193564;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TaskStats {
    pub mean_s: f64,
    pub min_s: f64,
    pub p50_s: f64,
    pub p90_s: f64,
    pub p99_s: f64,
    pub max_s: f64,
}

impl TaskStats {
    fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let pct = |p: f64| samples[((n - 1) as f64 * p).round() as usize];
        TaskStats {
            mean_s: samples.iter().sum::<f64>() / n as f64,
            min_s: samples[0],
            p50_s: pct(0.50),
            p90_s: pct(0.90),
            p99_s: pct(0.99),
            max_s: samples[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub iterations: usize,
    pub uuid_mean_s: f64,
    pub sha512_mean_s: f64,
    pub total_mean_s: f64,
    pub uuid: TaskStats,
    pub sha512: TaskStats,
    pub reference: [ReferenceRow; 2],
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

impl fmt::Display for BenchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [pi, esp] = &self.reference;
        writeln!(f, "iterations: {}", self.iterations)?;
        writeln!(
            f,
            "{:<18}{:>16}{:>16}{:>16}",
            "Task", "this host (s)", "RPi 3 (s)", "ESP8266 (s)"
        )?;
        let rows = [
            ("Generating UUID", self.uuid_mean_s, pi.uuid_s, esp.uuid_s),
            ("SHA-512 Hashing", self.sha512_mean_s, pi.sha512_s, esp.sha512_s),
            ("Total Time", self.total_mean_s, pi.total_s, esp.total_s),
        ];
        for (task, here, a, b) in rows {
            writeln!(f, "{task:<18}{here:>16.9}{a:>16.6}{b:>16.6}")?;
        }
        writeln!(f)?;
        writeln!(f, "{:<18}{:>14}{:>14}{:>14}{:>14}", "percentiles (s)", "p50", "p90", "p99", "max")?;
        for (task, s) in [("uuid", &self.uuid), ("sha512", &self.sha512)] {
            writeln!(
                f,
                "{task:<18}{:>14.3e}{:>14.3e}{:>14.3e}{:>14.3e}",
                s.p50_s, s.p90_s, s.p99_s, s.max_s
            )?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("need at least {MIN_ITERATIONS} iterations, got {0}")]
pub struct BenchError(pub usize);

/// Times `iterations` rounds of token generation (OS-seeded generator) and
/// hashing.
pub fn bench(iterations: usize) -> Result<BenchReport, BenchError> {
    if iterations < MIN_ITERATIONS {
        return Err(BenchError(iterations));
    }
    let mut uuid = Vec::with_capacity(iterations);
    let mut sha = Vec::with_capacity(iterations);
    let mut rng = rand::rng();
    for _ in 0..iterations {
        let start = Instant::now();
        let token = std::hint::black_box(generate_token(&mut rng));
        let mid = Instant::now();
        std::hint::black_box(hash_token(&token));
        let end = Instant::now();
        uuid.push((mid - start).as_secs_f64());
        sha.push((end - mid).as_secs_f64());
    }
    let uuid = TaskStats::from_samples(uuid);
    let sha512 = TaskStats::from_samples(sha);
    Ok(BenchReport {
        iterations,
        uuid_mean_s: uuid.mean_s,
        sha512_mean_s: sha512.mean_s,
        total_mean_s: uuid.mean_s + sha512.mean_s,
        uuid,
        sha512,
        reference: REFERENCE_ROWS,
    })
}
