//! Deterministic sample grids for the verification suites.
//!
//! Radial families: `r` log-spaced on `[r_min, r_max]`, crossed with random
//! unit directions, `x = √r·dir`. Translation families: `u` evenly spaced on
//! `[u_min, u_max]`, crossed with random lateral offsets orthogonal to `α`,
//! `x = u·α/|α|² + offset`. Directions and offsets come from a seeded ChaCha
//! stream, so a grid is a pure function of its spec.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::fields::ScalarFieldRn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub r_count: usize,
    pub directions: usize,
    pub u_min: f64,
    pub u_max: f64,
    pub u_count: usize,
    pub offsets: usize,
    /// Lateral offsets have length uniform in `[0, offset_scale]`.
    pub offset_scale: f64,
    /// Points with `|φ|` below this are skipped and counted.
    pub phi_guard: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            r_min: 0.01,
            r_max: 9.0,
            r_count: 50,
            directions: 8,
            u_min: -3.0,
            u_max: 3.0,
            u_count: 50,
            offsets: 8,
            offset_scale: 1.0,
            phi_guard: 1e-6,
        }
    }
}

/// One grid point with the value of its symmetry variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub var: f64,
    pub x: Vec<f64>,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), Error> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.r_min > 0.0 && self.r_max >= self.r_min) {
            return bad("radial grid needs 0 < r_min <= r_max");
        }
        if !(self.u_max >= self.u_min) {
            return bad("translation grid needs u_min <= u_max");
        }
        if self.r_count == 0 || self.directions == 0 || self.u_count == 0 || self.offsets == 0 {
            return bad("grid counts must be positive");
        }
        if !(self.phi_guard >= 0.0 && self.offset_scale >= 0.0) {
            return bad("phi_guard and offset_scale must be non-negative");
        }
        Ok(())
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if len > 1e-3 && len <= 1.0 {
            return v.into_iter().map(|a| a / len).collect();
        }
    }
}

/// `count` points spaced evenly in `log r` (just `lo` when `count = 1`).
pub fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

pub fn radial_grid(n: usize, spec: &GridSpec, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..spec.directions).map(|_| random_unit(&mut rng, n)).collect();
    let mut out = Vec::with_capacity(spec.r_count * dirs.len());
    for r in log_spaced(spec.r_min, spec.r_max, spec.r_count) {
        for d in &dirs {
            out.push(Sample { var: r, x: d.iter().map(|v| v * r.sqrt()).collect() });
        }
    }
    out
}

pub fn translation_grid(alpha: &[f64], spec: &GridSpec, seed: u64) -> Result<Vec<Sample>, Error> {
    let n = alpha.len();
    let a: f64 = alpha.iter().map(|v| v * v).sum();
    if !(a > 0.0) {
        return Err(Error::DegenerateDirection);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offsets = Vec::with_capacity(spec.offsets);
    while offsets.len() < spec.offsets {
        let v = random_unit(&mut rng, n);
        let along: f64 = v.iter().zip(alpha).map(|(p, q)| p * q).sum::<f64>() / a;
        let w: Vec<f64> = v.iter().zip(alpha).map(|(p, q)| p - along * q).collect();
        let len = w.iter().map(|t| t * t).sum::<f64>().sqrt();
        if len < 1e-3 {
            continue;
        }
        let scale = spec.offset_scale * rng.gen_range(0.0..1.0) / len;
        offsets.push(w.into_iter().map(|t| t * scale).collect::<Vec<f64>>());
    }
    let mut out = Vec::with_capacity(spec.u_count * offsets.len());
    for u in linspace(spec.u_min, spec.u_max, spec.u_count) {
        for o in &offsets {
            out.push(Sample { var: u, x: alpha.iter().zip(o).map(|(al, of)| u * al / a + of).collect() });
        }
    }
    Ok(out)
}

/// Splits samples into those with `|φ| ≥ guard` and a count of the rest.
pub fn drop_near_zeros(phi: &ScalarFieldRn, samples: Vec<Sample>, guard: f64) -> Result<(Vec<Sample>, usize), Error> {
    let mut kept = Vec::with_capacity(samples.len());
    let mut skipped = 0;
    for s in samples {
        match phi.value(&s.x) {
            Ok(p) if p.abs() >= guard => kept.push(s),
            Ok(_) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((kept, skipped))
}

/// `count` points uniform in the Euclidean ball of radius `radius`.
pub fn ball_points(n: usize, radius: f64, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let d = random_unit(&mut rng, n);
            let s = radius * rng.gen_range(0.0f64..1.0).powf(1.0 / n as f64);
            d.into_iter().map(|v| v * s).collect()
        })
        .collect()
}
