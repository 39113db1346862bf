//! Low-discrepancy sampling of balls and boxes.
//!
//! Points come from a Halton sequence. Ball points use a Box-Muller
//! Gaussian direction and the radius transform `r = R u^{1/2N}`. A nonzero
//! seed applies a Cranley-Patterson rotation so that different seeds give
//! different, equally uniform point sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut k = 2u64;
    while out.len() < count {
        if out.iter().take_while(|&&p| p * p <= k).all(|&p| !k.is_multiple_of(p)) {
            out.push(k);
        }
        k += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    x
}

/// Halton sequence in `dim` dimensions, optionally rotated by a seeded shift.
#[derive(Debug, Clone)]
pub struct Halton {
    bases: Vec<u64>,
    shift: Vec<f64>,
}

impl Halton {
    pub fn new(dim: usize, seed: Option<u64>) -> Self {
        let shift = match seed {
            Some(s) => {
                let mut rng = ChaCha8Rng::seed_from_u64(s);
                (0..dim).map(|_| rng.random::<f64>()).collect()
            }
            None => vec![0.0; dim],
        };
        Self { bases: primes(dim), shift }
    }

    pub fn dim(&self) -> usize {
        self.bases.len()
    }

    /// Writes point `index` into `out` (length `dim`), coordinates in `[0, 1)`.
    pub fn point(&self, index: u64, out: &mut [f64]) {
        for ((o, &b), &s) in out.iter_mut().zip(&self.bases).zip(&self.shift) {
            let x = radical_inverse(index, b) + s;
            *o = if x >= 1.0 { x - 1.0 } else { x };
        }
    }
}

/// Quasi-uniform points of the closed ball `|z - center| <= radius`.
#[derive(Debug, Clone)]
pub struct BallSampler {
    center: Vec<f64>,
    radius: f64,
    halton: Halton,
}

impl BallSampler {
    /// `center.len()` must be even. Index 0 of an unseeded sampler is the center.
    pub fn new(center: &[f64], radius: f64, seed: Option<u64>) -> Self {
        let d = center.len();
        Self {
            center: center.to_vec(),
            radius,
            halton: Halton::new(d + 1, seed),
        }
    }

    pub fn point(&self, index: u64, out: &mut [f64]) {
        let d = self.center.len();
        let mut u = vec![0.0; d + 1];
        self.halton.point(index, &mut u);
        for k in (0..d).step_by(2) {
            let r = (-2.0 * u[k].max(f64::MIN_POSITIVE).ln()).sqrt();
            let theta = std::f64::consts::TAU * u[k + 1];
            out[k] = r * theta.cos();
            out[k + 1] = r * theta.sin();
        }
        let norm = out[..d].iter().map(|x| x * x).sum::<f64>().sqrt();
        let radius = self.radius * u[d].powf(1.0 / d as f64);
        for (o, c) in out[..d].iter_mut().zip(&self.center) {
            *o = if norm > 0.0 { c + radius * *o / norm } else { *c };
        }
    }

    /// `count` points, flattened row-major.
    pub fn points(&self, count: usize) -> Vec<f64> {
        let d = self.center.len();
        let mut flat = vec![0.0; count * d];
        for (i, chunk) in flat.chunks_mut(d).enumerate() {
            self.point(i as u64, chunk);
        }
        flat
    }
}

/// Quasi-uniform points of an axis-aligned box.
#[derive(Debug, Clone)]
pub struct BoxSampler {
    lo: Vec<f64>,
    hi: Vec<f64>,
    halton: Halton,
}

impl BoxSampler {
    pub fn new(lo: &[f64], hi: &[f64], seed: Option<u64>) -> Self {
        Self {
            lo: lo.to_vec(),
            hi: hi.to_vec(),
            halton: Halton::new(lo.len(), seed),
        }
    }

    pub fn point(&self, index: u64, out: &mut [f64]) {
        self.halton.point(index, out);
        for ((o, l), h) in out.iter_mut().zip(&self.lo).zip(&self.hi) {
            *o = l + (h - l) * *o;
        }
    }
}
