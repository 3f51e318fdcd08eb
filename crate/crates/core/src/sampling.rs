//! Low-discrepancy point sets.
//!
//! Halton sequences with a seeded Cranley-Patterson rotation: the rotation
//! keeps the discrepancy of the underlying sequence while letting a seed
//! select an independent-looking replicate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Rotated Halton sequence in `[0, 1)^dim`.
#[derive(Clone, Debug)]
pub struct Halton {
    shift: Vec<f64>,
}

impl Halton {
    /// `dim <= 16`. Seed 0 gives the plain (unrotated) sequence.
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension {dim} exceeds {}", PRIMES.len());
        let shift = if seed == 0 {
            vec![0.0; dim]
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..dim).map(|_| rng.gen::<f64>()).collect()
        };
        Self { shift }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    /// The `i`-th point. Index 0 is skipped internally because the plain
    /// sequence starts at the origin.
    pub fn point(&self, i: u64, out: &mut [f64]) {
        for (d, o) in out.iter_mut().enumerate().take(self.shift.len()) {
            let v = radical_inverse(i + 1, PRIMES[d]) + self.shift[d];
            *o = v - v.floor();
        }
    }

    pub fn point_vec(&self, i: u64) -> Vec<f64> {
        let mut v = vec![0.0; self.shift.len()];
        self.point(i, &mut v);
        v
    }
}

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    r
}

/// Maps `u` in `[0,1)^{n-1}` (or more) to a point on the unit sphere in `R^n`.
pub fn sphere_point(u: &[f64], n: usize) -> Vec<f64> {
    use std::f64::consts::TAU;
    match n {
        1 => vec![if u[0] < 0.5 { -1.0 } else { 1.0 }],
        2 => {
            let a = TAU * u[0];
            vec![a.cos(), a.sin()]
        }
        3 => {
            let z = 2.0 * u[0] - 1.0;
            let a = TAU * u[1];
            let s = (1.0 - z * z).max(0.0).sqrt();
            vec![s * a.cos(), s * a.sin(), z]
        }
        _ => {
            // Box-Muller over consecutive coordinate pairs.
            let mut g = Vec::with_capacity(n + 1);
            let mut k = 0;
            while g.len() < n {
                let u1 = u.get(k).copied().unwrap_or(0.5).max(1e-300);
                let u2 = u.get(k + 1).copied().unwrap_or(0.25);
                let rad = (-2.0 * u1.ln()).sqrt();
                g.push(rad * (TAU * u2).cos());
                g.push(rad * (TAU * u2).sin());
                k += 2;
            }
            g.truncate(n);
            let nr = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            g.iter().map(|v| v / nr).collect()
        }
    }
}

/// Maps `u` in `[0,1)^n` to a point in the closed unit ball of `R^n`,
/// uniformly in volume.
pub fn ball_point(u: &[f64], n: usize) -> Vec<f64> {
    let dir = sphere_point(&u[1..], n);
    let r = u[0].powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn van_der_corput_prefix() {
        let h = Halton::new(1, 0);
        let got: Vec<f64> = (0..4).map(|i| h.point_vec(i)[0]).collect();
        assert_eq!(got, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn points_stay_in_unit_cube_and_seeds_differ() {
        let a = Halton::new(3, 7);
        let b = Halton::new(3, 8);
        for i in 0..1000 {
            let p = a.point_vec(i);
            assert!(p.iter().all(|v| (0.0..1.0).contains(v)));
        }
        assert_ne!(a.point_vec(5), b.point_vec(5));
        assert_eq!(a.point_vec(5), Halton::new(3, 7).point_vec(5));
    }

    #[test]
    fn sphere_points_have_unit_norm() {
        let h = Halton::new(5, 0);
        for n in 1..=5 {
            for i in 0..200 {
                let p = sphere_point(&h.point_vec(i), n);
                let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((r - 1.0).abs() < 1e-12);
            }
        }
    }
}
