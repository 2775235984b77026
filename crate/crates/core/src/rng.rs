//! Deterministic random streams.
//!
//! A trial never shares a generator with another trial or with another
//! purpose inside the same trial. Sources, channels, CSI errors and noise each
//! get their own ChaCha stream keyed by `(seed, trial, purpose)`, so two
//! schemes run on the same seed see the same sources and the same fading
//! regardless of how many draws each one makes.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Source = 0,
    Channel = 1,
    Csi = 2,
    Noise = 3,
}

const PURPOSES: u64 = 4;

pub fn stream(seed: u64, trial: u64, purpose: Purpose) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(PURPOSES) + purpose as u64);
    rng
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let scale = libm::sqrt(variance / 2.0);
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Uniform point on the open complex disk of the given radius.
pub fn complex_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Complex64 {
    // Rejection from the square keeps the draw exactly uniform.
    loop {
        let re = rng.random_range(-1.0..1.0);
        let im = rng.random_range(-1.0..1.0);
        let r2: f64 = re * re + im * im;
        if r2 < 1.0 {
            return Complex64::new(radius * re, radius * im);
        }
    }
}
