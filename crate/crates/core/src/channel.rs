//! Channel, symbol, and noise generation.
//!
//! Every random draw is a pure function of an [`RngStream`]: a master seed
//! plus a (trial, purpose) pair expanded into a ChaCha key by a splitmix
//! chain. Trials can therefore run in any order, on any number of workers,
//! and reproduce bit-identically.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use crate::scalar::{real, real_from_usize, Scalar};

/// A drawn channel: `N x K` gain matrix and the noise variance in force.
#[derive(Debug, Clone)]
pub struct ChannelInstance<T> {
    pub h: CMat<T>,
    pub sigma2: T,
}

impl<T: Scalar> ChannelInstance<T> {
    pub fn new(h: CMat<T>, sigma2: T) -> Result<Self> {
        let (n, k) = (h.rows(), h.cols());
        if k < 1 || n < k {
            return Err(Error::ShapeMismatch(format!(
                "need N >= K >= 1, got N={n}, K={k}"
            )));
        }
        if sigma2 < T::zero() {
            return Err(Error::Config("negative noise variance".into()));
        }
        if !h.is_finite() {
            return Err(Error::Config("non-finite channel entry".into()));
        }
        Ok(Self { h, sigma2 })
    }

    pub fn n(&self) -> usize {
        self.h.rows()
    }

    pub fn k(&self) -> usize {
        self.h.cols()
    }
}

/// What a derived random stream is used for. Distinct purposes at the same
/// trial index never share a generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    Channel = 0,
    Symbols = 1,
    Noise = 2,
    Perturbation = 3,
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub trial: u64,
    pub purpose: StreamPurpose,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(master_seed: u64, trial: u64, purpose: StreamPurpose) -> Self {
        Self {
            master_seed,
            trial,
            purpose,
        }
    }

    /// Fresh generator for this stream. Calling twice yields generators in
    /// identical states.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut state = self.master_seed
            ^ self.trial.wrapping_mul(0xA24BAED4963EE407)
            ^ (self.purpose as u64).wrapping_mul(0x9FB21C651E98DF25);
        let mut seed = [0u8; 32];
        for chunk in seed.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }
}

/// One standard-normal pair via Box-Muller, computed in f64.
fn normal_pair<R: Rng>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.random::<f64>(); // in (0, 1]
    let u2: f64 = rng.random::<f64>();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    (r * theta.cos(), r * theta.sin())
}

/// Draws an `n x k` matrix of i.i.d. circularly-symmetric complex Gaussian
/// entries with zero mean and unit variance (each component has variance
/// one half).
pub fn draw_channel<T: Scalar>(n: usize, k: usize, stream: &RngStream) -> CMat<T> {
    assert!(n >= 1 && k >= 1);
    let mut rng = stream.rng();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(n, k, |_, _| {
        let (a, b) = normal_pair(&mut rng);
        Complex::new(real::<T>(a * s), real::<T>(b * s))
    })
}

/// Converts per-receive-antenna SNR in dB to the noise variance
/// `sigma² = K · Es · 10^(−snr/10)`. With unit-energy symbols this inverts
/// `SNR = 10·log10(K / sigma²)` exactly.
pub fn snr_to_sigma2<T: Scalar>(snr_db: T, k: usize, es: T) -> T {
    let ten: T = real(10.0);
    real_from_usize::<T>(k) * es * ten.powf(-snr_db / ten)
}

/// Draws `n` i.i.d. complex Gaussian noise samples with total per-entry
/// variance `sigma2`.
pub fn draw_noise<T: Scalar>(n: usize, sigma2: T, stream: &RngStream) -> Vec<Complex<T>> {
    let mut rng = stream.rng();
    let comp_std = (sigma2.to_f64().expect("finite sigma2") / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let (a, b) = normal_pair(&mut rng);
            Complex::new(real::<T>(a * comp_std), real::<T>(b * comp_std))
        })
        .collect()
}

/// Forms the received vector `y = Hx + n`.
pub fn make_received<T: Scalar>(
    h: &CMat<T>,
    x: &[Complex<T>],
    noise: &[Complex<T>],
) -> Result<Vec<Complex<T>>> {
    if h.cols() != x.len() || h.rows() != noise.len() {
        return Err(Error::ShapeMismatch(format!(
            "H is {}x{}, x has {}, n has {}",
            h.rows(),
            h.cols(),
            x.len(),
            noise.len()
        )));
    }
    let mut y = h.matvec(x);
    for (yi, ni) in y.iter_mut().zip(noise.iter()) {
        *yi = *yi + *ni;
    }
    Ok(y)
}
