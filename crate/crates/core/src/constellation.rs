//! Square Gray-coded QAM alphabets.
//!
//! Symbols are handled as indices into the point list; the point list order
//! is the tie-break order for slicing and the enumeration order for the
//! per-symbol replacement candidates, so every downstream decision is
//! deterministic.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{real, real_from_usize, Scalar};

/// Amplitude convention for the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMode {
    /// Integer lattice levels (`±1 ± j` for order 4).
    Lattice,
    /// Lattice divided by its RMS amplitude so the mean symbol energy is 1.
    UnitEnergy,
}

/// One admissible one-symbol replacement: the replacement point index and
/// the complex difference it adds to the current symbol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaCandidate<T> {
    pub target: usize,
    pub delta: Complex<T>,
}

#[derive(Debug, Clone)]
pub struct Constellation<T> {
    points: Vec<Complex<T>>,
    point_energy: Vec<T>,
    labels: Vec<u32>,
    label_to_index: Vec<usize>,
    bits_per_symbol: usize,
    scale: T,
    mode: ScaleMode,
    lambda: Vec<Vec<LambdaCandidate<T>>>,
}

fn gray(n: u32) -> u32 {
    n ^ (n >> 1)
}

impl<T: Scalar> Constellation<T> {
    /// Builds a square Gray-coded QAM alphabet of the given order.
    ///
    /// Points enumerate the lattice in-phase-major; the bit label of a point
    /// is the binary-reflected Gray code of its in-phase level index in the
    /// high half of the bits and of its quadrature level index in the low
    /// half, so nearest horizontal/vertical neighbours differ in one bit.
    pub fn build_qam(order: usize, mode: ScaleMode) -> Result<Self> {
        if !matches!(order, 4 | 16 | 64) {
            return Err(Error::UnsupportedOrder(order));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let half = bits_per_symbol / 2;
        let side = 1usize << half;

        // Mean energy of the integer lattice: two dimensions of variance
        // (side^2 - 1)/3 each.
        let lattice_energy = 2.0 * ((side * side - 1) as f64) / 3.0;
        let scale = match mode {
            ScaleMode::Lattice => T::one(),
            ScaleMode::UnitEnergy => real::<T>(1.0 / lattice_energy.sqrt()),
        };

        let level = |i: usize| -> T {
            let raw = 2.0 * i as f64 - (side - 1) as f64;
            real::<T>(raw) * scale
        };

        let m = order;
        let mut points = Vec::with_capacity(m);
        let mut labels = Vec::with_capacity(m);
        for i in 0..side {
            for q in 0..side {
                points.push(Complex::new(level(i), level(q)));
                labels.push((gray(i as u32) << half) | gray(q as u32));
            }
        }
        let mut label_to_index = vec![0usize; m];
        for (idx, &lab) in labels.iter().enumerate() {
            label_to_index[lab as usize] = idx;
        }
        let point_energy: Vec<T> = points.iter().map(|p| p.norm_sqr()).collect();

        let lambda = points
            .iter()
            .map(|&cur| {
                points
                    .iter()
                    .enumerate()
                    .filter(|&(_, &q)| q != cur)
                    .map(|(target, &q)| LambdaCandidate {
                        target,
                        delta: q - cur,
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            points,
            point_energy,
            labels,
            label_to_index,
            bits_per_symbol,
            scale,
            mode,
            lambda,
        })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    #[inline]
    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    #[inline]
    pub fn point(&self, idx: usize) -> Complex<T> {
        self.points[idx]
    }

    /// Precomputed `|point|²`.
    #[inline]
    pub fn point_energy(&self, idx: usize) -> T {
        self.point_energy[idx]
    }

    #[inline]
    pub fn label(&self, idx: usize) -> u32 {
        self.labels[idx]
    }

    #[inline]
    pub fn scale(&self) -> T {
        self.scale
    }

    #[inline]
    pub fn mode(&self) -> ScaleMode {
        self.mode
    }

    /// Mean symbol energy over the alphabet.
    pub fn mean_energy(&self) -> T {
        let mut acc = T::zero();
        for &e in &self.point_energy {
            acc += e;
        }
        acc / real_from_usize::<T>(self.size())
    }

    /// Index of the nearest point in Euclidean distance; ties resolve to the
    /// lowest point index.
    pub fn nearest_index(&self, v: Complex<T>) -> usize {
        let mut best = 0usize;
        let mut best_d = (v - self.points[0]).norm_sqr();
        for (i, &p) in self.points.iter().enumerate().skip(1) {
            let d = (v - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Hard decision: the nearest constellation point.
    pub fn slice(&self, v: Complex<T>) -> Complex<T> {
        self.points[self.nearest_index(v)]
    }

    /// Exact-match lookup of an alphabet member.
    pub fn point_index(&self, p: Complex<T>) -> Result<usize> {
        self.points
            .iter()
            .position(|&q| q == p)
            .ok_or(Error::UnknownSymbol)
    }

    /// Replacement candidates for the symbol at `current`, in point-list
    /// order of the replacement: for each other point `q`, the difference
    /// `q - current`.
    #[inline]
    pub fn lambda_candidates(&self, current: usize) -> &[LambdaCandidate<T>] {
        &self.lambda[current]
    }

    /// [`Self::lambda_candidates`] addressed by point value; fails when the
    /// value is not an alphabet member.
    pub fn lambda_candidates_for(&self, current: Complex<T>) -> Result<&[LambdaCandidate<T>]> {
        Ok(self.lambda_candidates(self.point_index(current)?))
    }

    /// Maps a bit sequence (multiple of `bits_per_symbol`, MSB first within
    /// each symbol) to symbol indices via the Gray labeling.
    pub fn bits_to_symbols(&self, bits: &[u8]) -> Result<Vec<usize>> {
        if !bits.len().is_multiple_of(self.bits_per_symbol) {
            return Err(Error::BitLengthMismatch {
                len: bits.len(),
                bits_per_symbol: self.bits_per_symbol,
            });
        }
        bits.chunks(self.bits_per_symbol)
            .map(|chunk| {
                let mut label = 0u32;
                for &b in chunk {
                    if b > 1 {
                        return Err(Error::InvalidBit(b));
                    }
                    label = (label << 1) | b as u32;
                }
                Ok(self.label_to_index[label as usize])
            })
            .collect()
    }

    /// Inverse of [`Self::bits_to_symbols`].
    pub fn symbols_to_bits(&self, symbols: &[usize]) -> Result<Vec<u8>> {
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for &s in symbols {
            if s >= self.size() {
                return Err(Error::UnknownSymbol);
            }
            let label = self.labels[s];
            for k in (0..self.bits_per_symbol).rev() {
                bits.push(((label >> k) & 1) as u8);
            }
        }
        Ok(bits)
    }

    /// Hamming distance between the bit labels of two symbol-index vectors.
    pub fn bit_errors(&self, a: &[usize], b: &[usize]) -> u64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter()
            .zip(b.iter())
            .map(|(&x, &y)| (self.labels[x] ^ self.labels[y]).count_ones() as u64)
            .sum()
    }
}
