//! The shared Gram cache and the baseline detectors.
//!
//! Every detector here produces hard decisions as indices into the
//! constellation point list and charges the arithmetic it performs (including
//! the preprocessing it would need standalone) to a [`FlopLedger`].
//!
//! Two call shapes exist per detector: `*_detect(h, y, ...)` builds the Gram
//! cache itself, while the `*_core` functions assume a prebuilt cache whose
//! build cost has already been charged by the caller. The harness builds one
//! cache per received vector and charges each detector the portion it would
//! have computed on its own.

use num_complex::Complex;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::flops::FlopLedger;
use crate::linalg::{cholesky, norm_sqr, CMat};
use crate::scalar::Scalar;

/// Candidate-space cap for the exhaustive oracle.
pub const ML_SPACE_CAP: u128 = 1 << 20;

/// Quantities shared by all detectors for one `(H, y)` pair: the Gram matrix
/// `G = H^H H`, the matched-filter vector `H^H y`, the real Gram diagonal,
/// and `‖y‖²`.
#[derive(Debug, Clone)]
pub struct GramCache<T> {
    g: CMat<T>,
    mf: Vec<Complex<T>>,
    diag: Vec<T>,
    y_norm_sqr: T,
    n: usize,
    full_cost: FlopLedger,
    mf_cost: FlopLedger,
}

impl<T: Scalar> GramCache<T> {
    #[inline]
    pub fn k(&self) -> usize {
        self.g.rows()
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn g(&self) -> &CMat<T> {
        &self.g
    }

    #[inline]
    pub fn mf(&self) -> &[Complex<T>] {
        &self.mf
    }

    #[inline]
    pub fn diag(&self) -> &[T] {
        &self.diag
    }

    #[inline]
    pub fn y_norm_sqr(&self) -> T {
        self.y_norm_sqr
    }

    /// Cost of building the full cache (Gram matrix, matched filter, `‖y‖²`).
    pub fn full_build_cost(&self) -> &FlopLedger {
        &self.full_cost
    }

    /// Cost of the matched-filter-only portion (`H^H y` and the diagonal).
    pub fn mf_build_cost(&self) -> &FlopLedger {
        &self.mf_cost
    }
}

/// Builds the shared cache for one `(H, y)` pair.
pub fn build_gram<T: Scalar>(h: &CMat<T>, y: &[Complex<T>]) -> GramCache<T> {
    let n = h.rows();
    let k = h.cols();
    assert_eq!(y.len(), n, "received vector length");

    let mut mf_cost = FlopLedger::new();
    let mut full_cost = FlopLedger::new();

    // Matched filter H^H y.
    let mf = h.herm_matvec(y);
    mf_cost.cmul((k * n) as u64);
    mf_cost.cadd((k * (n - 1)) as u64);

    // Column energies = Gram diagonal.
    let mut diag = vec![T::zero(); k];
    for p in 0..k {
        let mut acc = T::zero();
        for i in 0..n {
            acc += h.get(i, p).norm_sqr();
        }
        diag[p] = acc;
    }
    mf_cost.norm_sqr((k * n) as u64);
    mf_cost.radd((k * (n - 1)) as u64);

    full_cost.merge(&mf_cost);

    // Off-diagonal Gram entries (Hermitian mirror is free).
    let mut g = CMat::zeros(k, k);
    for p in 0..k {
        g.set(p, p, Complex::new(diag[p], T::zero()));
        for q in (p + 1)..k {
            let mut acc = Complex::new(T::zero(), T::zero());
            for i in 0..n {
                acc = acc + h.get(i, p).conj() * h.get(i, q);
            }
            g.set(p, q, acc);
            g.set(q, p, acc.conj());
        }
    }
    let pairs = (k * (k - 1) / 2) as u64;
    full_cost.cmul(pairs * n as u64);
    full_cost.cadd(pairs * (n - 1) as u64);

    let y_norm_sqr = norm_sqr(y);
    full_cost.norm_sqr(n as u64);
    full_cost.radd((n - 1) as u64);

    GramCache {
        g,
        mf,
        diag,
        y_norm_sqr,
        n,
        full_cost,
        mf_cost,
    }
}

/// Nearest-point slice with its arithmetic charged to the ledger.
pub(crate) fn slice_counted<T: Scalar>(
    cons: &Constellation<T>,
    v: Complex<T>,
    ledger: &mut FlopLedger,
) -> usize {
    let m = cons.size() as u64;
    ledger.cadd(m);
    ledger.norm_sqr(m);
    ledger.rcmp(m);
    cons.nearest_index(v)
}

/// Matched-filter slicing given a prebuilt cache: `slice(mf_p / G_pp)`.
pub fn mf_core<T: Scalar>(
    cache: &GramCache<T>,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<usize>> {
    let k = cache.k();
    let mut out = Vec::with_capacity(k);
    for p in 0..k {
        let d = cache.diag[p];
        ledger.rcmp(1);
        if !(d > T::zero()) {
            return Err(Error::DegenerateChannel(p));
        }
        let soft = Complex::new(cache.mf[p].re / d, cache.mf[p].im / d);
        ledger.rdiv(2);
        out.push(slice_counted(cons, soft, ledger));
    }
    Ok(out)
}

/// Matched-filter detector (normalized per stream before slicing).
pub fn matched_filter_detect<T: Scalar>(
    cache: &GramCache<T>,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<usize>> {
    ledger.merge(cache.mf_build_cost());
    mf_core(cache, cons, ledger)
}

/// Zero-forcing soft output: solves `(H^H H) x = H^H y`.
pub fn zf_soft<T: Scalar>(
    cache: &GramCache<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<Complex<T>>> {
    let f = cholesky(&cache.g, ledger)?;
    Ok(f.solve(&cache.mf, ledger))
}

pub fn zf_core<T: Scalar>(
    cache: &GramCache<T>,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<usize>> {
    let soft = zf_soft(cache, ledger)?;
    Ok(soft
        .into_iter()
        .map(|v| slice_counted(cons, v, ledger))
        .collect())
}

/// Zero-forcing detector.
pub fn zf_detect<T: Scalar>(
    h: &CMat<T>,
    y: &[Complex<T>],
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<usize>> {
    let cache = build_gram(h, y);
    ledger.merge(cache.full_build_cost());
    zf_core(&cache, cons, ledger)
}

/// MMSE soft output: solves `(H^H H + sigma² I) x = H^H y` (unit-energy
/// symbols assumed).
pub fn mmse_soft<T: Scalar>(
    cache: &GramCache<T>,
    sigma2: T,
    ledger: &mut FlopLedger,
) -> Result<Vec<Complex<T>>> {
    let k = cache.k();
    let mut a = cache.g.clone();
    for p in 0..k {
        let v = a.get(p, p);
        a.set(p, p, Complex::new(v.re + sigma2, v.im));
    }
    ledger.radd(k as u64);
    let f = cholesky(&a, ledger)?;
    Ok(f.solve(&cache.mf, ledger))
}

pub fn mmse_core<T: Scalar>(
    cache: &GramCache<T>,
    sigma2: T,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<usize>> {
    let soft = mmse_soft(cache, sigma2, ledger)?;
    Ok(soft
        .into_iter()
        .map(|v| slice_counted(cons, v, ledger))
        .collect())
}

/// MMSE detector.
pub fn mmse_detect<T: Scalar>(
    h: &CMat<T>,
    y: &[Complex<T>],
    sigma2: T,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<usize>> {
    let cache = build_gram(h, y);
    ledger.merge(cache.full_build_cost());
    mmse_core(&cache, sigma2, cons, ledger)
}

/// Ordered MMSE successive interference cancellation.
///
/// Runs entirely in the Gram domain: at each stage the stream with the
/// highest post-filter SINR (smallest diagonal of the inverse regularized
/// Gram submatrix) is detected, sliced, and its contribution subtracted from
/// the running matched-filter residual through the corresponding Gram
/// column.
pub fn mmse_sic_core<T: Scalar>(
    cache: &GramCache<T>,
    sigma2: T,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<usize>> {
    let k = cache.k();
    let mut remaining: Vec<usize> = (0..k).collect();
    let mut mf_res = cache.mf.clone();
    let mut decision = vec![0usize; k];

    while !remaining.is_empty() {
        let m = remaining.len();
        let a = CMat::from_fn(m, m, |i, j| {
            let mut v = cache.g.get(remaining[i], remaining[j]);
            if i == j {
                v.re += sigma2;
            }
            v
        });
        ledger.radd(m as u64);
        let f = cholesky(&a, ledger)?;

        // Ordering: (A^{-1})_pp = ‖L^{-1} e_p‖².
        let mut best_local = 0usize;
        let mut best_metric = T::infinity();
        for p in 0..m {
            let mut e = vec![Complex::new(T::zero(), T::zero()); m];
            e[p] = Complex::new(T::one(), T::zero());
            let v = f.forward(&e, ledger);
            let metric = norm_sqr(&v);
            ledger.norm_sqr(m as u64);
            ledger.radd((m - 1) as u64);
            ledger.rcmp(1);
            if metric < best_metric {
                best_metric = metric;
                best_local = p;
            }
        }

        // MMSE estimate of the chosen stream on the residual system.
        let rhs: Vec<Complex<T>> = remaining.iter().map(|&q| mf_res[q]).collect();
        let soft = f.solve(&rhs, ledger);
        let s_idx = slice_counted(cons, soft[best_local], ledger);
        let global = remaining[best_local];
        decision[global] = s_idx;

        // Cancel through the Gram column.
        let point = cons.point(s_idx);
        remaining.remove(best_local);
        for &q in &remaining {
            mf_res[q] = mf_res[q] - cache.g.get(q, global) * point;
        }
        ledger.cmul(remaining.len() as u64);
        ledger.cadd(remaining.len() as u64);
    }
    Ok(decision)
}

/// Ordered MMSE-SIC detector.
pub fn mmse_sic_detect<T: Scalar>(
    h: &CMat<T>,
    y: &[Complex<T>],
    sigma2: T,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<Vec<usize>> {
    let cache = build_gram(h, y);
    ledger.merge(cache.full_build_cost());
    mmse_sic_core(&cache, sigma2, cons, ledger)
}

struct MlSearch<'a, T> {
    cache: &'a GramCache<T>,
    cons: &'a Constellation<T>,
    k: usize,
    /// `partial[depth][p] = Σ_{j<depth} G_pj d_j` for the current prefix.
    partial: Vec<Vec<Complex<T>>>,
    digits: Vec<usize>,
    best: Vec<usize>,
    best_cost: T,
    found: bool,
}

impl<'a, T: Scalar> MlSearch<'a, T> {
    fn dfs(&mut self, depth: usize, cost: T, ledger: &mut FlopLedger) {
        if depth == self.k {
            ledger.rcmp(1);
            if !self.found || cost < self.best_cost {
                self.found = true;
                self.best_cost = cost;
                self.best.copy_from_slice(&self.digits);
            }
            return;
        }
        let g_dd = self.cache.diag[depth];
        let t_d = self.partial[depth][depth];
        let mf_d = self.cache.mf[depth];
        for ci in 0..self.cons.size() {
            let v = self.cons.point(ci);
            // ΔC of appending v at this position, from the Hermitian
            // expansion of the quadratic cost.
            let cross_re = v.re * t_d.re + v.im * t_d.im;
            let mf_re = mf_d.re * v.re + mf_d.im * v.im;
            let delta =
                self.cons.point_energy(ci) * g_dd + (T::one() + T::one()) * (cross_re - mf_re);
            ledger.rmul(2);
            ledger.radd(3);
            ledger.re_prod(2);
            self.digits[depth] = ci;
            if depth + 1 < self.k {
                for p in (depth + 1)..self.k {
                    let t = self.partial[depth][p] + self.cache.g.get(p, depth) * v;
                    self.partial[depth + 1][p] = t;
                }
                ledger.cmul((self.k - depth - 1) as u64);
                ledger.cadd((self.k - depth - 1) as u64);
            }
            self.dfs(depth + 1, cost + delta, ledger);
        }
    }
}

/// Exhaustive maximum-likelihood search over the discrete candidate space,
/// visiting candidates in lexicographic point-index order (first-found wins
/// ties). Returns the minimizer and its quadratic-form cost
/// `d^H G d - 2 Re(mf^H d)`.
pub fn ml_oracle_core<T: Scalar>(
    cache: &GramCache<T>,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<(Vec<usize>, T)> {
    let k = cache.k();
    let space = (cons.size() as u128)
        .checked_pow(k as u32)
        .ok_or(Error::SearchSpaceExceeded(u128::MAX))?;
    if space > ML_SPACE_CAP {
        return Err(Error::SearchSpaceExceeded(space));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut search = MlSearch {
        cache,
        cons,
        k,
        partial: vec![vec![zero; k]; k + 1],
        digits: vec![0; k],
        best: vec![0; k],
        best_cost: T::zero(),
        found: false,
    };
    search.dfs(0, T::zero(), ledger);
    Ok((search.best, search.best_cost))
}

/// Exhaustive ML detector for small systems (test oracle).
pub fn ml_oracle<T: Scalar>(
    h: &CMat<T>,
    y: &[Complex<T>],
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Result<(Vec<usize>, T)> {
    let cache = build_gram(h, y);
    ledger.merge(cache.full_build_cost());
    ml_oracle_core(&cache, cons, ledger)
}
