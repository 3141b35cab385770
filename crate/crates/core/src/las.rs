//! Greedy one-symbol-update likelihood-ascent search.
//!
//! From a starting decision the search repeatedly applies the single symbol
//! replacement with the most negative cost difference until no replacement
//! lowers the quadratic detection cost (a 1-flip-optimal point). Cost
//! differences come from the Gram cache in O(1) per candidate and each
//! accepted update adjusts the residual correlation through one Gram column,
//! so one iteration costs O(K·|alphabet|) with no channel-matrix products.

use num_complex::Complex;

use crate::constellation::Constellation;
use crate::detect::GramCache;
use crate::flops::FlopLedger;
use crate::scalar::Scalar;

/// Search state: the decision vector (point indices), the residual
/// correlation `z = H^H (y − Hd)`, and the running quadratic cost
/// `d^H G d − 2 Re(mf^H d)`.
#[derive(Debug, Clone)]
pub struct LasState<T> {
    pub d: Vec<usize>,
    pub z: Vec<Complex<T>>,
    pub cost: T,
    pub iterations: u64,
    pub cap_terminated: bool,
}

/// A selected one-symbol update: position, replacement point index, the
/// complex difference, and the (negative) cost change it realizes.
#[derive(Debug, Clone, Copy)]
pub struct Update<T> {
    pub pos: usize,
    pub target: usize,
    pub lambda: Complex<T>,
    pub delta: T,
}

/// Default iteration cap: far above what any descent on the finite
/// candidate set reaches; hitting it indicates a defect.
pub fn default_max_iters(k: usize, alphabet_size: usize) -> u64 {
    10 * k as u64 * alphabet_size as u64
}

/// Quadratic detection cost `d^H G d − 2 Re(mf^H d)` evaluated from scratch.
pub fn ml_cost<T: Scalar>(d: &[usize], cache: &GramCache<T>, cons: &Constellation<T>) -> T {
    let k = cache.k();
    assert_eq!(d.len(), k);
    let points: Vec<Complex<T>> = d.iter().map(|&i| cons.point(i)).collect();
    let gd = cache.g().matvec(&points);
    let mut quad = T::zero();
    let mut lin = T::zero();
    for p in 0..k {
        let dp = points[p];
        quad += dp.re * gd[p].re + dp.im * gd[p].im;
        lin += cache.mf()[p].re * dp.re + cache.mf()[p].im * dp.im;
    }
    quad - (T::one() + T::one()) * lin
}

/// Cost difference of replacing the symbol at `pos` by `current + lambda`:
/// `|λ|² G_pp − 2 Re(λ* z_p)`. O(1).
pub fn delta_cost<T: Scalar>(
    z: &[Complex<T>],
    cache: &GramCache<T>,
    pos: usize,
    lambda: Complex<T>,
) -> T {
    let re_lz = lambda.re * z[pos].re + lambda.im * z[pos].im;
    lambda.norm_sqr() * cache.diag()[pos] - (T::one() + T::one()) * re_lz
}

impl<T: Scalar> LasState<T> {
    /// Initializes the state from a starting decision: `z = mf − G d` and
    /// the cost from scratch.
    pub fn from_start(
        d0: &[usize],
        cache: &GramCache<T>,
        cons: &Constellation<T>,
        ledger: &mut FlopLedger,
    ) -> Self {
        let k = cache.k();
        assert_eq!(d0.len(), k);
        let points: Vec<Complex<T>> = d0.iter().map(|&i| cons.point(i)).collect();
        let gd = cache.g().matvec(&points);
        ledger.cmul((k * k) as u64);
        ledger.cadd((k * (k - 1)) as u64);

        let mut z = Vec::with_capacity(k);
        let mut quad = T::zero();
        let mut lin = T::zero();
        for p in 0..k {
            z.push(cache.mf()[p] - gd[p]);
            quad += points[p].re * gd[p].re + points[p].im * gd[p].im;
            lin += cache.mf()[p].re * points[p].re + cache.mf()[p].im * points[p].im;
        }
        ledger.cadd(k as u64);
        ledger.re_prod(2 * k as u64);
        ledger.radd(2 * (k - 1) as u64 + 1);
        ledger.rmul(1);
        let cost = quad - (T::one() + T::one()) * lin;

        Self {
            d: d0.to_vec(),
            z,
            cost,
            iterations: 0,
            cap_terminated: false,
        }
    }

    /// Applies an accepted update in O(K): one Gram column adjusts `z`.
    pub fn apply(&mut self, update: &Update<T>, cache: &GramCache<T>, ledger: &mut FlopLedger) {
        let k = cache.k();
        self.d[update.pos] = update.target;
        for p in 0..k {
            self.z[p] = self.z[p] - update.lambda * cache.g().get(p, update.pos);
        }
        ledger.cmul(k as u64);
        ledger.cadd(k as u64);
        self.cost += update.delta;
        ledger.radd(1);
        self.iterations += 1;
    }
}

/// Scans all (position, replacement) pairs: for each position keeps the
/// replacement with the most negative cost difference (ties to the lowest
/// candidate index), then keeps the best position (ties to the lowest
/// position). Returns `None` when no replacement strictly lowers the cost,
/// i.e. the state is 1-flip-optimal.
pub fn best_update<T: Scalar>(
    state: &LasState<T>,
    cache: &GramCache<T>,
    cons: &Constellation<T>,
    ledger: &mut FlopLedger,
) -> Option<Update<T>> {
    let k = cache.k();
    let two = T::one() + T::one();
    let mut best: Option<Update<T>> = None;
    for p in 0..k {
        let zp = state.z[p];
        let gpp = cache.diag()[p];
        let mut pos_best: Option<(usize, Complex<T>, T)> = None;
        for cand in cons.lambda_candidates(state.d[p]) {
            let re_lz = cand.delta.re * zp.re + cand.delta.im * zp.im;
            let delta = cand.delta.norm_sqr() * gpp - two * re_lz;
            ledger.norm_sqr(1);
            ledger.re_prod(1);
            ledger.rmul(2);
            ledger.radd(1);
            ledger.rcmp(1);
            if pos_best.as_ref().is_none_or(|&(_, _, d0)| delta < d0) {
                pos_best = Some((cand.target, cand.delta, delta));
            }
        }
        let (target, lambda, delta) = pos_best.expect("non-empty candidate set");
        ledger.rcmp(1);
        if best.as_ref().is_none_or(|b| delta < b.delta) {
            best = Some(Update {
                pos: p,
                target,
                lambda,
                delta,
            });
        }
    }
    ledger.rcmp(1);
    best.filter(|b| b.delta < T::zero())
}

/// Runs the search from `d0` until 1-flip-optimal or the iteration cap.
pub fn las_search<T: Scalar>(
    d0: &[usize],
    cache: &GramCache<T>,
    cons: &Constellation<T>,
    max_iters: u64,
    ledger: &mut FlopLedger,
) -> LasState<T> {
    let mut state = LasState::from_start(d0, cache, cons, ledger);
    loop {
        if state.iterations >= max_iters {
            state.cap_terminated = true;
            return state;
        }
        match best_update(&state, cache, cons, ledger) {
            Some(update) => state.apply(&update, cache, ledger),
            None => return state,
        }
    }
}

/// Relative agreement helper used across the invariant tests.
pub fn rel_close<T: Scalar>(a: T, b: T, tol: f64) -> bool {
    let scale = a.abs().max(b.abs()).max(T::one());
    (a - b).abs() <= T::from_f64(tol).expect("tolerance") * scale
}
