//! Random-list restart controller around the one-symbol search.
//!
//! The controller runs the search once from the matched-filter (or MMSE)
//! decision, then repeatedly from random perturbations of that start vector,
//! keeping the best-cost result. The restart budget adapts to solution
//! quality: the standardized cost `φ` compares the residual energy against
//! the noise-only expectation, and the budget is exponential in `φ` with a
//! floor, re-evaluated whenever a better decision is adopted.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::channel::RngStream;
use crate::constellation::Constellation;
use crate::detect::{build_gram, mf_core, mmse_core, GramCache};
use crate::error::{Error, Result};
use crate::flops::FlopLedger;
use crate::las::{default_max_iters, las_search};
use crate::linalg::CMat;
use crate::scalar::{real_from_usize, Scalar};

/// Detector that produces the anchor vector restarts perturb.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartDetector {
    Mf,
    Mmse,
}

/// Restart-controller parameters.
#[derive(Debug, Clone, Copy)]
pub struct RlbConfig<T> {
    /// Floor of the restart budget.
    pub np_min: u32,
    /// Scale of the exponential budget rule.
    pub c1: T,
    pub start: StartDetector,
    /// Hard bound on restarts; the exponential rule is unbounded at very
    /// low SNR.
    pub max_restarts_cap: u32,
}

impl<T: Scalar> Default for RlbConfig<T> {
    fn default() -> Self {
        Self {
            np_min: 2,
            c1: real_from_usize::<T>(5),
            start: StartDetector::Mf,
            max_restarts_cap: 1000,
        }
    }
}

impl<T: Scalar> RlbConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.np_min < 1 {
            return Err(Error::Config("np_min must be at least 1".into()));
        }
        if !(self.c1 > T::zero()) {
            return Err(Error::Config("c1 must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of one detection with full accounting.
#[derive(Debug, Clone)]
pub struct DetectionReport<T> {
    pub decision: Vec<usize>,
    /// Quadratic cost of the decision.
    pub cost: T,
    /// Standardized cost of the decision; `None` when `sigma2 = 0`.
    pub phi: Option<T>,
    /// Restart budget in force at termination.
    pub np_final: u32,
    pub restarts_used: u32,
    pub las_iterations_total: u64,
    pub ledger: FlopLedger,
    /// The exponential rule wanted more restarts than the configured cap.
    pub cap_hit: bool,
    /// A search hit its iteration cap (indicates a defect; never expected).
    pub las_cap_terminated: bool,
}

impl<T> DetectionReport<T> {
    pub fn flops(&self) -> u64 {
        self.ledger.flops()
    }
}

/// Standardized cost of a decision: how far its residual energy sits from
/// the noise-only expectation, in noise standard-deviation units:
/// `(‖y − Hd‖² − N·sigma²) / (√N·sigma²)`.
pub fn standardized_cost<T: Scalar>(
    d: &[Complex<T>],
    h: &CMat<T>,
    y: &[Complex<T>],
    sigma2: T,
) -> Result<T> {
    if !(sigma2 > T::zero()) {
        return Err(Error::ZeroNoiseVariance);
    }
    let n = h.rows();
    assert_eq!(y.len(), n);
    let hd = h.matvec(d);
    let mut res = T::zero();
    for (yi, hi) in y.iter().zip(hd.iter()) {
        res += (*yi - *hi).norm_sqr();
    }
    let nf = real_from_usize::<T>(n);
    Ok((res - nf * sigma2) / (nf.sqrt() * sigma2))
}

/// Same quantity computed in O(1) from the running quadratic cost, using
/// `‖y − Hd‖² = cost + ‖y‖²`.
pub fn standardized_cost_from_quadratic<T: Scalar>(
    cost: T,
    y_norm_sqr: T,
    n: usize,
    sigma2: T,
) -> Result<T> {
    if !(sigma2 > T::zero()) {
        return Err(Error::ZeroNoiseVariance);
    }
    let nf = real_from_usize::<T>(n);
    Ok((cost + y_norm_sqr - nf * sigma2) / (nf.sqrt() * sigma2))
}

fn np_raw<T: Scalar>(phi: T, config: &RlbConfig<T>) -> u64 {
    let v = (config.c1 * phi.exp()).to_f64().unwrap_or(f64::INFINITY);
    let v = v.max(config.np_min as f64).ceil();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64
    }
}

/// Restart budget: `ceil(max(c1·exp(phi), np_min))`, clamped to the
/// configured cap.
pub fn compute_np<T: Scalar>(phi: T, config: &RlbConfig<T>) -> u32 {
    np_raw(phi, config).min(config.max_restarts_cap as u64) as u32
}

/// Draws a restart vector: a uniform count `c` in `1..=K` of positions,
/// chosen uniformly without replacement, each overwritten by a uniform
/// alphabet draw (which may repeat the current symbol).
pub fn random_perturbation<T: Scalar, R: Rng>(
    d_start: &[usize],
    cons: &Constellation<T>,
    rng: &mut R,
) -> Vec<usize> {
    let k = d_start.len();
    let c = rng.random_range(1..=k);
    let mut pool: Vec<usize> = (0..k).collect();
    for i in 0..c {
        let j = rng.random_range(i..k);
        pool.swap(i, j);
    }
    let mut out = d_start.to_vec();
    for &idx in &pool[..c] {
        out[idx] = rng.random_range(0..cons.size());
    }
    out
}

/// Runs the full detector against a prebuilt cache. The ledger passed in
/// should already hold the cache build cost the detector is charged for.
pub fn rlb_core<T: Scalar>(
    cache: &GramCache<T>,
    sigma2: T,
    cons: &Constellation<T>,
    config: &RlbConfig<T>,
    rng: &mut ChaCha12Rng,
    ledger: &mut FlopLedger,
) -> Result<DetectionReport<T>> {
    config.validate()?;
    if sigma2 < T::zero() {
        return Err(Error::Config("negative noise variance".into()));
    }
    let k = cache.k();
    let n = cache.n();
    let max_iters = default_max_iters(k, cons.size());
    let noisy = sigma2 > T::zero();

    // Center and scale of the standardized cost, shared by every
    // evaluation.
    let nf = real_from_usize::<T>(n);
    let noise_energy = nf * sigma2;
    let phi_denom = if noisy {
        ledger.sqrt(1);
        ledger.rmul(2);
        nf.sqrt() * sigma2
    } else {
        T::one()
    };
    let phi_of = |cost: T, ledger: &mut FlopLedger| -> T {
        ledger.radd(2);
        ledger.rdiv(1);
        (cost + cache.y_norm_sqr() - noise_energy) / phi_denom
    };

    let d_start = match config.start {
        StartDetector::Mf => mf_core(cache, cons, ledger)?,
        StartDetector::Mmse => mmse_core(cache, sigma2, cons, ledger)?,
    };

    let mut best = las_search(&d_start, cache, cons, max_iters, ledger);
    let mut las_cap_terminated = best.cap_terminated;
    let mut total_iterations = best.iterations;

    let cap = config.max_restarts_cap;
    let mut phi: Option<T> = None;
    let mut raw: u64;
    let mut np: u32;
    if noisy {
        let p = phi_of(best.cost, ledger);
        phi = Some(p);
        raw = np_raw(p, config);
        np = raw.min(cap as u64) as u32;
    } else {
        // Zero residual noise: the quality metric is undefined, fall back to
        // the budget floor.
        raw = config.np_min as u64;
        np = (config.np_min).min(cap);
    }

    let mut m: u32 = 0;
    while m < np {
        m += 1;
        let d0 = random_perturbation(&d_start, cons, rng);
        let trial = las_search(&d0, cache, cons, max_iters, ledger);
        las_cap_terminated |= trial.cap_terminated;
        total_iterations += trial.iterations;
        ledger.rcmp(1);
        if trial.cost < best.cost {
            best = trial;
            if noisy {
                let p = phi_of(best.cost, ledger);
                phi = Some(p);
                raw = np_raw(p, config);
                // The budget never drops below restarts already spent.
                np = (raw.min(cap as u64) as u32).max(m);
            }
        }
    }

    Ok(DetectionReport {
        decision: best.d,
        cost: best.cost,
        phi,
        np_final: np,
        restarts_used: m,
        las_iterations_total: total_iterations,
        ledger: ledger.clone(),
        cap_hit: raw > cap as u64,
        las_cap_terminated,
    })
}

/// Full detector: builds the Gram cache, runs the anchor detection and the
/// adaptive restarts, and returns the best decision with accounting.
pub fn rlb_las_detect<T: Scalar>(
    h: &CMat<T>,
    y: &[Complex<T>],
    sigma2: T,
    cons: &Constellation<T>,
    config: &RlbConfig<T>,
    stream: &RngStream,
) -> Result<DetectionReport<T>> {
    let cache = build_gram(h, y);
    let mut ledger = FlopLedger::new();
    ledger.merge(cache.full_build_cost());
    let mut rng = stream.rng();
    rlb_core(&cache, sigma2, cons, config, &mut rng, &mut ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_channel, draw_noise, make_received, snr_to_sigma2, StreamPurpose};
    use crate::constellation::ScaleMode;
    use crate::las::{ml_cost, rel_close};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cons4() -> Constellation<f64> {
        Constellation::build_qam(4, ScaleMode::UnitEnergy).unwrap()
    }

    fn instance(
        n: usize,
        k: usize,
        snr_db: f64,
        seed: u64,
        cons: &Constellation<f64>,
    ) -> (CMat<f64>, Vec<Complex64>, Vec<usize>, f64) {
        let h = draw_channel::<f64>(n, k, &RngStream::new(seed, 0, StreamPurpose::Channel));
        let sigma2 = snr_to_sigma2(snr_db, k, cons.mean_energy());
        let mut rng = RngStream::new(seed, 0, StreamPurpose::Symbols).rng();
        let x_idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..cons.size())).collect();
        let x: Vec<Complex64> = x_idx.iter().map(|&i| cons.point(i)).collect();
        let noise = draw_noise::<f64>(n, sigma2, &RngStream::new(seed, 0, StreamPurpose::Noise));
        let y = make_received(&h, &x, &noise).unwrap();
        (h, y, x_idx, sigma2)
    }

    #[test]
    fn standardized_cost_unit_cases() {
        // N = 1, H = [1], d = [p]: residual chosen directly through y.
        let h = CMat::from_vec(1, 1, vec![c(1.0, 0.0)]);
        let p = c(1.0, 1.0);
        // ‖y − Hd‖² = 1 = N·sigma² with sigma² = 1: phi = 0.
        let y = vec![p + c(1.0, 0.0)];
        let phi = standardized_cost(&[p], &h, &y, 1.0).unwrap();
        assert!(phi.abs() < 1e-12);
        // ‖y − Hd‖² = N·sigma² + √N·sigma²: phi = 1.
        let y = vec![p + c(2.0f64.sqrt(), 0.0)];
        let phi = standardized_cost(&[p], &h, &y, 1.0).unwrap();
        assert!((phi - 1.0).abs() < 1e-12);

        assert!(matches!(
            standardized_cost(&[p], &h, &y, 0.0),
            Err(Error::ZeroNoiseVariance)
        ));
    }

    #[test]
    fn standardized_cost_routes_agree() {
        let cons = cons4();
        let (h, y, x_idx, sigma2) = instance(6, 4, 9.0, 19, &cons);
        let cache = build_gram(&h, &y);
        let x: Vec<Complex64> = x_idx.iter().map(|&i| cons.point(i)).collect();
        let direct = standardized_cost(&x, &h, &y, sigma2).unwrap();
        let cost = ml_cost(&x_idx, &cache, &cons);
        let fast = standardized_cost_from_quadratic(cost, cache.y_norm_sqr(), 6, sigma2).unwrap();
        assert!(rel_close(direct, fast, 1e-8), "{direct} vs {fast}");
    }

    #[test]
    fn standardized_cost_of_truth_has_zero_mean() {
        // phi(x_true) averages the standardized noise energy: mean 0.
        let cons = cons4();
        let n = 16usize;
        let k = 8usize;
        let sigma2 = 0.5f64;
        let h = draw_channel::<f64>(n, k, &RngStream::new(4, 0, StreamPurpose::Channel));
        let mut rng = RngStream::new(4, 0, StreamPurpose::Symbols).rng();
        let x_idx: Vec<usize> = (0..k).map(|_| rng.random_range(0..cons.size())).collect();
        let x: Vec<Complex64> = x_idx.iter().map(|&i| cons.point(i)).collect();
        let mut acc = 0.0;
        let draws = 10_000usize;
        for t in 0..draws {
            let noise = draw_noise::<f64>(
                n,
                sigma2,
                &RngStream::new(4, t as u64, StreamPurpose::Noise),
            );
            let y = make_received(&h, &x, &noise).unwrap();
            acc += standardized_cost(&x, &h, &y, sigma2).unwrap();
        }
        let mean = acc / draws as f64;
        assert!(mean.abs() < 0.05, "mean phi {mean}");
    }

    #[test]
    fn np_rule_examples() {
        let cfg = RlbConfig::<f64>::default();
        assert_eq!(compute_np(0.0, &cfg), 5);
        assert_eq!(compute_np(-5.0, &cfg), 2);
        assert_eq!(compute_np(2.0, &cfg), 37);
        // Cap clamps the unbounded rule.
        assert_eq!(compute_np(50.0, &cfg), cfg.max_restarts_cap);
    }

    #[test]
    fn perturbation_basics() {
        let cons = cons4();
        let d = vec![0usize, 1, 2, 3, 0, 1];
        let stream = RngStream::new(8, 3, StreamPurpose::Perturbation);
        let a = random_perturbation(&d, &cons, &mut stream.rng());
        let b = random_perturbation(&d, &cons, &mut stream.rng());
        assert_eq!(a, b);
        assert_eq!(a.len(), d.len());
        assert!(a.iter().all(|&s| s < cons.size()));
    }

    #[test]
    fn perturbation_changes_positions_uniformly() {
        // The observable change frequency is uniform across positions:
        // every index is selected with probability E[c]/K and a selected
        // index keeps its symbol with probability 1/|alphabet|.
        let cons = cons4();
        let k = 4usize;
        let d = vec![2usize; k];
        let mut rng = RngStream::new(10, 0, StreamPurpose::Perturbation).rng();
        let mut counts = [0u64; 4];
        let calls = 100_000usize;
        for _ in 0..calls {
            let out = random_perturbation(&d, &cons, &mut rng);
            for (i, (&a, &b)) in out.iter().zip(d.iter()).enumerate() {
                if a != b {
                    counts[i] += 1;
                }
            }
        }
        let total: u64 = counts.iter().sum();
        let expect = total as f64 / k as f64;
        let stat: f64 = counts
            .iter()
            .map(|&o| {
                let diff = o as f64 - expect;
                diff * diff / expect
            })
            .sum();
        // Chi-square, 3 degrees of freedom, alpha = 0.01 critical value.
        assert!(
            stat < 11.345,
            "chi-square statistic {stat}, counts {counts:?}"
        );
    }

    #[test]
    fn detector_improves_on_initial_search_and_is_deterministic() {
        let cons = cons4();
        let cfg = RlbConfig::<f64>::default();
        for seed in 0..10u64 {
            let (h, y, _, sigma2) = instance(6, 6, 7.0, 40 + seed, &cons);
            let stream = RngStream::new(seed, 9, StreamPurpose::Perturbation);
            let report = rlb_las_detect(&h, &y, sigma2, &cons, &cfg, &stream).unwrap();
            let again = rlb_las_detect(&h, &y, sigma2, &cons, &cfg, &stream).unwrap();
            assert_eq!(report.decision, again.decision);
            assert_eq!(report.cost.to_bits(), again.cost.to_bits());
            assert_eq!(report.ledger, again.ledger);
            assert_eq!(report.restarts_used, again.restarts_used);

            // Initial-search comparison: the adopted decision can only be
            // at least as good.
            let cache = build_gram(&h, &y);
            let mut scratch = FlopLedger::new();
            let d_start = mf_core(&cache, &cons, &mut scratch).unwrap();
            let plain = las_search(&d_start, &cache, &cons, 240, &mut scratch);
            assert!(report.cost <= plain.cost + 1e-12);

            // Report invariants.
            assert!(rel_close(
                report.cost,
                ml_cost(&report.decision, &cache, &cons),
                1e-8
            ));
            assert!(report.restarts_used <= report.np_final);
            assert!(report.np_final <= cfg.max_restarts_cap);
            assert!(!report.las_cap_terminated);
        }
    }

    #[test]
    fn zero_cap_degenerates_to_plain_search() {
        let cons = cons4();
        let cfg = RlbConfig::<f64> {
            max_restarts_cap: 0,
            ..Default::default()
        };
        let (h, y, _, sigma2) = instance(5, 5, 8.0, 77, &cons);
        let stream = RngStream::new(77, 0, StreamPurpose::Perturbation);
        let report = rlb_las_detect(&h, &y, sigma2, &cons, &cfg, &stream).unwrap();
        assert_eq!(report.restarts_used, 0);

        let cache = build_gram(&h, &y);
        let mut scratch = FlopLedger::new();
        let d_start = mf_core(&cache, &cons, &mut scratch).unwrap();
        let plain = las_search(&d_start, &cache, &cons, 200, &mut scratch);
        assert_eq!(report.decision, plain.d);
    }

    #[test]
    fn zero_noise_uses_budget_floor() {
        let cons = cons4();
        let cfg = RlbConfig::<f64>::default();
        let h = draw_channel::<f64>(4, 3, &RngStream::new(91, 0, StreamPurpose::Channel));
        let x_idx = vec![0usize, 2, 3];
        let x: Vec<Complex64> = x_idx.iter().map(|&i| cons.point(i)).collect();
        let y = h.matvec(&x);
        let stream = RngStream::new(91, 0, StreamPurpose::Perturbation);
        let report = rlb_las_detect(&h, &y, 0.0, &cons, &cfg, &stream).unwrap();
        assert_eq!(report.decision, x_idx);
        assert_eq!(report.phi, None);
        assert_eq!(report.np_final, cfg.np_min);
        assert_eq!(report.restarts_used, cfg.np_min);
    }

    #[test]
    fn mmse_start_variant_runs() {
        let cons = cons4();
        let cfg = RlbConfig::<f64> {
            start: StartDetector::Mmse,
            ..Default::default()
        };
        let (h, y, _, sigma2) = instance(6, 6, 8.0, 55, &cons);
        let stream = RngStream::new(55, 0, StreamPurpose::Perturbation);
        let report = rlb_las_detect(&h, &y, sigma2, &cons, &cfg, &stream).unwrap();
        let cache = build_gram(&h, &y);
        assert!(rel_close(
            report.cost,
            ml_cost(&report.decision, &cache, &cons),
            1e-8
        ));
    }

    #[test]
    fn oracle_match_smoke() {
        use crate::detect::ml_oracle_core;
        let cons = cons4();
        let cfg = RlbConfig::<f64>::default();
        let trials = 300u64;
        let mut matches = 0u64;
        for t in 0..trials {
            let (h, y, _, sigma2) = instance(4, 4, 12.0, 10_000 + t, &cons);
            let cache = build_gram(&h, &y);
            let stream = RngStream::new(1, t, StreamPurpose::Perturbation);
            let mut rng = stream.rng();
            let mut ledger = FlopLedger::new();
            let report = rlb_core(&cache, sigma2, &cons, &cfg, &mut rng, &mut ledger).unwrap();
            let (_, oracle_cost) = ml_oracle_core(&cache, &cons, &mut FlopLedger::new()).unwrap();
            if rel_close(report.cost, oracle_cost, 1e-8) {
                matches += 1;
            }
        }
        let frac = matches as f64 / trials as f64;
        assert!(frac >= 0.95, "oracle match fraction {frac}");
    }
}
