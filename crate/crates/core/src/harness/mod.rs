//! Monte Carlo BER and complexity experiments.
//!
//! Trials are distributed over a rayon pool by run index; every random draw
//! comes from a stream derived from `(master_seed, trial, purpose)`, and all
//! per-record accumulators are integers merged in run order, so the emitted
//! records are a pure function of the configuration, independent of worker
//! count and scheduling.

mod awgn;
mod output;

pub use awgn::{awgn_siso_reference, erfc, q_func, qpsk_ber, siso_snr_at_ber};
pub use output::{
    csv_string, write_csv, write_csv_to, write_plotdata, write_plotdata_to, CSV_HEADER,
};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::{
    draw_channel, draw_noise, make_received, snr_to_sigma2, RngStream, StreamPurpose,
};
use crate::constellation::{Constellation, ScaleMode};
use crate::detect::{
    build_gram, mf_core, ml_oracle_core, mmse_core, mmse_sic_core, zf_core, GramCache, ML_SPACE_CAP,
};
use crate::error::{Error, Result};
use crate::flops::FlopLedger;
use crate::las::{default_max_iters, las_search, rel_close};
use crate::rlb::{rlb_core, RlbConfig, StartDetector};
use crate::scalar::Scalar;

/// Detector identifiers accepted by the harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Mf,
    Zf,
    Mmse,
    MmseSic,
    Las,
    RlbMf,
    RlbMmse,
    Ml,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 8] = [
        DetectorKind::Mf,
        DetectorKind::Zf,
        DetectorKind::Mmse,
        DetectorKind::MmseSic,
        DetectorKind::Las,
        DetectorKind::RlbMf,
        DetectorKind::RlbMmse,
        DetectorKind::Ml,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::Mf => "mf",
            DetectorKind::Zf => "zf",
            DetectorKind::Mmse => "mmse",
            DetectorKind::MmseSic => "mmse-sic",
            DetectorKind::Las => "las",
            DetectorKind::RlbMf => "rlb-mf",
            DetectorKind::RlbMmse => "rlb-mmse",
            DetectorKind::Ml => "ml",
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .iter()
            .copied()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown detector '{s}'")))
    }
}

/// Full experiment description. Records are a pure function of this value.
#[derive(Debug, Clone)]
pub struct RunConfig<T> {
    pub k: usize,
    pub n: usize,
    pub snr_grid_db: Vec<T>,
    pub runs: u64,
    /// Symbol vectors transmitted per run; the channel stays fixed within a
    /// run unless `redraw_per_vector` is set.
    pub vectors_per_run: u64,
    pub detectors: Vec<DetectorKind>,
    pub master_seed: u64,
    pub constellation_order: usize,
    pub rlb: RlbConfig<T>,
    pub redraw_per_vector: bool,
}

impl<T: Scalar> Default for RunConfig<T> {
    fn default() -> Self {
        Self {
            k: 4,
            n: 4,
            snr_grid_db: Vec::new(),
            runs: 1000,
            vectors_per_run: 10,
            detectors: vec![DetectorKind::RlbMf],
            master_seed: 0,
            constellation_order: 4,
            rlb: RlbConfig::default(),
            redraw_per_vector: false,
        }
    }
}

impl<T: Scalar> RunConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 || self.n < self.k {
            return Err(Error::Config(format!(
                "need N >= K >= 1, got N={}, K={}",
                self.n, self.k
            )));
        }
        if self.runs < 1 || self.vectors_per_run < 1 {
            return Err(Error::Config(
                "runs and vectors_per_run must be >= 1".into(),
            ));
        }
        if self.snr_grid_db.is_empty() {
            return Err(Error::Config("empty SNR grid".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("no detectors configured".into()));
        }
        for (i, d) in self.detectors.iter().enumerate() {
            if self.detectors[..i].contains(d) {
                return Err(Error::Config(format!("duplicate detector '{d}'")));
            }
        }
        if !matches!(self.constellation_order, 4 | 16 | 64) {
            return Err(Error::UnsupportedOrder(self.constellation_order));
        }
        self.rlb.validate()?;
        if self.detectors.contains(&DetectorKind::Ml) {
            let space = (self.constellation_order as u128)
                .checked_pow(self.k as u32)
                .unwrap_or(u128::MAX);
            if space > ML_SPACE_CAP {
                return Err(Error::Config(format!(
                    "ml detector infeasible: {}^{} candidates exceed the cap",
                    self.constellation_order, self.k
                )));
            }
        }
        Ok(())
    }

    fn bits_per_vector(&self) -> u64 {
        let bps = self.constellation_order.trailing_zeros() as u64;
        self.k as u64 * bps
    }
}

/// One measured point: per (detector, SNR) error counts and averaged
/// accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord<T> {
    pub detector: DetectorKind,
    pub k: usize,
    pub n: usize,
    pub snr_db: T,
    pub bits_total: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub avg_flops_per_symbol: f64,
    pub avg_restarts: f64,
    pub avg_las_iterations: f64,
}

#[derive(Debug, Clone, Default)]
struct Acc {
    bits: u64,
    errors: u64,
    ledger: FlopLedger,
    restarts: u64,
    las_iters: u64,
    detections: u64,
    symbols: u64,
}

impl Acc {
    fn merge(&mut self, other: &Acc) {
        self.bits += other.bits;
        self.errors += other.errors;
        self.ledger.merge(&other.ledger);
        self.restarts += other.restarts;
        self.las_iters += other.las_iters;
        self.detections += other.detections;
        self.symbols += other.symbols;
    }
}

struct Outcome {
    decision: Vec<usize>,
    restarts: u64,
    las_iters: u64,
}

#[allow(clippy::too_many_arguments)]
fn run_detector<T: Scalar>(
    kind: DetectorKind,
    cache: &GramCache<T>,
    sigma2: T,
    cons: &Constellation<T>,
    rlb: &RlbConfig<T>,
    master_seed: u64,
    trial: u64,
    ledger: &mut FlopLedger,
) -> Result<Outcome> {
    // Each detector is charged the preprocessing it would compute standalone.
    match kind {
        DetectorKind::Mf => ledger.merge(cache.mf_build_cost()),
        _ => ledger.merge(cache.full_build_cost()),
    }
    let simple = |decision: Vec<usize>| Outcome {
        decision,
        restarts: 0,
        las_iters: 0,
    };
    match kind {
        DetectorKind::Mf => Ok(simple(mf_core(cache, cons, ledger)?)),
        DetectorKind::Zf => Ok(simple(zf_core(cache, cons, ledger)?)),
        DetectorKind::Mmse => Ok(simple(mmse_core(cache, sigma2, cons, ledger)?)),
        DetectorKind::MmseSic => Ok(simple(mmse_sic_core(cache, sigma2, cons, ledger)?)),
        DetectorKind::Las => {
            let d0 = mf_core(cache, cons, ledger)?;
            let out = las_search(
                &d0,
                cache,
                cons,
                default_max_iters(cache.k(), cons.size()),
                ledger,
            );
            Ok(Outcome {
                decision: out.d,
                restarts: 0,
                las_iters: out.iterations,
            })
        }
        DetectorKind::RlbMf | DetectorKind::RlbMmse => {
            let mut cfg = *rlb;
            cfg.start = if kind == DetectorKind::RlbMf {
                StartDetector::Mf
            } else {
                StartDetector::Mmse
            };
            let mut rng = RngStream::new(master_seed, trial, StreamPurpose::Perturbation).rng();
            let report = rlb_core(cache, sigma2, cons, &cfg, &mut rng, ledger)?;
            Ok(Outcome {
                decision: report.decision,
                restarts: report.restarts_used as u64,
                las_iters: report.las_iterations_total,
            })
        }
        DetectorKind::Ml => Ok(simple(ml_oracle_core(cache, cons, ledger)?.0)),
    }
}

fn run_one<T: Scalar>(
    cfg: &RunConfig<T>,
    cons: &Constellation<T>,
    snr_index: usize,
    sigma2: T,
    run: u64,
) -> Result<Vec<Acc>> {
    use rand::Rng;
    let (n, k) = (cfg.n, cfg.k);
    let trial_of =
        |v: u64| -> u64 { (snr_index as u64 * cfg.runs + run) * cfg.vectors_per_run + v };
    let mut accs = vec![Acc::default(); cfg.detectors.len()];

    let mut h = draw_channel::<T>(
        n,
        k,
        &RngStream::new(cfg.master_seed, trial_of(0), StreamPurpose::Channel),
    );
    for v in 0..cfg.vectors_per_run {
        if cfg.redraw_per_vector && v > 0 {
            h = draw_channel::<T>(
                n,
                k,
                &RngStream::new(cfg.master_seed, trial_of(v), StreamPurpose::Channel),
            );
        }
        let mut sym_rng =
            RngStream::new(cfg.master_seed, trial_of(v), StreamPurpose::Symbols).rng();
        let x_idx: Vec<usize> = (0..k)
            .map(|_| sym_rng.random_range(0..cons.size()))
            .collect();
        let x: Vec<_> = x_idx.iter().map(|&i| cons.point(i)).collect();
        let noise = draw_noise::<T>(
            n,
            sigma2,
            &RngStream::new(cfg.master_seed, trial_of(v), StreamPurpose::Noise),
        );
        let y = make_received(&h, &x, &noise)?;
        let cache = build_gram(&h, &y);

        for (di, &kind) in cfg.detectors.iter().enumerate() {
            let mut ledger = FlopLedger::new();
            let outcome = run_detector(
                kind,
                &cache,
                sigma2,
                cons,
                &cfg.rlb,
                cfg.master_seed,
                trial_of(v),
                &mut ledger,
            )?;
            let acc = &mut accs[di];
            acc.bits += cfg.bits_per_vector();
            acc.errors += cons.bit_errors(&x_idx, &outcome.decision);
            acc.ledger.merge(&ledger);
            acc.restarts += outcome.restarts;
            acc.las_iters += outcome.las_iters;
            acc.detections += 1;
            acc.symbols += k as u64;
        }
    }
    Ok(accs)
}

/// Runs the configured Monte Carlo experiment and returns one record per
/// (detector, SNR) pair, grouped by detector in configuration order.
pub fn run_trials<T: Scalar>(cfg: &RunConfig<T>) -> Result<Vec<BerRecord<T>>> {
    cfg.validate()?;
    let cons = Constellation::<T>::build_qam(cfg.constellation_order, ScaleMode::UnitEnergy)?;
    let es = cons.mean_energy();

    let mut per: Vec<Vec<Acc>> =
        vec![vec![Acc::default(); cfg.snr_grid_db.len()]; cfg.detectors.len()];
    for (si, &snr) in cfg.snr_grid_db.iter().enumerate() {
        let sigma2 = snr_to_sigma2(snr, cfg.k, es);
        let run_accs: Result<Vec<Vec<Acc>>> = (0..cfg.runs)
            .into_par_iter()
            .map(|run| run_one(cfg, &cons, si, sigma2, run))
            .collect();
        // Merge in run order; all accumulators are integer counters, so the
        // result is identical for any worker count.
        for accs in run_accs? {
            for (di, acc) in accs.iter().enumerate() {
                per[di][si].merge(acc);
            }
        }
    }

    let mut records = Vec::with_capacity(cfg.detectors.len() * cfg.snr_grid_db.len());
    for (di, &det) in cfg.detectors.iter().enumerate() {
        for (si, &snr) in cfg.snr_grid_db.iter().enumerate() {
            let acc = &per[di][si];
            records.push(BerRecord {
                detector: det,
                k: cfg.k,
                n: cfg.n,
                snr_db: snr,
                bits_total: acc.bits,
                bit_errors: acc.errors,
                ber: acc.errors as f64 / acc.bits as f64,
                avg_flops_per_symbol: acc.ledger.flops() as f64 / acc.symbols as f64,
                avg_restarts: acc.restarts as f64 / acc.detections as f64,
                avg_las_iterations: acc.las_iters as f64 / acc.detections as f64,
            });
        }
    }
    Ok(records)
}

/// [`run_trials`] on a dedicated pool with the given worker count.
pub fn run_trials_with_workers<T: Scalar>(
    cfg: &RunConfig<T>,
    workers: usize,
) -> Result<Vec<BerRecord<T>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_trials(cfg))
}

/// One entry of a complexity sweep: the operating point is the lowest grid
/// SNR whose measured BER meets the target. `None` fields mean the target
/// was unreachable within the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint<T> {
    pub k: usize,
    pub snr_db: Option<T>,
    pub ber: Option<f64>,
    pub avg_flops_per_symbol: Option<f64>,
}

/// Measures average flops per detected symbol at the SNR operating point
/// reaching `target_ber`, for each system size in `k_list` (with N = K).
///
/// The template supplies the SNR search grid (ascending), the detector
/// (exactly one), seeds, and restart parameters; `min_bits` sets the
/// statistical effort per grid point, scaling the run count as K grows.
pub fn complexity_sweep<T: Scalar>(
    k_list: &[usize],
    target_ber: f64,
    template: &RunConfig<T>,
    min_bits: u64,
) -> Result<Vec<SweepPoint<T>>> {
    if template.detectors.len() != 1 {
        return Err(Error::Config(
            "complexity sweep expects exactly one detector".into(),
        ));
    }
    let mut points = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let mut cfg = template.clone();
        cfg.k = k;
        cfg.n = k;
        let bits_per_run = cfg.bits_per_vector() * cfg.vectors_per_run;
        cfg.runs = min_bits.div_ceil(bits_per_run).max(1);
        let records = run_trials(&cfg)?;
        let hit = records.iter().find(|r| r.ber <= target_ber);
        points.push(match hit {
            Some(r) => SweepPoint {
                k,
                snr_db: Some(r.snr_db),
                ber: Some(r.ber),
                avg_flops_per_symbol: Some(r.avg_flops_per_symbol),
            },
            None => SweepPoint {
                k,
                snr_db: None,
                ber: None,
                avg_flops_per_symbol: None,
            },
        });
    }
    Ok(points)
}

/// Paired comparison of the restart detector against the exhaustive oracle
/// on fresh instances.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCompareStats {
    pub trials: u64,
    /// Trials where the detector attained the oracle cost (1e-8 relative).
    pub cost_matches: u64,
    pub bits_total: u64,
    pub rlb_bit_errors: u64,
    pub ml_bit_errors: u64,
    pub avg_restarts: f64,
}

impl OracleCompareStats {
    pub fn match_fraction(&self) -> f64 {
        self.cost_matches as f64 / self.trials as f64
    }

    pub fn rlb_ber(&self) -> f64 {
        self.rlb_bit_errors as f64 / self.bits_total as f64
    }

    pub fn ml_ber(&self) -> f64 {
        self.ml_bit_errors as f64 / self.bits_total as f64
    }
}

/// Runs `trials` independent K = N instances at one SNR, detecting each with
/// the restart detector and the exhaustive oracle.
pub fn oracle_compare<T: Scalar>(
    k: usize,
    snr_db: T,
    trials: u64,
    master_seed: u64,
    rlb: &RlbConfig<T>,
) -> Result<OracleCompareStats> {
    use rand::Rng;
    let cons = Constellation::<T>::build_qam(4, ScaleMode::UnitEnergy)?;
    let sigma2 = snr_to_sigma2(snr_db, k, cons.mean_energy());

    let per_trial: Result<Vec<(bool, u64, u64, u64)>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let h = draw_channel::<T>(
                k,
                k,
                &RngStream::new(master_seed, t, StreamPurpose::Channel),
            );
            let mut sym_rng = RngStream::new(master_seed, t, StreamPurpose::Symbols).rng();
            let x_idx: Vec<usize> = (0..k)
                .map(|_| sym_rng.random_range(0..cons.size()))
                .collect();
            let x: Vec<_> = x_idx.iter().map(|&i| cons.point(i)).collect();
            let noise = draw_noise::<T>(
                k,
                sigma2,
                &RngStream::new(master_seed, t, StreamPurpose::Noise),
            );
            let y = make_received(&h, &x, &noise)?;
            let cache = build_gram(&h, &y);

            let mut ledger = FlopLedger::new();
            let mut rng = RngStream::new(master_seed, t, StreamPurpose::Perturbation).rng();
            let report = rlb_core(&cache, sigma2, &cons, rlb, &mut rng, &mut ledger)?;
            let (ml_d, ml_cost) = ml_oracle_core(&cache, &cons, &mut FlopLedger::new())?;

            let matched = rel_close(report.cost, ml_cost, 1e-8);
            let rlb_err = cons.bit_errors(&x_idx, &report.decision);
            let ml_err = cons.bit_errors(&x_idx, &ml_d);
            Ok((matched, rlb_err, ml_err, report.restarts_used as u64))
        })
        .collect();

    let mut stats = OracleCompareStats {
        trials,
        cost_matches: 0,
        bits_total: trials * k as u64 * cons.bits_per_symbol() as u64,
        rlb_bit_errors: 0,
        ml_bit_errors: 0,
        avg_restarts: 0.0,
    };
    let mut restarts_total = 0u64;
    for (matched, rlb_err, ml_err, restarts) in per_trial? {
        stats.cost_matches += matched as u64;
        stats.rlb_bit_errors += rlb_err;
        stats.ml_bit_errors += ml_err;
        restarts_total += restarts;
    }
    stats.avg_restarts = restarts_total as f64 / trials as f64;
    Ok(stats)
}

/// Log-linear interpolation of the SNR at which a BER curve crosses
/// `target`. The curve must be sorted by ascending SNR.
pub fn snr_at_ber(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    assert!(target > 0.0);
    let first = curve.first()?;
    if first.1 <= target {
        return Some(first.0);
    }
    for w in curve.windows(2) {
        let (s0, b0) = w[0];
        let (s1, b1) = w[1];
        if b0 >= target && b1 <= target {
            if b1 <= 0.0 {
                // The curve falls to zero inside this segment; the crossing
                // is somewhere before the right grid point.
                return Some(s1);
            }
            let t = (b0.ln() - target.ln()) / (b0.ln() - b1.ln());
            return Some(s0 + t * (s1 - s0));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> RunConfig<f64> {
        RunConfig {
            k: 2,
            n: 2,
            snr_grid_db: vec![6.0, 10.0],
            runs: 20,
            vectors_per_run: 2,
            detectors: vec![DetectorKind::Mf, DetectorKind::Mmse, DetectorKind::RlbMf],
            master_seed: 31,
            ..Default::default()
        }
    }

    #[test]
    fn record_shape_and_determinism() {
        let cfg = tiny_config();
        let a = run_trials(&cfg).unwrap();
        let b = run_trials(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), cfg.detectors.len() * cfg.snr_grid_db.len());
        for r in &a {
            assert_eq!(r.bits_total, cfg.runs * cfg.vectors_per_run * 2 * 2);
            assert!(r.ber >= 0.0 && r.ber <= 1.0);
            assert!(r.avg_flops_per_symbol > 0.0);
        }
        // Grouped by detector in configuration order.
        assert_eq!(a[0].detector, DetectorKind::Mf);
        assert_eq!(a[2].detector, DetectorKind::Mmse);
        assert_eq!(a[4].detector, DetectorKind::RlbMf);
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let cfg = tiny_config();
        let a = run_trials_with_workers(&cfg, 1).unwrap();
        let b = run_trials_with_workers(&cfg, 4).unwrap();
        assert_eq!(csv_string(&a).unwrap(), csv_string(&b).unwrap());
    }

    #[test]
    fn ml_without_noise_is_error_free() {
        let cfg = RunConfig::<f64> {
            k: 2,
            n: 2,
            snr_grid_db: vec![f64::INFINITY],
            runs: 30,
            vectors_per_run: 2,
            detectors: vec![DetectorKind::Ml],
            master_seed: 7,
            ..Default::default()
        };
        let records = run_trials(&cfg).unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(records[0].bit_errors, 0);
        assert_eq!(records[0].ber, 0.0);
    }

    #[test]
    fn validation_errors() {
        let mut cfg = tiny_config();
        cfg.detectors = vec![DetectorKind::Ml];
        cfg.k = 12;
        cfg.n = 12;
        assert!(matches!(run_trials(&cfg), Err(Error::Config(_))));

        let mut cfg = tiny_config();
        cfg.snr_grid_db.clear();
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.detectors.push(DetectorKind::Mf);
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.constellation_order = 32;
        assert!(cfg.validate().is_err());

        let mut cfg = tiny_config();
        cfg.n = 1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn detector_kind_strings_round_trip() {
        for d in DetectorKind::ALL {
            assert_eq!(d.as_str().parse::<DetectorKind>().unwrap(), d);
        }
        assert!("qrm-mld".parse::<DetectorKind>().is_err());
    }

    #[test]
    fn snr_crossing_interpolation() {
        let curve = vec![(4.0, 1e-1), (6.0, 1e-2), (8.0, 1e-3), (10.0, 1e-4)];
        let s = snr_at_ber(&curve, 1e-3).unwrap();
        assert!((s - 8.0).abs() < 1e-12);
        let s = snr_at_ber(&curve, 3e-3).unwrap();
        assert!(s > 6.0 && s < 8.0);
        assert_eq!(snr_at_ber(&curve, 1e-6), None);
        assert_eq!(snr_at_ber(&curve, 0.5), Some(4.0));
        let with_zero = vec![(4.0, 1e-1), (6.0, 0.0)];
        assert_eq!(snr_at_ber(&with_zero, 1e-3), Some(6.0));
    }

    #[test]
    fn sweep_reports_missing_points() {
        // A grid capped at very low SNR cannot reach 1e-4 with MF.
        let template = RunConfig::<f64> {
            snr_grid_db: vec![0.0],
            vectors_per_run: 2,
            detectors: vec![DetectorKind::Mf],
            master_seed: 5,
            ..Default::default()
        };
        let points = complexity_sweep(&[2], 1e-4, &template, 2_000).unwrap();
        assert_eq!(points.len(), 1);
        assert_eq!(points[0].k, 2);
        assert!(points[0].avg_flops_per_symbol.is_none());

        let mut bad = template.clone();
        bad.detectors.push(DetectorKind::Mmse);
        assert!(complexity_sweep(&[2], 1e-2, &bad, 1_000).is_err());
    }

    #[test]
    fn oracle_compare_smoke() {
        let stats = oracle_compare(2, 10.0f64, 50, 3, &RlbConfig::default()).unwrap();
        assert_eq!(stats.trials, 50);
        assert_eq!(stats.bits_total, 50 * 2 * 2);
        assert!(stats.match_fraction() > 0.9);
        assert!(stats.ml_ber() <= stats.rlb_ber() + 0.05);
    }
}
