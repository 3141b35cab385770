//! Analytic AWGN single-antenna reference curve.

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Complementary error function via the Chebyshev fit of the scaled
/// exponential; fractional error below 1.2e-7 everywhere, which is ample for
/// reference curves down to very deep bit error rates.
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t
        * (-z * z - 1.26551223
            + t * (1.00002368
                + t * (0.37409196
                    + t * (0.09678418
                        + t * (-0.18628806
                            + t * (0.27886807
                                + t * (-1.13520398
                                    + t * (1.48851587 + t * (-0.82215223 + t * 0.17087277)))))))))
            .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

/// Gaussian tail probability `Q(x)`.
pub fn q_func(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Bit error probability of Gray-coded unit-energy 4-QAM on the AWGN
/// channel at per-antenna SNR `10·log10(1/sigma²)` (the single-user case of
/// the SNR convention used throughout).
pub fn qpsk_ber(snr_db: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    q_func(snr.sqrt())
}

/// SNR (dB) at which the analytic reference reaches `target` BER.
pub fn siso_snr_at_ber(target: f64) -> f64 {
    assert!(target > 0.0 && target < 0.5);
    let mut lo = -10.0f64;
    let mut hi = 40.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if qpsk_ber(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Analytic reference curve over an SNR grid. Only Gray-coded 4-QAM is
/// supported.
pub fn awgn_siso_reference<T: Scalar>(
    snr_grid_db: &[T],
    cons: &Constellation<T>,
) -> Result<Vec<(T, f64)>> {
    if cons.size() != 4 {
        return Err(Error::Config(
            "AWGN SISO reference supports Gray-coded 4-QAM only".into(),
        ));
    }
    Ok(snr_grid_db
        .iter()
        .map(|&s| (s, qpsk_ber(s.to_f64().expect("finite SNR"))))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{RngStream, StreamPurpose};
    use crate::constellation::ScaleMode;
    use rand::Rng;

    #[test]
    fn erfc_reference_values() {
        assert!((erfc(0.0) - 1.0).abs() < 1e-7);
        assert!((erfc(1.0) - 0.157_299_207_050_285).abs() < 3e-8);
        assert!((erfc(2.0) - 0.004_677_734_981_063_127).abs() < 2e-9);
        assert!((erfc(-1.0) - (2.0 - erfc(1.0))).abs() < 1e-12);
    }

    #[test]
    fn reference_curve_is_strictly_decreasing_to_zero() {
        let cons = Constellation::<f64>::build_qam(4, ScaleMode::UnitEnergy).unwrap();
        let grid: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let curve = awgn_siso_reference(&grid, &cons).unwrap();
        for w in curve.windows(2) {
            assert!(w[1].1 < w[0].1);
        }
        assert_eq!(qpsk_ber(60.0), 0.0);

        let cons16 = Constellation::<f64>::build_qam(16, ScaleMode::UnitEnergy).unwrap();
        assert!(awgn_siso_reference(&grid, &cons16).is_err());
    }

    #[test]
    fn analytic_matches_monte_carlo_at_1e3() {
        // Single-user AWGN simulation (H = 1) at the SNR where the analytic
        // curve predicts 1e-3.
        let cons = Constellation::<f64>::build_qam(4, ScaleMode::UnitEnergy).unwrap();
        let snr = siso_snr_at_ber(1e-3);
        assert!((qpsk_ber(snr) - 1e-3).abs() < 1e-6);
        let sigma2 = 10f64.powf(-snr / 10.0);
        let comp_std = (sigma2 / 2.0).sqrt();

        let mut rng = RngStream::new(2024, 0, StreamPurpose::Noise).rng();
        let symbols = 1_000_000usize;
        let mut bit_errors = 0u64;
        for _ in 0..symbols {
            let tx = rng.random_range(0..4);
            // Box-Muller in the test, independent of the library path.
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random::<f64>();
            let r = (-2.0 * u1.ln()).sqrt();
            let n_re = r * (2.0 * std::f64::consts::PI * u2).cos() * comp_std;
            let n_im = r * (2.0 * std::f64::consts::PI * u2).sin() * comp_std;
            let y = cons.point(tx) + num_complex::Complex64::new(n_re, n_im);
            let rx = cons.nearest_index(y);
            bit_errors += (cons.label(tx) ^ cons.label(rx)).count_ones() as u64;
        }
        let ber = bit_errors as f64 / (2.0 * symbols as f64);
        assert!(
            (ber - 1e-3).abs() / 1e-3 < 0.10,
            "simulated {ber:.2e} vs analytic 1e-3"
        );
    }
}
