//! Instrumented floating-point operation accounting.
//!
//! Detectors count the arithmetic they perform in an operation-class ledger;
//! a fixed cost model converts class counts into flops. The model, applied
//! uniformly to every detector:
//!
//! | class                     | flops |
//! |---------------------------|-------|
//! | complex multiply          | 6     |
//! | complex add/subtract      | 2     |
//! | real multiply             | 1     |
//! | real add/subtract         | 1     |
//! | real compare              | 1     |
//! | real divide               | 4     |
//! | square root               | 8     |
//!
//! Derived conventions: `|z|^2` is 2 real multiplies + 1 real add,
//! `Re(a* b)` is 2 real multiplies + 1 real add, a complex-by-real scaling
//! is 2 real multiplies, and a complex-by-real division is 2 real divides.
//! Transcendental calls in the restart stop rule (one `exp` per adoption
//! event) fall outside the model and are not counted.

/// Per-operation-class counters. Counters are additive across merges, so
/// per-trial ledgers can be combined in any grouping.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlopLedger {
    pub cmul: u64,
    pub cadd: u64,
    pub rmul: u64,
    pub radd: u64,
    pub rcmp: u64,
    pub rdiv: u64,
    pub sqrt: u64,
}

pub const CMUL_FLOPS: u64 = 6;
pub const CADD_FLOPS: u64 = 2;
pub const RMUL_FLOPS: u64 = 1;
pub const RADD_FLOPS: u64 = 1;
pub const RCMP_FLOPS: u64 = 1;
pub const RDIV_FLOPS: u64 = 4;
pub const SQRT_FLOPS: u64 = 8;

impl FlopLedger {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn cmul(&mut self, n: u64) {
        self.cmul += n;
    }

    #[inline]
    pub fn cadd(&mut self, n: u64) {
        self.cadd += n;
    }

    #[inline]
    pub fn rmul(&mut self, n: u64) {
        self.rmul += n;
    }

    #[inline]
    pub fn radd(&mut self, n: u64) {
        self.radd += n;
    }

    #[inline]
    pub fn rcmp(&mut self, n: u64) {
        self.rcmp += n;
    }

    #[inline]
    pub fn rdiv(&mut self, n: u64) {
        self.rdiv += n;
    }

    #[inline]
    pub fn sqrt(&mut self, n: u64) {
        self.sqrt += n;
    }

    /// Counts one `|z|^2` evaluation.
    #[inline]
    pub fn norm_sqr(&mut self, n: u64) {
        self.rmul += 2 * n;
        self.radd += n;
    }

    /// Counts one `Re(a* b)` evaluation.
    #[inline]
    pub fn re_prod(&mut self, n: u64) {
        self.rmul += 2 * n;
        self.radd += n;
    }

    pub fn merge(&mut self, other: &FlopLedger) {
        self.cmul += other.cmul;
        self.cadd += other.cadd;
        self.rmul += other.rmul;
        self.radd += other.radd;
        self.rcmp += other.rcmp;
        self.rdiv += other.rdiv;
        self.sqrt += other.sqrt;
    }

    /// Total flops under the documented cost model.
    pub fn flops(&self) -> u64 {
        self.cmul * CMUL_FLOPS
            + self.cadd * CADD_FLOPS
            + self.rmul * RMUL_FLOPS
            + self.radd * RADD_FLOPS
            + self.rcmp * RCMP_FLOPS
            + self.rdiv * RDIV_FLOPS
            + self.sqrt * SQRT_FLOPS
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_model_weights() {
        let mut l = FlopLedger::new();
        l.cmul(1);
        l.cadd(1);
        l.rmul(1);
        l.radd(1);
        l.rcmp(1);
        l.rdiv(1);
        l.sqrt(1);
        assert_eq!(l.flops(), 6 + 2 + 1 + 1 + 1 + 4 + 8);
    }

    #[test]
    fn merge_is_additive_in_any_order() {
        let mut a = FlopLedger::new();
        a.cmul(3);
        a.radd(7);
        let mut b = FlopLedger::new();
        b.cmul(5);
        b.sqrt(2);

        let mut ab = a.clone();
        ab.merge(&b);
        let mut ba = b.clone();
        ba.merge(&a);
        assert_eq!(ab, ba);
        assert_eq!(ab.flops(), a.flops() + b.flops());
    }
}
