//! Scalar kernels: digamma, log-gamma, harmonic numbers and their analytic
//! extension `h(z) = ψ(z + 1) + γ`.
//!
//! Every closed-form expectation in [`crate::expectation`] is a weighted sum of
//! harmonic numbers evaluated at (sums of) concentration parameters, so this
//! module sets the accuracy floor for the whole crate.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

/// Above this index `harmonic_int` switches from summation to digamma.
pub const HARMONIC_SUM_CUTOFF: u64 = 100_000;

/// Integer arguments of the internal `h` up to this size are summed exactly.
const SMALL_INT_SUM: u64 = 64;

/// Digamma arguments are lifted above this value before the asymptotic series.
const ASYMPTOTIC_THRESHOLD: f64 = 10.0;

/// Returns γ to full double precision.
pub fn euler_gamma() -> f64 {
    EULER_GAMMA
}

/// The digamma function ψ(x) = d/dx log Γ(x) for x > 0.
pub fn digamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    Ok(digamma_pos(x))
}

/// Digamma without the domain check. Callers guarantee `x > 0`.
pub(crate) fn digamma_pos(mut x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut shift = 0.0;
    while x < ASYMPTOTIC_THRESHOLD {
        shift += 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli tail: B_{2k} / (2k x^{2k}) for k = 1..7, Horner in 1/x^2.
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    x.ln() - 0.5 * inv - tail - shift
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma_pos(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// The k-th harmonic number `1 + 1/2 + … + 1/k`, with `h(0) = 0`.
///
/// Exact (compensated) summation up to [`HARMONIC_SUM_CUTOFF`], the digamma
/// route above it.
pub fn harmonic_int(k: u64) -> f64 {
    if k > HARMONIC_SUM_CUTOFF {
        return digamma_pos(k as f64 + 1.0) + EULER_GAMMA;
    }
    // smallest terms first
    let mut sum = KahanSum::default();
    for j in (1..=k).rev() {
        sum.add(1.0 / j as f64);
    }
    sum.value()
}

/// Real-analytic extension of the harmonic numbers, `h(z) = ψ(z + 1) + γ`,
/// defined for z > −1.
pub fn harmonic_real(z: f64) -> Result<f64> {
    if !(z > -1.0) || !z.is_finite() {
        return Err(Error::Domain(format!(
            "harmonic extension requires z > -1, got {z}"
        )));
    }
    Ok(harmonic(z))
}

/// `h(z)` without the domain check; callers guarantee z > −1.
pub(crate) fn harmonic(z: f64) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    if z >= 1.0 && z <= SMALL_INT_SUM as f64 && z.fract() == 0.0 {
        return harmonic_int(z as u64);
    }
    digamma_pos(z + 1.0) + EULER_GAMMA
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn harmonic_small_values() {
        assert_eq!(harmonic_int(0), 0.0);
        assert_eq!(harmonic_int(1), 1.0);
        assert_eq!(harmonic_int(2), 1.5);
        assert_relative_eq!(harmonic_int(6), 49.0 / 20.0, max_relative = 1e-15);
    }

    #[test]
    fn harmonic_extension_values() {
        assert_eq!(harmonic_real(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            harmonic_real(0.5).unwrap(),
            2.0 - 2.0 * std::f64::consts::LN_2,
            max_relative = 1e-13
        );
        assert_relative_eq!(harmonic_real(3.0).unwrap(), 11.0 / 6.0, max_relative = 1e-15);
        assert!(harmonic_real(-1.0).is_err());
        assert!(harmonic_real(-2.5).is_err());
        assert!(harmonic_real(f64::NAN).is_err());
        // h(-1/2) = -2 log 2
        assert_relative_eq!(
            harmonic_real(-0.5).unwrap(),
            -2.0 * std::f64::consts::LN_2,
            max_relative = 1e-13
        );
    }

    #[test]
    fn digamma_known_values() {
        assert_relative_eq!(digamma(1.0).unwrap(), -EULER_GAMMA, max_relative = 1e-15);
        // near the positive root ψ(1.4616…) = 0
        assert!(digamma(1.461_632_144_968_362_3).unwrap().abs() < 1e-15);
        assert_relative_eq!(digamma(2.0).unwrap(), 1.0 - EULER_GAMMA, max_relative = 1e-15);
        // ψ(1/2) = -γ - 2 log 2
        assert_relative_eq!(
            digamma(0.5).unwrap(),
            -EULER_GAMMA - 2.0 * std::f64::consts::LN_2,
            max_relative = 1e-14
        );
        assert!(digamma(0.0).is_err());
        assert!(digamma(-3.0).is_err());
    }

    #[test]
    fn euler_gamma_consistency() {
        assert_relative_eq!(euler_gamma(), 0.5772156649015329, max_relative = 1e-16);
        let gap = harmonic_int(1_000_000) - (1e6f64).ln() - euler_gamma();
        assert!(gap > 0.0 && gap < 1e-6, "gap = {gap}");
        assert!((1.0 - euler_gamma() - 0.4228).abs() < 5e-5);
    }

    #[test]
    fn harmonic_cutoff_is_continuous() {
        let below = harmonic_int(HARMONIC_SUM_CUTOFF);
        let above = harmonic_int(HARMONIC_SUM_CUTOFF + 1);
        assert_relative_eq!(
            above - below,
            1.0 / (HARMONIC_SUM_CUTOFF + 1) as f64,
            max_relative = 1e-6
        );
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma_pos(1.0).abs() < 1e-15);
        assert!(ln_gamma_pos(2.0).abs() < 1e-15);
        assert_relative_eq!(ln_gamma_pos(5.0), 24f64.ln(), max_relative = 1e-14);
        assert_relative_eq!(
            ln_gamma_pos(0.5),
            0.5 * std::f64::consts::PI.ln(),
            max_relative = 1e-14
        );
        assert_relative_eq!(ln_gamma_pos(0.1), 2.252_712_651_734_206, max_relative = 1e-13);
    }

    #[test]
    fn integer_agreement_and_monotone_gap() {
        for k in 1..=10_000u64 {
            let exact = harmonic_int(k);
            let ext = digamma_pos(k as f64 + 1.0) + EULER_GAMMA;
            assert!((ext - exact).abs() <= 1e-12 * exact, "k = {k}");
            let gap = exact - (k as f64).ln();
            let next = harmonic_int(k + 1) - ((k + 1) as f64).ln();
            assert!(gap > next && next > 0.0, "k = {k}");
        }
    }

    #[test]
    fn digamma_matches_log_gamma_difference() {
        let step = 1e-5;
        for i in 0..100 {
            let x = 0.5 + 49.5 * i as f64 / 99.0;
            let fd = (ln_gamma_pos(x + step) - ln_gamma_pos(x - step)) / (2.0 * step);
            assert!((fd - digamma_pos(x)).abs() < 1e-6, "x = {x}");
        }
    }

    proptest! {
        #[test]
        fn harmonic_recurrence(z in -0.9f64..100.0) {
            let lhs = harmonic(z + 1.0) - harmonic(z);
            prop_assert!((lhs - 1.0 / (z + 1.0)).abs() <= 1e-11);
        }
    }
}
