//! Second-moment model of the synchronized sub-Poissonian laser feeding the
//! memory.
//!
//! All quantities are dimensionless (times in units of 1/Ω). Variances follow
//! the `4⟨·⟩` convention in which the vacuum level is 1.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaserSource {
    /// Pump statistics: 0 Poissonian, −1 perfectly regular, > 0 super-Poissonian.
    pub p: f64,
    /// Laser linewidth.
    pub kappa: f64,
    /// Synchronization parameter (injected to generated power ratio).
    pub mu: f64,
}

impl LaserSource {
    pub fn new(p: f64, kappa: f64, mu: f64) -> Result<Self> {
        let src = Self { p, kappa, mu };
        src.validate()?;
        Ok(src)
    }

    /// Perfectly regular pumping (p = −1) with linewidth `kappa`.
    pub fn regular(kappa: f64, mu: f64) -> Result<Self> {
        Self::new(-1.0, kappa, mu)
    }

    /// A source with `κ·T_W = 200`, the linewidth used when the exact
    /// finite-κ correlator is compared with the white-noise limit.
    pub fn with_default_kappa(p: f64, mu: f64, write_time: f64) -> Result<Self> {
        Self::new(p, 200.0 / write_time, mu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p >= -1.0) {
            return domain(format!("pump parameter p must be >= -1, got {}", self.p));
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return domain(format!("linewidth kappa must be > 0, got {}", self.kappa));
        }
        if !(self.mu.is_finite() && (0.0..1.0).contains(&self.mu)) {
            return domain(format!("synchronization mu must lie in [0, 1), got {}", self.mu));
        }
        Ok(())
    }

    /// Decay rate κ(1 − μ/2) of the normally ordered correlator.
    pub fn decay_rate(&self) -> f64 {
        self.kappa * (1.0 - 0.5 * self.mu)
    }

    /// Normally ordered ⟨:δX_in(t) δX_in(t′):⟩ of the pulse cut out by the
    /// write window [0, T_W].
    pub fn input_autocorrelation(&self, t: f64, t_prime: f64, write_time: f64) -> Result<f64> {
        if !(write_time > 0.0) {
            return domain(format!("write time must be > 0, got {write_time}"));
        }
        let inside = |s: f64| (0.0..=write_time).contains(&s);
        if !(inside(t) && inside(t_prime)) {
            return Ok(0.0);
        }
        let amp = self.p / 8.0 * self.kappa * (1.0 - self.mu) / (1.0 - 0.5 * self.mu);
        Ok(amp * (-self.decay_rate() * (t - t_prime).abs()).exp())
    }

    /// Quadrature squeezing spectrum `4⟨|δX_in,ω|²⟩`. It reaches exactly 0
    /// for perfectly regular pumping without synchronization (p = −1, μ = 0)
    /// at ω = 0.
    pub fn input_spectrum(&self, omega: f64) -> Result<f64> {
        let k2 = self.kappa * self.kappa;
        let d = 1.0 - 0.5 * self.mu;
        let value = 1.0 + self.p * k2 * (1.0 - self.mu) / (k2 * d * d + omega * omega);
        if !(value >= 0.0) {
            return domain(format!("input spectrum {value} is negative at omega = {omega}"));
        }
        Ok(value)
    }

    /// White-noise strength `p(1 − μ)/(1 − μ/2)²` that replaces the correlator
    /// when κT_W ≫ 1.
    pub fn noise_coefficient(&self) -> f64 {
        let d = 1.0 - 0.5 * self.mu;
        self.p * (1.0 - self.mu) / (d * d)
    }

    /// The minimum-uncertainty partner `1/S_X(ω)` of the X spectrum, used as
    /// the default Y-quadrature spectrum of the source.
    pub fn conjugate_spectrum(&self, omega: f64) -> Result<f64> {
        let s = self.input_spectrum(omega)?;
        if s == 0.0 {
            return domain(format!("perfect squeezing at omega = {omega} has no finite conjugate"));
        }
        Ok(1.0 / s)
    }
}

/// How the source correlator enters the protocol formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseModel {
    /// δ-correlated limit κT_W → ∞.
    #[default]
    WhiteNoise,
    /// Finite-κ exponential correlator, integrated exactly on the grid.
    ExactSource,
}

/// `∫₀ᵀ κ e^{−κ|t_m − s|} f(s) ds` at every grid point, treating `f` as
/// piecewise linear between samples. Exact for the linear interpolant, so it
/// stays accurate when 1/κ is comparable to the step.
pub fn exponential_smoothing(values: &[f64], step: f64, kappa: f64) -> Vec<f64> {
    let n = values.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    let e = (-kappa * step).exp();
    let one_minus_e = -(-kappa * step).exp_m1();
    // weight of the sample at the far end of an interval, relative to the
    // near-end weight (1 − e)
    let ramp = (step - one_minus_e / kappa) / step;
    let mut forward = 0.0;
    for m in 1..n {
        let (f0, f1) = (values[m - 1], values[m]);
        forward = e * forward + f0 * one_minus_e + (f1 - f0) * ramp;
        out[m] += forward;
    }
    let mut backward = 0.0;
    for m in (0..n - 1).rev() {
        let (f0, f1) = (values[m + 1], values[m]);
        backward = e * backward + f0 * one_minus_e + (f1 - f0) * ramp;
        out[m] += backward;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn poissonian_pump_has_no_normal_ordered_correlation() {
        let s = LaserSource::new(0.0, 50.0, 0.1).unwrap();
        assert_eq!(s.input_autocorrelation(1.0, 2.0, 5.5).unwrap(), 0.0);
        assert_eq!(s.input_spectrum(3.0).unwrap(), 1.0);
        assert_eq!(s.noise_coefficient(), 0.0);
    }

    #[test]
    fn window_cuts_the_correlator() {
        let s = LaserSource::new(-1.0, 100.0, 0.1).unwrap();
        assert_eq!(s.input_autocorrelation(-1.0, 1.0, 5.5).unwrap(), 0.0);
        assert_eq!(s.input_autocorrelation(1.0, 6.0, 5.5).unwrap(), 0.0);
    }

    #[test]
    fn equal_time_correlator() {
        let s = LaserSource::new(-1.0, 100.0, 0.1).unwrap();
        let v = s.input_autocorrelation(1.0, 1.0, 5.5).unwrap();
        let expected = -(1.0 / 8.0) * 100.0 * 0.9 / 0.95;
        assert!((v - expected).abs() < 1e-12);
        assert!((v + 11.842105263157894).abs() < 1e-9);
    }

    #[test]
    fn maximum_squeezing_at_zero_frequency() {
        let s = LaserSource::new(-1.0, 100.0, 0.1).unwrap();
        let v = s.input_spectrum(0.0).unwrap();
        let limit = 0.1f64.powi(2) / 4.0 / (1.0 - 0.05f64).powi(2);
        assert!((v - limit).abs() < 1e-15);
        assert!((v - 0.002770083).abs() < 1e-9);
    }

    #[test]
    fn unsynchronized_regular_pumping_is_perfectly_squeezed() {
        let s = LaserSource::new(-1.0, 100.0, 0.0).unwrap();
        assert_eq!(s.input_spectrum(0.0).unwrap(), 0.0);
        assert!(s.conjugate_spectrum(0.0).is_err());
        assert_eq!(s.conjugate_spectrum(100.0).unwrap(), 2.0);
    }

    #[test]
    fn half_width_point() {
        let s = LaserSource::new(-1.0, 40.0, 0.0).unwrap();
        assert!((s.input_spectrum(40.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn noise_coefficients() {
        assert_eq!(LaserSource::new(-1.0, 1.0, 0.0).unwrap().noise_coefficient(), -1.0);
        let c = LaserSource::new(-1.0, 1.0, 0.1).unwrap().noise_coefficient();
        assert!((c + 0.9 / 0.9025).abs() < 1e-15);
        assert!((c + 0.99723).abs() < 1e-5);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(LaserSource::new(-1.5, 1.0, 0.0).is_err());
        assert!(LaserSource::new(0.0, 0.0, 0.0).is_err());
        assert!(LaserSource::new(0.0, 1.0, 1.0).is_err());
        assert!(LaserSource::new(0.0, 1.0, -0.1).is_err());
    }

    /// Direct double sum of the windowed correlator against exp(iω(t − t′)).
    fn brute_force_spectrum(s: &LaserSource, t_w: f64, n: usize, omega: f64) -> f64 {
        let h = t_w / (n - 1) as f64;
        let w = |j: usize| if j == 0 || j == n - 1 { 0.5 * h } else { h };
        let mut acc = 0.0;
        for a in 0..n {
            let ta = a as f64 * h;
            for b in 0..n {
                let tb = b as f64 * h;
                let c = s.input_autocorrelation(ta, tb, t_w).unwrap();
                acc += w(a) * w(b) * c * (omega * (ta - tb)).cos();
            }
        }
        acc / t_w
    }

    #[test]
    fn wiener_khinchin_consistency() {
        let t_w = 5.5;
        let s = LaserSource::with_default_kappa(-1.0, 0.1, t_w).unwrap();
        for n in [0i32, 1, 3] {
            let omega = n as f64 * 2.0 * PI / t_w;
            let normal = brute_force_spectrum(&s, t_w, 3001, omega);
            let expected = (s.input_spectrum(omega).unwrap() - 1.0) / 4.0;
            let rel = (normal - expected).abs() / expected.abs();
            assert!(rel < 0.02, "omega={omega} rel={rel}");
        }
    }

    #[test]
    fn smoothing_reproduces_constant_away_from_edges() {
        let kappa = 40.0;
        let values = vec![1.0; 401];
        let out = exponential_smoothing(&values, 0.01, kappa);
        // interior: ∫ κ e^{−κ|t−s|} ds over [0,4] ≈ 2
        assert!((out[200] - 2.0).abs() < 1e-12);
        // edge: one-sided, 1 − e^{−κT}
        assert!((out[0] - (1.0 - (-kappa * 4.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn smoothing_is_exact_for_linear_functions() {
        let kappa = 3.0;
        let h = 0.05;
        let values: Vec<f64> = (0..41).map(|j| 0.5 + 2.0 * j as f64 * h).collect();
        let out = exponential_smoothing(&values, h, kappa);
        let t = 1.0;
        let m = 20;
        // closed form of ∫₀² κ e^{−κ|t−s|} (0.5 + 2s) ds at t = 1
        let f = |s: f64| 0.5 + 2.0 * s;
        let left = f(t) - 2.0 / kappa - (-kappa * t).exp() * (f(0.0) - 2.0 / kappa);
        let right = f(t) + 2.0 / kappa - (-kappa * (2.0 - t)).exp() * (f(2.0) + 2.0 / kappa);
        assert!((out[m] - (left + right)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn spectrum_is_even(p in -1.0f64..3.0, kappa in 0.1f64..500.0, mu in 0.0f64..0.99, w in -100.0f64..100.0) {
            let s = LaserSource::new(p, kappa, mu).unwrap();
            prop_assert_eq!(s.input_spectrum(w).unwrap(), s.input_spectrum(-w).unwrap());
        }

        #[test]
        fn regular_pump_floor(kappa in 0.1f64..500.0, mu in 0.0f64..0.99, w in -100.0f64..100.0) {
            let s = LaserSource::new(-1.0, kappa, mu).unwrap();
            let floor = mu * mu / 4.0 / (1.0 - mu / 2.0).powi(2);
            prop_assert!(s.input_spectrum(w).unwrap() >= floor * (1.0 - 1e-12));
        }

        #[test]
        fn squeezed_iff_sub_poissonian(p in -1.0f64..3.0, kappa in 0.1f64..500.0, mu in 0.0f64..0.99, w in -100.0f64..100.0) {
            prop_assume!(p != 0.0);
            let s = LaserSource::new(p, kappa, mu).unwrap();
            prop_assert_eq!(s.input_spectrum(w).unwrap() < 1.0, p < 0.0);
        }
    }
}
