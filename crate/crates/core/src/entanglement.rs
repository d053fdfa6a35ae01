//! Duan-criterion bookkeeping on Gaussian second-moment tables.
//!
//! Moments here are raw `⟨|δX|²⟩` values, so the vacuum level is 1/4 and a
//! Duan value below 1 certifies entanglement. X and Y quadratures are
//! independent by construction: the table has no slot for X–Y cross moments,
//! so the cross terms the criterion would otherwise carry vanish identically.
//!
//! Spectral amplitudes of a real quadrature obey `X_{−ω} = X_ω*`, and
//! stationarity makes `⟨X_a X_b⟩` vanish unless `a + b = 0`. Same-beam moments
//! are therefore fully described by the variances; only beam-to-beam cross
//! moments need explicit index pairs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::protocols::SpectralCurve;

pub const VACUUM: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Beam {
    First,
    Second,
}

impl Beam {
    fn slot(self) -> usize {
        match self {
            Beam::First => 0,
            Beam::Second => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossMoment {
    /// Grain index on the first beam.
    pub first: i64,
    /// Grain index on the second beam.
    pub second: i64,
    pub x: f64,
    pub y: f64,
}

/// Second moments of two beams on the signed grain scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadratureSecondMoments {
    pub grain: f64,
    /// `⟨|δX_{i,n}|²⟩` per beam, keyed by grain index.
    variance_x: [BTreeMap<i64, f64>; 2],
    variance_y: [BTreeMap<i64, f64>; 2],
    /// `⟨δX_{1,a} δX_{2,b}⟩` and `⟨δY_{1,a} δY_{2,b}⟩` keyed by `(a, b)`.
    #[serde(serialize_with = "cross_as_list")]
    cross: BTreeMap<(i64, i64), (f64, f64)>,
}

fn cross_as_list<S: serde::Serializer>(
    cross: &BTreeMap<(i64, i64), (f64, f64)>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(cross.iter().map(|(&(first, second), &(x, y))| CrossMoment { first, second, x, y }))
}

impl QuadratureSecondMoments {
    pub fn new(grain: f64) -> Result<Self> {
        if !(grain.is_finite() && grain > 0.0) {
            return domain(format!("grain must be > 0, got {grain}"));
        }
        Ok(Self {
            grain,
            variance_x: Default::default(),
            variance_y: Default::default(),
            cross: BTreeMap::new(),
        })
    }

    /// Two uncorrelated vacuum beams on indices `−h..=h`.
    pub fn vacuum(grain: f64, half_width: i64) -> Result<Self> {
        let mut m = Self::new(grain)?;
        for n in -half_width..=half_width {
            for beam in [Beam::First, Beam::Second] {
                m.set_variances(beam, n, VACUUM, VACUUM)?;
            }
        }
        Ok(m)
    }

    /// Two beams carrying the same signal on top of independent vacua, as the
    /// two spin waves after writing or the two successively retrieved pulses.
    ///
    /// `spectrum` gives `4⟨|δX_n|²⟩` of each beam. The normally ordered part is
    /// shared, so it reappears as the cross moment pairing `−n` with `n`. The
    /// Y quadrature takes the minimum-uncertainty partner `1/S`.
    pub fn correlated_twins(curve: &SpectralCurve) -> Result<Self> {
        let mut m = Self::new(curve.grain)?;
        for p in &curve.points {
            let n = (p.argument / curve.grain).round() as i64;
            let sx = p.value;
            if !(sx > 0.0) {
                return domain(format!("spectrum value {sx} is not positive"));
            }
            let sy = 1.0 / sx;
            for beam in [Beam::First, Beam::Second] {
                m.set_variances(beam, n, sx * VACUUM, sy * VACUUM)?;
            }
            m.set_cross(-n, n, (sx - 1.0) * VACUUM, (sy - 1.0) * VACUUM);
        }
        Ok(m)
    }

    /// A single beam (the first) with X spectrum `curve` and its
    /// minimum-uncertainty Y partner; the second beam is left empty.
    pub fn single_beam(curve: &SpectralCurve) -> Result<Self> {
        let mut m = Self::new(curve.grain)?;
        for p in &curve.points {
            let n = (p.argument / curve.grain).round() as i64;
            m.set_variances(Beam::First, n, p.value * VACUUM, VACUUM / p.value)?;
        }
        Ok(m)
    }

    pub fn set_variances(&mut self, beam: Beam, n: i64, x: f64, y: f64) -> Result<()> {
        if !(x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite()) {
            return domain(format!("variances must be finite and non-negative, got ({x}, {y})"));
        }
        self.variance_x[beam.slot()].insert(n, x);
        self.variance_y[beam.slot()].insert(n, y);
        Ok(())
    }

    /// Sets `⟨δX_{1,a} δX_{2,b}⟩ = x` and `⟨δY_{1,a} δY_{2,b}⟩ = y`.
    pub fn set_cross(&mut self, a: i64, b: i64, x: f64, y: f64) {
        self.cross.insert((a, b), (x, y));
    }

    fn var(&self, beam: Beam, n: i64) -> Result<(f64, f64)> {
        let x = self.variance_x[beam.slot()].get(&n);
        let y = self.variance_y[beam.slot()].get(&n);
        match (x, y) {
            (Some(x), Some(y)) => Ok((*x, *y)),
            _ => domain(format!("no moments for {beam:?} beam at grain index {n}")),
        }
    }

    /// Missing pairs are uncorrelated.
    fn cross(&self, a: i64, b: i64) -> (f64, f64) {
        self.cross.get(&(a, b)).copied().unwrap_or((0.0, 0.0))
    }

    /// Flips the sign of both quadratures of one beam. Variances are even in
    /// the sign, so only the cross moments change, whichever beam is flipped.
    pub fn flip_one_beam(&self) -> Self {
        let mut m = self.clone();
        for v in m.cross.values_mut() {
            *v = (-v.0, -v.1);
        }
        m
    }

    pub fn index_of(&self, omega: f64) -> Result<i64> {
        crate::numerics::grain_index(omega, self.grain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CanonicalMoments {
    pub q: f64,
    pub p: f64,
}

/// `⟨δQ²⟩` and `⟨δP²⟩` of the canonical pair built from the `±ω` sidebands of
/// one beam: `Q = ½(X_ω + X_{−ω}) − (1/2i)(Y_ω − Y_{−ω})` and
/// `P = (1/2i)(X_ω − X_{−ω}) + ½(Y_ω + Y_{−ω})`.
///
/// Away from ω = 0 both mix X and Y evenly. At ω = 0 the sidebands coincide
/// and `Q`, `P` reduce to `X₀`, `Y₀`.
pub fn canonical_from_quadratures(m: &QuadratureSecondMoments, beam: Beam, omega: f64) -> Result<CanonicalMoments> {
    let n = m.index_of(omega)?;
    let (xp, yp) = m.var(beam, n)?;
    let (xm, ym) = m.var(beam, -n)?;
    if n == 0 {
        return Ok(CanonicalMoments { q: xp, p: yp });
    }
    let mixed = 0.25 * (xp + xm) + 0.25 * (yp + ym);
    Ok(CanonicalMoments { q: mixed, p: mixed })
}

/// `D₁ = ⟨|δX_{1,ω} + δX_{2,−ω}|²⟩ + ⟨|δY_{1,ω} − δY_{2,−ω}|²⟩`.
pub fn duan_same_frequency(m: &QuadratureSecondMoments, omega: f64) -> Result<f64> {
    let n = m.index_of(omega)?;
    let (x1, y1) = m.var(Beam::First, n)?;
    let (x2, y2) = m.var(Beam::Second, -n)?;
    // ⟨δX_{1,ω}* δX_{2,−ω}⟩ = ⟨δX_{1,−ω} δX_{2,−ω}⟩
    let (cx, cy) = m.cross(-n, -n);
    Ok(x1 + x2 + 2.0 * cx + y1 + y2 - 2.0 * cy)
}

/// `D₂ = ⟨|δX_{1,ω} + δX_{2,ω}|²⟩ + ⟨|δY_{1,ω} − δY_{2,ω}|²⟩`.
pub fn duan_opposite_frequency(m: &QuadratureSecondMoments, omega: f64) -> Result<f64> {
    let n = m.index_of(omega)?;
    let (x1, y1) = m.var(Beam::First, n)?;
    let (x2, y2) = m.var(Beam::Second, n)?;
    // ⟨δX_{1,ω}* δX_{2,ω}⟩ = ⟨δX_{1,−ω} δX_{2,ω}⟩
    let (cx, cy) = m.cross(-n, n);
    Ok(x1 + x2 + 2.0 * cx + y1 + y2 - 2.0 * cy)
}

/// The `ω₀ ± ω` sidebands of one multimode squeezed beam: `D = 4⟨|δX_ω|²⟩`.
pub fn duan_single_beam(m: &QuadratureSecondMoments, omega: f64) -> Result<f64> {
    let n = m.index_of(omega)?;
    Ok(4.0 * m.var(Beam::First, n)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::MemoryConfig;
    use crate::protocols::{
        centered_indices, simultaneous_readout_spectrum, spin_wave_spectrum, successive_readout_duan,
        successive_readout_spectrum, AxisKind, CurvePoint, Memory,
    };
    use crate::source_model::{LaserSource, NoiseModel};
    use proptest::prelude::*;

    const GRAIN: f64 = 0.5;

    fn curve(values: &[(i64, f64)]) -> SpectralCurve {
        SpectralCurve {
            label: "test".into(),
            axis_kind: AxisKind::Frequency,
            grain: GRAIN,
            points: values
                .iter()
                .map(|&(n, value)| CurvePoint {
                    argument: n as f64 * GRAIN,
                    value,
                })
                .collect(),
        }
    }

    #[test]
    fn vacuum_is_the_boundary() {
        let m = QuadratureSecondMoments::vacuum(GRAIN, 3).unwrap();
        for n in -3..=3 {
            let w = n as f64 * GRAIN;
            assert_eq!(duan_same_frequency(&m, w).unwrap(), 1.0);
            assert_eq!(duan_opposite_frequency(&m, w).unwrap(), 1.0);
            assert_eq!(duan_single_beam(&m, w).unwrap(), 1.0);
            let c = canonical_from_quadratures(&m, Beam::First, w).unwrap();
            assert_eq!((c.q, c.p), (0.25, 0.25));
        }
    }

    #[test]
    fn ideal_epr_pair() {
        let mut m = QuadratureSecondMoments::new(GRAIN).unwrap();
        let v = 1.0;
        for beam in [Beam::First, Beam::Second] {
            m.set_variances(beam, 1, v, v).unwrap();
            m.set_variances(beam, -1, v, v).unwrap();
        }
        // X perfectly anticorrelated and Y perfectly correlated across beams
        m.set_cross(-1, -1, -v, v);
        m.set_cross(1, -1, -v, v);
        assert_eq!(duan_same_frequency(&m, GRAIN).unwrap(), 0.0);
        assert_eq!(duan_opposite_frequency(&m, -GRAIN).unwrap(), 0.0);
    }

    #[test]
    fn twin_beams_reproduce_their_spectrum() {
        let c = curve(&[(-1, 0.4), (0, 0.3), (1, 0.4)]);
        let m = QuadratureSecondMoments::correlated_twins(&c).unwrap();
        for p in &c.points {
            let d2 = duan_opposite_frequency(&m, p.argument).unwrap();
            assert!((d2 - p.value).abs() < 1e-15);
        }
        // at ω = 0 both pairings coincide
        assert!((duan_same_frequency(&m, 0.0).unwrap() - 0.3).abs() < 1e-15);
        // elsewhere D₁ sees no same-index correlation and loses the signal
        let d1 = duan_same_frequency(&m, GRAIN).unwrap();
        assert!((d1 - 0.5 * (0.4 + 1.0 / 0.4)).abs() < 1e-15);
    }

    #[test]
    fn halving_the_correlation_moves_d2_linearly() {
        let c = curve(&[(0, 0.3), (2, 0.6), (-2, 0.6)]);
        let full = QuadratureSecondMoments::correlated_twins(&c).unwrap();
        let mut half = full.clone();
        let (cx, cy) = full.cross(-2, 2);
        half.set_cross(-2, 2, 0.5 * cx, 0.5 * cy);
        let w = 2.0 * GRAIN;
        let none = {
            let mut m = full.clone();
            m.set_cross(-2, 2, 0.0, 0.0);
            duan_opposite_frequency(&m, w).unwrap()
        };
        let d_full = duan_opposite_frequency(&full, w).unwrap();
        let d_half = duan_opposite_frequency(&half, w).unwrap();
        assert!((d_half - 0.5 * (d_full + none)).abs() < 1e-15);
    }

    #[test]
    fn single_beam_uses_x_only() {
        let c = curve(&[(-1, 0.2), (0, 0.1), (1, 0.2)]);
        let m = QuadratureSecondMoments::single_beam(&c).unwrap();
        assert!((duan_single_beam(&m, GRAIN).unwrap() - 0.2).abs() < 1e-15);
        // Q and P mix the squeezed X with the anti-squeezed Y away from zero
        let cm = canonical_from_quadratures(&m, Beam::First, GRAIN).unwrap();
        assert!((cm.q - 0.25 * 0.25 * (0.4 + 2.0 / 0.2)).abs() < 1e-15);
        let c0 = canonical_from_quadratures(&m, Beam::First, 0.0).unwrap();
        assert!((c0.q - 0.025).abs() < 1e-15);
    }

    #[test]
    fn missing_sideband_is_an_error() {
        let c = curve(&[(0, 0.3), (1, 0.4)]);
        let m = QuadratureSecondMoments::single_beam(&c).unwrap();
        assert!(canonical_from_quadratures(&m, Beam::First, GRAIN).is_err());
        assert!(duan_same_frequency(&m, 0.0).is_err());
        assert!(duan_single_beam(&m, 0.3).is_err());
    }

    #[test]
    fn input_laser_single_beam() {
        let src = LaserSource::new(-1.0, 40.0, 0.1).unwrap();
        let s = src.input_spectrum(0.0).unwrap();
        let m = QuadratureSecondMoments::single_beam(&curve(&[(0, s)])).unwrap();
        let d = duan_single_beam(&m, 0.0).unwrap();
        assert!((d - 0.0025 / 0.9025).abs() < 1e-15);
        assert!((d - 0.00277).abs() < 5e-6);
    }

    #[test]
    fn protocol_moments_reproduce_protocol_duan_values() {
        let mem = Memory::build(&MemoryConfig::new(10.0, 5.5, 129).unwrap(), 8).unwrap();
        let src = LaserSource::with_default_kappa(-1.0, 0.0, 5.5).unwrap();
        let idx = centered_indices(5);
        let nm = NoiseModel::WhiteNoise;

        let suc = successive_readout_spectrum(&mem, &src, nm, &idx).unwrap();
        let m = QuadratureSecondMoments::correlated_twins(&suc).unwrap();
        for p in &suc.points {
            let d = successive_readout_duan(&mem, &src, nm, p.argument).unwrap().value;
            assert!((duan_opposite_frequency(&m, p.argument).unwrap() - d).abs() < 1e-12);
        }
        let d0 = successive_readout_duan(&mem, &src, nm, 0.0).unwrap().value;
        assert!((duan_same_frequency(&m, 0.0).unwrap() - d0).abs() < 1e-12);

        let spin = spin_wave_spectrum(&mem, &src, nm, &idx).unwrap();
        let m = QuadratureSecondMoments::correlated_twins(&spin).unwrap();
        for p in &spin.points {
            assert!((duan_opposite_frequency(&m, p.argument).unwrap() - p.value).abs() < 1e-12);
        }

        let sim = simultaneous_readout_spectrum(&mem, &src, nm, &idx).unwrap();
        let m = QuadratureSecondMoments::single_beam(&sim).unwrap();
        assert!((duan_single_beam(&m, 0.0).unwrap() - sim.zero_value().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn serializes_to_json() {
        let c = curve(&[(0, 0.3)]);
        let m = QuadratureSecondMoments::correlated_twins(&c).unwrap();
        let j = serde_json::to_value(&m).unwrap();
        assert_eq!(j["cross"][0]["first"], 0);
        assert_eq!(j["grain"], GRAIN);
    }

    proptest! {
        #[test]
        fn invariant_under_joint_sign_flip(vals in proptest::collection::vec(0.05f64..3.0, 3), scale in -1.0f64..1.0) {
            let c = curve(&[(-1, vals[0]), (0, vals[1]), (1, vals[0])]);
            let mut m = QuadratureSecondMoments::correlated_twins(&c).unwrap();
            m.set_cross(-1, -1, scale * vals[2], -scale * vals[2]);
            // flipping both beams leaves every product of two beams unchanged
            let both = m.flip_one_beam().flip_one_beam();
            for n in -1..=1 {
                let w = n as f64 * GRAIN;
                prop_assert_eq!(duan_same_frequency(&m, w).unwrap(), duan_same_frequency(&both, w).unwrap());
                prop_assert_eq!(duan_opposite_frequency(&m, w).unwrap(), duan_opposite_frequency(&both, w).unwrap());
                prop_assert_eq!(duan_single_beam(&m, w).unwrap(), duan_single_beam(&both, w).unwrap());
            }
        }
    }
}
