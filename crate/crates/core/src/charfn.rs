//! Livšic functions, characteristic functions and their normalised form.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::herglotz::WeylEvaluator;
use crate::{Complex, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VonNeumannParameter(Complex);

impl VonNeumannParameter {
    pub fn new(kappa: Complex) -> Result<Self> {
        if !(kappa.norm() < 1.0) {
            return Err(Error::InvalidArgument(format!("|kappa| must be < 1, got {kappa}")));
        }
        Ok(VonNeumannParameter(kappa))
    }

    pub fn zero() -> Self {
        VonNeumannParameter(Complex::new(0.0, 0.0))
    }

    pub fn value(&self) -> Complex {
        self.0
    }

    /// `tau = i (1 + kappa) / (1 - kappa)`, a point of the upper half-plane.
    pub fn tau(&self) -> Complex {
        Complex::i() * (1.0 + self.0) / (1.0 - self.0)
    }

    /// Inverse of [`tau`](Self::tau).
    pub fn from_tau(tau: Complex) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(Error::InvalidArgument(format!("tau {tau} must lie in C+")));
        }
        Self::new((tau - Complex::i()) / (tau + Complex::i()))
    }
}

/// `s = (M - i) / (M + i)`.
pub fn cayley(m: Complex) -> Result<Complex> {
    let den = m + Complex::i();
    if den.norm() == 0.0 {
        return Err(Error::PoleAtEvaluation);
    }
    Ok((m - Complex::i()) / den)
}

/// `M = (1/i)(s + 1)/(s - 1)`.
pub fn weyl_from_s(s: Complex) -> Result<Complex> {
    let den = s - 1.0;
    if den.norm() == 0.0 {
        return Err(Error::DegenerateValue);
    }
    Ok((s + 1.0) / (den * Complex::i()))
}

/// `(x - kappa) / (conj(kappa) x - 1)`, an involution of the unit disc.
pub fn kappa_shift(x: Complex, kappa: Complex) -> Complex {
    (x - kappa) / (kappa.conj() * x - 1.0)
}

pub fn livsic_s(weyl: &WeylEvaluator, z: Complex) -> Result<Complex> {
    cayley(weyl.weyl_m(z)?)
}

#[derive(Debug, Clone)]
pub struct CharEvaluator {
    pub weyl: WeylEvaluator,
    pub kappa: VonNeumannParameter,
}

impl CharEvaluator {
    pub fn new(weyl: WeylEvaluator, kappa: VonNeumannParameter) -> Self {
        CharEvaluator { weyl, kappa }
    }

    pub fn livsic_s(&self, z: Complex) -> Result<Complex> {
        livsic_s(&self.weyl, z)
    }

    pub fn char_s(&self, z: Complex) -> Result<Complex> {
        Ok(kappa_shift(self.livsic_s(z)?, self.kappa.value()))
    }

    /// `(1 - conj S(i)) / (1 - S(i))` with `S(i) = kappa`.
    pub fn normalization_factor(&self) -> Complex {
        let k = self.kappa.value();
        (1.0 - k.conj()) / (1.0 - k)
    }

    pub fn normalized_s_hat(&self, z: Complex) -> Result<Complex> {
        Ok(self.normalization_factor() * self.char_s(z)?)
    }

    /// `S` at a real point from a given boundary value of `M`.
    pub fn char_s_from_weyl(&self, m: Complex) -> Result<Complex> {
        Ok(kappa_shift(cayley(m)?, self.kappa.value()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthSample {
    pub arg: f64,
    pub alpha: f64,
    /// `|z (s(z) - e^{2 i alpha})|` at `|z| = 10^k`, `k = 1..=5`.
    pub magnitudes: [f64; 5],
    pub growing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LivsicProbe {
    pub s_at_i: Complex,
    pub s_at_i_zero: bool,
    pub growth_samples: Vec<GrowthSample>,
}

impl LivsicProbe {
    pub fn all_growing(&self) -> bool {
        self.growth_samples.iter().all(|g| g.growing)
    }
}

/// Samples the two conditions on a Livšic function: `s(i) = 0`, and growth
/// of `z (s(z) - e^{2 i alpha})` along the rays `arg z = eps, pi/2, pi - eps`.
/// This is sampled evidence only.
pub fn livsic_criterion_probe(weyl: &WeylEvaluator, eps: f64) -> Result<LivsicProbe> {
    if !(eps > 0.0 && eps < PI / 2.0) {
        return Err(Error::InvalidArgument(format!("sector parameter {eps} must lie in (0, pi/2)")));
    }
    let s_at_i = livsic_s(weyl, Complex::i())?;
    let mut growth_samples = Vec::new();
    for arg in [eps, PI / 2.0, PI - eps] {
        let s_values: Vec<(Complex, Complex)> = (1..=5)
            .map(|k| {
                let z = Complex::from_polar(10f64.powi(k), arg);
                livsic_s(weyl, z).map(|s| (z, s))
            })
            .collect::<Result<_>>()?;
        for j in 0..12 {
            let alpha = PI * j as f64 / 12.0;
            let target = Complex::from_polar(1.0, 2.0 * alpha);
            let mut magnitudes = [0.0; 5];
            for (slot, (z, s)) in magnitudes.iter_mut().zip(&s_values) {
                *slot = (z * (s - target)).norm();
            }
            let growing = magnitudes.windows(2).all(|w| w[1] > w[0]);
            growth_samples.push(GrowthSample {
                arg,
                alpha,
                magnitudes,
                growing,
            });
        }
    }
    Ok(LivsicProbe {
        s_at_i,
        s_at_i_zero: s_at_i.norm() < 1e-9,
        growth_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::HomogeneousModel;
    use crate::measure::RealMeasure;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn lebesgue() -> WeylEvaluator {
        WeylEvaluator::from_measure(RealMeasure::lebesgue().normalize().unwrap()).unwrap()
    }

    #[test]
    fn livsic_examples() {
        let h = HomogeneousModel::positive(0.5).unwrap().evaluator();
        assert!(livsic_s(&h, Complex::i()).unwrap().norm() < 1e-15);
        let s = livsic_s(&h, c(0.0, 4.0)).unwrap();
        assert!((s - c(0.4, 0.2)).norm() < 1e-14, "{s}");
        for z in [c(0.0, 2.0), c(-1.0, 0.3)] {
            assert!(livsic_s(&lebesgue(), z).unwrap().norm() < 1e-9);
        }
    }

    #[test]
    fn inverse_cayley_examples() {
        assert_eq!(weyl_from_s(c(0.0, 0.0)).unwrap(), Complex::i());
        assert!((weyl_from_s(c(0.4, 0.2)).unwrap() - c(-1.0, 2.0)).norm() < 1e-14);
        assert_eq!(weyl_from_s(c(1.0, 0.0)), Err(Error::DegenerateValue));
        assert_eq!(cayley(-Complex::i()), Err(Error::PoleAtEvaluation));
    }

    #[test]
    fn characteristic_function_examples() {
        let h = HomogeneousModel::positive(0.5).unwrap().evaluator();
        let z = c(0.3, 1.7);
        let zero = CharEvaluator::new(h.clone(), VonNeumannParameter::zero());
        assert!((zero.char_s(z).unwrap() + zero.livsic_s(z).unwrap()).norm() < 1e-15);
        let k = VonNeumannParameter::new(c(0.3, 0.4)).unwrap();
        let ce = CharEvaluator::new(h, k);
        assert!((ce.char_s(Complex::i()).unwrap() - k.value()).norm() < 1e-15);
        let back = kappa_shift(ce.char_s(z).unwrap(), k.value());
        assert!((back - ce.livsic_s(z).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn normalization_factor_examples() {
        let h = HomogeneousModel::positive(0.5).unwrap().evaluator();
        let real = CharEvaluator::new(h.clone(), VonNeumannParameter::new(c(0.6, 0.0)).unwrap());
        assert_eq!(real.normalization_factor(), c(1.0, 0.0));
        let half_i = CharEvaluator::new(h, VonNeumannParameter::new(c(0.0, 0.5)).unwrap());
        assert!((half_i.normalization_factor() - c(0.6, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn probe_examples() {
        let h = HomogeneousModel::positive(0.5).unwrap().evaluator();
        let p = livsic_criterion_probe(&h, 0.1).unwrap();
        assert!(p.s_at_i_zero && p.all_growing());
        assert_eq!(p.growth_samples.len(), 36);
        let p = livsic_criterion_probe(&lebesgue(), 0.1).unwrap();
        assert!(p.s_at_i_zero && p.all_growing());
        let synthetic = WeylEvaluator::constant(weyl_from_s(c(0.2, 0.1)).unwrap()).unwrap();
        assert!(!livsic_criterion_probe(&synthetic, 0.1).unwrap().s_at_i_zero);
    }

    fn disc() -> impl Strategy<Value = Complex> {
        (0.0..0.999f64, 0.0..(2.0 * PI)).prop_map(|(r, t)| Complex::from_polar(r, t))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn cayley_round_trip(s in disc()) {
            let back = cayley(weyl_from_s(s).unwrap()).unwrap();
            prop_assert!((back - s).norm() < 1e-12);
        }

        #[test]
        fn shift_is_involution(x in disc(), k in disc()) {
            let twice = kappa_shift(kappa_shift(x, k), k);
            prop_assert!((twice - x).norm() < 1e-12);
        }

        #[test]
        fn closed_form_contractive(nu in -0.95..0.95f64, x in -20.0..20.0f64, y in 1e-2..20.0f64, k in disc()) {
            let h = HomogeneousModel::positive(nu).unwrap().evaluator();
            let ce = CharEvaluator::new(h, VonNeumannParameter::new(k).unwrap());
            let z = Complex::new(x, y);
            let s = ce.livsic_s(z).unwrap();
            let big_s = ce.char_s(z).unwrap();
            prop_assert!(s.norm() < 1.0 && big_s.norm() < 1.0);
            let hat = ce.normalized_s_hat(z).unwrap();
            prop_assert!((hat.norm() - big_s.norm()).abs() < 1e-14);
        }
    }
}
