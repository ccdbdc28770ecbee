//! The homogeneous family: multiplication by `lambda` in `L^2` with weight
//! `|lambda|^nu` on a half-line.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::charfn::cayley;
pub use crate::herglotz::ExtensionType;
use crate::herglotz::{threshold_classify, WeylEvaluator};
use crate::measure::RealMeasure;
use crate::mobius::MobiusMap;
use crate::{Complex, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfLine {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousModel {
    nu: f64,
    side: HalfLine,
}

impl HomogeneousModel {
    pub fn new(nu: f64, side: HalfLine) -> Result<Self> {
        if !(nu > -1.0 && nu < 1.0) {
            return Err(Error::InvalidArgument(format!("nu must lie in (-1, 1), got {nu}")));
        }
        Ok(HomogeneousModel { nu, side })
    }

    pub fn positive(nu: f64) -> Result<Self> {
        Self::new(nu, HalfLine::Positive)
    }

    pub fn negative(nu: f64) -> Result<Self> {
        Self::new(nu, HalfLine::Negative)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn side(&self) -> HalfLine {
        self.side
    }

    /// The unnormalised weight `|lambda|^nu d lambda` on the half-line.
    pub fn measure(&self) -> RealMeasure {
        let (lo, hi) = match self.side {
            HalfLine::Positive => (0.0, f64::INFINITY),
            HalfLine::Negative => (f64::NEG_INFINITY, 0.0),
        };
        RealMeasure::power(lo, hi, 1.0, self.nu, 0.0).expect("nu in (-1, 1)")
    }

    /// `||g_+||^2 = integral |lambda|^nu / (1 + lambda^2) d lambda`.
    pub fn norm_squared(&self) -> f64 {
        PI / (2.0 * (PI * self.nu / 2.0).cos())
    }

    pub fn normalized_measure(&self) -> RealMeasure {
        self.measure()
            .with_scale(1.0 / self.norm_squared())
            .expect("positive scale")
    }

    pub fn evaluator(&self) -> WeylEvaluator {
        WeylEvaluator::closed_form(*self)
    }

    /// Closed-form Weyl function. `z` may sit on the real axis as long as
    /// its imaginary part is `+0.0`, which selects the upper boundary value.
    pub fn closed_form_m(&self, z: Complex) -> Complex {
        let nu = self.nu;
        let log_z = z.ln();
        if nu == 0.0 {
            let l = match self.side {
                // log(-1/z) on the upper half-plane
                HalfLine::Positive => Complex::new(0.0, PI) - log_z,
                HalfLine::Negative => log_z,
            };
            return l * (2.0 / PI);
        }
        let cot = 1.0 / (PI * nu / 2.0).tan();
        let power = ((log_z - Complex::new(0.0, PI / 2.0)) * nu).exp();
        match self.side {
            HalfLine::Positive => (Complex::i() - cot) * power + cot,
            HalfLine::Negative => (Complex::i() + cot) * power - cot,
        }
    }

    /// The Weyl function as the ratio
    /// `((zA + 1)(A - z)^-1 g_+, g_+) / ||g_+||^2`, both integrals by quadrature.
    /// Returns the value and the computed `||g_+||^2`.
    pub fn ratio_of_integrals_m(&self, z: Complex) -> Result<(Complex, f64)> {
        let m = self.measure();
        let numerator = m.cauchy_integral(z)?.value;
        let norm = m.weighted_total()?.value.re;
        Ok((numerator / norm, norm))
    }
}

/// `max |s_{-nu}(z) - e^{i pi nu} s_nu(z)|` over the grid, positive side.
///
/// With `p = (z/i)^nu`, `s_nu = (p - 1)/(p - e^{i pi nu})`, and multiplying
/// numerator and denominator of `s_{-nu}` by `p e^{i pi nu}` gives the phase
/// on the `s_nu` side.
pub fn cayley_relation_check(nu: f64, grid: &[Complex]) -> Result<f64> {
    let plus = HomogeneousModel::positive(nu)?;
    let minus = HomogeneousModel::positive(-nu)?;
    let phase = Complex::from_polar(1.0, PI * nu);
    let mut worst: f64 = 0.0;
    for &z in grid {
        let s_plus = cayley(plus.closed_form_m(z))?;
        let s_minus = cayley(minus.closed_form_m(z))?;
        worst = worst.max((s_minus - phase * s_plus).norm());
    }
    Ok(worst)
}

/// `max |M_nu(-1/z) - N_{-nu}(z)|` over the grid.
pub fn mn_inversion_check(nu: f64, grid: &[Complex]) -> Result<f64> {
    let m = HomogeneousModel::positive(nu)?;
    let n = HomogeneousModel::negative(-nu)?;
    Ok(grid
        .iter()
        .map(|&z| (m.closed_form_m(-1.0 / z) - n.closed_form_m(z)).norm())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub nu: f64,
    pub analytic: ExtensionType,
    pub sampled: ExtensionType,
}

impl ExtensionReport {
    pub fn agrees(&self) -> bool {
        self.analytic == self.sampled
    }
}

/// Friedrichs for `nu >= 0`, Krein-von Neumann for `nu <= 0`, with a
/// sampled threshold cross-check of the closed form.
pub fn extension_type(h: &HomogeneousModel) -> Result<ExtensionReport> {
    if h.side != HalfLine::Positive {
        return Err(Error::InvalidArgument("extension type needs the positive half-line".into()));
    }
    let analytic = ExtensionType {
        friedrichs: h.nu >= 0.0,
        krein: h.nu <= 0.0,
    };
    let sampled = threshold_classify(&h.evaluator(), 0.0)?;
    Ok(ExtensionReport {
        nu: h.nu,
        analytic,
        sampled,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InversionDualityReport {
    pub nu: f64,
    pub mn_residual: f64,
    pub direct: ExtensionReport,
    pub dual: ExtensionReport,
    /// Threshold signature of the reflected inversion image of the model.
    pub inverted: ExtensionType,
    pub tolerance: f64,
    pub pass: bool,
}

/// Checks the inversion duality between the `nu` and `-nu` models:
/// `M_nu(-1/z) = N_{-nu}(z)`, Friedrichs at `nu`, Krein at `-nu`, and the
/// thresholds of the inverted evaluator (reflected back to the positive
/// half-line) showing the Krein signature.
pub fn verify_inversion_duality(nu: f64, grid: &[Complex]) -> Result<InversionDualityReport> {
    if !(0.0..1.0).contains(&nu) {
        return Err(Error::InvalidArgument(format!("nu must lie in [0, 1), got {nu}")));
    }
    let tolerance = 1e-10;
    let mn_residual = mn_inversion_check(nu, grid)?;
    let direct = extension_type(&HomogeneousModel::positive(nu)?)?;
    let dual = extension_type(&HomogeneousModel::positive(-nu)?)?;
    let inverted_eval = WeylEvaluator::composed(
        HomogeneousModel::positive(nu)?.evaluator(),
        MobiusMap::inversion(),
    )?
    .negated();
    let inverted = threshold_classify(&inverted_eval, 0.0)?;
    let krein_signature = ExtensionType {
        friedrichs: nu == 0.0,
        krein: true,
    };
    let pass = mn_residual < tolerance
        && direct.agrees()
        && dual.agrees()
        && direct.analytic.friedrichs
        && dual.analytic.krein
        && inverted == krein_signature;
    Ok(InversionDualityReport {
        nu,
        mn_residual,
        direct,
        dual,
        inverted,
        tolerance,
        pass,
    })
}
