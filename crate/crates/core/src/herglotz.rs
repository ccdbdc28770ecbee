//! Weyl-Titchmarsh functions: evaluation in the upper and lower half-planes,
//! real boundary values, and threshold behaviour.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::homogeneous::HomogeneousModel;
use crate::measure::{cauchy_kernel, RealMeasure};
use crate::mobius::{ExtendedReal, MobiusMap};
use crate::quadrature::Tolerance;
use crate::{Complex, Error, Result};

#[derive(Debug, Clone)]
pub enum Backing {
    /// Regularised Cauchy transform of a normalised measure.
    Measure(Arc<RealMeasure>),
    /// `(inner(map^-1(z)) - offset) / scale`. The affine renormalisation keeps
    /// the value at `i` equal to `i`; it is the identity when `map` fixes `i`.
    Composed {
        inner: Arc<WeylEvaluator>,
        map: MobiusMap,
        inverse: MobiusMap,
        offset: f64,
        scale: f64,
    },
    ClosedForm(HomogeneousModel),
    /// `-conj(inner(-conj z))`: the Weyl function of the reflected pair.
    Negated(Arc<WeylEvaluator>),
    Constant(Complex),
}

/// Evaluator for a Herglotz function `M` with `M(i) = i`. Immutable and
/// uncached, so it can be shared freely between threads.
#[derive(Debug, Clone)]
pub struct WeylEvaluator {
    backing: Backing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BoundaryMethod {
    DirectQuadrature,
    EpsilonExtrapolation { levels: usize },
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValue {
    pub value: Complex,
    pub error_estimate: f64,
    pub method: BoundaryMethod,
}

/// How [`WeylEvaluator::boundary_value_with`] should reach the real axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryStrategy {
    Auto,
    Direct,
    Extrapolate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtensionType {
    pub friedrichs: bool,
    pub krein: bool,
}

const EPS0: f64 = 1e-2;
const MAX_LEVELS: usize = 20;
const SETTLE: f64 = 1e-8;

impl WeylEvaluator {
    /// Measure-backed evaluator; the measure must already be normalised.
    pub fn from_measure(m: RealMeasure) -> Result<Self> {
        m.check_weighted_finite()?;
        if !m.is_normalized(1e-9)? {
            return Err(Error::InvalidMeasure(
                "Weyl evaluator needs a measure with weighted total 1".into(),
            ));
        }
        Ok(WeylEvaluator {
            backing: Backing::Measure(Arc::new(m)),
        })
    }

    pub fn closed_form(h: HomogeneousModel) -> Self {
        WeylEvaluator {
            backing: Backing::ClosedForm(h),
        }
    }

    pub fn constant(value: Complex) -> Result<Self> {
        if !(value.im > 0.0 && value.re.is_finite() && value.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("constant Weyl value {value} must lie in C+")));
        }
        Ok(WeylEvaluator {
            backing: Backing::Constant(value),
        })
    }

    /// Weyl function of the transformed pair: the pullback through `map`,
    /// renormalised so that the result is `i` at `i`.
    pub fn composed(inner: WeylEvaluator, map: MobiusMap) -> Result<Self> {
        let inverse = map.inverse();
        let w = inverse
            .apply(Complex::i())
            .finite()
            .expect("C+ maps into C+");
        let (offset, scale) = if w == Complex::i() {
            (0.0, 1.0)
        } else {
            let m = inner.eval(w)?;
            (m.re, m.im)
        };
        Ok(Self::composed_raw(inner, map, offset, scale))
    }

    /// Plain pullback `inner(map^-1(z))` without renormalisation.
    pub fn pullback(inner: WeylEvaluator, map: MobiusMap) -> Self {
        Self::composed_raw(inner, map, 0.0, 1.0)
    }

    fn composed_raw(inner: WeylEvaluator, map: MobiusMap, offset: f64, scale: f64) -> Self {
        WeylEvaluator {
            backing: Backing::Composed {
                inner: Arc::new(inner),
                inverse: map.inverse(),
                map,
                offset,
                scale,
            },
        }
    }

    pub fn negated(self) -> Self {
        WeylEvaluator {
            backing: Backing::Negated(Arc::new(self)),
        }
    }

    pub fn backing(&self) -> &Backing {
        &self.backing
    }

    pub fn measure(&self) -> Option<&RealMeasure> {
        match &self.backing {
            Backing::Measure(m) => Some(m),
            _ => None,
        }
    }

    /// `M(z)` for any non-real `z`, using Schwarz reflection below the axis.
    pub fn eval(&self, z: Complex) -> Result<Complex> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.im == 0.0 {
            return Err(Error::InvalidArgument(format!("Weyl function needs a non-real point, got {z}")));
        }
        if z.im < 0.0 {
            return Ok(self.eval_upper(z.conj())?.conj());
        }
        self.eval_upper(z)
    }

    fn eval_upper(&self, z: Complex) -> Result<Complex> {
        match &self.backing {
            Backing::Measure(m) => Ok(m.cauchy_integral(z)?.value),
            Backing::Composed {
                inner,
                inverse,
                offset,
                scale,
                ..
            } => {
                let w = inverse.apply(z).finite().expect("C+ maps into C+");
                Ok((inner.eval(w)? - offset) / *scale)
            }
            Backing::ClosedForm(h) => Ok(h.closed_form_m(z)),
            Backing::Negated(inner) => Ok(-inner.eval(-z.conj())?.conj()),
            Backing::Constant(c) => Ok(*c),
        }
    }

    pub fn weyl_m(&self, z: Complex) -> Result<Complex> {
        if !(z.im > 0.0) {
            return Err(Error::InvalidArgument(format!("weyl_m needs Im z > 0, got {z}")));
        }
        self.eval(z)
    }

    pub fn weyl_m_reflected(&self, z: Complex) -> Result<Complex> {
        if !(z.im < 0.0) {
            return Err(Error::InvalidArgument(format!("weyl_m_reflected needs Im z < 0, got {z}")));
        }
        Ok(self.weyl_m(z.conj())?.conj())
    }

    pub fn boundary_value(&self, omega: f64) -> Result<BoundaryValue> {
        self.boundary_value_with(omega, BoundaryStrategy::Auto)
    }

    /// `M(omega + i0)`. `Auto` integrates directly when `omega` lies in a
    /// gap of the support and extrapolates `M(omega + i eps)` otherwise.
    pub fn boundary_value_with(&self, omega: f64, strategy: BoundaryStrategy) -> Result<BoundaryValue> {
        if !omega.is_finite() {
            return Err(Error::InvalidArgument(format!("boundary point {omega} must be finite")));
        }
        if strategy == BoundaryStrategy::Extrapolate {
            return self.extrapolate(omega);
        }
        match &self.backing {
            Backing::Measure(m) => {
                if m.atom_mass_at(omega).is_some() {
                    return Err(Error::AtomAtPole);
                }
                if m.in_gap(omega) {
                    let est = m.integrate(
                        |x| Complex::new(cauchy_kernel(x, Complex::new(omega, 0.0)).re, 0.0),
                        &[omega],
                        Tolerance {
                            abs: 1e-13,
                            rel: 1e-11,
                            max_panels: 20_000,
                        },
                    )?;
                    Ok(BoundaryValue {
                        value: est.value,
                        error_estimate: est.error,
                        method: BoundaryMethod::DirectQuadrature,
                    })
                } else if strategy == BoundaryStrategy::Direct {
                    Err(Error::InvalidArgument(format!(
                        "{omega} is not in a gap of the support"
                    )))
                } else {
                    self.extrapolate(omega)
                }
            }
            Backing::Composed {
                inner,
                inverse,
                offset,
                scale,
                ..
            } => {
                let ExtendedReal::Finite(x) = inverse.apply_real(omega) else {
                    return Err(Error::InvalidArgument(format!(
                        "{omega} is the image of infinity; no finite boundary value"
                    )));
                };
                let inner_bv = inner.boundary_value_with(x, strategy)?;
                Ok(BoundaryValue {
                    value: (inner_bv.value - offset) / *scale,
                    error_estimate: inner_bv.error_estimate / scale.abs(),
                    method: inner_bv.method,
                })
            }
            Backing::Negated(inner) => {
                let bv = inner.boundary_value_with(-omega, strategy)?;
                Ok(BoundaryValue {
                    value: -bv.value.conj(),
                    ..bv
                })
            }
            Backing::ClosedForm(h) => {
                let v = h.closed_form_m(Complex::new(omega, 0.0));
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "closed form has no boundary value at {omega}"
                    )));
                }
                Ok(BoundaryValue {
                    value: v,
                    error_estimate: 0.0,
                    method: BoundaryMethod::ClosedForm,
                })
            }
            Backing::Constant(c) => Ok(BoundaryValue {
                value: *c,
                error_estimate: 0.0,
                method: BoundaryMethod::ClosedForm,
            }),
        }
    }

    /// Richardson extrapolation of `M(omega + i eps_k)`, `eps_k = 2^-k eps_0`.
    fn extrapolate(&self, omega: f64) -> Result<BoundaryValue> {
        let mut table: Vec<Vec<Complex>> = Vec::with_capacity(MAX_LEVELS);
        for k in 0..MAX_LEVELS {
            let eps = EPS0 * 0.5f64.powi(k as i32);
            let mut row = vec![self.eval(Complex::new(omega, eps))?];
            for j in 1..=k {
                let f = 2f64.powi(j as i32);
                let refined = (row[j - 1] * f - table[k - 1][j - 1]) / (f - 1.0);
                row.push(refined);
            }
            if k > 0 {
                let diff = (row[k] - table[k - 1][k - 1]).norm();
                if diff < SETTLE {
                    return Ok(BoundaryValue {
                        value: row[k],
                        error_estimate: diff,
                        method: BoundaryMethod::EpsilonExtrapolation { levels: k + 1 },
                    });
                }
            }
            table.push(row);
        }
        Err(Error::ExtrapolationDivergence { omega })
    }
}

fn diverges(samples: &[f64]) -> bool {
    let last = *samples.last().expect("non-empty ladder");
    if last.abs() > 1e3 {
        return true;
    }
    // Successive increments that do not shrink indicate at least
    // logarithmic divergence along the geometric ladder.
    let diffs: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let ratios: Vec<f64> = diffs.windows(2).map(|d| d[1] / d[0]).collect();
    ratios.len() >= 2 && ratios[ratios.len() - 2..].iter().all(|r| *r >= 0.9)
}

/// Samples `M` on geometric ladders towards `-infinity` and towards the
/// spectral bottom from below. Friedrichs: `M -> -infinity` at `-infinity`.
/// Krein-von Neumann: `M -> +infinity` at the bottom.
pub fn threshold_classify(e: &WeylEvaluator, spectral_bottom: f64) -> Result<ExtensionType> {
    let real_at = |x: f64| -> Result<f64> { Ok(e.boundary_value(x)?.value.re) };

    let far: Vec<f64> = (1..=6)
        .map(|k| real_at(spectral_bottom.min(0.0) - 10f64.powi(k)))
        .collect::<Result<_>>()?;
    if far.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InconclusiveThreshold);
    }
    let near: Vec<f64> = (1..=6)
        .map(|k| real_at(spectral_bottom - 10f64.powi(-k)))
        .collect::<Result<_>>()?;
    if near.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InconclusiveThreshold);
    }
    Ok(ExtensionType {
        friedrichs: diverges(&far),
        krein: diverges(&near),
    })
}
