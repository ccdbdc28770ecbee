//! Model triples and their images under real Möbius maps.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::charfn::{CharEvaluator, VonNeumannParameter};
use crate::herglotz::WeylEvaluator;
use crate::homogeneous::HomogeneousModel;
use crate::measure::{PointClass, RealMeasure};
use crate::mobius::{Decomposition, ExtendedReal, MobiusMap};
use crate::oracle::discretize;
use crate::{Complex, Error, Result};

/// A normalised measure with a von Neumann parameter. The Weyl evaluator is
/// measure-backed unless a closed form is supplied.
#[derive(Debug, Clone)]
pub struct ModelTriple {
    measure: Arc<RealMeasure>,
    kappa: VonNeumannParameter,
    weyl: WeylEvaluator,
}

impl ModelTriple {
    /// Finite-mass measures are accepted; see [`has_finite_mass`](Self::has_finite_mass).
    pub fn new(measure: RealMeasure, kappa: VonNeumannParameter) -> Result<Self> {
        let weyl = WeylEvaluator::from_measure(measure.clone())?;
        Ok(ModelTriple {
            measure: Arc::new(measure),
            kappa,
            weyl,
        })
    }

    /// The homogeneous model with its closed-form Weyl function.
    pub fn homogeneous(h: HomogeneousModel, kappa: VonNeumannParameter) -> Result<Self> {
        Ok(ModelTriple {
            measure: Arc::new(h.normalized_measure()),
            kappa,
            weyl: h.evaluator(),
        })
    }

    pub fn measure(&self) -> &RealMeasure {
        &self.measure
    }

    pub fn kappa(&self) -> VonNeumannParameter {
        self.kappa
    }

    pub fn weyl(&self) -> &WeylEvaluator {
        &self.weyl
    }

    /// A finite measure cannot carry a model symmetric operator; such
    /// triples are still useful as discretisation targets.
    pub fn has_finite_mass(&self) -> bool {
        !self.measure.is_infinite_mass()
    }

    pub fn char_evaluator(&self) -> CharEvaluator {
        CharEvaluator::new(self.weyl.clone(), self.kappa)
    }

    /// `p(z) = (M(z) + i(kappa+1)/(kappa-1))^-1`.
    pub fn resolvent_p(&self, z: Complex) -> Result<Complex> {
        let den = self.weyl.eval(z)? - self.kappa.tau();
        if den.norm() < 1e-12 {
            return Err(Error::ResonancePoint { z });
        }
        Ok(1.0 / den)
    }

    /// `A_hat^-1 = A^-1 - p Q` with `p = (M(0) - tau)^-1` and
    /// `(Q f)(lambda) = lambda^-1 integral f(s)/s d mu(s)`.
    pub fn inverse_rank_one(&self) -> Result<RankOneInverse> {
        match self.measure.classify_point(0.0)? {
            PointClass::QuasiRegular { has_atom: false } => {}
            _ => return Err(Error::PointNotQuasiRegular { at: 0.0 }),
        }
        let m0 = self.weyl.boundary_value(0.0)?;
        let den = m0.value - self.kappa.tau();
        if den.norm() < 1e-12 {
            return Err(Error::ResonancePoint { z: Complex::new(0.0, 0.0) });
        }
        Ok(RankOneInverse {
            p: 1.0 / den,
            m_at_zero: m0.value,
            error_estimate: m0.error_estimate,
        })
    }
}

/// `p` of the rank-one inverse formula; `Q` is the outer product of
/// `1/lambda` with itself against `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankOneInverse {
    pub p: Complex,
    pub m_at_zero: Complex,
    pub error_estimate: f64,
}

/// The image of a model triple under a chain of maps. `cumulative` maps
/// base coordinates to current ones.
#[derive(Debug, Clone)]
pub struct TransformedTriple {
    base: Arc<ModelTriple>,
    weyl: WeylEvaluator,
    kappa: VonNeumannParameter,
    cumulative: MobiusMap,
    provenance: Vec<MobiusMap>,
}

/// The bounded alternative: `f^-1(∞)` is quasi-regular, so the image of
/// the dissipative operator is bounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundedCase {
    pub omega: f64,
    /// `S(omega + i0)`, unimodular.
    pub boundary_phase: Complex,
}

#[derive(Debug, Clone)]
pub enum TransformOutcome {
    Regular(TransformedTriple),
    Bounded(BoundedCase),
}

impl TransformOutcome {
    pub fn regular(self) -> Option<TransformedTriple> {
        match self {
            TransformOutcome::Regular(t) => Some(t),
            TransformOutcome::Bounded(_) => None,
        }
    }
}

/// `kappa' = (M(w) - tau)/(conj M(w) - tau)` for `w = f^-1(i)`.
pub fn kappa_affine_of(weyl: &WeylEvaluator, kappa: VonNeumannParameter, f: &MobiusMap) -> Result<VonNeumannParameter> {
    if !f.is_affine() {
        return Err(Error::InvalidArgument("kappa_affine needs an affine map".into()));
    }
    let w = f.inverse().apply(Complex::i()).finite().expect("affine maps fix infinity only");
    if w == Complex::i() {
        return Ok(kappa);
    }
    let m = weyl.eval(w)?;
    let tau = kappa.tau();
    VonNeumannParameter::new((m - tau) / (m.conj() - tau))
}

pub fn kappa_affine(t: &ModelTriple, f: &MobiusMap) -> Result<VonNeumannParameter> {
    kappa_affine_of(&t.weyl, t.kappa, f)
}

impl TransformedTriple {
    pub fn identity(base: ModelTriple) -> Self {
        TransformedTriple {
            weyl: base.weyl.clone(),
            kappa: base.kappa,
            base: Arc::new(base),
            cumulative: MobiusMap::identity(),
            provenance: vec![],
        }
    }

    pub fn weyl(&self) -> &WeylEvaluator {
        &self.weyl
    }

    pub fn kappa(&self) -> VonNeumannParameter {
        self.kappa
    }

    pub fn base(&self) -> &ModelTriple {
        &self.base
    }

    pub fn cumulative_map(&self) -> MobiusMap {
        self.cumulative
    }

    pub fn provenance(&self) -> &[MobiusMap] {
        &self.provenance
    }

    pub fn char_evaluator(&self) -> CharEvaluator {
        CharEvaluator::new(self.weyl.clone(), self.kappa)
    }

    fn step(&self, g: &MobiusMap) -> Result<TransformedTriple> {
        let (weyl, kappa) = if g.is_identity() {
            (self.weyl.clone(), self.kappa)
        } else if g.is_affine() {
            let kappa = kappa_affine_of(&self.weyl, self.kappa, g)?;
            (WeylEvaluator::composed(self.weyl.clone(), *g)?, kappa)
        } else if g.is_inversion() {
            (WeylEvaluator::composed(self.weyl.clone(), *g)?, self.kappa)
        } else {
            return Err(Error::DecompositionFailure);
        };
        Ok(TransformedTriple {
            base: self.base.clone(),
            weyl,
            kappa,
            cumulative: g.compose(&self.cumulative),
            provenance: self.provenance.clone(),
        })
    }

    /// Classification of `F^-1(g^-1(∞))` against the base measure, where
    /// `F` is the map applied so far. `∞` is core exactly for infinite mass.
    fn classify_pole(&self, g: &MobiusMap) -> Result<(ExtendedReal, PointClass)> {
        let pole = self.cumulative.inverse().apply_ext_real(g.preimage_infinity());
        let class = match pole {
            ExtendedReal::Infinity => self.base.measure.classify_infinity(),
            ExtendedReal::Finite(x) => self.base.measure.classify_point(x)?,
        };
        Ok((pole, class))
    }

    pub fn transform(&self, g: &MobiusMap) -> Result<TransformOutcome> {
        let dec = g.decompose()?;
        if let Decomposition::ThroughInversion { omega, .. } = dec {
            let (_, class) = self.classify_pole(g)?;
            if !class.is_core() {
                if let PointClass::QuasiRegular { has_atom: true } = class {
                    return Err(Error::AtomAtPole);
                }
                let bv = self.weyl.boundary_value(omega)?;
                let phase = self.char_evaluator().char_s_from_weyl(bv.value)?;
                return Ok(TransformOutcome::Bounded(BoundedCase {
                    omega,
                    boundary_phase: phase,
                }));
            }
        }
        let mut out = self.clone();
        for s in dec.steps() {
            out = out.step(&s)?;
        }
        out.provenance.push(*g);
        Ok(TransformOutcome::Regular(out))
    }
}

pub fn transform_triple(t: &ModelTriple, f: &MobiusMap) -> Result<TransformOutcome> {
    TransformedTriple::identity(t.clone()).transform(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    I,
    Ii,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub z: Complex,
    pub lhs: Complex,
    pub rhs: Complex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub branch: Branch,
    pub omega: Option<f64>,
    pub residual: f64,
    pub grid: Vec<GridRow>,
    /// `|kappa' - kappa|` for maps that must preserve the parameter.
    pub kappa_drift: Option<f64>,
    /// Pullback against an independently pushed-forward measure, when the
    /// pushforward is representable.
    pub pullback_crosscheck: Option<f64>,
    pub boundary_phase: Option<Complex>,
    pub discretization: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceOptions {
    pub nodes: usize,
    pub quantile_cut: f64,
}

impl Default for InvarianceOptions {
    fn default() -> Self {
        InvarianceOptions {
            nodes: 4000,
            quantile_cut: 1e-4,
        }
    }
}

fn max_residual(rows: &[GridRow]) -> f64 {
    rows.iter().map(|r| (r.lhs - r.rhs).norm()).fold(0.0, f64::max)
}

pub fn verify_invariance(t: &ModelTriple, f: &MobiusMap, grid: &[Complex]) -> Result<InvarianceReport> {
    verify_invariance_with(t, f, grid, InvarianceOptions::default())
}

/// Branch (i): `S_hat_{f(t)}(f(z))` against `S_hat_t(z)`. Branch (ii): the
/// characteristic function of the bounded image, from a discretisation,
/// against `S_t(z) / S_t(omega + i0)`.
pub fn verify_invariance_with(
    t: &ModelTriple,
    f: &MobiusMap,
    grid: &[Complex],
    opts: InvarianceOptions,
) -> Result<InvarianceReport> {
    if grid.is_empty() || grid.iter().any(|z| !(z.im > 0.0)) {
        return Err(Error::InvalidArgument("grid must be a non-empty subset of C+".into()));
    }
    let original = t.char_evaluator();
    match transform_triple(t, f)? {
        TransformOutcome::Regular(image) => {
            let ce = image.char_evaluator();
            let rows: Vec<GridRow> = grid
                .par_iter()
                .map(|&z| {
                    let fz = f.apply(z).finite().expect("C+ maps into C+");
                    Ok(GridRow {
                        z,
                        lhs: ce.normalized_s_hat(fz)?,
                        rhs: original.normalized_s_hat(z)?,
                    })
                })
                .collect::<Result<_>>()?;
            let kappa_drift = f
                .is_inversion()
                .then(|| (image.kappa().value() - t.kappa().value()).norm());
            let pullback_crosscheck = if f.is_inversion() {
                inversion_crosscheck(t, image.weyl(), grid).ok()
            } else {
                None
            };
            Ok(InvarianceReport {
                branch: Branch::I,
                omega: f.preimage_infinity().finite_value(),
                residual: max_residual(&rows),
                grid: rows,
                kappa_drift,
                pullback_crosscheck,
                boundary_phase: None,
                discretization: None,
            })
        }
        TransformOutcome::Bounded(case) => {
            let model = discretize(t, opts.nodes, opts.quantile_cut)?.rank_one();
            let rows: Vec<GridRow> = grid
                .par_iter()
                .map(|&z| {
                    let fz = f.apply(z).finite().expect("C+ maps into C+");
                    Ok(GridRow {
                        z,
                        lhs: model.char_of_image(f, fz)?,
                        rhs: original.char_s(z)? / case.boundary_phase,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(InvarianceReport {
                branch: Branch::Ii,
                omega: Some(case.omega),
                residual: max_residual(&rows),
                grid: rows,
                kappa_drift: None,
                pullback_crosscheck: None,
                boundary_phase: Some(case.boundary_phase),
                discretization: Some(opts.nodes),
            })
        }
    }
}

/// `max |M'(zeta) - M_nu'(zeta)|` where `nu' = t^2 iota_* mu` is built by
/// pushforward; its Weyl function is the inversion pullback.
pub fn inversion_crosscheck(t: &ModelTriple, pulled: &WeylEvaluator, grid: &[Complex]) -> Result<f64> {
    let dual = t
        .measure()
        .pushforward(&MobiusMap::inversion())?
        .weighted_by_square()?;
    let dual = WeylEvaluator::from_measure(dual)?;
    grid.par_iter()
        .map(|&z| Ok((pulled.weyl_m(z)? - dual.weyl_m(z)?).norm()))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}
