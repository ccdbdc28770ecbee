//! Parametric Borel measures on the real line.
//!
//! A [`RealMeasure`] is a finite list of atoms plus density pieces, all
//! multiplied by a global `scale`. Integration against the continuous part
//! runs each piece in a local chart that absorbs its algebraic behaviour:
//!
//! * next to a power-law anchor, `lambda = anchor +/- x^(1/(1+e))`, which turns
//!   `c |lambda - anchor|^e d lambda` into the constant density `c/(1+e) dx`;
//! * on an unbounded tail, `lambda = anchor +/- x^(-1/(1-e))`, which turns an
//!   integrand decaying like `lambda^-2` into a bounded one on `(0, X]`.
//!
//! All integrands used in this crate decay at least like `lambda^-2`; the
//! tail charts rely on it.

use serde::{Deserialize, Serialize};

use crate::mobius::MobiusMap;
use crate::quadrature::{integrate_panels, Estimate, Panel, Tolerance};
use crate::{Complex, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DensityForm {
    /// `coefficient * |lambda - anchor|^exponent`.
    PowerLaw {
        coefficient: f64,
        exponent: f64,
        anchor: f64,
    },
    /// Linear interpolation of `values` on `grid`; zero outside the grid.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

/// Where a power-law piece sits relative to its anchor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Straddling,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityPiece {
    /// Open support interval; endpoints may be infinite.
    pub lo: f64,
    pub hi: f64,
    pub form: DensityForm,
}

impl DensityPiece {
    pub fn power(lo: f64, hi: f64, coefficient: f64, exponent: f64, anchor: f64) -> Self {
        DensityPiece {
            lo,
            hi,
            form: DensityForm::PowerLaw {
                coefficient,
                exponent,
                anchor,
            },
        }
    }

    pub fn tabulated(lo: f64, hi: f64, grid: Vec<f64>, values: Vec<f64>) -> Self {
        DensityPiece {
            lo,
            hi,
            form: DensityForm::Tabulated { grid, values },
        }
    }

    pub fn side(&self) -> Option<Side> {
        match self.form {
            DensityForm::PowerLaw { anchor, .. } if anchor <= self.lo => Some(Side::Right),
            DensityForm::PowerLaw { anchor, .. } if anchor >= self.hi => Some(Side::Left),
            DensityForm::PowerLaw { .. } => Some(Side::Straddling),
            DensityForm::Tabulated { .. } => None,
        }
    }

    /// Density at `x` (without the measure's global scale).
    pub fn density(&self, x: f64) -> f64 {
        if !(x > self.lo && x < self.hi) {
            return 0.0;
        }
        match &self.form {
            DensityForm::PowerLaw {
                coefficient,
                exponent,
                anchor,
            } => coefficient * (x - anchor).abs().powf(*exponent),
            DensityForm::Tabulated { grid, values } => interpolate(grid, values, x),
        }
    }

    /// Closed support hull where the density can be nonzero.
    pub fn effective_support(&self) -> (f64, f64) {
        match &self.form {
            DensityForm::PowerLaw { .. } => (self.lo, self.hi),
            DensityForm::Tabulated { grid, .. } => (grid[0], grid[grid.len() - 1]),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidMeasure(msg));
        if self.lo.is_nan() || self.hi.is_nan() || !(self.lo < self.hi) {
            return bad(format!("empty support ({}, {})", self.lo, self.hi));
        }
        match &self.form {
            DensityForm::PowerLaw {
                coefficient,
                exponent,
                anchor,
            } => {
                if !(coefficient.is_finite() && *coefficient > 0.0) {
                    return bad(format!("power coefficient must be positive, got {coefficient}"));
                }
                if !exponent.is_finite() || !anchor.is_finite() {
                    return bad("power exponent and anchor must be finite".into());
                }
            }
            DensityForm::Tabulated { grid, values } => {
                if grid.len() < 2 || grid.len() != values.len() {
                    return bad("tabulated density needs matching grid/values of length >= 2".into());
                }
                if grid.windows(2).any(|w| !(w[0] < w[1])) || grid.iter().any(|g| !g.is_finite()) {
                    return bad("tabulated grid must be finite and strictly increasing".into());
                }
                if grid[0] < self.lo || grid[grid.len() - 1] > self.hi {
                    return bad("tabulated grid must lie inside the support".into());
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("tabulated values must be finite and nonnegative".into());
                }
            }
        }
        Ok(())
    }

    /// Whether `integral d mu / (1 + lambda^2)` over this piece is finite.
    fn weighted_finite(&self) -> bool {
        match self.form {
            DensityForm::PowerLaw {
                exponent, anchor, ..
            } => {
                let anchor_touches = anchor >= self.lo && anchor <= self.hi;
                let unbounded = self.lo.is_infinite() || self.hi.is_infinite();
                !(anchor_touches && exponent <= -1.0) && !(unbounded && exponent >= 1.0)
            }
            DensityForm::Tabulated { .. } => true,
        }
    }

    fn infinite_mass(&self) -> bool {
        match self.form {
            DensityForm::PowerLaw {
                exponent, anchor, ..
            } => {
                let anchor_touches = anchor >= self.lo && anchor <= self.hi;
                let unbounded = self.lo.is_infinite() || self.hi.is_infinite();
                (unbounded && exponent >= -1.0) || (anchor_touches && exponent <= -1.0)
            }
            DensityForm::Tabulated { .. } => false,
        }
    }

    /// Coordinate charts covering the piece, see the module docs.
    fn charts(&self, scale: f64) -> Vec<Chart> {
        match &self.form {
            DensityForm::Tabulated { grid, values } => grid
                .windows(2)
                .zip(values.windows(2))
                .filter(|(_, v)| v[0] > 0.0 || v[1] > 0.0)
                .map(|(g, v)| Chart::Linear {
                    x0: g[0],
                    x1: g[1],
                    v0: v[0] * scale,
                    v1: v[1] * scale,
                })
                .collect(),
            DensityForm::PowerLaw {
                coefficient,
                exponent,
                anchor,
            } => {
                let (c, e, a) = (coefficient * scale, *exponent, *anchor);
                let mut breaks: Vec<f64> = Vec::new();
                if self.lo.is_finite() {
                    breaks.push(self.lo);
                }
                if a > self.lo && a < self.hi {
                    breaks.push(a);
                }
                if self.hi.is_finite() {
                    breaks.push(self.hi);
                }
                let mut charts = Vec::new();
                if self.lo == f64::NEG_INFINITY {
                    let start = breaks.first().copied().unwrap_or(a).min(a) - 1.0;
                    charts.push(Chart::tail(c, e, a, -1.0, start));
                    breaks.insert(0, start);
                }
                let mut right_tail = None;
                if self.hi == f64::INFINITY {
                    let start = breaks.last().copied().unwrap_or(a).max(a) + 1.0;
                    right_tail = Some(Chart::tail(c, e, a, 1.0, start));
                    breaks.push(start);
                }
                for w in breaks.windows(2) {
                    let (x0, x1) = (w[0], w[1]);
                    if e != 0.0 && x0 == a {
                        charts.push(Chart::anchored(c, e, a, 1.0, x1 - a));
                    } else if e != 0.0 && x1 == a {
                        charts.push(Chart::anchored(c, e, a, -1.0, a - x0));
                    } else {
                        charts.push(Chart::Power { c, e, a, x0, x1 });
                    }
                }
                charts.extend(right_tail);
                charts
            }
        }
    }
}

fn interpolate(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x < grid[0] || x > grid[grid.len() - 1] {
        return 0.0;
    }
    let k = grid.partition_point(|g| *g <= x).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[k - 1], grid[k]);
    let t = (x - x0) / (x1 - x0);
    values[k - 1] * (1.0 - t) + values[k] * t
}

/// Local coordinate of one density segment; `d mu = density(x) dx`.
#[derive(Debug, Clone, Copy)]
enum Chart {
    /// Plain coordinate `lambda = x` on `[x0, x1]` with density `c |x - a|^e`.
    Power { c: f64, e: f64, a: f64, x0: f64, x1: f64 },
    /// Plain coordinate with linear density between `(x0, v0)` and `(x1, v1)`.
    Linear { x0: f64, x1: f64, v0: f64, v1: f64 },
    /// `lambda = a + sign * x^q` on `[0, len]`, `q = 1/(1+e)`; density `c q`.
    Anchored { c: f64, q: f64, a: f64, sign: f64, len: f64 },
    /// `lambda = a + sign * x^(-beta)` on `(0, len]`, `beta = 1/(1-e)`;
    /// density `c beta r^2` with `r = |lambda - a|`.
    Tail { c: f64, beta: f64, a: f64, sign: f64, len: f64 },
}

impl Chart {
    fn anchored(c: f64, e: f64, a: f64, sign: f64, dist: f64) -> Chart {
        Chart::Anchored {
            c,
            q: 1.0 / (1.0 + e),
            a,
            sign,
            len: dist.powf(1.0 + e),
        }
    }

    fn tail(c: f64, e: f64, a: f64, sign: f64, start: f64) -> Chart {
        let beta = 1.0 / (1.0 - e);
        Chart::Tail {
            c,
            beta,
            a,
            sign,
            len: (start - a).abs().powf(-1.0 / beta),
        }
    }

    fn interval(&self) -> (f64, f64) {
        match *self {
            Chart::Power { x0, x1, .. } | Chart::Linear { x0, x1, .. } => (x0, x1),
            Chart::Anchored { len, .. } | Chart::Tail { len, .. } => (0.0, len),
        }
    }

    /// Point `lambda` and density `d mu / dx` at local coordinate `x`.
    /// Returns `None` where the tail chart is numerically at infinity.
    fn eval(&self, x: f64) -> Option<(f64, f64)> {
        match *self {
            Chart::Power { c, e, a, .. } => Some((x, c * (x - a).abs().powf(e))),
            Chart::Linear { x0, x1, v0, v1 } => {
                let t = (x - x0) / (x1 - x0);
                Some((x, v0 * (1.0 - t) + v1 * t))
            }
            Chart::Anchored { c, q, a, sign, .. } => Some((a + sign * x.powf(q), c * q)),
            Chart::Tail { c, beta, a, sign, .. } => {
                let r = x.powf(-beta);
                if !(r < 1e150) {
                    return None;
                }
                Some((a + sign * r, c * beta * r * r))
            }
        }
    }

    /// Local coordinate of `lambda`, if the chart covers it.
    fn local(&self, lambda: f64) -> Option<f64> {
        let x = match *self {
            Chart::Power { .. } | Chart::Linear { .. } => lambda,
            Chart::Anchored { q, a, sign, .. } => {
                let d = sign * (lambda - a);
                if d < 0.0 {
                    return None;
                }
                d.powf(1.0 / q)
            }
            Chart::Tail { beta, a, sign, .. } => {
                let d = sign * (lambda - a);
                if d <= 0.0 {
                    return None;
                }
                d.powf(-1.0 / beta)
            }
        };
        let (lo, hi) = self.interval();
        (x >= lo && x <= hi).then_some(x)
    }
}

/// Classification of a real point against the core of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointClass {
    CoreSpectrum,
    QuasiRegular { has_atom: bool },
}

impl PointClass {
    pub fn is_core(&self) -> bool {
        matches!(self, PointClass::CoreSpectrum)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMeasure {
    atoms: Vec<Atom>,
    pieces: Vec<DensityPiece>,
    scale: f64,
}

pub(crate) fn cauchy_kernel(lambda: f64, z: Complex) -> Complex {
    // 1/(lambda - z) - lambda/(1 + lambda^2), written without cancellation.
    (1.0 + z * lambda) / ((lambda - z) * (1.0 + lambda * lambda))
}

fn default_tol() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-11,
        max_panels: 20_000,
    }
}

impl RealMeasure {
    pub fn new(atoms: Vec<Atom>, pieces: Vec<DensityPiece>) -> Result<Self> {
        for a in &atoms {
            if !a.position.is_finite() {
                return Err(Error::InvalidMeasure(format!("atom position {} not finite", a.position)));
            }
            if !(a.mass.is_finite() && a.mass > 0.0) {
                return Err(Error::InvalidMeasure(format!("atom mass {} must be positive", a.mass)));
            }
        }
        let mut positions: Vec<f64> = atoms.iter().map(|a| a.position).collect();
        positions.sort_by(f64::total_cmp);
        if positions.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMeasure("atom positions must be distinct".into()));
        }
        for p in &pieces {
            p.validate()?;
        }
        if atoms.is_empty() && pieces.is_empty() {
            return Err(Error::InvalidMeasure("measure has neither atoms nor pieces".into()));
        }
        Ok(RealMeasure {
            atoms,
            pieces,
            scale: 1.0,
        })
    }

    pub fn atom(position: f64, mass: f64) -> Result<Self> {
        Self::new(vec![Atom { position, mass }], vec![])
    }

    pub fn power(lo: f64, hi: f64, coefficient: f64, exponent: f64, anchor: f64) -> Result<Self> {
        Self::new(vec![], vec![DensityPiece::power(lo, hi, coefficient, exponent, anchor)])
    }

    /// Lebesgue measure on the whole line.
    pub fn lebesgue() -> Self {
        Self::power(f64::NEG_INFINITY, f64::INFINITY, 1.0, 0.0, 0.0).expect("valid")
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::InvalidMeasure(format!("scale {scale} must be positive")));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Scaled density of the continuous part at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.scale * self.pieces.iter().map(|p| p.density(x)).sum::<f64>()
    }

    pub fn atom_mass_at(&self, x: f64) -> Option<f64> {
        self.atoms
            .iter()
            .find(|a| a.position == x)
            .map(|a| a.mass * self.scale)
    }

    pub fn is_infinite_mass(&self) -> bool {
        self.pieces.iter().any(DensityPiece::infinite_mass)
    }

    pub fn check_weighted_finite(&self) -> Result<()> {
        for (k, p) in self.pieces.iter().enumerate() {
            if !p.weighted_finite() {
                return Err(Error::NonFiniteWeightedMass(format!(
                    "piece {k} on ({}, {}) is not (1+x^2)^-1 integrable",
                    p.lo, p.hi
                )));
            }
        }
        Ok(())
    }

    fn charts(&self) -> Vec<Chart> {
        self.pieces.iter().flat_map(|p| p.charts(self.scale)).collect()
    }

    /// Integrates `f` against the measure. `hints` are real points near which
    /// `f` varies quickly; every chart is split there.
    ///
    /// `f` must decay at least like `lambda^-2` on unbounded supports.
    pub fn integrate<F>(&self, f: F, hints: &[f64], tol: Tolerance) -> Result<Estimate>
    where
        F: Fn(f64) -> Complex,
    {
        self.check_weighted_finite()?;
        let atoms: Complex = self
            .atoms
            .iter()
            .map(|a| f(a.position) * (a.mass * self.scale))
            .sum();
        let charts = self.charts();
        let panels = split_panels(&charts, hints, None);
        let cont = integrate_panels(
            |k, x| match charts[k].eval(x) {
                Some((lambda, w)) if w != 0.0 => f(lambda) * w,
                _ => Complex::new(0.0, 0.0),
            },
            &panels,
            tol,
        )?;
        Ok(Estimate {
            value: cont.value + atoms,
            error: cont.error,
        })
    }

    /// Integral of `f` over the continuous part restricted to `[lo, hi]`.
    pub fn integrate_continuous_between<F>(&self, f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Estimate>
    where
        F: Fn(f64) -> Complex,
    {
        let charts = self.charts();
        let panels = split_panels(&charts, &[], Some((lo, hi)));
        integrate_panels(
            |k, x| match charts[k].eval(x) {
                Some((lambda, w)) if w != 0.0 => f(lambda) * w,
                _ => Complex::new(0.0, 0.0),
            },
            &panels,
            tol,
        )
    }

    /// `integral d mu / (1 + lambda^2)`.
    pub fn weighted_total(&self) -> Result<Estimate> {
        self.integrate(
            |x| Complex::new(1.0 / (1.0 + x * x), 0.0),
            &[],
            Tolerance {
                abs: 1e-15,
                rel: 1e-13,
                max_panels: 20_000,
            },
        )
    }

    /// Rescales so that `integral d mu / (1 + lambda^2) = 1`.
    pub fn normalize(&self) -> Result<RealMeasure> {
        let total = self.weighted_total()?.value.re;
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NonFiniteWeightedMass(format!("weighted total {total}")));
        }
        let mut out = self.clone();
        out.scale /= total;
        Ok(out)
    }

    pub fn is_normalized(&self, tol: f64) -> Result<bool> {
        Ok((self.weighted_total()?.value.re - 1.0).abs() <= tol)
    }

    /// Regularised Cauchy transform
    /// `integral (1/(lambda - z) - lambda/(1+lambda^2)) d mu(lambda)`.
    pub fn cauchy_integral(&self, z: Complex) -> Result<Estimate> {
        if z.im == 0.0 || !z.im.is_finite() || !z.re.is_finite() {
            return Err(Error::InvalidArgument(format!("Cauchy integral needs Im z != 0, got {z}")));
        }
        let hints = near_real_hints(z);
        self.integrate(|x| cauchy_kernel(x, z), &hints, default_tol())
    }

    /// Whether `omega` is separated from every atom and every piece's
    /// effective support by an open gap.
    pub fn in_gap(&self, omega: f64) -> bool {
        self.atoms.iter().all(|a| a.position != omega)
            && self.pieces.iter().all(|p| {
                let (lo, hi) = p.effective_support();
                omega < lo || omega > hi
            })
    }

    /// `integral d mu / (lambda - s)^2`, with `f64::INFINITY` for divergence.
    pub fn second_moment_at(&self, s: f64) -> Result<f64> {
        self.check_weighted_finite()?;
        if self.atom_mass_at(s).is_some() {
            return Ok(f64::INFINITY);
        }
        let mut total: f64 = self
            .atoms
            .iter()
            .map(|a| a.mass * self.scale / (a.position - s).powi(2))
            .sum();
        for piece in &self.pieces {
            let part = match &piece.form {
                DensityForm::PowerLaw {
                    exponent, anchor, ..
                } => {
                    let touches = s >= piece.lo && s <= piece.hi;
                    // Positive continuous density at s, or |x-s|^(e-2) with e <= 1.
                    let local_divergence = touches && (s != *anchor || *exponent <= 1.0);
                    let unbounded = piece.lo.is_infinite() || piece.hi.is_infinite();
                    if local_divergence || (unbounded && *exponent >= 1.0) {
                        return Ok(f64::INFINITY);
                    }
                    self.piece_second_moment(piece, s, None)?
                }
                DensityForm::Tabulated { grid, .. } => {
                    if s < grid[0] || s > grid[grid.len() - 1] {
                        self.piece_second_moment(piece, s, None)?
                    } else {
                        match self.tabulated_second_moment(piece, grid, s)? {
                            Some(v) => v,
                            None => return Ok(f64::INFINITY),
                        }
                    }
                }
            };
            total += part;
        }
        Ok(total)
    }

    fn piece_second_moment(&self, piece: &DensityPiece, s: f64, clip: Option<(f64, f64)>) -> Result<f64> {
        let charts = piece.charts(self.scale);
        let panels = split_panels(&charts, &[s], clip);
        let est = integrate_panels(
            |k, x| match charts[k].eval(x) {
                Some((lambda, w)) if w != 0.0 => Complex::new(w / (lambda - s).powi(2), 0.0),
                _ => Complex::new(0.0, 0.0),
            },
            &panels,
            default_tol(),
        )?;
        Ok(est.value.re)
    }

    /// Refinement ladder around a point inside a tabulated grid. Returns
    /// `None` for a certified divergence.
    ///
    /// The shell contributions `W_k` over `delta 2^-(k+1) < |x - s| < delta 2^-k`
    /// decay geometrically when the integral converges and stay bounded below
    /// (ratio near 1 for a linear zero, near 2 for a positive value) when it
    /// diverges.
    fn tabulated_second_moment(&self, piece: &DensityPiece, grid: &[f64], s: f64) -> Result<Option<f64>> {
        let nearest = grid
            .iter()
            .filter(|g| **g != s)
            .map(|g| (g - s).abs())
            .fold(f64::INFINITY, f64::min);
        let delta = 0.5 * nearest;
        let outer = self.piece_second_moment(piece, s, Some((f64::NEG_INFINITY, s - delta)))?
            + self.piece_second_moment(piece, s, Some((s + delta, f64::INFINITY)))?;

        let shell = |k: i32| -> Result<f64> {
            let (d0, d1) = (delta * 0.5f64.powi(k + 1), delta * 0.5f64.powi(k));
            Ok(self.piece_second_moment(piece, s, Some((s - d1, s - d0)))?
                + self.piece_second_moment(piece, s, Some((s + d0, s + d1)))?)
        };

        let mut sum = 0.0;
        let mut prev = shell(0)?;
        sum += prev;
        let (mut growing, mut shrinking, mut zero) = (0, 0, 0);
        for k in 1..60 {
            let w = shell(k)?;
            sum += w;
            if w <= f64::MIN_POSITIVE {
                zero += 1;
                if zero >= 3 {
                    return Ok(Some(outer + sum));
                }
                prev = w;
                continue;
            }
            zero = 0;
            let ratio = if prev > 0.0 { w / prev } else { f64::INFINITY };
            if ratio >= 0.9 {
                growing += 1;
                shrinking = 0;
                if growing >= 3 {
                    return Ok(None);
                }
            } else if ratio <= 0.6 {
                shrinking += 1;
                growing = 0;
                let tail = w * ratio / (1.0 - ratio);
                if shrinking >= 3 && tail <= 1e-12 * (outer + sum).abs().max(1.0) {
                    return Ok(Some(outer + sum + tail));
                }
            } else {
                growing = 0;
                shrinking = 0;
            }
            prev = w;
        }
        Err(Error::Indeterminate { at: s })
    }

    pub fn classify_point(&self, s: f64) -> Result<PointClass> {
        if self.atom_mass_at(s).is_some() {
            return Ok(PointClass::QuasiRegular { has_atom: true });
        }
        let m2 = self.second_moment_at(s)?;
        Ok(if m2.is_infinite() {
            PointClass::CoreSpectrum
        } else {
            PointClass::QuasiRegular { has_atom: false }
        })
    }

    /// The point at infinity is in the core exactly when the mass is infinite.
    pub fn classify_infinity(&self) -> PointClass {
        if self.is_infinite_mass() {
            PointClass::CoreSpectrum
        } else {
            PointClass::QuasiRegular { has_atom: false }
        }
    }

    /// Image measure under an affine map or the inversion `x -> -1/x`.
    /// Not renormalised.
    pub fn pushforward(&self, f: &MobiusMap) -> Result<RealMeasure> {
        if let Some((slope, shift)) = f.affine_parts() {
            let atoms = self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: slope * a.position + shift,
                    mass: a.mass,
                })
                .collect();
            let pieces = self
                .pieces
                .iter()
                .map(|p| {
                    let (lo, hi) = (slope * p.lo + shift, slope * p.hi + shift);
                    let form = match &p.form {
                        DensityForm::PowerLaw {
                            coefficient,
                            exponent,
                            anchor,
                        } => DensityForm::PowerLaw {
                            coefficient: coefficient * slope.powf(-1.0 - exponent),
                            exponent: *exponent,
                            anchor: slope * anchor + shift,
                        },
                        DensityForm::Tabulated { grid, values } => DensityForm::Tabulated {
                            grid: grid.iter().map(|g| slope * g + shift).collect(),
                            values: values.iter().map(|v| v / slope).collect(),
                        },
                    };
                    DensityPiece { lo, hi, form }
                })
                .collect();
            return RealMeasure::new(atoms, pieces)?.with_scale(self.scale);
        }
        if !f.is_inversion() {
            return Err(Error::InvalidArgument(
                "pushforward supports affine maps and the inversion only".into(),
            ));
        }
        let mut atoms = Vec::with_capacity(self.atoms.len());
        for a in &self.atoms {
            if a.position == 0.0 {
                return Err(Error::AtomAtPole);
            }
            atoms.push(Atom {
                position: -1.0 / a.position,
                mass: a.mass,
            });
        }
        let mut pieces = Vec::new();
        for p in &self.pieces {
            let DensityForm::PowerLaw {
                coefficient,
                exponent,
                anchor,
            } = p.form
            else {
                return Err(Error::UnsupportedPushforward(
                    "tabulated densities have no closed image under inversion".into(),
                ));
            };
            if anchor != 0.0 && exponent != 0.0 {
                return Err(Error::UnsupportedPushforward(format!(
                    "power piece anchored at {anchor} leaves the power family under inversion"
                )));
            }
            // c |x|^e dx  ->  c |t|^(-e-2) dt
            for (lo, hi) in split_at_zero(p.lo, p.hi) {
                let (ilo, ihi) = invert_interval(lo, hi);
                pieces.push(DensityPiece::power(ilo, ihi, coefficient, -exponent - 2.0, 0.0));
            }
        }
        RealMeasure::new(atoms, pieces)?.with_scale(self.scale)
    }

    /// The measure `lambda^2 d mu(lambda)`; defined for atoms and for power
    /// pieces anchored at the origin (or with exponent zero).
    pub fn weighted_by_square(&self) -> Result<RealMeasure> {
        let atoms = self
            .atoms
            .iter()
            .filter(|a| a.position != 0.0)
            .map(|a| Atom {
                position: a.position,
                mass: a.mass * a.position * a.position,
            })
            .collect();
        let mut pieces = Vec::new();
        for p in &self.pieces {
            match p.form {
                DensityForm::PowerLaw {
                    coefficient,
                    exponent,
                    anchor,
                } if anchor == 0.0 || exponent == 0.0 => {
                    pieces.push(DensityPiece::power(p.lo, p.hi, coefficient, exponent + 2.0, 0.0));
                }
                _ => {
                    return Err(Error::UnsupportedPushforward(
                        "square reweighting needs power pieces anchored at 0".into(),
                    ))
                }
            }
        }
        RealMeasure::new(atoms, pieces)?.with_scale(self.scale)
    }
}

fn split_at_zero(lo: f64, hi: f64) -> Vec<(f64, f64)> {
    if lo < 0.0 && hi > 0.0 {
        vec![(lo, 0.0), (0.0, hi)]
    } else {
        vec![(lo, hi)]
    }
}

/// Image of an interval not containing 0 in its interior under `x -> -1/x`.
fn invert_interval(lo: f64, hi: f64) -> (f64, f64) {
    let inv = |x: f64, positive_side: bool| -> f64 {
        if x == 0.0 {
            if positive_side {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else if x.is_infinite() {
            0.0
        } else {
            -1.0 / x
        }
    };
    let positive = lo >= 0.0;
    (inv(lo, positive), inv(hi, positive))
}

/// Breakpoints that resolve the near-singular Cauchy kernel when `z` is
/// close to the real axis.
pub(crate) fn near_real_hints(z: Complex) -> Vec<f64> {
    let eta = z.im.abs();
    if eta >= 1.0 {
        return vec![];
    }
    let mut hints = vec![z.re];
    let mut d = eta;
    while d < 10.0 {
        hints.push(z.re - d);
        hints.push(z.re + d);
        d *= 4.0;
    }
    hints
}

/// Builds the initial panels: one per chart, split at the images of
/// `hints`, optionally clipped to `clip` (in the `lambda` coordinate).
fn split_panels(charts: &[Chart], hints: &[f64], clip: Option<(f64, f64)>) -> Vec<Panel> {
    let mut panels = Vec::new();
    for (k, chart) in charts.iter().enumerate() {
        let (mut lo, mut hi) = chart.interval();
        if let Some((clo, chi)) = clip {
            let (a, b) = (chart.local_clamped(clo), chart.local_clamped(chi));
            lo = a.min(b);
            hi = a.max(b);
            if !(hi > lo) {
                continue;
            }
        }
        let mut cuts: Vec<f64> = hints
            .iter()
            .filter_map(|h| chart.local(*h))
            .filter(|x| *x > lo && *x < hi)
            .collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                panels.push(Panel {
                    chart: k,
                    lo: w[0],
                    hi: w[1],
                });
            }
        }
    }
    panels
}

impl Chart {
    fn lambda_of(&self, x: f64) -> f64 {
        match *self {
            Chart::Power { .. } | Chart::Linear { .. } => x,
            Chart::Anchored { q, a, sign, .. } => a + sign * x.powf(q),
            Chart::Tail { beta, a, sign, .. } => a + sign * x.powf(-beta),
        }
    }

    /// Local coordinate of `lambda`, clamped to the chart interval.
    fn local_clamped(&self, lambda: f64) -> f64 {
        let (lo, hi) = self.interval();
        let (l0, l1) = (self.lambda_of(lo), self.lambda_of(hi));
        let (min, max) = (l0.min(l1), l0.max(l1));
        if lambda <= min {
            return if l0 <= l1 { lo } else { hi };
        }
        if lambda >= max {
            return if l0 <= l1 { hi } else { lo };
        }
        self.local(lambda).unwrap_or(lo).clamp(lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const INF: f64 = f64::INFINITY;

    fn sqrt_power() -> RealMeasure {
        RealMeasure::power(0.0, INF, 1.0, 0.5, 0.0).unwrap()
    }

    #[test]
    fn single_unit_atom_at_origin_is_already_normalized() {
        let m = RealMeasure::atom(0.0, 1.0).unwrap().normalize().unwrap();
        assert_eq!(m.scale(), 1.0);
    }

    #[test]
    fn lebesgue_normalizes_to_inverse_pi() {
        // integral dx/(1+x^2) over R = pi  (antiderivative atan)
        let m = RealMeasure::lebesgue().normalize().unwrap();
        assert!((m.scale() - 1.0 / PI).abs() < 1e-13, "{}", m.scale());
    }

    #[test]
    fn half_line_density_normalizes_to_four_over_pi() {
        // integral_1^inf dx/(1+x^2) = pi/2 - atan 1 = pi/4
        let m = RealMeasure::power(1.0, INF, 1.0, 0.0, 0.0).unwrap().normalize().unwrap();
        assert!((m.scale() - 4.0 / PI).abs() < 1e-13);
    }

    #[test]
    fn normalized_cauchy_at_i_is_i() {
        for m in [RealMeasure::lebesgue(), sqrt_power(), RealMeasure::atom(3.0, 2.0).unwrap()] {
            let m = m.normalize().unwrap();
            let v = m.cauchy_integral(Complex::i()).unwrap();
            assert!((v.value - Complex::i()).norm() < 1e-10, "{:?}", v);
            assert!(v.error <= 1e-10);
        }
    }

    #[test]
    fn normalized_lebesgue_is_constant_i() {
        let m = RealMeasure::lebesgue().normalize().unwrap();
        for z in [Complex::new(0.0, 2.0), Complex::new(1.0, 1.0), Complex::new(-3.0, 0.05)] {
            let v = m.cauchy_integral(z).unwrap().value;
            assert!((v - Complex::i()).norm() < 1e-9, "{z}: {v}");
        }
    }

    #[test]
    fn lower_half_plane_is_conjugate() {
        let m = sqrt_power().normalize().unwrap();
        let z = Complex::new(0.7, 0.3);
        let up = m.cauchy_integral(z).unwrap().value;
        let down = m.cauchy_integral(z.conj()).unwrap().value;
        assert!((up.conj() - down).norm() < 1e-11);
    }

    #[test]
    fn second_moment_examples() {
        let m = sqrt_power();
        assert_eq!(m.second_moment_at(1.0).unwrap(), INF);
        let finite = m.second_moment_at(-1.0).unwrap();
        // integral_0^inf x^(1/2)/(x+1)^2 dx = B(3/2, 1/2) = pi/2
        assert!((finite - PI / 2.0).abs() < 1e-9, "{finite}");
        let atom = RealMeasure::atom(0.0, 1.0).unwrap();
        assert!((atom.second_moment_at(5.0).unwrap() - 1.0 / 25.0).abs() < 1e-15);
    }

    #[test]
    fn classification_examples() {
        let atom = RealMeasure::atom(0.0, 1.0).unwrap();
        assert_eq!(atom.classify_point(0.0).unwrap(), PointClass::QuasiRegular { has_atom: true });
        let m = sqrt_power();
        assert_eq!(m.classify_point(1.0).unwrap(), PointClass::CoreSpectrum);
        assert_eq!(m.classify_point(0.0).unwrap(), PointClass::CoreSpectrum);
        assert_eq!(m.classify_point(-1.0).unwrap(), PointClass::QuasiRegular { has_atom: false });
    }

    #[test]
    fn tabulated_ladder_decides_local_behaviour() {
        // hat on [0, 2] peaking at 1, plus a zero plateau on [3, 4]
        let grid = vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let values = vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let m = RealMeasure::new(vec![], vec![DensityPiece::tabulated(-1.0, 6.0, grid, values)]).unwrap();
        // positive density
        assert_eq!(m.second_moment_at(1.0).unwrap(), INF);
        // linear zero at the hat's foot: logarithmic divergence
        assert_eq!(m.second_moment_at(0.0).unwrap(), INF);
        // inside the zero plateau: finite, compare with direct integration
        let v = m.second_moment_at(3.5).unwrap();
        // hat part: int_0^2 hat(x)/(x-3.5)^2, ramp part: int_4^5 (x-4)/(x-3.5)^2
        let hat = {
            let f = |a: f64, b: f64, slope: f64, x0: f64, s: f64| {
                // int_a^b slope (x - x0) / (x - s)^2 dx
                let g = |x: f64| slope * ((x - s).abs().ln() + (x0 - s) / (x - s));
                g(b) - g(a)
            };
            f(0.0, 1.0, 1.0, 0.0, 3.5) + f(1.0, 2.0, -1.0, 2.0, 3.5) + f(4.0, 5.0, 1.0, 4.0, 3.5)
        };
        assert!((v - hat).abs() < 1e-9, "{v} vs {hat}");
        assert_eq!(m.classify_point(3.5).unwrap(), PointClass::QuasiRegular { has_atom: false });
    }

    #[test]
    fn affine_pushforward_moves_atoms() {
        let m = RealMeasure::atom(2.0, 3.0).unwrap();
        let f = MobiusMap::affine(1.0, 1.0).unwrap();
        let img = m.pushforward(&f).unwrap();
        assert_eq!(img.atoms(), &[Atom { position: 3.0, mass: 3.0 }]);
    }

    #[test]
    fn inversion_pushforward_of_power_law() {
        let m = RealMeasure::power(0.0, INF, 2.0, 0.5, 0.0).unwrap();
        let img = m.pushforward(&MobiusMap::inversion()).unwrap();
        assert_eq!(img.pieces(), &[DensityPiece::power(f64::NEG_INFINITY, 0.0, 2.0, -2.5, 0.0)]);
        assert!(img.check_weighted_finite().is_err());
        let atom = RealMeasure::atom(0.0, 1.0).unwrap();
        assert_eq!(atom.pushforward(&MobiusMap::inversion()), Err(Error::AtomAtPole));
    }

    #[test]
    fn inversion_substitution_matches_cauchy_values() {
        // integral K(t, zeta) t^2 d(iota_* mu)(t) = M_mu(-1/zeta)
        let m = sqrt_power().normalize().unwrap();
        let dual = m.pushforward(&MobiusMap::inversion()).unwrap().weighted_by_square().unwrap();
        for zeta in [Complex::new(0.3, 0.8), Complex::new(-2.0, 0.5), Complex::new(0.0, 3.0)] {
            let lhs = dual.cauchy_integral(zeta).unwrap().value;
            let rhs = m.cauchy_integral(-1.0 / zeta).unwrap().value;
            assert!((lhs - rhs).norm() < 1e-9, "{zeta}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn infinite_mass_flags() {
        assert!(RealMeasure::lebesgue().is_infinite_mass());
        assert!(sqrt_power().is_infinite_mass());
        assert!(!RealMeasure::atom(1.0, 1.0).unwrap().is_infinite_mass());
        assert!(!RealMeasure::power(0.0, 1.0, 1.0, -0.5, 0.0).unwrap().is_infinite_mass());
    }

    #[test]
    fn invalid_inputs_are_rejected() {
        assert!(RealMeasure::atom(0.0, -1.0).is_err());
        assert!(RealMeasure::new(
            vec![Atom { position: 1.0, mass: 1.0 }, Atom { position: 1.0, mass: 2.0 }],
            vec![]
        )
        .is_err());
        assert!(RealMeasure::power(1.0, 0.0, 1.0, 0.0, 0.0).is_err());
        assert!(RealMeasure::new(vec![], vec![]).is_err());
        let bad = RealMeasure::power(0.0, INF, 1.0, 1.5, 0.0).unwrap();
        assert!(matches!(bad.normalize(), Err(Error::NonFiniteWeightedMass(_))));
    }
}
