//! Finite atomic models and dense linear algebra reference checks.
//!
//! A [`DiscreteModel`] is the measure `sum w_j delta_{lambda_j}`. In the
//! weighted coordinates `f_j` the dissipative operator is
//! `T = diag(lambda) + t 1 w^T` with
//! `1/t = -tau - sum w_j lambda_j / (1 + lambda_j^2)`; in orthonormal
//! coordinates `sqrt(w_j) f_j` it becomes `diag(lambda) + t u u^T`,
//! `u = sqrt(w)`, whose imaginary part `Im(t) u u^T` has rank one.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::charfn::VonNeumannParameter;
use crate::measure::RealMeasure;
use crate::mobius::MobiusMap;
use crate::quadrature::Tolerance;
use crate::transform::ModelTriple;
use crate::{Complex, Error, Result};

const RESONANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteModel {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    kappa: VonNeumannParameter,
}

fn c(re: f64) -> Complex {
    Complex::new(re, 0.0)
}

impl DiscreteModel {
    /// Validates sorted distinct nodes, positive weights and
    /// `sum w_j / (1 + lambda_j^2) = 1` to within `1e-12`.
    pub fn new(nodes: Vec<f64>, weights: Vec<f64>, kappa: VonNeumannParameter) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidArgument("nodes and weights must be non-empty and of equal length".into()));
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("nodes must be finite and strictly increasing".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive".into()));
        }
        let total: f64 = nodes.iter().zip(&weights).map(|(x, w)| w / (1.0 + x * x)).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("weighted total {total} is not 1")));
        }
        Ok(DiscreteModel { nodes, weights, kappa })
    }

    /// Like [`new`](Self::new) but rescales the weights first.
    pub fn normalized(nodes: Vec<f64>, mut weights: Vec<f64>, kappa: VonNeumannParameter) -> Result<Self> {
        let total: f64 = nodes.iter().zip(&weights).map(|(x, w)| w / (1.0 + x * x)).sum();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidArgument(format!("weighted total {total}")));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::new(nodes, weights, kappa)
    }

    /// Random admissible model: nodes in `[-5, -0.1] ∪ [0.1, 5]`,
    /// `|kappa| < 0.9`. Deterministic in `seed`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument("random model needs n >= 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut nodes: Vec<f64> = Vec::with_capacity(n);
        while nodes.len() < n {
            let x: f64 = rng.gen_range(0.1..5.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            if nodes.iter().all(|y| (x - y).abs() > 1e-6) {
                nodes.push(x);
            }
        }
        nodes.sort_by(f64::total_cmp);
        let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..2.0)).collect();
        let kappa = Complex::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(0.0..std::f64::consts::TAU));
        Self::normalized(nodes, weights, VonNeumannParameter::new(kappa)?)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kappa(&self) -> VonNeumannParameter {
        self.kappa
    }

    pub fn with_kappa(mut self, kappa: VonNeumannParameter) -> Self {
        self.kappa = kappa;
        self
    }

    fn regularizer(&self) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * x / (1.0 + x * x))
            .sum()
    }

    /// `M_N(z) = sum w_j (1/(lambda_j - z) - lambda_j/(1 + lambda_j^2))`;
    /// real `z` is allowed away from the nodes.
    pub fn weyl_m(&self, z: Complex) -> Complex {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| (1.0 + z * x) / ((x - z) * (1.0 + x * x)) * w)
            .sum()
    }

    pub fn to_measure(&self) -> RealMeasure {
        let atoms = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&position, &mass)| crate::measure::Atom { position, mass })
            .collect();
        RealMeasure::new(atoms, vec![]).expect("validated model")
    }

    /// `p(z) = (M_N(z) - tau)^-1`.
    pub fn p(&self, z: Complex) -> Result<Complex> {
        let den = self.weyl_m(z) - self.kappa.tau();
        if den.norm() < RESONANCE {
            return Err(Error::ResonancePoint { z });
        }
        Ok(1.0 / den)
    }

    /// Resolvent `(A - z)^-1 - p(z) <., g_conj(z)> g_z` in weighted coordinates.
    pub fn resolvent(&self, z: Complex) -> Result<DMatrix<Complex>> {
        let p = self.p(z)?;
        let n = self.len();
        let g: Vec<Complex> = self.nodes.iter().map(|&x| 1.0 / (x - z)).collect();
        Ok(DMatrix::from_fn(n, n, |j, k| {
            let diag = if j == k { g[j] } else { c(0.0) };
            diag - p * g[j] * g[k] * self.weights[k]
        }))
    }

    fn to_orthonormal(&self, m: &DMatrix<Complex>) -> DMatrix<Complex> {
        let s: Vec<f64> = self.weights.iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(m.nrows(), m.ncols(), |j, k| m[(j, k)] * (s[j] / s[k]))
    }

    /// Diagonal-plus-rank-one form in orthonormal coordinates.
    pub fn rank_one(&self) -> RankOneModel {
        let t = 1.0 / (-self.kappa.tau() - self.regularizer());
        RankOneModel {
            d: self.nodes.clone(),
            u: self.weights.iter().map(|w| w.sqrt()).collect(),
            t,
        }
    }
}

/// `diag(d) + t u u^T` with real `d`, `u` and `Im t > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneModel {
    pub d: Vec<f64>,
    pub u: Vec<f64>,
    pub t: Complex,
}

impl RankOneModel {
    /// Solves `(diag(d) + s u u^T - sigma) x = b` by Sherman-Morrison.
    fn solve(&self, s: Complex, sigma: Complex, b: &[Complex]) -> Result<Vec<Complex>> {
        let mut y = Vec::with_capacity(b.len());
        let mut v = Vec::with_capacity(b.len());
        for ((&d, &u), &bj) in self.d.iter().zip(&self.u).zip(b) {
            let den = d - sigma;
            if den.norm() == 0.0 {
                return Err(Error::EigenvalueHit { z: sigma });
            }
            y.push(bj / den);
            v.push(c(u) / den);
        }
        let uy: Complex = self.u.iter().zip(&y).map(|(u, y)| y * *u).sum();
        let uv: Complex = self.u.iter().zip(&v).map(|(u, v)| v * *u).sum();
        let den = 1.0 + s * uv;
        if den.norm() < 1e-14 {
            return Err(Error::EigenvalueHit { z: sigma });
        }
        let coef = s * uy / den;
        Ok(y.iter().zip(&v).map(|(y, v)| y - coef * v).collect())
    }

    pub fn chi(&self) -> Vec<Complex> {
        let k = self.t.im.sqrt();
        self.u.iter().map(|u| c(k * u)).collect()
    }

    /// `1 + 2i <(T* - z)^-1 chi, chi>`.
    pub fn char_fn(&self, z: Complex) -> Result<Complex> {
        let chi = self.chi();
        let x = self.solve(self.t.conj(), z, &chi)?;
        let dot: Complex = chi.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
        Ok(1.0 + Complex::i() * 2.0 * dot)
    }

    /// Characteristic function of `f(T)` at `zeta`.
    ///
    /// For `f(T) = a/c - (1/c^2)(T - omega)^-1` the imaginary part of `f(T)`
    /// is carried by `chi' = (T - omega)^-1 chi / |c|`, and
    /// `<(f(T)* - zeta)^-1 chi', chi'> = (beta/alpha) <(T* - sigma)^-1 (T - omega)^-1 chi, chi>`
    /// with `alpha = a/c - zeta`, `beta = 1/c^2`, `sigma = omega + beta/alpha`.
    pub fn char_of_image(&self, f: &MobiusMap, zeta: Complex) -> Result<Complex> {
        if let Some((slope, shift)) = f.affine_parts() {
            return self.char_fn((zeta - shift) / slope);
        }
        let [a, _, cc, d] = f.coefficients();
        let omega = -d / cc;
        let beta = 1.0 / (cc * cc);
        let alpha = a / cc - zeta;
        if alpha.norm() == 0.0 {
            return Err(Error::EigenvalueHit { z: zeta });
        }
        let sigma = omega + beta / alpha;
        let chi = self.chi();
        let x1 = self.solve(self.t, c(omega), &chi)?;
        let x2 = self.solve(self.t.conj(), sigma, &x1)?;
        let dot: Complex = chi.iter().zip(&x2).map(|(a, b)| a.conj() * b).sum();
        Ok(1.0 + Complex::i() * 2.0 * (beta / alpha) * dot)
    }

    pub fn dense(&self) -> DMatrix<Complex> {
        let n = self.d.len();
        DMatrix::from_fn(n, n, |j, k| {
            let diag = if j == k { c(self.d[j]) } else { c(0.0) };
            diag + self.t * self.u[j] * self.u[k]
        })
    }
}

/// A bounded operator `T` on `C^N` (orthonormal coordinates) with
/// `Im T = chi chi^*` positive semidefinite of rank at most one.
#[derive(Debug, Clone)]
pub struct DissipativeMatrix {
    t: DMatrix<Complex>,
    chi: DVector<Complex>,
    imag_rank: usize,
    min_imag_eigenvalue: f64,
}

impl DissipativeMatrix {
    pub fn from_matrix(t: DMatrix<Complex>) -> Result<Self> {
        if !t.is_square() || t.nrows() == 0 {
            return Err(Error::InvalidArgument("dissipative matrix must be square and non-empty".into()));
        }
        let h = (&t - t.adjoint()) * Complex::new(0.0, -0.5);
        let eig = h.clone().symmetric_eigen();
        let scale = eig.eigenvalues.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
        let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < -1e-10 * scale.max(1.0) {
            return Err(Error::InvalidArgument(format!("imaginary part has eigenvalue {min} < 0")));
        }
        let tol = 1e-10 * scale.max(1.0);
        let rank = eig.eigenvalues.iter().filter(|v| **v > tol).count();
        if rank > 1 {
            return Err(Error::InvalidArgument(format!("imaginary part has rank {rank} > 1")));
        }
        let (k, top) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if *v > acc.1 { (k, *v) } else { acc });
        let chi = if rank == 1 {
            eig.eigenvectors.column(k) * c(top.sqrt())
        } else {
            DVector::zeros(t.nrows())
        };
        Ok(DissipativeMatrix {
            t,
            chi,
            imag_rank: rank,
            min_imag_eigenvalue: min,
        })
    }

    pub fn matrix(&self) -> &DMatrix<Complex> {
        &self.t
    }

    pub fn chi(&self) -> &DVector<Complex> {
        &self.chi
    }

    pub fn imag_rank(&self) -> usize {
        self.imag_rank
    }

    pub fn min_imag_eigenvalue(&self) -> f64 {
        self.min_imag_eigenvalue
    }

    /// `f(T)` for a real Möbius map with `f^-1(∞)` off the spectrum.
    pub fn mobius_image(&self, f: &MobiusMap) -> Result<DissipativeMatrix> {
        let n = self.t.nrows();
        let id = DMatrix::<Complex>::identity(n, n);
        let image = if let Some((slope, shift)) = f.affine_parts() {
            &self.t * c(slope) + &id * c(shift)
        } else {
            let [a, _, cc, d] = f.coefficients();
            let omega = -d / cc;
            let inv = (&self.t - &id * c(omega))
                .try_inverse()
                .ok_or(Error::SingularResolvent)?;
            &id * c(a / cc) - inv * c(1.0 / (cc * cc))
        };
        Self::from_matrix(image)
    }
}

/// `i` unless it is an eigenvalue of `T` (as for `kappa = 0`, where
/// `M_N(i) = tau`), then the first of `2i, 3i, ...` that is not.
pub fn default_anchor(d: &DiscreteModel) -> Complex {
    (1..)
        .map(|k| Complex::new(0.0, k as f64))
        .find(|z| (d.weyl_m(*z) - d.kappa.tau()).norm() > 1e-6)
        .expect("eigenvalues of T are finite in number")
}

/// `T = R(z0)^-1 + z0` in orthonormal coordinates.
pub fn build_dissipative(d: &DiscreteModel, z0: Complex) -> Result<DissipativeMatrix> {
    let r = d.to_orthonormal(&d.resolvent(z0)?);
    let sv = r.clone().singular_values();
    let (smax, smin) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), s| (a.max(*s), b.min(*s)));
    if !(smin > 0.0) || smax / smin > 1e12 {
        return Err(Error::SingularResolvent);
    }
    let n = d.len();
    let inv = r.try_inverse().ok_or(Error::SingularResolvent)?;
    DissipativeMatrix::from_matrix(inv + DMatrix::<Complex>::identity(n, n) * z0)
}

/// `1 + 2i <(T* - z)^-1 chi, chi>`.
pub fn char_bounded_trace(t: &DissipativeMatrix, z: Complex) -> Result<Complex> {
    let n = t.t.nrows();
    let a = t.t.adjoint() - DMatrix::<Complex>::identity(n, n) * z;
    let x = a.lu().solve(&t.chi).ok_or(Error::EigenvalueHit { z })?;
    if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::EigenvalueHit { z });
    }
    Ok(1.0 + Complex::i() * 2.0 * t.chi.dotc(&x))
}

fn operator_norm(m: &DMatrix<Complex>) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Operator norm of `R(z1) - R(z2) - (z1 - z2) R(z1) R(z2)`.
pub fn check_resolvent_identity(d: &DiscreteModel, z1: Complex, z2: Complex) -> Result<f64> {
    if z1 == z2 {
        return Err(Error::InvalidArgument("resolvent identity needs z1 != z2".into()));
    }
    let r1 = d.to_orthonormal(&d.resolvent(z1)?);
    let r2 = d.to_orthonormal(&d.resolvent(z2)?);
    let residual = &r1 - &r2 - (&r1 * &r2) * (z1 - z2);
    Ok(operator_norm(&residual))
}

/// Relative error `||T^-1 - (A^-1 - p Q)|| / ||T^-1||` with
/// `Q_jk = (1/lambda_j)(w_k/lambda_k)` and `p = (M_N(0) - tau)^-1`.
pub fn check_rank_one_inverse(d: &DiscreteModel) -> Result<f64> {
    if d.nodes.contains(&0.0) {
        return Err(Error::NodeAtZero);
    }
    let t = build_dissipative(d, default_anchor(d))?;
    let n = d.len();
    let t_inv = t.t.clone().try_inverse().ok_or(Error::SingularResolvent)?;
    let p = d.p(c(0.0))?;
    let formula = DMatrix::from_fn(n, n, |j, k| {
        let (lj, lk) = (d.nodes[j], d.nodes[k]);
        let diag = if j == k { c(1.0 / lj) } else { c(0.0) };
        diag - p * (1.0 / lj) * (d.weights[k] / lk)
    });
    let formula = d.to_orthonormal(&formula);
    Ok(operator_norm(&(&t_inv - &formula)) / operator_norm(&t_inv))
}

/// Quantile discretisation of a model triple.
///
/// Nodes sit at the cell midpoints (in probability) of `(1+lambda^2)^-1 d mu`
/// restricted to `[cut, 1 - cut]`; each node carries its cell's mass, the two
/// tails are lumped onto the end nodes, and atoms become exact nodes.
pub fn discretize(t: &ModelTriple, n: usize, quantile_cut: f64) -> Result<DiscreteModel> {
    if !(quantile_cut > 0.0 && quantile_cut < 0.5) {
        return Err(Error::InvalidArgument(format!("quantile cut {quantile_cut} must lie in (0, 0.5)")));
    }
    let m = t.measure();
    let mut nodes: Vec<(f64, f64)> = m.atoms().iter().map(|a| (a.position, a.mass * m.scale())).collect();
    if !m.pieces().is_empty() {
        let n_cont = n.checked_sub(nodes.len()).filter(|k| *k >= 1).ok_or_else(|| {
            Error::InvalidArgument(format!("n = {n} leaves no room for the continuous part"))
        })?;
        nodes.extend(continuous_nodes(m, n_cont, quantile_cut)?);
    } else if n < 2 && nodes.len() >= 2 {
        return Err(Error::InvalidArgument("n must be at least 2".into()));
    }
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(nodes.len());
    for (x, w) in nodes {
        match merged.last_mut() {
            Some(last) if last.0 == x => last.1 += w,
            _ => merged.push((x, w)),
        }
    }
    let (xs, ws) = merged.into_iter().unzip();
    DiscreteModel::normalized(xs, ws, t.kappa())
}

struct Cdf<'a> {
    m: &'a RealMeasure,
    lo: f64,
    hi: f64,
}

impl Cdf<'_> {
    /// `integral_a^b d mu_c / (1 + lambda^2)` over the continuous part.
    fn mass(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let tol = Tolerance {
            abs: 1e-15,
            rel: 1e-12,
            max_panels: 20_000,
        };
        Ok(self
            .m
            .integrate_continuous_between(|x| c(1.0 / (1.0 + x * x)), a, b, tol)?
            .value
            .re)
    }

    fn prob_density(&self, x: f64) -> f64 {
        self.m.density(x) / (1.0 + x * x)
    }

    /// Finds `x >= x0` with `mass(x0, x) = delta`.
    fn advance(&self, x0: f64, delta: f64) -> Result<f64> {
        let (a, mut b) = (x0, self.hi);
        if !b.is_finite() {
            let mut step = x0.abs().max(1.0);
            b = x0 + step;
            while self.mass(x0, b)? < delta {
                step *= 4.0;
                b = x0 + step;
                if !b.is_finite() {
                    return Err(Error::InvalidArgument("quantile search ran off to infinity".into()));
                }
            }
        }
        self.solve(a, b, |x| Ok(self.mass(x0, x)? - delta))
    }

    /// Finds `x <= x0` with `mass(x, x0) = delta`.
    fn retreat(&self, x0: f64, delta: f64) -> Result<f64> {
        let (mut a, b) = (self.lo, x0);
        if !a.is_finite() {
            let mut step = x0.abs().max(1.0);
            a = x0 - step;
            while self.mass(a, x0)? < delta {
                step *= 4.0;
                a = x0 - step;
                if !a.is_finite() {
                    return Err(Error::InvalidArgument("quantile search ran off to infinity".into()));
                }
            }
        }
        self.solve(a, b, |x| Ok(delta - self.mass(x, x0)?))
    }

    /// Safeguarded Newton on an increasing `g` with a sign change on `[a, b]`.
    fn solve<G: Fn(f64) -> Result<f64>>(&self, mut a: f64, mut b: f64, g: G) -> Result<f64> {
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let gx = g(x)?;
            if gx.abs() <= 1e-15 {
                return Ok(x);
            }
            if gx > 0.0 {
                b = x;
            } else {
                a = x;
            }
            if b - a <= 4.0 * f64::EPSILON * (a.abs().max(b.abs()).max(1.0)) {
                return Ok(0.5 * (a + b));
            }
            let p = self.prob_density(x);
            let newton = x - gx / p;
            x = if p.is_finite() && p > 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
        }
        Ok(x)
    }
}

fn continuous_nodes(m: &RealMeasure, n: usize, cut: f64) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = m
        .pieces()
        .iter()
        .map(|p| p.effective_support())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (l, h)| (a.min(l), b.max(h)));
    let cdf = Cdf { m, lo, hi };
    // Anchor the running position at a finite point with known mass below it.
    let (mut x, mut below) = if lo.is_finite() {
        (lo, 0.0)
    } else if hi.is_finite() {
        (hi, f64::NAN)
    } else {
        (0.0, f64::NAN)
    };
    let total = cdf.mass(lo, hi)?;
    if below.is_nan() {
        below = cdf.mass(lo, x)?;
    }
    let h = (1.0 - 2.0 * cut) * total / n as f64;
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let target = total * cut + h * (j as f64 + 0.5);
        let next = if target >= below {
            cdf.advance(x, target - below)?
        } else {
            cdf.retreat(x, below - target)?
        };
        x = next;
        below = target;
        let mut prob = h;
        if j == 0 {
            prob += cut * total;
        }
        if j == n - 1 {
            prob += cut * total;
        }
        out.push((x, prob * (1.0 + x * x)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homogeneous::HomogeneousModel;

    fn k(re: f64, im: f64) -> VonNeumannParameter {
        VonNeumannParameter::new(Complex::new(re, im)).unwrap()
    }

    #[test]
    fn two_by_two_trace_formula() {
        let t = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), Complex::i()]);
        let t = DissipativeMatrix::from_matrix(t).unwrap();
        assert_eq!(t.imag_rank(), 1);
        for z in [Complex::new(0.3, 0.5), Complex::new(-2.0, 3.0)] {
            let s = char_bounded_trace(&t, z).unwrap();
            assert!((s - (z - Complex::i()) / (z + Complex::i())).norm() < 1e-14);
        }
        let far = char_bounded_trace(&t, Complex::new(0.0, 1e6)).unwrap();
        assert!((far - 1.0).norm() < 1e-5);
    }

    #[test]
    fn dissipative_build_is_rank_one_and_anchor_free() {
        let d = DiscreteModel::random(50, 7).unwrap();
        let a = build_dissipative(&d, Complex::i()).unwrap();
        let b = build_dissipative(&d, Complex::new(0.0, 2.0)).unwrap();
        assert!(a.min_imag_eigenvalue() >= -1e-10);
        assert_eq!(a.imag_rank(), 1);
        let diff = (a.matrix() - b.matrix()).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(diff < 1e-8, "{diff}");
        let structured = d.rank_one().dense();
        let diff = (a.matrix() - structured).iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(diff < 1e-9, "{diff}");
    }

    #[test]
    fn structured_and_dense_characteristic_functions_agree() {
        let d = DiscreteModel::random(30, 3).unwrap();
        let r = d.rank_one();
        let dense = DissipativeMatrix::from_matrix(r.dense()).unwrap();
        let f = MobiusMap::new(2.0, 1.0, 3.0, 2.0).unwrap();
        let image = dense.mobius_image(&f).unwrap();
        for z in [Complex::new(0.2, 0.7), Complex::new(-1.0, 2.0)] {
            let a = char_bounded_trace(&dense, z).unwrap();
            assert!((a - r.char_fn(z).unwrap()).norm() < 1e-10);
            let b = char_bounded_trace(&image, z).unwrap();
            assert!((b - r.char_of_image(&f, z).unwrap()).norm() < 1e-9);
        }
    }

    #[test]
    fn resolvent_identity_and_rank_one_inverse() {
        for seed in 0..3 {
            let d = DiscreteModel::random(50, seed).unwrap();
            let r = check_resolvent_identity(&d, Complex::i(), Complex::new(0.0, 2.0)).unwrap();
            assert!(r < 1e-8, "{r}");
            assert!(check_rank_one_inverse(&d).unwrap() < 1e-10);
        }
        let d = DiscreteModel::random(50, 11).unwrap().with_kappa(VonNeumannParameter::zero());
        assert!(check_rank_one_inverse(&d).unwrap() < 1e-10);
        let small = DiscreteModel::normalized(vec![-1.0, 2.0], vec![1.0, 1.0], k(0.2, 0.1)).unwrap();
        assert!(check_resolvent_identity(&small, Complex::i(), Complex::new(0.0, 2.0)).unwrap() < 1e-12);
        assert!(check_resolvent_identity(&small, Complex::i(), Complex::i()).is_err());
        let zero = DiscreteModel::normalized(vec![0.0, 2.0], vec![1.0, 1.0], k(0.2, 0.1)).unwrap();
        assert_eq!(check_rank_one_inverse(&zero), Err(Error::NodeAtZero));
    }

    #[test]
    fn discretization_examples() {
        let atom = ModelTriple::new(RealMeasure::atom(0.0, 1.0).unwrap(), VonNeumannParameter::zero()).unwrap();
        let d = discretize(&atom, 10, 1e-4).unwrap();
        assert_eq!(d.nodes(), &[0.0]);

        let leb = ModelTriple::new(RealMeasure::lebesgue().normalize().unwrap(), VonNeumannParameter::zero()).unwrap();
        let d = discretize(&leb, 2000, 1e-4).unwrap();
        let err = (d.weyl_m(Complex::new(0.0, 2.0)) - Complex::i()).norm();
        assert!(err < 1e-3, "{err}");

        let h = HomogeneousModel::positive(0.5).unwrap();
        let t = ModelTriple::homogeneous(h, VonNeumannParameter::zero()).unwrap();
        let d = discretize(&t, 4000, 1e-4).unwrap();
        for z in crate::grid::standard_grid().into_iter().step_by(2) {
            let err = (d.weyl_m(z) - h.closed_form_m(z)).norm();
            assert!(err < 1e-3, "{z}: {err}");
        }
    }

    #[test]
    fn discretization_error_decreases_with_n() {
        let h = HomogeneousModel::positive(0.5).unwrap();
        let t = ModelTriple::homogeneous(h, VonNeumannParameter::zero()).unwrap();
        let z = Complex::new(0.5, 0.5);
        let errs: Vec<f64> = [250, 500, 1000, 2000]
            .iter()
            .map(|&n| (discretize(&t, n, 1e-4).unwrap().weyl_m(z) - h.closed_form_m(z)).norm())
            .collect();
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((4.0 / 3.0..=3.0).contains(&ratio), "{errs:?}");
        }
    }
}
