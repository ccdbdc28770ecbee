//! Real Möbius maps `z -> (a z + b) / (c z + d)` with `ad - bc = 1`.

use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Result};

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Extended {
    Finite(Complex),
    Infinity,
}

impl Extended {
    pub fn finite(self) -> Option<Complex> {
        match self {
            Extended::Finite(z) => Some(z),
            Extended::Infinity => None,
        }
    }
}

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ExtendedReal {
    Finite(f64),
    Infinity,
}

impl ExtendedReal {
    pub fn finite_value(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(x) => Some(x),
            ExtendedReal::Infinity => None,
        }
    }
}

/// Entries are stored scaled to determinant one with `a > 0`, or `a == 0`
/// and `b > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

/// Factorisation `f = h ∘ ι ∘ g` with affine `g(z) = z - omega` and
/// `h(u) = slope * u + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Decomposition {
    Affine { slope: f64, shift: f64 },
    ThroughInversion { omega: f64, slope: f64, shift: f64 },
}

impl MobiusMap {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidArgument("Möbius coefficients must be finite".into()));
        }
        let det = a * d - b * c;
        let size = a.abs().max(b.abs()).max(c.abs()).max(d.abs());
        if !(det > 1e-14 * size * size) {
            return Err(Error::InvalidArgument(format!(
                "Möbius map needs ad - bc > 0, got {det}"
            )));
        }
        let s = det.sqrt();
        let (mut a, mut b, mut c, mut d) = (a / s, b / s, c / s, d / s);
        if a < 0.0 || (a == 0.0 && b < 0.0) {
            a = -a;
            b = -b;
            c = -c;
            d = -d;
        }
        Ok(MobiusMap { a, b, c, d })
    }

    pub fn identity() -> Self {
        MobiusMap { a: 1.0, b: 0.0, c: 0.0, d: 1.0 }
    }

    /// `z -> -1/z`.
    pub fn inversion() -> Self {
        MobiusMap { a: 0.0, b: 1.0, c: -1.0, d: 0.0 }
    }

    /// `z -> slope z + shift`, `slope > 0`.
    pub fn affine(slope: f64, shift: f64) -> Result<Self> {
        if !(slope > 0.0) {
            return Err(Error::InvalidArgument(format!("affine slope must be positive, got {slope}")));
        }
        Self::new(slope, shift, 0.0, 1.0)
    }

    pub fn translation(shift: f64) -> Self {
        MobiusMap { a: 1.0, b: shift, c: 0.0, d: 1.0 }
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn is_affine(&self) -> bool {
        self.c == 0.0
    }

    pub fn is_identity(&self) -> bool {
        self.c == 0.0 && self.b == 0.0 && self.a == 1.0 && self.d == 1.0
    }

    pub fn is_inversion(&self) -> bool {
        self.a == 0.0 && self.d == 0.0 && self.b == 1.0 && self.c == -1.0
    }

    /// `(slope, shift)` when the map is affine.
    pub fn affine_parts(&self) -> Option<(f64, f64)> {
        self.is_affine().then(|| (self.a / self.d, self.b / self.d))
    }

    pub fn apply(&self, z: Complex) -> Extended {
        let den = z * self.c + self.d;
        if den == Complex::new(0.0, 0.0) {
            return Extended::Infinity;
        }
        Extended::Finite((z * self.a + self.b) / den)
    }

    pub fn apply_ext(&self, z: Extended) -> Extended {
        match z {
            Extended::Finite(w) => self.apply(w),
            Extended::Infinity if self.c == 0.0 => Extended::Infinity,
            Extended::Infinity => Extended::Finite(Complex::new(self.a / self.c, 0.0)),
        }
    }

    pub fn apply_real(&self, x: f64) -> ExtendedReal {
        let den = self.c * x + self.d;
        if den == 0.0 {
            return ExtendedReal::Infinity;
        }
        ExtendedReal::Finite((self.a * x + self.b) / den)
    }

    pub fn apply_ext_real(&self, x: ExtendedReal) -> ExtendedReal {
        match x {
            ExtendedReal::Finite(v) => self.apply_real(v),
            ExtendedReal::Infinity if self.c == 0.0 => ExtendedReal::Infinity,
            ExtendedReal::Infinity => ExtendedReal::Finite(self.a / self.c),
        }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MobiusMap) -> MobiusMap {
        let (p, q) = (self, other);
        MobiusMap::new(
            p.a * q.a + p.b * q.c,
            p.a * q.b + p.b * q.d,
            p.c * q.a + p.d * q.c,
            p.c * q.b + p.d * q.d,
        )
        .expect("product of SL2 matrices")
    }

    pub fn inverse(&self) -> MobiusMap {
        MobiusMap::new(self.d, -self.b, -self.c, self.a).expect("inverse of SL2 matrix")
    }

    /// `f^-1(∞) = -d/c`, or `∞` for affine maps.
    pub fn preimage_infinity(&self) -> ExtendedReal {
        if self.c == 0.0 {
            ExtendedReal::Infinity
        } else {
            ExtendedReal::Finite(-self.d / self.c)
        }
    }

    pub fn decompose(&self) -> Result<Decomposition> {
        if let Some((slope, shift)) = self.affine_parts() {
            return Ok(Decomposition::Affine { slope, shift });
        }
        let omega = -self.d / self.c;
        let (slope, shift) = (1.0 / (self.c * self.c), self.a / self.c);
        if !(slope.is_finite() && shift.is_finite() && omega.is_finite()) {
            return Err(Error::DecompositionFailure);
        }
        Ok(Decomposition::ThroughInversion { omega, slope, shift })
    }
}

impl Decomposition {
    /// The factors in application order.
    pub fn steps(&self) -> Vec<MobiusMap> {
        match *self {
            Decomposition::Affine { slope, shift } => {
                vec![MobiusMap::affine(slope, shift).expect("positive slope")]
            }
            Decomposition::ThroughInversion { omega, slope, shift } => vec![
                MobiusMap::translation(-omega),
                MobiusMap::inversion(),
                MobiusMap::affine(slope, shift).expect("positive slope"),
            ],
        }
    }

    pub fn recompose(&self) -> MobiusMap {
        self.steps()
            .iter()
            .fold(MobiusMap::identity(), |acc, g| g.compose(&acc))
    }
}
