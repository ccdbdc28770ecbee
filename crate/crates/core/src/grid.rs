//! Rectangular sample grids in the upper half-plane.

use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Result};

/// `re_count` linearly spaced real parts times `im_count` log-spaced
/// imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub re_count: usize,
    pub im_count: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            re_min: -2.0,
            re_max: 2.0,
            im_min: 0.1,
            im_max: 10.0,
            re_count: 5,
            im_count: 4,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|x| x.is_finite());
        if !finite || !(self.im_min > 0.0) || self.im_max < self.im_min || self.re_max < self.re_min {
            return Err(Error::InvalidArgument(format!("bad grid bounds {self:?}")));
        }
        if self.re_count == 0 || self.im_count == 0 {
            return Err(Error::InvalidArgument("grid counts must be at least 1".into()));
        }
        Ok(())
    }

    /// Points in row-major order: imaginary part outer, real part inner.
    pub fn points(&self) -> Result<Vec<Complex>> {
        self.validate()?;
        let re = linspace(self.re_min, self.re_max, self.re_count);
        let im: Vec<f64> = linspace(self.im_min.ln(), self.im_max.ln(), self.im_count)
            .into_iter()
            .map(f64::exp)
            .collect();
        Ok(im
            .iter()
            .flat_map(|&y| re.iter().map(move |&x| Complex::new(x, y)))
            .collect())
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// The default 20-point grid.
pub fn standard_grid() -> Vec<Complex> {
    GridSpec::default().points().expect("default grid is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = standard_grid();
        assert_eq!(g.len(), 20);
        assert!((g[0] - Complex::new(-2.0, 0.1)).norm() < 1e-15);
        assert!((g[19] - Complex::new(2.0, 10.0)).norm() < 1e-12);
        assert!(g.iter().all(|z| z.im > 0.0));
    }

    #[test]
    fn rejects_lower_half_plane() {
        let spec = GridSpec {
            im_min: 0.0,
            ..GridSpec::default()
        };
        assert!(spec.points().is_err());
    }
}
