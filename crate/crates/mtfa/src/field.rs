//! Complex values on a uniform two-dimensional grid.

use num_complex::Complex64 as C64;

use crate::error::{MtfaError, Result};
use crate::fourier::Array2;
use crate::signals::UniformGrid;

/// Row-major field: `values[i * ugrid.count + j]` sits at `(xgrid[i], ugrid[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct TfDistribution {
    pub xgrid: UniformGrid,
    pub ugrid: UniformGrid,
    pub values: Vec<C64>,
}

impl TfDistribution {
    pub fn new(xgrid: UniformGrid, ugrid: UniformGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != xgrid.count * ugrid.count {
            return Err(MtfaError::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                xgrid.count,
                ugrid.count
            )));
        }
        Ok(Self { xgrid, ugrid, values })
    }

    pub fn zeros(xgrid: UniformGrid, ugrid: UniformGrid) -> Self {
        Self { xgrid, ugrid, values: vec![C64::new(0.0, 0.0); xgrid.count * ugrid.count] }
    }

    pub fn from_fn(xgrid: UniformGrid, ugrid: UniformGrid, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut values = Vec::with_capacity(xgrid.count * ugrid.count);
        for i in 0..xgrid.count {
            let x = xgrid.point(i);
            for j in 0..ugrid.count {
                values.push(f(x, ugrid.point(j)));
            }
        }
        Self { xgrid, ugrid, values }
    }

    /// Discrete delta: `1/(Δx·Δu)` at the origin node.
    pub fn delta(xgrid: UniformGrid, ugrid: UniformGrid) -> Result<Self> {
        let (i, j) = match (xgrid.zero_index(), ugrid.zero_index()) {
            (Some(i), Some(j)) => (i, j),
            _ => return Err(MtfaError::InvalidGrid("delta needs grids containing 0".into())),
        };
        let mut d = Self::zeros(xgrid, ugrid);
        d.values[i * ugrid.count + j] = C64::new(1.0 / (xgrid.step * ugrid.step), 0.0);
        Ok(d)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.ugrid.count + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.xgrid.count, self.ugrid.count)
    }

    pub fn cell(&self) -> f64 {
        self.xgrid.step * self.ugrid.step
    }

    pub fn same_grid(&self, other: &TfDistribution) -> bool {
        self.xgrid.same_as(&other.xgrid) && self.ugrid.same_as(&other.ugrid)
    }

    pub fn check_same_grid(&self, other: &TfDistribution) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(MtfaError::GridMismatch("fields live on different grids".into()))
        }
    }

    pub fn map(&self, f: impl Fn(f64, f64, C64) -> C64) -> Self {
        let mut out = self.clone();
        for i in 0..self.xgrid.count {
            let x = self.xgrid.point(i);
            for j in 0..self.ugrid.count {
                let k = i * self.ugrid.count + j;
                out.values[k] = f(x, self.ugrid.point(j), self.values[k]);
            }
        }
        out
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { xgrid: self.xgrid, ugrid: self.ugrid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn mean_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64
    }

    pub(crate) fn array(&self) -> Array2 {
        Array2::new(self.xgrid.count, self.ugrid.count, self.values.clone())
    }

    /// Row `i` (fixed x) as a slice.
    pub fn row(&self, i: usize) -> &[C64] {
        let n = self.ugrid.count;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.xgrid.count).map(|i| self.at(i, j)).collect()
    }

    /// Values on `(xgrid, ugrid)` read from this field at coinciding nodes,
    /// zero elsewhere. Grids must share steps and be node-aligned.
    pub fn embed(&self, xgrid: UniformGrid, ugrid: UniformGrid) -> Result<Self> {
        let off = |a: &UniformGrid, b: &UniformGrid| -> Result<i64> {
            if (a.step - b.step).abs() > 1e-9 * a.step {
                return Err(MtfaError::GridMismatch("steps differ".into()));
            }
            let t = (b.start - a.start) / a.step;
            if (t - t.round()).abs() > 1e-6 {
                return Err(MtfaError::GridMismatch("grids are not node aligned".into()));
            }
            Ok(t.round() as i64)
        };
        let ox = off(&self.xgrid, &xgrid)?;
        let ou = off(&self.ugrid, &ugrid)?;
        let mut out = Self::zeros(xgrid, ugrid);
        for i in 0..xgrid.count {
            let si = i as i64 + ox;
            if si < 0 || si >= self.xgrid.count as i64 {
                continue;
            }
            for j in 0..ugrid.count {
                let sj = j as i64 + ou;
                if sj < 0 || sj >= self.ugrid.count as i64 {
                    continue;
                }
                out.values[i * ugrid.count + j] = self.at(si as usize, sj as usize);
            }
        }
        Ok(out)
    }
}

/// Relative ℓ₂ distance between two fields on the same grid.
pub fn field_rel_l2(a: &TfDistribution, b: &TfDistribution) -> f64 {
    crate::signals::rel_l2(&a.values, &b.values)
}
