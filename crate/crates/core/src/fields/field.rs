use num_complex::Complex64;

use super::GridSpec;
use crate::error::{LabError, Result};
use crate::par;

pub type C64 = Complex64;

/// Complex samples on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    data: Vec<C64>,
}

/// Real samples on every node of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: GridSpec,
    data: Vec<f64>,
}

/// Three complex components on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub comps: [ScalarField; 3],
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![C64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<C64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> C64 + Sync + Send) -> Self {
        let data = par::collect(grid.len(), |i| f(grid.point(i)));
        Self { grid, data }
    }

    /// Sample `f` at interior nodes and hold the boundary layer at zero.
    pub fn from_fn_dirichlet(grid: GridSpec, f: impl Fn([f64; 3]) -> C64 + Sync + Send) -> Self {
        let data = par::collect(grid.len(), |i| {
            if grid.is_boundary(i) {
                C64::new(0.0, 0.0)
            } else {
                f(grid.point(i))
            }
        });
        Self { grid, data }
    }

    /// Same as [`from_fn_dirichlet`](Self::from_fn_dirichlet) with `f(idx)`.
    pub fn from_index_fn(grid: GridSpec, f: impl Fn(usize) -> C64 + Sync + Send) -> Self {
        let data = par::collect(grid.len(), |i| {
            if grid.is_boundary(i) {
                C64::new(0.0, 0.0)
            } else {
                f(i)
            }
        });
        Self { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    #[inline]
    pub fn get(&self, idx: usize) -> C64 {
        self.data[idx]
    }

    /// First node holding a non-finite value.
    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            None => Ok(()),
            Some(index) => Err(LabError::NonFinite {
                index,
                point: self.grid.point(index),
            }),
        }
    }

    pub fn zero_boundary(&mut self) {
        let g = self.grid;
        for (i, z) in self.data.iter_mut().enumerate() {
            if g.is_boundary(i) {
                *z = C64::new(0.0, 0.0);
            }
        }
    }

    pub fn scaled(&self, s: C64) -> Self {
        let data = par::collect(self.data.len(), |i| self.data[i] * s);
        Self {
            grid: self.grid,
            data,
        }
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: C64, other: &ScalarField) -> Self {
        let data = par::collect(self.data.len(), |i| self.data[i] + s * other.data[i]);
        Self {
            grid: self.grid,
            data,
        }
    }

    /// `self += s * other` in place.
    pub fn axpy(&mut self, s: C64, other: &ScalarField) {
        let o = other.data();
        par::update(&mut self.data, |i, v| *v += s * o[i]);
    }

    /// `self = s * self + other` in place.
    pub fn scale_add(&mut self, s: C64, other: &ScalarField) {
        let o = other.data();
        par::update(&mut self.data, |i, v| *v = s * *v + o[i]);
    }

    /// Pointwise product with a real field.
    pub fn mul_real(&self, w: &RealField) -> Self {
        let data = par::collect(self.data.len(), |i| self.data[i] * w.data()[i]);
        Self {
            grid: self.grid,
            data,
        }
    }

    /// `⟨self, other⟩ = Σ conj(self) other h³`
    pub fn inner(&self, other: &ScalarField) -> C64 {
        let s = par::sum(self.data.len(), C64::new(0.0, 0.0), |i| {
            self.data[i].conj() * other.data[i]
        });
        s * self.grid.cell_volume()
    }

    pub fn norm_sqr(&self) -> f64 {
        par::sum(self.data.len(), 0.0, |i| self.data[i].norm_sqr()) * self.grid.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `|u|²` as a real field.
    pub fn density(&self) -> RealField {
        RealField::from_index_fn_all(self.grid, |i| self.data[i].norm_sqr())
    }

    pub fn real_part(&self) -> RealField {
        RealField::from_index_fn_all(self.grid, |i| self.data[i].re)
    }
}

impl RealField {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(LabError::GridMismatch(format!(
                "expected {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> f64 + Sync + Send) -> Self {
        let data = par::collect(grid.len(), |i| f(grid.point(i)));
        Self { grid, data }
    }

    pub fn from_index_fn_all(grid: GridSpec, f: impl Fn(usize) -> f64 + Sync + Send) -> Self {
        let data = par::collect(grid.len(), f);
        Self { grid, data }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, idx: usize) -> f64 {
        self.data[idx]
    }

    pub fn to_complex(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.data.iter().position(|x| !x.is_finite()) {
            None => Ok(()),
            Some(index) => Err(LabError::NonFinite {
                index,
                point: self.grid.point(index),
            }),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync + Send) -> Self {
        Self::from_index_fn_all(self.grid, |i| f(self.data[i]))
    }
}

impl VectorField {
    pub fn new(c0: ScalarField, c1: ScalarField, c2: ScalarField) -> Result<Self> {
        c0.grid().check_same(c1.grid())?;
        c0.grid().check_same(c2.grid())?;
        Ok(Self {
            comps: [c0, c1, c2],
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            comps: [
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
                ScalarField::zeros(grid),
            ],
        }
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        self.comps[0].grid()
    }

    #[inline]
    pub fn at(&self, idx: usize) -> [C64; 3] {
        [
            self.comps[0].data()[idx],
            self.comps[1].data()[idx],
            self.comps[2].data()[idx],
        ]
    }

    /// Pointwise `Σ_k |g_k|²`.
    pub fn norm_sqr_density(&self) -> RealField {
        RealField::from_index_fn_all(*self.grid(), |i| {
            self.at(i).iter().map(|z| z.norm_sqr()).sum()
        })
    }
}
