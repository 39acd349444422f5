use serde::{Deserialize, Serialize};

use super::coefficients::Mat3;
use crate::error::{LabError, Result};
use crate::fields::{central_diff_real, gradient_real, GridSpec, RealField};
use crate::par;

/// Closed-form magnetic potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MagneticPreset {
    Zero,
    /// `s (−x₂, x₁, 0) / 2`, constant field `B₁₂ = s`.
    Rotating { strength: f64 },
    /// `s (−x₂, x₁, 0) e^{−|x|²} / 2`
    RotatingGaussian { strength: f64 },
}

/// Closed-form electric potentials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElectricPreset {
    Zero,
    /// `amp · e^{−|x|²}`
    Gaussian { amp: f64 },
    /// `c / (|x|² + core²)`
    InverseSquare { c: f64, core: f64 },
    /// `k |x|²`
    Harmonic { k: f64 },
}

impl MagneticPreset {
    pub fn eval(&self, x: [f64; 3]) -> [f64; 3] {
        match *self {
            MagneticPreset::Zero => [0.0; 3],
            MagneticPreset::Rotating { strength } => {
                [-0.5 * strength * x[1], 0.5 * strength * x[0], 0.0]
            }
            MagneticPreset::RotatingGaussian { strength } => {
                let e = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])).exp();
                [-0.5 * strength * x[1] * e, 0.5 * strength * x[0] * e, 0.0]
            }
        }
    }

    pub fn is_divergence_free(&self) -> bool {
        true
    }
}

impl ElectricPreset {
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
        match *self {
            ElectricPreset::Zero => 0.0,
            ElectricPreset::Gaussian { amp } => amp * (-r2).exp(),
            ElectricPreset::InverseSquare { c, core } => c / (r2 + core * core),
            ElectricPreset::Harmonic { k } => k * r2,
        }
    }
}

/// Magnetic potential `b` and electric potential `V` on a grid.
#[derive(Debug, Clone)]
pub struct Potentials {
    grid: GridSpec,
    b: [RealField; 3],
    /// `b_k` at the midpoint of the edge from node `i` to `i + e_k`.
    b_edge: [Vec<f64>; 3],
    /// `jac[idx][j][k] = ∂_j b_k`
    jac: Vec<Mat3>,
    v: RealField,
    grad_v: Vec<[f64; 3]>,
    divergence_free: bool,
}

const FD_STEP: f64 = 1e-3;

fn d4(f: impl Fn(f64) -> f64) -> f64 {
    (8.0 * (f(FD_STEP) - f(-FD_STEP)) - (f(2.0 * FD_STEP) - f(-2.0 * FD_STEP))) / (12.0 * FD_STEP)
}

impl Potentials {
    pub fn zero(grid: GridSpec) -> Self {
        Self::from_presets(grid, MagneticPreset::Zero, ElectricPreset::Zero)
    }

    pub fn from_presets(grid: GridSpec, b: MagneticPreset, v: ElectricPreset) -> Self {
        let mut p = Self::from_fns(grid, |x| b.eval(x), |x| v.eval(x));
        p.divergence_free = b.is_divergence_free();
        p
    }

    /// Potentials from closures; derivatives by fourth-order differences of the closures.
    pub fn from_fns(
        grid: GridSpec,
        b: impl Fn([f64; 3]) -> [f64; 3] + Sync + Send,
        v: impl Fn([f64; 3]) -> f64 + Sync + Send,
    ) -> Self {
        let node_b = par::collect(grid.len(), |i| b(grid.point(i)));
        let comp = |k: usize| {
            RealField::from_vec(grid, node_b.iter().map(|c| c[k]).collect()).expect("length")
        };
        let h = grid.h();
        let edge = |k: usize| {
            par::collect(grid.len(), |i| {
                let mut x = grid.point(i);
                x[k] += 0.5 * h;
                b(x)[k]
            })
        };
        let jac = par::collect(grid.len(), |i| {
            let x = grid.point(i);
            let mut m = [[0.0; 3]; 3];
            for (j, row) in m.iter_mut().enumerate() {
                for (k, val) in row.iter_mut().enumerate() {
                    *val = d4(|s| {
                        let mut y = x;
                        y[j] += s;
                        b(y)[k]
                    });
                }
            }
            m
        });
        let grad_v = par::collect(grid.len(), |i| {
            let x = grid.point(i);
            let mut g = [0.0; 3];
            for (j, gj) in g.iter_mut().enumerate() {
                *gj = d4(|s| {
                    let mut y = x;
                    y[j] += s;
                    v(y)
                });
            }
            g
        });
        let mut out = Self {
            grid,
            b: [comp(0), comp(1), comp(2)],
            b_edge: [edge(0), edge(1), edge(2)],
            jac,
            v: RealField::from_fn(grid, v),
            grad_v,
            divergence_free: false,
        };
        out.divergence_free = out.max_divergence() < 1e-8;
        out
    }

    /// Node-sampled potentials; edge values by averaging, derivatives by central differences.
    pub fn from_tabulated(b: [RealField; 3], v: RealField) -> Result<Self> {
        let grid = *v.grid();
        for c in &b {
            grid.check_same(c.grid())?;
            c.check_finite()?;
        }
        v.check_finite()?;
        let edge = |k: usize| {
            par::collect(grid.len(), |i| match grid.neighbor(i, k, true) {
                Some(p) => 0.5 * (b[k].data()[i] + b[k].data()[p]),
                None => b[k].data()[i],
            })
        };
        let b_edge = [edge(0), edge(1), edge(2)];
        let jac = par::collect(grid.len(), |i| {
            let mut m = [[0.0; 3]; 3];
            for (j, row) in m.iter_mut().enumerate() {
                for (k, val) in row.iter_mut().enumerate() {
                    *val = central_diff_real(&grid, b[k].data(), i, j);
                }
            }
            m
        });
        let gv = gradient_real(&v);
        let grad_v = (0..grid.len())
            .map(|i| [gv[0].data()[i], gv[1].data()[i], gv[2].data()[i]])
            .collect();
        let mut out = Self {
            grid,
            b,
            b_edge,
            jac,
            v,
            grad_v,
            divergence_free: false,
        };
        out.divergence_free = out.max_divergence() < 1e-8;
        Ok(out)
    }

    /// Declare (and verify) `div b = 0` up to `tol`.
    pub fn require_divergence_free(&self, tol: f64) -> Result<()> {
        let d = self.max_divergence();
        if d > tol {
            return Err(LabError::InvalidParameter(format!(
                "div b reaches {d:.3e}, above {tol:.3e}"
            )));
        }
        Ok(())
    }

    /// `max |div b|` over interior nodes.
    pub fn max_divergence(&self) -> f64 {
        let g = self.grid;
        (0..g.len())
            .filter(|&i| !g.is_boundary(i))
            .map(|i| (self.jac[i][0][0] + self.jac[i][1][1] + self.jac[i][2][2]).abs())
            .fold(0.0, f64::max)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn b(&self) -> &[RealField; 3] {
        &self.b
    }

    #[inline]
    pub fn b_at(&self, idx: usize) -> [f64; 3] {
        [self.b[0].data()[idx], self.b[1].data()[idx], self.b[2].data()[idx]]
    }

    #[inline]
    pub fn b_edge(&self, axis: usize) -> &[f64] {
        &self.b_edge[axis]
    }

    /// `∂_j b_k` at a node, indexed `[j][k]`.
    #[inline]
    pub fn jacobian(&self, idx: usize) -> &Mat3 {
        &self.jac[idx]
    }

    #[inline]
    pub fn v(&self) -> &RealField {
        &self.v
    }

    #[inline]
    pub fn grad_v(&self, idx: usize) -> [f64; 3] {
        self.grad_v[idx]
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    pub fn is_magnetic(&self) -> bool {
        self.b.iter().any(|c| c.data().iter().any(|&v| v != 0.0))
    }

    /// `max V⁺` over nodes.
    pub fn max_positive_v(&self) -> f64 {
        self.v.data().iter().fold(0.0, |m, &x| m.max(x))
    }

    pub fn min_v(&self) -> f64 {
        self.v.data().iter().fold(f64::INFINITY, |m, &x| m.min(x))
    }
}
