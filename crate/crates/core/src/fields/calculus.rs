use super::{GridSpec, RealField, ScalarField, VectorField, C64};
use crate::error::{LabError, Result};
use crate::par;

/// Midpoint quadrature `Σ f(x_i) h³`.
pub fn integrate(f: &ScalarField) -> Result<C64> {
    f.check_finite()?;
    let s = par::sum(f.data().len(), C64::new(0.0, 0.0), |i| f.data()[i]);
    Ok(s * f.grid().cell_volume())
}

/// Midpoint quadrature of a real field.
pub fn integrate_real(f: &RealField) -> Result<f64> {
    f.check_finite()?;
    Ok(sum_real(f) * f.grid().cell_volume())
}

pub(crate) fn sum_real(f: &RealField) -> f64 {
    par::sum(f.data().len(), 0.0, |i| f.data()[i])
}

/// Quadrature of `g(idx)` over all nodes, unchecked.
pub(crate) fn quad(grid: &GridSpec, g: impl Fn(usize) -> f64 + Sync + Send) -> f64 {
    par::sum(grid.len(), 0.0, g) * grid.cell_volume()
}

/// Central difference along `axis` with zero ghost values outside the box.
#[inline]
pub fn central_diff(grid: &GridSpec, data: &[C64], idx: usize, axis: usize) -> C64 {
    let zero = C64::new(0.0, 0.0);
    let fwd = grid.neighbor(idx, axis, true).map_or(zero, |j| data[j]);
    let bwd = grid.neighbor(idx, axis, false).map_or(zero, |j| data[j]);
    (fwd - bwd) / (2.0 * grid.h())
}

#[inline]
pub fn central_diff_real(grid: &GridSpec, data: &[f64], idx: usize, axis: usize) -> f64 {
    let fwd = grid.neighbor(idx, axis, true).map_or(0.0, |j| data[j]);
    let bwd = grid.neighbor(idx, axis, false).map_or(0.0, |j| data[j]);
    (fwd - bwd) / (2.0 * grid.h())
}

/// Second-order central gradient.
pub fn gradient(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let comp = |axis: usize| {
        let data = par::collect(g.len(), |i| central_diff(&g, f.data(), i, axis));
        ScalarField::from_vec(g, data).expect("same grid")
    };
    VectorField {
        comps: [comp(0), comp(1), comp(2)],
    }
}

/// Central gradient of a real field, one real field per axis.
pub fn gradient_real(f: &RealField) -> [RealField; 3] {
    let g = *f.grid();
    let comp = |axis: usize| {
        RealField::from_index_fn_all(g, |i| central_diff_real(&g, f.data(), i, axis))
    };
    [comp(0), comp(1), comp(2)]
}

/// Nodes sorted by distance from the origin, for repeated shell queries.
#[derive(Debug, Clone)]
pub struct RadialIndex {
    grid: GridSpec,
    radii: Vec<f64>,
    nodes: Vec<usize>,
}

impl RadialIndex {
    pub fn new(grid: GridSpec) -> Self {
        let mut pairs: Vec<(f64, usize)> = (0..grid.len()).map(|i| (grid.radius(i), i)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let (radii, nodes) = pairs.into_iter().unzip();
        Self { grid, radii, nodes }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Nodes with `| |x| - rho | <= width`.
    pub fn shell(&self, rho: f64, width: f64) -> &[usize] {
        let lo = self.radii.partition_point(|&r| r < rho - width);
        let hi = self.radii.partition_point(|&r| r <= rho + width);
        &self.nodes[lo..hi]
    }

    /// Nodes with `|x| <= radius`.
    pub fn ball(&self, radius: f64) -> &[usize] {
        let hi = self.radii.partition_point(|&r| r <= radius);
        &self.nodes[..hi]
    }

    /// `max |f|` over the shell, `None` when no node lies in it.
    pub fn shell_sup(&self, f: &RealField, rho: f64, width: f64) -> Option<f64> {
        let nodes = self.shell(rho, width);
        if nodes.is_empty() {
            return None;
        }
        Some(nodes.iter().map(|&i| f.data()[i].abs()).fold(0.0, f64::max))
    }

    /// Mean of `f` over the shell, `None` when empty.
    pub fn shell_mean(&self, f: &RealField, rho: f64, width: f64) -> Option<f64> {
        let nodes = self.shell(rho, width);
        if nodes.is_empty() {
            return None;
        }
        Some(nodes.iter().map(|&i| f.data()[i]).sum::<f64>() / nodes.len() as f64)
    }
}

/// `sup |f|` over grid nodes with `| |x| - rho | <= width`.
///
/// An empty shell is an error, never a silent zero.
pub fn shell_sup(f: &RealField, rho: f64, width: f64) -> Result<f64> {
    let g = f.grid();
    if rho < 0.0 {
        return Err(LabError::InvalidParameter(format!("negative radius {rho}")));
    }
    if width < g.h() / 2.0 {
        return Err(LabError::InvalidParameter(format!(
            "shell half-width {width} below h/2 = {}",
            g.h() / 2.0
        )));
    }
    let mut found = false;
    let mut sup = 0.0f64;
    for i in 0..g.len() {
        if (g.radius(i) - rho).abs() <= width {
            found = true;
            sup = sup.max(f.data()[i].abs());
        }
    }
    if found {
        Ok(sup)
    } else {
        Err(LabError::EmptyShell {
            radius: rho,
            half_width: width,
        })
    }
}

/// Fraction of `∫|u|²` held by the outer `margin` layer of the box, where
/// some coordinate exceeds `(1 - margin) L` in magnitude.
pub fn tail_mass(u: &ScalarField, margin: f64) -> Result<f64> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(LabError::InvalidParameter(format!(
            "tail margin must lie in (0,1), got {margin}"
        )));
    }
    let g = *u.grid();
    let cut = (1.0 - margin) * g.half_width();
    let total = par::sum(g.len(), 0.0, |i| u.data()[i].norm_sqr());
    if total == 0.0 {
        return Ok(0.0);
    }
    let outer = par::sum(g.len(), 0.0, |i| {
        let p = g.point(i);
        if p.iter().any(|c| c.abs() > cut) {
            u.data()[i].norm_sqr()
        } else {
            0.0
        }
    });
    Ok(outer / total)
}
