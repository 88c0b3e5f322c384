//! Cartesian discretization of the design region, shape masks and grid fields.
//!
//! Cells are stored in a flat vector with the x index running fastest. The
//! outermost layer of cells (the boundary ring) never belongs to a shape: it
//! carries the homogeneous Dirichlet data for every elliptic problem and
//! keeps every mask strictly inside the region.

mod edt;
mod metrics;
mod raster;

pub use metrics::{
    component_count, distance_transform, erode_complement, fraenkel_asymmetry, measure_stats, oriented_distance,
    set_distances, sym_diff, DistanceTarget, MeasureStats, SetDistances,
};
pub use raster::{rasterize, Primitive};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniform Cartesian grid over a box in one or two dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub struct GridDomain {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    cells: [usize; 2],
    h: f64,
}

/// Plain description of a domain as it appears in configuration files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub cells: Vec<usize>,
}

impl TryFrom<DomainSpec> for GridDomain {
    type Error = Error;

    fn try_from(spec: DomainSpec) -> Result<Self> {
        GridDomain::new(&spec.lower, &spec.upper, &spec.cells)
    }
}

impl From<GridDomain> for DomainSpec {
    fn from(d: GridDomain) -> Self {
        DomainSpec {
            lower: d.lower[..d.dim].to_vec(),
            upper: d.upper[..d.dim].to_vec(),
            cells: d.cells[..d.dim].to_vec(),
        }
    }
}

const SPACING_RTOL: f64 = 1e-9;

impl GridDomain {
    /// Builds a domain from per-axis bounds and cell counts. The spacing must
    /// agree across axes.
    pub fn new(lower: &[f64], upper: &[f64], cells: &[usize]) -> Result<Self> {
        let dim = lower.len();
        if !(dim == 1 || dim == 2) || upper.len() != dim || cells.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "expected 1 or 2 axes with matching lengths, got {} / {} / {}",
                lower.len(),
                upper.len(),
                cells.len()
            )));
        }
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        let mut n = [1usize; 2];
        for a in 0..dim {
            if !(lower[a].is_finite() && upper[a].is_finite()) || upper[a] <= lower[a] {
                return Err(Error::InvalidDomain(format!(
                    "axis {a}: need finite lower < upper, got [{}, {}]",
                    lower[a], upper[a]
                )));
            }
            if cells[a] < 3 {
                return Err(Error::InvalidDomain(format!(
                    "axis {a}: at least 3 cells required, got {}",
                    cells[a]
                )));
            }
            lo[a] = lower[a];
            hi[a] = upper[a];
            n[a] = cells[a];
        }
        let h = (hi[0] - lo[0]) / n[0] as f64;
        if dim == 2 {
            let hy = (hi[1] - lo[1]) / n[1] as f64;
            if ((hy - h) / h).abs() > SPACING_RTOL {
                return Err(Error::InvalidDomain(format!(
                    "non-uniform spacing: hx = {h}, hy = {hy}"
                )));
            }
        }
        Ok(GridDomain {
            dim,
            lower: lo,
            upper: hi,
            cells: n,
            h,
        })
    }

    /// Square domain `[lo, hi]^2` with `n` cells per axis.
    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(&[lo, lo], &[hi, hi], &[n, n])
    }

    /// Interval `[lo, hi]` with `n` cells.
    pub fn interval(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(&[lo], &[hi], &[n])
    }

    /// Square grid whose cell centers include `lo` and `hi` exactly, so that the
    /// boundary ring sits on the edges of the box `[lo, hi]^d`. Useful for
    /// rectangles whose sides should carry exact Dirichlet data.
    pub fn vertex_aligned(lo: f64, hi: f64, intervals: usize, dim: usize) -> Result<Self> {
        let h = (hi - lo) / intervals as f64;
        let n = intervals + 1;
        let (a, b) = (lo - 0.5 * h, hi + 0.5 * h);
        match dim {
            1 => Self::new(&[a], &[b], &[n]),
            2 => Self::new(&[a, a], &[b, b], &[n, n]),
            _ => Err(Error::InvalidDomain(format!("unsupported dimension {dim}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn cells(&self) -> [usize; 2] {
        self.cells
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    /// Total number of cells.
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lebesgue measure of one cell, `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Measure of one cell face, `h^(d-1)`.
    pub fn face_area(&self) -> f64 {
        self.h.powi(self.dim as i32 - 1)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.cells[0] * j
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.cells[0], idx / self.cells[0])
    }

    /// Cell center; the second component is zero in one dimension.
    #[inline]
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.coords(idx);
        let x = self.lower[0] + (i as f64 + 0.5) * self.h;
        let y = if self.dim == 2 {
            self.lower[1] + (j as f64 + 0.5) * self.h
        } else {
            0.0
        };
        [x, y]
    }

    /// Cell containing the point, if any.
    pub fn locate(&self, p: [f64; 2]) -> Option<usize> {
        let fi = ((p[0] - self.lower[0]) / self.h).floor();
        if fi < 0.0 || fi >= self.cells[0] as f64 {
            return None;
        }
        let j = if self.dim == 2 {
            let fj = ((p[1] - self.lower[1]) / self.h).floor();
            if fj < 0.0 || fj >= self.cells[1] as f64 {
                return None;
            }
            fj as usize
        } else {
            0
        };
        Some(self.index(fi as usize, j))
    }

    /// Whether the cell belongs to the outermost layer of the grid.
    #[inline]
    pub fn is_ring(&self, idx: usize) -> bool {
        let (i, j) = self.coords(idx);
        let xr = i == 0 || i + 1 == self.cells[0];
        if self.dim == 1 {
            xr
        } else {
            xr || j == 0 || j + 1 == self.cells[1]
        }
    }

    /// Face neighbors of a cell, in the order -x, +x, -y, +y. Missing
    /// neighbors (beyond the grid) are `None`.
    #[inline]
    pub fn neighbors(&self, idx: usize) -> [Option<usize>; 4] {
        let (i, j) = self.coords(idx);
        let nx = self.cells[0];
        let mut out = [None; 4];
        if i > 0 {
            out[0] = Some(idx - 1);
        }
        if i + 1 < nx {
            out[1] = Some(idx + 1);
        }
        if self.dim == 2 {
            if j > 0 {
                out[2] = Some(idx - nx);
            }
            if j + 1 < self.cells[1] {
                out[3] = Some(idx + nx);
            }
        }
        out
    }

    /// Number of face directions, `2d`.
    pub fn directions(&self) -> usize {
        2 * self.dim
    }

    /// Outward unit normal of direction `k` as used by [`GridDomain::neighbors`].
    pub fn direction_normal(k: usize) -> [f64; 2] {
        match k {
            0 => [-1.0, 0.0],
            1 => [1.0, 0.0],
            2 => [0.0, -1.0],
            _ => [0.0, 1.0],
        }
    }

    /// Radius of the largest ball centered at `c` that stays within the box.
    pub fn inradius_at(&self, c: [f64; 2]) -> f64 {
        (0..self.dim)
            .map(|a| (c[a] - self.lower[a]).min(self.upper[a] - c[a]))
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_same(&self, other: &GridDomain) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

/// Indicator of a subset of the grid. Boundary ring cells are always outside.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapeMask {
    domain: GridDomain,
    inside: Vec<bool>,
}

impl ShapeMask {
    /// Wraps a cell vector. Fails if a boundary ring cell is marked inside.
    pub fn new(domain: GridDomain, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != domain.len() {
            return Err(Error::invalid(format!(
                "mask has {} cells, domain has {}",
                inside.len(),
                domain.len()
            )));
        }
        if let Some(idx) = (0..inside.len()).find(|&k| inside[k] && domain.is_ring(k)) {
            return Err(Error::Invariant(format!("boundary ring cell {idx} marked inside")));
        }
        Ok(ShapeMask { domain, inside })
    }

    pub fn empty(domain: GridDomain) -> Self {
        ShapeMask {
            domain,
            inside: vec![false; domain.len()],
        }
    }

    /// Every cell except the boundary ring.
    pub fn full(domain: GridDomain) -> Self {
        Self::from_fn(domain, |_| true)
    }

    /// Builds a mask from a per-cell predicate; ring cells are cleared.
    pub fn from_fn(domain: GridDomain, mut f: impl FnMut(usize) -> bool) -> Self {
        let inside = (0..domain.len()).map(|k| !domain.is_ring(k) && f(k)).collect();
        ShapeMask { domain, inside }
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn cells(&self) -> &[bool] {
        &self.inside
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    /// Number of inside cells.
    pub fn count(&self) -> usize {
        self.inside.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.inside.iter().any(|&b| b)
    }

    pub fn iter_inside(&self) -> impl Iterator<Item = usize> + '_ {
        self.inside.iter().enumerate().filter_map(|(k, &b)| b.then_some(k))
    }

    pub fn volume(&self) -> f64 {
        self.count() as f64 * self.domain.cell_volume()
    }

    pub fn union(&self, other: &ShapeMask) -> Result<ShapeMask> {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &ShapeMask) -> Result<ShapeMask> {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &ShapeMask) -> Result<ShapeMask> {
        self.zip(other, |a, b| a && !b)
    }

    pub fn is_subset_of(&self, other: &ShapeMask) -> Result<bool> {
        self.domain.check_same(&other.domain)?;
        Ok(self.inside.iter().zip(&other.inside).all(|(&a, &b)| !a || b))
    }

    /// Interior cells that are not in the mask.
    pub fn complement(&self) -> ShapeMask {
        Self::from_fn(self.domain, |k| !self.inside[k])
    }

    /// Shifts the mask by whole cells; cells leaving the interior are dropped.
    pub fn translate(&self, di: isize, dj: isize) -> ShapeMask {
        let d = self.domain;
        let [nx, ny] = d.cells();
        let mut out = vec![false; d.len()];
        for k in self.iter_inside() {
            let (i, j) = d.coords(k);
            let (ti, tj) = (i as isize + di, j as isize + dj);
            if ti < 0 || tj < 0 || ti >= nx as isize || tj >= ny as isize {
                continue;
            }
            let t = d.index(ti as usize, tj as usize);
            if !d.is_ring(t) {
                out[t] = true;
            }
        }
        ShapeMask { domain: d, inside: out }
    }

    /// Adds cells to the mask; ring cells are rejected.
    pub fn with_cells(&self, cells: &[usize]) -> Result<ShapeMask> {
        let mut out = self.clone();
        for &k in cells {
            if self.domain.is_ring(k) {
                return Err(Error::Invariant(format!("cannot add ring cell {k}")));
            }
            out.inside[k] = true;
        }
        Ok(out)
    }

    fn zip(&self, other: &ShapeMask, f: impl Fn(bool, bool) -> bool) -> Result<ShapeMask> {
        self.domain.check_same(&other.domain)?;
        let inside = self.inside.iter().zip(&other.inside).map(|(&a, &b)| f(a, b)).collect();
        Ok(ShapeMask {
            domain: self.domain,
            inside,
        })
    }
}

/// A real value per cell. Values are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGridField {
    domain: GridDomain,
    values: Vec<f64>,
}

impl ScalarGridField {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::invalid(format!(
                "field has {} values, domain has {} cells",
                values.len(),
                domain.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invariant(format!("non-finite field value at cell {k}")));
        }
        Ok(ScalarGridField { domain, values })
    }

    pub fn zeros(domain: GridDomain) -> Self {
        ScalarGridField {
            domain,
            values: vec![0.0; domain.len()],
        }
    }

    pub fn constant(domain: GridDomain, c: f64) -> Self {
        ScalarGridField {
            domain,
            values: vec![c; domain.len()],
        }
    }

    /// Samples a function at the cell centers.
    pub fn from_fn(domain: GridDomain, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..domain.len()).map(|k| f(domain.center(k))).collect();
        Self::new(domain, values)
    }

    pub fn domain(&self) -> &GridDomain {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    /// `∫_D u dx` as a cell sum.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.domain.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        l2_norm(&self.values, &self.domain)
    }

    pub fn l2_distance(&self, other: &ScalarGridField) -> Result<f64> {
        self.domain.check_same(&other.domain)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok((s * self.domain.cell_volume()).sqrt())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Cell-wise `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &ScalarGridField, b: f64) -> Result<ScalarGridField> {
        self.domain.check_same(&other.domain)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        ScalarGridField::new(self.domain, values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarGridField> {
        ScalarGridField::new(self.domain, self.values.iter().map(|&v| f(v)).collect())
    }
}

pub(crate) fn l2_norm(values: &[f64], domain: &GridDomain) -> f64 {
    (values.iter().map(|v| v * v).sum::<f64>() * domain.cell_volume()).sqrt()
}
