//! Staggered space-time grid and its discrete calculus.
//!
//! Densities and potentials are piecewise constant on cells; fluxes live on
//! cell faces at half indices with a zero-flux boundary. The time axis stores
//! one value per node t_k = k*dt, dt = 1/(n_t - 1), so the pinned endpoint
//! slices sit exactly at t = 0 and t = 1.
//!
//! The two time stencils are an exact adjoint pair: for every u and phi,
//! sum_k phi_k (dt_u u)_k = -sum_k (dt_phi phi)_k u_k, which is what makes
//! the discrete duality diagnostics exact rather than approximate.

use crate::error::{Error, Result};

/// Uniform cell grid on the unit interval (dims = 1) or unit square (dims = 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    dims: u8,
    n_x: usize,
    n_y: usize,
    dx: f64,
    dy: f64,
}

impl SpatialGrid {
    /// 1D grid with `n_x` cells on [0, 1].
    pub fn line(n_x: usize) -> Result<Self> {
        if n_x < 2 {
            return Err(Error::InvalidGrid(format!("n_x = {n_x}, need at least 2")));
        }
        Ok(SpatialGrid {
            dims: 1,
            n_x,
            n_y: 1,
            dx: 1.0 / n_x as f64,
            dy: 1.0,
        })
    }

    /// 2D grid with `n_x` x `n_y` cells on [0, 1]^2.
    pub fn square(n_x: usize, n_y: usize) -> Result<Self> {
        if n_x < 2 || n_y < 2 {
            return Err(Error::InvalidGrid(format!(
                "n_x = {n_x}, n_y = {n_y}, need at least 2 each"
            )));
        }
        Ok(SpatialGrid {
            dims: 2,
            n_x,
            n_y,
            dx: 1.0 / n_x as f64,
            dy: 1.0 / n_y as f64,
        })
    }

    pub fn dims(&self) -> u8 {
        self.dims
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    /// Cell count in y; 1 when dims = 1.
    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    /// Measure of one cell, dx*dy. Sums to |Omega| = 1 over the grid.
    pub fn cell_measure(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn n_cells(&self) -> usize {
        self.n_x * self.n_y
    }

    /// Flat index of cell (i, j), row-major with rows indexed by j.
    #[inline]
    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n_x && j < self.n_y);
        j * self.n_x + i
    }

    /// x-coordinate of the center of cell column i.
    #[inline]
    pub fn x_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    /// y-coordinate of the center of cell row j.
    #[inline]
    pub fn y_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.dy
    }
}

/// Time axis with `n_t` nodes t_k = k*dt, dt = 1/(n_t - 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    n_t: usize,
    dt: f64,
}

impl TimeGrid {
    /// `n_t >= 2`; the dt_phi stencil and the UW2 solver additionally need `n_t >= 3`.
    pub fn new(n_t: usize) -> Result<Self> {
        if n_t < 2 {
            return Err(Error::InvalidGrid(format!("n_t = {n_t}, need at least 2")));
        }
        Ok(TimeGrid {
            n_t,
            dt: 1.0 / (n_t - 1) as f64,
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// t_k = k*dt; t_0 = 0 and t_{n_t-1} = 1.
    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Trapezoidal node weights (1/2, 1, ..., 1, 1/2)*dt. These are the unique
    /// row weights under which the dt_u rows telescope exactly, so time
    /// integrals of the continuity equation are identities, not approximations.
    #[inline]
    pub fn node_weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.n_t - 1 {
            0.5 * self.dt
        } else {
            self.dt
        }
    }
}

/// Space-time grid bundle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub space: SpatialGrid,
    pub time: TimeGrid,
}

impl Grid {
    pub fn new(space: SpatialGrid, time: TimeGrid) -> Self {
        Grid { space, time }
    }
}

/// A scalar field on one spatial slice (n_y rows of n_x cells).
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    n_x: usize,
    n_y: usize,
    data: Vec<f64>,
}

impl SpatialField {
    pub fn zeros(space: &SpatialGrid) -> Self {
        SpatialField {
            n_x: space.n_x(),
            n_y: space.n_y(),
            data: vec![0.0; space.n_cells()],
        }
    }

    pub fn from_values(space: &SpatialGrid, data: Vec<f64>) -> Result<Self> {
        if data.len() != space.n_cells() {
            return Err(Error::ShapeMismatch(format!(
                "spatial field has {} values, grid has {} cells",
                data.len(),
                space.n_cells()
            )));
        }
        Ok(SpatialField {
            n_x: space.n_x(),
            n_y: space.n_y(),
            data,
        })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n_x + i]
    }

    pub fn same_shape(&self, other: &SpatialField) -> bool {
        self.n_x == other.n_x && self.n_y == other.n_y
    }
}

/// A scalar quantity piecewise constant on space-time cells (houses mu and Phi).
/// Time-major storage: slice k is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    n_t: usize,
    n_x: usize,
    n_y: usize,
    data: Vec<f64>,
}

impl CellField {
    pub fn zeros(grid: &Grid) -> Self {
        CellField {
            n_t: grid.time.n_t(),
            n_x: grid.space.n_x(),
            n_y: grid.space.n_y(),
            data: vec![0.0; grid.time.n_t() * grid.space.n_cells()],
        }
    }

    pub fn from_slices(grid: &Grid, slices: Vec<Vec<f64>>) -> Result<Self> {
        if slices.len() != grid.time.n_t() {
            return Err(Error::ShapeMismatch(format!(
                "{} slices for {} time nodes",
                slices.len(),
                grid.time.n_t()
            )));
        }
        let n_cells = grid.space.n_cells();
        let mut data = Vec::with_capacity(grid.time.n_t() * n_cells);
        for s in &slices {
            if s.len() != n_cells {
                return Err(Error::ShapeMismatch(format!(
                    "slice has {} values, grid has {n_cells} cells",
                    s.len()
                )));
            }
            data.extend_from_slice(s);
        }
        Ok(CellField {
            n_t: grid.time.n_t(),
            n_x: grid.space.n_x(),
            n_y: grid.space.n_y(),
            data,
        })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn slice(&self, k: usize) -> &[f64] {
        let n = self.n_cells();
        &self.data[k * n..(k + 1) * n]
    }

    pub fn slice_mut(&mut self, k: usize) -> &mut [f64] {
        let n = self.n_cells();
        &mut self.data[k * n..(k + 1) * n]
    }

    pub fn set_slice(&mut self, k: usize, values: &[f64]) {
        self.slice_mut(k).copy_from_slice(values);
    }

    /// Value at time node k, cell (i, j).
    #[inline]
    pub fn at(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n_y + j) * self.n_x + i]
    }

    /// Value at time node k, flat cell index c.
    #[inline]
    pub fn at_flat(&self, k: usize, c: usize) -> f64 {
        self.data[k * self.n_cells() + c]
    }

    pub fn same_shape(&self, other: &CellField) -> bool {
        self.n_t == other.n_t && self.n_x == other.n_x && self.n_y == other.n_y
    }

    /// Forward / centered / backward time derivative at (k, c); needs n_t >= 2.
    #[inline]
    pub(crate) fn dt_u_at(&self, k: usize, c: usize, dt: f64) -> f64 {
        let n = self.n_cells();
        if k == 0 {
            (self.data[n + c] - self.data[c]) / dt
        } else if k == self.n_t - 1 {
            (self.data[k * n + c] - self.data[(k - 1) * n + c]) / dt
        } else {
            (self.data[(k + 1) * n + c] - self.data[(k - 1) * n + c]) / (2.0 * dt)
        }
    }

    /// Exact negative adjoint of `dt_u_at` under sum_k (.)(.) dt; needs n_t >= 3.
    ///
    /// This is the five-case stencil; at n_t = 3 the middle row takes the value
    /// (phi_2 - phi_0)/dt that exact adjointness forces.
    #[inline]
    pub(crate) fn dt_phi_at(&self, k: usize, c: usize, dt: f64) -> f64 {
        let n = self.n_cells();
        let last = self.n_t - 1;
        if k == 0 {
            (self.data[c] + 0.5 * self.data[n + c]) / dt
        } else if k == last {
            (-self.data[last * n + c] - 0.5 * self.data[(last - 1) * n + c]) / dt
        } else if k == 1 {
            if self.n_t == 3 {
                (self.data[2 * n + c] - self.data[c]) / dt
            } else {
                (0.5 * self.data[2 * n + c] - self.data[c]) / dt
            }
        } else if k == last - 1 {
            (self.data[last * n + c] - 0.5 * self.data[(last - 2) * n + c]) / dt
        } else {
            (self.data[(k + 1) * n + c] - self.data[(k - 1) * n + c]) / (2.0 * dt)
        }
    }
}

/// Staggered flux components on cell faces with a zero-flux boundary (houses m).
///
/// x-faces sit at (i - 1/2, j) for i = 0..=n_x (so n_x + 1 per row); y-faces at
/// (i, j - 1/2) for j = 0..=n_y, absent in 1D. Boundary faces are pinned to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    n_t: usize,
    n_x: usize,
    n_y: usize,
    dims: u8,
    mx: Vec<f64>,
    my: Vec<f64>,
}

impl FaceField {
    pub fn zeros(space: &SpatialGrid, n_t: usize) -> Self {
        let my = if space.dims() == 2 {
            vec![0.0; n_t * (space.n_y() + 1) * space.n_x()]
        } else {
            Vec::new()
        };
        FaceField {
            n_t,
            n_x: space.n_x(),
            n_y: space.n_y(),
            dims: space.dims(),
            mx: vec![0.0; n_t * space.n_y() * (space.n_x() + 1)],
            my,
        }
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn dims(&self) -> u8 {
        self.dims
    }

    pub fn x_values(&self) -> &[f64] {
        &self.mx
    }

    pub fn y_values(&self) -> &[f64] {
        &self.my
    }

    /// Flat index of the x-face (e - 1/2, j) at time node k, e = 0..=n_x.
    #[inline]
    pub fn x_index(&self, k: usize, e: usize, j: usize) -> usize {
        debug_assert!(e <= self.n_x && j < self.n_y);
        (k * self.n_y + j) * (self.n_x + 1) + e
    }

    /// Flat index of the y-face (i, g - 1/2) at time node k, g = 0..=n_y.
    #[inline]
    pub fn y_index(&self, k: usize, i: usize, g: usize) -> usize {
        debug_assert!(i < self.n_x && g <= self.n_y);
        (k * (self.n_y + 1) + g) * self.n_x + i
    }

    #[inline]
    pub fn x_at(&self, k: usize, e: usize, j: usize) -> f64 {
        self.mx[self.x_index(k, e, j)]
    }

    #[inline]
    pub fn y_at(&self, k: usize, i: usize, g: usize) -> f64 {
        self.my[self.y_index(k, i, g)]
    }

    pub(crate) fn x_values_mut(&mut self) -> &mut [f64] {
        &mut self.mx
    }

    pub(crate) fn y_values_mut(&mut self) -> &mut [f64] {
        &mut self.my
    }

    /// Write an interior x-face; boundary faces are pinned to zero.
    pub fn set_x(&mut self, k: usize, e: usize, j: usize, value: f64) -> Result<()> {
        if e == 0 || e == self.n_x {
            return Err(Error::IndexOutOfRange {
                what: "interior x-face",
                index: e,
                len: self.n_x,
            });
        }
        let idx = self.x_index(k, e, j);
        self.mx[idx] = value;
        Ok(())
    }

    /// Write an interior y-face; boundary faces are pinned to zero.
    pub fn set_y(&mut self, k: usize, i: usize, g: usize, value: f64) -> Result<()> {
        if self.dims != 2 || g == 0 || g == self.n_y {
            return Err(Error::IndexOutOfRange {
                what: "interior y-face",
                index: g,
                len: self.n_y,
            });
        }
        let idx = self.y_index(k, i, g);
        self.my[idx] = value;
        Ok(())
    }

    /// Interior x-faces of `slice_mut` writers must keep e = 0 and e = n_x zero;
    /// this checks the invariant.
    pub fn boundary_is_zero(&self) -> bool {
        for k in 0..self.n_t {
            for j in 0..self.n_y {
                if self.x_at(k, 0, j) != 0.0 || self.x_at(k, self.n_x, j) != 0.0 {
                    return false;
                }
            }
            if self.dims == 2 {
                for i in 0..self.n_x {
                    if self.y_at(k, i, 0) != 0.0 || self.y_at(k, i, self.n_y) != 0.0 {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Divergence at (k, i, j): (mx_+ - mx_-)/dx + (my_+ - my_-)/dy.
    #[inline]
    pub(crate) fn divergence_at(&self, k: usize, i: usize, j: usize, space: &SpatialGrid) -> f64 {
        let dx_part =
            (self.mx[self.x_index(k, i + 1, j)] - self.mx[self.x_index(k, i, j)]) / space.dx();
        if self.dims == 2 {
            dx_part
                + (self.my[self.y_index(k, i, j + 1)] - self.my[self.y_index(k, i, j)])
                    / space.dy()
        } else {
            dx_part
        }
    }

    /// Cell-centered flux components (average of the two opposing faces).
    #[inline]
    pub(crate) fn cell_avg_at(&self, k: usize, i: usize, j: usize) -> (f64, f64) {
        let cx = 0.5 * (self.mx[self.x_index(k, i, j)] + self.mx[self.x_index(k, i + 1, j)]);
        let cy = if self.dims == 2 {
            0.5 * (self.my[self.y_index(k, i, j)] + self.my[self.y_index(k, i, j + 1)])
        } else {
            0.0
        };
        (cx, cy)
    }
}

/// One time slice of face values, as produced by [`grad`].
#[derive(Debug, Clone, PartialEq)]
pub struct FaceSlice {
    pub n_x: usize,
    pub n_y: usize,
    pub dims: u8,
    /// n_y rows of n_x + 1 values.
    pub gx: Vec<f64>,
    /// n_y + 1 rows of n_x values; empty in 1D.
    pub gy: Vec<f64>,
}

/// The spatially independent source f, one value per time node.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSeries {
    values: Vec<f64>,
}

impl SourceSeries {
    pub fn zeros(time: &TimeGrid) -> Self {
        SourceSeries {
            values: vec![0.0; time.n_t()],
        }
    }

    pub fn constant(time: &TimeGrid, value: f64) -> Self {
        SourceSeries {
            values: vec![value; time.n_t()],
        }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ShapeMismatch(
                "source series has non-finite values".into(),
            ));
        }
        Ok(SourceSeries { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, k: usize) -> f64 {
        self.values[k]
    }
}

/// Discrete gradient of a potential slice onto faces; boundary faces are zero
/// (no update ever reads them, since m is pinned there).
pub fn grad(phi: &CellField, k: usize, space: &SpatialGrid) -> Result<FaceSlice> {
    if k >= phi.n_t() {
        return Err(Error::IndexOutOfRange {
            what: "time node",
            index: k,
            len: phi.n_t(),
        });
    }
    let (n_x, n_y) = (space.n_x(), space.n_y());
    let mut gx = vec![0.0; n_y * (n_x + 1)];
    for j in 0..n_y {
        for e in 1..n_x {
            gx[j * (n_x + 1) + e] = (phi.at(k, e, j) - phi.at(k, e - 1, j)) / space.dx();
        }
    }
    let gy = if space.dims() == 2 {
        let mut gy = vec![0.0; (n_y + 1) * n_x];
        for g in 1..n_y {
            for i in 0..n_x {
                gy[g * n_x + i] = (phi.at(k, i, g) - phi.at(k, i, g - 1)) / space.dy();
            }
        }
        gy
    } else {
        Vec::new()
    };
    Ok(FaceSlice {
        n_x,
        n_y,
        dims: space.dims(),
        gx,
        gy,
    })
}

/// Discrete divergence of the flux at time node k, one value per cell.
pub fn divergence(m: &FaceField, k: usize, space: &SpatialGrid) -> Result<Vec<f64>> {
    if k >= m.n_t() {
        return Err(Error::IndexOutOfRange {
            what: "time node",
            index: k,
            len: m.n_t(),
        });
    }
    let (n_x, n_y) = (space.n_x(), space.n_y());
    let mut out = vec![0.0; n_x * n_y];
    for j in 0..n_y {
        for i in 0..n_x {
            out[j * n_x + i] = m.divergence_at(k, i, j, space);
        }
    }
    Ok(out)
}

/// Time derivative of a cell field: forward at k = 0, centered inside,
/// backward at k = n_t - 1.
pub fn dt_u(u: &CellField, time: &TimeGrid) -> CellField {
    let mut out = u.clone();
    let n = u.n_cells();
    for k in 0..u.n_t() {
        for c in 0..n {
            out.data[k * n + c] = u.dt_u_at(k, c, time.dt());
        }
    }
    out
}

/// The adjoint-pair time derivative for potentials; exact negative adjoint of
/// [`dt_u`]. Errors when n_t < 3 (the stencil has five distinct cases).
pub fn dt_phi(phi: &CellField, time: &TimeGrid) -> Result<CellField> {
    if phi.n_t() < 3 {
        return Err(Error::InvalidGrid(format!(
            "dt_phi needs n_t >= 3, got {}",
            phi.n_t()
        )));
    }
    let mut out = phi.clone();
    let n = phi.n_cells();
    for k in 0..phi.n_t() {
        for c in 0..n {
            out.data[k * n + c] = phi.dt_phi_at(k, c, time.dt());
        }
    }
    Ok(out)
}

/// Cell-sum quadrature of one spatial slice: sum of values times dx*dy.
pub fn integrate(slice: &[f64], space: &SpatialGrid) -> f64 {
    slice.iter().sum::<f64>() * space.cell_measure()
}

/// Time integral of a node series by the trapezoidal rule; spans exactly [0, 1]
/// and telescopes against the dt_u rows (see [`TimeGrid::node_weight`]).
pub fn integrate_series(f: &SourceSeries, time: &TimeGrid) -> f64 {
    f.values
        .iter()
        .enumerate()
        .map(|(k, v)| v * time.node_weight(k))
        .sum()
}
