//! Uniform cell-centered grids on `[0, L]^dim` and the stencil operators used
//! by the stepper and the monitors.
//!
//! Homogeneous Neumann walls are imposed with mirror ghost cells: the ghost
//! beyond a wall carries the value of the adjacent interior cell. Values are
//! stored row-major, so axis 0 (x) has stride 1 and axis 1 (y) has stride `n`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    BadDimension(usize),
    #[error("grid needs at least 3 cells per axis, got {0}")]
    TooFewCells(usize),
    #[error("side length must be positive and finite, got {0}")]
    BadSide(f64),
    #[error("field length {got} does not match grid with {expected} cells")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("Lp norm needs p >= 1, got {0}")]
    BadExponent(f64),
}

/// Discrete square domain: `n` cells of width `h = side / n` along each axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n: usize,
    side: f64,
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, side: f64) -> Result<Self, DomainError> {
        if dim != 1 && dim != 2 {
            return Err(DomainError::BadDimension(dim));
        }
        if n < 3 {
            return Err(DomainError::TooFewCells(n));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(DomainError::BadSide(side));
        }
        Ok(Self { dim, n, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn h(&self) -> f64 {
        self.side / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one cell, `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    /// Measure of the whole domain, `side^dim`.
    pub fn measure(&self) -> f64 {
        self.side.powi(self.dim as i32)
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.n.pow(axis as u32)
    }

    /// Index of cell `idx` along `axis`.
    pub fn coord(&self, idx: usize, axis: usize) -> usize {
        (idx / self.stride(axis)) % self.n
    }

    /// Physical position of the center of cell `idx` along `axis`.
    pub fn center(&self, idx: usize, axis: usize) -> f64 {
        (self.coord(idx, axis) as f64 + 0.5) * self.h()
    }

    /// Left and right neighbour along `axis` with mirror ghosts folded back
    /// onto the cell itself.
    #[inline]
    pub fn neighbours(&self, idx: usize, axis: usize) -> (usize, usize) {
        let s = self.stride(axis);
        let c = (idx / s) % self.n;
        let left = if c == 0 { idx } else { idx - s };
        let right = if c + 1 == self.n { idx } else { idx + s };
        (left, right)
    }
}

/// Cell-centered scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self, DomainError> {
        if values.len() != grid.len() {
            return Err(DomainError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.len()],
        }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `func` at the cell centers; the closure receives `[x, y]`
    /// (with `y = 0` in 1D).
    pub fn from_fn(grid: GridSpec, func: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|idx| {
                let x = grid.center(idx, 0);
                let y = if grid.dim() == 2 { grid.center(idx, 1) } else { 0.0 };
                func([x, y])
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, func: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&x| func(x)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|x| x.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Population variance of the cell values.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / self.values.len() as f64
    }

    fn ensure_same_grid(&self, other: &ScalarField) -> Result<(), DomainError> {
        if self.grid != other.grid {
            return Err(DomainError::GridMismatch);
        }
        Ok(())
    }
}

/// Cell-centered vector field, one component array per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Euclidean length of the vector at cell `idx`.
    pub fn magnitude(&self, idx: usize) -> f64 {
        self.components
            .iter()
            .map(|c| c[idx] * c[idx])
            .sum::<f64>()
            .sqrt()
    }

    /// The vector at cell `idx`, padded with zeros to two components.
    pub fn at(&self, idx: usize) -> [f64; 2] {
        let mut z = [0.0; 2];
        for (axis, c) in self.components.iter().enumerate() {
            z[axis] = c[idx];
        }
        z
    }

    pub fn max_magnitude(&self) -> f64 {
        (0..self.grid.len())
            .map(|i| self.magnitude(i))
            .fold(0.0, f64::max)
    }
}

/// Writes `Δ_h f` into `out`. Shared by the operator form and the matrix-free
/// solvers.
pub(crate) fn laplacian_into(grid: &GridSpec, f: &[f64], out: &mut [f64]) {
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    match grid.dim() {
        1 => {
            for i in 0..n {
                let l = f[i.saturating_sub(1)];
                let r = f[(i + 1).min(n - 1)];
                out[i] = (l + r - 2.0 * f[i]) * inv_h2;
            }
        }
        _ => {
            for j in 0..n {
                let row = j * n;
                let down = if j == 0 { row } else { row - n };
                let up = if j + 1 == n { row } else { row + n };
                for i in 0..n {
                    let c = f[row + i];
                    let l = f[row + i.saturating_sub(1)];
                    let r = f[row + (i + 1).min(n - 1)];
                    // x pair first, then y, matching the axis order of the
                    // generic stencil
                    let acc = (l + r - 2.0 * c) + (f[down + i] + f[up + i] - 2.0 * c);
                    out[row + i] = acc * inv_h2;
                }
            }
        }
    }
}

/// Five-point (three-point in 1D) Laplacian with mirror-ghost Neumann walls.
pub fn laplacian_neumann(f: &ScalarField) -> ScalarField {
    let mut out = vec![0.0; f.values.len()];
    laplacian_into(&f.grid, &f.values, &mut out);
    ScalarField {
        grid: f.grid,
        values: out,
    }
}

/// Centered differences; at a wall the ghost equals the boundary cell, so the
/// normal component there is `(neighbour − self) / 2h`.
pub fn gradient_central(f: &ScalarField) -> VectorField {
    let grid = f.grid;
    let inv_2h = 0.5 / grid.h();
    let components = (0..grid.dim())
        .map(|axis| {
            (0..grid.len())
                .map(|idx| {
                    let (l, r) = grid.neighbours(idx, axis);
                    (f.values[r] - f.values[l]) * inv_2h
                })
                .collect()
        })
        .collect();
    VectorField { grid, components }
}

/// Largest face difference `|v_R − v_L| / h` over all interior faces. This is
/// the drift speed (per unit χ) seen by the upwind flux.
pub fn max_face_gradient(v: &ScalarField) -> f64 {
    let grid = v.grid;
    let inv_h = 1.0 / grid.h();
    let mut max = 0.0_f64;
    for axis in 0..grid.dim() {
        let s = grid.stride(axis);
        for idx in 0..grid.len() {
            if grid.coord(idx, axis) + 1 < grid.n() {
                max = max.max((v.values[idx + s] - v.values[idx]).abs() * inv_h);
            }
        }
    }
    max
}

/// Discrete `∇·(u∇v)` with donor-cell upwinding.
///
/// Every interior face carries `F = u_up (v_R − v_L) / h`, where `u_up` is the
/// cell the drift `+∇v` flows out of. Wall faces carry no flux, so the output
/// sums to zero.
pub fn divergence_taxis_flux(
    u: &ScalarField,
    v: &ScalarField,
) -> Result<ScalarField, DomainError> {
    u.ensure_same_grid(v)?;
    let grid = u.grid;
    let inv_h = 1.0 / grid.h();
    let mut out = vec![0.0; grid.len()];
    for axis in 0..grid.dim() {
        let s = grid.stride(axis);
        for left in 0..grid.len() {
            if grid.coord(left, axis) + 1 == grid.n() {
                continue;
            }
            let right = left + s;
            let slope = (v.values[right] - v.values[left]) * inv_h;
            let donor = if slope >= 0.0 { u.values[left] } else { u.values[right] };
            let flux = donor * slope * inv_h;
            out[left] += flux;
            out[right] -= flux;
        }
    }
    Ok(ScalarField {
        grid,
        values: out,
    })
}

/// Midpoint quadrature `h^dim Σ f_i`.
pub fn integrate(f: &ScalarField) -> f64 {
    f.grid.cell_volume() * f.values.iter().sum::<f64>()
}

pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64, DomainError> {
    if !(p >= 1.0) {
        return Err(DomainError::BadExponent(p));
    }
    if p.is_infinite() {
        return Ok(linf_norm(f));
    }
    let sum: f64 = f.values.iter().map(|x| x.abs().powf(p)).sum();
    Ok((f.grid.cell_volume() * sum).powf(1.0 / p))
}

pub fn linf_norm(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0, |m, x| m.max(x.abs()))
}
