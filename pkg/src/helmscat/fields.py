"""Grids and scalar fields on the unit square.

Conventions
-----------
The domain is [0, 1]^2, sampled on a uniform nx-by-ny point grid with
spacings hx = 1/(nx-1) and hy = 1/(ny-1).  Point (i, j) sits at
(i*hx, j*hy).  Field values are stored row-major with shape (ny, nx),
so ``values[j, i]`` is the sample at x = i*hx, y = j*hy.

All norms are discrete L2 norms carrying the cell-area weight hx*hy,
which makes values comparable across resolutions.  Reductions use
numpy's fixed summation order, so repeated evaluations on the same
data are bit-identical.

Fields are immutable after construction (the backing arrays are
write-locked); any operation here may run concurrently on shared
fields.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

Array = np.ndarray


class FieldShapeError(ValueError):
    """Grid/shape mismatch between fields or arrays."""


class FieldDataError(ValueError):
    """Non-finite or otherwise invalid field data."""


class DegenerateReferenceError(ValueError):
    """Reference field of a relative error has zero norm."""


@dataclass(frozen=True)
class Grid2D:
    """Uniform point grid on [0, 1]^2.

    Needs nx >= 3 and ny >= 3 so the five-point stencil has an interior.
    """

    nx: int
    ny: int

    def __post_init__(self) -> None:
        if self.nx < 3 or self.ny < 3:
            raise FieldShapeError(f"grid must be at least 3x3, got {self.nx}x{self.ny}")

    @property
    def hx(self) -> float:
        return 1.0 / (self.nx - 1)

    @property
    def hy(self) -> float:
        return 1.0 / (self.ny - 1)

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape (ny, nx) of fields on this grid."""
        return (self.ny, self.nx)

    @property
    def n_points(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.hx * self.hy

    def xs(self) -> Array:
        return np.linspace(0.0, 1.0, self.nx)

    def ys(self) -> Array:
        return np.linspace(0.0, 1.0, self.ny)

    def meshgrid(self) -> tuple[Array, Array]:
        """Coordinate arrays X, Y of shape (ny, nx) with X[j, i] = i*hx."""
        return np.meshgrid(self.xs(), self.ys())


class _Field:
    """Shared implementation of RealField / ComplexField."""

    _dtype: np.dtype

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid2D, values: Array):
        arr = np.asarray(values, dtype=self._dtype)
        if arr.shape == (grid.n_points,):
            arr = arr.reshape(grid.shape)
        if arr.shape != grid.shape:
            raise FieldShapeError(
                f"values shape {arr.shape} does not match grid shape {grid.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise FieldDataError("field values must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):
        raise AttributeError(f"{type(self).__name__} is immutable")

    @classmethod
    def zeros(cls, grid: Grid2D):
        return cls(grid, np.zeros(grid.shape, dtype=cls._dtype))

    @classmethod
    def from_function(cls, grid: Grid2D, fn):
        """Sample ``fn(X, Y)`` on the grid (X, Y broadcast as (ny, nx))."""
        X, Y = grid.meshgrid()
        return cls(grid, np.broadcast_to(fn(X, Y), grid.shape))

    @property
    def flat(self) -> Array:
        """Row-major 1-D view of the values, length nx*ny."""
        return self.values.reshape(-1)

    def __repr__(self) -> str:
        return f"{type(self).__name__}(grid={self.grid.nx}x{self.grid.ny})"


class RealField(_Field):
    """Real scalar field on a Grid2D; carries the medium coefficient."""

    _dtype = np.dtype(np.float64)


class ComplexField(_Field):
    """Complex scalar field on a Grid2D; carries wave fields and sources."""

    _dtype = np.dtype(np.complex128)


Field = RealField | ComplexField


def _require_same_grid(*fields: Field) -> Grid2D:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid != grid:
            raise FieldShapeError(
                f"fields live on different grids: {grid.shape} vs {f.grid.shape}"
            )
    return grid


def l2_norm(field: Field) -> float:
    """Area-weighted discrete L2 norm sqrt(hx*hy * sum |v|^2)."""
    v = field.values
    return float(np.sqrt(field.grid.cell_area * np.sum(np.abs(v) ** 2)))


def relative_l2_error(a: Field, b: Field) -> float:
    """Relative discrete L2 error ||a - b|| / ||b||.

    Raises FieldShapeError on grid mismatch and DegenerateReferenceError
    when ||b|| is zero.  The hx*hy weight cancels in the ratio, so the
    value agrees with the unweighted convention on a shared grid.
    """
    _require_same_grid(a, b)
    denom = float(np.sqrt(np.sum(np.abs(b.values) ** 2)))
    if denom == 0.0:
        raise DegenerateReferenceError("reference field has zero norm")
    num = float(np.sqrt(np.sum(np.abs(a.values - b.values) ** 2)))
    return num / denom


def five_point_laplacian(u: Field) -> Field:
    """Five-point discrete Laplacian with mirror-reflected ghost values.

    Interior point (i, j) receives the standard second-order stencil

        (u[i+1,j] + u[i-1,j] - 2 u[i,j]) / hx^2
      + (u[i,j+1] + u[i,j-1] - 2 u[i,j]) / hy^2.

    Boundary points use the same stencil with ghost values mirrored from
    the nearest interior neighbour (ghost = u one step inside).  The
    boundary closure is a documented convenience; consumers that care
    about boundary rows (the system assembly) build their own closure.
    """
    g = u.grid
    p = np.pad(u.values, 1, mode="reflect")  # (ny+2, nx+2)
    core = p[1:-1, 1:-1]
    lap = (p[1:-1, :-2] + p[1:-1, 2:] - 2.0 * core) / g.hx**2
    lap += (p[:-2, 1:-1] + p[2:, 1:-1] - 2.0 * core) / g.hy**2
    return type(u)(g, lap)


def pde_residual(u: ComplexField, k: float, q: RealField, f: ComplexField) -> float:
    """Interior-point norm of the Helmholtz residual L u + k^2 (1+q) u - f.

    The Laplacian is ``five_point_laplacian``; only interior points enter
    the norm, so the mirror boundary closure never contributes.  Returns
    the area-weighted discrete L2 norm of the residual.
    """
    if k <= 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    _require_same_grid(u, q, f)
    lap = five_point_laplacian(u).values
    res = lap + (k**2) * (1.0 + q.values) * u.values - f.values
    inner = res[1:-1, 1:-1]
    return float(np.sqrt(u.grid.cell_area * np.sum(np.abs(inner) ** 2)))


def boundary_indices(grid: Grid2D) -> tuple[Array, Array]:
    """Index arrays (jj, ii) of the boundary walk, length 2(nx+ny)-4.

    Order: bottom row left-to-right, right column bottom-to-top, top row
    right-to-left, left column top-to-bottom, without repeating corners.
    """
    nx, ny = grid.nx, grid.ny
    ii = np.concatenate([
        np.arange(nx),                     # bottom
        np.full(ny - 1, nx - 1),           # right
        np.arange(nx - 2, -1, -1),         # top
        np.zeros(ny - 2, dtype=int),       # left
    ])
    jj = np.concatenate([
        np.zeros(nx, dtype=int),
        np.arange(1, ny),
        np.full(nx - 1, ny - 1),
        np.arange(ny - 2, 0, -1),
    ])
    return jj, ii


def boundary_trace(u: Field) -> Array:
    """Boundary values of ``u`` in the documented perimeter order."""
    jj, ii = boundary_indices(u.grid)
    return u.values[jj, ii].copy()


def scatter_to_boundary(grid: Grid2D, trace: Array) -> Array:
    """Adjoint of ``boundary_trace``: place trace values on a zero field.

    Each boundary node receives its trace entry with weight 1; interior
    nodes stay zero.  Returns a (ny, nx) complex array.
    """
    trace = np.asarray(trace)
    jj, ii = boundary_indices(grid)
    if trace.shape != jj.shape:
        raise FieldShapeError(
            f"trace length {trace.shape} does not match boundary size {jj.shape}"
        )
    out = np.zeros(grid.shape, dtype=np.complex128)
    out[jj, ii] = trace
    return out


def restrict(fine: Field, factor: int) -> Field:
    """Pointwise injection onto a factor-coarsened grid.

    Coarse point (i, j) takes the fine value at (factor*i, factor*j);
    requires (nx-1) and (ny-1) divisible by factor.
    """
    if factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    g = fine.grid
    if (g.nx - 1) % factor or (g.ny - 1) % factor:
        raise FieldShapeError(
            f"grid {g.nx}x{g.ny} is not refinable by factor {factor}"
        )
    coarse = Grid2D((g.nx - 1) // factor + 1, (g.ny - 1) // factor + 1)
    return type(fine)(coarse, fine.values[::factor, ::factor])


def _prolong_1d(a: Array, factor: int) -> Array:
    """Linear interpolation along the last axis onto the refined grid."""
    n = a.shape[-1]
    out_len = (n - 1) * factor + 1
    idx = np.arange(out_len)
    base = np.minimum(idx // factor, n - 2)
    t = (idx - base * factor) / factor  # (out_len,), 0 at coincident nodes
    return a[..., base] * (1.0 - t) + a[..., base + 1] * t


def prolong(coarse: Field, factor: int) -> Field:
    """Bilinear prolongation onto a factor-refined grid.

    Nodal injection at coincident nodes, bilinear fill in between;
    exact inverse of ``restrict`` at the shared nodes.
    """
    if factor < 1:
        raise ValueError(f"factor must be a positive integer, got {factor}")
    g = coarse.grid
    fine_grid = Grid2D((g.nx - 1) * factor + 1, (g.ny - 1) * factor + 1)
    vals = _prolong_1d(coarse.values, factor)           # interp in x
    vals = _prolong_1d(vals.T, factor).T                # interp in y
    return type(coarse)(fine_grid, vals)


def rotate90(field: Field, times: int = 1) -> Field:
    """Rotate a square-grid field by ``times`` quarter turns about (1/2, 1/2).

    The rotation maps the value at point p to the point R(p) where R is
    the counter-clockwise quarter turn, i.e. new(x, y) = old(y, 1-x).
    """
    g = field.grid
    if g.nx != g.ny:
        raise FieldShapeError("rotation needs a square grid")
    vals = field.values
    for _ in range(times % 4):
        vals = vals[::-1, :].T
    return type(field)(g, vals)
