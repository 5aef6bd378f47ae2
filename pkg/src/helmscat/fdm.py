"""Finite-difference Helmholtz solver with a first-order absorbing boundary.

Discretizes  L u = Du + k^2 (1 + q) u = f  on the unit square with the
outgoing-wave boundary condition  du/dn - i k u = 0.  The boundary rows
eliminate the ghost value of the five-point stencil through a centered
treatment of the boundary condition:

    ghost = opposite interior neighbour + 2 h i k * boundary value,

which keeps the interior stencil uniform and second-order consistent.
Corner rows apply the elimination for both outward normals.

Row scaling
-----------
Every row is the PDE row at its node multiplied by hx*hy and by a
trapezoid weight w (1 interior, 1/2 edges, 1/4 corners).  The weight is
what makes the assembled matrix complex-symmetric (A = A^T without
conjugation), which in turn lets adjoint systems reuse the same
factorization.  ``solve`` applies the identical scaling to its
right-hand side, so the solved field is independent of the convention.

The q = 0 factorization realizes the homogeneous solution operator
g -> u used by the series iteration in :mod:`helmscat.neumann`; its
reuse across many right-hand sides is the performance core of both the
series evaluation and the multi-direction inverse problem.
"""

from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import (
    Array,
    ComplexField,
    FieldDataError,
    FieldShapeError,
    Grid2D,
    RealField,
)


class FactorizationError(RuntimeError):
    """Sparse LU factorization failed (numerically singular pivot)."""


_fact_lock = threading.Lock()
_fact_count = 0


def factorization_count() -> int:
    """Number of factorizations performed since import (test hook)."""
    return _fact_count


@dataclass(frozen=True)
class HelmholtzProblem:
    """Problem data (k, q, f) for  Du + k^2 (1+q) u = f  with the ABC."""

    k: float
    q: RealField
    f: ComplexField

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if self.q.grid != self.f.grid:
            raise FieldShapeError("q and f must share a grid")

    @property
    def grid(self) -> Grid2D:
        return self.q.grid


@dataclass(frozen=True)
class SystemMatrix:
    """Assembled sparse system; complex-symmetric, <= 5 nonzeros per row."""

    matrix: sp.csr_matrix
    grid: Grid2D
    k: float
    row_scale: Array  # (ny, nx) = hx*hy * trapezoid weight per row
    q_hash: str
    homogeneous: bool


@dataclass(frozen=True)
class Factorization:
    """Reusable sparse LU of a SystemMatrix.

    Immutable once built; concurrent solves with distinct right-hand
    sides are safe.  ``solve_vector`` solves the assembled system
    A x = b literally; ``helmscat.fdm.solve`` is the field-level entry
    that applies the assembly scaling to the right-hand side.
    """

    lu: spla.SuperLU = field(repr=False)
    grid: Grid2D
    k: float
    row_scale: Array = field(repr=False)
    q_hash: str
    homogeneous: bool

    def solve_vector(self, b: Array) -> Array:
        """Solve A x = b for a raw length nx*ny vector b."""
        return self.lu.solve(np.asarray(b, dtype=np.complex128))


def _hash_values(values: Array) -> str:
    return hashlib.sha256(np.ascontiguousarray(values).tobytes()).hexdigest()


def assemble(k: float, q: RealField) -> SystemMatrix:
    """Assemble the discrete Helmholtz operator for wavenumber k.

    Interior rows carry the five-point Laplacian plus the diagonal
    k^2 (1 + q); boundary rows add the ghost elimination of the
    absorbing condition (2ik/h on the diagonal, doubled inward
    neighbour).  See the module docstring for the row scaling.
    """
    if k <= 0:
        raise ValueError(f"wavenumber must be positive, got {k}")
    qv = q.values
    if not np.all(np.isfinite(qv)):
        raise FieldDataError("q contains non-finite values")

    g = q.grid
    nx, ny = g.nx, g.ny
    hx, hy = g.hx, g.hy
    cx, cy = 1.0 / hx**2, 1.0 / hy**2

    diag = np.full(g.shape, -2.0 * cx - 2.0 * cy, dtype=np.complex128)
    diag += (k**2) * (1.0 + qv)
    diag[:, 0] += 2j * k / hx
    diag[:, -1] += 2j * k / hx
    diag[0, :] += 2j * k / hy
    diag[-1, :] += 2j * k / hy

    east = np.full(g.shape, cx)
    east[:, 0] = 2.0 * cx          # ghost eliminated into the inward neighbour
    west = np.full(g.shape, cx)
    west[:, -1] = 2.0 * cx
    north = np.full(g.shape, cy)
    north[0, :] = 2.0 * cy
    south = np.full(g.shape, cy)
    south[-1, :] = 2.0 * cy

    w = np.ones(g.shape)
    w[:, 0] *= 0.5
    w[:, -1] *= 0.5
    w[0, :] *= 0.5
    w[-1, :] *= 0.5
    row_scale = hx * hy * w
    row_scale.setflags(write=False)

    idx = np.arange(nx * ny).reshape(g.shape)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.reshape(-1))
        cols.append(c.reshape(-1))
        vals.append(v.reshape(-1))

    add(idx, idx, diag * row_scale)
    add(idx[:, :-1], idx[:, 1:], east[:, :-1] * row_scale[:, :-1])
    add(idx[:, 1:], idx[:, :-1], west[:, 1:] * row_scale[:, 1:])
    add(idx[:-1, :], idx[1:, :], north[:-1, :] * row_scale[:-1, :])
    add(idx[1:, :], idx[:-1, :], south[1:, :] * row_scale[1:, :])

    A = sp.coo_matrix(
        (
            np.concatenate(vals).astype(np.complex128),
            (np.concatenate(rows), np.concatenate(cols)),
        ),
        shape=(nx * ny, nx * ny),
    ).tocsr()

    return SystemMatrix(
        matrix=A,
        grid=g,
        k=float(k),
        row_scale=row_scale,
        q_hash=_hash_values(qv),
        homogeneous=bool(np.max(np.abs(qv)) == 0.0),
    )


def factorize(A: SystemMatrix) -> Factorization:
    """Sparse LU of an assembled system, reusable across right-hand sides."""
    global _fact_count
    try:
        lu = spla.splu(A.matrix.tocsc())
    except RuntimeError as exc:  # SuperLU reports singular pivots this way
        raise FactorizationError(
            f"sparse LU failed on a {A.matrix.shape[0]}-unknown system: {exc}"
        ) from exc
    with _fact_lock:
        _fact_count += 1
    return Factorization(
        lu=lu,
        grid=A.grid,
        k=A.k,
        row_scale=A.row_scale,
        q_hash=A.q_hash,
        homogeneous=A.homogeneous,
    )


def system_rhs(fact: Factorization, rhs: ComplexField) -> Array:
    """Right-hand-side vector of the assembled system for a source field."""
    if rhs.grid != fact.grid:
        raise FieldShapeError("rhs grid does not match factorization grid")
    return (fact.row_scale * rhs.values).reshape(-1).astype(np.complex128)


def solve(fact: Factorization, rhs: ComplexField) -> ComplexField:
    """Solve the Helmholtz system for a source field.

    Applies the assembly row scaling to ``rhs`` and solves; for a
    homogeneous factorization (q = 0) this realizes the solution
    operator g -> u of the background medium.
    """
    x = fact.solve_vector(system_rhs(fact, rhs))
    return ComplexField(fact.grid, x.reshape(fact.grid.shape))


def solve_direct(p: HelmholtzProblem) -> ComplexField:
    """Assemble, factorize and solve; the reference solution path."""
    return solve(factorize(assemble(p.k, p.q)), p.f)
