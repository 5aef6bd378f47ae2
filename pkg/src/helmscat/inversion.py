"""Plane-wave inverse scattering: forward map, adjoint gradient, L-BFGS.

For each incident plane wave u_i = exp(i k x.d) the scattered field
solves  D u_s + k^2 (1+q) u_s = -k^2 q u_i  with the absorbing boundary
condition, and the sensors record the boundary trace of u_s.  The
misfit is J(q) = sum_m 1/2 ||T u_s_m - d_m||^2 with a plain (unweighted)
sum over boundary nodes.

Gradient
--------
The gradient is the exact derivative of the discrete J with respect to
the nodal values of q.  Because the assembled matrix is complex
symmetric, the adjoint system reuses the forward factorization: solve

    A y_m = conj(T* (T u_s_m - d_m))        (raw system, T* scatters
                                             residuals with weight 1)

and accumulate, with c the per-row assembly scale (cell area times the
boundary trapezoid weight),

    grad = sum_m  -k^2 * c * Re( y_m * (u_s_m + u_i_m) ).

Per-direction contributions are summed in direction order, so repeated
evaluations are bit-identical.  The forward/adjoint solves for one q
share a single factorization regardless of the number of directions.
"""

from __future__ import annotations

import time
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from . import fdm
from .fields import (
    Array,
    ComplexField,
    FieldShapeError,
    Grid2D,
    RealField,
    boundary_indices,
    prolong,
    restrict,
)

#: line-search / stopping statuses of lbfgs_invert
CONVERGED = "converged"
MAX_ITERS = "max_iters"
LINE_SEARCH_FAILED = "line_search_failed"


@dataclass(frozen=True)
class IncidentSet:
    """M unit plane-wave directions at angles 2 pi m / M."""

    k: float
    n_directions: int

    def __post_init__(self) -> None:
        if self.k <= 0:
            raise ValueError(f"wavenumber must be positive, got {self.k}")
        if self.n_directions < 1:
            raise ValueError(f"need at least one direction, got {self.n_directions}")

    @property
    def directions(self) -> Array:
        """Unit vectors, shape (M, 2)."""
        angles = 2.0 * np.pi * np.arange(self.n_directions) / self.n_directions
        return np.column_stack([np.cos(angles), np.sin(angles)])


@dataclass(frozen=True)
class Measurement:
    """Per-direction boundary traces plus synthesis metadata."""

    traces: Array  # (M, 2(nx+ny)-4) complex
    data_grid_factor: int = 1
    noise_std: float = 0.0

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.traces)):
            raise ValueError("measurement traces must be finite")


@dataclass(frozen=True)
class InverseConfig:
    """Reconstruction grid and optimizer controls."""

    grid: Grid2D
    max_iters: int = 200
    memory: int = 10
    grad_tol: float = 1e-12
    data_grid_factor: int = 2
    noise_std: float = 0.0
    mask: RealField | None = None

    def __post_init__(self) -> None:
        if self.max_iters < 1 or self.memory < 1 or self.data_grid_factor < 1:
            raise ValueError("max_iters, memory and data_grid_factor must be >= 1")
        if self.mask is not None and self.mask.grid != self.grid:
            raise FieldShapeError("mask grid does not match reconstruction grid")


@dataclass
class InversionReport:
    q_est: RealField
    objective_history: Array
    gradient_norm_history: Array
    iterations_used: int
    wall_time: float
    status: str


class FactorizationCache:
    """Tiny LRU of factorizations keyed by (k, grid, q bytes)."""

    def __init__(self, maxsize: int = 4):
        self.maxsize = maxsize
        self._entries: OrderedDict = OrderedDict()

    def get(self, k: float, q: RealField) -> fdm.Factorization:
        key = (float(k), q.grid, q.values.tobytes())
        fact = self._entries.get(key)
        if fact is None:
            fact = fdm.factorize(fdm.assemble(k, q))
            self._entries[key] = fact
            while len(self._entries) > self.maxsize:
                self._entries.popitem(last=False)
        else:
            self._entries.move_to_end(key)
        return fact


def plane_wave(k: float, d, grid: Grid2D) -> ComplexField:
    """Incident plane wave exp(i k x.d); non-unit d is normalized with a warning."""
    d = np.asarray(d, dtype=float)
    norm = float(np.hypot(d[0], d[1]))
    if abs(norm - 1.0) > 1e-12:
        warnings.warn(f"direction {d} is not unit length; normalizing", stacklevel=2)
        d = d / norm
    X, Y = grid.meshgrid()
    return ComplexField(grid, np.exp(1j * k * (X * d[0] + Y * d[1])))


def _scattered_fields(q: RealField, inc: IncidentSet, fact: fdm.Factorization):
    """Yield (u_incident values, u_scattered values) per direction."""
    ksq = inc.k**2
    for d in inc.directions:
        ui = plane_wave(inc.k, d, q.grid).values
        us = fdm.solve(fact, ComplexField(q.grid, -ksq * q.values * ui))
        yield ui, us.values


def forward_map(
    q: RealField, inc: IncidentSet, fact_cache: FactorizationCache | None = None
) -> Measurement:
    """Boundary traces of the scattered fields for every incident direction.

    The q-dependent matrix is factorized once and shared across all M
    right-hand sides.
    """
    cache = fact_cache if fact_cache is not None else FactorizationCache(1)
    fact = cache.get(inc.k, q)
    jj, ii = boundary_indices(q.grid)
    traces = np.empty((inc.n_directions, jj.size), dtype=np.complex128)
    for m, (_, us) in enumerate(_scattered_fields(q, inc, fact)):
        traces[m] = us[jj, ii]
    return Measurement(traces=traces, data_grid_factor=1, noise_std=0.0)


def synthesize_data(
    q_true: RealField,
    inc: IncidentSet,
    factor: int = 2,
    noise_std: float = 0.0,
    seed: int = 0,
) -> Measurement:
    """Measurements from a factor-refined grid (inverse-crime avoidance).

    Prolongs q_true bilinearly to the refined grid, runs the forward map
    there, and restricts the scattered fields back to the coarse grid
    before tracing.  Optional additive complex Gaussian noise puts
    independent N(0, noise_std^2) perturbations on the real and
    imaginary part of every trace sample.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    grid = q_true.grid
    q_fine = prolong(q_true, factor) if factor > 1 else q_true
    fact = fdm.factorize(fdm.assemble(inc.k, q_fine))
    jj, ii = boundary_indices(grid)
    traces = np.empty((inc.n_directions, jj.size), dtype=np.complex128)
    for m, (_, us) in enumerate(_scattered_fields(q_fine, inc, fact)):
        us_coarse = (
            restrict(ComplexField(q_fine.grid, us), factor).values if factor > 1 else us
        )
        traces[m] = us_coarse[jj, ii]
    if noise_std > 0.0:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        traces = traces + noise_std * (
            rng.standard_normal(traces.shape) + 1j * rng.standard_normal(traces.shape)
        )
    return Measurement(traces=traces, data_grid_factor=factor, noise_std=noise_std)


def misfit_and_gradient(
    q: RealField,
    inc: IncidentSet,
    data: Measurement,
    fact_cache: FactorizationCache | None = None,
    mask: RealField | None = None,
) -> tuple[float, RealField]:
    """Objective J(q) and its exact gradient w.r.t. nodal q values.

    One factorization serves the M forward and M adjoint solves; the
    per-direction contributions are accumulated in direction order.
    When ``mask`` is given the gradient is zeroed outside its support.
    """
    grid = q.grid
    jj, ii = boundary_indices(grid)
    if data.traces.shape != (inc.n_directions, jj.size):
        raise FieldShapeError(
            f"measurement shape {data.traces.shape} does not match "
            f"{inc.n_directions} directions on grid {grid.nx}x{grid.ny}"
        )
    cache = fact_cache if fact_cache is not None else FactorizationCache(1)
    fact = cache.get(inc.k, q)

    ksq = inc.k**2
    scale = fact.row_scale  # (ny, nx), cell area times trapezoid weight
    J = 0.0
    grad = np.zeros(grid.shape)
    for m, (ui, us) in enumerate(_scattered_fields(q, inc, fact)):
        r = us[jj, ii] - data.traces[m]
        J += 0.5 * float(np.sum(np.abs(r) ** 2))
        rhs = np.zeros(grid.shape, dtype=np.complex128)
        rhs[jj, ii] = np.conj(r)  # conj(T* residual), weight 1 per node
        y = fact.solve_vector(rhs.reshape(-1)).reshape(grid.shape)
        grad += -ksq * scale * np.real(y * (us + ui))
    if mask is not None:
        grad = grad * (mask.values != 0.0)
    return J, RealField(grid, grad)


# ---------------------------------------------------------------------------
# L-BFGS with a strong-Wolfe line search
# ---------------------------------------------------------------------------
_C1 = 1e-4
_C2 = 0.9


def _two_loop(g: Array, pairs: list[tuple[Array, Array, float]]) -> Array:
    """Two-loop recursion: approximate H g from curvature pairs (s, y, rho)."""
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * float(s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= float(s @ y) / float(y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return q


def _zoom(fg, x, p, phi0, dphi0, a_lo, a_hi, phi_lo, max_iters=25):
    for _ in range(max_iters):
        a = 0.5 * (a_lo + a_hi)
        f_a, g_a = fg(x + a * p)
        dphi_a = float(g_a @ p)
        if f_a > phi0 + _C1 * a * dphi0 or f_a >= phi_lo:
            a_hi = a
        else:
            if abs(dphi_a) <= -_C2 * dphi0:
                return a, f_a, g_a, True
            if dphi_a * (a_hi - a_lo) >= 0:
                a_hi = a_lo
            a_lo, phi_lo = a, f_a
        if abs(a_hi - a_lo) < 1e-14 * max(1.0, abs(a_lo)):
            break
    # interval collapsed: accept the best sufficient-decrease point if any
    f_a, g_a = fg(x + a_lo * p)
    ok = a_lo > 0 and f_a <= phi0 + _C1 * a_lo * dphi0
    return a_lo, f_a, g_a, ok


def _strong_wolfe(fg, x, f0, g0, p, a_init=1.0, a_max=1e6, max_iters=20):
    """Strong-Wolfe step along p; returns (alpha, f, g, ok)."""
    phi0, dphi0 = f0, float(g0 @ p)
    if dphi0 >= 0:
        return 0.0, f0, g0, False
    a_prev, phi_prev = 0.0, phi0
    a = a_init
    for i in range(max_iters):
        f_a, g_a = fg(x + a * p)
        dphi_a = float(g_a @ p)
        if f_a > phi0 + _C1 * a * dphi0 or (i > 0 and f_a >= phi_prev):
            return _zoom(fg, x, p, phi0, dphi0, a_prev, a, phi_prev)
        if abs(dphi_a) <= -_C2 * dphi0:
            return a, f_a, g_a, True
        if dphi_a >= 0:
            return _zoom(fg, x, p, phi0, dphi0, a, a_prev, f_a)
        a_prev, phi_prev = a, f_a
        a = min(2.0 * a, a_max)
    return a_prev, phi_prev, g_a, False


def lbfgs_invert(
    cfg: InverseConfig, inc: IncidentSet, data: Measurement
) -> InversionReport:
    """Reconstruct q from boundary measurements, starting from q = 0.

    Limited-memory BFGS (two-loop recursion) with a strong-Wolfe line
    search (c1 = 1e-4, c2 = 0.9, initial step 1).  Stops on max_iters,
    on the gradient-norm tolerance, or when the line search fails after
    one history reset; the report carries which.
    """
    grid = cfg.grid
    cache = FactorizationCache(2)

    def fg(xvec: Array) -> tuple[float, Array]:
        q = RealField(grid, xvec.reshape(grid.shape))
        J, g = misfit_and_gradient(q, inc, data, cache, cfg.mask)
        return J, g.flat.copy()

    t_start = time.perf_counter()
    x = np.zeros(grid.n_points)
    f, g = fg(x)
    obj_hist = [f]
    grad_hist = [float(np.linalg.norm(g))]
    pairs: list[tuple[Array, Array, float]] = []
    status = MAX_ITERS
    iterations = 0

    for _ in range(cfg.max_iters):
        if grad_hist[-1] <= cfg.grad_tol:
            status = CONVERGED
            break
        p = -_two_loop(g, pairs)
        if float(p @ g) >= 0:  # history produced a non-descent direction
            pairs.clear()
            p = -g
        a, f_new, g_new, ok = _strong_wolfe(fg, x, f, g, p)
        if not ok:
            pairs.clear()
            a, f_new, g_new, ok = _strong_wolfe(fg, x, f, g, -g)
            if not ok:
                status = LINE_SEARCH_FAILED
                break
            p = -g
        s = a * p
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * float(np.linalg.norm(s)) * float(np.linalg.norm(y)):
            pairs.append((s, y, 1.0 / sy))
            if len(pairs) > cfg.memory:
                pairs.pop(0)
        x = x + s
        f, g = f_new, g_new
        iterations += 1
        obj_hist.append(f)
        grad_hist.append(float(np.linalg.norm(g)))
    if status == MAX_ITERS and grad_hist[-1] <= cfg.grad_tol:
        status = CONVERGED

    return InversionReport(
        q_est=RealField(grid, x.reshape(grid.shape)),
        objective_history=np.array(obj_hist),
        gradient_norm_history=np.array(grad_hist),
        iterations_used=iterations,
        wall_time=time.perf_counter() - t_start,
        status=status,
    )
