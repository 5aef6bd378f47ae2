"""Samplers for scatterer coefficients q and source terms f.

Three scatterer families (T-shaped indicator, random circles, smoothed
circles) and three source families (sum of nine Gaussians, a Gaussian
random field with covariance (-D + 9 I)^(-2) under zero-Neumann
conditions, and a superposition of six planar waves).  Sources are
normalized to max|f| = 1; scatterers to max|q| = amplitude.

Randomness
----------
Every sampler is a pure function of (seed, parameters, grid): equal
inputs produce bitwise-equal fields.  Streams come from the Philox
counter-based generator keyed by a seed that may be an int or a tuple
of ints, so callers can derive independent per-record streams as
(dataset_seed, record_index, component).

The ``draw_*`` helpers expose the raw parameter draws in the exact
stream order the samplers consume, which is what the geometry-oracle
tests key on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .fields import Array, ComplexField, Grid2D, RealField

SeedLike = "int | Sequence[int]"

#: scatterers keep this margin to the domain boundary (compact support)
SUPPORT_BOX = (0.05, 0.95)


class DegenerateSampleError(RuntimeError):
    """Repeated draws kept producing an (almost) identically zero field."""


def sampler_rng(seed) -> np.random.Generator:
    """Philox stream for a seed int or tuple of ints."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def _bump_seed(seed):
    if isinstance(seed, (int, np.integer)):
        return int(seed) + 1
    seed = tuple(seed)
    return seed[:-1] + (seed[-1] + 1,)


@dataclass(frozen=True)
class ScattererSpec:
    """Which q family to sample and at what contrast."""

    kind: str  # t_shape | circles | smoothed_circles
    amplitude: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("t_shape", "circles", "smoothed_circles"):
            raise ValueError(f"unknown scatterer kind {self.kind!r}")
        if self.amplitude <= 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")


@dataclass(frozen=True)
class SourceSpec:
    """Which f family to sample; R is the Gaussian decay-rate base."""

    kind: str  # gaussian_r | grf | waves
    R: float = 30.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("gaussian_r", "grf", "waves"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "gaussian_r" and self.R <= 0:
            raise ValueError(f"R must be positive, got {self.R}")


# ---------------------------------------------------------------------------
# T-shaped scatterer
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class TShapeParams:
    xs: Array  # sorted x1 < x2 < x3 < x4 in the support box
    ys: Array  # sorted y1 < y2 < y3
    quarter_turns: int  # 0..3, rotation about the domain center


def draw_tshape_params(rng: np.random.Generator) -> TShapeParams:
    """Draw order: four x's, three y's, one rotation choice."""
    lo, hi = SUPPORT_BOX
    xs = np.sort(rng.uniform(lo, hi, size=4))
    ys = np.sort(rng.uniform(lo, hi, size=3))
    quarter_turns = int(rng.integers(0, 4))
    return TShapeParams(xs=xs, ys=ys, quarter_turns=quarter_turns)


def tshape_indicator(params: TShapeParams, X: Array, Y: Array) -> Array:
    """Membership of (X, Y) in the rotated T support.

    Support before rotation: [x2,x3] x [y1,y2]  union  [x1,x4] x [y2,y3]
    (stem below the bar).  Rotation by r quarter turns about (1/2, 1/2)
    is applied by evaluating the set at the inversely rotated point.
    """
    x, y = X, Y
    for _ in range(params.quarter_turns % 4):
        x, y = y, 1.0 - x  # inverse quarter turn
    x1, x2, x3, x4 = params.xs
    y1, y2, y3 = params.ys
    stem = (x2 <= x) & (x <= x3) & (y1 <= y) & (y <= y2)
    bar = (x1 <= x) & (x <= x4) & (y2 <= y) & (y <= y3)
    return stem | bar


def sample_q_tshape(seed, amplitude: float, grid: Grid2D) -> RealField:
    """T-shaped indicator scatterer with value ``amplitude`` on the support."""
    params = draw_tshape_params(sampler_rng(seed))
    X, Y = grid.meshgrid()
    return RealField(grid, np.where(tshape_indicator(params, X, Y), amplitude, 0.0))


# ---------------------------------------------------------------------------
# Circle scatterers (sharp and smoothed)
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class CircleParams:
    centers: Array  # (n_circles, 2)
    radii: Array  # (n_circles,)
    signs: Array  # (n_circles,) raw amplitudes mu_i in [-1, 1]


def draw_circle_params(rng: np.random.Generator, max_tries: int = 1000) -> CircleParams:
    """Draw 1-3 circles; per circle the order is (x, y, r, mu).

    A circle poking out of the support box is redrawn (all four values)
    so the sampled q stays compactly supported inside the domain.
    """
    lo, hi = SUPPORT_BOX
    n_circles = int(rng.integers(1, 4))
    centers, radii, signs = [], [], []
    for _ in range(n_circles):
        for _ in range(max_tries):
            x = rng.uniform(0.2, 0.8)
            y = rng.uniform(0.2, 0.8)
            r = rng.uniform(0.05, 0.2)
            mu = rng.uniform(-1.0, 1.0)
            if lo <= x - r and x + r <= hi and lo <= y - r and y + r <= hi:
                break
        else:
            raise DegenerateSampleError("could not place a circle inside the support box")
        centers.append((x, y))
        radii.append(r)
        signs.append(mu)
    return CircleParams(
        centers=np.array(centers), radii=np.array(radii), signs=np.array(signs)
    )


def _bump_profile(dist_sq: Array, r: float) -> Array:
    """exp(-1 / (1 - d^2/r^2)) inside the disk, exactly zero outside."""
    t = dist_sq / r**2
    out = np.zeros_like(dist_sq)
    inside = t < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside]))
    return out


def circles_field(params: CircleParams, grid: Grid2D, smoothed: bool) -> Array:
    """Unnormalized sum of (possibly bump-smoothed) circle indicators."""
    X, Y = grid.meshgrid()
    vals = np.zeros(grid.shape)
    for (cx, cy), r, mu in zip(params.centers, params.radii, params.signs):
        dist_sq = (X - cx) ** 2 + (Y - cy) ** 2
        if smoothed:
            vals += mu * _bump_profile(dist_sq, r)
        else:
            vals += mu * (dist_sq <= r**2)
    return vals


def sample_q_circles(
    seed, amplitude: float, grid: Grid2D, smoothed: bool = False
) -> RealField:
    """Union of 1-3 random circles, rescaled so max|q| = amplitude.

    Overlaps are summed.  Smoothed and sharp samples with equal seeds
    share centers, radii and signs (the smoothing only multiplies by a
    bump profile).  A draw whose values collapse below 1e-12 (vanishing
    mu's, or circles with no grid point inside) is redrawn with the
    seed incremented, up to 100 attempts.
    """
    current = seed
    for _ in range(100):
        params = draw_circle_params(sampler_rng(current))
        vals = circles_field(params, grid, smoothed)
        peak = np.max(np.abs(vals))
        if peak >= 1e-12:
            return RealField(grid, vals * (amplitude / peak))
        current = _bump_seed(current)
    raise DegenerateSampleError("circle sampler kept producing a zero field")


def disk(
    grid: Grid2D,
    center: tuple[float, float],
    radius: float,
    amplitude: float,
    smoothed: bool = False,
) -> RealField:
    """Deterministic single-disk coefficient (sharp or bump-smoothed).

    The smoothed profile is rescaled so its continuum peak (at the
    center) equals ``amplitude``.
    """
    X, Y = grid.meshgrid()
    dist_sq = (X - center[0]) ** 2 + (Y - center[1]) ** 2
    if smoothed:
        vals = amplitude * np.e * _bump_profile(dist_sq, radius)
    else:
        vals = amplitude * (dist_sq <= radius**2)
    return RealField(grid, vals)


# ---------------------------------------------------------------------------
# Source: sum of nine Gaussians
# ---------------------------------------------------------------------------
GAUSSIAN_CENTERS = np.array(
    [[(3 * i - 1) / 10, (3 * j - 1) / 10] for i in (1, 2, 3) for j in (1, 2, 3)]
)  # (9, 2), fixed regardless of seed


def draw_gaussian_rates(rng: np.random.Generator, R: float) -> Array:
    """Nine decay rates, uniform in [R, 2R]."""
    return rng.uniform(R, 2.0 * R, size=9)


def sample_f_gaussian(seed, R: float, grid: Grid2D) -> ComplexField:
    """Sum of nine Gaussians exp(-rho |x - c|^2) at the fixed 3x3 centers.

    Decay rates rho are uniform in [R, 2R]; larger R gives a more
    compactly supported source.  Normalized to max f = 1 (the field is
    strictly positive).
    """
    if R <= 0:
        raise ValueError(f"R must be positive, got {R}")
    rates = draw_gaussian_rates(sampler_rng(seed), R)
    X, Y = grid.meshgrid()
    vals = np.zeros(grid.shape)
    for (cx, cy), rho in zip(GAUSSIAN_CENTERS, rates):
        vals += np.exp(-rho * ((X - cx) ** 2 + (Y - cy) ** 2))
    vals /= np.max(np.abs(vals))
    return ComplexField(grid, vals)


# ---------------------------------------------------------------------------
# Source: Gaussian random field, covariance (-D + 9 I)^(-2), zero Neumann
# ---------------------------------------------------------------------------
def grf_mode_scales(n_modes: int) -> Array:
    """Standard deviations of the cosine-mode coefficients.

    Mode (m, n) of the expansion f = sum c_mn cos(m pi x) cos(n pi y)
    has c_mn ~ N(0, sigma_mn^2) with

        sigma_mn = nu_mn / (pi^2 (m^2 + n^2) + 9),

    where nu is the orthonormalization weight of the cosine basis on
    the unit square (1 for m = n = 0, sqrt(2) with one zero index, 2
    with both positive).  Returns the (n_modes+1, n_modes+1) array of
    sigma_mn.
    """
    m = np.arange(n_modes + 1)
    lam = np.pi**2 * (m[:, None] ** 2 + m[None, :] ** 2) + 9.0
    nu = np.ones((n_modes + 1, n_modes + 1))
    nu[0, :] *= np.sqrt(0.5)
    nu[:, 0] *= np.sqrt(0.5)
    nu *= 2.0
    return nu / lam


def draw_grf_coefficients(rng: np.random.Generator, n_modes: int) -> Array:
    """Cosine-mode coefficients c_mn = a_mn * sigma_mn, a_mn iid N(0,1)."""
    a = rng.standard_normal((n_modes + 1, n_modes + 1))
    return a * grf_mode_scales(n_modes)


def grf_realize(coeffs: Array, grid: Grid2D) -> Array:
    """Evaluate the cosine expansion sum c_mn cos(m pi x) cos(n pi y)."""
    n_modes = coeffs.shape[0] - 1
    m = np.arange(n_modes + 1)
    cosx = np.cos(np.pi * np.outer(m, grid.xs()))  # (M+1, nx)
    cosy = np.cos(np.pi * np.outer(m, grid.ys()))  # (M+1, ny)
    return cosy.T @ coeffs.T @ cosx  # (ny, nx)


def sample_f_grf(seed, grid: Grid2D, normalize: bool = True) -> ComplexField:
    """Gaussian random field N(0, (-D + 9 I)^(-2)) with zero Neumann data.

    Spectral sampling in the cosine eigenbasis of the Neumann Laplacian,
    truncated at min(nx, ny) - 1 modes per axis.  Normalized to
    max|f| = 1 unless ``normalize`` is False (the raw field is what the
    spectral-variance checks look at).
    """
    n_modes = min(grid.nx, grid.ny) - 1
    coeffs = draw_grf_coefficients(sampler_rng(seed), n_modes)
    vals = grf_realize(coeffs, grid)
    if normalize:
        vals = vals / np.max(np.abs(vals))
    return ComplexField(grid, vals)


# ---------------------------------------------------------------------------
# Source: superposition of six planar waves
# ---------------------------------------------------------------------------
def draw_wave_params(rng: np.random.Generator) -> tuple[Array, Array]:
    """Six (frequency, angle) pairs; draw order mu_1, theta_1, mu_2, ...

    mu_i is uniform in [2^(i-1), 1.5 * 2^(i-1)], theta_i in [0, 2 pi).
    """
    mus, thetas = [], []
    for i in range(1, 7):
        base = 2.0 ** (i - 1)
        mus.append(rng.uniform(base, 1.5 * base))
        thetas.append(rng.uniform(0.0, 2.0 * np.pi))
    return np.array(mus), np.array(thetas)


def sample_f_waves(seed, grid: Grid2D) -> ComplexField:
    """Weighted sum of six planar waves spanning dyadic frequency octaves.

    f = sum_i (1/mu_i) cos(pi mu_i (x cos th_i + y sin th_i)),
    normalized to max|f| = 1.
    """
    mus, thetas = draw_wave_params(sampler_rng(seed))
    X, Y = grid.meshgrid()
    vals = np.zeros(grid.shape)
    for mu, th in zip(mus, thetas):
        vals += np.cos(np.pi * mu * (X * np.cos(th) + Y * np.sin(th))) / mu
    vals /= np.max(np.abs(vals))
    return ComplexField(grid, vals)


# ---------------------------------------------------------------------------
# Dispatch on parameter specs
# ---------------------------------------------------------------------------
def sample_q(spec: ScattererSpec, grid: Grid2D, seed=None) -> RealField:
    """Sample a scatterer per ``spec``; ``seed`` overrides ``spec.seed``."""
    s = spec.seed if seed is None else seed
    if spec.kind == "t_shape":
        return sample_q_tshape(s, spec.amplitude, grid)
    smoothed = spec.kind == "smoothed_circles"
    return sample_q_circles(s, spec.amplitude, grid, smoothed=smoothed)


def sample_f(spec: SourceSpec, grid: Grid2D, seed=None) -> ComplexField:
    """Sample a source per ``spec``; ``seed`` overrides ``spec.seed``."""
    s = spec.seed if seed is None else seed
    if spec.kind == "gaussian_r":
        return sample_f_gaussian(s, spec.R, grid)
    if spec.kind == "grf":
        return sample_f_grf(s, grid)
    return sample_f_waves(s, grid)
