"""Truncated series solution of the inhomogeneous Helmholtz problem.

Rewriting  Du + k^2 u = f - k^2 q u  and iterating through the
homogeneous solution operator G gives the series

    u = v_0 + v_1 + v_2 + ...,   v_0 = G(f),   v_{n+1} = G(-k^2 q v_n),

which converges when the spectral radius of v -> -k^2 G(q v) is below
one; that radius grows linearly in both k and max|q|, so the series
degrades and eventually diverges in high-contrast media.  The iteration
reuses one cached homogeneous factorization, so each extra term costs a
pair of sparse triangular solves.

The iteration is sequential in the term index; distinct problems may
run concurrently against one shared factorization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Array, ComplexField, RealField, l2_norm
from .fdm import Factorization, HelmholtzProblem, solve


class SeriesConfigError(ValueError):
    """Factorization does not match the problem, or bad configuration."""


#: status values of a series run
CONVERGED = "converged"
TRUNCATED = "truncated"
DIVERGING = "diverging"


@dataclass(frozen=True)
class NeumannConfig:
    """Controls for the truncated series.

    n_terms is the total number of computed terms (v_0 .. v_{n_terms-1}).
    tol stops the iteration once ||v_n|| / ||sum so far|| falls to tol;
    with the default tol = 0 only exactly vanishing terms stop early.
    divergence_factor declares divergence once the term-norm growth
    ratio reaches it on two consecutive steps (growth occurs transiently
    even in convergent regimes, so a single step is not trusted);
    math.inf disables the detector.
    """

    n_terms: int = 3
    tol: float = 0.0
    divergence_factor: float = 1.05

    def __post_init__(self) -> None:
        if self.n_terms < 1:
            raise SeriesConfigError(f"n_terms must be >= 1, got {self.n_terms}")
        if self.tol < 0:
            raise SeriesConfigError(f"tol must be >= 0, got {self.tol}")
        if not self.divergence_factor > 1:
            raise SeriesConfigError(
                f"divergence_factor must exceed 1, got {self.divergence_factor}"
            )


@dataclass(frozen=True)
class NeumannResult:
    """Partial sum, per-term fields/norms and the stopping status."""

    partial_sum: ComplexField
    terms: tuple[ComplexField, ...]
    term_norms: Array
    status: str
    terms_used: int

    def partial_sum_at(self, n_terms: int) -> ComplexField:
        """Sum of the first ``n_terms`` computed terms."""
        if not 1 <= n_terms <= self.terms_used:
            raise ValueError(f"have {self.terms_used} terms, asked for {n_terms}")
        if n_terms == 1:
            return self.terms[0]
        acc = self.terms[0].values.copy()
        for t in self.terms[1:n_terms]:
            acc += t.values
        return ComplexField(self.partial_sum.grid, acc)


def _check_homogeneous(fact: Factorization) -> None:
    if not fact.homogeneous:
        raise SeriesConfigError(
            "factorization was not built from the homogeneous (q = 0) operator"
        )


def apply_G(fact_homog: Factorization, g: ComplexField) -> ComplexField:
    """Homogeneous-medium solve g -> u through the cached factorization."""
    _check_homogeneous(fact_homog)
    if g.grid != fact_homog.grid:
        raise SeriesConfigError("source grid does not match the factorization grid")
    return solve(fact_homog, g)


def neumann_solve(
    p: HelmholtzProblem, cfg: NeumannConfig, fact_homog: Factorization
) -> NeumannResult:
    """Evaluate the truncated series for problem ``p``.

    Stops at cfg.n_terms, at cfg.tol, or when divergence is detected;
    divergence never raises, the status reports it.  The computed terms
    do not depend on tol (it only short-circuits the loop).
    """
    _check_homogeneous(fact_homog)
    if p.grid != fact_homog.grid:
        raise SeriesConfigError("problem grid does not match the factorization grid")
    if p.k != fact_homog.k:
        raise SeriesConfigError(
            f"problem wavenumber {p.k} does not match factorization k {fact_homog.k}"
        )

    ksq = p.k**2
    qv = p.q.values

    v = solve(fact_homog, p.f)  # v_0
    terms = [v]
    norms = [l2_norm(v)]
    acc = v.values.copy()
    status = TRUNCATED
    growth_hits = 0

    for _ in range(1, cfg.n_terms):
        rhs = ComplexField(p.grid, -ksq * qv * v.values)
        v = solve(fact_homog, rhs)
        terms.append(v)
        norms.append(l2_norm(v))
        acc = acc + v.values

        prev, cur = norms[-2], norms[-1]
        if prev == 0.0:
            status = CONVERGED
            break
        sum_norm = float(np.sqrt(p.grid.cell_area * np.sum(np.abs(acc) ** 2)))
        if sum_norm > 0.0 and cur <= cfg.tol * sum_norm:
            status = CONVERGED
            break
        if cur / prev >= cfg.divergence_factor:
            growth_hits += 1
            if growth_hits >= 2:
                status = DIVERGING
                break
        else:
            growth_hits = 0

    partial = terms[0] if len(terms) == 1 else ComplexField(p.grid, acc)
    return NeumannResult(
        partial_sum=partial,
        terms=tuple(terms),
        term_norms=np.array(norms),
        status=status,
        terms_used=len(terms),
    )


def estimate_contraction(
    k: float,
    q: RealField,
    fact_homog: Factorization,
    iters: int = 20,
    seed: int = 0,
) -> float:
    """Power-iteration estimate of the spectral radius of v -> -k^2 G(q v).

    An estimate below one predicts series convergence, above one
    divergence.  Runs ``iters`` normalized applications from a seeded
    random start and returns the geometric mean of the last few growth
    ratios (the plain ratio oscillates when the dominant eigenvalue is
    complex).  Exactly homogeneous of degree one in q.
    """
    if iters < 5:
        raise SeriesConfigError(f"need at least 5 iterations, got {iters}")
    _check_homogeneous(fact_homog)
    if q.grid != fact_homog.grid:
        raise SeriesConfigError("q grid does not match the factorization grid")
    if np.max(np.abs(q.values)) == 0.0:
        return 0.0  # the map is nilpotent after one step

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    ksq = k**2
    v = rng.standard_normal(q.grid.shape) + 1j * rng.standard_normal(q.grid.shape)
    v /= np.sqrt(q.grid.cell_area * np.sum(np.abs(v) ** 2))

    ratios = []
    for _ in range(iters):
        w = solve(fact_homog, ComplexField(q.grid, -ksq * q.values * v))
        nrm = l2_norm(w)
        if nrm == 0.0:
            return 0.0
        ratios.append(nrm)  # ||M v|| with ||v|| = 1
        v = w.values / nrm
    tail = ratios[-min(5, len(ratios)):]
    return float(np.exp(np.mean(np.log(tail))))
