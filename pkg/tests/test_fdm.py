import numpy as np
import pytest
import scipy.sparse as sp

from helmscat import (
    ComplexField,
    FactorizationError,
    Grid2D,
    HelmholtzProblem,
    RealField,
    l2_norm,
    pde_residual,
    relative_l2_error,
    restrict,
    rotate90,
    solve,
    solve_direct,
)
from helmscat import fdm
from helmscat.scenes import disk, draw_grf_coefficients, grf_realize, sampler_rng

from conftest import random_complex_field, random_real_field


def apply_operator_reference(k, q, v):
    """Stencil-free oracle: apply the scaled discrete operator by loops.

    Written from the discretization description, independently of the
    assembly code: five-point stencil, ghost = opposite interior
    neighbour + 2h*i*k*boundary value, rows scaled by hx*hy times the
    trapezoid weight.
    """
    g = q.grid
    nx, ny, hx, hy = g.nx, g.ny, g.hx, g.hy
    out = np.zeros(g.shape, dtype=complex)
    for j in range(ny):
        for i in range(nx):
            c = v[j, i]
            acc = (k**2) * (1.0 + q.values[j, i]) * c
            west = v[j, i - 1] if i > 0 else v[j, i + 1] + 2 * hx * 1j * k * c
            east = v[j, i + 1] if i < nx - 1 else v[j, i - 1] + 2 * hx * 1j * k * c
            south = v[j - 1, i] if j > 0 else v[j + 1, i] + 2 * hy * 1j * k * c
            north = v[j + 1, i] if j < ny - 1 else v[j - 1, i] + 2 * hy * 1j * k * c
            acc += (west + east - 2 * c) / hx**2 + (south + north - 2 * c) / hy**2
            w = (0.5 if i in (0, nx - 1) else 1.0) * (0.5 if j in (0, ny - 1) else 1.0)
            out[j, i] = hx * hy * w * acc
    return out


class TestAssemble:
    def test_3x3_center_row_stencil(self):
        g = Grid2D(3, 3)
        A = fdm.assemble(1.0, RealField.zeros(g)).matrix.toarray()
        h = 0.5
        row = A[4]  # center node (1, 1)
        assert row[4] == pytest.approx(-4.0 + h**2 * 1.0)
        for col in (1, 3, 5, 7):
            assert row[col] == pytest.approx(1.0)
        assert row[0] == row[2] == row[6] == row[8] == 0.0

    def test_constant_q_shifts_diagonal_only(self):
        g = Grid2D(7, 7)
        k, c = 3.0, 0.25
        A0 = fdm.assemble(k, RealField.zeros(g))
        Ac = fdm.assemble(k, RealField(g, np.full(g.shape, c)))
        diff = (Ac.matrix - A0.matrix).toarray()
        off_diag = diff - np.diag(np.diag(diff))
        assert np.max(np.abs(off_diag)) == 0.0
        # diagonal shift is h^2 k^2 c times the row's trapezoid weight
        expected = (A0.row_scale * k**2 * c).reshape(-1)
        assert np.allclose(np.diag(diff), expected, rtol=1e-14)
        interior = expected.reshape(g.shape)[1:-1, 1:-1]
        assert np.allclose(interior, g.cell_area * k**2 * c)

    def test_matrix_vector_matches_reference_application(self, rng):
        g = Grid2D(33, 33)
        k = 10.0
        q = random_real_field(g, rng, scale=0.1)
        A = fdm.assemble(k, q)
        v = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
        got = (A.matrix @ v.reshape(-1)).reshape(g.shape)
        ref = apply_operator_reference(k, q, v)
        assert np.max(np.abs(got - ref)) < 1e-13 * np.max(np.abs(ref))

    def test_complex_symmetric(self, rng):
        for nx, ny, k in [(5, 6, 2.0), (9, 7, 8.0), (13, 13, 20.0)]:
            q = random_real_field(Grid2D(nx, ny), rng, scale=0.2)
            M = fdm.assemble(k, q).matrix
            assert abs(M - M.T).max() < 1e-14

    def test_bad_inputs(self, rng):
        g = Grid2D(5, 5)
        with pytest.raises(ValueError):
            fdm.assemble(-1.0, RealField.zeros(g))

    def test_at_most_five_nonzeros_per_row(self, rng):
        A = fdm.assemble(4.0, random_real_field(Grid2D(8, 9), rng)).matrix
        per_row = np.diff(A.indptr)
        assert per_row.max() <= 5


class TestFactorize:
    def test_round_trip_recovers_random_vector(self, rng):
        g = Grid2D(21, 19)
        A = fdm.assemble(7.0, random_real_field(g, rng, scale=0.1))
        fact = fdm.factorize(A)
        x = rng.standard_normal(g.n_points) + 1j * rng.standard_normal(g.n_points)
        b = A.matrix @ x
        x_rec = fact.solve_vector(b)
        assert np.linalg.norm(x_rec - x) < 1e-10 * np.linalg.norm(x)

    def test_deterministic_solves(self, rng):
        g = Grid2D(17, 17)
        fact = fdm.factorize(fdm.assemble(5.0, RealField.zeros(g)))
        b = rng.standard_normal(g.n_points) + 1j * rng.standard_normal(g.n_points)
        assert np.array_equal(fact.solve_vector(b), fact.solve_vector(b))

    def test_abc_system_is_invertible_at_k20(self):
        g = Grid2D(65, 65)
        fact = fdm.factorize(fdm.assemble(20.0, RealField.zeros(g)))
        assert fact.homogeneous

    def test_concurrent_solves_share_one_factorization(self, rng):
        from concurrent.futures import ThreadPoolExecutor

        g = Grid2D(33, 33)
        fact = fdm.factorize(fdm.assemble(9.0, RealField.zeros(g)))
        rhs = [
            rng.standard_normal(g.n_points) + 1j * rng.standard_normal(g.n_points)
            for _ in range(16)
        ]
        serial = [fact.solve_vector(b) for b in rhs]
        with ThreadPoolExecutor(max_workers=8) as pool:
            threaded = list(pool.map(fact.solve_vector, rhs))
        for s, t in zip(serial, threaded):
            assert np.array_equal(s, t)

    def test_singular_matrix_reported(self):
        g = Grid2D(3, 3)
        base = fdm.assemble(1.0, RealField.zeros(g))
        singular = sp.csr_matrix((9, 9), dtype=complex)
        broken = fdm.SystemMatrix(
            matrix=singular, grid=g, k=1.0, row_scale=base.row_scale,
            q_hash=base.q_hash, homogeneous=True,
        )
        with pytest.raises(FactorizationError):
            fdm.factorize(broken)


class TestSolve:
    def test_zero_rhs_gives_zero(self):
        g = Grid2D(17, 17)
        fact = fdm.factorize(fdm.assemble(5.0, RealField.zeros(g)))
        u = solve(fact, ComplexField.zeros(g))
        assert np.all(u.values == 0.0)

    def test_linearity(self, rng):
        g = Grid2D(17, 17)
        fact = fdm.factorize(fdm.assemble(5.0, RealField.zeros(g)))
        f1 = random_complex_field(g, rng)
        f2 = random_complex_field(g, rng)
        a, b = 2.0 - 1j, 0.5 + 0.25j
        combo = solve(fact, ComplexField(g, a * f1.values + b * f2.values))
        split = a * solve(fact, f1).values + b * solve(fact, f2).values
        assert np.max(np.abs(combo.values - split)) < 1e-10 * np.max(np.abs(split))

    def test_outgoing_wave_reaches_boundary_without_reflection(self):
        # oracle: embed the same physical problem in a 4x larger domain
        # (scale x -> (x + 1.5)/4 maps [-1.5, 2.5]^2 onto the unit square,
        # turning k into 4k and f into 16 f); restrict to the center and
        # compare.  The remaining gap is the first-order ABC error.
        k = 20.0
        g = Grid2D(65, 65)
        f = ComplexField.from_function(
            g, lambda x, y: np.exp(-200.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2))
        )
        u = solve_direct(HelmholtzProblem(k, RealField.zeros(g), f))

        big = Grid2D(257, 257)
        f_big = ComplexField.from_function(
            big,
            lambda x, y: 16.0
            * np.exp(-200.0 * (((4 * x - 1.5) - 0.5) ** 2 + ((4 * y - 1.5) - 0.5) ** 2)),
        )
        u_big = solve_direct(HelmholtzProblem(4 * k, RealField.zeros(big), f_big))
        inner = u_big.values[96:161, 96:161]
        gap = np.linalg.norm(u.values - inner) / np.linalg.norm(inner)
        assert gap < 0.15
        # magnitude decays outward: no standing-wave pileup at the boundary
        mag = np.abs(u.values)
        boundary_max = max(mag[0].max(), mag[-1].max(), mag[:, 0].max(), mag[:, -1].max())
        assert boundary_max < 0.5 * mag.max()


class TestSolveDirect:
    def test_q_zero_matches_homogeneous_path(self, rng):
        g = Grid2D(33, 33)
        f = random_complex_field(g, rng)
        direct = solve_direct(HelmholtzProblem(9.0, RealField.zeros(g), f))
        fact = fdm.factorize(fdm.assemble(9.0, RealField.zeros(g)))
        assert np.array_equal(direct.values, solve(fact, f).values)

    def test_solution_norm_shrinks_with_wavenumber(self):
        g = Grid2D(65, 65)
        fv = np.exp(
            -50.0 * ((g.meshgrid()[0] - 0.5) ** 2 + (g.meshgrid()[1] - 0.5) ** 2)
        )
        f = ComplexField(g, fv / np.sqrt(g.cell_area * np.sum(fv**2)))
        norms = [
            l2_norm(solve_direct(HelmholtzProblem(k, RealField.zeros(g), f)))
            for k in (10.0, 20.0, 40.0)
        ]
        assert norms[0] > norms[1] > norms[2]

    def test_interior_residual_of_direct_solve(self, rng):
        g = Grid2D(65, 65)
        q = random_real_field(g, rng, scale=0.05)
        f = random_complex_field(g, rng)
        p = HelmholtzProblem(12.0, q, f)
        u = solve_direct(p)
        assert pde_residual(u, p.k, q, f) < 1e-10 * l2_norm(f)

    def test_self_convergence_under_refinement(self):
        # Richardson-style oracle: errors against a finer reference shrink
        k = 10.0
        coeffs = draw_grf_coefficients(sampler_rng(7), 12)
        ref_grid = Grid2D(129, 129)
        scale = np.max(np.abs(grf_realize(coeffs, ref_grid)))

        def problem(n):
            g = Grid2D(n, n)
            q = disk(g, (0.5, 0.5), 0.2, 0.1, smoothed=True)
            f = ComplexField(g, grf_realize(coeffs, g) / scale)
            return HelmholtzProblem(k, q, f)

        u_ref = solve_direct(problem(129))
        errs = [
            relative_l2_error(solve_direct(problem(n)), restrict(u_ref, 128 // (n - 1)))
            for n in (33, 65)
        ]
        assert errs[0] / errs[1] >= 1.5

    def test_q_perturbation_directional_derivative(self, rng):
        # d u / d q in direction delta solves A du = -h^2 w k^2 delta u,
        # i.e. du = solve(fact, -k^2 delta u); compare to central FD.
        g = Grid2D(21, 21)
        k = 6.0
        q = random_real_field(g, rng, scale=0.05)
        f = random_complex_field(g, rng)
        delta = rng.standard_normal(g.shape)
        fact = fdm.factorize(fdm.assemble(k, q))
        u = solve(fact, f)
        du_pred = solve(fact, ComplexField(g, -(k**2) * delta * u.values))
        eps = 1e-6
        up = solve_direct(HelmholtzProblem(k, RealField(g, q.values + eps * delta), f))
        um = solve_direct(HelmholtzProblem(k, RealField(g, q.values - eps * delta), f))
        du_fd = (up.values - um.values) / (2 * eps)
        rel = np.linalg.norm(du_fd - du_pred.values) / np.linalg.norm(du_fd)
        assert rel < 1e-6

    def test_rotation_covariance(self, rng):
        g = Grid2D(33, 33)
        k = 8.0
        q = RealField(g, 0.1 * np.abs(rng.standard_normal(g.shape)))
        f = random_complex_field(g, rng)
        u = solve_direct(HelmholtzProblem(k, q, f))
        u_rot = solve_direct(HelmholtzProblem(k, rotate90(q), rotate90(f)))
        assert np.max(np.abs(u_rot.values - rotate90(u).values)) < 1e-10 * np.max(
            np.abs(u.values)
        )
