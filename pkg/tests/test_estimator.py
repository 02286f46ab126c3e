"""Design construction, penalized solvers, and their brute-force oracles.

The solver checks deliberately avoid reusing solver internals: prox and
solve are compared against vectorized grid searches over symmetric 2x2
matrices, and projections are verified through their KKT characterizations.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from levyvol import (
    CompoundPoissonGaussian,
    Deterministic,
    DesignRow,
    GammaSubordinator,
    ModelSpec,
    SolverConfig,
    SolverFailure,
    annulus_quadrature,
    build_design,
    error_matrix_diagnostic,
    exponent_from_cf,
    laplace_family,
    monte_carlo_cube,
    nearest_psd,
    nuclear_norm,
    numerical_rank,
    objective,
    prox_nuclear,
    solve,
    stream,
    true_characteristic_function,
    weighted_norm,
)
from levyvol.frequencies import FrequencyScheme


def exact_design(spec, scheme, intercept=False):
    """Design rows with the closed-form cf substituted for the empirical one."""
    cf = [true_characteristic_function(spec, u) for u in scheme.freqs]
    est = exponent_from_cf(cf, scheme.freqs, laplace_family(spec.clock))
    return build_design(est, scheme, intercept=intercept)


def synthetic_rows(freqs, truth, *, noise=None, weight=None):
    freqs = np.atleast_2d(freqs)
    w = 1.0 / len(freqs) if weight is None else weight
    rows = []
    for i, u in enumerate(freqs):
        th = np.outer(u, u) / (u @ u)
        resp = -float(np.sum(th * truth))
        if noise is not None:
            resp += noise[i]
        rows.append(DesignRow(theta=th, intercept_coeff=0.0, response=resp, weight=w))
    return rows


def gauss_spec(dim, sigma=None, clock=None):
    return ModelSpec(dim=dim, sigma=np.eye(dim) if sigma is None else sigma,
                     drift=None, jumps=None, clock=clock or GammaSubordinator(1.0, 1.0))


# ---------------------------------------------------------------------------
# design rows


class TestBuildDesign:
    def test_basis_vector_theta(self):
        spec = gauss_spec(3)
        sch = monte_carlo_cube(3, 4.0, 5, stream(1, 0))
        est_freqs = [np.array([1.0, 0.0, 0.0])] + list(sch.freqs[:2])
        cf = [true_characteristic_function(spec, u) for u in est_freqs]
        est = exponent_from_cf(cf, est_freqs, laplace_family(spec.clock))
        rows = build_design(est, FrequencyScheme("mc-cube", 4.0,
                                                 np.array(est_freqs),
                                                 np.full(3, 1 / 3)))
        e11 = np.zeros((3, 3))
        e11[0, 0] = 1.0
        np.testing.assert_allclose(rows[0].theta, e11, atol=1e-15)

    def test_theta_trace_one(self):
        spec = gauss_spec(4)
        sch = monte_carlo_cube(4, 5.0, 30, stream(2, 0))
        for row in exact_design(spec, sch):
            assert np.trace(row.theta) == pytest.approx(1.0, abs=1e-12)
            np.testing.assert_allclose(row.theta, row.theta.T, atol=1e-15)

    def test_gaussian_identity_response(self):
        # psi(u) = -|u|^2/2 so the response 2 Re(psi)/|u|^2 is exactly -1
        spec = gauss_spec(3, clock=Deterministic(1.0))
        sch = annulus_quadrature(3, 3.0)
        for row in exact_design(spec, sch):
            assert row.response == pytest.approx(-1.0, abs=1e-10)

    def test_intercept_coefficient(self):
        spec = gauss_spec(2, clock=Deterministic(1.0))
        u_edge = np.array([2.0, 0.0])  # |u| = U/2 with U = 4
        cf = [true_characteristic_function(spec, u_edge)]
        est = exponent_from_cf(cf, [u_edge], laplace_family(spec.clock))
        sch = FrequencyScheme("mc-cube", 4.0, np.array([u_edge]), np.ones(1))
        row = build_design(est, sch, intercept=True)[0]
        assert row.intercept_coeff == pytest.approx(8.0)  # 2 U^2/|u|^2

    def test_masked_frequencies_dropped(self):
        fam = laplace_family(Deterministic(1.0))
        freqs = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
        est = exponent_from_cf([0.6 + 0j, 0.01 + 0j], freqs, fam, guard=0.05)
        sch = FrequencyScheme("mc-cube", 4.0, np.array(freqs), np.full(2, 0.5))
        rows = build_design(est, sch)
        assert len(rows) == 1


# ---------------------------------------------------------------------------
# objective


class TestObjective:
    def test_zero_matrix_gives_weighted_square_sum(self):
        rng = np.random.default_rng(5)
        rows = synthetic_rows(rng.normal(size=(7, 2)), np.diag([1.0, 0.5]),
                              noise=rng.normal(size=7))
        expect = sum(r.weight * r.response**2 for r in rows)
        assert objective(rows, np.zeros((2, 2))) == pytest.approx(expect)

    def test_identity_zeroes_gaussian_design(self):
        spec = gauss_spec(3, clock=Deterministic(1.0))
        rows = exact_design(spec, annulus_quadrature(3, 3.0))
        assert objective(rows, np.eye(3)) == pytest.approx(0.0, abs=1e-18)

    def test_pure_penalty(self):
        row = DesignRow(theta=np.eye(2) / 2, intercept_coeff=0.0,
                        response=0.0, weight=0.0)
        cfg = SolverConfig(lam=1.0)
        assert objective([row], np.diag([2.0, 1.0]), cfg=cfg) == pytest.approx(3.0)


# ---------------------------------------------------------------------------
# prox operator


def _sym_eigs_2x2(x, y, z):
    half_tr = (x + y) / 2.0
    rad = np.sqrt(((x - y) / 2.0) ** 2 + z**2)
    return half_tr + rad, half_tr - rad


def _grid_search_2x2(value_fn, center, span, levels=8, pts=21):
    """Brute-force minimizer over symmetric 2x2 matrices in (m11, m22, m12).

    Vectorized coordinate-grid refinement followed by a simplex polish; the
    polish step matters on ill-conditioned designs, where the valley is too
    flat for a grid alone to locate the argmin to 1e-3.
    """
    c = np.asarray(center, float)
    s = float(span)
    for _ in range(levels):
        xs = c[0] + np.linspace(-s, s, pts)
        ys = c[1] + np.linspace(-s, s, pts)
        zs = c[2] + np.linspace(-s, s, pts)
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        vals = value_fn(X, Y, Z)
        i = np.unravel_index(np.argmin(vals), vals.shape)
        c = np.array([X[i], Y[i], Z[i]])
        s = 3.0 * (2 * s / (pts - 1))  # window of 3 cells around the best point
    res = minimize(
        lambda p: float(value_fn(*(np.asarray(v) for v in p))),
        c,
        method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000, "maxfev": 8000},
    )
    p = res.x
    return np.array([[p[0], p[2]], [p[2], p[1]]])


class TestProxNuclear:
    def test_diagonal_psd_cone(self):
        out = prox_nuclear(np.diag([3.0, 1.0, 0.5]), 1.0, psd_mode="psd-cone")
        np.testing.assert_allclose(out, np.diag([2.0, 0.0, 0.0]), atol=1e-12)

    def test_zero_threshold_is_identity(self):
        m = np.array([[1.0, 0.3], [0.3, -0.7]])
        np.testing.assert_allclose(prox_nuclear(m, 0.0), m, atol=1e-14)

    def test_sign_preserving_shrinkage(self):
        out = prox_nuclear(np.diag([2.0, -3.0]), 1.0)
        np.testing.assert_allclose(out, np.diag([1.0, -2.0]), atol=1e-12)

    def test_against_grid_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            g = rng.normal(size=(2, 2))
            m = (g + g.T) / 2
            tau = 0.5

            def value(X, Y, Z):
                quad = 0.5 * ((X - m[0, 0]) ** 2 + (Y - m[1, 1]) ** 2
                              + 2 * (Z - m[0, 1]) ** 2)
                l1, l2 = _sym_eigs_2x2(X, Y, Z)
                return quad + tau * (np.abs(l1) + np.abs(l2))

            oracle = _grid_search_2x2(value, [m[0, 0], m[1, 1], m[0, 1]], 3.0)
            got = prox_nuclear(m, tau)
            assert np.linalg.norm(got - oracle) < 1e-3

    @settings(max_examples=100, deadline=None)
    @given(
        entries=st.lists(st.floats(-5, 5), min_size=9, max_size=9),
        tau=st.floats(0.01, 3.0),
    )
    def test_subgradient_optimality(self, entries, tau):
        # M - X must be tau * (sign part) + W with range(W) orthogonal to
        # range(X) and |W| <= tau: the exact first-order condition
        a = np.array(entries).reshape(3, 3)
        m = (a + a.T) / 2
        x = prox_nuclear(m, tau)
        lam, q = np.linalg.eigh(x)
        g = q.T @ (m - x) @ q
        support = np.abs(lam) > 1e-9
        for i in np.where(support)[0]:
            assert abs(g[i, i] - tau * np.sign(lam[i])) < 1e-8
            for j in np.where(~support)[0]:
                assert abs(g[i, j]) < 1e-8 and abs(g[j, i]) < 1e-8
        if (~support).any():
            kernel_block = g[np.ix_(~support, ~support)]
            assert np.abs(np.linalg.eigvalsh(kernel_block)).max() <= tau + 1e-8

    @settings(max_examples=50, deadline=None)
    @given(entries=st.lists(st.floats(-5, 5), min_size=9, max_size=9),
           tau=st.floats(0.0, 3.0))
    def test_psd_cone_kkt(self, entries, tau):
        a = np.array(entries).reshape(3, 3)
        m = (a + a.T) / 2
        x = prox_nuclear(m, tau, psd_mode="psd-cone")
        assert np.linalg.eigvalsh(x).min() >= -1e-10
        # multiplier Z = X - M + tau*I must be PSD and complementary to X
        z = x - m + tau * np.eye(3)
        assert np.linalg.eigvalsh(z).min() >= -1e-8
        assert abs(np.sum(z * x)) < 1e-7 * max(1.0, np.abs(m).max()) ** 2


# ---------------------------------------------------------------------------
# projections and rank


class TestNearestPsd:
    def test_diagonal_clip(self):
        np.testing.assert_allclose(nearest_psd(np.diag([1.0, -0.5])),
                                   np.diag([1.0, 0.0]), atol=1e-14)

    def test_psd_fixed_point(self):
        g = np.random.default_rng(9).normal(size=(4, 4))
        p = g @ g.T
        np.testing.assert_allclose(nearest_psd(p), p, atol=1e-12)

    def test_projection_characterization(self):
        # Moreau: P >= 0, P - M >= 0, <P - M, P> = 0 uniquely identify the
        # Frobenius projection onto the PSD cone
        rng = np.random.default_rng(10)
        for _ in range(25):
            g = rng.normal(size=(4, 4))
            m = (g + g.T) / 2
            p = nearest_psd(m)
            scale = max(1.0, np.abs(m).max())
            assert np.linalg.eigvalsh(p).min() >= -1e-10
            assert np.linalg.eigvalsh(p - m).min() >= -1e-10 * scale
            assert abs(np.sum((p - m) * p)) < 1e-10 * scale**2


class TestNumericalRank:
    def test_paper_spectrum(self):
        m = np.diag([1.0, 0.5, 0.1] + [0.0] * 7)
        assert numerical_rank(m) == 3

    def test_zero_matrix(self):
        assert numerical_rank(np.zeros((4, 4))) == 0

    def test_tiny_eigenvalue_below_tolerance(self):
        assert numerical_rank(np.diag([1.0, 1e-9])) == 1

    def test_nuclear_norm_helper(self):
        assert nuclear_norm(np.diag([2.0, -1.0])) == pytest.approx(3.0)


# ---------------------------------------------------------------------------
# solver


class TestSolve:
    def test_zero_residual_exactness(self):
        rng = np.random.default_rng(12)
        g = rng.normal(size=(3, 3))
        truth = g @ g.T / 3
        rows = synthetic_rows(rng.normal(size=(12, 3)), truth)
        rep = solve(rows, SolverConfig(lam=0.0))
        assert np.abs(rep.sigma_hat - truth).max() < 1e-6
        assert rep.converged

    def test_exact_gaussian_design(self):
        spec = gauss_spec(3, clock=Deterministic(1.0))
        rows = exact_design(spec, annulus_quadrature(3, 3.0))
        rep = solve(rows, SolverConfig(lam=0.0))
        np.testing.assert_allclose(rep.sigma_hat, np.eye(3), atol=1e-6)

    def test_against_grid_oracle(self):
        rng = np.random.default_rng(13)
        lams = [0.0, 0.3, 1.0]
        for k in range(20):
            lam = lams[k % 3]
            g = rng.normal(size=(2, 2))
            truth = g @ g.T / 2
            rows = synthetic_rows(rng.normal(size=(5, 2)), truth,
                                  noise=0.3 * rng.normal(size=5))
            t11 = np.array([r.theta[0, 0] for r in rows])
            t22 = np.array([r.theta[1, 1] for r in rows])
            t12 = np.array([r.theta[0, 1] for r in rows])
            resp = np.array([r.response for r in rows])
            w = np.array([r.weight for r in rows])

            def value(X, Y, Z):
                shape = (slice(None),) + (None,) * np.ndim(X)
                fit = (resp[shape] + t11[shape] * X + t22[shape] * Y
                       + 2 * t12[shape] * Z)
                l1, l2 = _sym_eigs_2x2(X, Y, Z)
                return (w[shape] * fit**2).sum(axis=0) \
                    + lam * (np.abs(l1) + np.abs(l2))

            # start from the closed-form weighted LS point so the grid span
            # covers the minimizer even for badly conditioned draws
            a_mat = np.stack([t11, t22, 2 * t12], axis=1) * np.sqrt(w)[:, None]
            ls, *_ = np.linalg.lstsq(a_mat, -resp * np.sqrt(w), rcond=None)
            oracle = _grid_search_2x2(value, ls, max(3.0, 1.5 * np.abs(ls).max()))
            rep = solve(rows, SolverConfig(lam=lam))
            assert np.linalg.norm(rep.sigma_hat - oracle) < 1e-3, (k, lam)

    def test_huge_penalty_collapses_to_zero(self):
        rng = np.random.default_rng(14)
        rows = synthetic_rows(rng.normal(size=(8, 2)), np.eye(2))
        rep = solve(rows, SolverConfig(lam=1e6, psd_mode="psd-cone"))
        np.testing.assert_array_equal(rep.sigma_hat, np.zeros((2, 2)))
        assert rep.rank == 0

    def test_objective_trace_monotone(self):
        rng = np.random.default_rng(15)
        rows = synthetic_rows(rng.normal(size=(20, 3)), np.diag([1.0, 0.5, 0.0]),
                              noise=0.5 * rng.normal(size=20))
        rep = solve(rows, SolverConfig(lam=0.1))
        trace = np.asarray(rep.objective_trace)
        assert trace.size >= 2
        assert np.all(np.diff(trace) <= 1e-12 * max(1.0, trace[0]))

    def test_divergence_raises_with_trace(self):
        rng = np.random.default_rng(16)
        rows = synthetic_rows(rng.normal(size=(12, 3)), np.eye(3))
        with pytest.raises(SolverFailure) as exc:
            solve(rows, SolverConfig(lam=0.0, step_scale=25.0, max_iter=300))
        assert len(exc.value.trace) > 0

    def test_rank_nonincreasing_in_lambda(self):
        rng = np.random.default_rng(17)
        truth = np.diag([1.0, 0.4, 0.0, 0.0])
        rows = synthetic_rows(rng.normal(size=(30, 4)), truth,
                              noise=0.2 * rng.normal(size=30))
        ranks = []
        for lam in [0.0, 0.01, 0.05, 0.2, 1.0]:
            rep = solve(rows, SolverConfig(lam=lam))
            ranks.append(numerical_rank(rep.sigma_psd))
        assert all(a >= b for a, b in zip(ranks, ranks[1:]))

    def test_report_fields(self):
        rng = np.random.default_rng(18)
        truth = np.diag([1.0, 0.5])
        rows = synthetic_rows(rng.normal(size=(9, 2)), truth)
        rep = solve(rows, SolverConfig(lam=0.05, cutoff=3.0), sigma_true=truth)
        assert rep.lam == 0.05
        assert rep.cutoff == 3.0
        assert rep.rel_error is not None
        assert np.linalg.eigvalsh(rep.sigma_psd).min() >= -1e-10
        np.testing.assert_allclose(rep.sigma_hat, rep.sigma_hat.T, atol=1e-14)


def intercept_rows(freqs, cutoff, sigma, alpha):
    """Rows whose responses carry an exact constant jump-mass term."""
    rows = []
    for u in np.atleast_2d(freqs):
        th = np.outer(u, u) / (u @ u)
        coeff = 2.0 * cutoff**2 / (u @ u)
        resp = -float(np.sum(th * sigma)) - coeff * alpha / cutoff**2
        rows.append(DesignRow(theta=th, intercept_coeff=coeff,
                              response=resp, weight=1.0 / len(freqs)))
    return rows


class TestIntercept:
    def test_recovers_sigma_and_jump_mass(self):
        # zero-residual joint problem: the solver must undo the alpha/U^2
        # bookkeeping and report alpha on its own scale
        rng = np.random.default_rng(19)
        sigma = np.diag([1.0, 0.5])
        dirs = rng.normal(size=(12, 2))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        freqs = dirs * rng.uniform(1.5, 3.0, size=(12, 1))
        rows = intercept_rows(freqs, 6.0, sigma, alpha=1.4)
        rep = solve(rows, SolverConfig(lam=1e-9, intercept=True, cutoff=6.0))
        np.testing.assert_allclose(rep.sigma_hat, sigma, atol=1e-5)
        assert rep.alpha_hat == pytest.approx(1.4, abs=1e-4)

    def test_alpha_clamped_at_zero(self):
        # a negative planted mass is outside the interval [0, inf); the
        # constrained solution must sit on the boundary
        rng = np.random.default_rng(20)
        rows = intercept_rows(rng.normal(size=(12, 2)), 4.0, np.eye(2), alpha=-0.8)
        rep = solve(rows, SolverConfig(lam=0.0, intercept=True, cutoff=4.0))
        assert rep.alpha_hat == 0.0

    def test_alpha_none_without_intercept(self):
        rng = np.random.default_rng(21)
        rows = synthetic_rows(rng.normal(size=(8, 2)), np.eye(2))
        assert solve(rows, SolverConfig(lam=0.0)).alpha_hat is None

    def test_intercept_requires_cutoff(self):
        with pytest.raises(ValueError):
            SolverConfig(intercept=True)


class TestVariants:
    def test_factorized_recovers_low_rank(self):
        rng = np.random.default_rng(20)
        v = rng.normal(size=3)
        truth = np.outer(v, v)
        rows = synthetic_rows(rng.normal(size=(15, 3)), truth)
        rep = solve(rows, SolverConfig(variant="factorized", factor_rank=1))
        assert np.abs(rep.sigma_hat - truth).max() < 1e-4
        assert numerical_rank(rep.sigma_hat) == 1

    def test_factorized_rank_cap_validated(self):
        rng = np.random.default_rng(21)
        rows = synthetic_rows(rng.normal(size=(10, 2)), np.eye(2))
        with pytest.raises(ValueError):
            solve(rows, SolverConfig(variant="factorized", factor_rank=5))

    def test_lowrank_plus_sparse_matches_nuclear_when_sparse_killed(self):
        rng = np.random.default_rng(22)
        truth = np.diag([1.0, 0.4, 0.0])
        rows = synthetic_rows(rng.normal(size=(18, 3)), truth,
                              noise=0.1 * rng.normal(size=18))
        plain = solve(rows, SolverConfig(lam=0.02))
        both = solve(rows, SolverConfig(lam=0.02, variant="lowrank+sparse",
                                        lam_sparse=50.0))
        assert np.abs(plain.sigma_hat - both.sigma_hat).max() < 1e-4


# ---------------------------------------------------------------------------
# residual diagnostic


class TestErrorMatrixDiagnostic:
    def test_zero_at_truth(self):
        spec = gauss_spec(3, sigma=np.diag([1.0, 0.5, 0.25]),
                          clock=Deterministic(1.0))
        sch = annulus_quadrature(3, 3.0)
        cf = [true_characteristic_function(spec, u) for u in sch.freqs]
        est = exponent_from_cf(cf, sch.freqs, laplace_family(spec.clock))
        mat, norm = error_matrix_diagnostic(est, sch, spec.sigma)
        assert mat.shape == (4, 4)
        assert norm < 1e-10
        assert np.abs(mat).max() < 1e-10

    def test_weight_scaling_linearity(self):
        spec = gauss_spec(2, clock=Deterministic(1.0))
        sch = annulus_quadrature(2, 3.0)
        cf = [true_characteristic_function(spec, u) for u in sch.freqs]
        est = exponent_from_cf(cf, sch.freqs, laplace_family(spec.clock))
        wrong = 0.8 * np.eye(2)  # nonzero residual so the scaling is visible
        m1, n1 = error_matrix_diagnostic(est, sch, wrong)
        scaled = FrequencyScheme(sch.mode, sch.cutoff, sch.freqs, 3.0 * sch.weights)
        m3, n3 = error_matrix_diagnostic(est, scaled, wrong)
        np.testing.assert_allclose(m3, 3.0 * m1, rtol=1e-12)
        assert n3 == pytest.approx(3.0 * n1, rel=1e-12)

    def test_weighted_norm_consistency(self):
        # |R_n| at a wrong matrix relates to the same quadrature the norm uses
        sch = annulus_quadrature(2, 3.0)
        assert weighted_norm(np.eye(2), 0.0, sch) > 0
