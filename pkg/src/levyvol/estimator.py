"""Penalized weighted least squares for the diffusion matrix.

The design couples rank-one frequency projections with an optional constant
column absorbing a finite jump mass; the solvers are proximal gradient
schemes on the resulting convex quadratic, plus one non-convex factored
variant.  Internally the intercept is optimized on the curvature scale
b = a/U^2, which keeps the solver independent of the cut-off; only
reporting converts back.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .frequencies import FrequencyScheme
from .spectral import ExponentEstimate

__all__ = [
    "DesignRow",
    "build_design",
    "SolverConfig",
    "EstimateReport",
    "SolverFailure",
    "objective",
    "nuclear_norm",
    "prox_nuclear",
    "solve",
    "nearest_psd",
    "numerical_rank",
    "error_matrix_diagnostic",
]


@dataclass(frozen=True)
class DesignRow:
    """One frequency's contribution to the weighted least-squares objective.

    theta : (d, d) ndarray
        Rank-one projection u u^T / |u|^2 (unit trace, unit spectral norm).
    intercept_coeff : float
        2 U^2 / |u|^2, the coefficient multiplying a/U^2 in the residual;
        zero when the intercept is pinned to zero.
    response : float
        2 |u|^{-2} Re psi_hat(u).
    weight : float
        Nonnegative quadrature / Monte Carlo weight.
    """

    theta: np.ndarray
    intercept_coeff: float
    response: float
    weight: float


def build_design(
    est: ExponentEstimate, scheme: FrequencyScheme, intercept: bool = False
) -> List[DesignRow]:
    """One DesignRow per unmasked frequency of the exponent estimate."""
    keep = est.active
    if not keep.any():
        raise ValueError("empty design: every frequency is masked")
    rows = []
    for u, val, w in zip(est.freqs[keep], est.values[keep], scheme.weights[keep]):
        n2 = float(u @ u)
        theta = np.outer(u, u) / n2
        coeff = 2.0 * scheme.cutoff**2 / n2 if intercept else 0.0
        rows.append(
            DesignRow(theta=theta, intercept_coeff=coeff, response=2.0 * val.real / n2, weight=w)
        )
    return rows


def _stack(rows: Sequence[DesignRow]):
    th = np.stack([r.theta for r in rows])
    c = np.array([r.intercept_coeff for r in rows])
    resp = np.array([r.response for r in rows])
    w = np.array([r.weight for r in rows])
    return th, c, resp, w


# ---------------------------------------------------------------------------
# config / report


@dataclass(frozen=True)
class SolverConfig:
    """Penalty, constraint set and iteration budget for :func:`solve`.

    psd_mode "unconstrained" minimizes over all symmetric matrices (project
    afterwards with :func:`nearest_psd` if needed); "psd-cone" keeps the
    iterates on the cone.  ``intercept`` switches the nonnegative jump-mass
    intercept on (then ``cutoff`` must be set so the intercept can be
    reported on the alpha scale).  ``step_scale`` multiplies the 1/L step
    size and exists for diagnostics - values above ~2 forfeit convergence.
    """

    lam: float = 0.0
    max_iter: int = 5000
    grad_tol: float = 1e-12
    psd_mode: str = "unconstrained"
    intercept: bool = False
    variant: str = "nuclear"
    lam_sparse: float = 0.0
    factor_rank: int = 0
    cutoff: float = 0.0
    step_scale: float = 1.0

    def __post_init__(self):
        if self.lam < 0 or self.lam_sparse < 0:
            raise ValueError("penalties must be nonnegative")
        if self.max_iter < 1 or self.grad_tol <= 0 or self.step_scale <= 0:
            raise ValueError("iteration budget and tolerances must be positive")
        if self.psd_mode not in ("unconstrained", "psd-cone"):
            raise ValueError(f"unknown psd_mode {self.psd_mode!r}")
        if self.variant not in ("nuclear", "lowrank+sparse", "factorized"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.intercept and not self.cutoff > 0:
            raise ValueError("intercept estimation needs the cut-off U in the config")


@dataclass(frozen=True)
class EstimateReport:
    """Solver output: raw and PSD-projected estimates plus diagnostics."""

    sigma_hat: np.ndarray
    sigma_psd: np.ndarray
    rank: int
    alpha_hat: Optional[float]
    objective_trace: np.ndarray
    lam: float
    cutoff: float
    rel_error: Optional[float] = None
    converged: bool = True


class SolverFailure(RuntimeError):
    """Raised when the objective refuses to decrease; carries the trace."""

    def __init__(self, msg: str, trace):
        super().__init__(msg)
        self.trace = np.asarray(trace)


# ---------------------------------------------------------------------------
# pieces


def nuclear_norm(M) -> float:
    """Sum of singular values; for symmetric input the |eigenvalues| sum."""
    return float(np.abs(np.linalg.eigvalsh(0.5 * (M + M.T))).sum())


def prox_nuclear(M, tau: float, psd_mode: str = "unconstrained") -> np.ndarray:
    """Eigenvalue soft-threshold: the proximal map of tau * nuclear norm.

    Unconstrained mode shrinks each eigenvalue toward zero keeping its sign;
    psd-cone mode additionally clips at zero, giving the prox over the PSD
    cone.
    """
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    M = np.asarray(M, dtype=float)
    if tau == 0.0 and psd_mode == "unconstrained":
        return 0.5 * (M + M.T)
    evals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    if psd_mode == "psd-cone":
        ev = np.clip(evals - tau, 0.0, None)
    else:
        ev = np.sign(evals) * np.clip(np.abs(evals) - tau, 0.0, None)
    return (vecs * ev) @ vecs.T


def objective(rows: Sequence[DesignRow], M, a: float = 0.0, cfg: Optional[SolverConfig] = None) -> float:
    """Penalized objective at (M, a): weighted squared residuals plus
    lam * (nuclear norm + a/U^2)."""
    cfg = cfg or SolverConfig()
    th, c, resp, w = _stack(rows)
    M = np.asarray(M, dtype=float)
    if a < 0:
        raise ValueError("the intercept is constrained to be nonnegative")
    b = 0.0
    if a != 0.0:
        if not cfg.cutoff > 0:
            raise ValueError("a nonzero intercept needs cfg.cutoff")
        b = a / cfg.cutoff**2
    resid = resp + c * b + np.einsum("ijk,jk->i", th, M)
    val = float(np.sum(w * resid**2))
    if cfg.lam > 0:
        val += cfg.lam * (nuclear_norm(M) + b)
    return val


def nearest_psd(M) -> np.ndarray:
    """Frobenius projection onto the PSD cone: clip negative eigenvalues."""
    M = np.asarray(M, dtype=float)
    evals, vecs = np.linalg.eigh(0.5 * (M + M.T))
    out = (vecs * np.clip(evals, 0.0, None)) @ vecs.T
    return 0.5 * (out + out.T)


def numerical_rank(M, tol: float = 1e-6) -> int:
    """Singular values above tol * max(sv) * max(dim) count toward the rank."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    s = np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0] * max(M.shape)))


# ---------------------------------------------------------------------------
# solver


def _quad_parts(th, c, resp, w, M, b):
    resid = resp + c * b + np.einsum("ijk,jk->i", th, M)
    f = float(np.sum(w * resid**2))
    wr = 2.0 * w * resid
    grad_m = np.einsum("i,ijk->jk", wr, th)
    grad_b = float(wr @ c)
    return f, grad_m, grad_b


def _lipschitz(th, c, w) -> float:
    theta_sq = np.einsum("ijk,ijk->i", th, th)
    lip = 2.0 * float(np.sum(w * (theta_sq + c**2)))
    return max(lip, 1e-300)


def _report(sigma_hat, b, trace, cfg, sigma_true, converged) -> EstimateReport:
    sigma_hat = 0.5 * (sigma_hat + sigma_hat.T)
    sigma_psd = nearest_psd(sigma_hat)
    alpha_hat = b * cfg.cutoff**2 if cfg.intercept else None
    rel = None
    if sigma_true is not None:
        sigma_true = np.asarray(sigma_true, dtype=float)
        denom = np.linalg.norm(sigma_true)
        rel = float(np.linalg.norm(sigma_hat - sigma_true) / denom) if denom > 0 else None
    return EstimateReport(
        sigma_hat=sigma_hat,
        sigma_psd=sigma_psd,
        # rank of the raw solution: the eigenvalue soft-threshold produces
        # exact zeros there, which is what the penalty is supposed to show
        rank=numerical_rank(sigma_hat),
        alpha_hat=alpha_hat,
        objective_trace=np.asarray(trace),
        lam=cfg.lam,
        cutoff=cfg.cutoff,
        rel_error=rel,
        converged=converged,
    )


def solve(rows: Sequence[DesignRow], cfg: SolverConfig, sigma_true=None) -> EstimateReport:
    """Minimize the penalized objective over symmetric matrices (and the
    optional nonnegative intercept).

    nuclear:          accelerated proximal gradient with function-value
                      restart; the accepted objective never increases.
    lowrank+sparse:   same scheme on a pair (M_r, M_s) with eigenvalue
                      soft-threshold on M_r and entrywise soft-threshold on
                      M_s; returns the sum.
    factorized:       non-convex descent on the factor L (d x k) of M = LL^T,
                      seeded from the truncated eigendecomposition of the
                      nuclear solution; only stationarity is guaranteed.

    Raises SolverFailure (trace attached) when ten consecutive candidate
    steps fail to improve the objective.
    """
    if len(rows) == 0:
        raise ValueError("empty design")
    if cfg.variant == "factorized":
        return _solve_factorized(rows, cfg, sigma_true)
    if cfg.variant == "lowrank+sparse":
        return _solve_lowrank_sparse(rows, cfg, sigma_true)
    return _solve_nuclear(rows, cfg, sigma_true)


def _solve_nuclear(rows, cfg, sigma_true) -> EstimateReport:
    th, c, resp, w = _stack(rows)
    d = th.shape[1]
    lam = cfg.lam
    step = cfg.step_scale / _lipschitz(th, c, w)

    def full(M, b):
        f = _quad_parts(th, c, resp, w, M, b)[0]
        return f + (lam * (nuclear_norm(M) + b) if lam > 0 else 0.0)

    x = np.zeros((d, d))
    bx = 0.0
    y, by = x, bx
    fx = full(x, bx)
    trace = [fx]
    t = 1.0
    stalls = 0
    converged = False
    for _ in range(cfg.max_iter):
        _, gm, gb = _quad_parts(th, c, resp, w, y, by)
        z = prox_nuclear(y - step * gm, step * lam, cfg.psd_mode)
        bz = max(by - step * (gb + lam), 0.0) if cfg.intercept else 0.0
        fz = full(z, bz)

        if not math.isfinite(fz) or fz > fx:
            if t == 1.0:
                # a momentum-free prox step cannot increase the objective in
                # exact arithmetic: tiny excess means we sit at the optimum,
                # anything else means the step size is divergent
                if math.isfinite(fz) and fz - fx <= 1e-9 * max(abs(fx), 1e-12):
                    converged = True
                    break
                stalls += 1
                if stalls >= 10:
                    raise SolverFailure("objective increased 10 times in a row", trace)
            # function-value restart: drop momentum, retry from the best point
            y, by, t = x, bx, 1.0
            trace.append(fx)
            continue
        stalls = 0
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        y = z + ((t - 1.0) / t_new) * (z - x)
        by = bz + ((t - 1.0) / t_new) * (bz - bx)
        x, bx, t = z, bz, t_new
        gain = fx - fz
        fx = fz
        trace.append(fx)
        if gain <= cfg.grad_tol * abs(fx):
            converged = True
            break
    return _report(x, bx, trace, cfg, sigma_true, converged)


def _solve_lowrank_sparse(rows, cfg, sigma_true) -> EstimateReport:
    th, c, resp, w = _stack(rows)
    d = th.shape[1]
    lam, lam_s = cfg.lam, cfg.lam_sparse
    # the smooth part acts on the sum, doubling the curvature on the pair
    step = cfg.step_scale / (2.0 * _lipschitz(th, c, w))

    def full(mr, ms, b):
        f = _quad_parts(th, c, resp, w, mr + ms, b)[0]
        return f + lam * (nuclear_norm(mr) + b) + lam_s * float(np.abs(ms).sum())

    def soft(mat, tau):
        return np.sign(mat) * np.clip(np.abs(mat) - tau, 0.0, None)

    mr = np.zeros((d, d))
    ms = np.zeros((d, d))
    bx = 0.0
    yr, ys, by = mr, ms, bx
    fx = full(mr, ms, bx)
    trace = [fx]
    t = 1.0
    stalls = 0
    converged = False
    for _ in range(cfg.max_iter):
        _, gm, gb = _quad_parts(th, c, resp, w, yr + ys, by)
        zr = prox_nuclear(yr - step * gm, step * lam, cfg.psd_mode)
        zs = soft(ys - step * gm, step * lam_s)
        zs = 0.5 * (zs + zs.T)
        bz = max(by - step * (gb + lam), 0.0) if cfg.intercept else 0.0
        fz = full(zr, zs, bz)
        if not math.isfinite(fz) or fz > fx:
            if t == 1.0:
                if math.isfinite(fz) and fz - fx <= 1e-9 * max(abs(fx), 1e-12):
                    converged = True
                    break
                stalls += 1
                if stalls >= 10:
                    raise SolverFailure("objective increased 10 times in a row", trace)
            yr, ys, by, t = mr, ms, bx, 1.0
            trace.append(fx)
            continue
        stalls = 0
        t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        coef = (t - 1.0) / t_new
        yr = zr + coef * (zr - mr)
        ys = zs + coef * (zs - ms)
        by = bz + coef * (bz - bx)
        mr, ms, bx, t = zr, zs, bz, t_new
        gain = fx - fz
        fx = fz
        trace.append(fx)
        if gain <= cfg.grad_tol * abs(fx):
            converged = True
            break
    return _report(mr + ms, bx, trace, cfg, sigma_true, converged)


def _solve_factorized(rows, cfg, sigma_true) -> EstimateReport:
    th, c, resp, w = _stack(rows)
    d = th.shape[1]
    k = int(cfg.factor_rank)
    if not 1 <= k <= d:
        raise ValueError("factor_rank must lie in [1, dim]")
    seed_cfg = SolverConfig(
        lam=cfg.lam,
        max_iter=cfg.max_iter,
        grad_tol=cfg.grad_tol,
        psd_mode=cfg.psd_mode,
        intercept=cfg.intercept,
        cutoff=cfg.cutoff,
    )
    base = _solve_nuclear(rows, seed_cfg, None)
    evals, vecs = np.linalg.eigh(base.sigma_hat)
    top = np.argsort(evals)[::-1][:k]
    fac = vecs[:, top] * np.sqrt(np.clip(evals[top], 0.0, None))
    b = (base.alpha_hat / cfg.cutoff**2) if (cfg.intercept and base.alpha_hat) else 0.0

    step0 = 1.0 / _lipschitz(th, c, w)

    def g(L, b_):
        return _quad_parts(th, c, resp, w, L @ L.T, b_)[0]

    fx = g(fac, b)
    trace = [fx]
    step = step0 * cfg.step_scale
    stalls = 0
    converged = False
    for _ in range(cfg.max_iter):
        _, gm, gb = _quad_parts(th, c, resp, w, fac @ fac.T, b)
        grad_l = 2.0 * gm @ fac
        norm2 = float(np.sum(grad_l**2)) + (gb * gb if cfg.intercept else 0.0)
        accepted = False
        s = step
        for _ in range(30):
            cand = fac - s * grad_l
            b_cand = max(b - s * gb, 0.0) if cfg.intercept else 0.0
            f_cand = g(cand, b_cand)
            if math.isfinite(f_cand) and f_cand <= fx - 1e-4 * s * norm2:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            # after the halvings the demanded Armijo decrease sits below the
            # roundoff floor of the objective: numerically stationary, which
            # happens immediately when the eigen-seed already solves the
            # problem
            if 1e-4 * s * norm2 <= 2.2e-16 * max(abs(fx), 1e-12):
                converged = True
                break
            stalls += 1
            if stalls >= 10:
                raise SolverFailure("line search failed 10 times in a row", trace)
            trace.append(fx)
            continue
        stalls = 0
        fac, b = cand, b_cand
        gain = fx - f_cand
        fx = f_cand
        trace.append(fx)
        step = min(s * 1.5, step0 * 100.0)
        if gain <= cfg.grad_tol * abs(fx):
            converged = True
            break
    return _report(fac @ fac.T, b, trace, cfg, sigma_true, converged)


# ---------------------------------------------------------------------------
# diagnostics


def error_matrix_diagnostic(
    est: ExponentEstimate,
    scheme: FrequencyScheme,
    sigma_true,
    alpha_true: float = 0.0,
) -> Tuple[np.ndarray, float]:
    """Residual moment matrix at the true parameters and its spectral norm.

    Discretizes 2 * integral of (2|u|^{-2} Re psi_hat(u) + <Theta~(u),
    diag(Sigma, alpha/U^2)>) Theta~(u) w_U(u) du over the scheme, where
    Theta~(u) stacks u u^T/|u|^2 with the intercept coefficient 2U^2/|u|^2.
    Small spectral norm certifies that the truth nearly annihilates the
    empirical design.
    """
    sigma_true = np.asarray(sigma_true, dtype=float)
    keep = est.active
    u = est.freqs[keep]
    vals = est.values[keep]
    wts = scheme.weights[keep]
    d = u.shape[1]
    n2 = np.einsum("ij,ij->i", u, u)
    coeff = 2.0 * scheme.cutoff**2 / n2
    resid = 2.0 * vals.real / n2 + np.einsum("ij,jk,ik->i", u, sigma_true, u) / n2
    resid = resid + coeff * (alpha_true / scheme.cutoff**2)
    out = np.zeros((d + 1, d + 1))
    scaled = 2.0 * wts * resid
    out[:d, :d] = np.einsum("i,ij,ik->jk", scaled / n2, u, u)
    out[d, d] = float(scaled @ coeff)
    return out, float(np.linalg.norm(out, 2))
