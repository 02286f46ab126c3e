"""Frequency designs discretizing the weighted spectral objective.

Two modes: Monte Carlo draws from the cube [-U, U]^d with equal weights
(the objective is then the mean-square residual over draws), and a
deterministic quadrature of an annulus-supported radial weight (the mode
backing the isometry analysis).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

__all__ = [
    "FrequencyScheme",
    "monte_carlo_cube",
    "annulus_quadrature",
    "sphere_rule",
    "isometry_constants",
    "weighted_norm",
]

MAX_SPHERE_DIM = 12  # the cube-diagonal point set grows like 2^d


@dataclass(frozen=True)
class FrequencyScheme:
    """Frequencies u_i with nonnegative weights and the spectral cut-off U."""

    mode: str
    cutoff: float
    freqs: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if self.mode not in ("mc-cube", "annulus"):
            raise ValueError(f"unknown scheme mode {self.mode!r}")
        if not self.cutoff > 1.0:
            raise ValueError("spectral cut-off U must exceed 1")
        freqs = np.asarray(self.freqs, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if freqs.ndim != 2 or freqs.shape[0] != weights.shape[0]:
            raise ValueError("freqs must be (m, d) with matching weights")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "weights", weights)

    @property
    def dim(self) -> int:
        return self.freqs.shape[1]

    @property
    def count(self) -> int:
        return self.freqs.shape[0]


def monte_carlo_cube(
    dim: int, cutoff: float, count: int, rng: np.random.Generator
) -> FrequencyScheme:
    """count i.i.d. uniform draws from [-U, U]^dim, each with weight 1/count."""
    if count < 1:
        raise ValueError("need at least one frequency")
    freqs = rng.uniform(-cutoff, cutoff, (count, dim))
    # a draw in a vanishing ball around 0 would make u u^T/|u|^2 meaningless
    tiny = np.einsum("ij,ij->i", freqs, freqs) < (1e-9 * cutoff) ** 2
    while tiny.any():
        freqs[tiny] = rng.uniform(-cutoff, cutoff, (int(tiny.sum()), dim))
        tiny = np.einsum("ij,ij->i", freqs, freqs) < (1e-9 * cutoff) ** 2
    return FrequencyScheme(
        mode="mc-cube", cutoff=float(cutoff), freqs=freqs, weights=np.full(count, 1.0 / count)
    )


def sphere_rule(dim: int):
    """Positive-weight cubature on the unit sphere, exact through degree 5.

    Combines the 2*dim axis points +-e_i (weight 1/(d(d+2))) with the 2^dim
    normalized cube diagonals (weight d/(2^d (d+2))); weights sum to one and
    reproduce the exact sphere moments of all monomials up to degree 5, which
    is what makes the direction-averaged fourth moments rotation invariant.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    if dim > MAX_SPHERE_DIM:
        raise ValueError(
            f"sphere rule supports dim <= {MAX_SPHERE_DIM}; use the Monte Carlo scheme beyond"
        )
    axis = np.vstack([np.eye(dim), -np.eye(dim)])
    signs = np.array(
        [[1.0 if (k >> i) & 1 else -1.0 for i in range(dim)] for k in range(2**dim)]
    )
    diag = signs / math.sqrt(dim)
    points = np.vstack([axis, diag])
    w_axis = 1.0 / (dim * (dim + 2.0))
    w_diag = dim / (2.0**dim * (dim + 2.0))
    weights = np.concatenate([np.full(2 * dim, w_axis), np.full(2**dim, w_diag)])
    return points, weights


def annulus_quadrature(
    dim: int,
    cutoff: float,
    radial_nodes: int = 8,
    profile: Optional[Callable] = None,
) -> FrequencyScheme:
    """Product quadrature of the annulus {U/4 < |u| <= U/2}.

    ``profile`` is the radial weight w(r) on (1/4, 1/2] in cut-off-free
    coordinates (default: indicator, w = 1).  Gauss-Legendre in radius times
    the degree-5 sphere rule; weights discretize the annulus-supported weight
    so their total equals its mass.
    """
    nodes, gl_w = np.polynomial.legendre.leggauss(int(radial_nodes))
    r = 0.375 + 0.125 * nodes  # map [-1, 1] -> [1/4, 1/2]
    wr = 0.125 * gl_w
    prof = profile if profile is not None else (lambda radius: np.ones_like(radius))
    surface = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
    radial_weight = wr * np.asarray(prof(r), dtype=float) * r ** (dim - 1) * surface

    points, sw = sphere_rule(dim)
    freqs = (cutoff * r)[:, None, None] * points[None, :, :]
    weights = radial_weight[:, None] * sw[None, :]
    return FrequencyScheme(
        mode="annulus",
        cutoff=float(cutoff),
        freqs=freqs.reshape(-1, dim),
        weights=weights.ravel(),
    )


def isometry_constants(scheme: FrequencyScheme):
    """Lower/upper norm-equivalence constants evaluated on the scheme itself.

    kappa_lo^2 is the quadrature value of the first-coordinate fourth moment
    v_1^4/|v|^4, kappa_hi^2 is 8x the quadrature value of |v|^{-4}; both are
    invariant under the cut-off scaling.
    """
    if scheme.mode != "annulus":
        raise ValueError("isometry constants are defined for the annulus scheme")
    u = scheme.freqs
    n2 = np.einsum("ij,ij->i", u, u)
    lo2 = float(np.sum(scheme.weights * u[:, 0] ** 4 / n2**2))
    hi2 = 8.0 * float(np.sum(scheme.weights * (scheme.cutoff**2 / n2) ** 2))
    return math.sqrt(lo2), math.sqrt(hi2)


def weighted_norm(A, a: float, scheme: FrequencyScheme) -> float:
    """Squared weighted L2 norm of the pair (A, a).

    Returns the discretized integral of (<u u^T/|u|^2, A> + 2 a U^2/|u|^2)^2
    against the scheme's weights (so the identity matrix with a = 0 gives the
    quadrature mass).  Defined for the annulus scheme, where the weight is a
    proper radial profile.
    """
    if scheme.mode != "annulus":
        raise ValueError("the weighted norm is tied to the annulus scheme")
    A = np.asarray(A, dtype=float)
    u = scheme.freqs
    n2 = np.einsum("ij,ij->i", u, u)
    quad = np.einsum("ij,jk,ik->i", u, A, u) / n2
    resid = quad + 2.0 * a * scheme.cutoff**2 / n2
    return float(np.sum(scheme.weights * resid**2))
