"""Laplace transforms of clock-increment laws and their inverses.

Closed-form families cover every clock in :mod:`levyvol.models`; the
data-driven series inverse reconstructs the inverse transform near w = 1
from empirical moments of observed clock increments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .models import (
    ClockSpec,
    Deterministic,
    Exponential,
    GammaSubordinator,
    IntegratedCIR,
    SpecError,
    mean_clock_increment,
)

__all__ = [
    "LaplaceFamily",
    "laplace_family",
    "InversionError",
    "DomainError",
    "EmpiricalLaplaceInverse",
    "empirical_laplace_inverse",
    "evaluate_series",
    "partial_bell",
]

MAX_SERIES_ORDER = 30  # beyond this the Bell recurrence cancels catastrophically


class InversionError(ArithmeticError):
    """The numeric Laplace inversion failed to locate a preimage."""


class DomainError(ValueError):
    """Argument outside the domain where the series inverse is trusted."""


@dataclass(frozen=True)
class LaplaceFamily:
    """A Laplace transform with derivative and a continuously chosen inverse.

    ``evaluate`` and ``derivative`` accept complex scalars or arrays with
    Re z >= 0; ``inverse`` accepts a single complex w from the range of the
    transform over the right half-plane.  ``im_limit`` is the magnitude of
    Im(inverse) at which a principal-branch choice wraps around and stops
    being the continuous inverse (infinite when there is no such wrap).
    """

    tag: str
    params: tuple
    evaluate: Callable
    derivative: Callable
    inverse: Callable
    im_limit: float = math.inf


def laplace_family(clock: ClockSpec) -> LaplaceFamily:
    """Closed-form transform triple (evaluate, derivative, inverse) for a clock."""
    if isinstance(clock, Deterministic):
        step = clock.step
        return LaplaceFamily(
            tag="deterministic",
            params=(step,),
            evaluate=lambda z: np.exp(-step * np.asarray(z, complex)),
            derivative=lambda z: -step * np.exp(-step * np.asarray(z, complex)),
            inverse=lambda w: -np.log(complex(w)) / step,
            im_limit=math.pi / step,
        )
    if isinstance(clock, Exponential):
        sc = clock.scale
        return LaplaceFamily(
            tag="exponential",
            params=(sc,),
            evaluate=lambda z: 1.0 / (1.0 + sc * np.asarray(z, complex)),
            derivative=lambda z: -sc / (1.0 + sc * np.asarray(z, complex)) ** 2,
            inverse=lambda w: (1.0 / complex(w) - 1.0) / sc,
        )
    if isinstance(clock, GammaSubordinator):
        th, eta = clock.theta, clock.eta
        return LaplaceFamily(
            tag="gamma",
            params=(th, eta),
            evaluate=lambda z: (1.0 + np.asarray(z, complex) / eta) ** (-th),
            derivative=lambda z: -(th / eta) * (1.0 + np.asarray(z, complex) / eta) ** (-th - 1.0),
            inverse=lambda w: eta * (complex(w) ** (-1.0 / th) - 1.0),
        )
    if isinstance(clock, IntegratedCIR):
        return _cir_family(clock)
    raise SpecError(f"no closed-form Laplace transform for clock {clock!r}")


# ---------------------------------------------------------------------------
# integrated CIR: affine closed form + damped-Newton inverse


def _cir_family(clock: IntegratedCIR) -> LaplaceFamily:
    kappa, eta, xi = clock.kappa, clock.eta, clock.xi
    a = 2.0 * kappa * eta / xi**2  # stationary Gamma shape
    b = 2.0 * kappa / xi**2        # stationary Gamma rate

    def log_evaluate(z):
        # single-valued log-transform on Re z > 0: each inner principal log
        # stays off its cut (Re g > 0, den2/(g+kappa) in the unit disk around
        # 1, Re bt >= 0), so this is the analytic continuation from the real
        # axis, not just "a branch"
        z = np.asarray(z, complex)
        g = np.sqrt(kappa**2 + 2.0 * xi**2 * z)
        emg = np.exp(-g)
        # denominator of the Riccati solution, scaled by e^{-g} for stability
        den2 = (g + kappa) * (1.0 - emg) + 2.0 * g * emg
        bt = 2.0 * z * (1.0 - emg) / den2
        log_at = a * (np.log(2.0 * g) - 0.5 * (g - kappa) - np.log(den2))
        return log_at - a * np.log(1.0 + bt / b)

    def evaluate(z):
        return np.exp(log_evaluate(z))

    def _dlog(z: complex) -> complex:
        h = 1e-6 * max(1.0, abs(z))
        return complex(log_evaluate(z + h) - log_evaluate(z - h)) / (2.0 * h)

    def derivative(z):
        return evaluate(z) * np.asarray(
            [_dlog(complex(v)) for v in np.atleast_1d(np.asarray(z, complex))]
        ).reshape(np.shape(z))

    mean = mean_clock_increment(clock)
    z_floor = -kappa**2 / (2.0 * xi**2)  # keep Re(g^2) > 0

    def _newton_log(target: complex, z0: complex, tol: float) -> complex:
        # solve log_evaluate(z) = target; working in log space keeps the
        # iteration on the principal sheet and avoids the exp underflow of
        # small transform values
        z = complex(z0)
        fz = complex(log_evaluate(z)) - target
        for _ in range(80):
            if abs(fz) <= tol:
                return z
            dz = _dlog(z)
            if dz == 0 or not np.isfinite(dz):
                raise InversionError("flat derivative during CIR inversion")
            step = -fz / dz
            lam = 1.0
            for _ in range(30):
                z_new = z + lam * step
                if z_new.real > z_floor * 0.999 and abs(z_new) < 1e10:
                    f_new = complex(log_evaluate(z_new)) - target
                    if np.isfinite(f_new) and abs(f_new) < abs(fz):
                        z, fz = z_new, f_new
                        break
                lam *= 0.5
            else:
                raise InversionError("CIR inversion stalled")
        if abs(fz) <= tol * 10.0:
            return z
        raise InversionError("CIR inversion did not converge")

    def inverse(w):
        w = complex(w)
        if abs(w) < 1e-12:
            raise InversionError("cannot invert transform value near zero")
        target = np.log(w)  # principal log selects the principal sheet
        tol = 1e-13 * max(abs(target), 1.0)
        # moment-matched start: gamma-family inverse with the same mean
        z0 = (1.0 / w - 1.0) / mean if abs(w) > 1e-3 else -target / mean
        try:
            return _newton_log(target, z0, tol)
        except InversionError:
            pass
        # continuation along the segment 0 -> target in log space
        z = 0.0 + 0.0j
        for t in np.linspace(0.1, 1.0, 14):
            z = _newton_log(t * target, z, 1e-13 * max(abs(t * target), 1.0))
        return z

    # certified band |Im z| <= im_limit inside the principal region
    # {|Im log L(z)| < pi} where the value w determines z uniquely; beyond it
    # another sheet shares the same transform value
    probe = np.geomspace(1e-3, 50.0, 48)
    band = math.pi / mean
    for _ in range(200):
        if np.abs(np.imag(log_evaluate(probe + 1j * band))).max() < math.pi * 0.999:
            break
        band *= 0.95
    else:
        band = 0.0

    return LaplaceFamily(
        tag="integrated-cir",
        params=(kappa, eta, xi),
        evaluate=evaluate,
        derivative=derivative,
        inverse=inverse,
        im_limit=band,
    )


# ---------------------------------------------------------------------------
# empirical series inverse


def partial_bell(x: Sequence[float], n: int) -> np.ndarray:
    """Table ``B[m, k]`` of partial Bell polynomials of the sequence x.

    ``x`` supplies x_1, x_2, ...; entries beyond ``len(x)`` count as zero.
    Uses the standard recurrence
    ``B(m, k) = sum_j C(m-1, j-1) x_j B(m-j, k-1)``
    with exact integer binomials and floating-point x.
    """
    table = np.zeros((n + 1, n + 1))
    table[0, 0] = 1.0
    for m in range(1, n + 1):
        for k in range(1, m + 1):
            acc = 0.0
            for j in range(1, m - k + 2):
                xj = x[j - 1] if j <= len(x) else 0.0
                if xj != 0.0:
                    acc += math.comb(m - 1, j - 1) * xj * table[m - j, k - 1]
            table[m, k] = acc
    return table


@dataclass(frozen=True)
class EmpiricalLaplaceInverse:
    """Taylor series of the inverse transform around w = 1, fitted from
    empirical moments of an observed clock sample.

    ``moments[k-1]`` holds M_k = mean(T^k) for k = 1..order+1;
    ``coefficients[j-1]`` holds the series coefficient H_j for j = 1..order,
    so the inverse is evaluated as sum_j H_j (w-1)^j / j! on the disk
    |w - 1| <= radius.
    """

    moments: np.ndarray
    coefficients: np.ndarray
    order: int
    sample_size: int
    radius: float = 0.5


def empirical_laplace_inverse(
    clock_sample, order: int, radius: float = 0.5
) -> EmpiricalLaplaceInverse:
    """Fit the series inverse of order ``order`` from observed clock increments.

    Needs at least order+1 observations with positive mean; the order is
    capped at ``MAX_SERIES_ORDER``.
    """
    t = np.asarray(clock_sample, dtype=float).ravel()
    order = int(order)
    if order < 1 or order > MAX_SERIES_ORDER:
        raise ValueError(f"series order must be in [1, {MAX_SERIES_ORDER}]")
    if t.size < order + 1:
        raise ValueError("need at least order+1 clock observations")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("clock increments must be finite and nonnegative")

    powers = t[:, None] ** np.arange(1, order + 2)[None, :]
    moments = powers.mean(axis=0)  # M_1 .. M_{order+1}
    m1 = moments[0]
    if m1 <= 0.0:
        raise ValueError("degenerate clock sample: mean increment is zero")

    # scaled moments entering the Bell polynomials
    ks = np.arange(1, order)
    mhat = moments[1:order] / ((ks + 1) * m1) if order > 1 else np.empty(0)
    bell = partial_bell(mhat, order - 1)

    coeff = np.empty(order)
    # overall sign pinned by the constant-clock oracle: a clock with T_j = c
    # must reproduce the series of -log(w)/c, i.e. H_j = (-1)^j (j-1)!/c
    coeff[0] = -1.0 / m1
    for j in range(2, order + 1):
        acc = 0.0
        for k in range(1, j):
            rising = math.prod(range(j, j + k))  # j (j+1) ... (j+k-1)
            acc += (-1.0) ** k * rising * bell[j - 1, k]
        coeff[j - 1] = -acc / m1**j

    return EmpiricalLaplaceInverse(
        moments=moments,
        coefficients=coeff,
        order=order,
        sample_size=t.size,
        radius=float(radius),
    )


def evaluate_series(inv: EmpiricalLaplaceInverse, w) -> complex:
    """Partial sum sum_{j<=order} H_j (w-1)^j / j! on the trusted disk."""
    w = complex(w)
    x = w - 1.0
    if abs(x) > inv.radius + 1e-12:
        raise DomainError(
            f"|w - 1| = {abs(x):.4g} outside the series radius {inv.radius:.4g}"
        )
    total = 0.0 + 0.0j
    term = 1.0 + 0.0j
    for j in range(1, inv.order + 1):
        term *= x / j
        total += inv.coefficients[j - 1] * term
    return total
