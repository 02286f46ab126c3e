"""Empirical characteristic function and the spectral exponent estimate."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .laplace import (
    DomainError,
    EmpiricalLaplaceInverse,
    InversionError,
    LaplaceFamily,
    evaluate_series,
)
from .models import SampleSet

__all__ = [
    "ecf",
    "ExponentEstimate",
    "exponent_estimate",
    "exponent_from_cf",
    "EmptySpectrumError",
    "default_guard",
]


class EmptySpectrumError(RuntimeError):
    """Every requested frequency was masked; nothing to estimate from."""


def default_guard(n: int, floor: float = 1e-3) -> float:
    """Magnitude below which phi_n is treated as pure noise.

    2/sqrt(n) tracks the CLT scale of |phi_n - phi|; the floor keeps huge
    samples from trusting magnitudes at the edge of float noise.
    """
    return max(2.0 / math.sqrt(n), floor)


def ecf(sample: SampleSet, u) -> Union[complex, np.ndarray]:
    """Empirical characteristic function (1/n) sum_j exp(i <u, Y_j>).

    ``u`` may be a single d-vector or an (m, d) stack of frequencies; the
    phase matrix is built in blocks to bound memory.
    """
    y = sample.increments
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        return complex(np.exp(1j * (y @ u)).mean())
    out = np.empty(u.shape[0], dtype=complex)
    block = max(1, int(4.0e6 / max(1, y.shape[0])))
    for lo in range(0, u.shape[0], block):
        hi = min(lo + block, u.shape[0])
        out[lo:hi] = np.exp(1j * (u[lo:hi] @ y.T)).mean(axis=1)
    return out


@dataclass(frozen=True)
class ExponentEstimate:
    """Per-frequency estimates of the characteristic exponent.

    ``guard_mask[i]`` is True when frequency i was excluded (guard tripped,
    branch suspect, inversion failed or out of series domain); its value
    entry is NaN and must not reach any downstream objective.
    """

    freqs: np.ndarray
    values: np.ndarray
    guard_mask: np.ndarray
    guard: float

    @property
    def active(self) -> np.ndarray:
        return ~self.guard_mask


def exponent_from_cf(
    cf_values,
    freqs,
    family: Union[LaplaceFamily, EmpiricalLaplaceInverse],
    guard: float = 0.0,
    arg_margin: float = 0.05,
    roundtrip_tol: float = 1e-8,
) -> ExponentEstimate:
    """Invert characteristic-function values into exponent estimates.

    Masks, per frequency: |w| <= guard; w within ``arg_margin`` of the
    negative real axis (principal branch about to wrap); failed or
    round-trip-inconsistent inversions; |Im| at the family's wrap limit;
    series arguments outside the trusted disk.
    """
    w_all = np.asarray(cf_values, dtype=complex).ravel()
    freqs = np.asarray(freqs, dtype=float)
    if freqs.ndim != 2 or freqs.shape[0] != w_all.size:
        raise ValueError("freqs must be (m, d) matching the cf values")
    m = w_all.size
    values = np.full(m, np.nan + 1j * np.nan)
    mask = np.ones(m, dtype=bool)
    series = isinstance(family, EmpiricalLaplaceInverse)

    for i, w in enumerate(w_all):
        if abs(w) <= guard:
            continue
        if math.pi - abs(np.angle(w)) < arg_margin:
            continue
        try:
            z = evaluate_series(family, w) if series else complex(family.inverse(w))
        except (InversionError, DomainError):
            continue
        if not series:
            back = complex(family.evaluate(z))
            if abs(back - w) > roundtrip_tol * max(1.0, abs(w)):
                continue
            if abs(z.imag) >= family.im_limit * (1.0 - 1e-9):
                continue
        values[i] = -z
        mask[i] = False

    if mask.all():
        raise EmptySpectrumError(
            f"all {m} frequencies masked (guard={guard:.3g}); no spectral information"
        )
    return ExponentEstimate(freqs=freqs, values=values, guard_mask=mask, guard=guard)


def exponent_estimate(
    sample: SampleSet,
    family: Union[LaplaceFamily, EmpiricalLaplaceInverse],
    freqs,
    guard: float = None,
    guard_floor: float = 1e-3,
    arg_margin: float = 0.05,
    roundtrip_tol: float = 1e-8,
) -> ExponentEstimate:
    """Estimate the characteristic exponent at the given frequencies.

    ``guard`` defaults to max(2/sqrt(n), guard_floor).
    """
    freqs = np.asarray(freqs, dtype=float)
    if freqs.size == 0:
        raise ValueError("freqs must be nonempty")
    if guard is None:
        guard = default_guard(sample.n, guard_floor)
    cf = ecf(sample, freqs)
    return exponent_from_cf(
        cf, freqs, family, guard=guard, arg_margin=arg_margin, roundtrip_tol=roundtrip_tol
    )
