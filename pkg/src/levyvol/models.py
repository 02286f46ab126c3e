"""Process models: a diffusion observed through jumps and a random business clock.

The estimation side only ever sees increments of the time-changed process, so
a model is fully described by the diffusion matrix, an optional jump family,
a drift and the law of the clock increments.  Specs are plain frozen
dataclasses, validated on construction; samplers and transforms treat them as
values.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

__all__ = [
    "SpecError",
    "Deterministic",
    "Exponential",
    "GammaSubordinator",
    "IntegratedCIR",
    "ClockSpec",
    "IndependentNIG",
    "CompoundPoissonGaussian",
    "JumpSpec",
    "ModelSpec",
    "SampleSet",
    "characteristic_exponent",
    "jump_mass",
    "mean_clock_increment",
    "clock_from_dict",
    "jumps_from_dict",
]


class SpecError(ValueError):
    """A model specification failed validation."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise SpecError(msg)


# ---------------------------------------------------------------------------
# clocks


@dataclass(frozen=True)
class Deterministic:
    """Business time running at a fixed rate: every increment equals ``step``."""

    step: float = 1.0

    def __post_init__(self):
        _require(self.step > 0, "clock step must be positive")

    def to_dict(self) -> dict:
        return {"kind": "deterministic", "step": self.step}


@dataclass(frozen=True)
class Exponential:
    """I.i.d. exponential clock increments with mean ``scale``."""

    scale: float = 1.0

    def __post_init__(self):
        _require(self.scale > 0, "exponential clock scale must be positive")

    def to_dict(self) -> dict:
        return {"kind": "exponential", "scale": self.scale}


@dataclass(frozen=True)
class GammaSubordinator:
    """I.i.d. Gamma(theta, rate eta) clock increments (mean theta/eta)."""

    theta: float = 1.0
    eta: float = 1.0

    def __post_init__(self):
        _require(self.theta > 0, "gamma clock shape theta must be positive")
        _require(self.eta > 0, "gamma clock rate eta must be positive")

    def to_dict(self) -> dict:
        return {"kind": "gamma", "theta": self.theta, "eta": self.eta}


@dataclass(frozen=True)
class IntegratedCIR:
    """Clock increments are unit-time integrals of a stationary square-root
    diffusion dZ = kappa (eta - Z) dt + xi sqrt(Z) dW.

    The Feller condition 2*kappa*eta > xi**2 keeps Z away from zero and makes
    the stationary law Gamma(2*kappa*eta/xi**2, rate 2*kappa/xi**2).
    ``substeps`` controls the integration sub-grid per unit interval; the
    transition sampling itself is exact, only the time integral is discretized.
    """

    kappa: float = 1.0
    eta: float = 1.0
    xi: float = 0.5
    substeps: int = 64

    def __post_init__(self):
        _require(self.kappa > 0, "CIR mean-reversion kappa must be positive")
        _require(self.eta > 0, "CIR level eta must be positive")
        _require(self.xi > 0, "CIR volatility xi must be positive")
        _require(
            2.0 * self.kappa * self.eta > self.xi**2,
            "Feller condition 2*kappa*eta > xi**2 violated",
        )
        _require(int(self.substeps) >= 1, "substeps must be a positive integer")

    def to_dict(self) -> dict:
        return {
            "kind": "integrated-cir",
            "kappa": self.kappa,
            "eta": self.eta,
            "xi": self.xi,
            "substeps": self.substeps,
        }


ClockSpec = Union[Deterministic, Exponential, GammaSubordinator, IntegratedCIR]


def mean_clock_increment(clock: ClockSpec) -> float:
    """Expected clock increment E[T_j]."""
    if isinstance(clock, Deterministic):
        return clock.step
    if isinstance(clock, Exponential):
        return clock.scale
    if isinstance(clock, GammaSubordinator):
        return clock.theta / clock.eta
    if isinstance(clock, IntegratedCIR):
        # stationary mean of Z is eta, so E int_0^1 Z dt = eta
        return clock.eta
    raise SpecError(f"unknown clock spec {clock!r}")


def clock_from_dict(d: dict) -> ClockSpec:
    kind = d.get("kind")
    if kind == "deterministic":
        return Deterministic(step=float(d.get("step", 1.0)))
    if kind == "exponential":
        return Exponential(scale=float(d.get("scale", 1.0)))
    if kind == "gamma":
        return GammaSubordinator(theta=float(d.get("theta", 1.0)), eta=float(d.get("eta", 1.0)))
    if kind == "integrated-cir":
        return IntegratedCIR(
            kappa=float(d.get("kappa", 1.0)),
            eta=float(d.get("eta", 1.0)),
            xi=float(d.get("xi", 0.5)),
            substeps=int(d.get("substeps", 64)),
        )
    raise SpecError(f"unknown clock kind {kind!r}")


# ---------------------------------------------------------------------------
# jumps


@dataclass(frozen=True)
class IndependentNIG:
    """Independent normal-inverse-Gaussian jumps in every coordinate.

    Parameters follow the usual (alpha, beta, delta, mu) convention: tail
    weight alpha > 0, asymmetry |beta| < alpha, scale delta > 0, location mu,
    all per unit of business time.
    """

    alpha: float
    beta: float
    delta: float
    mu: float = 0.0

    def __post_init__(self):
        _require(self.alpha > 0, "NIG alpha must be positive")
        _require(abs(self.beta) < self.alpha, "NIG requires |beta| < alpha")
        _require(self.delta > 0, "NIG delta must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": "nig",
            "alpha": self.alpha,
            "beta": self.beta,
            "delta": self.delta,
            "mu": self.mu,
        }


@dataclass(frozen=True)
class CompoundPoissonGaussian:
    """Compound Poisson jumps with standard normal sizes, independently in
    every coordinate, each with rate ``intensity`` per unit of business time."""

    intensity: float

    def __post_init__(self):
        _require(self.intensity > 0, "compound Poisson intensity must be positive")

    def to_dict(self) -> dict:
        return {"kind": "cpg", "intensity": self.intensity}


JumpSpec = Union[IndependentNIG, CompoundPoissonGaussian]


def jumps_from_dict(d: Optional[dict]) -> Optional[JumpSpec]:
    if d is None:
        return None
    kind = d.get("kind")
    if kind == "nig":
        return IndependentNIG(
            alpha=float(d["alpha"]),
            beta=float(d["beta"]),
            delta=float(d["delta"]),
            mu=float(d.get("mu", 0.0)),
        )
    if kind == "cpg":
        return CompoundPoissonGaussian(intensity=float(d["intensity"]))
    raise SpecError(f"unknown jump kind {kind!r}")


def jump_mass(jumps: Optional[JumpSpec], dim: int) -> float:
    """Total mass of the jump measure: 0 without jumps, d*intensity for the
    compound Poisson family, infinite for NIG (infinite activity)."""
    if jumps is None:
        return 0.0
    if isinstance(jumps, CompoundPoissonGaussian):
        return dim * jumps.intensity
    if isinstance(jumps, IndependentNIG):
        return float("inf")
    raise SpecError(f"unknown jump spec {jumps!r}")


# ---------------------------------------------------------------------------
# model + samples


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Full generative description of the observed increments.

    ``sigma`` must be symmetric PSD up to tiny numerical noise: asymmetry
    beyond 1e-12 or eigenvalues below -1e-10 are rejected, eigenvalues in
    (-1e-10, 0) are clipped to zero on construction.
    """

    dim: int
    sigma: np.ndarray
    drift: Optional[np.ndarray] = None
    jumps: Optional[JumpSpec] = None
    clock: ClockSpec = Deterministic(1.0)

    def __post_init__(self):
        d = int(self.dim)
        _require(d >= 1, "dim must be a positive integer")
        object.__setattr__(self, "dim", d)

        sigma = np.array(self.sigma, dtype=float)
        _require(sigma.shape == (d, d), f"sigma must be {d}x{d}, got {sigma.shape}")
        _require(np.all(np.isfinite(sigma)), "sigma must be finite")
        scale = max(1.0, float(np.max(np.abs(sigma))))
        _require(
            float(np.max(np.abs(sigma - sigma.T))) <= 1e-12 * scale,
            "sigma must be symmetric within 1e-12",
        )
        sigma = 0.5 * (sigma + sigma.T)
        evals, vecs = np.linalg.eigh(sigma)
        _require(float(evals.min()) >= -1e-10, "sigma must be PSD (eigenvalue < -1e-10)")
        if evals.min() < 0.0:
            sigma = (vecs * np.clip(evals, 0.0, None)) @ vecs.T
            sigma = 0.5 * (sigma + sigma.T)
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

        drift = np.zeros(d) if self.drift is None else np.array(self.drift, dtype=float)
        _require(drift.shape == (d,), f"drift must have length {d}")
        _require(np.all(np.isfinite(drift)), "drift must be finite")
        drift.setflags(write=False)
        object.__setattr__(self, "drift", drift)

        if self.jumps is not None:
            _require(isinstance(self.jumps, (IndependentNIG, CompoundPoissonGaussian)),
                     f"unknown jump spec {self.jumps!r}")
        _require(
            isinstance(self.clock, (Deterministic, Exponential, GammaSubordinator, IntegratedCIR)),
            f"unknown clock spec {self.clock!r}",
        )

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "sigma": [[float(x) for x in row] for row in self.sigma],
            "drift": [float(x) for x in self.drift],
            "jumps": None if self.jumps is None else self.jumps.to_dict(),
            "clock": self.clock.to_dict(),
        }

    def digest(self) -> str:
        """Short stable hash of the full generative description."""
        payload = {
            "dim": self.dim,
            "sigma": [[repr(float(x)) for x in row] for row in self.sigma],
            "drift": [repr(float(x)) for x in self.drift],
            "jumps": None if self.jumps is None else self.jumps.to_dict(),
            "clock": self.clock.to_dict(),
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Observed increments plus provenance.

    ``increments`` is (n, d); ``clock_increments`` optionally records the
    realized business-time increments T_j alongside.
    """

    increments: np.ndarray
    seed: int
    spec_digest: str
    clock_increments: Optional[np.ndarray] = None

    def __post_init__(self):
        y = np.array(self.increments, dtype=float)
        _require(y.ndim == 2 and y.shape[0] >= 1, "increments must be a nonempty (n, d) array")
        _require(bool(np.all(np.isfinite(y))), "increments must be finite")
        y.setflags(write=False)
        object.__setattr__(self, "increments", y)
        if self.clock_increments is not None:
            t = np.array(self.clock_increments, dtype=float)
            _require(t.shape == (y.shape[0],), "clock_increments must match the row count")
            _require(bool(np.all(np.isfinite(t))), "clock_increments must be finite")
            t.setflags(write=False)
            object.__setattr__(self, "clock_increments", t)

    @property
    def n(self) -> int:
        return self.increments.shape[0]

    @property
    def dim(self) -> int:
        return self.increments.shape[1]


# ---------------------------------------------------------------------------
# characteristic exponent


def _nig_exponent(p: IndependentNIG, u: np.ndarray) -> np.ndarray:
    # per-coordinate exponents summed over the last axis; principal square
    # roots (the radicand has positive real part, so no branch ambiguity)
    gamma0 = np.sqrt(p.alpha**2 - p.beta**2)
    root = np.sqrt(p.alpha**2 - (p.beta + 1j * u) ** 2)
    return np.sum(1j * u * p.mu + p.delta * (gamma0 - root), axis=-1)


def characteristic_exponent(spec: ModelSpec, u) -> Union[complex, np.ndarray]:
    """Log-characteristic function per unit of business time, evaluated at u.

    Accepts a single d-vector or an (..., d) stack of frequencies.
    """
    u = np.asarray(u, dtype=float)
    _require(u.shape[-1] == spec.dim, "frequency dimension mismatch")
    quad = np.einsum("...i,ij,...j->...", u, spec.sigma, u)
    val = -0.5 * quad + 1j * (u @ spec.drift)
    val = val.astype(complex)
    if isinstance(spec.jumps, IndependentNIG):
        val = val + _nig_exponent(spec.jumps, u)
    elif isinstance(spec.jumps, CompoundPoissonGaussian):
        val = val + spec.jumps.intensity * np.sum(np.exp(-0.5 * u**2) - 1.0, axis=-1)
    return complex(val) if u.ndim == 1 else val
