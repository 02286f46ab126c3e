"""Experiment orchestration: simulate -> estimate -> metrics -> tidy CSVs.

Everything here is deterministic given the config (master seed included):
per-run seeds come from SeedSequence substreams keyed by (n, replicate), so
execution order never changes the results.

CSV schemas consumed by the plotting scripts
--------------------------------------------
runs.csv            n, replicate, seed, lambda, U, rel_error, rank, alpha_hat, status
boxplot.csv         n, lambda, rel_error            (successful runs only)
ranks.csv           lambda, rank, count
lambda_curve.csv    lambda, variant, median_rel_error   (variant: plain | intercept)
intercept_runs.csv  lambda, replicate, variant, rel_error
laplace_error.csv   m, seed, sup_error
laplace_surface.csv re_w, im_w, error
"""
from __future__ import annotations

import json
import os
import time
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import serialize
from .estimator import SolverConfig, SolverFailure, build_design, solve
from .frequencies import FrequencyScheme, annulus_quadrature, monte_carlo_cube
from .laplace import (
    DomainError,
    InversionError,
    empirical_laplace_inverse,
    evaluate_series,
    laplace_family,
)
from .models import (
    ClockSpec,
    ModelSpec,
    SpecError,
    clock_from_dict,
    jumps_from_dict,
)
from .sim import sample_clock, sample_increments, stream
from .spectral import EmptySpectrumError, exponent_estimate


# ---------------------------------------------------------------------------
# randomized model ingredients


def random_orthogonal(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix (QR with sign-fixed R diagonal)."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    # without the sign fix the QR factorization is not Haar
    q = q * np.sign(np.diagonal(r))
    return q


def rotated_sigma(eigenvalues: Sequence[float], seed: int) -> np.ndarray:
    """O^T diag(eigenvalues) O for a seeded Haar orthogonal O."""
    lams = np.asarray(list(eigenvalues), dtype=float)
    o = random_orthogonal(lams.size, stream(seed))
    return o.T @ np.diag(lams) @ o


# ---------------------------------------------------------------------------
# tuning rules


@dataclass(frozen=True)
class LambdaRule:
    """Penalty schedule: "fixed" (one value), "scaled" (c/n) or "grid"."""

    kind: str
    values: Tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("fixed", "scaled", "grid"):
            raise ValueError(f"unknown lambda rule {self.kind!r}")
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ValueError("lambda rule needs at least one value")
        if self.kind in ("fixed", "scaled") and len(vals) != 1:
            raise ValueError(f"{self.kind} lambda rule takes exactly one value")
        if any(not np.isfinite(v) or v < 0 for v in vals):
            raise ValueError("lambda values must be finite and nonnegative")

    def lambdas(self, n: int) -> Tuple[float, ...]:
        if self.kind == "fixed":
            return (self.values[0],)
        if self.kind == "scaled":
            return (self.values[0] / n,)
        return self.values

    def to_dict(self) -> dict:
        return {"kind": self.kind, "values": list(self.values)}


@dataclass(frozen=True)
class URule:
    """Spectral cut-off schedule: scale * n**exponent, or a fixed value."""

    kind: str = "rule-of-thumb"
    scale: float = 0.7
    exponent: float = 0.25
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("rule-of-thumb", "fixed"):
            raise ValueError(f"unknown U rule {self.kind!r}")
        if self.kind == "fixed" and not self.value > 0:
            raise ValueError("fixed U rule needs value > 0")
        if self.kind == "rule-of-thumb" and (not self.scale > 0 or self.exponent < 0):
            raise ValueError("rule-of-thumb needs scale > 0 and exponent >= 0")

    def cutoff(self, n: int) -> float:
        if self.kind == "fixed":
            return self.value
        return self.scale * float(n) ** self.exponent

    def to_dict(self) -> dict:
        if self.kind == "fixed":
            return {"kind": "fixed", "value": self.value}
        return {"kind": "rule-of-thumb", "scale": self.scale, "exponent": self.exponent}


# ---------------------------------------------------------------------------
# experiment config and records


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    n_grid: Tuple[int, ...]
    lambda_rule: LambdaRule
    u_rule: URule
    replicates: int = 20
    master_seed: int = 0
    freq_count: int = 70
    freq_mode: str = "mc-cube"
    output_dir: Optional[str] = None

    def __post_init__(self):
        grid = tuple(int(n) for n in self.n_grid)
        object.__setattr__(self, "n_grid", grid)
        if not grid or any(n < 2 for n in grid):
            raise ValueError("n_grid must be a nonempty list of sample sizes >= 2")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.freq_count < 1:
            raise ValueError("freq_count must be >= 1")
        if self.freq_mode not in ("mc-cube", "annulus"):
            raise ValueError(f"unknown freq_mode {self.freq_mode!r}")

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "n_grid": list(self.n_grid),
            "lambda_rule": self.lambda_rule.to_dict(),
            "u_rule": self.u_rule.to_dict(),
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "freq_count": self.freq_count,
            "freq_mode": self.freq_mode,
            "output_dir": self.output_dir,
        }


@dataclass(frozen=True)
class RunRecord:
    """One (n, replicate, lambda) result.  wall_time is informational and is
    deliberately kept out of runs.csv so the file is bitwise reproducible."""

    n: int
    replicate: int
    seed: int
    lam: float
    cutoff: float
    rel_error: Optional[float]
    rank: Optional[int]
    alpha_hat: Optional[float]
    wall_time: float
    status: str = "ok"


def replicate_seed(master_seed: int, n: int, replicate: int) -> int:
    """Per-run seed from a SeedSequence substream keyed by (n, replicate)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(n, replicate))
    return int(ss.generate_state(1, np.uint64)[0])


def _scheme_for(cfg: ExperimentConfig, n: int, seed: int) -> FrequencyScheme:
    cutoff = cfg.u_rule.cutoff(n)
    if cfg.freq_mode == "annulus":
        return annulus_quadrature(cfg.model.dim, cutoff)
    # fresh Monte Carlo frequencies per replicate, on a substream the
    # simulator does not touch
    return monte_carlo_cube(cfg.model.dim, cutoff, cfg.freq_count, stream(seed, 3))


def _rel_error_psd(sigma_psd: np.ndarray, sigma_true: np.ndarray) -> float:
    # relative Frobenius error of the projected estimate
    return float(np.linalg.norm(sigma_psd - sigma_true) / np.linalg.norm(sigma_true))


def run_experiment(cfg: ExperimentConfig, _order: Optional[Sequence[int]] = None) -> List[RunRecord]:
    """Run the full (n x replicate x lambda) sweep.

    Per replicate: simulate, estimate the exponent, then solve once per
    penalty value; rel_error is the relative Frobenius error of the
    PSD-projected estimate.  Failures (masked-out spectrum, diverging solver,
    ...) are recorded in the status column and do not abort the sweep.

    ``_order`` permutes job execution (indices into the (n, replicate)
    job list) and exists for the order-independence tests.

    Returns records sorted by (n, replicate, lambda); when the config names
    an output_dir, writes runs.csv plus a config echo with the model digest.
    """
    jobs = [(n, rep) for n in cfg.n_grid for rep in range(cfg.replicates)]
    if _order is not None:
        if sorted(_order) != list(range(len(jobs))):
            raise ValueError("_order must be a permutation of the job indices")
        jobs = [jobs[i] for i in _order]

    sigma_true = cfg.model.sigma
    records: List[RunRecord] = []
    for n, rep in jobs:
        seed = replicate_seed(cfg.master_seed, n, rep)
        cutoff = cfg.u_rule.cutoff(n)
        lams = cfg.lambda_rule.lambdas(n)
        tick = time.perf_counter()
        try:
            sample = sample_increments(cfg.model, n, seed)
            scheme = _scheme_for(cfg, n, seed)
            family = laplace_family(cfg.model.clock)
            est = exponent_estimate(sample, family, scheme.freqs)
            rows = build_design(est, scheme)
        except (EmptySpectrumError, InversionError, ValueError) as exc:
            # whole replicate unusable; one failure record per lambda
            for lam in lams:
                records.append(
                    RunRecord(
                        n=n, replicate=rep, seed=seed, lam=lam, cutoff=cutoff,
                        rel_error=None, rank=None, alpha_hat=None,
                        wall_time=time.perf_counter() - tick,
                        status=f"failed:{type(exc).__name__}",
                    )
                )
                tick = time.perf_counter()
            continue
        for lam in lams:
            try:
                report = solve(rows, SolverConfig(lam=lam, cutoff=cutoff))
                rec = RunRecord(
                    n=n, replicate=rep, seed=seed, lam=lam, cutoff=cutoff,
                    rel_error=_rel_error_psd(report.sigma_psd, sigma_true),
                    rank=report.rank, alpha_hat=report.alpha_hat,
                    wall_time=time.perf_counter() - tick, status="ok",
                )
            except SolverFailure:
                rec = RunRecord(
                    n=n, replicate=rep, seed=seed, lam=lam, cutoff=cutoff,
                    rel_error=None, rank=None, alpha_hat=None,
                    wall_time=time.perf_counter() - tick, status="failed:SolverFailure",
                )
            records.append(rec)
            tick = time.perf_counter()

    records.sort(key=lambda r: (r.n, r.replicate, r.lam))
    if cfg.output_dir is not None:
        os.makedirs(cfg.output_dir, exist_ok=True)
        serialize.write_runs_csv(records, os.path.join(cfg.output_dir, "runs.csv"))
        echo = {"config": cfg.to_dict(), "model_digest": cfg.model.digest()}
        with open(os.path.join(cfg.output_dir, "config.json"), "w", encoding="utf-8") as fh:
            json.dump(echo, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return records


def figures_export(records: Sequence[RunRecord], out_dir) -> None:
    """Tidy CSVs for the plotting scripts: boxplot.csv and ranks.csv.

    Only successful runs are exported.  Raises on an empty record list
    before touching the filesystem.
    """
    records = list(records)
    if not records:
        raise ValueError("no run records to export")
    ok = [r for r in records if r.status == "ok" and r.rel_error is not None]
    os.makedirs(out_dir, exist_ok=True)
    box = sorted(ok, key=lambda r: (r.n, r.lam, r.replicate))
    serialize.write_tidy_csv(
        os.path.join(out_dir, "boxplot.csv"),
        ["n", "lambda", "rel_error"],
        [(r.n, r.lam, r.rel_error) for r in box],
    )
    counts = Counter((r.lam, r.rank) for r in ok)
    serialize.write_tidy_csv(
        os.path.join(out_dir, "ranks.csv"),
        ["lambda", "rank", "count"],
        [(lam, rank, cnt) for (lam, rank), cnt in sorted(counts.items())],
    )


# ---------------------------------------------------------------------------
# focused studies (intercept benefit, empirical Laplace inversion)


def intercept_study(
    model: ModelSpec,
    n: int,
    lambdas: Sequence[float],
    replicates: int = 20,
    master_seed: int = 0,
    freq_count: int = 70,
    u_rule: Optional[URule] = None,
    out_dir=None,
) -> Dict[Tuple[float, str], float]:
    """Compare the plain estimator with the jump-intercept variant on a
    shared sample, per penalty value.

    Returns median rel_errors keyed by (lambda, variant); writes
    intercept_runs.csv (raw) and lambda_curve.csv (medians) when out_dir
    is given.
    """
    if u_rule is None:
        u_rule = URule()
    cutoff = u_rule.cutoff(n)
    raw: List[Tuple[float, int, str, float]] = []
    for rep in range(replicates):
        seed = replicate_seed(master_seed, n, rep)
        sample = sample_increments(model, n, seed)
        scheme = monte_carlo_cube(model.dim, cutoff, freq_count, stream(seed, 3))
        est = exponent_estimate(sample, laplace_family(model.clock), scheme.freqs)
        for variant, flag in (("plain", False), ("intercept", True)):
            rows = build_design(est, scheme, intercept=flag)
            for lam in lambdas:
                try:
                    report = solve(rows, SolverConfig(lam=lam, cutoff=cutoff, intercept=flag))
                except SolverFailure:
                    continue
                raw.append(
                    (float(lam), rep, variant, _rel_error_psd(report.sigma_psd, model.sigma))
                )
    medians: Dict[Tuple[float, str], float] = {}
    for lam in lambdas:
        for variant in ("plain", "intercept"):
            errs = [e for (l, _, v, e) in raw if l == float(lam) and v == variant]
            if errs:
                medians[(float(lam), variant)] = float(np.median(errs))
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        serialize.write_tidy_csv(
            os.path.join(out_dir, "intercept_runs.csv"),
            ["lambda", "replicate", "variant", "rel_error"],
            sorted(raw),
        )
        serialize.write_tidy_csv(
            os.path.join(out_dir, "lambda_curve.csv"),
            ["lambda", "variant", "median_rel_error"],
            [(lam, v, m) for (lam, v), m in sorted(medians.items())],
        )
    return medians


def _disk_grid(radius: float, rings: int = 6, spokes: int = 12) -> np.ndarray:
    """Polar grid on {|w - 1| <= radius}, center excluded (error is 0 there)."""
    rho = np.linspace(radius / rings, radius, rings)
    phi = np.linspace(0.0, 2.0 * np.pi, spokes, endpoint=False)
    return (1.0 + rho[:, None] * np.exp(1j * phi)[None, :]).ravel()


def laplace_study(
    clock: ClockSpec,
    sample_sizes: Sequence[int] = (50, 200, 1000),
    order: int = 20,
    seeds: int = 50,
    radius: float = 0.3,
    master_seed: int = 0,
    out_dir=None,
) -> Dict[int, float]:
    """Sup-error of the series inverse against the exact one on a disk
    around w = 1, across clock-sample sizes.

    Returns {m: median sup-error over seeds}; writes laplace_error.csv and
    (for the largest m) laplace_surface.csv when out_dir is given.
    """
    family = laplace_family(clock)
    grid = _disk_grid(radius)
    truth = np.array([complex(family.inverse(w)) for w in grid])
    sup: Dict[int, List[float]] = {int(m): [] for m in sample_sizes}
    surface_m = max(int(m) for m in sample_sizes)
    surface_errs: List[np.ndarray] = []
    for m in sorted(sup):
        for i in range(seeds):
            tsample = sample_clock(clock, m, stream(master_seed, m, i))
            try:
                inv = empirical_laplace_inverse(tsample, order)
                errs = np.array(
                    [abs(evaluate_series(inv, w) - t) for w, t in zip(grid, truth)]
                )
            except (DomainError, SpecError):
                errs = np.full(grid.shape, np.inf)
            sup[m].append(float(errs.max()))
            if m == surface_m:
                surface_errs.append(errs)
    medians = {m: float(np.median(v)) for m, v in sup.items()}
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        serialize.write_tidy_csv(
            os.path.join(out_dir, "laplace_error.csv"),
            ["m", "seed", "sup_error"],
            [(m, i, e) for m in sorted(sup) for i, e in enumerate(sup[m])],
        )
        med_surface = np.median(np.vstack(surface_errs), axis=0)
        serialize.write_tidy_csv(
            os.path.join(out_dir, "laplace_surface.csv"),
            ["re_w", "im_w", "error"],
            [(float(w.real), float(w.imag), float(e)) for w, e in zip(grid, med_surface)],
        )
    return medians


# ---------------------------------------------------------------------------
# config files


def model_from_dict(d: dict) -> ModelSpec:
    """Build a ModelSpec from a JSON-style dict.

    "sigma" is either a dense nested list or a dict:
      {"kind": "rotated", "eigenvalues": [...], "seed": s}   O^T diag O
      {"kind": "diagonal", "eigenvalues": [...]}
      {"kind": "dense", "values": [[...], ...]}
    Eigenvalue lists shorter than dim are padded with zeros.
    """
    dim = int(d["dim"])

    def padded(vals):
        lams = [float(v) for v in vals]
        if len(lams) > dim:
            raise SpecError("more eigenvalues than dimensions")
        return lams + [0.0] * (dim - len(lams))

    sig = d["sigma"]
    if isinstance(sig, dict):
        kind = sig.get("kind", "rotated")
        if kind == "rotated":
            sigma = rotated_sigma(padded(sig["eigenvalues"]), int(sig.get("seed", 0)))
        elif kind == "diagonal":
            sigma = np.diag(padded(sig["eigenvalues"]))
        elif kind == "dense":
            sigma = np.asarray(sig["values"], dtype=float)
        else:
            raise SpecError(f"unknown sigma kind {kind!r}")
    else:
        sigma = np.asarray(sig, dtype=float)
    drift = d.get("drift")
    if drift is not None:
        drift = np.asarray(drift, dtype=float)
    clock = clock_from_dict(d["clock"]) if d.get("clock") is not None else None
    kwargs = {"dim": dim, "sigma": sigma, "drift": drift, "jumps": jumps_from_dict(d.get("jumps"))}
    if clock is not None:
        kwargs["clock"] = clock
    return ModelSpec(**kwargs)


def config_from_dict(d: dict) -> ExperimentConfig:
    lr = d.get("lambda_rule", {"kind": "fixed", "values": [0.0]})
    ur = d.get("u_rule", {"kind": "rule-of-thumb"})
    if ur.get("kind") == "fixed":
        u_rule = URule(kind="fixed", value=float(ur["value"]))
    else:
        u_rule = URule(
            kind="rule-of-thumb",
            scale=float(ur.get("scale", 0.7)),
            exponent=float(ur.get("exponent", 0.25)),
        )
    return ExperimentConfig(
        model=model_from_dict(d["model"]),
        n_grid=tuple(int(n) for n in d["n_grid"]),
        lambda_rule=LambdaRule(kind=lr.get("kind", "fixed"), values=tuple(lr["values"])),
        u_rule=u_rule,
        replicates=int(d.get("replicates", 20)),
        master_seed=int(d.get("master_seed", 0)),
        freq_count=int(d.get("freq_count", 70)),
        freq_mode=d.get("freq_mode", "mc-cube"),
        output_dir=d.get("output_dir"),
    )
