"""CSV and binary round-trips for samples, spectra, reports and run logs.

All CSVs use headers, UTF-8 and '.' decimals; floats are written with
repr so identical values serialize to identical bytes.
"""
from __future__ import annotations

import csv
import json
from typing import List, Optional

import numpy as np

from .models import SampleSet


def fmt(x) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# samples


def write_sample_csv(sample: SampleSet, path) -> None:
    d = sample.dim
    cols = [f"y{i + 1}" for i in range(d)]
    with_clock = sample.clock_increments is not None
    if with_clock:
        cols.append("t")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(cols)
        for i in range(sample.n):
            row = [fmt(v) for v in sample.increments[i]]
            if with_clock:
                row.append(fmt(sample.clock_increments[i]))
            out.writerow(row)


def read_sample_csv(path) -> SampleSet:
    """Rebuild a SampleSet from CSV.  Provenance is not carried by the CSV
    format, so seed/digest come back empty."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    with_clock = header[-1] == "t"
    d = len(header) - (1 if with_clock else 0)
    data = np.array([[float(v) for v in row] for row in body])
    y = data[:, :d]
    t = data[:, d] if with_clock else None
    return SampleSet(increments=y, seed=0, spec_digest="", clock_increments=t)


def write_sample_cache(sample: SampleSet, path) -> None:
    """Binary cache: one JSON header line, then raw arrays."""
    head = {
        "digest": sample.spec_digest,
        "seed": sample.seed,
        "n": sample.n,
        "dim": sample.dim,
        "clock": sample.clock_increments is not None,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(head, sort_keys=True).encode("utf-8") + b"\n")
        np.lib.format.write_array(fh, sample.increments, version=(1, 0))
        if sample.clock_increments is not None:
            np.lib.format.write_array(fh, sample.clock_increments, version=(1, 0))


def read_sample_cache(path) -> SampleSet:
    with open(path, "rb") as fh:
        head = json.loads(fh.readline().decode("utf-8"))
        y = np.lib.format.read_array(fh)
        t = np.lib.format.read_array(fh) if head.get("clock") else None
    return SampleSet(
        increments=y, seed=int(head["seed"]), spec_digest=head["digest"], clock_increments=t
    )


# ---------------------------------------------------------------------------
# spectra


def write_exponent_csv(est, path) -> None:
    d = est.freqs.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow([f"u{i + 1}" for i in range(d)] + ["re_psi", "im_psi", "masked"])
        for u, val, masked in zip(est.freqs, est.values, est.guard_mask):
            out.writerow(
                [fmt(x) for x in u]
                + [fmt(val.real), fmt(val.imag), "1" if masked else "0"]
            )


def write_series_csv(inv, path) -> None:
    """Empirical inverse: k, moment M_k, coefficient H_k (blank past the order)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(["k", "moment", "coefficient"])
        for k in range(1, inv.order + 2):
            coeff = fmt(inv.coefficients[k - 1]) if k <= inv.order else ""
            out.writerow([k, fmt(inv.moments[k - 1]), coeff])


# ---------------------------------------------------------------------------
# reports


def write_report_csv(report, path, n: Optional[int] = None, seed: Optional[int] = None) -> None:
    d = report.sigma_hat.shape[0]
    cols = [f"sigma_{i + 1}_{j + 1}" for i in range(d) for j in range(d)]
    cols += ["alpha_hat", "rank", "rel_error", "lambda", "U", "n", "seed"]
    vals = [fmt(v) for v in report.sigma_hat.ravel()]
    vals += [
        "" if report.alpha_hat is None else fmt(report.alpha_hat),
        str(report.rank),
        "" if report.rel_error is None else fmt(report.rel_error),
        fmt(report.lam),
        fmt(report.cutoff),
        "" if n is None else str(n),
        "" if seed is None else str(seed),
    ]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(cols)
        out.writerow(vals)


def report_summary(report) -> str:
    evals = np.linalg.eigvalsh(report.sigma_psd)[::-1]
    lines = [
        f"dim           : {report.sigma_hat.shape[0]}",
        f"lambda        : {report.lam:g}",
        f"cutoff U      : {report.cutoff:g}",
        f"rank (psd)    : {report.rank}",
        f"alpha_hat     : {'-' if report.alpha_hat is None else f'{report.alpha_hat:.6g}'}",
        f"rel_error     : {'-' if report.rel_error is None else f'{report.rel_error:.6g}'}",
        f"converged     : {report.converged} ({len(report.objective_trace)} objective values)",
        f"psd eigenvalues: {np.array2string(evals, precision=4, suppress_small=True)}",
    ]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# run logs


RUNS_HEADER = ["n", "replicate", "seed", "lambda", "U", "rel_error", "rank", "alpha_hat", "status"]


def write_runs_csv(records, path) -> None:
    records = sorted(records, key=lambda r: (r.n, r.replicate, r.lam))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(RUNS_HEADER)
        for r in records:
            out.writerow(
                [
                    str(r.n),
                    str(r.replicate),
                    str(r.seed),
                    fmt(r.lam),
                    fmt(r.cutoff),
                    "" if r.rel_error is None else fmt(r.rel_error),
                    "" if r.rank is None else str(r.rank),
                    "" if r.alpha_hat is None else fmt(r.alpha_hat),
                    r.status,
                ]
            )


def read_runs_csv(path) -> list:
    from .harness import RunRecord  # deferred: serialize must not pull numpy-heavy deps at import

    out: List[RunRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != RUNS_HEADER:
        raise ValueError(f"unexpected runs.csv header in {path}")
    for row in rows[1:]:
        out.append(
            RunRecord(
                n=int(row[0]),
                replicate=int(row[1]),
                seed=int(row[2]),
                lam=float(row[3]),
                cutoff=float(row[4]),
                rel_error=None if row[5] == "" else float(row[5]),
                rank=None if row[6] == "" else int(row[6]),
                alpha_hat=None if row[7] == "" else float(row[7]),
                wall_time=float("nan"),
                status=row[8],
            )
        )
    return out


def write_tidy_csv(path, header, rows) -> None:
    """Generic tidy table writer; floats formatted with repr."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh)
        out.writerow(header)
        for row in rows:
            out.writerow([fmt(v) if isinstance(v, float) else str(v) for v in row])
