"""Timing harness: compiled-network inference against sequential scan.

Correct before fast: every method runs over the identical input set and
timings are only reported if all outputs agree within a tolerance. The
naive baseline is the same containment kernel used everywhere else, not a
strawman. Worst-case inputs target the last-indexed region, where the
sequential scan pays for every region while network cost is
index-independent. Timing loops are single threaded on a monotonic clock
with a fixed warm-up, no auto-tuning.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import lp
from .bigm import compute_big_m_exact
from .compiler import Network, assemble_yann
from .inference import (Precision, forward_batch, forward_dense,
                        forward_structured)
from .pwa import PwaFunction, evaluate_naive

METHODS = ("naive", "dense", "structured", "batch")
GATE_TOL = 1e-6
_WARMUP_POINTS = 32


class OutputMismatchError(RuntimeError):
    """Cross-method outputs disagreed; no timings were produced."""


@dataclass
class MethodStats:
    mean_us: float
    p50_us: float
    p99_us: float
    total_s: float
    n_points: int

    def to_dict(self) -> dict:
        return {"mean_us": self.mean_us, "p50_us": self.p50_us,
                "p99_us": self.p99_us, "total_s": self.total_s,
                "n_points": self.n_points}


@dataclass
class BenchReport:
    n: int
    m: int
    p: int
    q: int
    precision: str
    seed: int
    groups: dict[str, dict[str, MethodStats]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"problem": {"n": self.n, "m": self.m, "p": self.p,
                            "q": self.q},
                "precision": self.precision, "seed": self.seed,
                "groups": {g: {m: s.to_dict() for m, s in methods.items()}
                           for g, methods in self.groups.items()}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lines = [f"problem n={self.n} m={self.m} p={self.p} q={self.q} "
                 f"precision={self.precision}"]
        header = (f"{'group':<12}{'method':<12}{'mean us':>12}"
                  f"{'p50 us':>12}{'p99 us':>12}{'total s':>12}")
        lines.append(header)
        lines.append("-" * len(header))
        for group, methods in self.groups.items():
            for method, s in methods.items():
                lines.append(f"{group:<12}{method:<12}{s.mean_us:>12.2f}"
                             f"{s.p50_us:>12.2f}{s.p99_us:>12.2f}"
                             f"{s.total_s:>12.4f}")
        return "\n".join(lines)


def sample_points(f: PwaFunction, count: int, rng) -> np.ndarray:
    if f.domain_box is None:
        raise ValueError("sampling needs a domain_box on the function")
    lo, hi = f.domain_box
    return rng.uniform(lo, hi, size=(count, f.n))


def worst_case_points(f: PwaFunction, count: int, rng) -> np.ndarray:
    """Points strictly inside the last region: jitter within half the
    radius of its largest inscribed ball."""
    centered = lp.chebyshev_center(f.regions[-1].halfspaces)
    if centered is None:
        raise ValueError("last region is empty; no worst-case set exists")
    center, radius = centered
    direction = rng.standard_normal((count, f.n))
    norms = np.linalg.norm(direction, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    scale = rng.uniform(0.0, 0.5 * radius, size=(count, 1))
    return center + direction / norms * scale


def _outputs_for(method: str, f: PwaFunction, net: Network,
                 points: np.ndarray, prec: Precision) -> np.ndarray:
    if method == "naive":
        return np.array([evaluate_naive(f, x).output for x in points])
    if method == "dense":
        return np.array([np.asarray(forward_dense(net, x, prec).output,
                                    dtype=float) for x in points])
    if method == "structured":
        return np.array([np.asarray(forward_structured(net, x, prec).output,
                                    dtype=float) for x in points])
    if method == "batch":
        return np.asarray(forward_batch(net, points, prec), dtype=float)
    raise ValueError(f"unknown method {method!r}")


def _equality_gate(outputs: dict[str, np.ndarray], tol: float) -> None:
    names = list(outputs)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            diff = np.abs(outputs[a] - outputs[b])
            worst = float(diff.max())
            if worst > tol:
                idx = int(np.unravel_index(diff.argmax(), diff.shape)[0])
                raise OutputMismatchError(
                    f"{a} and {b} disagree by {worst:.3e} at point {idx} "
                    f"(tolerance {tol:.1e}); refusing to time")


def _time_method(method: str, f: PwaFunction, net: Network,
                 points: np.ndarray, prec: Precision) -> MethodStats:
    n_pts = points.shape[0]
    warm = points[:min(_WARMUP_POINTS, n_pts)]
    _outputs_for(method, f, net, warm, prec)
    if method == "batch":
        t0 = time.perf_counter_ns()
        forward_batch(net, points, prec)
        total = (time.perf_counter_ns() - t0) * 1e-9
        per = total / n_pts * 1e6
        return MethodStats(per, per, per, total, n_pts)

    if method == "naive":
        call = lambda x: evaluate_naive(f, x)
    elif method == "dense":
        call = lambda x: forward_dense(net, x, prec)
    else:
        call = lambda x: forward_structured(net, x, prec)
    samples = np.empty(n_pts)
    t_start = time.perf_counter_ns()
    for i in range(n_pts):
        t0 = time.perf_counter_ns()
        call(points[i])
        samples[i] = time.perf_counter_ns() - t0
    total = (time.perf_counter_ns() - t_start) * 1e-9
    return MethodStats(float(samples.mean()) * 1e-3,
                       float(np.percentile(samples, 50)) * 1e-3,
                       float(np.percentile(samples, 99)) * 1e-3,
                       total, n_pts)


def run_bench(f: PwaFunction, n_points: int = 1000,
              methods=METHODS, prec: Precision = Precision.FP64,
              seed: int = 0, worst_case_count: int = 0,
              net: Network | None = None,
              gate_tol: float = GATE_TOL) -> BenchReport:
    """Cross-checked timings over shared inputs.

    Samples ``n_points`` in-domain inputs, optionally plus a worst-case set
    inside the last region. All requested methods are evaluated on every
    point and must agree within ``gate_tol`` before any timing runs.
    """
    if n_points < 1000:
        raise ValueError("need at least 1000 points for a meaningful report")
    methods = tuple(methods)
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"unknown method {method!r}")
    if net is None:
        net = assemble_yann(f, compute_big_m_exact(f))
    rng = np.random.default_rng([seed, 0x5eed])
    groups = {"random": sample_points(f, n_points, rng)}
    if worst_case_count > 0:
        groups["worst_case"] = worst_case_points(f, worst_case_count, rng)

    report = BenchReport(f.n, f.m, f.p, f.q, prec.value, seed)
    for group, points in groups.items():
        outputs = {m: _outputs_for(m, f, net, points, prec) for m in methods}
        _equality_gate(outputs, gate_tol)
        report.groups[group] = {
            m: _time_method(m, f, net, points, prec) for m in methods}
    return report
