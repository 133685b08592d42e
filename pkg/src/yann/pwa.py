"""Piecewise-affine functions over half-space partitions.

A function is a list of regions, each an intersection of half-spaces
``a . x <= b`` paired with one affine map ``gain @ x + offset``. Region
order is load order and is semantically significant: evaluation returns
the first region containing the query point, which is how boundary ties
between adjacent regions are resolved.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


def seq_matvec(W: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix-vector product accumulated column by column, left to right.

    Each output row is the plain sequential sum ``((w0*x0 + w1*x1) + ...)``
    and is independent of which other rows are present. Every code path
    that decides region membership (naive evaluation, the reference
    forward pass, the structured fast path) must share this kernel so
    that boundary comparisons produce identical booleans; a BLAS matvec
    may reassociate the sum and flip a comparison by one ulp.
    """
    y = W[:, 0] * x[0]
    for j in range(1, W.shape[1]):
        y = y + W[:, j] * x[j]
    return y


@dataclass
class Halfspace:
    """One linear inequality ``coeffs . x <= offset``."""

    coeffs: np.ndarray
    offset: float

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        self.offset = float(self.offset)
        if self.coeffs.ndim != 1:
            raise ValueError("halfspace coefficients must be a vector")
        if not np.any(self.coeffs != 0.0):
            raise ValueError("degenerate all-zero halfspace row")
        if not np.all(np.isfinite(self.coeffs)) or not np.isfinite(self.offset):
            raise ValueError("non-finite halfspace data")

    @property
    def dim(self) -> int:
        return self.coeffs.shape[0]


@dataclass
class Region:
    """Polytope (list of half-spaces) plus the affine map active on it."""

    halfspaces: list[Halfspace]
    gain: np.ndarray
    offset: np.ndarray
    # stacked copies of the half-space system, built once for fast containment
    A: np.ndarray = field(init=False, repr=False)
    b: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.halfspaces) < 1:
            raise ValueError("region needs at least one halfspace")
        self.gain = np.atleast_2d(np.asarray(self.gain, dtype=float))
        self.offset = np.atleast_1d(np.asarray(self.offset, dtype=float))
        n = self.halfspaces[0].dim
        if any(h.dim != n for h in self.halfspaces):
            raise ValueError("halfspace dimensions disagree within region")
        if self.gain.shape[1] != n:
            raise ValueError(
                f"gain has {self.gain.shape[1]} columns, expected {n}")
        if self.offset.shape[0] != self.gain.shape[0]:
            raise ValueError("offset length does not match gain rows")
        self.A = np.array([h.coeffs for h in self.halfspaces], dtype=float)
        self.b = np.array([h.offset for h in self.halfspaces], dtype=float)

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.gain.shape[0]

    @property
    def q(self) -> int:
        return self.A.shape[0]

    def map(self, x: np.ndarray) -> np.ndarray:
        """Evaluate this region's affine map (no containment check)."""
        return seq_matvec(self.gain, x) + self.offset


@dataclass
class PwaFunction:
    """Piecewise-affine function on an ordered list of polytopic regions."""

    n: int
    m: int
    regions: list[Region]
    domain_box: tuple[np.ndarray, np.ndarray] | None = None
    feature_names: list[str] | None = None

    def __post_init__(self):
        if len(self.regions) < 1:
            raise ValueError("need at least one region")
        for k, r in enumerate(self.regions):
            if r.n != self.n:
                raise ValueError(f"region {k}: input dim {r.n} != {self.n}")
            if r.m != self.m:
                raise ValueError(f"region {k}: output dim {r.m} != {self.m}")
        if self.domain_box is not None:
            lo = np.atleast_1d(np.asarray(self.domain_box[0], dtype=float))
            hi = np.atleast_1d(np.asarray(self.domain_box[1], dtype=float))
            if lo.shape != (self.n,) or hi.shape != (self.n,):
                raise ValueError("domain box dimension mismatch")
            if not np.all(lo < hi):
                raise ValueError("domain box must satisfy lo < hi elementwise")
            self.domain_box = (lo, hi)

    @property
    def p(self) -> int:
        return len(self.regions)

    @property
    def q(self) -> int:
        return sum(r.q for r in self.regions)


@dataclass
class EvalResult:
    """Output vector plus the index of the region that produced it.

    ``region_index`` is None when no region contains the input; the output
    is then the zero vector, mirroring the all-gates-closed behaviour of
    the compiled network.
    """

    output: np.ndarray
    region_index: int | None


class OutsideDomainError(ValueError):
    """Raised in strict mode when a query point lies in no region."""


def contains(region: Region, x: np.ndarray, eps: float = 0.0) -> bool:
    """True iff every halfspace of ``region`` holds at ``x`` (inclusive <=).

    The comparison is exact by default; ``eps`` loosens it for noisy user
    data and must stay 0 whenever parity with a compiled network matters.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (region.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({region.n},)")
    s = seq_matvec(region.A, x)
    if eps == 0.0:
        return bool(np.all(s <= region.b))
    return bool(np.all(s <= region.b + eps))


def evaluate_naive(f: PwaFunction, x: np.ndarray, eps: float = 0.0,
                   strict: bool = False) -> EvalResult:
    """Sequential point location: first region in load order wins.

    Outside every region the result is the zero vector with no index
    (strict=True raises instead, for deployment contexts where silent
    fallback is unacceptable).
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (f.n,):
        raise ValueError(f"point has shape {x.shape}, expected ({f.n},)")
    for k, region in enumerate(f.regions):
        if contains(region, x, eps=eps):
            return EvalResult(region.map(x), k)
    if strict:
        raise OutsideDomainError(f"point {x!r} lies in no region")
    return EvalResult(np.zeros(f.m), None)


def box_halfspaces(lo, hi) -> list[Halfspace]:
    """Axis-aligned box as 2n half-spaces: x_i <= hi_i and -x_i <= -lo_i."""
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    if lo.shape != hi.shape or not np.all(lo < hi):
        raise ValueError("box must satisfy lo < hi elementwise")
    n = lo.shape[0]
    rows = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        rows.append(Halfspace(e.copy(), hi[i]))
        rows.append(Halfspace(-e, -lo[i]))
    return rows


# ---------------------------------------------------------------------------
# JSON interchange
#
# { "n": 2, "m": 1,
#   "regions": [ {"A": [[...]], "b": [...], "K": [[...]], "r": [...],
#                 "A_eq": [[...]], "b_eq": [...]  // optional equality rows
#                }, ... ],
#   "domain_box": {"lo": [...], "hi": [...]},      // optional
#   "features": ["x^2", ...] }                     // optional metadata
#
# Equality rows expand at load into the pair a.x <= b, -a.x <= -b
# (appended after the plain inequality rows, positive form first).
# ---------------------------------------------------------------------------

def _region_from_dict(obj: dict, n: int) -> Region:
    rows: list[Halfspace] = []
    A = obj.get("A", [])
    b = obj.get("b", [])
    if len(A) != len(b):
        raise ValueError("region A and b row counts disagree")
    for a_row, b_val in zip(A, b):
        rows.append(Halfspace(np.asarray(a_row, dtype=float), float(b_val)))
    A_eq = obj.get("A_eq", [])
    b_eq = obj.get("b_eq", [])
    if len(A_eq) != len(b_eq):
        raise ValueError("region A_eq and b_eq row counts disagree")
    for a_row, b_val in zip(A_eq, b_eq):
        a = np.asarray(a_row, dtype=float)
        rows.append(Halfspace(a.copy(), float(b_val)))
        rows.append(Halfspace(-a, -float(b_val)))
    if not rows:
        raise ValueError("region has no constraint rows")
    for h in rows:
        if h.dim != n:
            raise ValueError("constraint row dimension mismatch")
    return Region(rows, np.asarray(obj["K"], dtype=float),
                  np.asarray(obj["r"], dtype=float))


def pwa_from_dict(obj: dict) -> PwaFunction:
    n = int(obj["n"])
    m = int(obj["m"])
    regions = [_region_from_dict(r, n) for r in obj["regions"]]
    box = None
    if obj.get("domain_box") is not None:
        box = (np.asarray(obj["domain_box"]["lo"], dtype=float),
               np.asarray(obj["domain_box"]["hi"], dtype=float))
    features = obj.get("features")
    return PwaFunction(n, m, regions, domain_box=box,
                       feature_names=list(features) if features else None)


def pwa_to_dict(f: PwaFunction) -> dict:
    obj = {
        "n": f.n,
        "m": f.m,
        "regions": [
            {"A": r.A.tolist(), "b": r.b.tolist(),
             "K": r.gain.tolist(), "r": r.offset.tolist()}
            for r in f.regions
        ],
    }
    if f.domain_box is not None:
        obj["domain_box"] = {"lo": f.domain_box[0].tolist(),
                             "hi": f.domain_box[1].tolist()}
    if f.feature_names:
        obj["features"] = list(f.feature_names)
    return obj


def load_pwa(path) -> PwaFunction:
    with open(path) as fh:
        return pwa_from_dict(json.load(fh))


def save_pwa(f: PwaFunction, path) -> None:
    with open(path, "w") as fh:
        json.dump(pwa_to_dict(f), fh)
        fh.write("\n")
