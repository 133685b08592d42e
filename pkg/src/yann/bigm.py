"""Valid gating constants for compiled networks.

The gated evaluation layers need a scalar M at least as large as the
magnitude of every piece's affine map over the *full* domain (not each
piece's own subdomain). Exact equality invites floating-point ties at the
gate boundary, so the returned bound carries a multiplicative margin plus
an absolute pad on top of the tight supremum. Oversizing M is also costly:
it amplifies cancellation error, so the default margin is modest.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .lp import LpProblem, LpStatus, solve_lp, is_empty
from .pwa import Halfspace, PwaFunction, box_halfspaces

log = logging.getLogger(__name__)

MARGIN_DEFAULT = 1.25
ABS_PAD = 1.0

METHOD_EXACT = "exact_lp"
METHOD_INTERVAL = "interval_box"


class DomainError(ValueError):
    """The bounding domain cannot support a finite big-M."""


class UnboundedDomainError(DomainError):
    pass


class InfeasibleDomainError(DomainError):
    pass


@dataclass
class BigMBound:
    """Padded gating constant with its provenance.

    ``value = margin * tight_value + ABS_PAD`` where ``tight_value`` is the
    pre-margin supremum bound. ``row_values`` carries the analogous padded
    bound per output row for the optional per-row gating mode.
    """

    value: float
    method: str
    margin: float
    tight_value: float
    row_values: np.ndarray | None = None

    def __post_init__(self):
        if self.margin < 1.0:
            raise ValueError("margin must be at least 1")
        if not np.isfinite(self.value) or self.value <= 0.0:
            raise ValueError("big-M must be finite and positive")
        if self.value < self.tight_value:
            raise ValueError("padded value below the tight bound")


def domain_bounding_box(f: PwaFunction) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounding box of the union of regions, via 2np LPs."""
    lo = np.full(f.n, np.inf)
    hi = np.full(f.n, -np.inf)
    for k, region in enumerate(f.regions):
        if is_empty(region.halfspaces):
            continue
        for i in range(f.n):
            e = np.zeros(f.n)
            e[i] = 1.0
            top = solve_lp(LpProblem(e, region.halfspaces))
            bot = solve_lp(LpProblem(-e, region.halfspaces))
            if top.status is LpStatus.UNBOUNDED or bot.status is LpStatus.UNBOUNDED:
                raise UnboundedDomainError(
                    f"region {k} is unbounded along axis {i}; "
                    "supply a domain_box to bound the function")
            hi[i] = max(hi[i], top.value)
            lo[i] = min(lo[i], -bot.value)
    if not np.all(np.isfinite(lo)) or not np.all(lo < hi):
        raise DomainError("union of regions has no full-dimensional "
                          "bounding box; supply a domain_box")
    return lo, hi


def resolve_domain(f: PwaFunction,
                   domain: list[Halfspace] | None = None
                   ) -> tuple[list[Halfspace], str]:
    """Pick the bounding polytope: explicit arg, then the function's
    domain_box, then an LP-derived bounding box of the union."""
    if domain is not None:
        return list(domain), "explicit"
    if f.domain_box is not None:
        lo, hi = f.domain_box
        return box_halfspaces(lo, hi), "domain_box"
    lo, hi = domain_bounding_box(f)
    log.info("big-M domain fell back to LP bounding box lo=%s hi=%s", lo, hi)
    return box_halfspaces(lo, hi), "bounding_box_lp"


def _check_domain(domain: list[Halfspace], n: int) -> None:
    """Every coordinate's max and min LP must come back Optimal."""
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        for obj in (e, -e):
            res = solve_lp(LpProblem(obj, domain))
            if res.status is LpStatus.UNBOUNDED:
                raise UnboundedDomainError(
                    f"domain is unbounded along axis {i}; "
                    "supply a domain_box to bound the function")
            if res.status is LpStatus.INFEASIBLE:
                raise InfeasibleDomainError("domain polytope is infeasible")


def compute_big_m_exact(f: PwaFunction,
                        domain: list[Halfspace] | None = None,
                        margin: float = MARGIN_DEFAULT) -> BigMBound:
    """Tight bound from 2mp LPs: max and min of every piece's rows.

    All solves run over the full domain polytope only; region half-spaces
    never enter the constraint set.
    """
    constraints, _ = resolve_domain(f, domain)
    _check_domain(constraints, f.n)
    row_tight = np.zeros(f.m)
    for region in f.regions:
        for j in range(f.m):
            gain = region.gain[j]
            off = float(region.offset[j])
            if not np.any(gain != 0.0):
                row_tight[j] = max(row_tight[j], abs(off))
                continue
            top = solve_lp(LpProblem(gain, constraints))
            bot = solve_lp(LpProblem(-gain, constraints))
            hi = top.value + off
            lo = -bot.value + off
            row_tight[j] = max(row_tight[j], abs(hi), abs(lo))
    tight = float(row_tight.max())
    return BigMBound(margin * tight + ABS_PAD, METHOD_EXACT, margin, tight,
                     row_values=margin * row_tight + ABS_PAD)


def compute_big_m_interval(f: PwaFunction,
                           box: tuple[np.ndarray, np.ndarray] | None = None,
                           margin: float = MARGIN_DEFAULT) -> BigMBound:
    """Interval-arithmetic bound, no LPs: always at least the exact bound.

    Per piece and output row the bound is
    ``sum_i |a_i| * max(|lo_i|, |hi_i|) + |b|``, the supremum of |a.x| over
    the box plus the offset magnitude.
    """
    if box is None:
        box = f.domain_box
    if box is None:
        lo, hi = domain_bounding_box(f)
    else:
        lo = np.asarray(box[0], dtype=float)
        hi = np.asarray(box[1], dtype=float)
    if not np.all(lo < hi):
        raise ValueError("box must satisfy lo < hi elementwise")
    reach = np.maximum(np.abs(lo), np.abs(hi))
    row_tight = np.zeros(f.m)
    for region in f.regions:
        bound = np.abs(region.gain) @ reach + np.abs(region.offset)
        row_tight = np.maximum(row_tight, bound)
    tight = float(row_tight.max())
    return BigMBound(margin * tight + ABS_PAD, METHOD_INTERVAL, margin, tight,
                     row_values=margin * row_tight + ABS_PAD)
