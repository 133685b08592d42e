"""Synthetic piecewise-affine functions for testing and benchmarking.

The only cheap construction that guarantees a continuous function over an
explicit half-space partition is the maximum of affine pieces, so that is
what these generators produce: ``f(x) = max_k (a_k . x + b_k)`` restricted
to a box. Each piece's region is the set where that piece attains the max,
carved by dominance inequalities against the other pieces. The closed-form
max is the independent oracle for everything built on top.

Vector-valued test functions reuse the same partition and attach random
affine maps per region; those are generally discontinuous across facets,
which is exactly what index-level comparison tests want.
"""
from __future__ import annotations

import numpy as np

from . import lp
from .pwa import Halfspace, PwaFunction, Region, box_halfspaces


def _normalize_box(box, n):
    lo, hi = box
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (n,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (n,)).copy()
    if not np.all(lo < hi):
        raise ValueError("box must satisfy lo < hi elementwise")
    return lo, hi


def _upper_envelope_1d(coeffs, offsets):
    """Pieces attaining the max of lines, with their start abscissae.

    Returns a list of (original_index, t_start) in ascending slope order;
    the piece's interval runs to the next entry's t_start.
    """
    order = np.lexsort((offsets, coeffs[:, 0]))
    # among equal slopes only the largest offset can attain the max
    filtered = []
    for idx in order:
        if filtered and coeffs[filtered[-1], 0] == coeffs[idx, 0]:
            filtered[-1] = idx
        else:
            filtered.append(idx)
    stack: list[tuple[int, float]] = []
    for idx in filtered:
        a, b = coeffs[idx, 0], offsets[idx]
        t = -np.inf
        while stack:
            top, t_top = stack[-1]
            t = (offsets[top] - b) / (a - coeffs[top, 0])
            if t <= t_top:
                stack.pop()
                t = -np.inf
            else:
                break
        stack.append((idx, t))
    return stack


def _hull_adjacency(coeffs, offsets):
    """Adjacent piece pairs via the upper hull of the lifted points.

    A piece attains the max somewhere iff its lifted point (a_k, b_k) is a
    vertex of the upper convex hull, and two pieces share a facet iff their
    lifted points share an upper-hull facet. Dominance constraints against
    non-neighbors are redundant and are dropped here, which keeps the
    per-region row count bounded by the neighbor count instead of p.
    """
    from scipy.spatial import ConvexHull, QhullError

    points = np.column_stack([coeffs, offsets])
    try:
        hull = ConvexHull(points)
    except QhullError:
        return None
    upper = hull.equations[:, -2] > 1e-12
    adjacency: dict[int, set[int]] = {}
    for simplex in hull.simplices[upper]:
        for i in simplex:
            adjacency.setdefault(int(i), set()).update(int(j) for j in simplex)
    for k, neigh in adjacency.items():
        neigh.discard(k)
    return adjacency


def max_affine_from_pieces(coeffs, offsets, box,
                           prune: str = "auto") -> PwaFunction:
    """Build the PWA form of ``max_k (a_k . x + b_k)`` on a box.

    ``prune`` controls how dominance constraints are thinned: "auto" uses
    the lifted-hull neighborhood for n <= 3 and keeps all pairs otherwise,
    "never" always keeps all pairs. Pieces whose region is empty within the
    box (decided by the LP module) are dropped; surviving regions keep the
    original piece order.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
    offsets = np.atleast_1d(np.asarray(offsets, dtype=float))
    p, n = coeffs.shape
    if offsets.shape != (p,):
        raise ValueError("offsets length must match piece count")
    if prune not in ("auto", "never"):
        raise ValueError(f"unknown prune mode {prune!r}")
    lo, hi = _normalize_box(box, n)
    stacked = np.column_stack([coeffs, offsets])
    if len(np.unique(stacked, axis=0)) != p:
        raise ValueError("duplicate affine pieces")

    candidates: dict[int, list[Halfspace]] = {}
    if n == 1:
        envelope = _upper_envelope_1d(coeffs, offsets)
        for pos, (idx, t_start) in enumerate(envelope):
            t_end = envelope[pos + 1][1] if pos + 1 < len(envelope) else np.inf
            left = max(t_start, lo[0])
            right = min(t_end, hi[0])
            candidates[idx] = [Halfspace(np.array([1.0]), right),
                               Halfspace(np.array([-1.0]), -left)]
    else:
        adjacency = None
        if prune == "auto" and n <= 3 and p > n + 2:
            adjacency = _hull_adjacency(coeffs, offsets)
        box_rows = box_halfspaces(lo, hi)
        for k in range(p):
            if adjacency is not None and k not in adjacency:
                continue  # never attains the max
            others = sorted(adjacency[k]) if adjacency is not None \
                else [j for j in range(p) if j != k]
            rows = []
            dominated = False
            for j in others:
                a = coeffs[j] - coeffs[k]
                b = offsets[k] - offsets[j]
                if not np.any(a != 0.0):
                    if b < 0.0:
                        dominated = True
                        break
                    continue  # vacuous: piece k dominates j everywhere
                rows.append(Halfspace(a, b))
            if dominated:
                continue
            candidates[k] = rows + [Halfspace(h.coeffs.copy(), h.offset)
                                    for h in box_rows]

    regions = []
    for k in sorted(candidates):
        rows = candidates[k]
        if lp.is_empty(rows):
            continue
        regions.append(Region(rows, coeffs[k:k + 1].copy(),
                              offsets[k:k + 1].copy()))
    if not regions:
        raise ValueError("every piece produced an empty region")
    return PwaFunction(n, 1, regions, domain_box=(lo, hi))


def _draw_sites(rng, n, p, lo, hi, max_retries):
    """Sites separated well enough that no two pieces coincide."""
    from scipy.spatial import cKDTree

    min_sep = 1e-6 * float(np.min(hi - lo))
    sites = rng.uniform(lo, hi, size=(p, n))
    for _ in range(max_retries):
        close = cKDTree(sites).query_pairs(r=min_sep)
        if not close:
            return sites
        for _, j in sorted(close):
            sites[j] = rng.uniform(lo, hi)
    raise RuntimeError(f"could not separate {p} sites in {max_retries} tries")


def generate_max_affine(seed: int, n: int, p: int, box,
                        prune: str = "auto",
                        max_retries: int = 50) -> PwaFunction:
    """Random continuous scalar PWA: the max of p tangent planes.

    Pieces are tangents to a concave paraboloid at sites drawn uniformly
    in the box, so the partition is the Voronoi diagram of the sites and
    every region is non-empty (each contains its own site). The oracle is
    the closed-form ``max_k (a_k . x + b_k)`` over the returned regions.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    lo, hi = _normalize_box(box, n)
    rng = np.random.default_rng(seed)
    sites = _draw_sites(rng, n, p, lo, hi, max_retries)
    coeffs = sites
    offsets = -0.5 * np.sum(sites * sites, axis=1)
    return max_affine_from_pieces(coeffs, offsets, (lo, hi), prune=prune)


def generate_vector_pwa(seed: int, n: int, m: int, p: int, box,
                        gain_scale: float = 1.0,
                        offset_scale: float = 1.0,
                        prune: str = "auto") -> PwaFunction:
    """Random vector PWA on the partition of ``generate_max_affine``.

    Gains and offsets are drawn independently per region, so the function
    is generally discontinuous across facets. Valid for interior-point
    value tests and for index-equality tests everywhere.
    """
    base = generate_max_affine(seed, n, p, box, prune=prune)
    rng = np.random.default_rng([seed, 0x7f4a])
    regions = []
    for r in base.regions:
        gain = gain_scale * rng.standard_normal((m, n))
        offset = offset_scale * rng.standard_normal(m)
        regions.append(Region(r.halfspaces, gain, offset))
    return PwaFunction(n, m, regions, domain_box=base.domain_box)


def max_affine_value(f: PwaFunction, x: np.ndarray) -> float:
    """Closed-form oracle for functions built by ``max_affine_from_pieces``."""
    x = np.asarray(x, dtype=float)
    return max(float(r.gain[0] @ x + r.offset[0]) for r in f.regions)
