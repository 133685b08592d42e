"""Independent reference implementations shared across the test suite.

Everything here deliberately avoids the library's own code paths where it
serves as an oracle: the LP brute force enumerates vertices, the selector
reference scans for the first set bit, and facet points come from solving
piece ties analytically.
"""
from __future__ import annotations

import itertools

import numpy as np

from yann.pwa import Halfspace, PwaFunction, Region, box_halfspaces


def vertex_enum_max(objective, halfspaces, feas_tol=1e-9):
    """Brute-force LP: enumerate all basic points from n-subsets of rows,
    keep the feasible ones, return the best objective value.

    Only valid for feasible bounded problems (the optimum sits at a
    vertex); returns None when no feasible vertex exists.
    """
    c = np.asarray(objective, dtype=float)
    n = c.shape[0]
    A = np.array([h.coeffs for h in halfspaces])
    b = np.array([h.offset for h in halfspaces])
    best = None
    for rows in itertools.combinations(range(A.shape[0]), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-12:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        if np.all(A @ x <= b + feas_tol):
            val = float(c @ x)
            if best is None or val > best[0]:
                best = (val, x)
    return best


def first_one_scan(bits):
    """Reference selector: one-hot at the first set bit, else all zeros."""
    out = np.zeros(len(bits))
    for i, d in enumerate(bits):
        if d == 1:
            out[i] = 1.0
            break
    return out


def max_affine_pieces(f: PwaFunction) -> tuple[np.ndarray, np.ndarray]:
    """The (a_k, b_k) pieces of a max-affine function's regions."""
    coeffs = np.vstack([r.gain[0] for r in f.regions])
    offsets = np.array([float(r.offset[0]) for r in f.regions])
    return coeffs, offsets


def facet_points(coeffs, offsets, box, rng, count=40, attempts=400):
    """Points where the top two affine pieces tie.

    From a random start the top two pieces i, j define the bisector
    hyperplane (a_i - a_j) . x = b_j - b_i; projecting the start onto it
    lands on the tie. Candidates where a third piece dominates or that
    leave the box are discarded.
    """
    lo, hi = box
    points = []
    for _ in range(attempts):
        if len(points) >= count:
            break
        x0 = rng.uniform(lo, hi)
        vals = coeffs @ x0 + offsets
        order = np.argsort(vals)
        i, j = int(order[-1]), int(order[-2])
        normal = coeffs[i] - coeffs[j]
        nn = float(normal @ normal)
        if nn < 1e-14:
            continue
        t = (vals[j] - vals[i]) / nn
        x_star = x0 + t * normal
        if np.any(x_star < lo) or np.any(x_star > hi):
            continue
        vals_star = coeffs @ x_star + offsets
        top = int(np.argmax(vals_star))
        if top not in (i, j):
            continue
        points.append(x_star)
    return np.array(points).reshape(-1, lo.shape[0])


def dlqr(A, B, Q, R, iters=2000, tol=1e-12):
    """Discrete-time LQR gain by value iteration on the Riccati map."""
    A = np.asarray(A, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    P = np.asarray(Q, dtype=float)
    for _ in range(iters):
        BtPB = B.T @ P @ B + R
        K = np.linalg.solve(BtPB, B.T @ P @ A)
        P_next = Q + A.T @ P @ (A - B @ K)
        if np.max(np.abs(P_next - P)) < tol:
            P = P_next
            break
        P = P_next
    K = np.linalg.solve(B.T @ P @ B + R, B.T @ P @ A)
    return K


def saturated_lqr_pwa(K, state_box, u_min, u_max) -> PwaFunction:
    """The law u = clip(-K x, u_min, u_max) as a three-region PWA.

    Regions in order: upper saturation, linear band, lower saturation.
    Adjacent regions agree on the switching hyperplanes, so the law is
    continuous on the state box.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))[0]
    n = K.shape[0]
    lo, hi = state_box
    box_rows = box_halfspaces(lo, hi)
    zero = np.zeros((1, n))

    def rows(extra):
        return extra + [Halfspace(h.coeffs.copy(), h.offset)
                        for h in box_rows]

    upper = Region(rows([Halfspace(K.copy(), -u_max)]),
                   zero.copy(), np.array([u_max]))
    band = Region(rows([Halfspace(-K, u_max), Halfspace(K.copy(), -u_min)]),
                  -K[None, :], np.array([0.0]))
    lower = Region(rows([Halfspace(-K, u_min)]),
                   zero.copy(), np.array([u_min]))
    return PwaFunction(n, 1, [upper, band, lower],
                       domain_box=(np.asarray(lo, dtype=float),
                                   np.asarray(hi, dtype=float)))


# Plant matrices used by the closed-loop tests: a discrete-time double
# integrator with a position+2*velocity output, and a linearized reactor
# model (three concentrations and temperature, actuated through heat
# transfer).
DOUBLE_INTEGRATOR = {
    "A": [[1.0, 1.0], [0.0, 1.0]],
    "B": [[0.0], [1.0]],
    "C": [[1.0, 2.0]],
    "D": [[0.0]],
}

CSTR = {
    "A": [[0.9506, 0.0, 0.0, 0.0],
          [-0.0484, 0.9943, 0.0, 0.0],
          [0.0, 0.0, 0.9909, 0.0],
          [0.6970, 0.0678, 0.0, 1.0030]],
    "B": [[0.0], [0.0], [0.0], [-0.0007]],
    "C": [[0.0, 0.0, 0.0, 1.0]],
    "D": [[0.0]],
}
