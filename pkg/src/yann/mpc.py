"""Closed-loop simulation of discrete-time LTI plants under a compiled
network controller.

The plant is ``x+ = A x + B u``, ``y = C x + D u`` with box constraints on
states, inputs and outputs. The controller is a compiled network, a PWA
function evaluated naively, or any callable; the two built-in forms let
parity between the network and its source function be checked in closed
loop. Out-of-domain states produce a zero control and a violation flag
(or an error in strict mode); box violations are flagged per step, never
silently clipped.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .compiler import Network
from .inference import Precision, forward_dense
from .pwa import EvalResult, OutsideDomainError, PwaFunction, evaluate_naive


def _box_or_none(pair):
    if pair is None:
        return None
    lo = np.atleast_1d(np.asarray(pair[0], dtype=float))
    hi = np.atleast_1d(np.asarray(pair[1], dtype=float))
    if lo.shape != hi.shape or not np.all(lo <= hi):
        raise ValueError("box must satisfy lo <= hi elementwise")
    return lo, hi


@dataclass
class LtiSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    state_box: tuple[np.ndarray, np.ndarray] | None = None
    input_box: tuple[np.ndarray, np.ndarray] | None = None
    output_box: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.C = np.atleast_2d(np.asarray(self.C, dtype=float))
        self.D = np.atleast_2d(np.asarray(self.D, dtype=float))
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise ValueError("A must be square")
        if self.B.shape[0] != n:
            raise ValueError("B row count must match A")
        if self.C.shape[1] != n:
            raise ValueError("C column count must match A")
        if self.D.shape != (self.C.shape[0], self.B.shape[1]):
            raise ValueError("D must be n_y x m_u")
        self.state_box = _box_or_none(self.state_box)
        self.input_box = _box_or_none(self.input_box)
        self.output_box = _box_or_none(self.output_box)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_y(self) -> int:
        return self.C.shape[0]


@dataclass
class Trajectory:
    """states has one more entry than inputs/outputs; violations are
    (step, kind) pairs with kind one of state_box, input_box, output_box,
    out_of_domain, nonfinite."""

    states: list[np.ndarray] = field(default_factory=list)
    inputs: list[np.ndarray] = field(default_factory=list)
    outputs: list[np.ndarray] = field(default_factory=list)
    violations: list[tuple[int, str]] = field(default_factory=list)


def lti_step(sys: LtiSystem, x, u) -> tuple[np.ndarray, np.ndarray]:
    """One update ``(A x + B u, C x + D u)``."""
    x = np.asarray(x, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if x.shape != (sys.n,):
        raise ValueError(f"state has shape {x.shape}, expected ({sys.n},)")
    if u.shape != (sys.m_u,):
        raise ValueError(f"input has shape {u.shape}, expected ({sys.m_u},)")
    return sys.A @ x + sys.B @ u, sys.C @ x + sys.D @ u


def _violates(box, v) -> bool:
    return box is not None and (np.any(v < box[0]) or np.any(v > box[1]))


def _as_controller(controller, prec: Precision):
    if isinstance(controller, Network):
        return lambda theta: forward_dense(controller, theta, prec)
    if isinstance(controller, PwaFunction):
        return lambda theta: evaluate_naive(controller, theta)
    if callable(controller):
        return controller
    raise TypeError("controller must be a Network, a PwaFunction, "
                    "or a callable")


def simulate(sys: LtiSystem, controller, x0, steps: int,
             extras: np.ndarray | None = None, strict: bool = False,
             prec: Precision = Precision.FP64) -> Trajectory:
    """Iterate ``u_k = controller(x_k)`` then the plant update.

    ``extras`` (steps x n_extra) is appended to the state before each
    controller call, for laws whose parameter vector carries more than the
    state. Divergence to non-finite states stops the run early with a
    ``nonfinite`` flag.
    """
    x = np.asarray(x0, dtype=float)
    if x.shape != (sys.n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({sys.n},)")
    if _violates(sys.state_box, x):
        raise ValueError("x0 lies outside the state box")
    if extras is not None:
        extras = np.atleast_2d(np.asarray(extras, dtype=float))
        if extras.shape[0] < steps:
            raise ValueError(f"extras supplies {extras.shape[0]} rows "
                             f"for {steps} steps")
    act = _as_controller(controller, prec)
    traj = Trajectory(states=[x.copy()])
    for k in range(steps):
        theta = x if extras is None else np.concatenate([x, extras[k]])
        res: EvalResult = act(theta)
        if res.region_index is None:
            if strict:
                raise OutsideDomainError(
                    f"state at step {k} lies in no region of the law")
            traj.violations.append((k, "out_of_domain"))
        u = np.atleast_1d(np.asarray(res.output, dtype=float))
        if _violates(sys.input_box, u):
            traj.violations.append((k, "input_box"))
        x, y = lti_step(sys, x, u)
        traj.inputs.append(u)
        traj.outputs.append(y)
        traj.states.append(x.copy())
        if not np.all(np.isfinite(x)):
            traj.violations.append((k, "nonfinite"))
            break
        if _violates(sys.state_box, x):
            traj.violations.append((k + 1, "state_box"))
        if _violates(sys.output_box, y):
            traj.violations.append((k, "output_box"))
    return traj


# ---------------------------------------------------------------------------
# JSON for systems, CSV for trajectories
# ---------------------------------------------------------------------------

def _box_to_json(box):
    return None if box is None else {"lo": box[0].tolist(),
                                     "hi": box[1].tolist()}


def save_system(sys: LtiSystem, path) -> None:
    obj = {"A": sys.A.tolist(), "B": sys.B.tolist(),
           "C": sys.C.tolist(), "D": sys.D.tolist()}
    for name in ("state_box", "input_box", "output_box"):
        box = _box_to_json(getattr(sys, name))
        if box is not None:
            obj[name] = box
    with open(path, "w") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_system(path) -> LtiSystem:
    with open(path) as fh:
        obj = json.load(fh)

    def box(name):
        entry = obj.get(name)
        return None if entry is None else (entry["lo"], entry["hi"])

    return LtiSystem(obj["A"], obj["B"], obj["C"], obj["D"],
                     state_box=box("state_box"), input_box=box("input_box"),
                     output_box=box("output_box"))


def trajectory_to_csv(traj: Trajectory, path) -> None:
    n = traj.states[0].shape[0]
    m_u = traj.inputs[0].shape[0] if traj.inputs else 0
    n_y = traj.outputs[0].shape[0] if traj.outputs else 0
    flags: dict[int, list[str]] = {}
    for step, kind in traj.violations:
        flags.setdefault(step, []).append(kind)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k"] + [f"x{i}" for i in range(n)]
                        + [f"u{j}" for j in range(m_u)]
                        + [f"y{j}" for j in range(n_y)] + ["flags"])
        for k, x in enumerate(traj.states):
            u = traj.inputs[k] if k < len(traj.inputs) else []
            y = traj.outputs[k] if k < len(traj.outputs) else []
            writer.writerow([k] + [repr(float(v)) for v in x]
                            + [repr(float(v)) for v in u]
                            + [repr(float(v)) for v in y]
                            + [";".join(flags.get(k, []))])
