"""Training-free construction of exact networks from PWA functions.

Three network kinds are built here, all with weights copied or negated
straight out of the function's data, never fitted:

* ``yann``: five layers. A binary-step layer checks every inequality at
  once, a ReLU layer ANDs each region's block into a membership indicator,
  a lower-triangular ReLU layer turns the indicator vector into a one-hot
  at the first satisfied region, and a big-M gated ReLU pair bank plus a
  signed recombination evaluate the selected piece. Layer four takes the
  original input through a skip connection.
* ``yann_l``: the same selector stack, then an affine bank over all
  pieces, an elementwise gate against the expanded one-hot, and a summing
  output layer. No big-M is involved, which trades speed for precision.
* ``checker``: just the first two layers, exposing the raw membership
  indicator vector. Useful on its own for constraint checking, including
  on nonlinear constraints linearized through caller-supplied feature
  inputs.

Compilation is a pure function of its inputs: identical function and
bound give bit-identical networks.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .bigm import BigMBound
from .pwa import PwaFunction

PREV = "prev"
PREV_CONCAT_INPUT = "prev_concat_input"

KIND_YANN = "yann"
KIND_YANN_L = "yann_l"
KIND_CHECKER = "checker"


class Activation(Enum):
    BSF = "bsf"
    RELU = "relu"
    LINEAR = "linear"
    HADAMARD_GATE = "hadamard_gate"


@dataclass
class LayerSpec:
    weights: np.ndarray
    bias: np.ndarray
    activation: Activation
    input_source: str = PREV

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.bias = np.atleast_1d(np.asarray(self.bias, dtype=float))
        if self.bias.shape[0] != self.weights.shape[0]:
            raise ValueError("bias length does not match weight rows")
        if self.input_source not in (PREV, PREV_CONCAT_INPUT):
            raise ValueError(f"unknown input source {self.input_source!r}")

    @property
    def rows(self) -> int:
        return self.weights.shape[0]

    @property
    def cols(self) -> int:
        return self.weights.shape[1]


@dataclass
class Network:
    """Explicit weights, biases and activations for one compiled network."""

    kind: str
    n: int
    m: int
    p: int
    q: int
    layers: list[LayerSpec]
    big_m: BigMBound | None = None
    region_order: list[int] | None = None
    feature_names: list[str] | None = None
    structure: dict | None = None
    cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.region_order is None:
            self.region_order = list(range(self.p))
        self.validate_shapes()

    def validate_shapes(self) -> None:
        acts = [layer.activation for layer in self.layers]
        rows = [layer.rows for layer in self.layers]
        cols = [layer.cols for layer in self.layers]
        sources = [layer.input_source for layer in self.layers]
        n, m, p, q = self.n, self.m, self.p, self.q
        A = Activation
        if self.kind == KIND_YANN:
            expect = (acts == [A.BSF, A.RELU, A.RELU, A.RELU, A.LINEAR]
                      and rows == [q, p, p, 2 * m * p, m]
                      and cols == [n, q, p, p + n, 2 * m * p]
                      and sources == [PREV, PREV, PREV,
                                      PREV_CONCAT_INPUT, PREV])
            if self.big_m is None:
                raise ValueError("yann networks need a big-M bound")
        elif self.kind == KIND_YANN_L:
            mp = m * p
            expect = (acts == [A.BSF, A.RELU, A.RELU, A.LINEAR,
                               A.HADAMARD_GATE, A.LINEAR]
                      and rows == [q, p, p, mp, mp, m]
                      and cols == [n, q, p, p + n, mp, mp]
                      and sources == [PREV, PREV, PREV,
                                      PREV_CONCAT_INPUT, PREV, PREV])
        elif self.kind == KIND_CHECKER:
            expect = (acts == [A.BSF, A.RELU]
                      and rows == [q, p] and cols == [n, q]
                      and sources == [PREV, PREV])
        else:
            raise ValueError(f"unknown network kind {self.kind!r}")
        if not expect:
            raise ValueError(f"{self.kind} layer shapes violate the "
                             f"construction: rows={rows} cols={cols}")

    @property
    def layer_sizes(self) -> list[int]:
        return [layer.rows for layer in self.layers]

    def summary(self) -> str:
        sizes = "-".join(str(s) for s in self.layer_sizes)
        text = (f"kind={self.kind} n={self.n} m={self.m} p={self.p} "
                f"q={self.q} layers=[{sizes}]")
        if self.big_m is not None:
            text += f" M={self.big_m.value:g} ({self.big_m.method})"
        return text


def build_constraint_layers(f: PwaFunction) -> tuple[LayerSpec, LayerSpec]:
    """Layers 1 and 2: inequality checks, then per-region AND.

    Layer 1 has one binary-step neuron per inequality, with the sign
    flipped so that satisfaction maps to a nonnegative preactivation.
    Layer 2 sums each region's block of booleans and shifts by 1 - q_s,
    so a region's neuron fires exactly when all its inequalities hold;
    the sums are integer-valued, hence exact in floating point.
    """
    W1 = -np.vstack([r.A for r in f.regions])
    B1 = np.concatenate([r.b for r in f.regions])
    q = W1.shape[0]
    W2 = np.zeros((f.p, q))
    B2 = np.zeros(f.p)
    start = 0
    for s, region in enumerate(f.regions):
        W2[s, start:start + region.q] = 1.0
        B2[s] = 1.0 - region.q
        start += region.q
    return (LayerSpec(W1, B1, Activation.BSF),
            LayerSpec(W2, B2, Activation.RELU))


def build_first_hit_layer(p: int, all_zero_detector: bool = False) -> LayerSpec:
    """Layer 3: one-hot at the first set bit of a binary vector.

    Lower-triangular weights (+1 diagonal, -1 strictly below) make entry i
    equal ``relu(d_i - sum(d_1..d_{i-1}))``, which is 1 only for the first
    set input bit. The optional detector row (all -1 weights, bias 1)
    fires exactly when the whole input is zero; it is not part of the
    standard assembly.
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    W = np.eye(p) + np.tril(-np.ones((p, p)), k=-1)
    B = np.zeros(p)
    if all_zero_detector:
        W = np.vstack([W, -np.ones((1, p))])
        B = np.append(B, 1.0)
    return LayerSpec(W, B, Activation.RELU)


def _gate_values(f: PwaFunction, big_m: BigMBound,
                 per_row_m: bool) -> np.ndarray:
    if not per_row_m:
        return np.full(f.m, big_m.value)
    if big_m.row_values is None:
        raise ValueError("per-row gating needs row_values on the bound")
    return np.asarray(big_m.row_values, dtype=float)


def build_gated_affine_layers(f: PwaFunction, big_m: BigMBound,
                              per_row_m: bool = False
                              ) -> tuple[LayerSpec, LayerSpec]:
    """Layers 4 and 5: big-M gated ReLU pairs, then signed recombination.

    For piece k and output row j, two ReLU neurons see
    ``M * sel_k + (affine_jk(x)) - M`` and ``M * sel_k - affine_jk(x) - M``.
    With the selector bit closed both preactivations are at most -(pad),
    so both neurons emit exactly zero; with it open the pair encodes the
    positive and negative parts of the affine value, and layer 5 subtracts
    them back together. The caller must have verified M against the bigm
    module.
    """
    m, n, p = f.m, f.n, f.p
    M = _gate_values(f, big_m, per_row_m)
    W4 = np.zeros((2 * m * p, p + n))
    B4 = np.zeros(2 * m * p)
    for k, region in enumerate(f.regions):
        for j in range(m):
            pos = 2 * m * k + 2 * j
            neg = pos + 1
            W4[pos, k] = M[j]
            W4[neg, k] = M[j]
            W4[pos, p:] = region.gain[j]
            W4[neg, p:] = -region.gain[j]
            B4[pos] = region.offset[j] - M[j]
            B4[neg] = -region.offset[j] - M[j]
    W5 = np.zeros((m, 2 * m * p))
    for k in range(p):
        for j in range(m):
            W5[j, 2 * m * k + 2 * j] = 1.0
            W5[j, 2 * m * k + 2 * j + 1] = -1.0
    return (LayerSpec(W4, B4, Activation.RELU,
                      input_source=PREV_CONCAT_INPUT),
            LayerSpec(W5, np.zeros(m), Activation.LINEAR))


def _q_blocks(f: PwaFunction) -> list[int]:
    return [r.q for r in f.regions]


def assemble_yann(f: PwaFunction, big_m: BigMBound,
                  per_row_m: bool = False) -> Network:
    """Full five-layer network: selector stack plus gated evaluation."""
    l1, l2 = build_constraint_layers(f)
    l3 = build_first_hit_layer(f.p)
    l4, l5 = build_gated_affine_layers(f, big_m, per_row_m=per_row_m)
    return Network(KIND_YANN, f.n, f.m, f.p, f.q, [l1, l2, l3, l4, l5],
                   big_m=big_m, feature_names=f.feature_names,
                   structure={"q_blocks": _q_blocks(f)})


def assemble_yann_l(f: PwaFunction) -> Network:
    """Gate variant: selector stack, affine bank, elementwise gate, sum.

    The bank evaluates every piece's affine map on the skip-connected
    input (its selector columns are zero), the gate multiplies each bank
    row by its piece's selector bit, and the output layer sums the m-wide
    blocks. A closed gate multiplies by exactly zero, so no bounding
    constant is needed.
    """
    m, n, p = f.m, f.n, f.p
    l1, l2 = build_constraint_layers(f)
    l3 = build_first_hit_layer(p)
    mp = m * p
    W_bank = np.zeros((mp, p + n))
    B_bank = np.zeros(mp)
    for k, region in enumerate(f.regions):
        W_bank[m * k:m * (k + 1), p:] = region.gain
        B_bank[m * k:m * (k + 1)] = region.offset
    bank = LayerSpec(W_bank, B_bank, Activation.LINEAR,
                     input_source=PREV_CONCAT_INPUT)
    gate = LayerSpec(np.eye(mp), np.zeros(mp), Activation.HADAMARD_GATE)
    W_out = np.zeros((m, mp))
    for k in range(p):
        W_out[:, m * k:m * (k + 1)] = np.eye(m)
    out = LayerSpec(W_out, np.zeros(m), Activation.LINEAR)
    return Network(KIND_YANN_L, n, m, p, f.q, [l1, l2, l3, bank, gate, out],
                   feature_names=f.feature_names,
                   structure={"q_blocks": _q_blocks(f)})


def assemble_checker(f: PwaFunction) -> Network:
    """Membership indicator network: outputs one bit per region system."""
    l1, l2 = build_constraint_layers(f)
    return Network(KIND_CHECKER, f.n, f.p, f.p, f.q, [l1, l2],
                   feature_names=f.feature_names,
                   structure={"q_blocks": _q_blocks(f)})


def build_single_signed_affine(gain, offset: float, sign: str) -> LayerSpec:
    """One ReLU neuron for an affine map known to be one-signed.

    For "pos" the neuron is ``relu(gain . x + offset)``; for "neg" it is
    ``relu(-(gain . x + offset))`` and the caller restores the sign of the
    result. Only valid while the output keeps the asserted sign.
    """
    gain = np.atleast_1d(np.asarray(gain, dtype=float))
    if sign == "pos":
        return LayerSpec(gain[None, :], np.array([offset]), Activation.RELU)
    if sign == "neg":
        return LayerSpec(-gain[None, :], np.array([-offset]), Activation.RELU)
    raise ValueError(f"sign must be 'pos' or 'neg', got {sign!r}")


class AuditError(AssertionError):
    """A compiled network's weights deviate from the construction rules."""


def audit_network(net: Network, f: PwaFunction) -> None:
    """Structural audit: every weight and bias must trace back to the
    function's data (negated inequality rows, gains, offsets, block ones,
    the triangular selector pattern, or M-shifted entries). Exact
    comparisons throughout; compilation is deterministic arithmetic."""
    A_all = np.vstack([r.A for r in f.regions])
    b_all = np.concatenate([r.b for r in f.regions])
    l1 = net.layers[0]
    if not (np.array_equal(l1.weights, -A_all)
            and np.array_equal(l1.bias, b_all)):
        raise AuditError("layer 1 is not the negated inequality system")

    l2 = net.layers[1]
    start = 0
    for s, region in enumerate(f.regions):
        row = np.zeros(f.q)
        row[start:start + region.q] = 1.0
        if not np.array_equal(l2.weights[s], row):
            raise AuditError(f"layer 2 row {s} is not the block indicator")
        if l2.bias[s] != 1.0 - region.q:
            raise AuditError(f"layer 2 bias {s} is not 1 - q_s")
        start += region.q
    if net.kind == KIND_CHECKER:
        return

    l3 = net.layers[2]
    expect = np.eye(f.p) + np.tril(-np.ones((f.p, f.p)), k=-1)
    if not (np.array_equal(l3.weights, expect) and np.all(l3.bias == 0.0)):
        raise AuditError("layer 3 is not the first-hit triangle")

    if net.kind == KIND_YANN:
        l4, l5 = net.layers[3], net.layers[4]
        for k, region in enumerate(f.regions):
            for j in range(f.m):
                pos = 2 * f.m * k + 2 * j
                neg = pos + 1
                Mj = l4.weights[pos, k]
                sel = np.zeros(f.p)
                sel[k] = Mj
                for row, sgn in ((pos, 1.0), (neg, -1.0)):
                    if not np.array_equal(l4.weights[row, :f.p], sel):
                        raise AuditError(f"layer 4 row {row} selector column")
                    if not np.array_equal(l4.weights[row, f.p:],
                                          sgn * region.gain[j]):
                        raise AuditError(f"layer 4 row {row} gain block")
                    if l4.bias[row] != sgn * region.offset[j] - Mj:
                        raise AuditError(f"layer 4 bias {row}")
                if l5.weights[j, pos] != 1.0 or l5.weights[j, neg] != -1.0:
                    raise AuditError("layer 5 sign pattern")
        if not np.all(np.isin(l5.weights, (-1.0, 0.0, 1.0))):
            raise AuditError("layer 5 carries values outside {-1, 0, 1}")
    elif net.kind == KIND_YANN_L:
        bank, gate, out = net.layers[3], net.layers[4], net.layers[5]
        for k, region in enumerate(f.regions):
            rows = slice(f.m * k, f.m * (k + 1))
            if not np.array_equal(bank.weights[rows, f.p:], region.gain):
                raise AuditError(f"bank rows for piece {k}")
            if not np.array_equal(bank.bias[rows], region.offset):
                raise AuditError(f"bank bias for piece {k}")
        if np.any(bank.weights[:, :f.p] != 0.0):
            raise AuditError("bank selector columns must be zero")
        if not np.array_equal(gate.weights, np.eye(f.m * f.p)):
            raise AuditError("gate layer must be the identity")
        for k in range(f.p):
            block = out.weights[:, f.m * k:f.m * (k + 1)]
            if not np.array_equal(block, np.eye(f.m)):
                raise AuditError("output layer must repeat identity blocks")


# ---------------------------------------------------------------------------
# JSON interchange for compiled networks
# ---------------------------------------------------------------------------

def network_to_dict(net: Network) -> dict:
    obj = {
        "kind": net.kind,
        "n": net.n, "m": net.m, "p": net.p, "q": net.q,
        "region_order": list(net.region_order),
        "layers": [
            {
                "rows": layer.rows,
                "cols": layer.cols,
                "weights": layer.weights.ravel().tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation.value,
                "input_source": layer.input_source,
            }
            for layer in net.layers
        ],
    }
    if net.big_m is not None:
        obj["big_m"] = {
            "value": net.big_m.value,
            "method": net.big_m.method,
            "margin": net.big_m.margin,
            "tight_value": net.big_m.tight_value,
        }
        if net.big_m.row_values is not None:
            obj["big_m"]["row_values"] = net.big_m.row_values.tolist()
    if net.feature_names:
        obj["features"] = list(net.feature_names)
    if net.structure is not None:
        obj["structure"] = net.structure
    return obj


def network_from_dict(obj: dict) -> Network:
    layers = []
    for spec in obj["layers"]:
        W = np.asarray(spec["weights"], dtype=float).reshape(
            spec["rows"], spec["cols"])
        layers.append(LayerSpec(W, np.asarray(spec["bias"], dtype=float),
                                Activation(spec["activation"]),
                                input_source=spec.get("input_source", PREV)))
    big_m = None
    if obj.get("big_m") is not None:
        bm = obj["big_m"]
        rows = bm.get("row_values")
        big_m = BigMBound(bm["value"], bm["method"], bm["margin"],
                          bm["tight_value"],
                          row_values=np.asarray(rows, dtype=float)
                          if rows is not None else None)
    features = obj.get("features")
    return Network(obj["kind"], obj["n"], obj["m"], obj["p"], obj["q"],
                   layers, big_m=big_m,
                   region_order=list(obj["region_order"]),
                   feature_names=list(features) if features else None,
                   structure=obj.get("structure"))


def load_network(path) -> Network:
    with open(path) as fh:
        return network_from_dict(json.load(fh))


def save_network(net: Network, path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh)
        fh.write("\n")
