"""Execution of compiled networks.

Three paths share one semantics:

* ``forward_dense`` is the reference: literal layer-by-layer products.
  Binary-step layers accumulate column by column in a fixed order so that
  boundary comparisons match the naive evaluator bit for bit; the other
  layers operate on integer-exact selector values or feed tolerance-gated
  outputs, so they run as plain dense products.
* ``forward_structured`` exploits the block structure recorded at compile
  time: one stacked inequality product, per-block counts, a first-one
  scan, and the selected piece's affine map only. Mathematically identical
  to the dense pass by the gating construction; agreement within 1e-12 in
  double precision is asserted by the test suite, and region selection is
  bit-identical because layer 1 goes through the same kernel.
* ``forward_batch`` evaluates many points at once with matrix-matrix
  products (which may reassociate sums, hence tolerance rather than bit
  equality against the per-point paths).

Single precision converts weights, biases and inputs once per network and
accumulates in float32.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .compiler import (Activation, KIND_CHECKER, KIND_YANN, KIND_YANN_L,
                       Network, PREV_CONCAT_INPUT)
from .pwa import EvalResult, seq_matvec


class Precision(Enum):
    FP64 = "fp64"
    FP32 = "fp32"

    @property
    def dtype(self):
        return np.float64 if self is Precision.FP64 else np.float32


@dataclass
class ForwardTrace:
    """Per-layer outputs of one dense forward pass, for diagnostics."""

    layer_outputs: list[np.ndarray]
    selected_region: int | None


def _layer_arrays(net: Network, prec: Precision):
    if prec is Precision.FP64:
        return [(layer.weights, layer.bias) for layer in net.layers]
    key = "layers_fp32"
    if key not in net.cache:
        net.cache[key] = [(layer.weights.astype(np.float32),
                           layer.bias.astype(np.float32))
                          for layer in net.layers]
    return net.cache[key]


def _selector_index(selector: np.ndarray) -> int | None:
    hits = np.flatnonzero(selector == 1.0)
    return int(hits[0]) if hits.size else None


def _check_input(net: Network, x, dtype) -> np.ndarray:
    x = np.asarray(x, dtype=dtype)
    if x.shape != (net.n,):
        raise ValueError(f"input has shape {x.shape}, expected ({net.n},)")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite input")
    return x


def _run_layers(net: Network, x: np.ndarray, prec: Precision,
                record: bool = False):
    # Binary-step layers go through the fixed column-order kernel so their
    # comparisons match the naive evaluator bit for bit. The remaining
    # layers see integer-exact inputs (selector sums) or are covered by
    # the cross-path tolerance, so they use plain dense products.
    arrays = _layer_arrays(net, prec)
    dtype = prec.dtype
    prev = x
    selector = None
    outputs = []
    for idx, (layer, (W, B)) in enumerate(zip(net.layers, arrays)):
        inp = prev if layer.input_source != PREV_CONCAT_INPUT \
            else np.concatenate([prev, x])
        act = layer.activation
        if act is Activation.BSF:
            z = seq_matvec(W, inp) + B
        else:
            z = W @ inp + B
        if act is Activation.BSF:
            out = (z >= 0).astype(dtype)
        elif act is Activation.RELU:
            out = np.maximum(z, 0)
        elif act is Activation.LINEAR:
            out = z
        else:  # HADAMARD_GATE: multiply by the expanded one-hot selector
            out = z * np.repeat(selector, net.m)
        if idx == 1 and net.kind == KIND_CHECKER:
            selector = out
        if idx == 2 and net.kind in (KIND_YANN, KIND_YANN_L):
            selector = out
        if record:
            outputs.append(out)
        prev = out
    return prev, selector, outputs


def forward_dense(net: Network, x, prec: Precision = Precision.FP64
                  ) -> EvalResult:
    """Reference forward pass; the ground-truth semantics of the network."""
    x = _check_input(net, x, prec.dtype)
    out, selector, _ = _run_layers(net, x, prec)
    return EvalResult(out, _selector_index(selector))


def forward_trace(net: Network, x, prec: Precision = Precision.FP64
                  ) -> ForwardTrace:
    """Dense pass that keeps every layer's output."""
    x = _check_input(net, x, prec.dtype)
    _, selector, outputs = _run_layers(net, x, prec, record=True)
    return ForwardTrace(outputs, _selector_index(selector))


@dataclass
class _StructuredData:
    W1: np.ndarray
    B1: np.ndarray
    starts: np.ndarray
    q_blocks: np.ndarray
    gains: np.ndarray    # (p, m, n)
    offsets: np.ndarray  # (p, m)


def _structured_data(net: Network, prec: Precision) -> _StructuredData:
    key = f"structured_{prec.value}"
    if key in net.cache:
        return net.cache[key]
    if net.structure is None or "q_blocks" not in net.structure:
        raise ValueError("network carries no structure descriptor")
    if net.kind == KIND_CHECKER:
        raise ValueError("structured path needs a selector and evaluation "
                         "stack; checker networks have neither")
    q_blocks = np.asarray(net.structure["q_blocks"], dtype=np.int64)
    starts = np.concatenate([[0], np.cumsum(q_blocks)[:-1]])
    m, n, p = net.m, net.n, net.p
    if net.kind == KIND_YANN:
        l4 = net.layers[3]
        gains = np.empty((p, m, n))
        offsets = np.empty((p, m))
        for k in range(p):
            for j in range(m):
                pos = 2 * m * k + 2 * j
                gains[k, j] = l4.weights[pos, p:]
                # bias was stored as offset - M; the gate weight is M
                offsets[k, j] = l4.bias[pos] + l4.weights[pos, k]
    else:
        bank = net.layers[3]
        gains = bank.weights[:, p:].reshape(p, m, n).copy()
        offsets = bank.bias.reshape(p, m).copy()
    dtype = prec.dtype
    data = _StructuredData(net.layers[0].weights.astype(dtype, copy=False),
                           net.layers[0].bias.astype(dtype, copy=False),
                           starts, q_blocks,
                           gains.astype(dtype, copy=False),
                           offsets.astype(dtype, copy=False))
    net.cache[key] = data
    return data


def forward_structured(net: Network, x, prec: Precision = Precision.FP64
                       ) -> EvalResult:
    """Fast path: stacked inequality check, block counts, first-one scan,
    then only the selected piece's affine map."""
    data = _structured_data(net, prec)
    x = _check_input(net, x, prec.dtype)
    z = seq_matvec(data.W1, x) + data.B1
    satisfied = (z >= 0).astype(np.int64)
    counts = np.add.reduceat(satisfied, data.starts)
    hits = np.flatnonzero(counts == data.q_blocks)
    if hits.size == 0:
        return EvalResult(np.zeros(net.m, dtype=prec.dtype), None)
    k = int(hits[0])
    u = seq_matvec(data.gains[k], x) + data.offsets[k]
    return EvalResult(u, k)


def forward_batch(net: Network, xs, prec: Precision = Precision.FP64,
                  mode: str = "dense", with_regions: bool = False):
    """Evaluate N points; returns the N x m output matrix.

    Dense mode runs whole-batch matrix products; structured mode applies
    the per-point fast path row by row. ``with_regions`` additionally
    returns the selected region per row, -1 where no region matched.
    """
    dtype = prec.dtype
    xs = np.asarray(xs, dtype=dtype)
    if xs.ndim != 2 or xs.shape[1] != net.n:
        raise ValueError(f"batch has shape {xs.shape}, expected (N, {net.n})")
    if not np.all(np.isfinite(xs)):
        raise ValueError("non-finite input")
    if mode == "structured":
        outs = np.empty((xs.shape[0], net.m), dtype=dtype)
        regions = np.full(xs.shape[0], -1, dtype=np.int64)
        for i in range(xs.shape[0]):
            res = forward_structured(net, xs[i], prec)
            outs[i] = res.output
            if res.region_index is not None:
                regions[i] = res.region_index
        return (outs, regions) if with_regions else outs
    if mode != "dense":
        raise ValueError(f"unknown batch mode {mode!r}")

    arrays = _layer_arrays(net, prec)
    prev = xs
    selector = None
    for idx, (layer, (W, B)) in enumerate(zip(net.layers, arrays)):
        inp = prev if layer.input_source != PREV_CONCAT_INPUT \
            else np.hstack([prev, xs])
        z = inp @ W.T + B
        act = layer.activation
        if act is Activation.BSF:
            out = (z >= 0).astype(dtype)
        elif act is Activation.RELU:
            out = np.maximum(z, 0)
        elif act is Activation.LINEAR:
            out = z
        else:
            out = z * np.repeat(selector, net.m, axis=1)
        if idx == 1 and net.kind == KIND_CHECKER:
            selector = out
        if idx == 2 and net.kind in (KIND_YANN, KIND_YANN_L):
            selector = out
        prev = out
    if not with_regions:
        return prev
    hit = selector == 1.0
    regions = np.where(hit.any(axis=1), hit.argmax(axis=1), -1).astype(np.int64)
    return prev, regions


# ---------------------------------------------------------------------------
# Batch CSV: input header x0..x{n-1}, output header u0..u{m-1},region
# (region left blank where no region contained the point)
# ---------------------------------------------------------------------------

def read_points_csv(path, n: int) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        expected = [f"x{i}" for i in range(n)]
        if [h.strip() for h in header] != expected:
            raise ValueError(f"bad CSV header {header}, expected {expected}")
        rows = [[float(v) for v in row] for row in reader if row]
    return np.asarray(rows, dtype=float).reshape(-1, n)


def write_batch_csv(path, outputs: np.ndarray, regions: np.ndarray) -> None:
    m = outputs.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"u{j}" for j in range(m)] + ["region"])
        for row, region in zip(outputs, regions):
            writer.writerow([repr(float(v)) for v in row]
                            + ["" if region < 0 else int(region)])
