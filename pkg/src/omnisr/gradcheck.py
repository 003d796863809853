"""Central finite-difference gradient verification.

The reference path runs in 64-bit precision, independent of the 32-bit
training path, so the oracle stays decoupled from what it checks.
"""

from __future__ import annotations

import numpy as np

from .tensor import Tape, Tensor


def _as64(t) -> Tensor:
    """Float64 shadow of a Tensor or bare array (arrays become leaf Tensors)."""
    if isinstance(t, Tensor):
        return Tensor(t.data.astype(np.float64), requires_grad=t.requires_grad)
    return Tensor(np.asarray(t, dtype=np.float64), requires_grad=True)


def tape_gradients(fn, inputs: list[Tensor]) -> tuple[float, list[np.ndarray]]:
    """Run ``loss = fn(*inputs)`` under a tape and return (loss, grads)."""
    for t in inputs:
        t.grad = None
    with Tape() as tape:
        loss = fn(*inputs)
    tape.backward(loss)
    return loss.item(), [t.grad.copy() if t.grad is not None else np.zeros_like(t.data)
                         for t in inputs]


def fd_gradient(fn, inputs: list[Tensor], wrt: int, index, h: float) -> float:
    """Central finite difference of ``fn`` w.r.t. one scalar entry."""
    base = inputs[wrt].data
    orig = base[index]
    base[index] = orig + h
    fp = fn(*inputs).item()
    base[index] = orig - h
    fm = fn(*inputs).item()
    base[index] = orig
    return (fp - fm) / (2.0 * h)


def max_rel_error(fn, inputs: list[Tensor], h: float | None = None,
                  sample: int | None = None, seed: int = 0) -> float:
    """Max relative error between tape gradients and central differences.

    All inputs are shadowed to float64.  ``sample`` limits the number of
    checked entries per input (uniformly chosen); None checks every entry.
    ``h`` defaults to an adaptive per-entry step.
    """
    shadows = [_as64(t) for t in inputs]
    _, grads = tape_gradients(fn, shadows)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i, t in enumerate(shadows):
        if not t.requires_grad:
            continue
        n = t.data.size
        if sample is None or sample >= n:
            picks = np.arange(n)
        else:
            picks = rng.choice(n, size=sample, replace=False)
        for flat in picks:
            index = np.unravel_index(flat, t.data.shape)
            step = h if h is not None else 1e-4 * max(1.0, abs(t.data[index]))
            fd = fd_gradient(fn, shadows, i, index, step)
            an = grads[i][index]
            denom = max(abs(fd), abs(an), 1e-3)
            worst = max(worst, abs(fd - an) / denom)
    return worst
