"""Minimal parameter-container base class and weight initializers."""

from __future__ import annotations

import math

import numpy as np

from .tensor import Tensor


class Module:
    """Container of parameters and sub-modules with deterministic naming.

    Parameters are discovered by walking instance attributes; names join
    attribute paths with dots (list entries by index), and the flattened map
    is iterated in lexicographic name order.
    """

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        found: dict[str, Tensor] = {}
        self._collect("", found)
        return sorted(found.items())

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def _collect(self, prefix: str, found: dict) -> None:
        for key in sorted(vars(self)):
            val = vars(self)[key]
            name = f"{prefix}{key}"
            if isinstance(val, Tensor) and val.requires_grad:
                if name in found:
                    raise ValueError(f"duplicate parameter name {name}")
                found[name] = val
            elif isinstance(val, Module):
                val._collect(name + ".", found)
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        item._collect(f"{name}.{i}.", found)
                    elif isinstance(item, Tensor) and item.requires_grad:
                        found[f"{name}.{i}"] = item

    def num_params(self) -> int:
        return sum(t.size for _, t in self.named_parameters())


def trunc_normal(rng: np.random.Generator, shape, std: float = 0.02) -> Tensor:
    """Truncated normal in [-2 std, 2 std] via resampling."""
    out = rng.normal(0.0, std, size=shape)
    bad = np.abs(out) > 2 * std
    while bad.any():
        out[bad] = rng.normal(0.0, std, size=int(bad.sum()))
        bad = np.abs(out) > 2 * std
    return Tensor(out.astype(np.float32), requires_grad=True)


def kaiming_uniform(rng: np.random.Generator, shape) -> Tensor:
    """Kaiming-uniform fan-in init for conv weights [Cout, Cin/g, KH, KW]."""
    fan_in = int(np.prod(shape[1:]))
    bound = math.sqrt(6.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape).astype(np.float32), requires_grad=True)


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=np.float32), requires_grad=True)


def ones(shape) -> Tensor:
    return Tensor(np.ones(shape, dtype=np.float32), requires_grad=True)
