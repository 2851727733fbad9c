"""Trainable parameters, their initialization, and the Adam update."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor

ADAM_BETAS = (0.9, 0.999)
ADAM_EPS = 1e-8


class OptimizerError(RuntimeError):
    """Raised when an update cannot be applied safely (non-finite grads)."""


class Parameter:
    """A named trainable tensor together with its Adam moment estimates."""

    __slots__ = ("name", "tensor", "m", "v", "steps")

    def __init__(self, name: str, data):
        self.name = name
        self.tensor = Tensor(data, requires_grad=True)
        self.m = np.zeros(self.tensor.shape)
        self.v = np.zeros(self.tensor.shape)
        self.steps = 0

    @property
    def data(self):
        return self.tensor.data

    @property
    def grad(self):
        return self.tensor.grad

    def clear_grad(self):
        self.tensor.grad = None

    def __repr__(self):
        return "Parameter(%r, shape=%s)" % (self.name, self.tensor.shape)


class ParameterStore:
    """Ordered registry of parameters; insertion order defines checkpoint
    layout, so construction must be deterministic."""

    def __init__(self):
        self._params = {}

    def add(self, name: str, data) -> Parameter:
        if name in self._params:
            raise ValueError("duplicate parameter name %r" % name)
        p = Parameter(name, data)
        self._params[name] = p
        return p

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name) -> bool:
        return name in self._params

    def __iter__(self):
        return iter(self._params.values())

    def __len__(self):
        return len(self._params)

    def items(self):
        return self._params.items()

    def num_values(self) -> int:
        return sum(p.data.size for p in self)

    def snapshot(self) -> dict:
        return {name: p.data.copy() for name, p in self.items()}

    def restore(self, snap: dict) -> None:
        for name, p in self.items():
            p.tensor.data = snap[name].copy()


def glorot_uniform(rng: np.random.Generator, shape) -> np.ndarray:
    """Glorot/Xavier uniform init for weight matrices."""
    fan_in, fan_out = shape[0], shape[-1]
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def embedding_init(rng: np.random.Generator, shape) -> np.ndarray:
    """Normal embeddings scaled to keep row norms O(1): N(0, 1)/sqrt(dim)."""
    return rng.standard_normal(shape) / np.sqrt(shape[-1])


def adam_step(params, lr: float,
              betas=ADAM_BETAS, eps: float = ADAM_EPS) -> None:
    """One Adam update over ``params`` (any iterable of Parameter).

    Parameters without gradients are treated as having zero gradient (their
    moments still decay).  Non-finite gradients abort before any state is
    touched, so a failed step leaves the model unchanged.
    """
    params = list(params)
    b1, b2 = betas
    for p in params:
        g = p.grad
        if g is not None and not np.all(np.isfinite(g)):
            raise OptimizerError(
                "non-finite gradient for parameter %r" % p.name)
    for p in params:
        g = p.grad if p.grad is not None else 0.0
        p.steps += 1
        p.m = b1 * p.m + (1.0 - b1) * g
        p.v = b2 * p.v + (1.0 - b2) * np.square(g)
        m_hat = p.m / (1.0 - b1 ** p.steps)
        v_hat = p.v / (1.0 - b2 ** p.steps)
        p.tensor.data = p.data - lr * m_hat / (np.sqrt(v_hat) + eps)
        p.clear_grad()
