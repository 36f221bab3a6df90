"""Fixed-topology MLP with ReLU hidden layers and hand-written reverse-mode gradients."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import LifecycleError, NumericError, ShapeError

CHECKPOINT_FORMAT = "ecoedgetwin-mlp"
CHECKPOINT_VERSION = 1


@dataclass
class GradientSet:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self):
        return [*self.weights, *self.biases]

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays())

    def scaled(self, c: float) -> "GradientSet":
        return GradientSet([c * w for w in self.weights], [c * b for b in self.biases])

    def __add__(self, other: "GradientSet") -> "GradientSet":
        return GradientSet([a + b for a, b in zip(self.weights, other.weights)],
                           [a + b for a, b in zip(self.biases, other.biases)])


class Network:
    def __init__(self, layer_dims: Sequence[int], weights: list[np.ndarray], biases: list[np.ndarray]):
        self.layer_dims = tuple(int(d) for d in layer_dims)
        if len(weights) != len(self.layer_dims) - 1 or len(biases) != len(weights):
            raise ShapeError("need one weight matrix and bias vector per layer")
        for l, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (self.layer_dims[l + 1], self.layer_dims[l]) or b.shape != (self.layer_dims[l + 1],):
                raise ShapeError(f"layer {l} parameters do not match dims {self.layer_dims}")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise NumericError(f"layer {l} has nonfinite parameters")
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self._cache = None

    @classmethod
    def init(cls, layer_dims: Sequence[int], rng: np.random.Generator) -> "Network":
        """Glorot-uniform weights, zero biases."""
        ws, bs = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            lim = np.sqrt(6.0 / (fan_in + fan_out))
            ws.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
            bs.append(np.zeros(fan_out))
        return cls(layer_dims, ws, bs)

    @classmethod
    def zeros(cls, layer_dims: Sequence[int]) -> "Network":
        return cls(layer_dims, [np.zeros((o, i)) for i, o in zip(layer_dims[:-1], layer_dims[1:])],
                   [np.zeros(o) for o in layer_dims[1:]])

    @property
    def n_in(self) -> int:
        return self.layer_dims[0]

    @property
    def n_out(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> "Network":
        return Network(self.layer_dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x) -> np.ndarray:
        a = np.asarray(x, dtype=float)
        if a.shape != (self.n_in,):
            raise ShapeError(f"expected input of length {self.n_in}, got shape {a.shape}")
        acts, pre = [a], []
        last = len(self.weights) - 1
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = w @ a + b
            pre.append(z)
            a = z if l == last else np.maximum(z, 0.0)
            acts.append(a)
        self._cache = (acts, pre)
        return a

    def backward(self, upstream) -> GradientSet:
        """Gradients of <upstream, output> for the most recent forward pass."""
        if self._cache is None:
            raise LifecycleError("backward() needs a cached forward pass")
        acts, pre = self._cache
        delta = np.asarray(upstream, dtype=float)
        if delta.shape != (self.n_out,):
            raise ShapeError(f"upstream gradient must have length {self.n_out}")
        n = len(self.weights)
        dws, dbs = [None] * n, [None] * n
        for l in range(n - 1, -1, -1):
            dws[l] = np.outer(delta, acts[l])
            dbs[l] = delta.copy()
            if l:
                delta = (self.weights[l].T @ delta) * (pre[l - 1] > 0)
        return GradientSet(dws, dbs)

    def cached_input(self):
        return None if self._cache is None else self._cache[0][0]

    def to_dict(self) -> dict:
        return {"layer_dims": list(self.layer_dims),
                "weights": [w.ravel().tolist() for w in self.weights],
                "biases": [b.tolist() for b in self.biases]}

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        dims = d["layer_dims"]
        ws = [np.array(w, dtype=float).reshape(o, i) for w, i, o in zip(d["weights"], dims[:-1], dims[1:])]
        return cls(dims, ws, [np.array(b, dtype=float) for b in d["biases"]])


def forward(net: Network, x) -> np.ndarray:
    return net.forward(x)


def backward(net: Network, x, upstream) -> GradientSet:
    cached = net.cached_input()
    if cached is None or not np.array_equal(cached, np.asarray(x, dtype=float)):
        raise LifecycleError("no cached forward pass for this input")
    return net.backward(upstream)


def apply_update(net: Network, grads: GradientSet, rate: float, direction: str = "descent") -> Network:
    if not rate > 0:
        raise ValueError("learning rate must be > 0")
    if direction not in ("ascent", "descent"):
        raise ValueError("direction must be 'ascent' or 'descent'")
    if not grads.is_finite():
        raise NumericError("nonfinite gradient; update refused")
    sign = rate if direction == "ascent" else -rate
    return Network(net.layer_dims,
                   [w + sign * g for w, g in zip(net.weights, grads.weights)],
                   [b + sign * g for b, g in zip(net.biases, grads.biases)])


def softmax_policy(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=float)
    e = np.exp(z - z.max())
    return e / e.sum()


def save_checkpoint(path: str | Path, nets: dict[str, Network], meta: dict | None = None) -> None:
    doc = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION, "meta": meta or {},
           "networks": {name: net.to_dict() for name, net in nets.items()}}
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path: str | Path, expected: dict[str, Sequence[int]] | None = None) -> dict[str, Network]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != CHECKPOINT_FORMAT or doc.get("version") != CHECKPOINT_VERSION:
        raise ShapeError(f"{path} is not a version-{CHECKPOINT_VERSION} {CHECKPOINT_FORMAT} checkpoint")
    nets = {name: Network.from_dict(d) for name, d in doc["networks"].items()}
    for name, dims in (expected or {}).items():
        if name not in nets:
            raise ShapeError(f"checkpoint has no network {name!r}")
        if nets[name].layer_dims != tuple(dims):
            raise ShapeError(f"{name}: checkpoint dims {nets[name].layer_dims} != expected {tuple(dims)}")
    return nets
