"""A small fully connected network with hand-written backprop, plus Adam.

Layer ``k`` maps ``x @ W[k] + b[k]`` with ``W[k]`` of shape
``(widths[k], widths[k+1])``, so the column count of one layer equals the row
count of the next. Hidden layers use ReLU or tanh; the head is identity or
sigmoid.

Initialisation draws from the package :class:`~discgen.rng.Prng`: He-uniform
``U(+-sqrt(6/fan_in))`` for layers followed by ReLU, Xavier-uniform
``U(+-sqrt(6/(fan_in+fan_out)))`` for layers followed by tanh and for the
output layer. Biases start at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import NonFiniteGradient, ShapeMismatch
from .rng import Prng

HIDDEN = ("relu", "tanh")
HEADS = ("identity", "sigmoid")


class Mlp:
    def __init__(self, widths, weights, biases, hidden="relu", head="identity"):
        widths = [int(w) for w in widths]
        if len(widths) < 2 or min(widths) < 1:
            raise ShapeMismatch(f"bad layer widths {widths}")
        if hidden not in HIDDEN or head not in HEADS:
            raise ValueError(f"unknown activation {hidden!r}/{head!r}")
        if len(weights) != len(widths) - 1 or len(biases) != len(widths) - 1:
            raise ShapeMismatch("need one weight matrix and bias per layer")
        for k, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (widths[k], widths[k + 1]) or b.shape != (widths[k + 1],):
                raise ShapeMismatch(f"layer {k}: got W{w.shape}, b{b.shape}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {k} has non-finite parameters")
        self.widths = widths
        self.hidden = hidden
        self.head = head
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]

    @classmethod
    def initialise(cls, widths, prng: Prng, hidden="relu", head="identity") -> "Mlp":
        weights, biases = [], []
        last = len(widths) - 2
        for k in range(len(widths) - 1):
            fan_in, fan_out = widths[k], widths[k + 1]
            if k < last and hidden == "relu":
                bound = np.sqrt(6.0 / fan_in)
            else:
                bound = np.sqrt(6.0 / (fan_in + fan_out))
            weights.append((2.0 * prng.uniform((fan_in, fan_out)) - 1.0) * bound)
            biases.append(np.zeros(fan_out))
        return cls(widths, weights, biases, hidden, head)

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def params(self) -> list[np.ndarray]:
        """Flat parameter list ``[W0, b0, W1, b1, ...]``."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def with_params(self, params) -> "Mlp":
        return Mlp(self.widths, list(params[0::2]), list(params[1::2]), self.hidden, self.head)

    def copy(self) -> "Mlp":
        return self.with_params([p.copy() for p in self.params])

    def _act(self, z):
        return np.maximum(z, 0.0) if self.hidden == "relu" else np.tanh(z)

    def forward_cache(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim != 2 or x.shape[1] != self.widths[0]:
            raise ShapeMismatch(f"input shape {x.shape}, expected (batch, {self.widths[0]})")
        inputs, pre = [], []
        h = x
        for k in range(self.n_layers):
            inputs.append(h)
            z = h @ self.weights[k] + self.biases[k]
            pre.append(z)
            if k < self.n_layers - 1:
                h = self._act(z)
            else:
                h = expit(z) if self.head == "sigmoid" else z
        return h, (inputs, pre, h)

    def forward(self, x) -> np.ndarray:
        return self.forward_cache(x)[0]

    def logits(self, x) -> np.ndarray:
        """Output before the head activation."""
        return self.forward_cache(x)[1][1][-1]

    def backward(self, cache, grad_out, wrt_logits=False):
        """Reverse-mode gradients of ``sum(grad_out * output)``.

        Returns ``(param_grads, grad_input)`` with ``param_grads`` laid out
        like :attr:`params`. With ``wrt_logits`` the upstream gradient refers
        to the pre-head output, which lets callers fold a sigmoid into a
        numerically stable loss.
        """
        inputs, pre, out = cache
        g = np.asarray(grad_out, dtype=float)
        if g.shape != out.shape:
            raise ShapeMismatch(f"upstream gradient {g.shape} vs output {out.shape}")
        if self.head == "sigmoid" and not wrt_logits:
            g = g * out * (1.0 - out)
        grads = [None] * (2 * self.n_layers)
        for k in range(self.n_layers - 1, -1, -1):
            grads[2 * k] = inputs[k].T @ g
            grads[2 * k + 1] = g.sum(axis=0)
            g = g @ self.weights[k].T
            if k > 0:
                if self.hidden == "relu":
                    g = g * (pre[k - 1] > 0.0)
                else:
                    g = g * (1.0 - inputs[k] ** 2)
        return grads, g

    def to_dict(self) -> dict:
        return {
            "widths": self.widths,
            "hidden": self.hidden,
            "head": self.head,
            "layers": [
                {"shape": list(w.shape), "weights": w.ravel().tolist(), "bias": b.tolist()}
                for w, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Mlp":
        ws = [np.array(l["weights"], dtype=float).reshape(l["shape"]) for l in d["layers"]]
        bs = [np.array(l["bias"], dtype=float) for l in d["layers"]]
        return cls(d["widths"], ws, bs, d["hidden"], d["head"])


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)

    @classmethod
    def for_params(cls, params, **hyper) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params], **hyper)


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update. Returns ``(new_params, new_state)``."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ShapeMismatch("params, grads and moments differ in length")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise ShapeMismatch(f"shape {p.shape} vs grad {g.shape} vs moment {m.shape}")
        if not np.isfinite(g).all():
            raise NonFiniteGradient("gradient contains NaN or inf")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
    new_p, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_p.append(p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(state.lr, b1, b2, state.eps, t, new_m, new_v)
