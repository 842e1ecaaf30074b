"""Dense numeric kernels on float64: a minimal reverse-mode tape, MLP layers,
activations, cross-entropy losses, SGD with momentum, and a central
finite-difference gradient checker.

Everything above this module is model logic; everything here is arithmetic.
The tape is deliberately small: each op records its parents and a closure
that maps the output gradient to parent gradients.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
from scipy import sparse

PROB_EPS = 1e-12  # probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before any log


class NumericError(RuntimeError):
    """Raised when training arithmetic produces non-finite values."""


class Tensor:
    """A node in the reverse-mode graph wrapping a float64 ndarray."""

    __slots__ = ("data", "parents", "grad_fn", "name")

    def __init__(self, data, parents=(), grad_fn=None, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = tuple(parents)
        self.grad_fn = grad_fn
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        tag = f" {self.name}" if self.name else ""
        return f"Tensor{tag}(shape={self.data.shape})"


def constant(data) -> Tensor:
    return Tensor(data)


def backward(root: Tensor) -> dict[Tensor, np.ndarray]:
    """Gradients of a scalar root with respect to every tensor in its graph."""
    if root.data.shape != ():
        raise ValueError("backward expects a scalar loss")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    grads: dict[Tensor, np.ndarray] = {root: np.array(1.0)}
    for node in reversed(topo):
        g = grads.get(node)
        if g is None or node.grad_fn is None:
            continue
        for parent, pg in zip(node.parents, node.grad_fn(g)):
            if pg is None:
                continue
            acc = grads.get(parent)
            grads[parent] = pg if acc is None else acc + pg
    return grads


# ---------------------------------------------------------------------------
# primitive ops


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return Tensor(
        a.data @ b.data,
        (a, b),
        lambda g: (g @ b.data.T, a.data.T @ g),
    )


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add; ``b`` may be a 1-D bias broadcast over rows."""
    if a.data.shape == b.data.shape:
        return Tensor(a.data + b.data, (a, b), lambda g: (g, g))
    if b.data.ndim == 1 and a.data.ndim == 2 and a.data.shape[1] == b.data.shape[0]:
        return Tensor(a.data + b.data, (a, b), lambda g: (g, g.sum(axis=0)))
    raise ValueError(f"incompatible shapes {a.data.shape} and {b.data.shape}")


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.data.shape != b.data.shape:
        raise ValueError(f"incompatible shapes {a.data.shape} and {b.data.shape}")
    return Tensor(a.data - b.data, (a, b), lambda g: (g, -g))


def scale(a: Tensor, c: float) -> Tensor:
    return Tensor(a.data * c, (a,), lambda g: (g * c,))


def relu(a: Tensor) -> Tensor:
    mask = a.data > 0
    return Tensor(np.where(mask, a.data, 0.0), (a,), lambda g: (g * mask,))


def concat_cols(a: Tensor, b: Tensor) -> Tensor:
    na = a.data.shape[1]
    return Tensor(
        np.concatenate([a.data, b.data], axis=1),
        (a, b),
        lambda g: (g[:, :na], g[:, na:]),
    )


def concat_rows(a: Tensor, b: Tensor) -> Tensor:
    na = a.data.shape[0]
    return Tensor(
        np.concatenate([a.data, b.data], axis=0),
        (a, b),
        lambda g: (g[:na], g[na:]),
    )


def spmm(s: sparse.csr_matrix, a: Tensor) -> Tensor:
    """Constant sparse matrix times tensor."""
    st = s.T.tocsr()
    return Tensor(s @ a.data, (a,), lambda g: (st @ g,))


def column(a: Tensor, j: int) -> Tensor:
    def grad_fn(g):
        out = np.zeros_like(a.data)
        out[:, j] = g
        return (out,)

    return Tensor(a.data[:, j], (a,), grad_fn)


def softmax_rows(a: Tensor) -> Tensor:
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)
    return Tensor(
        p, (a,), lambda g: (p * (g - (g * p).sum(axis=1, keepdims=True)),)
    )


def sigmoid(a: Tensor) -> Tensor:
    p = 0.5 * (1.0 + np.tanh(0.5 * a.data))  # numerically stable logistic
    return Tensor(p, (a,), lambda g: (g * p * (1.0 - p),))


def pair_outer(e: Tensor, y: Tensor) -> Tensor:
    """Row-wise flattened outer product; entry layout is ``a * C + c``."""
    n, d = e.data.shape
    c = y.data.shape[1]
    out = (e.data[:, :, None] * y.data[:, None, :]).reshape(n, d * c)

    def grad_fn(g):
        cube = g.reshape(n, d, c)
        return (
            (cube * y.data[:, None, :]).sum(axis=2),
            (cube * e.data[:, :, None]).sum(axis=1),
        )

    return Tensor(out, (e, y), grad_fn)


def masked_mean_row_sqnorm(diff: Tensor, keep: np.ndarray, denom: int) -> Tensor:
    """sum_i keep_i * ||diff_i||^2 / denom, with ``keep`` a constant 0/1 mask."""
    keep = np.asarray(keep, dtype=np.float64)
    value = float(((diff.data**2).sum(axis=1) * keep).sum() / denom)
    return Tensor(
        value, (diff,), lambda g: ((2.0 / denom) * g * keep[:, None] * diff.data,)
    )


# ---------------------------------------------------------------------------
# composite kernels


def mlp_forward(
    layers: list[tuple[Tensor, Tensor]], x: Tensor
) -> tuple[Tensor, list[Tensor]]:
    """Stack of affine layers with ReLU after each; returns the output and the
    per-layer pre-activations (retained on the tape for the backward pass)."""
    preacts = []
    h = x
    for weight, bias in layers:
        z = add(matmul(h, weight), bias)
        preacts.append(z)
        h = relu(z)
    return h, preacts


def activation_apply(kind: str, logits: Tensor) -> Tensor:
    """Row-wise softmax (with max subtraction) or elementwise sigmoid."""
    kind = kind.lower()
    if kind == "softmax":
        return softmax_rows(logits)
    if kind == "sigmoid":
        return sigmoid(logits)
    raise ValueError(f"unknown activation {kind!r}")


def cross_entropy(pred: Tensor, truth: np.ndarray, mode: str) -> Tensor:
    """Mean cross-entropy between predicted probabilities and 0/1 truth.

    ``multiclass`` averages -sum_c y log p over rows; ``multilabel`` averages
    the per-cell binary cross-entropy over rows and labels.
    """
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape != pred.data.shape:
        raise ValueError(f"truth shape {truth.shape} != pred shape {pred.data.shape}")
    p = np.clip(pred.data, PROB_EPS, 1.0 - PROB_EPS)
    inside = (pred.data > PROB_EPS) & (pred.data < 1.0 - PROB_EPS)
    n = pred.data.shape[0]
    if mode == "multiclass":
        value = -(truth * np.log(p)).sum() / n
        base = -(truth / p) / n
    elif mode == "multilabel":
        cells = truth.size
        value = -(truth * np.log(p) + (1.0 - truth) * np.log(1.0 - p)).sum() / cells
        base = (-(truth / p) + (1.0 - truth) / (1.0 - p)) / cells
    else:
        raise ValueError(f"unknown cross-entropy mode {mode!r}")
    return Tensor(value, (pred,), lambda g: (g * base * inside,))


def binary_cross_entropy(p_hat: Tensor, truth: np.ndarray) -> Tensor:
    """Mean binary cross-entropy of a probability vector against 0/1 truth."""
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape != p_hat.data.shape:
        raise ValueError("shape mismatch between probabilities and truth")
    p = np.clip(p_hat.data, PROB_EPS, 1.0 - PROB_EPS)
    inside = (p_hat.data > PROB_EPS) & (p_hat.data < 1.0 - PROB_EPS)
    n = p.shape[0]
    value = -(truth * np.log(p) + (1.0 - truth) * np.log(1.0 - p)).sum() / n
    base = (-(truth / p) + (1.0 - truth) / (1.0 - p)) / n
    return Tensor(value, (p_hat,), lambda g: (g * base * inside,))


# ---------------------------------------------------------------------------
# parameters and optimization


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def parameter(rng: np.random.Generator, fan_in: int, fan_out: int, name: str) -> Tensor:
    return Tensor(glorot_uniform(rng, fan_in, fan_out), name=name)


def bias(fan_out: int, name: str) -> Tensor:
    return Tensor(np.zeros(fan_out), name=name)


class ParamStore:
    """Named trainable tensors with matching momentum velocity buffers."""

    def __init__(self, params: dict[str, Tensor]):
        self.params = dict(params)
        self.velocity = {k: np.zeros_like(t.data) for k, t in self.params.items()}

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def names(self) -> list[str]:
        return list(self.params)

    def gather(self, grads: dict[Tensor, np.ndarray]) -> dict[str, np.ndarray]:
        """Extract per-name gradients from a backward() result (missing -> 0)."""
        out = {}
        for name, t in self.params.items():
            g = grads.get(t)
            out[name] = np.zeros_like(t.data) if g is None else g
        return out


def sgd_momentum_step(
    store: ParamStore,
    grads: dict[str, np.ndarray],
    lr: float,
    momentum: float,
) -> None:
    """v <- momentum * v + g;  theta <- theta - lr * v (in place)."""
    for name, t in store.params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(t.data)
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient for parameter {name!r}")
        v = store.velocity[name]
        v *= momentum
        v += g
        t.data -= lr * v


def finite_difference_check(
    loss_fn,
    store: ParamStore,
    analytic: dict[str, np.ndarray],
    epsilon: float = 1e-5,
    max_coords: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """Max relative error between analytic gradients and central differences.

    ``loss_fn(store) -> float`` must be deterministic; it is evaluated twice at
    the base point to detect hidden randomness.  When ``max_coords`` is set,
    at most that many coordinates per parameter are probed (rng-sampled).
    """
    base = loss_fn(store)
    if loss_fn(store) != base:
        raise NumericError("loss function is not deterministic")
    worst = 0.0
    for name, tensor in store.params.items():
        gan = analytic[name]
        flat = tensor.data.ravel()
        n = flat.size
        coords = np.arange(n)
        if max_coords is not None and n > max_coords:
            if rng is None:
                rng = np.random.default_rng(0)
            coords = rng.choice(n, size=max_coords, replace=False)
        for idx in coords:
            saved = flat[idx]
            flat[idx] = saved + epsilon
            plus = loss_fn(store)
            flat[idx] = saved - epsilon
            minus = loss_fn(store)
            flat[idx] = saved
            gfd = (plus - minus) / (2.0 * epsilon)
            ga = gan.ravel()[idx]
            err = abs(gfd - ga) / max(1.0, abs(gfd), abs(ga))
            if err > worst:
                worst = err
    return worst


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path: str | Path, store: ParamStore, config: dict) -> None:
    """JSON checkpoint: every named parameter plus an echo of the config."""
    payload = {
        "config": config,
        "params": {
            name: {"shape": list(t.data.shape), "data": t.data.ravel().tolist()}
            for name, t in store.params.items()
        },
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8"
    )


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    params = {
        name: np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
        for name, entry in payload["params"].items()
    }
    return params, payload["config"]
