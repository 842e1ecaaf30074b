"""Independent reference computations used by the tests.

Everything here is written the slow, literal way (dense matrices, scalar
loops) so it cannot share a mistake with the library's sparse/vectorized
paths.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import sparse

from crossnode.graphs import AttributedNetwork


def dense_aggregate_reference(t1: np.ndarray, steps: int) -> np.ndarray:
    """Sum of scaled dense matrix powers, term k being t1^k / k."""
    total = np.zeros_like(t1)
    for k in range(1, steps + 1):
        total += np.linalg.matrix_power(t1, k) / k
    return total


def dense_ppmi_reference(t: np.ndarray) -> np.ndarray:
    """Literal scalar-loop transcription of the PPMI definition."""
    n = t.shape[0]
    out = np.zeros((n, n))
    row_sums = t.sum(axis=1)
    for i in range(n):
        if row_sums[i] == 0:
            continue
        for j in range(n):
            if t[i, j] <= 0:
                continue
            numer = t[i, j] / row_sums[i]
            denom = 0.0
            for g in range(n):
                if row_sums[g] > 0:
                    denom += t[g, j] / row_sums[g]
            denom /= n
            out[i, j] = max(math.log(numer / denom), 0.0)
    return out


def masked_renormalize_reference(
    prox: np.ndarray, ids: np.ndarray, labels: np.ndarray | None
) -> np.ndarray:
    """Scalar-loop propagation weights over a node subset."""
    m = len(ids)
    out = np.zeros((m, m))
    for a, i in enumerate(ids):
        total = 0.0
        for b, j in enumerate(ids):
            if i == j:
                continue
            if labels is not None and np.dot(labels[i], labels[j]) < 1:
                continue
            total += prox[i, j]
        if total == 0:
            continue
        for b, j in enumerate(ids):
            if i == j:
                continue
            if labels is not None and np.dot(labels[i], labels[j]) < 1:
                continue
            out[a, b] = prox[i, j] / total
    return out


def mlp_reference(layers, x: np.ndarray) -> np.ndarray:
    """Scalar-loop MLP forward (affine + ReLU per layer)."""
    h = x
    for weight, bias_vec in layers:
        w = weight.data if hasattr(weight, "data") else weight
        b = bias_vec.data if hasattr(bias_vec, "data") else bias_vec
        z = np.zeros((h.shape[0], w.shape[1]))
        for r in range(h.shape[0]):
            for c in range(w.shape[1]):
                acc = b[c]
                for k in range(h.shape[1]):
                    acc += h[r, k] * w[k, c]
                z[r, c] = max(acc, 0.0)
        h = z
    return h


def cross_entropy_reference(pred: np.ndarray, truth: np.ndarray, mode: str) -> float:
    """Scalar-loop cross-entropy with the library's probability clamp."""
    eps = 1e-12
    n, c = pred.shape
    total = 0.0
    if mode == "multiclass":
        for i in range(n):
            for j in range(c):
                p = min(max(pred[i, j], eps), 1 - eps)
                total -= truth[i, j] * math.log(p)
        return total / n
    for i in range(n):
        for j in range(c):
            p = min(max(pred[i, j], eps), 1 - eps)
            total -= truth[i, j] * math.log(p) + (1 - truth[i, j]) * math.log(1 - p)
    return total / (n * c)


def label_refined_logits_reference(
    emb: np.ndarray, w: np.ndarray, b: np.ndarray, weights: np.ndarray
) -> np.ndarray:
    """Scalar-loop own-plus-weighted-neighbor logits."""
    n = emb.shape[0]
    z = emb @ w + b
    out = np.zeros_like(z)
    for i in range(n):
        acc = z[i].copy()
        for j in range(n):
            acc += weights[i, j] * z[j]
        out[i] = acc
    return out


def random_network(
    rng: np.random.Generator,
    num_nodes: int,
    num_attrs: int = 4,
    num_labels: int = 2,
    edge_prob: float = 0.2,
) -> AttributedNetwork:
    """Erdos-Renyi network with random sparse attributes and one-hot labels.

    Small edge probabilities routinely produce isolated nodes, which is
    intentional: the zero-degree contracts need coverage.
    """
    draw = rng.random((num_nodes, num_nodes))
    upper = np.triu(draw < edge_prob, k=1)
    u, v = np.nonzero(upper)
    edges = np.stack([u, v], axis=1).astype(np.int64)
    attrs = sparse.csr_matrix(
        (rng.random((num_nodes, num_attrs)) < 0.4).astype(np.float64)
    )
    attrs.resize(num_nodes, num_attrs)
    classes = rng.integers(0, num_labels, size=num_nodes)
    labels = np.zeros((num_nodes, num_labels))
    labels[np.arange(num_nodes), classes] = 1.0
    return AttributedNetwork(
        num_nodes=num_nodes,
        num_attrs=num_attrs,
        num_labels=num_labels,
        multi_label=False,
        edges=edges,
        attributes=attrs,
        labels=labels,
    )
