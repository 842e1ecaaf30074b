"""Label-propagation node classifier.

Each node's label logits are refined by adding the proximity-weighted sum of
its neighbors' logits before the output activation.  On the labeled source
network the weights are label-masked, so logits only propagate between nodes
sharing a label.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .nn import Tensor
from .proximity import PropagationWeights


@dataclass
class ClassifierParams:
    weight: Tensor  # emb_dim x num_labels
    bias: Tensor

    def named(self) -> dict[str, Tensor]:
        return {"cls.W": self.weight, "cls.b": self.bias}


def init_classifier(
    rng: np.random.Generator, emb_dim: int, num_labels: int
) -> ClassifierParams:
    return ClassifierParams(
        weight=nn.parameter(rng, emb_dim, num_labels, "cls.W"),
        bias=nn.bias(num_labels, "cls.b"),
    )


def propagate_predictions(
    params: ClassifierParams,
    emb: Tensor,
    weights: PropagationWeights | None,
    phi: str,
) -> Tensor:
    """Label probabilities phi(z_i + sum_j w_ij z_j) with z = emb W + b.

    The neighbor logits are added unscaled.  An empty weight row (or
    ``weights=None``) leaves a node with phi of its own logits.
    """
    logits = nn.add(nn.matmul(emb, params.weight), params.bias)
    if weights is not None:
        logits = nn.add(logits, nn.spmm(weights.matrix, logits))
    return nn.activation_apply(phi, logits)


def classification_loss(yhat: Tensor, truth: np.ndarray, mode: str) -> Tensor:
    """Cross-entropy of refined source predictions against observed labels."""
    truth = np.asarray(truth, dtype=np.float64)
    if (truth.sum(axis=1) < 1).any():
        raise ValueError("classification loss requires a label on every row")
    return nn.cross_entropy(yhat, truth, mode)
