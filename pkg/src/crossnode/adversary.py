"""Conditional domain discriminator and the reversed-gradient bookkeeping.

The discriminator sees the flattened outer product of each node's embedding
and its refined label distribution, so it can match class-conditional
structure across the two networks.  Training is a minmax game: the
discriminator descends its own loss at full strength while the encoder and
classifier receive that loss's gradient scaled by ``-lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn
from .nn import Tensor


@dataclass
class DiscriminatorParams:
    mlp: list[tuple[Tensor, Tensor]]  # (emb_dim * num_labels) -> hidden widths
    head: tuple[Tensor, Tensor]  # final hidden -> 2-way softmax

    def named(self) -> dict[str, Tensor]:
        out = {}
        for i, (w, b) in enumerate(self.mlp):
            out[f"disc.{i}.W"] = w
            out[f"disc.{i}.b"] = b
        out["disc.head.W"], out["disc.head.b"] = self.head
        return out


def init_discriminator(
    rng: np.random.Generator,
    emb_dim: int,
    num_labels: int,
    hidden: tuple[int, ...] = (128, 128),
) -> DiscriminatorParams:
    layers = []
    fan_in = emb_dim * num_labels
    for i, width in enumerate(hidden):
        layers.append(
            (
                nn.parameter(rng, fan_in, width, f"disc.{i}.W"),
                nn.bias(width, f"disc.{i}.b"),
            )
        )
        fan_in = width
    head = (nn.parameter(rng, fan_in, 2, "disc.head.W"), nn.bias(2, "disc.head.b"))
    return DiscriminatorParams(mlp=layers, head=head)


def conditioning_input(emb: Tensor, yhat: Tensor) -> Tensor:
    """Flattened outer product of embedding and label distribution.

    For embedding index a and class index c the output index is a * C + c, so
    a one-hot yhat places the embedding at stride positions of its class.
    """
    if emb.data.shape[0] != yhat.data.shape[0]:
        raise ValueError("embedding and prediction batches differ in length")
    return nn.pair_outer(emb, yhat)


def discriminator_predict(params: DiscriminatorParams, conditioned: Tensor) -> Tensor:
    """Per-node probability of coming from the target network."""
    hidden, _ = nn.mlp_forward(params.mlp, conditioned)
    w, b = params.head
    probs = nn.softmax_rows(nn.add(nn.matmul(hidden, w), b))
    return nn.column(probs, 1)


def domain_loss(d_hat: Tensor, d_true: np.ndarray) -> Tensor:
    """Mean binary cross-entropy of domain predictions (0 source, 1 target)."""
    return nn.binary_cross_entropy(d_hat, d_true)


def adversarial_gradients(
    loss_d: Tensor,
    lam: float,
    disc_params: dict[str, Tensor],
    generator_params: dict[str, Tensor],
) -> tuple[dict[str, np.ndarray], dict[str, np.ndarray]]:
    """One backward pass through the domain loss, split into the two sides of
    the minmax game.

    The discriminator side receives the plain gradient; the generator side
    (encoder and classifier, reached through both factors of the conditioning
    outer product) receives exactly ``-lam`` times the gradient it would see
    with reversal disabled.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    grads = nn.backward(loss_d)
    disc = {
        name: grads.get(t, np.zeros_like(t.data)) for name, t in disc_params.items()
    }
    reversed_ = {
        name: -lam * grads.get(t, np.zeros_like(t.data))
        for name, t in generator_params.items()
    }
    return disc, reversed_
