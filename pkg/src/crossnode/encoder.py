"""Dual-extractor graph encoder.

One MLP embeds each node's own attributes (the ego branch), a second MLP with
the same layout but independent parameters embeds the proximity-weighted
aggregate of its neighbors' attributes, and a single nonlinear layer combines
the two.  A smoothness penalty drives each final embedding toward the weighted
average of its neighbors' embeddings.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from . import nn
from .nn import Tensor
from .proximity import PropagationWeights


@dataclass
class EncoderParams:
    """Ego branch, neighbor branch (same shapes, independent values), combiner."""

    fe1: list[tuple[Tensor, Tensor]]
    fe2: list[tuple[Tensor, Tensor]]
    combiner: tuple[Tensor, Tensor]

    def named(self) -> dict[str, Tensor]:
        out = {}
        for branch, layers in (("fe1", self.fe1), ("fe2", self.fe2)):
            for i, (w, b) in enumerate(layers):
                out[f"enc.{branch}.{i}.W"] = w
                out[f"enc.{branch}.{i}.b"] = b
        out["enc.comb.W"], out["enc.comb.b"] = self.combiner
        return out


def init_encoder(
    rng: np.random.Generator,
    num_attrs: int,
    hidden: tuple[int, ...] = (512, 128),
    emb_dim: int = 128,
) -> EncoderParams:
    def branch(tag: str) -> list[tuple[Tensor, Tensor]]:
        layers = []
        fan_in = num_attrs
        for i, width in enumerate(hidden):
            layers.append(
                (
                    nn.parameter(rng, fan_in, width, f"enc.{tag}.{i}.W"),
                    nn.bias(width, f"enc.{tag}.{i}.b"),
                )
            )
            fan_in = width
        return layers

    fe1 = branch("fe1")
    fe2 = branch("fe2")
    combiner = (
        nn.parameter(rng, 2 * hidden[-1], emb_dim, "enc.comb.W"),
        nn.bias(emb_dim, "enc.comb.b"),
    )
    return EncoderParams(fe1=fe1, fe2=fe2, combiner=combiner)


def neighbor_aggregate_matrix(
    attrs: sparse.csr_matrix, weights: PropagationWeights
) -> sparse.csr_matrix:
    """Sparse weighted neighbor-attribute aggregate with self fallback.

    Row i is sum_j w_ij x_j; rows with no weights fall back to the node's own
    attribute vector (consumers downstream add the node's own signal through
    the ego branch regardless).
    """
    agg = (weights.matrix @ attrs).tocsr()
    empty = weights.empty_rows()
    if empty.any():
        selector = sparse.diags(empty.astype(np.float64))
        agg = (agg + selector @ attrs).tocsr()
    return agg


def aggregate_neighbor_attributes(
    attrs: sparse.csr_matrix, weights: PropagationWeights
) -> np.ndarray:
    """Dense view of :func:`neighbor_aggregate_matrix` (rows align with weights)."""
    if attrs.shape[0] != weights.size:
        raise ValueError(
            f"attribute rows {attrs.shape[0]} != weight rows {weights.size}"
        )
    return neighbor_aggregate_matrix(attrs, weights).toarray()


def encode(
    params: EncoderParams,
    attrs: np.ndarray,
    neighbor_attrs: np.ndarray,
    no_fe1: bool = False,
    no_fe2: bool = False,
) -> Tensor:
    """Final embeddings for a batch of nodes.

    ``attrs`` feeds the ego branch and ``neighbor_attrs`` feeds the neighbor
    branch; the deepest layers of both are concatenated and passed through a
    ReLU combiner.  The ablation flags replace a branch's output with zeros.
    """
    width = params.fe1[-1][0].data.shape[1]
    if no_fe1:
        h1 = nn.constant(np.zeros((attrs.shape[0], width)))
    else:
        h1, _ = nn.mlp_forward(params.fe1, nn.constant(attrs))
    if no_fe2:
        h2 = nn.constant(np.zeros((neighbor_attrs.shape[0], width)))
    else:
        h2, _ = nn.mlp_forward(params.fe2, nn.constant(neighbor_attrs))
    w_c, b_c = params.combiner
    return nn.relu(nn.add(nn.matmul(nn.concat_cols(h1, h2), w_c), b_c))


def propagation_residual(emb: Tensor, weights: PropagationWeights) -> Tensor:
    """Mean squared distance between embeddings and their weighted neighbor
    averages; nodes with empty weight rows contribute zero."""
    neighbor_avg = nn.spmm(weights.matrix, emb)
    diff = nn.sub(emb, neighbor_avg)
    keep = (~weights.empty_rows()).astype(np.float64)
    return nn.masked_mean_row_sqnorm(diff, keep, denom=emb.data.shape[0])


def feature_propagation_loss(
    emb_src: Tensor,
    weights_src: PropagationWeights,
    emb_tgt: Tensor,
    weights_tgt: PropagationWeights,
) -> Tensor:
    """Total smoothness penalty: label-masked on the source side, unmasked on
    the target side; the two per-network means are summed."""
    return nn.add(
        propagation_residual(emb_src, weights_src),
        propagation_residual(emb_tgt, weights_tgt),
    )
