"""Synthetic cross-network pairs: stochastic-block-model graphs with
class-prototype Bernoulli attributes and a controllable attribute shift.

Each class owns a private stripe of attribute indices.  The source activates
the first half of the stripe; the target's active block is translated within
the stripe by the shift magnitude.  Class signatures therefore stay disjoint
in both networks (the shift never bleeds one class into another), while the
overlap between source and target signatures decays smoothly from full
(``shift=0``) to none (``shift=1``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .graphs import AttributedNetwork, DatasetPair, validate_pair

_BACKGROUND_RATE = 0.02
_ACTIVE_RATE = 0.35


@dataclass(frozen=True)
class SynthConfig:
    nodes: int = 300
    classes: int = 3
    attrs: int = 60
    p_intra: float = 0.05
    p_inter: float = 0.005
    shift: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.nodes < 1:
            raise ValueError("nodes must be >= 1")
        if self.classes < 2:
            raise ValueError("classes must be >= 2")
        if self.attrs < 2 * self.classes:
            raise ValueError("need at least two attributes per class")
        for p in (self.p_intra, self.p_inter):
            if not 0.0 <= p <= 1.0:
                raise ValueError("edge probabilities must lie in [0, 1]")
        if not 0.0 <= self.shift <= 1.0:
            raise ValueError("shift must lie in [0, 1]")


def class_prototypes(cfg: SynthConfig) -> tuple[np.ndarray, np.ndarray]:
    """Per-class Bernoulli attribute rates for the source and target networks.

    Class c owns the attribute stripe [c*2B, (c+1)*2B) with B = attrs //
    (2 * classes).  The source activates the stripe's first B attributes; the
    target's active block starts round(shift * B) positions later, still
    inside the stripe.
    """
    c, w = cfg.classes, cfg.attrs
    block = w // (2 * c)
    offset = round(cfg.shift * block)
    src = np.full((c, w), _BACKGROUND_RATE)
    tgt = np.full((c, w), _BACKGROUND_RATE)
    for k in range(c):
        start = k * 2 * block
        src[k, start : start + block] = _ACTIVE_RATE
        tgt[k, start + offset : start + offset + block] = _ACTIVE_RATE
    return src, tgt


def _sbm_network(
    rng: np.random.Generator,
    cfg: SynthConfig,
    prototypes: np.ndarray,
) -> AttributedNetwork:
    n, c, w = cfg.nodes, cfg.classes, cfg.attrs
    classes = np.arange(n) % c  # balanced assignment
    labels = np.zeros((n, c))
    labels[np.arange(n), classes] = 1.0

    same = classes[:, None] == classes[None, :]
    prob = np.where(same, cfg.p_intra, cfg.p_inter)
    draw = rng.random((n, n))
    upper = np.triu(draw < prob, k=1)
    u, v = np.nonzero(upper)
    edges = np.stack([u, v], axis=1).astype(np.int64)

    active = rng.random((n, w)) < prototypes[classes]
    attributes = sparse.csr_matrix(active.astype(np.float64))

    return AttributedNetwork(
        num_nodes=n,
        num_attrs=w,
        num_labels=c,
        multi_label=False,
        edges=edges,
        attributes=attributes,
        labels=labels,
    )


def generate_synthetic_pair(cfg: SynthConfig) -> DatasetPair:
    """Generate a deterministic source/target pair from a config and seed.

    Both networks carry ground-truth labels; the target's are meant for
    evaluation only.
    """
    proto_src, proto_tgt = class_prototypes(cfg)
    source = _sbm_network(np.random.default_rng([cfg.seed, 1]), cfg, proto_src)
    target = _sbm_network(np.random.default_rng([cfg.seed, 2]), cfg, proto_tgt)
    return validate_pair(source, target)
