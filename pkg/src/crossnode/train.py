"""Training loop: schedules, balanced mini-batches, batch-local propagation
weights, and the joint minmax update of encoder, classifier and discriminator.

One epoch is a pass over the larger network's nodes; the smaller network's
nodes are reshuffled and cycled.  The learning rate decays and the adversarial
weight grows with training progress i = iteration / total.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from . import adversary, classifier, encoder, nn
from .adversary import DiscriminatorParams, adversarial_gradients
from .classifier import ClassifierParams
from .encoder import EncoderParams
from .graphs import AttributedNetwork, DatasetPair
from .nn import NumericError, ParamStore, Tensor
from .proximity import (
    ProximityMatrix,
    PropagationWeights,
    high_order_proximity,
    propagation_weights,
)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters; the defaults suit homophily-high networks."""

    K: int = 3
    emb_dim: int = 128
    hidden: tuple[int, ...] = (512, 128)
    disc_hidden: tuple[int, ...] = (128, 128)
    beta: float = 0.1
    batch_size: int = 100
    mu0: float = 0.01
    momentum: float = 0.9
    epochs: int = 100
    seed: int = 0
    multi_label: bool | None = None  # None: take the flag from the dataset
    normalize_attrs: bool = False
    no_fe1: bool = False
    no_fe2: bool = False
    no_feat_prop: bool = False
    no_label_prop: bool = False
    no_discriminator: bool = False

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.batch_size < 2 or self.batch_size % 2:
            raise ValueError("batch_size must be even (half source, half target)")
        if self.beta < 0:
            raise ValueError("beta must be >= 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.mu0 <= 0:
            raise ValueError("mu0 must be positive")


def schedules(progress: float, mu0: float) -> tuple[float, float]:
    """Learning rate mu0 / (1 + 10 i)^0.75 and adversarial weight
    2 / (1 + exp(-10 i)) - 1 at training progress i in [0, 1]."""
    if not 0.0 <= progress <= 1.0:
        raise ValueError("progress must lie in [0, 1]")
    lr = mu0 / (1.0 + 10.0 * progress) ** 0.75
    lam = 2.0 / (1.0 + math.exp(-10.0 * progress)) - 1.0
    return lr, lam


@dataclass
class Model:
    encoder: EncoderParams
    classifier: ClassifierParams
    discriminator: DiscriminatorParams

    def named_parameters(self) -> dict[str, Tensor]:
        return {
            **self.encoder.named(),
            **self.classifier.named(),
            **self.discriminator.named(),
        }

    def generator_parameters(self) -> dict[str, Tensor]:
        """The minimizing side of the game: encoder plus classifier."""
        return {**self.encoder.named(), **self.classifier.named()}


def init_model(
    rng: np.random.Generator, num_attrs: int, num_labels: int, cfg: TrainConfig
) -> Model:
    return Model(
        encoder=encoder.init_encoder(rng, num_attrs, cfg.hidden, cfg.emb_dim),
        classifier=classifier.init_classifier(rng, cfg.emb_dim, num_labels),
        discriminator=adversary.init_discriminator(
            rng, cfg.emb_dim, num_labels, cfg.disc_hidden
        ),
    )


# ---------------------------------------------------------------------------
# mini-batch sampling


class _ShufflePool:
    """Hands out ids from a shuffled permutation, reshuffling when drained."""

    def __init__(self, rng: np.random.Generator, ids: np.ndarray):
        self.rng = rng
        self.ids = np.asarray(ids, dtype=np.int64)
        self.perm = rng.permutation(self.ids)
        self.pos = 0

    def draw(self, k: int) -> np.ndarray:
        out = []
        while k > 0:
            avail = self.perm.shape[0] - self.pos
            if avail == 0:
                self.perm = self.rng.permutation(self.ids)
                self.pos = 0
                continue
            take = min(k, avail)
            out.append(self.perm[self.pos : self.pos + take])
            self.pos += take
            k -= take
        return np.concatenate(out)


def batches_per_epoch(n_source: int, n_target: int, batch_size: int) -> int:
    half = batch_size // 2
    return math.ceil(max(n_source, n_target) / half)


def sample_minibatches(
    rng: np.random.Generator,
    source_ids: np.ndarray,
    target_ids: np.ndarray,
    batch_size: int,
):
    """Yield one epoch of balanced (source, target) id batches.

    Each side is shuffled and consumed in order; whichever side runs out first
    is reshuffled and cycled until the larger side is exhausted.
    """
    if len(source_ids) == 0 or len(target_ids) == 0:
        raise ValueError("both networks must be nonempty")
    half = batch_size // 2
    src = _ShufflePool(rng, source_ids)
    tgt = _ShufflePool(rng, target_ids)
    for _ in range(batches_per_epoch(len(source_ids), len(target_ids), batch_size)):
        yield src.draw(half), tgt.draw(half)


def batch_weights(
    prox_src: ProximityMatrix,
    prox_tgt: ProximityMatrix,
    batch_src: np.ndarray,
    batch_tgt: np.ndarray,
    source_labels: np.ndarray,
) -> tuple[PropagationWeights, PropagationWeights]:
    """Batch-local propagation weights: proximity entries between in-batch
    nodes of the same network, label-masked on the source side, renormalized."""
    w_src = propagation_weights(
        prox_src, restrict_to=batch_src, label_mask=source_labels
    )
    w_tgt = propagation_weights(prox_tgt, restrict_to=batch_tgt)
    return w_src, w_tgt


# ---------------------------------------------------------------------------
# prepared inputs


def _l2_normalize_rows(m: sparse.csr_matrix) -> sparse.csr_matrix:
    norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
    inv = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
    return (sparse.diags(inv) @ m).tocsr()


@dataclass
class PreparedNetwork:
    """Per-network precomputation shared by training and inference."""

    net: AttributedNetwork
    attrs: sparse.csr_matrix
    prox: ProximityMatrix
    weights: PropagationWeights  # full-graph, unmasked
    agg: sparse.csr_matrix  # neighbor-attribute aggregates, one row per node

    @classmethod
    def build(
        cls, net: AttributedNetwork, steps: int, normalize_attrs: bool
    ) -> "PreparedNetwork":
        attrs = _l2_normalize_rows(net.attributes) if normalize_attrs else net.attributes
        prox = high_order_proximity(net, steps)
        weights = propagation_weights(prox)
        agg = encoder.neighbor_aggregate_matrix(attrs, weights)
        return cls(net=net, attrs=attrs, prox=prox, weights=weights, agg=agg)


@dataclass(frozen=True)
class BatchData:
    """Dense slices and batch-local weights for one balanced mini-batch."""

    x_src: np.ndarray
    n_src: np.ndarray
    x_tgt: np.ndarray
    n_tgt: np.ndarray
    y_src: np.ndarray
    w_src: PropagationWeights
    w_tgt: PropagationWeights
    d_true: np.ndarray


def assemble_batch(
    src: PreparedNetwork,
    tgt: PreparedNetwork,
    batch_src: np.ndarray,
    batch_tgt: np.ndarray,
) -> BatchData:
    w_src, w_tgt = batch_weights(
        src.prox, tgt.prox, batch_src, batch_tgt, src.net.labels
    )
    return BatchData(
        x_src=src.attrs[batch_src].toarray(),
        n_src=src.agg[batch_src].toarray(),
        x_tgt=tgt.attrs[batch_tgt].toarray(),
        n_tgt=tgt.agg[batch_tgt].toarray(),
        y_src=src.net.labels[batch_src],
        w_src=w_src,
        w_tgt=w_tgt,
        d_true=np.concatenate(
            [np.zeros(len(batch_src)), np.ones(len(batch_tgt))]
        ),
    )


@dataclass
class BatchLosses:
    classification: Tensor
    feature_prop: Tensor | None
    domain: Tensor | None


def batch_losses(
    model: Model, data: BatchData, cfg: TrainConfig, phi: str, mode: str
) -> BatchLosses:
    """Forward pass over one balanced batch, producing the three loss terms.

    Ablation flags replace the corresponding component: a zeroed extractor
    branch, a dropped smoothness term, prediction without neighbor logits, or
    no discriminator at all.
    """
    e_src = encoder.encode(
        model.encoder, data.x_src, data.n_src, cfg.no_fe1, cfg.no_fe2
    )
    e_tgt = encoder.encode(
        model.encoder, data.x_tgt, data.n_tgt, cfg.no_fe1, cfg.no_fe2
    )

    feature_prop = None
    if not cfg.no_feat_prop:
        feature_prop = encoder.feature_propagation_loss(
            e_src, data.w_src, e_tgt, data.w_tgt
        )

    yhat_src = classifier.propagate_predictions(
        model.classifier, e_src, None if cfg.no_label_prop else data.w_src, phi
    )
    loss_y = classifier.classification_loss(yhat_src, data.y_src, mode)

    domain = None
    if not cfg.no_discriminator:
        yhat_tgt = classifier.propagate_predictions(
            model.classifier, e_tgt, None if cfg.no_label_prop else data.w_tgt, phi
        )
        conditioned = adversary.conditioning_input(
            nn.concat_rows(e_src, e_tgt), nn.concat_rows(yhat_src, yhat_tgt)
        )
        d_hat = adversary.discriminator_predict(model.discriminator, conditioned)
        domain = adversary.domain_loss(d_hat, data.d_true)

    return BatchLosses(classification=loss_y, feature_prop=feature_prop, domain=domain)


# ---------------------------------------------------------------------------
# training state and steps


@dataclass
class TrainState:
    model: Model
    store: ParamStore
    rng: np.random.Generator
    iteration: int
    total_iterations: int
    trace: list[dict] = field(default_factory=list)


def train_step(
    state: TrainState,
    src: PreparedNetwork,
    tgt: PreparedNetwork,
    batch_src: np.ndarray,
    batch_tgt: np.ndarray,
    lr: float,
    lam: float,
    cfg: TrainConfig,
    phi: str,
    mode: str,
) -> tuple[float, float, float]:
    """One balanced-batch update of all three parameter groups.

    The encoder and classifier descend classification + beta * smoothness
    minus lam * domain loss (through the reversed gradient); the discriminator
    descends its own loss at full strength.
    """
    data = assemble_batch(src, tgt, batch_src, batch_tgt)
    losses = batch_losses(state.model, data, cfg, phi, mode)

    task = losses.classification
    if losses.feature_prop is not None:
        task = nn.add(task, nn.scale(losses.feature_prop, cfg.beta))
    grads = state.store.gather(nn.backward(task))

    loss_y = losses.classification.item()
    loss_f = losses.feature_prop.item() if losses.feature_prop is not None else 0.0
    loss_d = 0.0
    if losses.domain is not None:
        loss_d = losses.domain.item()
        disc_g, rev_g = adversarial_gradients(
            losses.domain,
            lam,
            state.model.discriminator.named(),
            state.model.generator_parameters(),
        )
        for name, g in disc_g.items():
            grads[name] = grads[name] + g
        for name, g in rev_g.items():
            grads[name] = grads[name] + g

    if not all(math.isfinite(v) for v in (loss_y, loss_f, loss_d)):
        tail = json.dumps(state.trace[-5:])
        raise NumericError(
            f"non-finite loss at iteration {state.iteration}: "
            f"loss_y={loss_y} loss_f={loss_f} loss_d={loss_d}; recent trace: {tail}"
        )

    nn.sgd_momentum_step(state.store, grads, lr, cfg.momentum)
    return loss_y, loss_f, loss_d


# ---------------------------------------------------------------------------
# inference (plain numpy; no tape needed once parameters are frozen)


def _mlp_np(layers: list[tuple[Tensor, Tensor]], x: np.ndarray) -> np.ndarray:
    for w, b in layers:
        x = np.maximum(x @ w.data + b.data, 0.0)
    return x


def _phi_np(kind: str, logits: np.ndarray) -> np.ndarray:
    if kind == "softmax":
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)
    return 0.5 * (1.0 + np.tanh(0.5 * logits))


def embed_network(
    model: Model, prepared: PreparedNetwork, cfg: TrainConfig, chunk: int = 4096
) -> np.ndarray:
    """Full-graph embeddings under the frozen encoder."""
    n = prepared.net.num_nodes
    width = model.encoder.fe1[-1][0].data.shape[1]
    w_c, b_c = model.encoder.combiner
    out = np.empty((n, w_c.data.shape[1]))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        x = prepared.attrs[start:stop].toarray()
        nb = prepared.agg[start:stop].toarray()
        h1 = np.zeros((stop - start, width)) if cfg.no_fe1 else _mlp_np(model.encoder.fe1, x)
        h2 = np.zeros((stop - start, width)) if cfg.no_fe2 else _mlp_np(model.encoder.fe2, nb)
        out[start:stop] = np.maximum(
            np.concatenate([h1, h2], axis=1) @ w_c.data + b_c.data, 0.0
        )
    return out


def predict_network(
    model: Model,
    prepared: PreparedNetwork,
    cfg: TrainConfig,
    phi: str,
    embeddings: np.ndarray | None = None,
) -> np.ndarray:
    """Label probabilities over a full network, refined by unmasked full-graph
    neighbor logits (unless label propagation is ablated)."""
    if embeddings is None:
        embeddings = embed_network(model, prepared, cfg)
    logits = embeddings @ model.classifier.weight.data + model.classifier.bias.data
    if not cfg.no_label_prop:
        logits = logits + prepared.weights.matrix @ logits
    return _phi_np(phi, logits)


# ---------------------------------------------------------------------------
# fit


@dataclass
class TrainResult:
    model: Model
    store: ParamStore
    config: dict
    trace: list[dict]
    source_embeddings: np.ndarray
    target_embeddings: np.ndarray
    target_probs: np.ndarray


def resolve_mode(pair: DatasetPair, cfg: TrainConfig) -> tuple[bool, str, str]:
    """(multi_label, phi, cross-entropy mode) for a pair under a config."""
    multi = pair.source.multi_label if cfg.multi_label is None else cfg.multi_label
    if multi != pair.source.multi_label:
        raise ValueError("config multi_label flag disagrees with the dataset")
    return multi, ("sigmoid" if multi else "softmax"), (
        "multilabel" if multi else "multiclass"
    )


def config_echo(cfg: TrainConfig, pair: DatasetPair | None = None) -> dict:
    echo = asdict(cfg)
    echo["hidden"] = list(cfg.hidden)
    echo["disc_hidden"] = list(cfg.disc_hidden)
    if pair is not None:
        multi, _, _ = resolve_mode(pair, cfg)
        echo["multi_label"] = multi
        echo["num_attrs"] = pair.source.num_attrs
        echo["num_labels"] = pair.source.num_labels
    return echo


def fit(
    pair: DatasetPair,
    cfg: TrainConfig,
    log_path: str | Path | None = None,
    warm_start: Model | None = None,
) -> TrainResult:
    """Train on a validated pair and return final parameters, loss traces,
    and target predictions from the frozen model.

    Proximities and neighbor-attribute aggregates are precomputed per network;
    every iteration then samples a balanced batch, rebuilds batch-local
    propagation weights, and applies one SGD-momentum update with the
    scheduled learning rate and adversarial weight.  ``warm_start`` fine-tunes
    an existing model (e.g. from :func:`load_model`) instead of initializing.
    """
    _, phi, mode = resolve_mode(pair, cfg)
    src = PreparedNetwork.build(pair.source, cfg.K, cfg.normalize_attrs)
    tgt = PreparedNetwork.build(pair.target, cfg.K, cfg.normalize_attrs)

    rng = np.random.default_rng(cfg.seed)
    model = init_model(rng, pair.source.num_attrs, pair.source.num_labels, cfg)
    if warm_start is not None:
        for name, tensor in model.named_parameters().items():
            tensor.data = warm_start.named_parameters()[name].data.copy()
    store = ParamStore(model.named_parameters())

    bpe = batches_per_epoch(
        pair.source.num_nodes, pair.target.num_nodes, cfg.batch_size
    )
    total = cfg.epochs * bpe
    state = TrainState(
        model=model, store=store, rng=rng, iteration=0, total_iterations=total
    )

    log_fh = Path(log_path).open("w", encoding="utf-8") if log_path else None
    try:
        for _ in range(cfg.epochs):
            source_ids = np.arange(pair.source.num_nodes)
            target_ids = np.arange(pair.target.num_nodes)
            for batch_src, batch_tgt in sample_minibatches(
                rng, source_ids, target_ids, cfg.batch_size
            ):
                progress = state.iteration / total
                lr, lam = schedules(progress, cfg.mu0)
                loss_y, loss_f, loss_d = train_step(
                    state, src, tgt, batch_src, batch_tgt, lr, lam, cfg, phi, mode
                )
                row = {
                    "iter": state.iteration,
                    "lr": lr,
                    "lambda": lam,
                    "loss_y": loss_y,
                    "loss_f": loss_f,
                    "loss_d": loss_d,
                }
                state.trace.append(row)
                if log_fh:
                    log_fh.write(json.dumps(row, sort_keys=True) + "\n")
                state.iteration += 1
    finally:
        if log_fh:
            log_fh.close()

    source_emb = embed_network(model, src, cfg)
    target_emb = embed_network(model, tgt, cfg)
    target_probs = predict_network(model, tgt, cfg, phi, embeddings=target_emb)
    return TrainResult(
        model=model,
        store=store,
        config=config_echo(cfg, pair),
        trace=state.trace,
        source_embeddings=source_emb,
        target_embeddings=target_emb,
        target_probs=target_probs,
    )


# ---------------------------------------------------------------------------
# checkpoint round-trip


def save_model(path: str | Path, result: TrainResult) -> None:
    nn.save_checkpoint(path, result.store, result.config)


def load_model(path: str | Path) -> tuple[Model, TrainConfig, dict]:
    """Rebuild a model and its config from a checkpoint file."""
    params, echo = nn.load_checkpoint(path)
    cfg = TrainConfig(
        K=echo["K"],
        emb_dim=echo["emb_dim"],
        hidden=tuple(echo["hidden"]),
        disc_hidden=tuple(echo["disc_hidden"]),
        beta=echo["beta"],
        batch_size=echo["batch_size"],
        mu0=echo["mu0"],
        momentum=echo["momentum"],
        epochs=echo["epochs"],
        seed=echo["seed"],
        multi_label=echo["multi_label"],
        normalize_attrs=echo["normalize_attrs"],
        no_fe1=echo["no_fe1"],
        no_fe2=echo["no_fe2"],
        no_feat_prop=echo["no_feat_prop"],
        no_label_prop=echo["no_label_prop"],
        no_discriminator=echo["no_discriminator"],
    )
    model = init_model(
        np.random.default_rng(0), echo["num_attrs"], echo["num_labels"], cfg
    )
    named = model.named_parameters()
    if set(named) != set(params):
        raise ValueError("checkpoint parameter names do not match the config")
    for name, tensor in named.items():
        if tensor.data.shape != params[name].shape:
            raise ValueError(f"checkpoint shape mismatch for {name!r}")
        tensor.data = params[name]
    return model, cfg, echo
