"""Attributed-network data model and the on-disk dataset directory format.

A dataset directory contains ``meta.json``, ``edges.tsv``, ``attrs.tsv`` and an
optional ``labels.tsv``.  All text files are UTF-8 with LF line endings; lines
starting with ``#`` and blank lines are ignored.  Node, attribute and label
indices are 0-based.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse


class DatasetError(ValueError):
    """Raised for malformed dataset files or violated network invariants."""


def _canonical_edges(pairs: np.ndarray) -> tuple[np.ndarray, int, int]:
    """Symmetrize an edge list: drop self-loops and duplicates, orient u < v.

    Returns (edges, n_self_loops_dropped, n_duplicates_dropped); edges are
    lexicographically sorted so the representation is unique.
    """
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if pairs.shape[0] == 0:
        return pairs, 0, 0
    loops = pairs[:, 0] == pairs[:, 1]
    n_loops = int(loops.sum())
    pairs = pairs[~loops]
    lo = np.minimum(pairs[:, 0], pairs[:, 1])
    hi = np.maximum(pairs[:, 0], pairs[:, 1])
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0)
    n_dups = int(lo.shape[0] - pairs.shape[0])
    return pairs, n_loops, n_dups


@dataclass(frozen=True)
class AttributedNetwork:
    """An undirected graph with sparse node attributes and optional labels.

    ``edges`` is an (E, 2) int array with u < v, deduplicated and sorted.
    ``labels``, when present, is a dense 0/1 matrix with one row per node;
    rows are one-hot when ``multi_label`` is False and multi-hot otherwise.
    Instances are immutable after construction and safe to share.
    """

    num_nodes: int
    num_attrs: int
    num_labels: int
    multi_label: bool
    edges: np.ndarray
    attributes: sparse.csr_matrix
    labels: np.ndarray | None = None

    def __post_init__(self):
        n = self.num_nodes
        e = self.edges
        if e.ndim != 2 or e.shape[1] != 2:
            raise DatasetError("edges must be an (E, 2) array")
        if e.shape[0]:
            if e.min() < 0 or e.max() >= n:
                raise DatasetError("edge endpoint outside [0, num_nodes)")
            if (e[:, 0] >= e[:, 1]).any():
                raise DatasetError("edges must be canonical (u < v, no self-loops)")
            if np.unique(e, axis=0).shape[0] != e.shape[0]:
                raise DatasetError("duplicate edges present")
        if self.attributes.shape != (n, self.num_attrs):
            raise DatasetError(
                f"attribute matrix is {self.attributes.shape}, "
                f"expected {(n, self.num_attrs)}"
            )
        if self.attributes.nnz and self.attributes.data.min() < 0:
            raise DatasetError("attribute values must be nonnegative")
        if self.labels is not None:
            if self.labels.shape != (n, self.num_labels):
                raise DatasetError(
                    f"label matrix is {self.labels.shape}, "
                    f"expected {(n, self.num_labels)}"
                )
            if not np.isin(self.labels, (0.0, 1.0)).all():
                raise DatasetError("label matrix must be 0/1")
            if not self.multi_label:
                rows = self.labels.sum(axis=1)
                bad = np.nonzero(rows != 1)[0]
                if bad.size:
                    raise DatasetError(
                        f"node {bad[0]} has {int(rows[bad[0]])} labels "
                        "but multi_label is false"
                    )

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix (no self-loops)."""
        n = self.num_nodes
        if self.num_edges == 0:
            return sparse.csr_matrix((n, n))
        u, v = self.edges[:, 0], self.edges[:, 1]
        rows = np.concatenate([u, v])
        cols = np.concatenate([v, u])
        data = np.ones(rows.shape[0])
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def fully_labeled(self) -> bool:
        return self.labels is not None and bool((self.labels.sum(axis=1) >= 1).all())


@dataclass(frozen=True)
class DatasetPair:
    """A labeled source network and a target network with matching dimensions."""

    source: AttributedNetwork
    target: AttributedNetwork


def _data_lines(path: Path):
    """Yield (line_number, fields) for every non-comment, non-blank line."""
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split("\t")


def _parse_index(field: str, limit: int, what: str, path: Path, lineno: int) -> int:
    try:
        value = int(field)
    except ValueError:
        raise DatasetError(f"{path}:{lineno}: malformed {what} index {field!r}") from None
    if not 0 <= value < limit:
        raise DatasetError(f"{path}:{lineno}: {what} index {value} outside [0, {limit})")
    return value


def load_network(path: str | Path) -> AttributedNetwork:
    """Load and validate a dataset directory.

    Edges are symmetrized; self-loops and duplicate edges are dropped with a
    warning.  Any malformed line raises :class:`DatasetError` naming the file
    and line number.
    """
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise DatasetError(f"missing {meta_path}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    try:
        n = int(meta["num_nodes"])
        w = int(meta["num_attrs"])
        c = int(meta["num_labels"])
        multi = bool(meta["multi_label"])
    except KeyError as exc:
        raise DatasetError(f"{meta_path}: missing key {exc}") from None

    edges_path = root / "edges.tsv"
    if not edges_path.is_file():
        raise DatasetError(f"missing {edges_path}")
    raw_edges = []
    for lineno, fields in _data_lines(edges_path):
        if len(fields) != 2:
            raise DatasetError(f"{edges_path}:{lineno}: expected 'u\\tv'")
        u = _parse_index(fields[0], n, "node", edges_path, lineno)
        v = _parse_index(fields[1], n, "node", edges_path, lineno)
        raw_edges.append((u, v))
    edges, n_loops, n_dups = _canonical_edges(
        np.asarray(raw_edges, dtype=np.int64).reshape(-1, 2)
    )
    if n_loops or n_dups:
        warnings.warn(
            f"{edges_path}: dropped {n_loops} self-loop(s) and "
            f"{n_dups} duplicate edge(s)",
            stacklevel=2,
        )

    attrs_path = root / "attrs.tsv"
    if not attrs_path.is_file():
        raise DatasetError(f"missing {attrs_path}")
    ai, aj, av = [], [], []
    for lineno, fields in _data_lines(attrs_path):
        if len(fields) != 3:
            raise DatasetError(f"{attrs_path}:{lineno}: expected 'node\\tattr\\tvalue'")
        ai.append(_parse_index(fields[0], n, "node", attrs_path, lineno))
        aj.append(_parse_index(fields[1], w, "attribute", attrs_path, lineno))
        try:
            value = float(fields[2])
        except ValueError:
            raise DatasetError(
                f"{attrs_path}:{lineno}: malformed value {fields[2]!r}"
            ) from None
        if not np.isfinite(value) or value < 0:
            raise DatasetError(f"{attrs_path}:{lineno}: value must be finite and >= 0")
        av.append(value)
    attributes = sparse.csr_matrix(
        (np.asarray(av, dtype=np.float64), (ai, aj)), shape=(n, w)
    )
    attributes.sum_duplicates()
    attributes.eliminate_zeros()

    labels = None
    labels_path = root / "labels.tsv"
    if labels_path.is_file():
        labels = np.zeros((n, c))
        counts = np.zeros(n, dtype=np.int64)
        for lineno, fields in _data_lines(labels_path):
            if len(fields) != 2:
                raise DatasetError(f"{labels_path}:{lineno}: expected 'node\\tlabel'")
            i = _parse_index(fields[0], n, "node", labels_path, lineno)
            j = _parse_index(fields[1], c, "label", labels_path, lineno)
            if not multi and labels[i, j] == 0 and counts[i] >= 1:
                raise DatasetError(
                    f"{labels_path}:{lineno}: node {i} assigned a second label "
                    "but multi_label is false"
                )
            if labels[i, j] == 0:
                counts[i] += 1
            labels[i, j] = 1.0
        if not multi:
            missing = np.nonzero(counts == 0)[0]
            if missing.size:
                raise DatasetError(
                    f"{labels_path}: node {missing[0]} has no label "
                    "but multi_label is false"
                )

    return AttributedNetwork(
        num_nodes=n,
        num_attrs=w,
        num_labels=c,
        multi_label=multi,
        edges=edges,
        attributes=attributes,
        labels=labels,
    )


def save_network(net: AttributedNetwork, path: str | Path) -> None:
    """Write a network to a dataset directory (inverse of :func:`load_network`)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {
        "num_nodes": net.num_nodes,
        "num_attrs": net.num_attrs,
        "num_labels": net.num_labels,
        "multi_label": net.multi_label,
    }
    (root / "meta.json").write_text(
        json.dumps(meta, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (root / "edges.tsv").open("w", encoding="utf-8", newline="\n") as fh:
        for u, v in net.edges:
            fh.write(f"{u}\t{v}\n")
    coo = net.attributes.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with (root / "attrs.tsv").open("w", encoding="utf-8", newline="\n") as fh:
        for k in order:
            fh.write(f"{coo.row[k]}\t{coo.col[k]}\t{format(coo.data[k], '.17g')}\n")
    if net.labels is not None:
        with (root / "labels.tsv").open("w", encoding="utf-8", newline="\n") as fh:
            for i, j in zip(*np.nonzero(net.labels)):
                fh.write(f"{i}\t{j}\n")


def homophily_ratio(net: AttributedNetwork) -> float:
    """Fraction of edges whose endpoints share at least one label.

    Each unordered edge is counted once.  Requires every node to be labeled
    and the network to have at least one edge.
    """
    if net.labels is None or not net.fully_labeled():
        raise ValueError("homophily ratio requires labels on every node")
    if net.num_edges == 0:
        raise ValueError("homophily ratio is undefined for an edgeless network")
    u, v = net.edges[:, 0], net.edges[:, 1]
    shared = (net.labels[u] * net.labels[v]).sum(axis=1) >= 1
    return float(shared.mean())


def validate_pair(source: AttributedNetwork, target: AttributedNetwork) -> DatasetPair:
    """Check that two networks form a valid transfer pair.

    The attribute and label dimensionalities must agree, the multi-label flags
    must agree, and every source node must be labeled.  Target labels are
    optional and only ever used for evaluation.
    """
    if source.num_attrs != target.num_attrs:
        raise DatasetError(
            f"attribute dimension mismatch: source {source.num_attrs}, "
            f"target {target.num_attrs}"
        )
    if source.num_labels != target.num_labels:
        raise DatasetError(
            f"label dimension mismatch: source {source.num_labels}, "
            f"target {target.num_labels}"
        )
    if source.multi_label != target.multi_label:
        raise DatasetError("multi_label flags disagree between source and target")
    if not source.fully_labeled():
        raise DatasetError("every source node must be labeled")
    return DatasetPair(source=source, target=target)
