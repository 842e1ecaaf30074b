"""Random-walk proximities and the propagation weights derived from them.

The pipeline is: 1-step transition matrix -> aggregated K-step transitions
(closer neighbors weighted higher) -> positive pointwise mutual information
-> row-normalized propagation weights, optionally restricted to a node subset
and masked to same-labeled pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .graphs import AttributedNetwork


@dataclass(frozen=True)
class ProximityMatrix:
    """Sparse nonnegative proximity scores; zeros are never stored."""

    size: int
    matrix: sparse.csr_matrix
    steps: int


@dataclass(frozen=True)
class PropagationWeights:
    """Row-normalized proximity weights with the diagonal removed.

    Every row sums to 1 or is entirely empty; consumers treat an empty row
    as "propagate from self only".
    """

    size: int
    matrix: sparse.csr_matrix
    label_masked: bool = False

    def empty_rows(self) -> np.ndarray:
        """Boolean mask of rows with no weight entries."""
        return np.diff(self.matrix.indptr) == 0


def _row_normalize(m: sparse.csr_matrix) -> sparse.csr_matrix:
    sums = np.asarray(m.sum(axis=1)).ravel()
    inv = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 0)
    return sparse.diags(inv) @ m


def transition_matrix(net: AttributedNetwork) -> sparse.csr_matrix:
    """1-step random-walk transition matrix; zero-degree rows stay all-zero."""
    return _row_normalize(net.adjacency()).tocsr()


def aggregate_transitions(t1: sparse.csr_matrix, steps: int) -> sparse.csr_matrix:
    """Sum of scaled transition powers: step k contributes ``t1**k / k``.

    Exact sparse arithmetic, no thresholding; the power loop switches to a
    dense product once the walk matrix exceeds 50% density.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    t1 = sparse.csr_matrix(t1)
    total = t1.copy()
    power = t1
    for k in range(2, steps + 1):
        if power.nnz > 0.5 * power.shape[0] * power.shape[1]:
            power = sparse.csr_matrix(power.toarray() @ t1.toarray())
        else:
            power = (power @ t1).tocsr()
        power.eliminate_zeros()
        total = total + power / k
    total = total.tocsr()
    total.eliminate_zeros()
    return total


def ppmi(t: sparse.csr_matrix, steps: int = 0) -> ProximityMatrix:
    """Positive pointwise mutual information of aggregated transitions.

    Entry (i, j) compares the row-normalized transition mass i->j against the
    mean normalized mass into j over all nodes; entries with nonpositive log
    are pruned (natural log).  Rows with zero total mass (isolated nodes)
    contribute no entries.  ``steps`` records the K that produced ``t``.
    """
    t = sparse.csr_matrix(t)
    n = t.shape[0]
    normalized = _row_normalize(t).tocsr()
    col_mean = np.asarray(normalized.sum(axis=0)).ravel() / n
    coo = normalized.tocoo()
    values = np.log(coo.data / col_mean[coo.col])
    keep = values > 0
    matrix = sparse.csr_matrix(
        (values[keep], (coo.row[keep], coo.col[keep])), shape=(n, n)
    )
    return ProximityMatrix(size=n, matrix=matrix, steps=steps)


def high_order_proximity(net: AttributedNetwork, steps: int) -> ProximityMatrix:
    """Convenience: transition matrix -> aggregation -> PPMI for one network."""
    return ppmi(aggregate_transitions(transition_matrix(net), steps), steps=steps)


def propagation_weights(
    p: ProximityMatrix,
    restrict_to: np.ndarray | None = None,
    label_mask: np.ndarray | None = None,
) -> PropagationWeights:
    """Row-normalized weights from a proximity matrix.

    ``restrict_to`` keeps only the given nodes (rows and columns, in the given
    order), producing a matrix indexed by position in the subset.  When
    ``label_mask`` (a full 0/1 label matrix) is given, entries between nodes
    sharing no label are removed before normalizing.  The diagonal is always
    dropped; rows left with zero mass become empty.
    """
    matrix = p.matrix
    labels = label_mask
    if restrict_to is not None:
        ids = np.asarray(restrict_to, dtype=np.int64)
        matrix = matrix[ids][:, ids]
        if labels is not None:
            labels = labels[ids]
    coo = matrix.tocoo()
    keep = coo.row != coo.col
    if labels is not None:
        shared = (labels[coo.row] * labels[coo.col]).sum(axis=1) >= 1
        keep &= shared
    kept = sparse.csr_matrix(
        (coo.data[keep], (coo.row[keep], coo.col[keep])), shape=matrix.shape
    )
    return PropagationWeights(
        size=kept.shape[0],
        matrix=_row_normalize(kept).tocsr(),
        label_masked=labels is not None,
    )


def proximity_pair_stats(p: ProximityMatrix, labels: np.ndarray) -> dict:
    """Counts of connected ordered node pairs and how many share a class.

    A pair (i, j), i != j, is connected when its proximity entry is positive.
    """
    if labels is None or (np.asarray(labels).sum(axis=1) < 1).any():
        raise ValueError("pair statistics require labels on every node")
    coo = p.matrix.tocoo()
    off = coo.row != coo.col
    rows, cols = coo.row[off], coo.col[off]
    connected = int(rows.shape[0])
    same = int(((labels[rows] * labels[cols]).sum(axis=1) >= 1).sum())
    fraction = same / connected if connected else 0.0
    return {
        "connected_pairs": connected,
        "same_class_pairs": same,
        "same_class_fraction": fraction,
    }


def save_ppmi(p: ProximityMatrix, path: str | Path) -> None:
    """Write proximity triplets as ``i\\tj\\tvalue`` with #K / #N header lines."""
    coo = p.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"#K={p.steps}\n")
        fh.write(f"#N={p.size}\n")
        for k in order:
            fh.write(f"{coo.row[k]}\t{coo.col[k]}\t{format(coo.data[k], '.17g')}\n")


def load_ppmi(path: str | Path) -> ProximityMatrix:
    """Read a proximity matrix written by :func:`save_ppmi`."""
    steps = 0
    size = None
    rows, cols, vals = [], [], []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("K="):
                    steps = int(body[2:])
                elif body.startswith("N="):
                    size = int(body[2:])
                continue
            i, j, v = line.split("\t")
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(v))
    if size is None:
        size = (max(rows + cols) + 1) if rows else 0
    matrix = sparse.csr_matrix(
        (np.asarray(vals), (rows, cols)), shape=(size, size)
    )
    return ProximityMatrix(size=size, matrix=matrix, steps=steps)
