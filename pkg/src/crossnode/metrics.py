"""Decision rules and Micro/Macro-F1 scoring over 0/1 label matrices."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ClassStats:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        denom = 2 * self.tp + self.fp + self.fn
        return 2 * self.tp / denom if denom else 0.0


@dataclass(frozen=True)
class Metrics:
    """Micro/Macro-F1 plus the per-label confusion counts they derive from."""

    micro_f1: float
    macro_f1: float
    per_class: list[ClassStats] = field(default_factory=list)

    @classmethod
    def from_counts(cls, stats: list[ClassStats]) -> "Metrics":
        tp = sum(s.tp for s in stats)
        fp = sum(s.fp for s in stats)
        fn = sum(s.fn for s in stats)
        denom = 2 * tp + fp + fn
        micro = 2 * tp / denom if denom else 0.0
        macro = sum(s.f1 for s in stats) / len(stats) if stats else 0.0
        return cls(micro_f1=micro, macro_f1=macro, per_class=stats)

    def to_dict(self) -> dict:
        return {
            "micro_f1": self.micro_f1,
            "macro_f1": self.macro_f1,
            "per_class": [
                {
                    "tp": s.tp,
                    "fp": s.fp,
                    "fn": s.fn,
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                }
                for s in self.per_class
            ],
        }


def decide_labels(yhat: np.ndarray, mode: str) -> np.ndarray:
    """Turn probability rows into 0/1 decisions.

    Multiclass takes the argmax (ties break to the lowest index).  Multilabel
    thresholds at 0.5; a row with no positive falls back to its argmax so
    every node carries at least one decision.
    """
    yhat = np.asarray(yhat, dtype=np.float64)
    out = np.zeros_like(yhat)
    if mode == "multiclass":
        out[np.arange(yhat.shape[0]), yhat.argmax(axis=1)] = 1.0
    elif mode == "multilabel":
        out[yhat >= 0.5] = 1.0
        empty = np.nonzero(out.sum(axis=1) == 0)[0]
        out[empty, yhat[empty].argmax(axis=1)] = 1.0
    else:
        raise ValueError(f"unknown decision mode {mode!r}")
    return out


def f1_scores(pred: np.ndarray, truth: np.ndarray) -> Metrics:
    """Micro- and Macro-F1 of 0/1 predictions against 0/1 truth.

    Micro pools true/false positives and negatives over every (node, label)
    cell; macro is the unweighted mean of per-label F1, with zero-support
    labels contributing 0.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape}, truth {truth.shape}")
    stats = []
    for c in range(pred.shape[1]):
        p, t = pred[:, c] > 0, truth[:, c] > 0
        stats.append(
            ClassStats(
                tp=int((p & t).sum()),
                fp=int((p & ~t).sum()),
                fn=int((~p & t).sum()),
            )
        )
    return Metrics.from_counts(stats)
