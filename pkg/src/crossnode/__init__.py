"""Cross-network node classification.

Learn node embeddings on a fully labeled source graph and an unlabeled target
graph with dual feature extractors, PPMI-weighted feature and label
propagation, and conditional adversarial alignment, then classify the target
nodes and report Micro/Macro-F1.
"""

from .graphs import (
    AttributedNetwork,
    DatasetError,
    DatasetPair,
    homophily_ratio,
    load_network,
    save_network,
    validate_pair,
)
from .metrics import Metrics, decide_labels, f1_scores
from .nn import NumericError
from .proximity import (
    ProximityMatrix,
    PropagationWeights,
    aggregate_transitions,
    high_order_proximity,
    ppmi,
    propagation_weights,
    proximity_pair_stats,
    transition_matrix,
)
from .synthetic import SynthConfig, generate_synthetic_pair
from .train import TrainConfig, TrainResult, fit, load_model, save_model, schedules

__all__ = [
    "AttributedNetwork",
    "DatasetError",
    "DatasetPair",
    "Metrics",
    "NumericError",
    "PropagationWeights",
    "ProximityMatrix",
    "SynthConfig",
    "TrainConfig",
    "TrainResult",
    "aggregate_transitions",
    "decide_labels",
    "f1_scores",
    "fit",
    "generate_synthetic_pair",
    "high_order_proximity",
    "homophily_ratio",
    "load_model",
    "load_network",
    "ppmi",
    "propagation_weights",
    "proximity_pair_stats",
    "save_model",
    "save_network",
    "schedules",
    "transition_matrix",
    "validate_pair",
]

__version__ = "0.1.0"
