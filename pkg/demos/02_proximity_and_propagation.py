"""From a raw graph to propagation weights, one stage at a time.

The message-passing weights come from a three-stage pipeline: random-walk
transition probabilities, an aggregated K-step transition matrix that
down-weights distant neighbors, and a positive pointwise-mutual-information
transform that keeps only above-chance proximities.  Rows are then
renormalized (optionally restricted to same-labeled pairs) to give the
weights used for attribute aggregation, embedding smoothing, and label
refinement.
"""

import numpy as np
from scipy import sparse

from crossnode import AttributedNetwork, propagation_weights
from crossnode.encoder import aggregate_neighbor_attributes
from crossnode.proximity import aggregate_transitions, ppmi, transition_matrix

# a 5-node path with one triangle: 0-1-2-3-4 plus edge 2-4
edges = np.array([[0, 1], [1, 2], [2, 3], [2, 4], [3, 4]])
labels = np.zeros((5, 2))
labels[[0, 1, 2], 0] = 1.0
labels[[3, 4], 1] = 1.0
attrs = sparse.csr_matrix(np.eye(5))
net = AttributedNetwork(
    num_nodes=5, num_attrs=5, num_labels=2, multi_label=False,
    edges=edges, attributes=attrs, labels=labels,
)

t1 = transition_matrix(net)
print("1-step transition matrix:")
print(np.round(t1.toarray(), 3))

agg = aggregate_transitions(t1, 3)
print("\naggregated 3-step transitions (closer neighbors weigh more):")
print(np.round(agg.toarray(), 3))

prox = ppmi(agg, steps=3)
print("\nPPMI proximities (below-chance entries pruned):")
print(np.round(prox.matrix.toarray(), 3))

plain = propagation_weights(prox)
masked = propagation_weights(prox, label_mask=net.labels)
print("\nrow-normalized weights (unmasked):")
print(np.round(plain.matrix.toarray(), 3))
print("\nlabel-masked weights (only same-labeled neighbors remain):")
print(np.round(masked.matrix.toarray(), 3))
print(f"rows emptied by the mask: {np.nonzero(masked.empty_rows())[0].tolist()}")

# The neighbor branch of the encoder consumes weighted attribute averages;
# one-hot attributes make the mixing weights directly visible.
neigh = aggregate_neighbor_attributes(net.attributes, plain)
print("\naggregated neighbor attributes under the unmasked weights:")
print(np.round(neigh, 3))
