"""Dual-space graph contrastive learning.

Semi-supervised graph classification in which every graph is viewed twice
(sub-graph sampling), encoded in Euclidean space and on the Poincare ball,
and the two views are pulled together with a contrastive objective measured
by geodesic similarity, alongside a supervised loss on the labeled subset.
"""

__version__ = "0.1.0"
