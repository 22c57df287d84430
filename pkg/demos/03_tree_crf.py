"""
A CRF over dependency trees
===========================

Arc scores live in an ``(n+1) x n`` array: ``scores[h, d-1]`` scores head
``h`` for word ``d``, with row 0 the root.  Exactly one word attaches to the
root.  We compare the matrix-tree and Eisner computations with brute-force
enumeration, then look at marginals, the best tree and the loss gradient.
"""
import math

import numpy as np

from mwejoint import treecrf as crf

rng = np.random.default_rng(1)
n = 4
scores = rng.normal(size=(n + 1, n))

for regime in crf.REGIMES:
    trees = crf.enumerate_trees(n, regime)
    brute = math.log(sum(math.exp(crf.tree_score(scores, t)) for t in trees))
    print(f"{regime:>13}: {len(trees):3d} trees, logZ {crf.log_partition(scores, regime):.12f} "
          f"(enumeration {brute:.12f}), best tree {crf.map_tree(scores, regime)}")

mu = crf.marginals(scores)
print("arc marginals (columns sum to one):\n", mu.round(3))

gold = [2, 0, 2, 3]
loss, grad = crf.nll(scores, gold)
print("negative log-likelihood of", gold, "=", round(loss, 6))
print("its gradient is marginals minus the gold indicator:\n", grad.round(3))

# the non-projective computation stays exact for very peaked scores
peaked = rng.uniform(-400, 400, size=(7, 6))
print("logZ at score scale 400:", crf.log_partition(peaked), "max tree score:",
      crf.tree_score(peaked, crf.map_tree(peaked)))

# crossing gold trees are rejected in the projective regime
try:
    crf.nll(np.zeros((5, 4)), [3, 4, 0, 3], crf.PROJECTIVE)
except crf.RegimeMismatch as e:
    print("RegimeMismatch:", e)
