"""Independent reference computations used by the tests."""
import itertools
import math

import numpy as np


def central_diff(f, x: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar ``f`` at array ``x`` (modified in place, restored)."""
    grad = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + eps
        hi = f()
        x[i] = old - eps
        lo = f()
        x[i] = old
        grad[i] = (hi - lo) / (2 * eps)
    return grad


def rel_error(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))))


def brute_trees(n, projective=False):
    """Single-root trees by filtering all head vectors (written independently of the package)."""
    out = []
    for heads in itertools.product(range(n + 1), repeat=n):
        if sum(h == 0 for h in heads) != 1 or any(h == d for d, h in enumerate(heads, 1)):
            continue
        ok = True
        for d in range(1, n + 1):
            cur, steps = d, 0
            while cur != 0 and steps <= n:
                cur = heads[cur - 1]
                steps += 1
            if cur != 0:
                ok = False
                break
        if not ok:
            continue
        if projective:
            # an arc (h, d) is projective iff h dominates every word strictly between them
            for d, h in enumerate(heads, 1):
                for k in range(min(h, d) + 1, max(h, d)):
                    cur = k
                    while cur not in (0, h):
                        cur = heads[cur - 1]
                    if cur != h:
                        ok = False
            if not ok:
                continue
        out.append(heads)
    return out


def brute_crf(scores, projective=False, trees=None):
    """(logZ, marginals, best score) by enumeration."""
    scores = np.asarray(scores)
    n = scores.shape[1]
    if trees is None:
        trees = brute_trees(n, projective)
    tree_scores = np.array([sum(scores[h, d] for d, h in enumerate(t)) for t in trees])
    top = tree_scores.max()
    logz = top + math.log(np.exp(tree_scores - top).sum())
    mu = np.zeros_like(scores)
    for t, sc in zip(trees, tree_scores):
        for d, h in enumerate(t):
            mu[h, d] += math.exp(sc - logz)
    return logz, mu, top


def exhaustive_overlap(gold, pred) -> int:
    """Largest total overlap over all one-to-one pairings of predicted to gold expressions."""
    best = 0
    g = [set(m.positions) for m in gold]
    p = [set(m.positions) for m in pred]
    k = min(len(g), len(p))
    for gi in itertools.permutations(range(len(g)), k):
        for pi in itertools.permutations(range(len(p)), k):
            best = max(best, sum(len(g[a] & p[b]) for a, b in zip(gi, pi)))
    return best


def reference_adam(x0, grad_fn, lr, steps, b1=0.9, b2=0.999, eps=1e-8):
    x, m, v = float(x0), 0.0, 0.0
    for t in range(1, steps + 1):
        g = grad_fn(x)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        mhat = m / (1 - b1 ** t)
        vhat = v / (1 - b2 ** t)
        x = x - lr * mhat / (math.sqrt(vhat) + eps)
    return x


def random_conflict_free(rng, n, categories, max_instances=4):
    """Random MWE instances with no shared token and no same-category span overlap."""
    from mwejoint.cupt import MweInstance

    chosen = []
    for _ in range(int(rng.integers(0, max_instances + 1))):
        k = int(rng.integers(1, min(n, 4) + 1))
        pos = tuple(sorted(int(p) for p in rng.choice(np.arange(1, n + 1), size=k, replace=False)))
        cat = categories[int(rng.integers(len(categories)))]
        ok = True
        for m in chosen:
            if set(m.positions) & set(pos):
                ok = False
            if m.category == cat and m.positions[0] <= pos[-1] and pos[0] <= m.positions[-1]:
                ok = False
        if ok:
            chosen.append(MweInstance(cat, pos))
    return chosen
