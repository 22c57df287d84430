"""First-order dependency tree CRF with a single root child.

Arc scores are an ``(n+1) x n`` matrix: ``scores[h, d-1]`` is the
log-potential of the arc from head ``h`` (0 is the artificial root) to
dependent ``d`` in ``1..n``.  Self-arcs ``scores[d, d-1]`` are ignored.

Two regimes are supported: ``"nonprojective"`` sums over all single-root
arborescences with the matrix-tree theorem, ``"projective"`` over the
projective ones with Eisner's inside/outside recursions.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .tensor import DegenerateInputError, Tensor, custom_scalar

PROJECTIVE = "projective"
NONPROJECTIVE = "nonprojective"
REGIMES = (PROJECTIVE, NONPROJECTIVE)
NEG_INF = -np.inf


class RegimeMismatch(ValueError):
    pass


class NumericalDegeneracy(ArithmeticError):
    pass


def _check(scores, regime) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if s.ndim != 2 or s.shape[0] != s.shape[1] + 1:
        raise ValueError(f"arc scores must be (n+1) x n, got {s.shape}")
    if s.shape[1] == 0:
        raise DegenerateInputError("empty sentence has no dependency tree")
    n = s.shape[1]
    mask = np.ones_like(s, dtype=bool)
    mask[np.arange(1, n + 1), np.arange(n)] = False
    if not np.all(np.isfinite(s[mask])):
        raise ValueError("arc scores must be finite")
    return s


def _full(s: np.ndarray) -> np.ndarray:
    """Square ``(n+1) x (n+1)`` view with an unused column 0 and -inf self-arcs."""
    n = s.shape[1]
    full = np.full((n + 1, n + 1), NEG_INF)
    full[:, 1:] = s
    full[np.arange(n + 1), np.arange(n + 1)] = NEG_INF
    return full


def tree_score(scores, heads) -> float:
    s = np.asarray(scores, dtype=np.float64)
    return float(sum(s[h, d] for d, h in enumerate(heads)))


def is_projective(heads) -> bool:
    arcs = [(min(h, d), max(h, d)) for d, h in enumerate(heads, 1)]
    for (a, b), (c, e) in itertools.combinations(arcs, 2):
        if a < c < b < e or c < a < e < b:
            return False
    return True


def is_single_root_tree(heads) -> bool:
    n = len(heads)
    if n == 0 or sum(1 for h in heads if h == 0) != 1:
        return False
    for d in range(1, n + 1):
        seen, cur = set(), d
        while cur != 0:
            if cur in seen or not 0 <= cur <= n:
                return False
            seen.add(cur)
            cur = heads[cur - 1]
    return True


def enumerate_trees(n: int, regime: str = NONPROJECTIVE) -> list[tuple[int, ...]]:
    """Every valid single-root head vector of length ``n`` (brute force, n <= 7)."""
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if not 1 <= n <= 7:
        raise ValueError(f"enumerate_trees supports 1 <= n <= 7, got {n}")
    out = []
    for heads in itertools.product(range(n + 1), repeat=n):
        if any(h == d for d, h in enumerate(heads, 1)):
            continue
        if not is_single_root_tree(heads):
            continue
        if regime == PROJECTIVE and not is_projective(heads):
            continue
        out.append(heads)
    return out


# -- non-projective: matrix-tree theorem ------------------------------------
#
# The determinant of the (root-as-sink) Laplacian is computed by eliminating
# one word at a time in log space (Grassmann-Taksar-Heyman style): the pivot
# of word v is the total weight of its remaining incoming arcs, and the
# reduced graph gains arcs i -> j of weight w(i,v) w(v,j) / pivot.  Every
# quantity is a sum of positive terms, so nothing cancels however large the
# scores are.  Trees with k root children carry a factor exp(-k*shift); the
# shift makes every multi-root term negligible next to the single-root ones.

def _root_shift(s: np.ndarray) -> float:
    n = s.shape[1]
    if n == 1:
        return 0.0
    finite = _full(s)[:, 1:]
    finite = finite[np.isfinite(finite)]
    return float(finite.max() - finite.min()) + np.log(n) + 40.0


def _eliminate(a: np.ndarray):
    """Log-determinant of the Laplacian of log-weight graph ``a`` (sink 0), plus a trace for the reverse sweep."""
    m = a.shape[0]
    cur = a
    trace = []
    logdet = 0.0
    for v in range(m - 1, 0, -1):
        log_pivot = float(logsumexp(cur[:v, v]))
        if not np.isfinite(log_pivot):
            raise NumericalDegeneracy(f"word {v} has no incoming arc of positive weight")
        via = cur[:v, v][:, None] + cur[v, :v][None, :] - log_pivot
        new = np.logaddexp(cur[:v, :v], via)
        np.fill_diagonal(new, NEG_INF)
        new[:, 0] = NEG_INF
        trace.append((cur, via, new, log_pivot))
        logdet += log_pivot
        cur = new
    return logdet, trace


def _eliminate_backward(trace) -> np.ndarray:
    """Gradient of the log-determinant with respect to the input log-weights."""
    grad = np.zeros((1, 1))
    for cur, via, new, log_pivot in reversed(trace):
        v = new.shape[0]
        live = np.isfinite(new)
        safe = np.where(live, new, 0.0)
        keep = np.where(live, np.exp(cur[:v, :v] - safe), 0.0)
        through = np.where(live, np.exp(via - safe), 0.0)
        g_new = np.where(live, grad, 0.0)
        prev = np.zeros((v + 1, v + 1))
        prev[:v, :v] = g_new * keep
        w = g_new * through
        prev[:v, v] += w.sum(axis=1)
        prev[v, :v] += w.sum(axis=0)
        g_pivot = 1.0 - w.sum()
        prev[:v, v] += g_pivot * np.exp(cur[:v, v] - log_pivot)
        grad = prev
    return grad


def _nonproj(s: np.ndarray, with_marginals: bool = True):
    shift = _root_shift(s)
    a = _full(s)
    a[0, 1:] -= shift
    a[:, 0] = NEG_INF
    logdet, trace = _eliminate(a)
    logz = logdet + shift
    if not with_marginals:
        return logz, None
    mu = _eliminate_backward(trace)[:, 1:]
    return logz, mu


# -- projective: Eisner inside/outside -------------------------------------

class _Eisner:
    """Log-space Eisner charts over words 1..n plus a single-root attachment.

    ``inc[i, j, L]`` is an incomplete span with head j over dependent i,
    ``inc[i, j, R]`` has head i over dependent j; ``com`` are the complete
    spans with the head at the right (L) or left (R) end.
    """

    L, R = 0, 1

    def __init__(self, s: np.ndarray, semiring: str = "sum"):
        self.s = _full(s)
        n = self.n = s.shape[1]
        self.max = semiring == "max"
        self.inc = np.full((n + 2, n + 2, 2), NEG_INF)
        self.com = np.full((n + 2, n + 2, 2), NEG_INF)
        self.bp_inc = np.zeros((n + 2, n + 2), dtype=np.int64)
        self.bp_com = np.zeros((n + 2, n + 2, 2), dtype=np.int64)
        for i in range(1, n + 1):
            self.com[i, i] = 0.0
        self._inside()

    def _reduce(self, vals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.max:
            k = np.argmax(vals, axis=1)
            return np.take_along_axis(vals, k[:, None], axis=1)[:, 0], k
        return logsumexp(vals, axis=1), np.zeros(len(vals), dtype=np.int64)

    @staticmethod
    def _spans(n: int, k: int):
        i = np.arange(1, n - k + 1)
        return i, i + k, i[:, None] + np.arange(k)[None, :]

    def _inside(self):
        # all spans of one width are independent, so each width is one vector step
        n, s, inc, com, L, R = self.n, self.s, self.inc, self.com, self.L, self.R
        for k in range(1, n):
            i, j, r = self._spans(n, k)
            jj = j[:, None]
            v, b = self._reduce(com[i[:, None], r, R] + com[r + 1, jj, L])
            inc[i, j, L] = v + s[j, i]
            inc[i, j, R] = v + s[i, j]
            self.bp_inc[i, j] = i + b
            v, b = self._reduce(com[i[:, None], r, L] + inc[r, jj, L])
            com[i, j, L] = v
            self.bp_com[i, j, L] = i + b
            v, b = self._reduce(inc[i[:, None], r + 1, R] + com[r + 1, jj, R])
            com[i, j, R] = v
            self.bp_com[i, j, R] = i + 1 + b
        roots = np.arange(1, n + 1)
        self.root_terms = s[0, roots] + com[1, roots, L] + com[roots, n, R]
        self.total = float(logsumexp(self.root_terms)) if not self.max else float(self.root_terms.max())
        self.root = 1 + int(np.argmax(self.root_terms))

    def marginals(self) -> np.ndarray:
        """Reverse sweep of the inside recursions (the outside pass)."""
        n, inc, com, L, R = self.n, self.inc, self.com, self.L, self.R
        d_inc = np.zeros_like(inc)
        d_com = np.zeros_like(com)
        mu = np.zeros((n + 1, n + 1))
        w = np.exp(self.root_terms - self.total)
        roots = np.arange(1, n + 1)
        mu[0, roots] += w
        np.add.at(d_com, (1, roots, L), w)
        np.add.at(d_com, (roots, n, R), w)
        for k in range(n - 1, 0, -1):
            i, j, r = self._spans(n, k)
            ii, jj = i[:, None], j[:, None]
            # complete spans of this width feed incomplete spans of the same width
            p = d_com[i, j, R][:, None] * np.exp(inc[ii, r + 1, R] + com[r + 1, jj, R] - com[i, j, R][:, None])
            d_inc[ii, r + 1, R] += p
            d_com[r + 1, jj, R] += p
            p = d_com[i, j, L][:, None] * np.exp(com[ii, r, L] + inc[r, jj, L] - com[i, j, L][:, None])
            d_com[ii, r, L] += p
            d_inc[r, jj, L] += p
            gl, gr = d_inc[i, j, L], d_inc[i, j, R]
            mu[j, i] += gl
            mu[i, j] += gr
            inner = com[ii, r, R] + com[r + 1, jj, L]
            p = (gl + gr)[:, None] * np.exp(inner - logsumexp(inner, axis=1, keepdims=True))
            d_com[ii, r, R] += p
            d_com[r + 1, jj, L] += p
        return mu[:, 1:]

    def heads(self) -> list[int]:
        heads = [0] * self.n
        heads[self.root - 1] = 0

        def complete(i, j, direction):
            if i == j:
                return
            r = self.bp_com[i, j, direction]
            if direction == self.L:
                complete(i, r, self.L)
                incomplete(r, j, self.L)
            else:
                incomplete(i, r, self.R)
                complete(r, j, self.R)

        def incomplete(i, j, direction):
            if direction == self.L:
                heads[i - 1] = j
            else:
                heads[j - 1] = i
            r = self.bp_inc[i, j]
            complete(i, r, self.R)
            complete(r + 1, j, self.L)

        complete(1, self.root, self.L)
        complete(self.root, self.n, self.R)
        return heads


# -- non-projective MAP: Chu-Liu-Edmonds ------------------------------------

def _chu_liu_edmonds(w: np.ndarray) -> np.ndarray:
    """Maximum spanning arborescence rooted at node 0 of a dense score matrix.

    ``w[h, d]`` scores the arc h -> d; -inf marks a missing arc.  Returns the
    head of every node (``heads[0] == -1``).
    """
    m = w.shape[0]
    w = w.copy()
    w[:, 0] = NEG_INF
    np.fill_diagonal(w, NEG_INF)
    heads = np.argmax(w, axis=0)
    heads[0] = -1
    cycle = _find_cycle(heads)
    if cycle is None:
        return heads
    in_cycle = np.zeros(m, dtype=bool)
    in_cycle[cycle] = True
    rest = np.flatnonzero(~in_cycle)           # rest[0] == 0
    c = len(rest)                              # index of the contracted node
    cyc_score = sum(w[heads[v], v] for v in cycle)
    sub = np.full((c + 1, c + 1), NEG_INF)
    sub[:c, :c] = w[np.ix_(rest, rest)]
    # arcs into the cycle: gain of replacing the cycle arc into v
    into = w[np.ix_(rest, cycle)] - np.array([w[heads[v], v] for v in cycle])[None, :] + cyc_score
    enter = np.argmax(into, axis=1)
    sub[:c, c] = into[np.arange(c), enter]
    # arcs out of the cycle
    out = w[np.ix_(cycle, rest)]
    leave = np.argmax(out, axis=0)
    sub[c, :c] = out[leave, np.arange(c)]
    sub_heads = _chu_liu_edmonds(sub)
    result = np.full(m, -1)
    for k, v in enumerate(rest):
        if k == 0:
            continue
        h = sub_heads[k]
        result[v] = cycle[leave[k]] if h == c else rest[h]
    for v in cycle:
        result[v] = heads[v]
    h = sub_heads[c]
    entry = cycle[enter[h]]
    result[entry] = rest[h]
    return result


def _find_cycle(heads: np.ndarray):
    m = len(heads)
    color = np.zeros(m, dtype=np.int8)
    for start in range(1, m):
        path = []
        v = start
        while v > 0 and color[v] == 0:
            color[v] = 1
            path.append(v)
            v = heads[v]
        if v > 0 and color[v] == 1:
            return path[path.index(v):]
        for u in path:
            color[u] = 2
    return None


def _nonproj_map(s: np.ndarray) -> list[int]:
    full = _full(s)
    heads = _chu_liu_edmonds(full)
    if int(np.sum(heads[1:] == 0)) == 1:
        return [int(h) for h in heads[1:]]
    best, best_score = None, NEG_INF
    n = s.shape[1]
    for r in range(1, n + 1):
        w = full.copy()
        w[0, :] = NEG_INF
        w[0, r] = full[0, r]
        cand = _chu_liu_edmonds(w)
        sc = tree_score(s, [h for h in cand[1:]])
        if sc > best_score:
            best, best_score = cand, sc
    return [int(h) for h in best[1:]]


# -- public surface ---------------------------------------------------------

def log_partition(scores, regime: str = NONPROJECTIVE) -> float:
    s = _check(scores, regime)
    if regime == PROJECTIVE:
        return _Eisner(s).total
    return _nonproj(s, with_marginals=False)[0]


def marginals(scores, regime: str = NONPROJECTIVE) -> np.ndarray:
    """``mu[h, d-1] = P(arc h -> d)``; each column sums to one."""
    s = _check(scores, regime)
    if regime == PROJECTIVE:
        return _Eisner(s).marginals()
    return _nonproj(s)[1]


def map_tree(scores, regime: str = NONPROJECTIVE) -> list[int]:
    s = _check(scores, regime)
    if regime == PROJECTIVE:
        return _Eisner(s, "max").heads()
    return _nonproj_map(s)


def nll(scores, gold, regime: str = NONPROJECTIVE) -> tuple[float, np.ndarray]:
    """Negative log-likelihood of ``gold`` and its gradient ``mu - 1{gold}``."""
    s = _check(scores, regime)
    gold = [int(h) for h in gold]
    n = s.shape[1]
    if len(gold) != n or not is_single_root_tree(gold):
        raise ValueError(f"gold heads {gold} are not a single-root tree over {n} tokens")
    if regime == PROJECTIVE:
        if not is_projective(gold):
            raise RegimeMismatch(f"gold tree {gold} is non-projective")
        chart = _Eisner(s)
        logz, mu = chart.total, chart.marginals()
    else:
        logz, mu = _nonproj(s)
    grad = mu
    grad[gold, np.arange(n)] -= 1.0
    loss = logz - tree_score(s, gold)
    return max(loss, 0.0), grad


def nll_tensor(scores: Tensor, gold, regime: str = NONPROJECTIVE) -> Tensor:
    """Tree NLL as a tape node whose backward is the closed-form gradient."""
    loss, grad = nll(scores.data, gold, regime)
    return custom_scalar(scores, loss, grad, "tree_nll")


@dataclass
class TreeDistribution:
    scores: np.ndarray
    regime: str = NONPROJECTIVE
    _logz: float | None = field(default=None, repr=False)

    def __post_init__(self):
        self.scores = _check(self.scores, self.regime)

    @property
    def n(self) -> int:
        return self.scores.shape[1]

    @property
    def log_partition(self) -> float:
        if self._logz is None:
            self._logz = log_partition(self.scores, self.regime)
        return self._logz

    @property
    def marginals(self) -> np.ndarray:
        return marginals(self.scores, self.regime)

    @property
    def argmax(self) -> list[int]:
        return map_tree(self.scores, self.regime)

    def log_prob(self, heads) -> float:
        return tree_score(self.scores, heads) - self.log_partition
