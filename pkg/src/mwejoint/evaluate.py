"""MWE-based, unseen, variant and token-based scores.

An expression is *seen* when its multiset of lemmas occurs among the gold
expressions of the training corpus.  A seen expression is a *variant* when
its surface realization (lower-cased forms in order plus the gaps between
consecutive members) was never observed in training.
"""
from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .cupt import MweInstance, Sentence, extract_mwes
from .tensor import DegenerateInputError

log = logging.getLogger(__name__)


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    n_gold: int = 0
    n_pred: int = 0
    n_correct: float = 0

    @property
    def empty_gold(self) -> bool:
        return self.n_gold == 0

    @property
    def empty_pred(self) -> bool:
        return self.n_pred == 0

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))


def f1_score(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _prf(correct, n_gold, n_pred) -> PRF:
    p = correct / n_pred if n_pred else 0.0
    r = correct / n_gold if n_gold else 0.0
    return PRF(p, r, f1_score(p, r), n_gold, n_pred, correct)


def _matches(gold: Sequence[MweInstance], pred: Sequence[MweInstance], use_category=False) -> int:
    key = (lambda m: (m.positions, m.category)) if use_category else (lambda m: m.positions)
    g, p = Counter(map(key, gold)), Counter(map(key, pred))
    return sum(min(c, p[k]) for k, c in g.items())


def mwe_based_prf(gold: Sequence[Sequence[MweInstance]], pred: Sequence[Sequence[MweInstance]],
                  category: str | None = None) -> PRF:
    """Exact position-set matching per sentence.

    Categories are ignored unless ``category`` is given, in which case both
    sides are restricted to it.
    """
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    correct = n_gold = n_pred = 0
    for g, p in zip(gold, pred):
        if category is not None:
            g = [m for m in g if m.category == category]
            p = [m for m in p if m.category == category]
        correct += _matches(g, p)
        n_gold += len(g)
        n_pred += len(p)
    return _prf(correct, n_gold, n_pred)


def _overlap_pairs(gold, pred) -> int:
    """Overlapping tokens under the best one-to-one pairing of predictions to gold."""
    if not gold or not pred:
        return 0
    overlap = np.array([[len(set(g.positions) & set(p.positions)) for p in pred] for g in gold])
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    return int(overlap[rows, cols].sum())


def token_based_prf(gold: Sequence[Sequence[MweInstance]], pred: Sequence[Sequence[MweInstance]]) -> PRF:
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    tp = n_gold = n_pred = 0
    for g, p in zip(gold, pred):
        tp += _overlap_pairs(g, p)
        n_gold += sum(len(m) for m in g)
        n_pred += sum(len(m) for m in p)
    return _prf(tp, n_gold, n_pred)


# -- seen / unseen / variant --------------------------------------------------

def _lemma(tok) -> str:
    if tok.lemma in ("_", ""):
        return tok.form.lower()
    return tok.lemma


def lemma_key(sentence: Sentence, mwe: MweInstance) -> tuple[str, ...]:
    return tuple(sorted(_lemma(sentence.tokens[p - 1]) for p in mwe.positions))


def surface_key(sentence: Sentence, mwe: MweInstance) -> tuple:
    forms = tuple(sentence.tokens[p - 1].form.lower() for p in mwe.positions)
    gaps = tuple(b - a for a, b in zip(mwe.positions, mwe.positions[1:]))
    return forms, gaps


@dataclass
class SeenIndex:
    lemmas: set = field(default_factory=set)
    surfaces: set = field(default_factory=set)

    def is_seen(self, sentence: Sentence, mwe: MweInstance) -> bool:
        return lemma_key(sentence, mwe) in self.lemmas

    def kind(self, sentence: Sentence, mwe: MweInstance) -> str:
        """``"unseen"``, ``"variant"`` or ``"identical"``."""
        if lemma_key(sentence, mwe) not in self.lemmas:
            return "unseen"
        if surface_key(sentence, mwe) not in self.surfaces:
            return "variant"
        return "identical"


def build_seen_index(train: Iterable[Sentence]) -> SeenIndex:
    index = SeenIndex()
    warned = False
    for sent in train:
        for m in extract_mwes(sent):
            if not warned and any(sent.tokens[p - 1].lemma in ("_", "") for p in m.positions):
                log.warning("training MWE without lemma; using lower-cased forms instead")
                warned = True
            index.lemmas.add(lemma_key(sent, m))
            index.surfaces.add(surface_key(sent, m))
    return index


def _check_aligned(gold: Sequence[Sentence], pred: Sequence[Sentence]):
    if len(gold) != len(pred):
        raise AlignmentError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    for i, (g, p) in enumerate(zip(gold, pred), 1):
        if len(g) != len(p):
            raise AlignmentError(f"sentence {i}: {len(g)} gold tokens but {len(p)} predicted")


def _restricted_prf(gold: Sequence[Sentence], pred: Sequence[Sentence], index: SeenIndex, kinds) -> PRF:
    """Score only gold expressions of the given kinds; predictions count if
    they match such a gold expression or, when unmatched, are of such a kind."""
    _check_aligned(gold, pred)
    correct = n_gold = n_pred = 0
    for gs, ps in zip(gold, pred):
        g_all = extract_mwes(gs)
        g_pos = Counter(m.positions for m in g_all)
        g_sel = [m for m in g_all if index.kind(gs, m) in kinds]
        sel_pos = Counter(m.positions for m in g_sel)
        p_sel = []
        for m in extract_mwes(ps):
            if sel_pos[m.positions]:
                p_sel.append(m)
            elif not g_pos[m.positions] and index.kind(gs, m) in kinds:
                p_sel.append(m)
        correct += _matches(g_sel, p_sel)
        n_gold += len(g_sel)
        n_pred += len(p_sel)
    return _prf(correct, n_gold, n_pred)


def unseen_prf(gold: Sequence[Sentence], pred: Sequence[Sentence], index: SeenIndex) -> PRF:
    return _restricted_prf(gold, pred, index, {"unseen"})


def variant_prf(gold: Sequence[Sentence], pred: Sequence[Sentence], index: SeenIndex) -> PRF:
    return _restricted_prf(gold, pred, index, {"variant"})


def variant_f1(gold: Sequence[Sentence], pred: Sequence[Sentence], index: SeenIndex) -> float:
    return variant_prf(gold, pred, index).f1


def seen_ratio_correlation(points: Sequence[tuple[float, float]]) -> float:
    """Pearson r between seen-percentage and global F1 across languages."""
    if len(points) < 3:
        raise DegenerateInputError("need at least three points")
    xs = [float(x) for x, _ in points]
    ys = [float(y) for _, y in points]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("zero variance")
    return sxy / math.sqrt(sxx * syy)


# -- full report --------------------------------------------------------------

@dataclass
class EvalReport:
    global_: PRF
    unseen: PRF
    variant: PRF
    token: PRF
    per_category: dict[str, PRF]
    counts: dict[str, int]

    def key_values(self) -> list[tuple[str, str]]:
        out = []

        def put(prefix, s: PRF):
            out.append((f"{prefix}.P", _pct(s.precision)))
            out.append((f"{prefix}.R", _pct(s.recall)))
            out.append((f"{prefix}.F1", _pct(s.f1)))

        put("global", self.global_)
        put("unseen", self.unseen)
        out.append(("variant.F1", _pct(self.variant.f1)))
        put("token", self.token)
        for cat, s in self.per_category.items():
            put(f"category.{cat}", s)
        for k, v in self.counts.items():
            out.append((f"count.{k}", str(v)))
        flags = []
        if self.global_.empty_pred:
            flags.append("no-predictions")
        if self.unseen.empty_gold:
            flags.append("unseen-empty-gold")
        if self.variant.empty_gold:
            flags.append("variant-empty-gold")
        out.append(("flags", ",".join(flags) if flags else "none"))
        return out

    def table(self) -> str:
        rows = [("", "P", "R", "F1"),
                ("Global MWE-based", *map(_pct, self.global_)),
                ("Unseen MWE-based", *map(_pct, self.unseen)),
                ("Variant MWE-based", *map(_pct, self.variant)),
                ("Token-based", *map(_pct, self.token))]
        rows += [(f"  {cat}", *map(_pct, s)) for cat, s in self.per_category.items()]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{r[0]:<{width}}  " + "  ".join(f"{c:>6}" for c in r[1:]) for r in rows)

    def render(self) -> str:
        return self.table() + "\n\n" + "\n".join(f"{k}: {v}" for k, v in self.key_values()) + "\n"


def _pct(x: float) -> str:
    return f"{100 * x:.2f}"


def evaluate(gold: Sequence[Sentence], pred: Sequence[Sentence], train: Iterable[Sentence]) -> EvalReport:
    _check_aligned(gold, pred)
    index = build_seen_index(train)
    g_mwes = [extract_mwes(s) for s in gold]
    p_mwes = [extract_mwes(s) for s in pred]
    cats = list(dict.fromkeys(m.category for ms in itertools.chain(g_mwes, p_mwes) for m in ms))
    counts = Counter()
    for sent, ms in zip(gold, g_mwes):
        for m in ms:
            counts["gold"] += 1
            kind = index.kind(sent, m)
            counts["unseen_gold"] += kind == "unseen"
            counts["variant_gold"] += kind == "variant"
            counts["discontinuous_gold"] += m.positions[-1] - m.positions[0] + 1 != len(m)
            counts["single_token_gold"] += len(m) == 1
    counts["predicted"] = sum(len(ms) for ms in p_mwes)
    order = ("gold", "predicted", "unseen_gold", "variant_gold", "discontinuous_gold", "single_token_gold")
    return EvalReport(
        global_=mwe_based_prf(g_mwes, p_mwes),
        unseen=unseen_prf(gold, pred, index),
        variant=variant_prf(gold, pred, index),
        token=token_based_prf(g_mwes, p_mwes),
        per_category={c: mwe_based_prf(g_mwes, p_mwes, category=c) for c in cats},
        counts={k: int(counts[k]) for k in order},
    )
