"""Per-token MWE labels: IOB with a gap label ``o-`` and category suffixes.

``give this job a go`` with a VID on give/a/go is labelled
``B-VID o-VID o-VID I-VID I-VID``.
"""
from __future__ import annotations

import logging
from typing import Iterable, Sequence

from .cupt import MweInstance, Sentence, extract_mwes

log = logging.getLogger(__name__)

OUTSIDE = "O"


class EncodingConflict(ValueError):
    def __init__(self, first: MweInstance, second: MweInstance, reason: str):
        self.instances = (first, second)
        super().__init__(f"{reason}: {first} and {second}")


def split_label(label: str) -> tuple[str, str | None]:
    """``"B-LVC.full"`` -> ``("B", "LVC.full")``; ``"O"`` -> ``("O", None)``."""
    if label == OUTSIDE:
        return OUTSIDE, None
    prefix, _, cat = label.partition("-")
    if prefix not in ("B", "I", "o") or not cat:
        raise ValueError(f"not a tag: {label!r}")
    return prefix, cat


def _conflict(a: MweInstance, b: MweInstance) -> str | None:
    if set(a.positions) & set(b.positions):
        return "expressions share tokens"
    if a.category == b.category and a.span[0] <= b.span[1] and b.span[0] <= a.span[1]:
        return "same-category expressions overlap"
    return None


def encode(n: int, mwes: Iterable[MweInstance]) -> list[str]:
    mwes = sorted(mwes, key=lambda m: (m.span[0], m.positions, m.category))
    for m in mwes:
        if m.positions[-1] > n:
            raise ValueError(f"{m} lies outside a sentence of {n} tokens")
    for i, a in enumerate(mwes):
        for b in mwes[i + 1:]:
            reason = _conflict(a, b)
            if reason:
                raise EncodingConflict(a, b, reason)
    labels = [OUTSIDE] * n
    member = [False] * n
    # later-starting expressions are written last, so their gap labels win
    for m in mwes:
        first, last = m.span
        inside = set(m.positions)
        for p in range(first, last + 1):
            if p in inside:
                labels[p - 1] = ("B-" if p == first else "I-") + m.category
                member[p - 1] = True
            elif not member[p - 1]:
                labels[p - 1] = "o-" + m.category
    return labels


def encode_lenient(n: int, mwes: Iterable[MweInstance]) -> list[str]:
    """Like :func:`encode`, but drops the shorter expression of each conflicting pair."""
    kept: list[MweInstance] = []
    for m in sorted(mwes, key=lambda m: (-len(m), m.positions, m.category)):
        clash = next((k for k in kept if _conflict(k, m)), None)
        if clash is None:
            kept.append(m)
        else:
            log.warning("dropping %s: conflicts with %s", m, clash)
    return encode(n, kept)


def decode(labels: Sequence[str]) -> list[MweInstance]:
    """Group labels into expressions.  Total on arbitrary label sequences.

    ``B-c`` opens an expression (closing any open one of category c);
    ``I-c`` joins the open expression of category c or, if there is none,
    opens one; ``o-c`` never contributes a member; ``O`` closes everything.
    """
    done: list[tuple[str, list[int]]] = []
    open_: dict[str, list[int]] = {}
    for pos, label in enumerate(labels, 1):
        prefix, cat = split_label(label)
        if prefix == OUTSIDE:
            done.extend(open_.items())
            open_ = {}
        elif prefix == "B" or (prefix == "I" and cat not in open_):
            if cat in open_:
                done.append((cat, open_.pop(cat)))
            open_[cat] = [pos]
        elif prefix == "I":
            open_[cat].append(pos)
    done.extend(open_.items())
    out = [MweInstance(cat, tuple(pos)) for cat, pos in done]
    return sorted(out, key=lambda m: (m.positions, m.category))


class LabelVocabulary:
    """Ordered label set with ``O`` at index 0."""

    def __init__(self, labels: Iterable[str] = ()):
        self.labels: list[str] = [OUTSIDE]
        self.index: dict[str, int] = {OUTSIDE: 0}
        for lab in labels:
            if lab not in self.index:
                split_label(lab)
                self.index[lab] = len(self.labels)
                self.labels.append(lab)

    def add_category(self, cat: str):
        for prefix in ("B-", "o-", "I-"):
            lab = prefix + cat
            if lab not in self.index:
                self.index[lab] = len(self.labels)
                self.labels.append(lab)

    @property
    def categories(self) -> list[str]:
        return [lab[2:] for lab in self.labels if lab.startswith("B-")]

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self.index

    def __iter__(self):
        return iter(self.labels)

    def __eq__(self, other):
        return isinstance(other, LabelVocabulary) and self.labels == other.labels

    def __repr__(self):
        return f"LabelVocabulary({self.labels})"

    def to_index(self, label: str) -> int:
        return self.index[label]

    def to_label(self, i: int) -> str:
        return self.labels[i]


def build_vocab(corpus: Iterable[Sentence]) -> LabelVocabulary:
    vocab = LabelVocabulary()
    for sent in corpus:
        for m in extract_mwes(sent):
            vocab.add_category(m.category)
    return vocab
