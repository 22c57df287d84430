"""Reading and writing CUPT files (CoNLL-U plus a PARSEME:MWE column)."""
from __future__ import annotations

import io
import logging
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence, TextIO

log = logging.getLogger(__name__)

ID, FORM, LEMMA, UPOS, XPOS, FEATS, HEAD, DEPREL, DEPS, MISC, MWE = range(11)
N_COLUMNS = 11

_CODE = re.compile(r"^([1-9][0-9]*)(?::([^:;]+))?$")
_RANGE = re.compile(r"^[0-9]+-[0-9]+$")


class CuptParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class MweInstance:
    category: str
    positions: tuple[int, ...]

    def __post_init__(self):
        pos = tuple(int(p) for p in self.positions)
        if not pos or any(b <= a for a, b in zip(pos, pos[1:])) or pos[0] < 1:
            raise ValueError(f"positions must be non-empty, positive and strictly increasing: {pos}")
        if not self.category:
            raise ValueError("empty MWE category")
        object.__setattr__(self, "positions", pos)

    @property
    def span(self) -> tuple[int, int]:
        return self.positions[0], self.positions[-1]

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class Token:
    """One word line.  ``mwe_codes`` is ``None`` for an unannotated ``_`` column."""

    index: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    head: int | None = None
    deprel: str = "_"
    deps: str = "_"
    misc: str = "_"
    mwe_codes: tuple[tuple[int, str | None], ...] | None = ()


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    comments: tuple[str, ...] = ()
    # multiword-token range lines, each stored with the index of the token it precedes
    ranges: tuple[tuple[int, str], ...] = ()

    def __len__(self):
        return len(self.tokens)

    @property
    def source_id(self) -> str | None:
        for c in self.comments:
            m = re.match(r"#\s*source_sent_id\s*=\s*(.*)$", c)
            if m:
                return m.group(1).strip()
        return None

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def heads(self) -> list[int | None]:
        return [t.head for t in self.tokens]

    @property
    def annotated(self) -> bool:
        return all(t.mwe_codes is not None for t in self.tokens)


def _parse_codes(col: str, lineno: int):
    if col == "_":
        return None
    if col == "*":
        return ()
    codes = []
    for part in col.split(";"):
        m = _CODE.match(part)
        if not m:
            raise CuptParseError(f"malformed MWE code {part!r}", lineno)
        codes.append((int(m.group(1)), m.group(2)))
    return tuple(codes)


def _parse_head(col: str, lineno: int) -> int | None:
    if col == "_":
        return None
    try:
        return int(col)
    except ValueError:
        raise CuptParseError(f"bad HEAD value {col!r}", lineno) from None


def _build_sentence(rows, comments, ranges, start_line) -> Sentence:
    tokens = []
    seen = set()
    for lineno, cols in rows:
        try:
            idx = int(cols[ID])
        except ValueError:
            raise CuptParseError(f"unsupported token index {cols[ID]!r}", lineno) from None
        if idx in seen:
            raise CuptParseError(f"duplicate token index {idx}", lineno)
        seen.add(idx)
        if idx != len(tokens) + 1:
            raise CuptParseError(f"token index {idx} out of sequence (expected {len(tokens) + 1})", lineno)
        tokens.append(Token(
            index=idx, form=cols[FORM], lemma=cols[LEMMA], upos=cols[UPOS], xpos=cols[XPOS],
            feats=cols[FEATS], head=_parse_head(cols[HEAD], lineno), deprel=cols[DEPREL],
            deps=cols[DEPS], misc=cols[MISC], mwe_codes=_parse_codes(cols[MWE], lineno),
        ))
    n = len(tokens)
    for t in tokens:
        if t.head is not None and not 0 <= t.head <= n:
            raise CuptParseError(f"head {t.head} of token {t.index} outside [0, {n}]", start_line)
    sent = Sentence(tuple(tokens), tuple(comments), tuple(ranges))
    heads = sent.heads
    if all(h is not None for h in heads) and not is_tree(heads):
        log.warning("sentence at line %d: gold heads do not form a single-root tree", start_line)
    return sent


def parse_cupt(text: str | TextIO) -> list[Sentence]:
    """Parse CUPT text (a string or an open text stream) into sentences."""
    if not isinstance(text, str):
        text = text.read()
    corpus = []
    rows, comments, ranges = [], [], []
    start = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            if rows or comments or ranges:
                if not rows:
                    raise CuptParseError("sentence without tokens", lineno)
                corpus.append(_build_sentence(rows, comments, ranges, start))
            rows, comments, ranges, start = [], [], [], None
            continue
        if start is None:
            start = lineno
        if line.startswith("#"):
            if rows:
                raise CuptParseError("comment line inside token block", lineno)
            comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != N_COLUMNS:
            raise CuptParseError(f"expected {N_COLUMNS} tab-separated columns, found {len(cols)}", lineno)
        if _RANGE.match(cols[ID]):
            ranges.append((len(rows) + 1, line))
            continue
        rows.append((lineno, cols))
    if rows or comments or ranges:
        if not rows:
            raise CuptParseError("sentence without tokens", start)
        corpus.append(_build_sentence(rows, comments, ranges, start))
    return corpus


def read_cupt(path: str | Path) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return parse_cupt(f)


def extract_mwes(sentence: Sentence) -> list[MweInstance]:
    """Group per-token codes into expressions, in order of first occurrence."""
    members: dict[int, list[int]] = {}
    cats: dict[int, str] = {}
    for tok in sentence.tokens:
        for mwe_id, cat in tok.mwe_codes or ():
            members.setdefault(mwe_id, []).append(tok.index)
            if cat is not None:
                if mwe_id in cats and cats[mwe_id] != cat:
                    raise CuptParseError(f"MWE {mwe_id} given two categories {cats[mwe_id]!r} and {cat!r}")
                cats[mwe_id] = cat
    out = []
    for mwe_id, pos in members.items():
        if mwe_id not in cats:
            raise CuptParseError(f"MWE {mwe_id} never given a category")
        out.append(MweInstance(cats[mwe_id], tuple(sorted(set(pos)))))
    return out


def with_mwes(sentence: Sentence, mwes: Iterable[MweInstance]) -> Sentence:
    """Copy of ``sentence`` whose MWE column encodes exactly ``mwes`` (ids 1..k)."""
    mwes = sorted(mwes, key=lambda m: (m.positions, m.category))
    codes: dict[int, list] = {t.index: [] for t in sentence.tokens}
    for k, m in enumerate(mwes, 1):
        for j, p in enumerate(m.positions):
            if p not in codes:
                raise ValueError(f"MWE position {p} outside sentence of length {len(sentence)}")
            codes[p].append((k, m.category if j == 0 else None))
    tokens = tuple(replace(t, mwe_codes=tuple(codes[t.index])) for t in sentence.tokens)
    return replace(sentence, tokens=tokens)


def with_heads(sentence: Sentence, heads: Sequence[int]) -> Sentence:
    if len(heads) != len(sentence):
        raise ValueError("one head per token required")
    return replace(sentence, tokens=tuple(replace(t, head=int(h)) for t, h in zip(sentence.tokens, heads)))


def _renumber(sentence: Sentence) -> dict[int, int]:
    order: dict[int, int] = {}
    for tok in sentence.tokens:
        for mwe_id, _ in tok.mwe_codes or ():
            if mwe_id not in order:
                order[mwe_id] = len(order) + 1
    return order


def _format_codes(tok: Token, renum: dict[int, int], cats: dict[int, str], placed: set[int]) -> str:
    if tok.mwe_codes is None:
        return "_"
    if not tok.mwe_codes:
        return "*"
    parts = []
    for mwe_id, _ in tok.mwe_codes:
        new = renum[mwe_id]
        if new in placed:
            parts.append(str(new))
        else:
            placed.add(new)
            parts.append(f"{new}:{cats[mwe_id]}")
    return ";".join(parts)


def write_cupt(corpus: Iterable[Sentence], out: TextIO | None = None) -> str:
    """Serialize sentences; MWE ids are renumbered 1..k per sentence and the
    category is written on the first token of each expression."""
    buf = io.StringIO()
    for sent in corpus:
        renum = _renumber(sent)
        cats = {}
        for tok in sent.tokens:
            for mwe_id, cat in tok.mwe_codes or ():
                if cat is not None:
                    cats[mwe_id] = cat
        missing = set(renum) - set(cats)
        if missing:
            raise ValueError(f"MWE ids without category: {sorted(missing)}")
        placed: set[int] = set()
        for c in sent.comments:
            buf.write(c + "\n")
        ranges = list(sent.ranges)
        for tok in sent.tokens:
            while ranges and ranges[0][0] == tok.index:
                buf.write(ranges.pop(0)[1] + "\n")
            cols = [str(tok.index), tok.form, tok.lemma, tok.upos, tok.xpos, tok.feats,
                    "_" if tok.head is None else str(tok.head), tok.deprel, tok.deps, tok.misc,
                    _format_codes(tok, renum, cats, placed)]
            buf.write("\t".join(cols) + "\n")
        for _, line in ranges:
            buf.write(line + "\n")
        buf.write("\n")
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def save_cupt(corpus: Iterable[Sentence], path: str | Path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        write_cupt(corpus, f)


def is_tree(heads: Sequence[int | None]) -> bool:
    """True if ``heads`` (1-based, 0 = root) is an acyclic tree with exactly one root child."""
    n = len(heads)
    if n == 0 or any(h is None or not 0 <= h <= n for h in heads):
        return False
    if sum(1 for h in heads if h == 0) != 1:
        return False
    for d in range(1, n + 1):
        seen = set()
        cur = d
        while cur != 0:
            if cur in seen:
                return False
            seen.add(cur)
            cur = heads[cur - 1]
    return True
