"""Shared micro-encoder with an MWE tagging head and a tree-CRF arc scorer.

The encoder is a small stack of single-head self-attention blocks over
token + position embeddings.  Words may be split into fixed-length character
pieces; only the first piece of each word feeds the two heads.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import tensor as T
from .cupt import Sentence, extract_mwes, is_tree
from .tags import LabelVocabulary, decode, encode_lenient
from .tensor import Tensor
from .treecrf import NONPROJECTIVE, PROJECTIVE, REGIMES, is_projective, map_tree, nll_tensor

log = logging.getLogger(__name__)

SINGLE_TASK = "single-task"
MULTI_TASK = "multi-task"
MODES = (SINGLE_TASK, MULTI_TASK)
DEFAULT_ALPHA = 1 / 300
UNK = "<unk>"
CHECKPOINT_FORMAT = "mwejoint-checkpoint"
CHECKPOINT_VERSION = 1


class ConfigError(ValueError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass
class ModelConfig:
    embedding_dim: int = 32
    encoder_layers: int = 2
    hidden_dim: int = 64
    arc_dim: int = 32
    alpha: float | None = None
    mode: str = MULTI_TASK
    regime: str = NONPROJECTIVE
    max_len: int = 128
    seed: int = 0
    arc_activation: str = "tanh"
    subtoken_chunk: int = 0
    init_range: float = 0.1
    vocab_size: int = 0
    labels: list[str] = field(default_factory=lambda: ["O"])

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if self.arc_activation not in ("tanh", "identity"):
            raise ConfigError(f"arc_activation must be tanh or identity, got {self.arc_activation!r}")
        if self.alpha is None:
            self.alpha = DEFAULT_ALPHA if self.mode == MULTI_TASK else 0.0
        self.alpha = float(self.alpha)
        if self.alpha < 0 or not math.isfinite(self.alpha):
            raise ConfigError(f"alpha must be a finite non-negative number, got {self.alpha}")
        for name in ("embedding_dim", "hidden_dim", "arc_dim", "max_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.encoder_layers < 0 or self.subtoken_chunk < 0:
            raise ConfigError("encoder_layers and subtoken_chunk must be >= 0")


@dataclass
class SentenceEncoding:
    """Model input for one sentence.

    ``first`` marks the first piece of every word; ``starts[w]`` is the piece
    index of word ``w``.  ``tags`` holds label indices (-1 where the gold label
    is outside the vocabulary and must be masked) and ``heads`` the gold tree
    when it is usable for the dependency loss.
    """

    ids: list[int]
    first: list[bool]
    starts: list[int]
    tags: list[int] | None = None
    heads: list[int] | None = None

    @property
    def n_words(self) -> int:
        return len(self.starts)


@dataclass
class LossBreakdown:
    loss_mwe: float
    loss_dep: float
    combined: float
    total: Tensor = field(repr=False)
    dep_sentences: int = 0


def split_pieces(form: str, chunk: int) -> list[str]:
    if chunk <= 0 or len(form) <= chunk:
        return [form]
    return [form[:chunk]] + ["##" + form[i:i + chunk] for i in range(chunk, len(form), chunk)]


class TokenVocabulary:
    def __init__(self, items: Iterable[str] = ()):
        self.items = [UNK]
        self.index = {UNK: 0}
        for it in items:
            if it not in self.index:
                self.index[it] = len(self.items)
                self.items.append(it)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, piece: str) -> int:
        return self.index.get(piece, 0)


def build_token_vocab(corpus: Iterable[Sentence], chunk: int = 0) -> TokenVocabulary:
    return TokenVocabulary(p for s in corpus for t in s.tokens for p in split_pieces(t.form, chunk))


def combine_losses(loss_mwe, loss_dep, alpha: float):
    """``loss_mwe + alpha * loss_dep`` for floats or tape tensors."""
    if isinstance(loss_mwe, Tensor):
        return loss_mwe + T.scale(loss_dep, alpha)
    return loss_mwe + alpha * loss_dep


def right_branching(n: int) -> list[int]:
    return list(range(n))


class JointModel:
    """Parameters plus the vocabularies they were sized for."""

    def __init__(self, config: ModelConfig, words: TokenVocabulary, labels: LabelVocabulary,
                 params: dict[str, np.ndarray] | None = None):
        config.vocab_size = len(words)
        config.labels = list(labels.labels)
        self.config = config
        self.words = words
        self.labels = labels
        shapes = self.param_shapes()
        if params is None:
            rng = np.random.default_rng(config.seed)
            r = config.init_range
            params = {k: rng.uniform(-r, r, shape) for k, shape in shapes.items()}
        elif set(params) != set(shapes) or any(np.shape(params[k]) != shapes[k] for k in shapes):
            raise CheckpointError("parameter shapes do not match the model configuration")
        self.params = {k: Tensor(params[k], requires_grad=True) for k in shapes}

    def param_shapes(self) -> dict[str, tuple[int, ...]]:
        c = self.config
        d, h, k = c.embedding_dim, c.hidden_dim, c.arc_dim
        shapes = {"tok_emb": (c.vocab_size, d), "pos_emb": (c.max_len, d)}
        for i in range(c.encoder_layers):
            for w in ("wq", "wk", "wv", "wo"):
                shapes[f"block{i}.{w}"] = (d, d)
            shapes[f"block{i}.w1"] = (d, h)
            shapes[f"block{i}.b1"] = (1, h)
            shapes[f"block{i}.w2"] = (h, d)
            shapes[f"block{i}.b2"] = (1, d)
        shapes["mwe.w"] = (d, len(self.labels))
        shapes["mwe.b"] = (1, len(self.labels))
        shapes["arc.w_head"] = (d, k)
        shapes["arc.w_dep"] = (d, k)
        shapes["arc.u"] = (k, k)
        shapes["arc.root"] = (1, k)
        return shapes

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    # -- inputs -----------------------------------------------------------

    def encode_sentence(self, sentence: Sentence, gold: bool = True) -> SentenceEncoding:
        ids, first, starts = [], [], []
        for tok in sentence.tokens:
            pieces = split_pieces(tok.form, self.config.subtoken_chunk)
            starts.append(len(ids))
            for j, p in enumerate(pieces):
                ids.append(self.words[p])
                first.append(j == 0)
        enc = SentenceEncoding(ids, first, starts)
        if gold:
            labels = encode_lenient(len(sentence), extract_mwes(sentence))
            enc.tags = [self.labels.index.get(lab, -1) for lab in labels]
            heads = sentence.heads
            if all(h is not None for h in heads) and is_tree(heads):
                if self.config.regime == PROJECTIVE and not is_projective(heads):
                    log.debug("non-projective gold tree excluded from the dependency loss")
                else:
                    enc.heads = [int(h) for h in heads]
        return enc

    # -- forward ----------------------------------------------------------

    def encode(self, enc: SentenceEncoding, attention: list | None = None) -> Tensor:
        """Hidden states, one row per piece.  Attention maps are appended to ``attention``."""
        n = len(enc.ids)
        if n > self.config.max_len:
            raise ValueError(f"input of {n} pieces exceeds max_len={self.config.max_len}")
        p = self.params
        x = T.add(T.gather_rows(p["tok_emb"], enc.ids), T.gather_rows(p["pos_emb"], range(n)))
        inv_sqrt = 1.0 / math.sqrt(self.config.embedding_dim)
        for i in range(self.config.encoder_layers):
            b = f"block{i}."
            q, k, v = x @ p[b + "wq"], x @ p[b + "wk"], x @ p[b + "wv"]
            att = T.softmax_rows(T.scale(q @ k.T, inv_sqrt))
            if attention is not None:
                attention.append(att.data)
            x = x + (att @ v) @ p[b + "wo"]
            ff = T.relu(T.add(x @ p[b + "w1"], p[b + "b1"])) @ p[b + "w2"]
            x = x + T.add(ff, p[b + "b2"])
        return x

    def mwe_logits(self, hidden: Tensor, starts: Sequence[int]) -> Tensor:
        words = T.gather_rows(hidden, starts)
        return T.add(words @ self.params["mwe.w"], self.params["mwe.b"])

    def arc_scores(self, hidden: Tensor, starts: Sequence[int]) -> Tensor:
        """``(n+1) x n`` log-potentials; row 0 scores attachment to the root."""
        p = self.params
        phi = T.tanh if self.config.arc_activation == "tanh" else T.identity
        words = T.gather_rows(hidden, starts)
        heads = phi(words @ p["arc.w_head"])
        deps = phi(words @ p["arc.w_dep"])
        heads = T.concat_rows([p["arc.root"], heads])
        return (heads @ p["arc.u"]) @ deps.T

    # -- training objective ------------------------------------------------

    def combined_loss(self, batch: Sequence[SentenceEncoding]) -> LossBreakdown:
        """``loss_mwe + alpha * loss_dep`` over a batch, built on the tape."""
        cfg = self.config
        logits, targets = [], []
        dep_terms = []
        for enc in batch:
            hidden = self.encode(enc)
            logits.append(self.mwe_logits(hidden, enc.starts))
            targets.extend(enc.tags)
            if cfg.mode == MULTI_TASK and enc.heads is not None:
                dep_terms.append(nll_tensor(self.arc_scores(hidden, enc.starts), enc.heads, cfg.regime))
        mask = [t >= 0 for t in targets]
        if not any(mask):
            raise T.DegenerateInputError("batch has no trainable MWE label")
        loss_mwe = T.softmax_cross_entropy(T.concat_rows(logits), [max(t, 0) for t in targets], mask)
        if cfg.mode == SINGLE_TASK:
            return LossBreakdown(loss_mwe.item(), 0.0, loss_mwe.item(), loss_mwe)
        if not dep_terms:
            log.warning("multi-task batch without a valid gold tree; dependency loss set to 0")
            return LossBreakdown(loss_mwe.item(), 0.0, loss_mwe.item(), loss_mwe)
        dep_sum = dep_terms[0]
        for term in dep_terms[1:]:
            dep_sum = dep_sum + term
        loss_dep = T.scale(dep_sum, 1.0 / len(dep_terms))
        total = combine_losses(loss_mwe, loss_dep, cfg.alpha)
        return LossBreakdown(loss_mwe.item(), loss_dep.item(), total.item(), total, len(dep_terms))

    # -- inference ---------------------------------------------------------

    def predict(self, sentence: Sentence) -> tuple[list[str], list[int]]:
        """Tag labels and a head vector for one sentence."""
        n = len(sentence)
        enc = self.encode_sentence(sentence, gold=False)
        if len(enc.ids) > self.config.max_len:
            log.warning("sentence of %d pieces exceeds max_len=%d: tagged O with a right-branching tree",
                        len(enc.ids), self.config.max_len)
            return ["O"] * n, right_branching(n)
        hidden = self.encode(enc)
        logits = self.mwe_logits(hidden, enc.starts).data
        tags = [self.labels.to_label(int(i)) for i in np.argmax(logits, axis=1)]
        if self.config.mode == SINGLE_TASK:
            return tags, right_branching(n)
        return tags, map_tree(self.arc_scores(hidden, enc.starts).data, self.config.regime)

    def predict_mwes(self, sentence: Sentence):
        tags, heads = self.predict(sentence)
        return decode(tags), heads

    # -- checkpoints -------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "config": asdict(self.config),
            "words": self.words.items,
            "labels": self.labels.labels,
            "params": {k: {"shape": list(t.shape), "data": t.data.ravel().tolist()}
                       for k, t in self.params.items()},
        }

    @classmethod
    def from_dict(cls, blob: dict) -> "JointModel":
        if blob.get("format") != CHECKPOINT_FORMAT or blob.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError("not a mwejoint checkpoint (or unsupported version)")
        try:
            config = ModelConfig(**blob["config"])
            words = TokenVocabulary(blob["words"][1:])
            labels = LabelVocabulary(blob["labels"])
            params = {k: np.array(v["data"], dtype=np.float64).reshape(v["shape"])
                      for k, v in blob["params"].items()}
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"malformed checkpoint: {e}") from None
        if words.items != blob["words"] or labels.labels != blob["labels"]:
            raise CheckpointError("vocabulary in checkpoint is not well formed")
        return cls(config, words, labels, params)

    def save(self, path: str | Path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "JointModel":
        with open(path, encoding="utf-8") as f:
            try:
                blob = json.load(f)
            except json.JSONDecodeError as e:
                raise CheckpointError(f"{path}: {e}") from None
        return cls.from_dict(blob)
