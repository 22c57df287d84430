"""Adam training loop over the combined MWE + dependency objective."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cupt import Sentence, extract_mwes, with_mwes
from .evaluate import build_seen_index, mwe_based_prf, unseen_prf
from .model import JointModel, ModelConfig, SentenceEncoding, build_token_vocab
from .tags import build_vocab, decode
from .tensor import DegenerateInputError, Tensor

log = logging.getLogger(__name__)

# the rate used to fine-tune a large pretrained encoder; far too slow for the micro-encoder
FINE_TUNING_LEARNING_RATE = 3e-5
LOG_FIELDS = ("epoch", "loss_mwe", "loss_dep", "combined", "dev_global_f1", "dev_unseen_f1")


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 10
    epochs: int = 10
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = None
    merge_dev: bool = False

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class AdamState:
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adam_step(params: dict[str, Tensor], grads: dict[str, np.ndarray | None], state: AdamState,
              lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """In-place bias-corrected Adam update.  Missing gradients count as zero."""
    for name, g in grads.items():
        if g is not None and not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for parameter {name!r}")
    state.t += 1
    c1 = 1 - beta1 ** state.t
    c2 = 1 - beta2 ** state.t
    for name, p in params.items():
        g = grads.get(name)
        if g is None:
            g = np.zeros_like(p.data)
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p.data)
            state.v[name] = np.zeros_like(p.data)
        v = state.v[name]
        m *= beta1
        m += (1 - beta1) * g
        v *= beta2
        v += (1 - beta2) * g * g
        p.data -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return params, state


def clip_gradients(grads: dict[str, np.ndarray | None], max_norm: float) -> float:
    total = math.sqrt(sum(float((g * g).sum()) for g in grads.values() if g is not None))
    if total > max_norm:
        for g in grads.values():
            if g is not None:
                g *= max_norm / total
    return total


def make_batches(items: Sequence, batch_size: int, rng: np.random.Generator) -> list[list]:
    if not items:
        raise DegenerateInputError("no usable training sentences")
    order = rng.permutation(len(items))
    return [[items[i] for i in order[k:k + batch_size]] for k in range(0, len(order), batch_size)]


def prepare(model: JointModel, corpus: Sequence[Sentence]) -> tuple[list[SentenceEncoding], int]:
    """Encode sentences for training; over-long ones are dropped and counted."""
    kept, excluded = [], 0
    for sent in corpus:
        enc = model.encode_sentence(sent)
        if len(enc.ids) > model.config.max_len:
            excluded += 1
        else:
            kept.append(enc)
    if excluded:
        log.info("excluded %d over-length sentences from training", excluded)
    return kept, excluded


@dataclass
class EpochRecord:
    epoch: int
    loss_mwe: float
    loss_dep: float
    combined: float
    dev_global_f1: float | None = None
    dev_unseen_f1: float | None = None

    def line(self) -> str:
        vals = [str(self.epoch)] + [
            "NA" if x is None else f"{x:.8f}"
            for x in (self.loss_mwe, self.loss_dep, self.combined, self.dev_global_f1, self.dev_unseen_f1)
        ]
        return "\t".join(vals)


@dataclass
class TrainResult:
    model: JointModel
    history: list[EpochRecord]
    n_train: int
    n_excluded: int
    n_dep_excluded: int
    flagged: bool = False

    def log_text(self) -> str:
        return "\t".join(LOG_FIELDS) + "\n" + "".join(r.line() + "\n" for r in self.history)


def predict_corpus(model: JointModel, corpus: Sequence[Sentence]) -> list[Sentence]:
    out = []
    for sent in corpus:
        tags, _ = model.predict(sent)
        out.append(with_mwes(sent, decode(tags)))
    return out


def check_monotone(history: Sequence[EpochRecord], after: int = 3, tol: float = 1e-3) -> bool:
    """True when per-epoch ``loss_mwe`` never rises by more than ``tol`` after epoch ``after``.

    Near convergence, shuffled mini-batches jitter the epoch mean by tiny
    amounts; ``tol`` keeps that noise from flagging a healthy run.
    """
    losses = [r.loss_mwe for r in history if r.epoch >= after]
    return all(b <= a + tol for a, b in zip(losses, losses[1:]))


def train(corpus: Sequence[Sentence], dev: Sequence[Sentence] | None,
          model_config: ModelConfig, train_config: TrainConfig) -> TrainResult:
    corpus = list(corpus)
    if train_config.merge_dev and dev:
        corpus = corpus + list(dev)
    words = build_token_vocab(corpus, model_config.subtoken_chunk)
    labels = build_vocab(corpus)
    model = JointModel(model_config, words, labels)
    items, excluded = prepare(model, corpus)
    n_dep_excluded = sum(1 for e in items if e.heads is None)
    if model_config.mode == "multi-task" and n_dep_excluded:
        log.info("%d sentences lack a usable gold tree and train the MWE head only", n_dep_excluded)
    rng = np.random.default_rng(train_config.seed)
    state = AdamState()
    seen = build_seen_index(corpus) if dev else None
    history = []
    for epoch in range(1, train_config.epochs + 1):
        sums = np.zeros(3)
        batches = make_batches(items, train_config.batch_size, rng)
        for batch in batches:
            model.zero_grad()
            losses = model.combined_loss(batch)
            losses.total.backward()
            grads = {k: p.grad for k, p in model.params.items()}
            if train_config.clip_norm:
                clip_gradients(grads, train_config.clip_norm)
            adam_step(model.params, grads, state, train_config.learning_rate,
                      train_config.beta1, train_config.beta2, train_config.eps)
            sums += (losses.loss_mwe, losses.loss_dep, losses.combined)
        rec = EpochRecord(epoch, *(sums / len(batches)))
        if dev:
            pred = predict_corpus(model, dev)
            rec.dev_global_f1 = mwe_based_prf([extract_mwes(s) for s in dev],
                                              [extract_mwes(s) for s in pred]).f1
            rec.dev_unseen_f1 = unseen_prf(dev, pred, seen).f1
        log.info("epoch %s", rec.line())
        history.append(rec)
    model.zero_grad()
    flagged = not check_monotone(history)
    if flagged:
        log.warning("training loss_mwe increased after epoch 3")
    return TrainResult(model, history, len(items), excluded, n_dep_excluded, flagged)
