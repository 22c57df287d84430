"""Command line: ``train --config``, ``predict`` and ``evaluate``.

Exit codes: 0 ok, 2 configuration, 3 data, 4 checkpoint, 5 misaligned corpora.
Set ``MWEJOINT_LOG`` (e.g. ``INFO``, ``DEBUG``) for log verbosity.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .cupt import CuptParseError, read_cupt, save_cupt, with_heads, with_mwes
from .evaluate import AlignmentError, evaluate
from .model import CheckpointError, ConfigError, JointModel, ModelConfig
from .tags import decode
from .train import TrainConfig, train

log = logging.getLogger("mwejoint")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_CHECKPOINT, EXIT_ALIGN = 0, 2, 3, 4, 5
PATH_KEYS = ("train", "dev", "checkpoint", "log")


class UsageError(Exception):
    def __init__(self, code: int, message: str):
        self.code = code
        super().__init__(message)


@dataclasses.dataclass
class RunConfig:
    model: ModelConfig
    training: TrainConfig
    train: Path
    checkpoint: Path
    log: Path
    dev: Path | None = None
    language: str = ""


def _coerce(value: str, typ):
    typ = str(typ)
    if value.lower() in ("none", ""):
        return None
    if "bool" in typ:
        if value.lower() in ("1", "true", "yes"):
            return True
        if value.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if "int" in typ:
        return int(value)
    if "float" in typ:
        if "/" in value:
            num, den = value.split("/", 1)
            return float(num) / float(den)
        return float(value)
    return value


def parse_config(path: str | Path) -> RunConfig:
    """Read flat ``key = value`` lines (``#`` starts a comment)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key.replace("-", "_")] = value
    model_fields = {f.name: f.type for f in dataclasses.fields(ModelConfig)
                    if f.name not in ("vocab_size", "labels")}
    train_fields = {f.name: f.type for f in dataclasses.fields(TrainConfig)}
    known = set(model_fields) | set(train_fields) | set(PATH_KEYS) | {"language"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        mkw = {k: _coerce(raw[k], t) for k, t in model_fields.items() if k in raw}
        tkw = {k: _coerce(raw[k], t) for k, t in train_fields.items() if k in raw}
        if "seed" in raw:
            tkw["seed"] = mkw["seed"]
        mcfg = ModelConfig(**{k: v for k, v in mkw.items() if v is not None or k == "alpha"})
        tcfg = TrainConfig(**{k: v for k, v in tkw.items() if v is not None or k == "clip_norm"})
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from None
    base = path.parent
    paths = {}
    for key in PATH_KEYS:
        if key in raw and raw[key]:
            paths[key] = (base / raw[key]) if not Path(raw[key]).is_absolute() else Path(raw[key])
    for key in ("train", "checkpoint", "log"):
        if key not in paths:
            raise ConfigError(f"{path}: missing required key {key!r}")
    for key in ("train", "dev"):
        if key in paths and not paths[key].is_file():
            raise ConfigError(f"{key} corpus not found: {paths[key]}")
    return RunConfig(mcfg, tcfg, paths["train"], paths["checkpoint"], paths["log"], paths.get("dev"),
                     raw.get("language", ""))


def _read(path) -> list:
    try:
        return read_cupt(path)
    except OSError as e:
        raise UsageError(EXIT_DATA, f"cannot read {path}: {e}") from None
    except CuptParseError as e:
        raise UsageError(EXIT_DATA, f"{path}: {e}") from None


def cmd_train(args) -> int:
    try:
        cfg = parse_config(args.config)
    except ConfigError as e:
        raise UsageError(EXIT_CONFIG, str(e)) from None
    corpus = _read(cfg.train)
    dev = _read(cfg.dev) if cfg.dev else None
    try:
        result = train(corpus, dev, cfg.model, cfg.training)
    except (CuptParseError, ValueError) as e:
        raise UsageError(EXIT_DATA, f"training failed: {e}") from None
    result.model.save(cfg.checkpoint)
    cfg.log.write_text(result.log_text(), encoding="utf-8")
    log.info("trained on %d sentences (%d excluded); checkpoint %s",
             result.n_train, result.n_excluded, cfg.checkpoint)
    return EXIT_OK


def cmd_predict(args) -> int:
    try:
        model = JointModel.load(args.model)
    except (OSError, CheckpointError, ConfigError) as e:
        raise UsageError(EXIT_CHECKPOINT, f"cannot load checkpoint: {e}") from None
    corpus = _read(args.input)
    out = []
    for sent in corpus:
        tags, heads = model.predict(sent)
        new = with_mwes(sent, decode(tags))
        if args.emit_heads:
            new = with_heads(new, heads)
        out.append(new)
    save_cupt(out, args.output)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    gold, pred, train_corpus = _read(args.gold), _read(args.pred), _read(args.train)
    try:
        report = evaluate(gold, pred, train_corpus)
    except AlignmentError as e:
        raise UsageError(EXIT_ALIGN, f"gold and prediction are not aligned: {e}") from None
    sys.stdout.write(report.render())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mwejoint", description="Joint VMWE tagging and dependency tree CRF.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("train", help="train a model from a key=value config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)
    p = sub.add_parser("predict", help="tag a CUPT file with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--emit-heads", action="store_true", help="overwrite HEAD with the predicted tree")
    p.set_defaults(func=cmd_predict)
    p = sub.add_parser("evaluate", help="score a predicted CUPT file against gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--train", required=True, help="training corpus, for seen/unseen statistics")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("MWEJOINT_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as e:
        print(f"mwejoint {args.command}: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
