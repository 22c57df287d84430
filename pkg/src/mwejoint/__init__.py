"""Joint verbal MWE tagging and dependency tree CRF learning on a shared encoder."""
from .cupt import MweInstance, Sentence, Token, extract_mwes, parse_cupt, read_cupt, write_cupt
from .evaluate import EvalReport, build_seen_index, evaluate, mwe_based_prf
from .model import JointModel, ModelConfig
from .tags import LabelVocabulary, build_vocab, decode, encode
from .train import TrainConfig, train
from .treecrf import TreeDistribution, log_partition, map_tree, marginals, nll

__all__ = [
    "EvalReport", "JointModel", "LabelVocabulary", "ModelConfig", "MweInstance", "Sentence", "Token",
    "TrainConfig", "TreeDistribution", "build_seen_index", "build_vocab", "decode", "encode", "evaluate",
    "extract_mwes", "log_partition", "map_tree", "marginals", "mwe_based_prf", "nll", "parse_cupt",
    "read_cupt", "train", "write_cupt",
]
__version__ = "0.1.0"
