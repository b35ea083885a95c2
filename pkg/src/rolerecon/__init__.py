"""Unsupervised semantic role induction by argument reconstruction."""

from .corpus import (ConllError, Lexicon, PredicateInstance, Sentence, Token, build_lexicon,
                     extract_instances, parse_conll, read_conll, unigram_distribution)
from .features import FeatureIndex, extract_features, index_features, vectorize
from .kernels import BACKEND
from .metrics import RoleClustering, Scores, evaluate, syntf_baseline
from .synth import SynthConfig, generate
from .trainer import Model, TrainConfig, label, load_model, save_model, train

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConllError", "FeatureIndex", "Lexicon", "Model", "PredicateInstance", "RoleClustering",
    "Scores", "Sentence", "SynthConfig", "Token", "TrainConfig", "build_lexicon", "evaluate",
    "extract_features", "extract_instances", "generate", "index_features", "label", "load_model",
    "parse_conll", "read_conll", "save_model", "syntf_baseline", "train", "unigram_distribution",
    "vectorize",
]
