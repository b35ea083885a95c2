"""Joint training of the role encoder and the reconstruction model."""

from __future__ import annotations

import json
import logging
import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from typing import IO, Callable, Optional, Sequence

import numpy as np

from . import kernels
from .corpus import Lexicon, PredicateInstance, build_lexicon, unigram_distribution
from .encoder import EncoderParams, posteriors, predict_roles
from .features import FeatureIndex, index_features, instance_features, lookup
from .metrics import LabeledArgument, RoleClustering
from .reconstructor import ReconParams

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


class TrainingError(RuntimeError):
    pass


class ModelFormatError(ValueError):
    pass


@dataclass
class TrainConfig:
    roles: int = 10
    dim: int = 30
    proj: int = 15
    negatives: int = 20
    epochs: int = 20
    lr: float = 0.1
    eps: float = 1e-8
    seed: int = 0
    lemma_min_count: int = 2
    feature_min_count: int = 2
    verb_min_count: int = 1
    l2: float = 0.0
    predicate_pos: str = "V"

    def __post_init__(self):
        if self.roles < 2:
            raise ValueError("roles must be >= 2")
        for name in ("dim", "proj", "negatives", "lemma_min_count", "feature_min_count", "verb_min_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not self.lr > 0:
            raise ValueError("lr must be > 0")
        if self.eps < 0 or self.l2 < 0:
            raise ValueError("eps and l2 must be >= 0")
        if not self.predicate_pos:
            raise ValueError("predicate_pos must be non-empty")

    @classmethod
    def from_dict(cls, values: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**values)


@dataclass
class EncodedInstance:
    """A predicate instance turned into the integer arrays the kernels consume."""

    source: PredicateInstance
    verb: int                 # row of the verb-specific projections, -1 if none
    lemmas: np.ndarray        # (N,) lexicon ids
    feature_ids: np.ndarray   # flat feature ids of all arguments
    feature_ptr: np.ndarray   # (N + 1,) offsets into feature_ids

    def features(self) -> list[np.ndarray]:
        p = self.feature_ptr
        return [self.feature_ids[p[i]:p[i + 1]] for i in range(len(p) - 1)]


@dataclass
class Model:
    config: TrainConfig
    lexicon: Lexicon
    feature_index: FeatureIndex
    verbs: list[str]
    encoder: EncoderParams
    recon: ReconParams
    history: list = field(default_factory=list, compare=False)

    def __post_init__(self):
        self._verb_ids = {v: i for i, v in enumerate(self.verbs)}

    def verb_id(self, lemma: str) -> int:
        return self._verb_ids.get(lemma, -1)

    def encode(self, instance: PredicateInstance) -> EncodedInstance:
        feats = [lookup(f, self.feature_index) for f in instance_features(instance)]
        ptr = np.zeros(len(feats) + 1, dtype=np.int64)
        ptr[1:] = np.cumsum([len(f) for f in feats])
        flat = np.concatenate(feats).astype(np.int64) if feats else np.zeros(0, dtype=np.int64)
        return EncodedInstance(
            source=instance,
            verb=self.verb_id(instance.lemma),
            lemmas=self.lexicon.ids(instance.argument_lemmas),
            feature_ids=flat,
            feature_ptr=ptr,
        )

    def posteriors(self, instance: PredicateInstance) -> np.ndarray:
        return posteriors(self.encode(instance).features(), self.encoder)


@dataclass
class AdaGradState:
    """Accumulated squared gradients for every parameter group."""

    w: np.ndarray
    u: np.ndarray
    c_shared: np.ndarray
    c_verb: np.ndarray
    b: np.ndarray

    @classmethod
    def like(cls, encoder: EncoderParams, recon: ReconParams) -> "AdaGradState":
        return cls(np.zeros_like(encoder.weights), np.zeros_like(recon.u), np.zeros_like(recon.c_shared),
                   np.zeros_like(recon.c_verb), np.zeros_like(recon.b))


def adagrad_update(param: np.ndarray, grad: np.ndarray, state: np.ndarray, lr: float, eps: float) -> None:
    """In-place AdaGrad ascent step: state += g^2, param += lr * g / (sqrt(state) + eps)."""
    if param.shape != grad.shape or param.shape != state.shape:
        raise ValueError("parameter, gradient and state shapes differ")
    state += grad * grad
    param += lr * grad / (np.sqrt(state) + eps)


class NegativeSampler:
    """Draws lemma ids i.i.d. from a fixed distribution by inverting its CDF."""

    def __init__(self, distribution: np.ndarray):
        p = np.asarray(distribution, dtype=float)
        if p.ndim != 1 or p.size == 0 or np.any(p < 0) or not math.isclose(p.sum(), 1.0, abs_tol=1e-9):
            raise ValueError("distribution must be a non-empty probability vector")
        self.cdf = np.cumsum(p)
        self.cdf[-1] = 1.0

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        return np.searchsorted(self.cdf, rng.random(shape), side="right").astype(np.int64)


def sample_negatives(distribution: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    return NegativeSampler(distribution).sample(rng, n)


def build_verbs(instances: Sequence[PredicateInstance], min_count: int = 1) -> list[str]:
    counts = Counter(inst.lemma for inst in instances)
    return sorted(v for v, c in counts.items() if c >= min_count)


def init_model(instances: Sequence[PredicateInstance], config: TrainConfig,
               rng: np.random.Generator) -> Model:
    lexicon = build_lexicon(instances, config.lemma_min_count)
    index = index_features(instances, config.feature_min_count)
    verbs = build_verbs(instances, config.verb_min_count)
    logger.info("lexicon %d lemmas, %d features, %d verbs", len(lexicon), len(index), len(verbs))
    encoder = EncoderParams.zeros(config.roles, len(index))
    recon = ReconParams.initialize(len(lexicon), len(verbs), config.roles, config.dim, config.proj, rng)
    return Model(config, lexicon, index, verbs, encoder, recon)


def train(instances: Sequence[PredicateInstance], config: Optional[TrainConfig] = None,
          log: Optional[IO[str]] = None,
          on_epoch: Optional[Callable[[int, Model], None]] = None) -> Model:
    """Fit both components with per-instance AdaGrad on the negative-sampling objective.

    Writes one ``epoch<TAB>mean objective<TAB>seconds`` line per epoch to `log`
    and keeps the same triples in ``model.history``. `on_epoch` is called with
    the epoch number and the live model after every epoch, e.g. to pick the
    epoch count on held-out data.
    """
    config = config or TrainConfig()
    if not instances:
        raise ValueError("no training instances")
    rng = np.random.default_rng(config.seed)
    model = init_model(instances, config, rng)
    data = [model.encode(inst) for inst in instances]
    sampler = NegativeSampler(unigram_distribution(model.lexicon))
    state = AdaGradState.like(model.encoder, model.recon)

    W, rp = model.encoder.weights, model.recon
    fslot = np.full(W.shape[1], -1, dtype=np.int64)
    lslot = np.full(rp.u.shape[0], -1, dtype=np.int64)
    step = kernels.instance_step
    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        total = 0.0
        for j in rng.permutation(len(data)):
            item = data[j]
            negs = sampler.sample(rng, (len(item.lemmas), config.negatives))
            obj = step(W, rp.u, rp.c_shared, rp.c_verb, rp.b,
                       state.w, state.u, state.c_shared, state.c_verb, state.b,
                       item.verb, item.feature_ids, item.feature_ptr, item.lemmas, negs,
                       config.lr, config.eps, config.l2, fslot, lslot)
            if not math.isfinite(obj):
                src = item.source
                raise TrainingError(
                    f"non-finite objective at epoch {epoch}, sentence {src.sentence_id}, "
                    f"predicate token {src.predicate} ({src.lemma})")
            total += obj
        for name, arr in (("w", W), ("u", rp.u), ("c_shared", rp.c_shared), ("c_verb", rp.c_verb), ("b", rp.b)):
            if not np.all(np.isfinite(arr)):
                raise TrainingError(f"non-finite values in parameter group {name} after epoch {epoch}")
        mean = total / len(data)
        seconds = time.perf_counter() - start
        model.history.append((epoch, mean, seconds))
        logger.info("epoch %d mean objective %.6f (%.2fs)", epoch, mean, seconds)
        if log is not None:
            log.write(f"{epoch}\t{mean:.6f}\t{seconds:.3f}\n")
            log.flush()
        if on_epoch is not None:
            on_epoch(epoch, model)
    return model


def label(instances: Sequence[PredicateInstance], model: Model) -> RoleClustering:
    """Assign each argument its most probable role using the encoder alone."""
    labeled = []
    for inst in instances:
        roles = predict_roles(model.encode(inst).features(), model.encoder)
        for arg, role, gold in zip(inst.arguments, roles, inst.gold_roles):
            labeled.append(LabeledArgument(inst.sentence_id, inst.predicate, arg, inst.lemma, int(role), gold))
    return RoleClustering(labeled)


def _blocks(arr: np.ndarray) -> list:
    return arr.tolist()


def model_to_dict(model: Model) -> dict:
    rp = model.recon
    return {
        "version": FORMAT_VERSION,
        "config": asdict(model.config),
        "lexicon": model.lexicon.to_list(),
        "feature_index": model.feature_index.to_list(),
        "verbs": list(model.verbs),
        "encoder": _blocks(model.encoder.weights),
        "u": _blocks(rp.u),
        "c_shared": _blocks(rp.c_shared),
        "c_verb": {v: _blocks(rp.c_verb[i]) for i, v in enumerate(model.verbs)},
        "b": _blocks(rp.b),
    }


def _array(values, shape, name) -> np.ndarray:
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelFormatError(f"{name}: {exc}") from None
    if arr.size == 0:
        arr = arr.reshape(shape)
    if arr.shape != tuple(shape):
        raise ModelFormatError(f"{name}: expected shape {tuple(shape)}, got {arr.shape}")
    return arr


def model_from_dict(doc: dict) -> Model:
    if not isinstance(doc, dict):
        raise ModelFormatError("model document must be a JSON object")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {doc.get('version')!r}, expected {FORMAT_VERSION}")
    try:
        config = TrainConfig.from_dict(doc["config"])
        lexicon = Lexicon.from_list(doc["lexicon"])
        index = FeatureIndex.from_list(doc["feature_index"])
        verbs = list(doc["verbs"])
        R, d, k, V = config.roles, config.dim, config.proj, len(lexicon)
        weights = _array(doc["encoder"], (R, len(index)), "encoder")
        u = _array(doc["u"], (V, d), "u")
        c_shared = _array(doc["c_shared"], (R, d, k), "c_shared")
        if set(doc["c_verb"]) != set(verbs):
            raise ModelFormatError("c_verb keys do not match the verb list")
        c_verb = np.zeros((len(verbs), R, d, k))
        for i, v in enumerate(verbs):
            c_verb[i] = _array(doc["c_verb"][v], (R, d, k), f"c_verb[{v}]")
        b = _array(doc["b"], (V,), "b")
    except (KeyError, TypeError, IndexError) as exc:
        raise ModelFormatError(f"malformed model document: {exc!r}") from None
    except ValueError as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(str(exc)) from None
    return Model(config, lexicon, index, verbs, EncoderParams(weights), ReconParams(u, c_shared, c_verb, b))


def dumps_model(model: Model) -> str:
    # json writes floats with repr(), which round-trips float64 exactly
    return json.dumps(model_to_dict(model), ensure_ascii=True, separators=(",", ":")) + "\n"


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(dumps_model(model))


def load_model(path) -> Model:
    try:
        with open(path, encoding="ascii") as f:
            doc = json.load(f)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"{path}: not a valid model file ({exc})") from None
    return model_from_dict(doc)
