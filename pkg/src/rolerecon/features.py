"""Feature patterns for argument labeling and the feature index.

Every (sentence, predicate, argument) triple yields exactly 14 strings, one
per pattern, namespaced ``P<k>=<value>``:

    P1  predicate lemma             P8   dependency path, argument up to predicate
    P2  predicate POS               P9   path length bucket (1..4, 5+)
    P3  argument form               P10  POS sequence along the path
    P4  argument lemma              P11  lemma of argument's leftmost dependent
    P5  argument POS                P12  lemma of argument's rightmost dependent
    P6  argument deprel             P13  predicate deprel + its head's POS
    P7  position wrt predicate      P14  P6 conjoined with P7

Path steps are written ``DEPREL↑`` when moving from a token to its head and
``DEPREL↓`` when moving from a head down to a dependent, walking from the
argument to the predicate through their lowest common ancestor.
"""

from __future__ import annotations

from collections import Counter
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import PredicateInstance, Sentence

UP = "↑"
DOWN = "↓"
AND = "∧"
EMPTY_PATH = "∅"
NONE = "NONE"
ROOT = "ROOT"
DISCONNECTED = "DISCONNECTED"
N_PATTERNS = 14


def _ancestors(sentence: Sentence, index: int) -> list[int]:
    """`index` followed by its heads up to (excluding) the artificial root 0."""
    chain = []
    while index != 0:
        chain.append(index)
        index = sentence.token(index).head
    return chain


def dependency_path(sentence: Sentence, predicate: int, argument: int) -> Optional[tuple[list[str], list[int]]]:
    """Deprel steps and visited tokens from argument to predicate.

    Returns None when the two tokens sit in different trees of the forest.
    """
    up_chain = _ancestors(sentence, argument)
    down_chain = _ancestors(sentence, predicate)
    common = set(down_chain)
    lca = next((t for t in up_chain if t in common), None)
    if lca is None:
        return None
    steps, nodes = [], []
    for t in up_chain:
        nodes.append(t)
        if t == lca:
            break
        steps.append(sentence.token(t).deprel + UP)
    down = down_chain[:down_chain.index(lca)]
    for t in reversed(down):
        steps.append(sentence.token(t).deprel + DOWN)
        nodes.append(t)
    return steps, nodes


def _bucket(length: int) -> str:
    length = max(length, 1)
    return "5+" if length >= 5 else str(length)


def extract_features(sentence: Sentence, predicate: int, argument: int) -> list[str]:
    pred = sentence.token(predicate)
    arg = sentence.token(argument)
    if argument < predicate:
        position = "before"
    elif argument > predicate:
        position = "after"
    else:
        position = "self"

    found = dependency_path(sentence, predicate, argument)
    if found is None:
        path = pos_path = DISCONNECTED
        bucket = "5+"
    else:
        steps, nodes = found
        path = "".join(steps) if steps else EMPTY_PATH
        bucket = _bucket(len(steps))
        # POS of each visited token, separated by the direction of the step taken
        parts = [sentence.token(nodes[0]).pos]
        for step, node in zip(steps, nodes[1:]):
            parts.append(step[-1])
            parts.append(sentence.token(node).pos)
        pos_path = "".join(parts)

    deps = sentence.children(argument)
    leftmost = sentence.token(deps[0]).lemma if deps else NONE
    rightmost = sentence.token(deps[-1]).lemma if deps else NONE
    if pred.head == 0:
        governor = ROOT
    else:
        governor = pred.deprel + AND + sentence.token(pred.head).pos

    values = (
        pred.lemma, pred.pos, arg.form, arg.lemma, arg.pos, arg.deprel, position,
        path, bucket, pos_path, leftmost, rightmost, governor, arg.deprel + AND + position,
    )
    return [f"P{k}={v}" for k, v in enumerate(values, start=1)]


def instance_features(instance: PredicateInstance) -> list[list[str]]:
    return [extract_features(instance.sentence, instance.predicate, a) for a in instance.arguments]


class FeatureIndex:
    """Feature string to dense id map. Frozen indices drop unknown strings."""

    def __init__(self, features: Sequence[str] = (), counts: Optional[Sequence[int]] = None, frozen: bool = True):
        self.features = list(features)
        self.counts = list(counts) if counts is not None else [0] * len(self.features)
        self._ids = {f: i for i, f in enumerate(self.features)}
        self.frozen = frozen

    def __len__(self) -> int:
        return len(self.features)

    def __contains__(self, feature: str) -> bool:
        return feature in self._ids

    def get(self, feature: str) -> Optional[int]:
        fid = self._ids.get(feature)
        if fid is None and not self.frozen:
            fid = len(self.features)
            self._ids[feature] = fid
            self.features.append(feature)
            self.counts.append(0)
        return fid

    def freeze(self) -> "FeatureIndex":
        self.frozen = True
        return self

    def to_list(self) -> list:
        return [[f, c] for f, c in zip(self.features, self.counts)]

    @classmethod
    def from_list(cls, rows) -> "FeatureIndex":
        return cls([r[0] for r in rows], [int(r[1]) for r in rows])


def index_features(instances: Iterable[PredicateInstance], min_count: int = 2) -> FeatureIndex:
    """Index every feature seen at least `min_count` times; ids follow descending count then string."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter = Counter()
    for inst in instances:
        for feats in instance_features(inst):
            counts.update(feats)
    kept = sorted((f for f, c in counts.items() if c >= min_count), key=lambda f: (-counts[f], f))
    return FeatureIndex(kept, [counts[f] for f in kept], frozen=True)


def lookup(features: Iterable[str], index: FeatureIndex) -> np.ndarray:
    if not index.frozen:
        raise ValueError("feature index must be frozen before vectorizing")
    ids = {index.get(f) for f in features}
    ids.discard(None)
    return np.array(sorted(ids), dtype=np.int64)


def vectorize(sentence: Sentence, predicate: int, argument: int, index: FeatureIndex) -> np.ndarray:
    """Sorted, distinct ids of the known features of one argument."""
    return lookup(extract_features(sentence, predicate, argument), index)
