"""Clustering evaluation (purity, collocation, F1) and the syntactic-function baseline."""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

from .corpus import PredicateInstance


@dataclass(frozen=True)
class LabeledArgument:
    sentence_id: int
    predicate: int
    argument: int
    predicate_lemma: str
    cluster: int
    gold: Optional[str] = None


@dataclass
class RoleClustering:
    arguments: list[LabeledArgument]

    def by_predicate(self) -> dict[str, list[tuple[int, Optional[str]]]]:
        groups: dict[str, list] = defaultdict(list)
        for a in self.arguments:
            groups[a.predicate_lemma].append((a.cluster, a.gold))
        return dict(groups)

    def keys(self) -> list[tuple[int, int, int]]:
        return [(a.sentence_id, a.predicate, a.argument) for a in self.arguments]


def _overlap(clusters: Sequence[Hashable], golds: Sequence[Hashable]) -> Counter:
    if len(clusters) != len(golds):
        raise ValueError("cluster and gold label sequences differ in length")
    if not clusters:
        raise ValueError("cannot score an empty clustering")
    return Counter(zip(clusters, golds))


def purity(clusters: Sequence[Hashable], golds: Sequence[Hashable]) -> float:
    """(1/N) sum over induced clusters of the largest gold class inside it."""
    best: dict = defaultdict(int)
    for (c, _), n in _overlap(clusters, golds).items():
        best[c] = max(best[c], n)
    return sum(best.values()) / len(clusters)


def collocation(clusters: Sequence[Hashable], golds: Sequence[Hashable]) -> float:
    """(1/N) sum over gold classes of the largest induced cluster share."""
    return purity(golds, clusters)


def f1(pu: float, co: float) -> float:
    return 0.0 if pu + co == 0 else 2 * pu * co / (pu + co)


@dataclass
class Scores:
    pu: float
    co: float
    f1: float
    n: int
    per_predicate: dict[str, tuple[float, float, float, int]] = field(default_factory=dict)
    excluded: int = 0

    def line(self) -> str:
        return f"PU\t{self.pu:.4f}\tCO\t{self.co:.4f}\tF1\t{self.f1:.4f}"

    def to_tsv(self) -> str:
        rows = ["predicate\tn\tPU\tCO\tF1",
                f"ALL\t{self.n}\t{self.pu:.6f}\t{self.co:.6f}\t{self.f1:.6f}"]
        for pred in sorted(self.per_predicate):
            pu, co, f, n = self.per_predicate[pred]
            rows.append(f"{pred}\t{n}\t{pu:.6f}\t{co:.6f}\t{f:.6f}")
        rows.append(f"# excluded (no gold role)\t{self.excluded}")
        return "\n".join(rows) + "\n"

    def to_json(self) -> str:
        return json.dumps({
            "PU": self.pu, "CO": self.co, "F1": self.f1, "n": self.n, "excluded": self.excluded,
            "per_predicate": {p: {"PU": v[0], "CO": v[1], "F1": v[2], "n": v[3]}
                              for p, v in sorted(self.per_predicate.items())},
        }, indent=2, ensure_ascii=False)


def aggregate(per_predicate: dict[str, tuple[float, float, int]], excluded: int = 0) -> Scores:
    """Occurrence-weighted means of per-predicate PU and CO; F1 from the aggregates."""
    total = sum(n for _, _, n in per_predicate.values())
    if total == 0:
        raise ValueError("nothing to aggregate")
    items = sorted(per_predicate.items())
    pu = sum(p * n for _, (p, _, n) in items) / total
    co = sum(c * n for _, (_, c, n) in items) / total
    detail = {k: (p, c, f1(p, c), n) for k, (p, c, n) in items}
    return Scores(pu, co, f1(pu, co), total, detail, excluded)


def evaluate(clustering: RoleClustering) -> Scores:
    """Score an induced clustering against its gold roles, predicate by predicate."""
    per_predicate = {}
    excluded = 0
    for pred, pairs in clustering.by_predicate().items():
        scored = [(c, g) for c, g in pairs if g is not None]
        excluded += len(pairs) - len(scored)
        if not scored:
            continue
        clusters, golds = zip(*scored)
        per_predicate[pred] = (purity(clusters, golds), collocation(clusters, golds), len(scored))
    return aggregate(per_predicate, excluded)


def syntf_baseline(instances: Iterable[PredicateInstance], clusters: int = 20) -> RoleClustering:
    """Cluster arguments by dependency relation: one cluster per frequent relation, one for the rest.

    Relations are ranked by their frequency over argument tokens, ties broken
    lexicographically; cluster id ``clusters`` collects all other relations.
    """
    if clusters < 1:
        raise ValueError("clusters must be >= 1")
    instances = list(instances)
    deprels = [[inst.sentence.token(a).deprel for a in inst.arguments] for inst in instances]
    counts = Counter(r for rels in deprels for r in rels)
    ranked = sorted(counts, key=lambda r: (-counts[r], r))[:clusters]
    rank = {r: i for i, r in enumerate(ranked)}
    labeled = []
    for inst, rels in zip(instances, deprels):
        for arg, rel, gold in zip(inst.arguments, rels, inst.gold_roles):
            labeled.append(LabeledArgument(inst.sentence_id, inst.predicate, arg, inst.lemma,
                                           rank.get(rel, clusters), gold))
    return RoleClustering(labeled)


def read_labels(lines: Iterable[str]) -> dict[tuple[int, int, int], int]:
    """Parse a label TSV (sentence_id, predicate_index, argument_index, induced_role)."""
    labels = {}
    for line_no, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line or line.startswith("#") or line.startswith("sentence_id"):
            continue
        cells = line.split("\t")
        if len(cells) != 4:
            raise ValueError(f"line {line_no}: expected 4 columns, got {len(cells)}")
        try:
            sid, pred, arg, role = (int(c) for c in cells)
        except ValueError:
            raise ValueError(f"line {line_no}: non-integer field") from None
        labels[(sid, pred, arg)] = role
    return labels


def write_labels(clustering: RoleClustering, out) -> None:
    out.write("sentence_id\tpredicate_index\targument_index\tinduced_role\n")
    for a in clustering.arguments:
        out.write(f"{a.sentence_id}\t{a.predicate}\t{a.argument}\t{a.cluster}\n")


def attach_gold(labels: dict[tuple[int, int, int], int], instances: Iterable[PredicateInstance]) -> RoleClustering:
    """Join predicted labels with the gold roles of `instances`; the argument sets must match exactly."""
    labeled = []
    for inst in instances:
        for arg, gold in zip(inst.arguments, inst.gold_roles):
            key = (inst.sentence_id, inst.predicate, arg)
            if key not in labels:
                raise KeyError(f"no prediction for sentence {key[0]}, predicate {key[1]}, argument {key[2]}")
            labeled.append(LabeledArgument(*key, inst.lemma, labels[key], gold))
    if len(labeled) != len(labels):
        raise KeyError(f"{len(labels) - len(labeled)} predictions have no matching gold argument")
    return RoleClustering(labeled)
