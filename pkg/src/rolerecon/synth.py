"""Synthetic dependency corpora with planted roles.

Each sentence has one verbal predicate and a subset of planted roles. Every
role fills its slot from its own lemma distribution (plus a small shared
pool) and is realised with a surface cue: an attachment type and a
position relative to the predicate. Each cue is independently replaced by a
uniformly random value with probability ``noise``.

Attachment types are flat dependents of the predicate (``SBJ``, ``OBJ``,
``TMP``, ...) except ``PP``, which hangs the argument noun under a
preposition (``noun -PMOD-> with -ADV-> verb``). In the ambiguous regime
the last role shares ``OBJ`` with role 1 and differs only in position.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .corpus import Predicate, Sentence, Token, write_conll

ATTACHMENTS = ("SBJ", "OBJ", "PP", "TMP", "LOC", "MNR", "DIR", "EXT")
SHARED = ("it", "they", "one")
PREPOSITION = "with"


@dataclass(frozen=True)
class SynthConfig:
    predicates: int = 5
    roles: int = 4
    vocab: int = 20
    sentences: int = 5000
    noise: float = 0.2
    # probability that each role is realised in a sentence (resampled if none is)
    role_probs: Optional[Sequence[float]] = None
    shared_mass: float = 0.1
    determiner_prob: float = 0.5
    ambiguous: bool = True
    # sentence-level scenarios coupling the fillers of different roles
    scenarios: int = 1
    coupling: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("predicates", "roles", "vocab", "sentences"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.noise < 0.5:
            raise ValueError("noise must be in [0, 0.5)")
        if self.roles > len(ATTACHMENTS):
            raise ValueError(f"at most {len(ATTACHMENTS)} roles supported")
        if self.role_probs is not None and len(self.role_probs) != self.roles:
            raise ValueError("role_probs needs one entry per role")
        if not 0 <= self.shared_mass < 1:
            raise ValueError("shared_mass must be in [0, 1)")
        if not 1 <= self.scenarios <= self.vocab:
            raise ValueError("scenarios must be in [1, vocab]")
        if not 0 <= self.coupling <= 1:
            raise ValueError("coupling must be in [0, 1]")

    @property
    def inclusion(self) -> np.ndarray:
        if self.role_probs is not None:
            return np.asarray(self.role_probs, dtype=float)
        return np.linspace(0.9, 0.4, self.roles) if self.roles > 1 else np.ones(1)


def canonical_cues(config: SynthConfig) -> list[tuple[str, str]]:
    cues = [(ATTACHMENTS[r], "before" if r == 0 else "after") for r in range(config.roles)]
    if config.ambiguous and config.roles >= 3:
        cues[-1] = ("OBJ", "before")
    return cues


def role_lemma_table(config: SynthConfig) -> np.ndarray:
    """(predicates, roles, vocabulary) lemma probabilities; see `lemma_names` for the columns.

    Own-vocabulary weights are Zipfian with a predicate-specific ranking; the
    shared pool gets `shared_mass` split evenly.
    """
    rng = np.random.default_rng([config.seed, 1])
    R, V = config.roles, config.vocab
    table = np.zeros((config.predicates, R, R * V + len(SHARED)))
    zipf = 1.0 / np.arange(1, V + 1)
    zipf /= zipf.sum()
    for p in range(config.predicates):
        for r in range(R):
            table[p, r, r * V:(r + 1) * V] = (1 - config.shared_mass) * zipf[rng.permutation(V)]
            table[p, r, R * V:] = config.shared_mass / len(SHARED)
    return table


def scenario_table(config: SynthConfig) -> np.ndarray:
    """(predicates, roles, scenarios, vocabulary) filler probabilities.

    Role r's own vocabulary is cut into `scenarios` contiguous blocks; under
    scenario z a filler comes from block z with probability `coupling` and
    from the uncoupled distribution otherwise.
    """
    base = role_lemma_table(config)
    R, V, Z = config.roles, config.vocab, config.scenarios
    out = np.repeat(base[:, :, None, :], Z, axis=2)
    if Z == 1 or config.coupling == 0:
        return out
    blocks = np.array_split(np.arange(V), Z)
    for r in range(R):
        for z, block in enumerate(blocks):
            cols = r * V + block
            restricted = np.zeros_like(base[:, r])
            restricted[:, cols] = base[:, r, cols]
            restricted /= restricted.sum(axis=1, keepdims=True)
            out[:, r, z] = config.coupling * restricted + (1 - config.coupling) * base[:, r]
    return out


def lemma_names(config: SynthConfig) -> list[str]:
    return [f"r{r}n{j}" for r in range(config.roles) for j in range(config.vocab)] + list(SHARED)


def role_lemma_distributions(config: SynthConfig) -> np.ndarray:
    """(roles, vocabulary) lemma distribution per role, averaged over predicates and scenarios."""
    return scenario_table(config).mean(axis=(0, 2))


def expected_role_rates(config: SynthConfig) -> np.ndarray:
    """Probability that each role appears in a sentence, given at least one does."""
    pi = config.inclusion
    return pi / (1.0 - np.prod(1.0 - pi))


def _realise_cue(rng, cue, config: SynthConfig):
    attach, position = cue
    kinds = ATTACHMENTS[:max(config.roles, 4)]
    if rng.random() < config.noise:
        attach = kinds[rng.integers(len(kinds))]
    if rng.random() < config.noise:
        position = ("before", "after")[rng.integers(2)]
    return attach, position


def generate(config: SynthConfig) -> tuple[list[Sentence], list[tuple[int, int, int, str]]]:
    """Sentences in CoNLL form plus ``(sentence_id, predicate, argument, role)`` rows."""
    rng = np.random.default_rng(config.seed)
    table = scenario_table(config)
    names = lemma_names(config)
    cues = canonical_cues(config)
    pi = config.inclusion

    sentences, assignments = [], []
    for sid in range(config.sentences):
        p = int(rng.integers(config.predicates))
        z = int(rng.integers(config.scenarios))
        present = np.flatnonzero(rng.random(config.roles) < pi)
        while present.size == 0:
            present = np.flatnonzero(rng.random(config.roles) < pi)

        before, after = [], []
        for r in present:
            lemma = names[rng.choice(table.shape[3], p=table[p, r, z])]
            attach, position = _realise_cue(rng, cues[r], config)
            det = rng.random() < config.determiner_prob
            (before if position == "before" else after).append((int(r), lemma, attach, det))
        rng.shuffle(before)
        rng.shuffle(after)

        # lay out tokens: [before args] verb [after args]; heads resolved after positions are known
        rows = []        # (form, lemma, pos, head_ref, deprel); head_ref = row index or "V"
        arg_rows = []    # (row index of the argument noun, role)

        def add_unit(r, lemma, attach, det):
            if attach == "PP":
                prep = len(rows)
                rows.append((PREPOSITION, PREPOSITION, "IN", "V", "ADV"))
                noun_head, noun_rel = prep, "PMOD"
            else:
                noun_head, noun_rel = "V", attach
            if det:
                rows.append(("the", "the", "DT", len(rows) + 1, "NMOD"))
            arg_rows.append((len(rows), r))
            rows.append((lemma, lemma, "NN", noun_head, noun_rel))

        for unit in before:
            add_unit(*unit)
        verb_row = len(rows)
        rows.append((f"v{p}ed", f"v{p}", "VBD", None, "ROOT"))
        for unit in after:
            add_unit(*unit)

        tokens = []
        for i, (form, lemma, pos, head, rel) in enumerate(rows):
            if head is None:
                h = 0
            elif head == "V":
                h = verb_row + 1
            else:
                h = head + 1
            tokens.append(Token(i + 1, form, lemma, pos, h, rel))
        args = tuple(sorted((row + 1, f"A{r}") for row, r in arg_rows))
        sentences.append(Sentence(tuple(tokens), (Predicate(verb_row + 1, f"v{p}.01", args),)))
        assignments.extend((sid, verb_row + 1, a, role) for a, role in args)
    return sentences, assignments


def write_corpus(config: SynthConfig, out_dir) -> tuple[str, str]:
    """Write ``corpus.conll`` (CoNLL 2008) and ``gold.tsv`` into `out_dir`; return both paths."""
    sentences, assignments = generate(config)
    os.makedirs(out_dir, exist_ok=True)
    corpus_path = os.path.join(out_dir, "corpus.conll")
    gold_path = os.path.join(out_dir, "gold.tsv")
    with open(corpus_path, "w", encoding="utf-8") as f:
        write_conll(sentences, f, "conll2008")
    with open(gold_path, "w", encoding="utf-8") as f:
        f.write("sentence_id\tpredicate_index\targument_index\trole\n")
        for row in assignments:
            f.write("\t".join(map(str, row)) + "\n")
    return corpus_path, gold_path
