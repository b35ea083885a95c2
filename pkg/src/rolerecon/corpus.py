"""CoNLL 2008/2009 reading and writing, predicate instance extraction, lemma lexicon."""

from __future__ import annotations

import io
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

EMPTY = "_"
UNK = "<UNK>"

# Column positions per format: gold fields, predicted fields, PRED column, first APRED column.
_LAYOUTS = {
    "conll2008": {
        "ncols": 11,
        "gold": {"lemma": 2, "pos": 3, "head": 8, "deprel": 9},
        # 2008 has no predicted lemma/head/deprel columns
        "predicted": {"lemma": 2, "pos": 4, "head": 8, "deprel": 9},
        "pred": 10,
    },
    "conll2009": {
        "ncols": 14,
        "gold": {"lemma": 2, "pos": 4, "head": 8, "deprel": 10},
        "predicted": {"lemma": 3, "pos": 5, "head": 9, "deprel": 11},
        "pred": 13,
    },
}
FORMATS = tuple(_LAYOUTS)


class ConllError(ValueError):
    """Malformed CoNLL input. Carries the 1-based line number when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    lemma: str
    pos: str
    head: int
    deprel: str


@dataclass(frozen=True)
class Predicate:
    index: int
    sense: str
    # (argument token index, gold role or None)
    arguments: tuple[tuple[int, Optional[str]], ...]


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]
    predicates: tuple[Predicate, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    def token(self, index: int) -> Token:
        """Token by its 1-based index."""
        return self.tokens[index - 1]

    def children(self, index: int) -> list[int]:
        return [t.index for t in self.tokens if t.head == index]


@dataclass(frozen=True)
class PredicateInstance:
    """One predicate occurrence with its arguments, ordered by token index.

    Lemmas are kept as strings; integer ids come from a `Lexicon` built over
    the whole instance list (see `Lexicon.encode`).
    """

    sentence_id: int
    sentence: Sentence = field(repr=False, compare=False)
    predicate: int
    lemma: str
    arguments: tuple[int, ...]
    argument_lemmas: tuple[str, ...]
    gold_roles: tuple[Optional[str], ...]

    def __len__(self) -> int:
        return len(self.arguments)


def _check_tree(tokens: Sequence[Token], sent_no: int, first_line: int) -> None:
    n = len(tokens)
    for tok in tokens:
        if not 0 <= tok.head <= n:
            raise ConllError(f"sentence {sent_no}: head {tok.head} out of range for token {tok.index}", first_line)
        if tok.head == tok.index:
            raise ConllError(f"sentence {sent_no}: token {tok.index} is its own head", first_line)
    # 0 = unvisited, 1 = on current walk, 2 = known to reach root
    state = [0] * (n + 1)
    state[0] = 2
    for start in range(1, n + 1):
        walk = []
        node = start
        while state[node] == 0:
            state[node] = 1
            walk.append(node)
            node = tokens[node - 1].head
        if state[node] == 1:
            raise ConllError(f"head cycle in sentence {sent_no} through token {node}", first_line)
        for w in walk:
            state[w] = 2


def _parse_block(rows: list[tuple[int, list[str]]], fmt: str, predicted: bool, sent_no: int) -> Sentence:
    layout = _LAYOUTS[fmt]
    cols = layout["predicted" if predicted else "gold"]
    pred_col = layout["pred"]
    first_line = rows[0][0]

    for line_no, cells in rows:
        if len(cells) < layout["ncols"]:
            raise ConllError(f"expected at least {layout['ncols']} columns, got {len(cells)}", line_no)
    n_preds = sum(1 for _, cells in rows if cells[pred_col] != EMPTY and cells[pred_col] != "")
    expected = layout["ncols"] + n_preds
    tokens = []
    for pos, (line_no, cells) in enumerate(rows, start=1):
        if len(cells) != expected:
            raise ConllError(f"expected {expected} columns ({n_preds} predicates), got {len(cells)}", line_no)
        try:
            index = int(cells[0])
        except ValueError:
            raise ConllError(f"non-numeric ID {cells[0]!r}", line_no) from None
        if index != pos:
            raise ConllError(f"token IDs must be contiguous from 1, got {index} at position {pos}", line_no)
        try:
            head = int(cells[cols["head"]])
        except ValueError:
            raise ConllError(f"non-numeric HEAD {cells[cols['head']]!r}", line_no) from None
        tokens.append(Token(index, cells[1], cells[cols["lemma"]], cells[cols["pos"]], head, cells[cols["deprel"]]))
    _check_tree(tokens, sent_no, first_line)

    predicates = []
    k = 0
    for tok, (_, cells) in zip(tokens, rows):
        sense = cells[pred_col]
        if sense == EMPTY or sense == "":
            continue
        apred = layout["ncols"] + k
        args = tuple((t.index, c[apred]) for t, (_, c) in zip(tokens, rows) if c[apred] != EMPTY)
        predicates.append(Predicate(tok.index, sense, args))
        k += 1
    return Sentence(tuple(tokens), tuple(predicates))


def parse_conll(
    source: Union[str, bytes, IO[str], IO[bytes]],
    format: str = "conll2008",
    predicted: bool = False,
) -> list[Sentence]:
    """Parse CoNLL 2008 or 2009 text into sentences.

    `source` is a text or binary stream, or the whole document as str/bytes.
    Gold syntax columns are read unless `predicted` is set.
    """
    if format not in _LAYOUTS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        lines: Iterable = io.StringIO(source)
    else:
        lines = source

    sentences: list[Sentence] = []
    block: list[tuple[int, list[str]]] = []
    for line_no, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.rstrip("\r\n")
        if not line.strip():
            if block:
                sentences.append(_parse_block(block, format, predicted, len(sentences)))
                block = []
            continue
        block.append((line_no, line.split("\t")))
    if block:
        sentences.append(_parse_block(block, format, predicted, len(sentences)))
    return sentences


def read_conll(path, format: str = "conll2008", predicted: bool = False) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conll(f, format, predicted)


def format_sentence(sentence: Sentence, format: str = "conll2008") -> str:
    """Serialize one sentence as a CoNLL block (without the trailing blank line).

    Predicted columns are filled with copies of the gold ones.
    """
    pred_at = {p.index: p for p in sentence.predicates}
    roles = [dict(p.arguments) for p in sentence.predicates]
    lines = []
    for tok in sentence.tokens:
        pred = pred_at[tok.index].sense if tok.index in pred_at else EMPTY
        if format == "conll2008":
            cells = [str(tok.index), tok.form, tok.lemma, tok.pos, tok.pos, tok.form, tok.lemma, tok.pos,
                     str(tok.head), tok.deprel, pred]
        elif format == "conll2009":
            fill = "Y" if tok.index in pred_at else EMPTY
            cells = [str(tok.index), tok.form, tok.lemma, tok.lemma, tok.pos, tok.pos, EMPTY, EMPTY,
                     str(tok.head), str(tok.head), tok.deprel, tok.deprel, fill, pred]
        else:
            raise ValueError(f"unknown format {format!r}")
        cells.extend(r.get(tok.index) or EMPTY for r in roles)
        lines.append("\t".join(cells))
    return "\n".join(lines)


def write_conll(sentences: Iterable[Sentence], out: IO[str], format: str = "conll2008") -> None:
    for sentence in sentences:
        out.write(format_sentence(sentence, format))
        out.write("\n\n")


def extract_instances(sentences: Sequence[Sentence], predicate_pos_prefix: str = "V") -> list[PredicateInstance]:
    """One instance per annotated predicate whose POS starts with the prefix.

    Predicates without arguments are dropped.
    """
    if not predicate_pos_prefix:
        raise ValueError("predicate_pos_prefix must be non-empty")
    instances = []
    for sid, sentence in enumerate(sentences):
        for pred in sentence.predicates:
            tok = sentence.token(pred.index)
            if not tok.pos.startswith(predicate_pos_prefix) or not pred.arguments:
                continue
            args = sorted(pred.arguments)
            instances.append(PredicateInstance(
                sentence_id=sid,
                sentence=sentence,
                predicate=pred.index,
                lemma=tok.lemma,
                arguments=tuple(a for a, _ in args),
                argument_lemmas=tuple(sentence.token(a).lemma for a, _ in args),
                gold_roles=tuple(r for _, r in args),
            ))
    return instances


class Lexicon:
    """Argument lemma vocabulary. Id 0 is UNK and absorbs lemmas below `min_count`."""

    def __init__(self, lemmas: Sequence[str], counts: Sequence[int], unk_count: int = 0):
        self.lemmas = [UNK, *lemmas]
        self.counts = np.array([unk_count, *counts], dtype=np.int64)
        self._ids = {lemma: i for i, lemma in enumerate(self.lemmas)}

    def __len__(self) -> int:
        return len(self.lemmas)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self._ids and lemma != UNK

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def id(self, lemma: str) -> int:
        return self._ids.get(lemma, 0) if lemma != UNK else 0

    def ids(self, lemmas: Iterable[str]) -> np.ndarray:
        return np.array([self.id(lemma) for lemma in lemmas], dtype=np.int64)

    def to_list(self) -> list:
        return [[lemma, int(c)] for lemma, c in zip(self.lemmas, self.counts)]

    @classmethod
    def from_list(cls, rows) -> "Lexicon":
        if not rows or rows[0][0] != UNK:
            raise ValueError("lexicon must start with the UNK entry")
        return cls([r[0] for r in rows[1:]], [int(r[1]) for r in rows[1:]], int(rows[0][1]))


def build_lexicon(instances: Iterable[PredicateInstance], min_count: int = 2) -> Lexicon:
    """Count argument lemmas and keep those seen at least `min_count` times.

    Ids are assigned by descending count, ties broken by the lemma string,
    so they do not depend on instance order.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter(lemma for inst in instances for lemma in inst.argument_lemmas)
    kept = sorted((lemma for lemma, c in counts.items() if c >= min_count and lemma != UNK),
                  key=lambda lemma: (-counts[lemma], lemma))
    unk = sum(c for lemma, c in counts.items() if c < min_count or lemma == UNK)
    return Lexicon(kept, [counts[lemma] for lemma in kept], unk)


def unigram_distribution(lexicon: Lexicon) -> np.ndarray:
    """p(a) = count(a) / total over lexicon ids (UNK holds the pooled rare lemmas)."""
    total = lexicon.total
    if total <= 0:
        raise ValueError("cannot build a unigram distribution from an empty lexicon")
    return lexicon.counts / total
