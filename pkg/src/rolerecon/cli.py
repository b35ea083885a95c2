"""Command-line interface: synth, train, label, eval, baseline.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Optional, Sequence

from . import synth
from .corpus import FORMATS, ConllError, extract_instances, read_conll
from .metrics import attach_gold, evaluate, read_labels, syntf_baseline, write_labels
from .trainer import ModelFormatError, TrainConfig, TrainingError, label, load_model, save_model, train

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="CoNLL file")
    p.add_argument("--format", choices=FORMATS, default="conll2008")
    p.add_argument("--predicted", action="store_true", help="read predicted instead of gold syntax columns")
    p.add_argument("--pos-prefix", default="V", help="POS prefix of predicates to keep (default V)")


def _add_report(p):
    p.add_argument("--json", action="store_true", help="machine-readable report instead of TSV")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rolerecon", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    d = synth.SynthConfig()
    p = sub.add_parser("synth", help="write a synthetic corpus with planted roles")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--predicates", type=int, default=d.predicates)
    p.add_argument("--roles", type=int, default=d.roles)
    p.add_argument("--vocab", type=int, default=d.vocab)
    p.add_argument("--sentences", type=int, default=d.sentences)
    p.add_argument("--noise", type=float, default=d.noise)
    p.add_argument("--no-ambiguous", action="store_true", help="give every role its own dependency relation")
    p.add_argument("--scenarios", type=int, default=d.scenarios)
    p.add_argument("--coupling", type=float, default=d.coupling)

    t = TrainConfig()
    p = sub.add_parser("train", help="train a model")
    _add_input(p)
    p.add_argument("--model", required=True, help="output model file (JSON)")
    p.add_argument("--config", help="JSON file with flag values; explicit flags override it")
    p.add_argument("--roles", type=int, default=t.roles)
    p.add_argument("--dim", type=int, default=t.dim)
    p.add_argument("--proj", type=int, default=t.proj)
    p.add_argument("--neg", type=int, default=t.negatives)
    p.add_argument("--epochs", type=int, default=t.epochs)
    p.add_argument("--lr", type=float, default=t.lr)
    p.add_argument("--eps", type=float, default=t.eps)
    p.add_argument("--l2", type=float, default=t.l2)
    p.add_argument("--seed", type=int, default=t.seed)
    p.add_argument("--lemma-min-count", type=int, default=t.lemma_min_count)
    p.add_argument("--feature-min-count", type=int, default=t.feature_min_count)
    p.add_argument("--verb-min-count", type=int, default=t.verb_min_count)
    p.add_argument("--log", help="write the per-epoch training log here (default: stderr)")

    p = sub.add_parser("label", help="label arguments with a trained model")
    p.add_argument("--model", required=True)
    _add_input(p)
    p.add_argument("--out", required=True, help="output TSV")

    p = sub.add_parser("eval", help="score predicted labels against gold roles")
    p.add_argument("--pred", required=True, help="TSV written by `label`")
    p.add_argument("--gold", required=True, help="CoNLL file with gold roles")
    p.add_argument("--format", choices=FORMATS, default="conll2008")
    p.add_argument("--pos-prefix", default="V")
    _add_report(p)

    p = sub.add_parser("baseline", help="score the syntactic-function baseline")
    _add_input(p)
    p.add_argument("--clusters", type=int, default=20)
    _add_report(p)
    return parser


def _load_config(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            values = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(values, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in values.items()}


def _parse(parser, argv):
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.command == "train" and known.config:
        values = _load_config(known.config)
        train_parser = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices["train"]
        dests = {a.dest: a for a in train_parser._actions}
        unknown = set(values) - set(dests) - {"config"}
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key in values:
            dests[key].required = False
        train_parser.set_defaults(**values)
    return parser.parse_args(argv)


def _instances(path, fmt, predicted, prefix):
    try:
        sentences = read_conll(path, fmt, predicted)
    except OSError as exc:
        raise DataError(str(exc)) from None
    except ConllError as exc:
        raise DataError(f"{path}: {exc}") from None
    return extract_instances(sentences, prefix)


def _report(scores, as_json):
    print(scores.to_json() if as_json else scores.to_tsv(), end="" if not as_json else "\n")
    print(scores.line(), file=sys.stderr)


def cmd_synth(args):
    config = synth.SynthConfig(
        predicates=args.predicates, roles=args.roles, vocab=args.vocab, sentences=args.sentences,
        noise=args.noise, ambiguous=not args.no_ambiguous, scenarios=args.scenarios,
        coupling=args.coupling, seed=args.seed)
    corpus, gold = synth.write_corpus(config, args.out)
    print(corpus)
    print(gold)


def cmd_train(args):
    config = TrainConfig(
        roles=args.roles, dim=args.dim, proj=args.proj, negatives=args.neg, epochs=args.epochs,
        lr=args.lr, eps=args.eps, seed=args.seed, lemma_min_count=args.lemma_min_count,
        feature_min_count=args.feature_min_count, verb_min_count=args.verb_min_count,
        l2=args.l2, predicate_pos=args.pos_prefix)
    instances = _instances(args.input, args.format, args.predicted, config.predicate_pos)
    if not instances:
        raise DataError(f"{args.input}: no predicate instances with arguments")
    log = open(args.log, "w", encoding="utf-8") if args.log else sys.stderr
    try:
        model = train(instances, config, log=log)
    except TrainingError as exc:
        raise DataError(str(exc)) from None
    finally:
        if args.log:
            log.close()
    save_model(model, args.model)


def cmd_label(args):
    try:
        model = load_model(args.model)
    except OSError as exc:
        raise DataError(str(exc)) from None
    instances = _instances(args.input, args.format, args.predicted, model.config.predicate_pos)
    with open(args.out, "w", encoding="utf-8") as f:
        write_labels(label(instances, model), f)


def cmd_eval(args):
    instances = _instances(args.gold, args.format, False, args.pos_prefix)
    try:
        with open(args.pred, encoding="utf-8") as f:
            labels = read_labels(f)
        clustering = attach_gold(labels, instances)
        scores = evaluate(clustering)
    except OSError as exc:
        raise DataError(str(exc)) from None
    except (KeyError, ValueError) as exc:
        raise DataError(f"label/gold mismatch: {exc.args[0]}") from None
    _report(scores, args.json)


def cmd_baseline(args):
    if args.clusters < 1:
        raise UsageError("--clusters must be >= 1")
    instances = _instances(args.input, args.format, args.predicted, args.pos_prefix)
    try:
        scores = evaluate(syntf_baseline(instances, args.clusters))
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _report(scores, args.json)


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "label": cmd_label, "eval": cmd_eval,
            "baseline": cmd_baseline}


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = _parse(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ConllError, ModelFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        # option values rejected by the config dataclasses
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


def main() -> None:
    sys.exit(run())
