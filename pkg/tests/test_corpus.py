import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rolerecon.corpus import (UNK, ConllError, Predicate, Sentence, Token, build_lexicon, extract_instances,
                              format_sentence, parse_conll, unigram_distribution)


def row2008(idx, form, lemma, pos, head, rel, pred="_", *apreds):
    return "\t".join([str(idx), form, lemma, pos, pos, form, lemma, pos, str(head), rel, pred, *apreds])


MARY = "\n".join([
    row2008(1, "Mary", "mary", "NNP", 2, "SBJ", "_", "A0"),
    row2008(2, "opened", "open", "VBD", 0, "ROOT", "open.01", "_"),
]) + "\n"


def test_two_token_block():
    (sent,) = parse_conll(MARY)
    assert [t.form for t in sent.tokens] == ["Mary", "opened"]
    assert sent.token(1) == Token(1, "Mary", "mary", "NNP", 2, "SBJ")
    assert sent.predicates == (Predicate(2, "open.01", ((1, "A0"),)),)


def test_bytes_and_streams():
    expected = parse_conll(MARY)
    assert parse_conll(MARY.encode()) == expected
    assert parse_conll(io.StringIO(MARY)) == expected
    assert parse_conll(io.BytesIO(MARY.encode())) == expected


def test_empty_input():
    assert parse_conll("") == []
    assert parse_conll("\n\n") == []


def test_head_cycle():
    text = row2008(1, "a", "a", "NN", 2, "X") + "\n" + row2008(2, "b", "b", "NN", 1, "X") + "\n"
    with pytest.raises(ConllError, match="cycle"):
        parse_conll(text)


def test_bad_column_count_reports_line():
    text = MARY + "\n" + "1\tonly\tthree\n"
    with pytest.raises(ConllError) as err:
        parse_conll(text)
    assert err.value.line == 4


def test_non_numeric_head():
    text = row2008(1, "a", "a", "NN", "x", "X") + "\n"
    with pytest.raises(ConllError, match="line 1"):
        parse_conll(text)


def test_self_head_rejected():
    with pytest.raises(ConllError):
        parse_conll(row2008(1, "a", "a", "NN", 1, "X") + "\n")


def test_head_out_of_range():
    with pytest.raises(ConllError):
        parse_conll(row2008(1, "a", "a", "NN", 5, "X") + "\n")


def test_conll2009_columns():
    cells = ["1", "Maria", "maria", "mariaP", "NE", "NN", "_", "_", "2", "3", "SB", "OA", "_", "_", "A0"]
    verb = ["2", "liest", "lesen", "lesenP", "VVFIN", "VVINF", "_", "_", "0", "0", "--", "--", "Y",
            "lesen.01", "_"]
    text = "\t".join(cells) + "\n" + "\t".join(verb) + "\n"
    (gold,) = parse_conll(text, "conll2009")
    assert gold.token(1) == Token(1, "Maria", "maria", "NE", 2, "SB")
    assert gold.predicates[0].arguments == ((1, "A0"),)
    (pred,) = parse_conll(text.replace("\t3\t", "\t0\t"), "conll2009", predicted=True)
    assert pred.token(1) == Token(1, "Maria", "mariaP", "NN", 0, "OA")


def test_predicted_columns_2008():
    text = "\t".join(["1", "Mary", "mary", "NNP", "NN", "Mary", "mary", "NNP", "2", "SBJ", "_", "A0"]) + "\n" + \
        row2008(2, "opened", "open", "VBD", 0, "ROOT", "open.01", "_") + "\n"
    (sent,) = parse_conll(text, predicted=True)
    assert sent.token(1).pos == "NN"


def test_unknown_format():
    with pytest.raises(ValueError):
        parse_conll(MARY, "conll2012")


def test_extract_filters_by_pos(police):
    verbal = extract_instances([police], "V")
    assert len(verbal) == 1
    assert extract_instances([police], "NN") == []
    inst = verbal[0]
    assert inst.lemma == "charge"
    assert inst.arguments == (2, 5, 6)
    assert inst.argument_lemmas == ("police", "demonstrator", "with")
    assert inst.gold_roles == ("A0", "A1", "A2")


def test_extract_two_predicates_and_drops_argumentless():
    toks = (Token(1, "I", "i", "PRP", 2, "SBJ"), Token(2, "want", "want", "VBP", 0, "ROOT"),
            Token(3, "go", "go", "VB", 2, "OBJ"), Token(4, "sleep", "sleep", "VB", 2, "OBJ"))
    preds = (Predicate(3, "go.01", ((1, "A0"),)), Predicate(2, "want.01", ((3, "A1"), (1, "A0"))),
             Predicate(4, "sleep.01", ()))
    instances = extract_instances([Sentence(toks, preds)])
    assert [i.predicate for i in instances] == [3, 2]
    assert instances[1].arguments == (1, 3)


def test_extract_rejects_empty_prefix(police):
    with pytest.raises(ValueError):
        extract_instances([police], "")


def _instances(lemmas):
    toks = [Token(1, "v", "v", "VB", 0, "ROOT")]
    toks += [Token(i + 2, lem, lem, "NN", 1, "OBJ") for i, lem in enumerate(lemmas)]
    pred = Predicate(1, "v.01", tuple((i + 2, None) for i in range(len(lemmas))))
    return extract_instances([Sentence(tuple(toks), (pred,))])


def test_lexicon_min_count():
    lex = build_lexicon(_instances(["police"] * 3 + ["baton"]), min_count=2)
    assert lex.lemmas == [UNK, "police"]
    assert lex.id("baton") == 0
    assert lex.counts.tolist() == [1, 3]


def test_lexicon_min_count_one_keeps_all():
    lex = build_lexicon(_instances(["police"] * 3 + ["baton"]), min_count=1)
    assert lex.lemmas == [UNK, "police", "baton"]


def test_lexicon_empty():
    lex = build_lexicon([], 2)
    assert lex.lemmas == [UNK]
    with pytest.raises(ValueError):
        unigram_distribution(lex)


def test_lexicon_roundtrip():
    lex = build_lexicon(_instances(["a", "b", "b", "c"]), 2)
    again = type(lex).from_list(lex.to_list())
    assert again.lemmas == lex.lemmas and again.counts.tolist() == lex.counts.tolist()


@pytest.mark.parametrize("lemmas,expected", [
    (["a"] * 3 + ["b"], [0.0, 0.75, 0.25]),
    (["a"], [0.0, 1.0]),
    (["a", "b", "c", "c"], [0.0, 0.5, 0.25, 0.25]),
])
def test_unigram_examples(lemmas, expected):
    p = unigram_distribution(build_lexicon(_instances(lemmas), 1))
    np.testing.assert_allclose(p, expected, atol=1e-15)


def test_unigram_pools_rare_lemmas_in_unk():
    p = unigram_distribution(build_lexicon(_instances(["a", "a", "b", "c"]), 2))
    np.testing.assert_allclose(p, [0.5, 0.5])


names = st.text(alphabet="abcxyz", min_size=1, max_size=4)


@st.composite
def sentences(draw):
    n = draw(st.integers(1, 7))
    root = draw(st.integers(1, n))
    order = draw(st.permutations(range(1, n + 1)))
    # heads point to an earlier node in a random order, so the result is a tree
    heads = {}
    placed = [root]
    for t in order:
        if t == root:
            continue
        heads[t] = draw(st.sampled_from(placed))
        placed.append(t)
    heads[root] = 0
    tokens = tuple(Token(i, draw(names), draw(names), draw(st.sampled_from(["NN", "VB", "VBD", "IN"])),
                         heads[i], draw(st.sampled_from(["SBJ", "OBJ", "NMOD", "ROOT"]))) for i in range(1, n + 1))
    # the format orders predicates by token position
    pred_idx = sorted(draw(st.lists(st.integers(1, n), unique=True, max_size=2)))
    preds = []
    for p in pred_idx:
        args = draw(st.lists(st.integers(1, n), unique=True, max_size=3))
        preds.append(Predicate(p, draw(names) + ".01", tuple((a, draw(names)) for a in sorted(args))))
    return Sentence(tokens, tuple(preds))


@settings(max_examples=150, deadline=None)
@given(sentences(), st.sampled_from(["conll2008", "conll2009"]))
def test_roundtrip(sentence, fmt):
    (again,) = parse_conll(format_sentence(sentence, fmt) + "\n", fmt)
    assert again == sentence


@settings(max_examples=100, deadline=None)
@given(st.lists(sentences(), min_size=1, max_size=4), st.integers(1, 3))
def test_lexicon_resolves_all_and_unigram_sums(sents, min_count):
    instances = extract_instances(sents, "V")
    lex = build_lexicon(instances, min_count)
    for inst in instances:
        for lemma in inst.argument_lemmas:
            lid = lex.id(lemma)
            assert 0 <= lid < len(lex)
            assert lid == 0 or lex.lemmas[lid] == lemma
    assert all(c >= 1 for c in lex.counts[1:])
    if lex.total:
        p = unigram_distribution(lex)
        assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-12
