import numpy as np
import pytest

from spanparser.evaluation import EvalResult, format_report, score, tree_brackets
from spanparser.trees import parse_bracketed

from support import random_ntree


def test_tree_brackets_counts_every_internal_node():
    t = parse_bracketed("(S (NP (DT the) (NN cat)) (VP (VB sat)))")[0]
    b = tree_brackets(t)
    assert b == {(0, 3, "S"): 1, (0, 2, "NP"): 1, (2, 3, "VP"): 1}


def test_tree_brackets_unary_chain_one_per_level():
    t = parse_bracketed("(TOP (S (VP (VB go))))")[0]
    b = tree_brackets(t)
    assert b == {(0, 1, "TOP"): 1, (0, 1, "S"): 1, (0, 1, "VP"): 1}


def test_tree_brackets_repeated_spans_are_a_multiset():
    t = parse_bracketed("(S (S (X x) (Y y)))")[0]
    b = tree_brackets(t)
    assert b[(0, 2, "S")] == 2


def test_score_hand_example_five_four_three():
    # 5 gold brackets, 4 predicted, 3 matched -> LR 60, LP 75, F1 66.67
    gold = parse_bracketed(
        "(TOP (S (NP (DT the) (NN cat)) (VP (VB saw) (NP (DT a) (NN dog)))))")
    pred = parse_bracketed(
        "(TOP (S (NP (DT the) (NN cat)) (VB saw) (PP (DT a) (NN dog))))")
    result = score(pred, gold)
    assert (result.matched, result.predicted, result.gold) == (3, 4, 5)
    assert result.recall == pytest.approx(60.0)
    assert result.precision == pytest.approx(75.0)
    assert result.f1 == pytest.approx(66.6667, abs=0.01)
    assert result.tsv_line() == "60.00\t75.00\t66.67"


def test_score_accumulates_over_corpus():
    gold = parse_bracketed("(S (NP (DT the) (NN cat)) (VP (VB sat)))\n"
                           "(S (NP (NN dog)) (VP (VB ran)))")
    pred = parse_bracketed("(S (NP (DT the) (NN cat)) (NP (VB sat)))\n"
                           "(S (NP (NN dog)) (VP (VB ran)))")
    r = score(pred, gold)
    assert (r.matched, r.predicted, r.gold) == (5, 6, 6)
    assert r.recall == pytest.approx(100 * 5 / 6)


def test_score_is_symmetric_in_matched_count():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a = [random_ntree(rng) for _ in range(3)]
        b = []
        for t in a:
            # rebuild with same leaf count but different structure
            words = t.sentence()
            from spanparser.trees import Tree
            b.append(Tree("S", [Tree.leaf(w, tag) for w, tag in words]))
        ab = score(a, b)
        ba = score(b, a)
        assert ab.matched == ba.matched
        assert ab.predicted == ba.gold and ab.gold == ba.predicted
        assert ab.f1 == pytest.approx(ba.f1)


def test_perfect_and_disjoint_scores():
    trees = parse_bracketed("(S (NP (NN dog)) (VP (VB ran)))")
    r = score(trees, trees)
    assert r.f1 == 100.0
    other = parse_bracketed("(X (Y (NN dog)) (Z (VB ran)))")
    r = score(other, trees)
    assert r.matched == 0 and r.f1 == 0.0


def test_score_errors_name_the_sentence():
    a = parse_bracketed("(S (X x))\n(S (X x) (Y y))")
    b = parse_bracketed("(S (X x))\n(S (X x) (Y y) (Z z))")
    with pytest.raises(ValueError) as e:
        score(a, b)
    assert "sentence 1" in str(e.value)
    with pytest.raises(ValueError):
        score(a, b[:1])


def test_zero_denominators_do_not_crash():
    r = EvalResult(matched=0, predicted=0, gold=0)
    assert r.recall == 0.0 and r.precision == 0.0 and r.f1 == 0.0


def test_format_report_lines():
    text = format_report(EvalResult(matched=3, predicted=4, gold=5))
    lines = text.split("\n")
    assert len(lines) == 6
    assert lines[0].endswith("5")
    assert lines[3].endswith("60.00")
    assert lines[5].endswith("66.67")
