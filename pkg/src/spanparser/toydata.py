"""Deterministic synthetic treebanks for tests and demos.

A tiny hand-written PCFG over six POS tags produces unambiguous-looking
sentences with PP recursion, occasional unary chains (imperative S over VP,
bare-noun NPs, an optional TOP wrapper), and a controllable share of longer
sentences.  Everything is a pure function of the seed.
"""

from __future__ import annotations

import numpy as np

from .trees import Tree

DETS = ["the", "a", "every", "some", "this"]
ADJS = ["big", "red", "old", "happy", "tiny", "green"]
NOUNS = ["cat", "dog", "bird", "fox", "house", "boat", "fish", "telescope"]
PLURALS = ["cats", "dogs", "birds", "foxes"]
VERBS = ["sees", "likes", "finds", "chases", "holds"]
PREPS = ["in", "on", "near", "under"]
ADVS = ["often", "quietly", "never"]


def _leaf(rng, tag, words):
    return Tree.leaf(words[rng.integers(len(words))], tag)


def _np(rng, depth):
    r = rng.random()
    if r < 0.40:
        return Tree("NP", [_leaf(rng, "DT", DETS), _leaf(rng, "NN", NOUNS)])
    if r < 0.65:
        return Tree("NP", [_leaf(rng, "DT", DETS), _leaf(rng, "JJ", ADJS),
                           _leaf(rng, "NN", NOUNS)])
    if r < 0.80 or depth >= 2:
        return Tree("NP", [_leaf(rng, "NNS", PLURALS)])
    return Tree("NP", [_np(rng, depth + 1), _pp(rng, depth + 1)])


def _pp(rng, depth):
    return Tree("PP", [_leaf(rng, "IN", PREPS), _np(rng, depth)])


def _vp(rng, depth):
    r = rng.random()
    if r < 0.45:
        return Tree("VP", [_leaf(rng, "VB", VERBS), _np(rng, depth)])
    if r < 0.75:
        return Tree("VP", [_leaf(rng, "VB", VERBS), _np(rng, depth),
                           _pp(rng, depth)])
    return Tree("VP", [_leaf(rng, "RB", ADVS), _leaf(rng, "VB", VERBS),
                       _np(rng, depth)])


def _sentence_tree(rng):
    if rng.random() < 0.2:
        s = Tree("S", [_vp(rng, 0)])
    else:
        s = Tree("S", [_np(rng, 0), _vp(rng, 0)])
    if rng.random() < 0.3:
        return Tree("TOP", [s])
    return s


def toy_treebank(count: int, seed: int = 0, min_len: int = 2,
                 max_len: int = 14, long_every: int = 3,
                 long_len: int = 10):
    """``count`` distinct-sentence trees; every ``long_every``-th tree is
    forced to have at least ``long_len`` words."""
    rng = np.random.default_rng(seed)
    trees = []
    seen = set()
    attempts = 0
    while len(trees) < count:
        attempts += 1
        if attempts > 10000 * count:
            raise RuntimeError("toy grammar failed to produce %d distinct "
                               "sentences" % count)
        tree = _sentence_tree(rng)
        n = len(tree.leaves())
        lower = long_len if (len(trees) + 1) % long_every == 0 else min_len
        if not lower <= n <= max_len:
            continue
        key = " ".join(w for w, _ in tree.sentence())
        if key in seen:
            continue
        seen.add(key)
        trees.append(tree)
    return trees
