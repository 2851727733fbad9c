"""Span scoring, CKY decoding, and the margin loss.

A parse is scored as the sum of independent labeled span scores
s(T) = sum s(i,j,l).  The dummy label (id 0) scores exactly 0 on every span,
which makes the total invariant to how n-ary trees are binarized and lets a
single CKY pass find the argmax over all binarized trees.

Span vectors follow the fencepost convention: the encoder output row k
corresponds to position k of [start, w_1 .. w_n, stop].  The forward
annotation for fencepost k is the even coordinates of row k (k = 0..n), the
backward annotation the odd coordinates of row k+1 (so the stop row serves
fencepost n).  A span (i, j) is represented as
v = [fwd_j - fwd_i ; bwd_{j+1} - bwd_{i+1}].
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .optim import ParameterStore, glorot_uniform
from .trees import BinaryTree, gold_spans

NULL_ID = 0  # LabelInventory reserves id 0 for the dummy label


def all_spans(n: int):
    """Every (i, j) with 0 <= i < j <= n in a fixed canonical order; chart
    tensors and span-score rows follow this order."""
    return [(i, j) for i in range(n) for j in range(i + 1, n + 1)]


def directional_split(y: Tensor):
    """Split encoder output columns into forward (even) and backward (odd)
    annotation halves."""
    d = y.shape[1]
    if d % 2 != 0:
        raise ValueError("directional split needs an even width, got %d" % d)
    fwd = ad.take_cols(y, np.arange(0, d, 2))
    bwd = ad.take_cols(y, np.arange(1, d, 2))
    return fwd, bwd


def span_vector(i: int, j: int, fwd: Tensor, bwd: Tensor) -> Tensor:
    """The [1, d_model] vector for one span; ``fwd``/``bwd`` come from
    directional_split of an encoder output with boundary rows."""
    n = fwd.shape[0] - 2
    if not 0 <= i < j <= n:
        raise ValueError("span (%d, %d) out of range for %d words" % (i, j, n))
    f = ad.sub(ad.take_rows(fwd, [j]), ad.take_rows(fwd, [i]))
    b = ad.sub(ad.take_rows(bwd, [j + 1]), ad.take_rows(bwd, [i + 1]))
    return ad.concat([f, b], axis=1)


def span_vectors(y: Tensor, n: int) -> Tensor:
    """Vectors for all_spans(n) as one [S, d_model] tensor."""
    if y.shape[0] != n + 2:
        raise ValueError("encoder output has %d rows, expected %d words plus "
                         "boundaries" % (y.shape[0], n))
    fwd, bwd = directional_split(y)
    spans = all_spans(n)
    i_idx = np.array([i for i, _ in spans], dtype=np.intp)
    j_idx = np.array([j for _, j in spans], dtype=np.intp)
    f = ad.sub(ad.take_rows(fwd, j_idx), ad.take_rows(fwd, i_idx))
    b = ad.sub(ad.take_rows(bwd, j_idx + 1), ad.take_rows(bwd, i_idx + 1))
    return ad.concat([f, b], axis=1)


class SpanScorer:
    """s(i,j,.) = M_2 relu(LayerNorm(M_1 v + c_1)) + c_2 over real labels.

    The dummy label is never parameterized; its score is the constant 0
    added when the chart is assembled.
    """

    def __init__(self, store: ParameterStore, d_model: int, hidden: int,
                 num_labels: int, rng):
        if num_labels < 2:
            raise ValueError("need at least one real label besides the dummy")
        self.num_labels = num_labels
        self.m1 = store.add("scorer.m1", glorot_uniform(rng, (d_model, hidden)))
        self.c1 = store.add("scorer.c1", np.zeros(hidden))
        self.ln_gain = store.add("scorer.ln.gain", np.ones(hidden))
        self.ln_bias = store.add("scorer.ln.bias", np.zeros(hidden))
        self.m2 = store.add("scorer.m2",
                            glorot_uniform(rng, (hidden, num_labels - 1)))
        self.c2 = store.add("scorer.c2", np.zeros(num_labels - 1))

    def forward(self, v: Tensor) -> Tensor:
        h = ad.layer_norm(ad.add(ad.matmul(v, self.m1.tensor), self.c1.tensor),
                          self.ln_gain.tensor, self.ln_bias.tensor)
        h = ad.relu(h)
        return ad.add(ad.matmul(h, self.m2.tensor), self.c2.tensor)


def build_chart(scores: np.ndarray, n: int) -> np.ndarray:
    """Arrange [S, num_labels-1] real-label scores into a dense chart
    [n+1, n+1, num_labels] with the dummy label fixed at 0."""
    spans = all_spans(n)
    if scores.shape[0] != len(spans):
        raise ValueError("got %d score rows for %d spans"
                         % (scores.shape[0], len(spans)))
    chart = np.zeros((n + 1, n + 1, scores.shape[1] + 1))
    for row, (i, j) in enumerate(spans):
        chart[i, j, 1:] = scores[row]
    return chart


def tree_score(chart: np.ndarray, b: BinaryTree) -> float:
    """Sum of chart entries over the tree's real-labeled spans.

    Dummy-labeled nodes contribute exactly 0 by omission, and summation runs
    in sorted span order, so any two binarizations of the same tree get the
    bitwise-identical score.
    """
    total = 0.0
    for i, j, l in sorted((n.span[0], n.span[1], n.label) for n in b.nodes()
                          if n.label != NULL_ID):
        total += chart[i, j, l]
    return total


def cky_decode(chart: np.ndarray, sentence=None):
    """Exact argmax over binarized trees; returns (BinaryTree, score).

    Any span may take the dummy label except the root.  Ties break toward
    the lowest split index, then the lowest label id.  ``sentence`` is an
    optional list of (word, tag) pairs copied onto the leaves.
    """
    n = chart.shape[0] - 1
    if n == 0:
        raise ValueError("cannot decode an empty sentence")
    best = np.zeros((n + 1, n + 1))
    best_label = np.zeros((n + 1, n + 1), dtype=int)
    best_split = np.zeros((n + 1, n + 1), dtype=int)
    for width in range(1, n + 1):
        for i in range(0, n - width + 1):
            j = i + width
            if i == 0 and j == n:
                label = 1 + int(np.argmax(chart[i, j, 1:]))
            else:
                label = int(np.argmax(chart[i, j]))
            value = chart[i, j, label]
            if width > 1:
                split = i + 1
                sub = best[i, i + 1] + best[i + 1, j]
                for k in range(i + 2, j):
                    cand = best[i, k] + best[k, j]
                    if cand > sub:
                        sub, split = cand, k
                best_split[i, j] = split
                value += sub
            best[i, j] = value
            best_label[i, j] = label

    def build(i, j):
        label = int(best_label[i, j])
        if j - i == 1:
            word = tag = None
            if sentence is not None:
                word, tag = sentence[i]
            return BinaryTree(label, (i, j), word=word, tag=tag)
        k = int(best_split[i, j])
        return BinaryTree(label, (i, j), left=build(i, k), right=build(k, j))

    return build(0, n), float(best[0, n])


def hamming_delta(candidate, gold) -> int:
    """Labeled-span Hamming distance between two span sets.

    Inputs are iterables of (i, j, label_id) triples; spans absent from
    either side count as dummy-labeled, so a constituent present on exactly
    one side contributes 1 and a shared span with different labels also
    contributes 1.
    """
    cand = {(i, j): l for i, j, l in candidate if l != NULL_ID}
    gld = {(i, j): l for i, j, l in gold if l != NULL_ID}
    return sum(1 for span in set(cand) | set(gld)
               if cand.get(span, NULL_ID) != gld.get(span, NULL_ID))


def loss_augmented_decode(chart: np.ndarray, gold, sentence=None):
    """Argmax of s(T) + Delta(T, gold); returns (BinaryTree, objective).

    Delta decomposes over the candidate's spans: a real-labeled candidate
    span scores +1 where gold has no constituent, a correctly labeled one
    -1, plus the constant number of real gold spans.  Adding those
    increments to the chart reduces the search to plain CKY.
    """
    gold_real = [(i, j, l) for i, j, l in gold if l != NULL_ID]
    aug = chart.copy()
    grid = {}
    for i, j, l in gold_real:
        grid[(i, j)] = l
    n = chart.shape[0] - 1
    for i, j in all_spans(n):
        gl = grid.get((i, j))
        if gl is None:
            aug[i, j, 1:] += 1.0
        else:
            aug[i, j, gl] -= 1.0
    tree, value = cky_decode(aug, sentence)
    return tree, value + len(gold_real)


class HingeResult:
    """Outcome of one sentence's margin computation."""

    __slots__ = ("loss", "value", "delta", "gold_score", "violator")

    def __init__(self, loss, value, delta, gold_score, violator):
        self.loss = loss            # scalar Tensor (0 tensor when satisfied)
        self.value = value          # float(loss)
        self.delta = delta          # Hamming distance to the violator
        self.gold_score = gold_score
        self.violator = violator    # BinaryTree or None when satisfied


def hinge_loss(scores: Tensor, n: int, gold: BinaryTree) -> HingeResult:
    """Margin loss max(0, max_T [s(T) + Delta(T, T*)] - s(T*)).

    ``scores`` is the [S, num_labels-1] tensor from SpanScorer in
    all_spans(n) order.  When some tree violates the margin, the returned
    loss is differentiable and its gradient touches exactly the violator's
    and the gold tree's span scores.
    """
    chart = build_chart(scores.data, n)
    gold_triples = gold_spans(gold)
    s_gold = tree_score(chart, gold)
    violator, objective = loss_augmented_decode(chart, gold_triples)
    if objective - s_gold <= 0.0:
        return HingeResult(Tensor(0.0), 0.0, 0, s_gold, None)

    span_row = {span: r for r, span in enumerate(all_spans(n))}

    def gathered(triples):
        real = [(i, j, l) for i, j, l in triples if l != NULL_ID]
        rows = [span_row[(i, j)] for i, j, _ in real]
        cols = [l - 1 for _, _, l in real]
        return ad.sum_all(ad.gather_pairs(scores, rows, cols))

    viol_triples = gold_spans(violator)
    delta = hamming_delta(viol_triples, gold_triples)
    loss = ad.add_const(ad.sub(gathered(viol_triples), gathered(gold_triples)),
                        float(delta))
    return HingeResult(loss, float(loss.data), delta, s_gold, violator)
