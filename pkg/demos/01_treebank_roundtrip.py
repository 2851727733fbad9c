"""Treebank ingestion walkthrough: bracketed text in, span triples out.

Reads a few bracketed trees, collapses unary chains into joined labels,
binarizes with null intermediates, and shows that the whole pipeline is
reversible.
"""

from spanparser.trees import (
    binarize, collapse_unary, debinarize, gold_spans, parse_bracketed,
)
from spanparser.vocab import LabelInventory

TEXT = """\
(TOP (S (NP (DT the) (NN cat)) (VP (VB saw) (NP (DT a) (NN dog)))))
(TOP (S (VP (VB go))))
(S (NP (NNP June)) (VP (VB left)))
"""

trees = parse_bracketed(TEXT)
print("read %d trees" % len(trees))
for t in trees:
    print(" ", t.render())

# unary chains collapse into single joined labels so every position in a
# binarized tree carries at most one label
collapsed = [collapse_unary(t) for t in trees]
print("\ncollapsed:", collapsed[1].render())

inv = LabelInventory.from_trees(trees)
print("label inventory:", inv.labels)

binary = [binarize(c, inv) for c in collapsed]
print("\nspans of tree 0 (i, j, label):")
for i, j, l in sorted(gold_spans(binary[0])):
    print("  (%d, %d) %s" % (i, j, inv.name(l) or "-"))

# binarize is lossless: debinarize splices out the null nodes and expands
# the joined labels again
for raw, b in zip(trees, binary):
    assert debinarize(b, inv).render() == raw.render()
print("\ndebinarize(binarize(collapse(t))) == t for all trees")
