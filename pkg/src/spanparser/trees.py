"""Bracketed constituency trees and the binarized form scored by the chart decoder.

An n-ary ``Tree`` is what treebank files contain.  Before scoring, a tree is
unary-collapsed (chains like S over VP become a single "S+VP" node) and then
binarized into a ``BinaryTree`` whose extra nodes carry the reserved null
label.  Null-labeled spans always score zero, so every binarization of a tree
receives the same total score; we binarize right-branching by default and the
direction is configurable for testing that property.

POS tags are not treated as constituents: they stay attached to leaf nodes
and never participate in unary collapsing or span labeling.
"""

from __future__ import annotations

NULL_LABEL = "∅"  # reserved label for nodes introduced by binarization
DEFAULT_SEPARATOR = "+"


class ParseError(ValueError):
    """Malformed bracketed input, with 1-based line/column of the offence."""

    def __init__(self, message, line, column):
        super().__init__("%s (line %d, column %d)" % (message, line, column))
        self.line = line
        self.column = column


class Tree:
    """N-ary labeled tree. Leaves carry a word and its POS tag."""

    __slots__ = ("label", "children", "word", "tag")

    def __init__(self, label, children=(), word=None, tag=None):
        self.label = label
        self.children = tuple(children)
        self.word = word
        self.tag = tag
        if self.is_leaf():
            if word is None:
                raise ValueError("internal node %r has no children" % label)
        elif word is not None:
            raise ValueError("node %r has both children and a word" % label)

    @classmethod
    def leaf(cls, word, tag):
        return cls(tag, (), word=word, tag=tag)

    def is_leaf(self):
        return not self.children

    def leaves(self):
        if self.is_leaf():
            return [self]
        out = []
        for child in self.children:
            out.extend(child.leaves())
        return out

    def sentence(self):
        """The (word, tag) pairs at the leaves, left to right."""
        return [(leaf.word, leaf.tag) for leaf in self.leaves()]

    def render(self):
        if self.is_leaf():
            return "(%s %s)" % (self.tag, self.word)
        inner = " ".join(child.render() for child in self.children)
        return "(%s %s)" % (self.label, inner)

    def __eq__(self, other):
        if not isinstance(other, Tree):
            return NotImplemented
        return (self.label == other.label and self.word == other.word
                and self.tag == other.tag and self.children == other.children)

    def __hash__(self):
        return hash((self.label, self.word, self.tag, self.children))

    def __repr__(self):
        return "Tree(%s)" % self.render()


class BinaryTree:
    """Binarized tree node over fencepost span (i, j).

    Internal nodes have exactly two children; width-1 spans are leaves and
    keep the word and POS tag.  ``label`` is a LabelInventory id; nodes
    introduced by binarization (and leaves without a covering single-word
    constituent) carry the null id.
    """

    __slots__ = ("label", "span", "left", "right", "word", "tag")

    def __init__(self, label, span, left=None, right=None, word=None, tag=None):
        self.label = label
        self.span = span
        self.left = left
        self.right = right
        self.word = word
        self.tag = tag

    def is_leaf(self):
        return self.left is None

    def nodes(self):
        out = [self]
        if not self.is_leaf():
            out.extend(self.left.nodes())
            out.extend(self.right.nodes())
        return out

    def __repr__(self):
        return "BinaryTree(label=%r, span=%r)" % (self.label, self.span)


# ---------------------------------------------------------------------------
# Bracketed text parsing / rendering


def _tokenize(text):
    """Split into '(' / ')' / atom tokens, each with (line, column)."""
    tokens = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
        elif ch.isspace():
            col += 1
            i += 1
        elif ch in "()":
            tokens.append((ch, line, col))
            col += 1
            i += 1
        else:
            start, startcol = i, col
            while i < n and not text[i].isspace() and text[i] not in "()":
                i += 1
                col += 1
            tokens.append((text[start:i], line, startcol))
    return tokens


def parse_bracketed(text):
    """Parse bracketed treebank text into a list of trees.

    Accepts the usual PTB-style label-less wrapper "( (S ...) )"; the
    wrapper node keeps an empty-string label.
    """
    tokens = _tokenize(text)
    trees = []
    pos = 0
    while pos < len(tokens):
        tok, line, col = tokens[pos]
        if tok != "(":
            raise ParseError("expected '(' to open a tree, found %r" % tok, line, col)
        tree, pos = _parse_node(tokens, pos)
        trees.append(tree)
    return trees


def _parse_node(tokens, pos):
    open_tok, open_line, open_col = tokens[pos]
    pos += 1
    if pos >= len(tokens):
        raise ParseError("unbalanced parentheses: missing ')'", open_line, open_col)

    tok, line, col = tokens[pos]
    if tok == ")":
        raise ParseError("empty constituent", line, col)
    label = ""
    if tok != "(":
        label = tok
        pos += 1
        if pos >= len(tokens):
            raise ParseError("unbalanced parentheses: missing ')'", line, col)
        tok, line, col = tokens[pos]

    if tok == ")":
        raise ParseError("constituent %r has no children" % label, line, col)

    if tok not in "()":
        # leaf: (TAG word)
        word = tok
        pos += 1
        if pos >= len(tokens):
            raise ParseError("unbalanced parentheses: missing ')'", line, col)
        tok, line, col = tokens[pos]
        if tok == "(":
            raise ParseError("leaf %r cannot have children" % word, line, col)
        if tok != ")":
            raise ParseError("expected ')' after leaf word, found %r" % tok, line, col)
        return Tree.leaf(word, label), pos + 1

    children = []
    while True:
        if pos >= len(tokens):
            last_tok, last_line, last_col = tokens[-1]
            raise ParseError("unbalanced parentheses: missing ')'",
                             last_line, last_col + len(last_tok))
        tok, line, col = tokens[pos]
        if tok == ")":
            return Tree(label, children), pos + 1
        if tok != "(":
            raise ParseError("unexpected token %r inside constituent %r" % (tok, label),
                             line, col)
        child, pos = _parse_node(tokens, pos)
        children.append(child)


def render_bracketed(trees):
    """Render trees one per line, the inverse of parse_bracketed."""
    return "\n".join(t.render() for t in trees) + "\n"


def load_trees(path):
    with open(path, encoding="utf-8") as f:
        return parse_bracketed(f.read())


def save_trees(trees, path):
    with open(path, "w", encoding="utf-8") as f:
        f.write(render_bracketed(trees))


# ---------------------------------------------------------------------------
# Pre-tagged sentence files: one sentence per line, word_tag tokens


def parse_tagged(text):
    """Parse a sidecar tag file into sentences of (word, tag) pairs.

    Tokens are split on the last underscore, so words may contain
    underscores but tags may not.
    """
    sentences = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        sentence = []
        for token in line.split():
            word, sep, tag = token.rpartition("_")
            if not sep:
                raise ValueError(
                    "line %d: token %r has no _tag suffix" % (lineno, token))
            sentence.append((word, tag))
        sentences.append(sentence)
    return sentences


def load_tagged(path):
    with open(path, encoding="utf-8") as f:
        return parse_tagged(f.read())


# ---------------------------------------------------------------------------
# Unary chains


def collapse_unary(t, separator=DEFAULT_SEPARATOR):
    """Merge chains of single-child internal nodes into one joined label.

    The chain S over VP over a leaf becomes a single "S+VP" node above the
    leaf; the POS tag link to the word itself is never collapsed.
    """
    if t.is_leaf():
        return t
    labels = [t.label]
    node = t
    while len(node.children) == 1 and not node.children[0].is_leaf():
        node = node.children[0]
        labels.append(node.label)
    children = tuple(collapse_unary(c, separator) for c in node.children)
    return Tree(separator.join(labels), children)


def expand_unary(t, separator=DEFAULT_SEPARATOR):
    """Split joined labels back into nested single-child nodes."""
    if t.is_leaf():
        return t
    children = tuple(expand_unary(c, separator) for c in t.children)
    labels = t.label.split(separator)
    node = Tree(labels[-1], children)
    for label in reversed(labels[:-1]):
        node = Tree(label, (node,))
    return node


# ---------------------------------------------------------------------------
# Binarization


def binarize(t, inventory, direction="right"):
    """Binarize a unary-collapsed tree into a BinaryTree with label ids.

    Nodes introduced to split >2-child constituents carry the null id, as do
    width-1 leaf spans that have no single-word constituent above them.
    """
    if direction not in ("right", "left"):
        raise ValueError("direction must be 'right' or 'left'")
    if t.is_leaf():
        raise ValueError("cannot binarize a bare leaf")
    root, end = _binarize_node(t, 0, inventory, direction)
    assert end == len(t.leaves())
    return root


def _binarize_node(node, start, inventory, direction):
    if node.is_leaf():
        leaf = BinaryTree(inventory.null_id, (start, start + 1),
                          word=node.word, tag=node.tag)
        return leaf, start + 1
    subs = []
    pos = start
    for child in node.children:
        sub, pos = _binarize_node(child, pos, inventory, direction)
        subs.append(sub)
    combined = _combine(subs, inventory.null_id, direction)
    if combined.label != inventory.null_id:
        # only happens for a single internal child, i.e. an uncollapsed chain
        raise ValueError("tree is not unary-collapsed at %r" % node.label)
    combined.label = inventory.index(node.label)
    return combined, pos


def _combine(subs, null_id, direction):
    if len(subs) == 1:
        return subs[0]
    if direction == "right":
        node = subs[-1]
        for sub in reversed(subs[:-1]):
            node = BinaryTree(null_id, (sub.span[0], node.span[1]),
                              left=sub, right=node)
    else:
        node = subs[0]
        for sub in subs[1:]:
            node = BinaryTree(null_id, (node.span[0], sub.span[1]),
                              left=node, right=sub)
    return node


def debinarize(b, inventory):
    """Invert binarize: splice out null nodes and re-expand collapsed labels."""
    if b.label == inventory.null_id:
        raise ValueError("binary tree root has the null label, nothing to emit")
    trees = _debinarize_node(b, inventory)
    assert len(trees) == 1
    return trees[0]


def _debinarize_node(node, inventory):
    if node.is_leaf():
        leaf = Tree.leaf(node.word, node.tag)
        if node.label == inventory.null_id:
            return [leaf]
        return [_wrap_labels(inventory.name(node.label), (leaf,), inventory.separator)]
    children = (_debinarize_node(node.left, inventory)
                + _debinarize_node(node.right, inventory))
    if node.label == inventory.null_id:
        return children
    return [_wrap_labels(inventory.name(node.label), children, inventory.separator)]


def _wrap_labels(joined, children, separator):
    labels = joined.split(separator)
    node = Tree(labels[-1], children)
    for label in reversed(labels[:-1]):
        node = Tree(label, (node,))
    return node


def gold_spans(b):
    """All (i, j, label_id) triples of a binarized tree, null nodes included."""
    return {(node.span[0], node.span[1], node.label) for node in b.nodes()}
