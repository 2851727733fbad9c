"""Attention ablations on a trained parser: window sweeps, factored-term
disabling, and a raw attention dump.

The same sweeps are available from the command line as
`spanparser analyze-window`, `spanparser analyze-disable`, and
`spanparser dump-attention`.
"""

import math

import numpy as np

from spanparser.encoder import AttentionControl, EncoderConfig
from spanparser.evaluation import score
from spanparser.lexical import LexicalConfig
from spanparser.model import SpanParser
from spanparser.toydata import toy_treebank
from spanparser.training import TrainConfig, train
from spanparser.vocab import LabelInventory, Vocabulary

trees = toy_treebank(50, seed=11)
enc = EncoderConfig(num_layers=2, d_model=64, num_heads=4, d_k=16, d_v=16,
                    d_ff=128, variant="factored", span_hidden=64,
                    max_sentence_length=20, attention_dropout=0.0,
                    relu_dropout=0.0, residual_dropout=0.0)
lex = LexicalConfig(mode="char-lstm", char_embedding_dim=16,
                    char_lstm_hidden=32, word_dropout=0.0, tag_dropout=0.0,
                    morph_dropout=0.0, char_dropout=0.0)
model = SpanParser(enc, lex, Vocabulary.from_trees(trees),
                   LabelInventory.from_trees(trees), seed=0)
cfg = TrainConfig(batch_size=10, base_lr=0.002, warmup_batches=20,
                  evals_per_epoch=1, patience_epochs=8, max_epochs=30,
                  seed=0)
result = train(model, trees, trees, cfg)
print("trained to %.2f F1\n" % result.best_f1)


def f1_under(control):
    preds = [model.parse(t.sentence(), control=control) for t in trees]
    return score(preds, trees).f1


# how far does attention need to reach?
print("window\tstrict\trelaxed")
for d in (0, 1, 2, 4, 8, math.inf):
    strict = f1_under(AttentionControl(window=(d, "strict")))
    relaxed = f1_under(AttentionControl(window=(d, "relaxed")))
    print("%s\t%.2f\t%.2f" % (d, strict, relaxed))

# which factored term carries the signal, and in which layers?
L = enc.num_layers
print("\ncontent\tposition\tF1")
for dis_c, dis_p, name in [
        ((False,) * L, (False,) * L, "on\ton"),
        ((True,) * L, (False,) * L, "off\ton"),
        ((False,) * L, (True,) * L, "on\toff"),
        ((True,) * L, (True,) * L, "off\toff"),
        ((True, False), (False,) * L, "off@0\ton"),
]:
    f1 = f1_under(AttentionControl(disable_content=dis_c,
                                   disable_position=dis_p))
    print("%s\t%.2f" % (name, f1))

# raw attention for one sentence
sent = trees[0].sentence()
record = {}
model.parse(sent, record=record)
probs = record[(0, 0)]
tokens = ["<start>"] + [w for w, _ in sent] + ["<stop>"]
print("\nlayer 0 head 0 attention for:", " ".join(w for w, _ in sent))
rows = np.round(probs, 2)
for tok, row in zip(tokens, rows):
    print("%-8s %s" % (tok, " ".join("%.2f" % v for v in row)))
