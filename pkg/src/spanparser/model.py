"""The full parser: lexical content vectors, the self-attentive encoder, the
span scorer, and CKY decoding glued into one trainable object."""

from __future__ import annotations

import numpy as np

from .chart import (SpanScorer, build_chart, cky_decode, hinge_loss,
                    span_vectors)
from .encoder import Encoder, EncoderConfig
from .lexical import LexicalConfig, LexicalModel
from .optim import ParameterStore
from .trees import Tree, binarize, collapse_unary, debinarize
from .vocab import LabelInventory, Vocabulary


class SpanParser:
    """Scores labeled spans of tagged sentences and decodes parse trees.

    Construction is deterministic in ``seed``; two parsers built from equal
    configs, vocabularies, and seeds are identical parameter for parameter.
    """

    def __init__(self, encoder_config: EncoderConfig,
                 lexical_config: LexicalConfig, vocab: Vocabulary,
                 labels: LabelInventory, seed: int = 0):
        if len(labels) < 2:
            raise ValueError("label inventory has no real labels")
        self.encoder_config = encoder_config.validate()
        self.lexical_config = lexical_config.validate()
        self.vocab = vocab
        self.labels = labels
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.store = ParameterStore()
        self.lexical = LexicalModel(self.store, vocab, lexical_config,
                                    encoder_config.content_dim, rng)
        self.encoder = Encoder(self.store, encoder_config, rng)
        self.scorer = SpanScorer(self.store, encoder_config.d_model,
                                 encoder_config.span_hidden, len(labels), rng)

    def num_parameters(self) -> int:
        return self.store.num_values()

    def span_score_tensor(self, sentence, train: bool = False, rng=None,
                          control=None, external=None, record=None):
        """Run the network on one tagged sentence (list of (word, tag)
        pairs) and return the [num_spans, num_labels-1] score tensor."""
        if not sentence:
            raise ValueError("cannot score an empty sentence")
        content = self.lexical.content_vectors(sentence, train, rng, external)
        y = self.encoder.encode(content, train, rng, control, record)
        v = span_vectors(y, len(sentence))
        return self.scorer.forward(v)

    def score_chart(self, sentence, control=None, external=None, record=None):
        scores = self.span_score_tensor(sentence, control=control,
                                        external=external, record=record)
        return build_chart(scores.data, len(sentence))

    def parse(self, sentence, control=None, external=None, record=None) -> Tree:
        """Decode the best tree for a tagged sentence."""
        chart = self.score_chart(sentence, control, external, record)
        btree, _ = cky_decode(chart, sentence)
        return debinarize(btree, self.labels)

    def gold_binary(self, tree: Tree):
        """Binarize a treebank tree against this model's label inventory."""
        return binarize(collapse_unary(tree, self.labels.separator),
                        self.labels)

    def sentence_loss(self, sentence, gold_binary, train: bool = True,
                      rng=None, external=None):
        """HingeResult for one sentence against its binarized gold tree."""
        scores = self.span_score_tensor(sentence, train=train, rng=rng,
                                        external=external)
        return hinge_loss(scores, len(sentence), gold_binary)
