"""Self-attentive encoder with a factored content/position attention option.

The encoder stacks identical layers, each a multi-head self-attention
sublayer followed by a position-wise feed-forward sublayer, both wrapped as
LayerNorm(x + Dropout(Sublayer(x))).  Heads are summed, not concatenated.

Five wirings of the token inputs and the attention arithmetic are supported:

- ``additive-unfactored``: z = content + position, standard attention.
- ``concatenative-unfactored``: z = [content; position] with halved embedding
  widths, standard attention over the concatenation.
- ``factored``: same concatenated inputs, but every projection is
  block-sparse across the content/position halves.  Attention logits are the
  sum of a content dot product and a position dot product, each scaled by
  1/sqrt(d_k/2); a single softmax weights both value halves.  The
  feed-forward sublayer is split into independent content and position
  copies.
- ``position-only``: additive inputs, but queries and keys are computed from
  the original position embeddings at every layer, so attention patterns are
  independent of content.
- ``block-sparse-additive``: additive inputs pushed through the factored
  machinery on the two contiguous halves of the model dimension (a control
  for separating the effect of sparsity from the effect of factoring).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .optim import ParameterStore, glorot_uniform, embedding_init

VARIANTS = (
    "additive-unfactored",
    "concatenative-unfactored",
    "factored",
    "position-only",
    "block-sparse-additive",
)

# variants whose token inputs are a concatenation [content; position]
CONCAT_INPUT_VARIANTS = ("concatenative-unfactored", "factored")
# variants using block-sparse projections and split attention logits
FACTORED_VARIANTS = ("factored", "block-sparse-additive")

MASK_PENALTY = -1e9
WINDOW_MODES = ("strict", "relaxed")


@dataclass
class EncoderConfig:
    num_layers: int = 8
    d_model: int = 1024
    num_heads: int = 8
    d_k: int = 64
    d_v: int = 64
    d_ff: int = 2048
    variant: str = "factored"
    attention_dropout: float = 0.2
    relu_dropout: float = 0.1
    residual_dropout: float = 0.2
    max_sentence_length: int = 300
    span_hidden: int = 250
    init_scheme: str = "glorot"
    window_distance: int = -1       # -1 means unwindowed
    window_mode: str = "strict"

    def validate(self):
        if self.variant not in VARIANTS:
            raise ValueError("unknown encoder variant %r (choose from %s)"
                             % (self.variant, ", ".join(VARIANTS)))
        if self.num_layers < 0:
            raise ValueError("num_layers must be >= 0")
        if self.d_model % 2 != 0:
            raise ValueError("d_model must be even (span vectors split the "
                             "encoder output into two directional halves)")
        if self.variant in FACTORED_VARIANTS or self.variant in CONCAT_INPUT_VARIANTS:
            for name in ("d_model", "d_k", "d_v", "d_ff"):
                if getattr(self, name) % 2 != 0:
                    raise ValueError("%s must be even for variant %r"
                                     % (name, self.variant))
        if self.init_scheme not in ("glorot", "normal"):
            raise ValueError("unknown init_scheme %r" % self.init_scheme)
        if self.window_mode not in WINDOW_MODES:
            raise ValueError("window_mode must be one of %s"
                             % (WINDOW_MODES,))
        for name in ("attention_dropout", "relu_dropout", "residual_dropout"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ValueError("%s must be in [0, 1)" % name)
        return self

    @property
    def content_dim(self) -> int:
        """Width of the content part of each token's input embedding."""
        if self.variant in CONCAT_INPUT_VARIANTS:
            return self.d_model // 2
        return self.d_model

    @property
    def position_dim(self) -> int:
        if self.variant in CONCAT_INPUT_VARIANTS:
            return self.d_model // 2
        return self.d_model


@dataclass
class AttentionControl:
    """Test-time attention surgery.

    ``disable_content`` / ``disable_position``: per-layer flags zeroing the
    corresponding logit term (factored variants only).  ``window``: a
    (distance, mode) pair overriding the configured window; distance may be
    ``math.inf`` for unwindowed.
    """

    disable_content: tuple = None
    disable_position: tuple = None
    window: tuple = None

    def validate(self, config: EncoderConfig):
        for name in ("disable_content", "disable_position"):
            flags = getattr(self, name)
            if flags is None:
                continue
            if config.variant not in FACTORED_VARIANTS:
                raise ValueError(
                    "%s only applies to factored variants, not %r"
                    % (name, config.variant))
            if len(flags) != config.num_layers:
                raise ValueError("%s needs one flag per layer (%d), got %d"
                                 % (name, config.num_layers, len(flags)))
        if self.window is not None:
            distance, mode = self.window
            if mode not in WINDOW_MODES:
                raise ValueError("window mode must be one of %s"
                                 % (WINDOW_MODES,))
            if distance < 0:
                raise ValueError("window distance must be >= 0")
        return self


def build_window_mask(length: int, distance, mode: str = "strict") -> np.ndarray:
    """Boolean [length, length] matrix; True where attention is allowed.

    ``strict`` keeps |i - j| <= distance.  ``relaxed`` additionally lets the
    first two and last two positions attend and be attended to everywhere
    (they host the boundary tokens, whose long-range links matter more than
    the window).  distance may be math.inf or None for no restriction.
    """
    if distance is None or distance == math.inf:
        return np.ones((length, length), dtype=bool)
    if distance < 0:
        raise ValueError("window distance must be >= 0, got %r" % (distance,))
    if mode not in WINDOW_MODES:
        raise ValueError("window mode must be one of %s" % (WINDOW_MODES,))
    idx = np.arange(length)
    allow = np.abs(idx[:, None] - idx[None, :]) <= distance
    if mode == "relaxed":
        special = np.zeros(length, dtype=bool)
        for k in (0, 1, length - 2, length - 1):
            if 0 <= k < length:
                special[k] = True
        allow = allow | special[:, None] | special[None, :]
    return allow


def compose_input(content: Tensor, position: Tensor, variant: str) -> Tensor:
    """Combine per-token content and position embeddings into encoder input."""
    if variant in CONCAT_INPUT_VARIANTS:
        return ad.concat([content, position], axis=1)
    return ad.add(content, position)


def _weight(rng, shape, scheme):
    if scheme == "normal":
        return rng.standard_normal(shape) * 0.02
    return glorot_uniform(rng, shape)


class AttentionHead:
    """One attention head; handles the standard and the factored forms."""

    def __init__(self, store: ParameterStore, prefix: str,
                 config: EncoderConfig, rng, factored: bool,
                 position_queries: bool = False):
        self.factored = factored
        self.position_queries = position_queries
        self.d_k = config.d_k
        self.d_v = config.d_v
        d = config.d_model
        scheme = config.init_scheme
        if factored:
            dh, kh, vh = d // 2, config.d_k // 2, config.d_v // 2
            self.w_qc = store.add(prefix + ".w_qc", _weight(rng, (dh, kh), scheme))
            self.w_kc = store.add(prefix + ".w_kc", _weight(rng, (dh, kh), scheme))
            self.w_vc = store.add(prefix + ".w_vc", _weight(rng, (dh, vh), scheme))
            self.w_oc = store.add(prefix + ".w_oc", _weight(rng, (vh, dh), scheme))
            self.w_qp = store.add(prefix + ".w_qp", _weight(rng, (dh, kh), scheme))
            self.w_kp = store.add(prefix + ".w_kp", _weight(rng, (dh, kh), scheme))
            self.w_vp = store.add(prefix + ".w_vp", _weight(rng, (dh, vh), scheme))
            self.w_op = store.add(prefix + ".w_op", _weight(rng, (vh, dh), scheme))
        else:
            qk_in = d
            self.w_q = store.add(prefix + ".w_q", _weight(rng, (qk_in, config.d_k), scheme))
            self.w_k = store.add(prefix + ".w_k", _weight(rng, (qk_in, config.d_k), scheme))
            self.w_v = store.add(prefix + ".w_v", _weight(rng, (d, config.d_v), scheme))
            self.w_o = store.add(prefix + ".w_o", _weight(rng, (config.d_v, d), scheme))

    def forward(self, x: Tensor, positions: Tensor, penalty,
                disable_content: bool, disable_position: bool,
                train: bool, rng, dropout_p: float, record=None) -> Tensor:
        """Return this head's contribution, shape [T, d_model].

        ``penalty`` is an additive logit mask (0 where allowed) or None.
        ``positions`` carries the original position embeddings for
        position-only queries; ignored otherwise.
        """
        if self.factored:
            half = x.shape[1] // 2
            xc = ad.slice_cols(x, 0, half)
            xp = ad.slice_cols(x, half, 2 * half)
            inv = 1.0 / math.sqrt(self.d_k / 2.0)
            logits = None
            if not disable_content:
                qc = ad.matmul(xc, self.w_qc.tensor)
                kc = ad.matmul(xc, self.w_kc.tensor)
                logits = ad.scale(ad.matmul(qc, ad.transpose(kc)), inv)
            if not disable_position:
                qp = ad.matmul(xp, self.w_qp.tensor)
                kp = ad.matmul(xp, self.w_kp.tensor)
                pos_logits = ad.scale(ad.matmul(qp, ad.transpose(kp)), inv)
                logits = pos_logits if logits is None else ad.add(logits, pos_logits)
            if logits is None:
                logits = Tensor(np.zeros((x.shape[0], x.shape[0])))
            probs = self._probs(logits, penalty, train, rng, dropout_p, record)
            vc = ad.matmul(xc, self.w_vc.tensor)
            vp = ad.matmul(xp, self.w_vp.tensor)
            out_c = ad.matmul(ad.matmul(probs, vc), self.w_oc.tensor)
            out_p = ad.matmul(ad.matmul(probs, vp), self.w_op.tensor)
            return ad.concat([out_c, out_p], axis=1)

        source = positions if self.position_queries else x
        q = ad.matmul(source, self.w_q.tensor)
        k = ad.matmul(source, self.w_k.tensor)
        logits = ad.scale(ad.matmul(q, ad.transpose(k)), 1.0 / math.sqrt(self.d_k))
        probs = self._probs(logits, penalty, train, rng, dropout_p, record)
        v = ad.matmul(x, self.w_v.tensor)
        return ad.matmul(ad.matmul(probs, v), self.w_o.tensor)

    def _probs(self, logits, penalty, train, rng, dropout_p, record):
        if penalty is not None:
            logits = ad.add_const(logits, penalty)
        probs = ad.softmax(logits)
        if record is not None:
            record.append(probs.data.copy())
        return ad.dropout(probs, dropout_p, rng, train)


class FeedForward:
    """Position-wise W2 relu(W1 x + b1) + b2; split in two for factored."""

    def __init__(self, store, prefix, config: EncoderConfig, rng, factored: bool):
        self.factored = factored
        d, dff = config.d_model, config.d_ff
        scheme = config.init_scheme
        if factored:
            dh, fh = d // 2, dff // 2
            self.w1c = store.add(prefix + ".w1c", _weight(rng, (dh, fh), scheme))
            self.b1c = store.add(prefix + ".b1c", np.zeros(fh))
            self.w2c = store.add(prefix + ".w2c", _weight(rng, (fh, dh), scheme))
            self.b2c = store.add(prefix + ".b2c", np.zeros(dh))
            self.w1p = store.add(prefix + ".w1p", _weight(rng, (dh, fh), scheme))
            self.b1p = store.add(prefix + ".b1p", np.zeros(fh))
            self.w2p = store.add(prefix + ".w2p", _weight(rng, (fh, dh), scheme))
            self.b2p = store.add(prefix + ".b2p", np.zeros(dh))
        else:
            self.w1 = store.add(prefix + ".w1", _weight(rng, (d, dff), scheme))
            self.b1 = store.add(prefix + ".b1", np.zeros(dff))
            self.w2 = store.add(prefix + ".w2", _weight(rng, (dff, d), scheme))
            self.b2 = store.add(prefix + ".b2", np.zeros(d))

    def forward(self, x: Tensor, train: bool, rng, relu_p: float) -> Tensor:
        if self.factored:
            half = x.shape[1] // 2
            xc = ad.slice_cols(x, 0, half)
            xp = ad.slice_cols(x, half, 2 * half)
            hc = ad.dropout(ad.relu(ad.add(ad.matmul(xc, self.w1c.tensor),
                                           self.b1c.tensor)), relu_p, rng, train)
            hp = ad.dropout(ad.relu(ad.add(ad.matmul(xp, self.w1p.tensor),
                                           self.b1p.tensor)), relu_p, rng, train)
            oc = ad.add(ad.matmul(hc, self.w2c.tensor), self.b2c.tensor)
            op = ad.add(ad.matmul(hp, self.w2p.tensor), self.b2p.tensor)
            return ad.concat([oc, op], axis=1)
        h = ad.dropout(ad.relu(ad.add(ad.matmul(x, self.w1.tensor),
                                      self.b1.tensor)), relu_p, rng, train)
        return ad.add(ad.matmul(h, self.w2.tensor), self.b2.tensor)


class EncoderLayer:
    def __init__(self, store, prefix, config: EncoderConfig, rng):
        factored = config.variant in FACTORED_VARIANTS
        self.config = config
        self.heads = [
            AttentionHead(store, "%s.head%d" % (prefix, h), config, rng,
                          factored=factored,
                          position_queries=(config.variant == "position-only"))
            for h in range(config.num_heads)
        ]
        self.ffn = FeedForward(store, prefix + ".ffn", config, rng, factored)
        d = config.d_model
        self.ln1_gain = store.add(prefix + ".ln1.gain", np.ones(d))
        self.ln1_bias = store.add(prefix + ".ln1.bias", np.zeros(d))
        self.ln2_gain = store.add(prefix + ".ln2.gain", np.ones(d))
        self.ln2_bias = store.add(prefix + ".ln2.bias", np.zeros(d))

    def forward(self, x, positions, penalty, disable_content,
                disable_position, train, rng, record=None):
        cfg = self.config
        head_outs = []
        for h, head in enumerate(self.heads):
            head_record = None
            if record is not None:
                head_record = record.setdefault(h, [])
            head_outs.append(head.forward(
                x, positions, penalty, disable_content, disable_position,
                train, rng, cfg.attention_dropout, head_record))
        attn = head_outs[0]
        for extra in head_outs[1:]:
            attn = ad.add(attn, extra)
        attn = ad.dropout(attn, cfg.residual_dropout, rng, train)
        x = ad.layer_norm(ad.add(x, attn), self.ln1_gain.tensor,
                          self.ln1_bias.tensor)
        ff = self.ffn.forward(x, train, rng, cfg.relu_dropout)
        ff = ad.dropout(ff, cfg.residual_dropout, rng, train)
        return ad.layer_norm(ad.add(x, ff), self.ln2_gain.tensor,
                             self.ln2_bias.tensor)


class Encoder:
    """The full stack: learned position table plus num_layers layers."""

    def __init__(self, store: ParameterStore, config: EncoderConfig, rng):
        config.validate()
        self.config = config
        self.position_table = store.add(
            "encoder.positions",
            embedding_init(rng, (config.max_sentence_length,
                                 config.position_dim)))
        self.layers = [EncoderLayer(store, "encoder.layer%d" % i, config, rng)
                       for i in range(config.num_layers)]

    def encode(self, content: Tensor, train: bool = False, rng=None,
               control: AttentionControl = None, record=None,
               mask=None) -> Tensor:
        """Encode a sentence; ``content`` is [T, content_dim] with rows for
        the start and stop tokens included.

        ``record``, if given, is a dict filled with attention probabilities
        keyed (layer, head) -> [T, T] arrays.  ``mask``, if given, is an
        explicit boolean [T, T] allow matrix that overrides any configured
        or control-supplied window.
        """
        cfg = self.config
        T = content.shape[0]
        if T > cfg.max_sentence_length:
            raise ValueError(
                "sentence has %d tokens with boundaries; the position table "
                "holds %d" % (T, cfg.max_sentence_length))
        if content.shape[1] != cfg.content_dim:
            raise ValueError("content is %s but variant %r wants width %d"
                             % (content.shape, cfg.variant, cfg.content_dim))
        if control is not None:
            control.validate(cfg)

        positions = ad.take_rows(self.position_table.tensor, np.arange(T))
        x = compose_input(content, positions, cfg.variant)

        if mask is not None:
            penalty = self._penalty_from(np.asarray(mask, dtype=bool))
        else:
            penalty = self._window_penalty(T, control)
        for i, layer in enumerate(self.layers):
            disable_c = disable_p = False
            if control is not None:
                if control.disable_content is not None:
                    disable_c = bool(control.disable_content[i])
                if control.disable_position is not None:
                    disable_p = bool(control.disable_position[i])
            layer_record = None
            if record is not None:
                by_head = {}
                layer_record = by_head
            x = layer.forward(x, positions, penalty, disable_c, disable_p,
                              train, rng, layer_record)
            if record is not None:
                for h, probs_list in layer_record.items():
                    record[(i, h)] = probs_list[0]
        return x

    def _window_penalty(self, T, control):
        distance, mode = self.config.window_distance, self.config.window_mode
        if control is not None and control.window is not None:
            distance, mode = control.window
        if distance is None or distance < 0 or distance == math.inf:
            return None
        return self._penalty_from(build_window_mask(T, distance, mode))

    @staticmethod
    def _penalty_from(allow):
        bad = ~allow.any(axis=1)
        if bad.any():
            raise ValueError(
                "attention mask leaves query position %d with no visible "
                "keys" % int(np.flatnonzero(bad)[0]))
        return np.where(allow, 0.0, MASK_PENALTY)


def assemble_block_sparse(head: AttentionHead) -> dict:
    """Pack a factored head's eight blocks into standard dense projections.

    The factored head scales each half's logits by 1/sqrt(d_k/2) while a
    standard head scales the joint product by 1/sqrt(d_k); folding
    (d_k / (d_k/2)) ** 0.25 = 2 ** 0.25 into both query and key blocks makes
    the dense head reproduce the factored one exactly.
    """
    if not head.factored:
        raise ValueError("head is not factored")
    alpha = 2.0 ** 0.25

    def blockdiag(a, b):
        out = np.zeros((a.shape[0] + b.shape[0], a.shape[1] + b.shape[1]))
        out[:a.shape[0], :a.shape[1]] = a
        out[a.shape[0]:, a.shape[1]:] = b
        return out

    return {
        "w_q": blockdiag(alpha * head.w_qc.data, alpha * head.w_qp.data),
        "w_k": blockdiag(alpha * head.w_kc.data, alpha * head.w_kp.data),
        "w_v": blockdiag(head.w_vc.data, head.w_vp.data),
        "w_o": blockdiag(head.w_oc.data, head.w_op.data),
    }
