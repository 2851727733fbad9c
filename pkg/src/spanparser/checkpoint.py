"""Versioned binary checkpoints.

Byte layout (all integers little-endian):

    bytes 0..7    magic b"SPANCKPT"
    bytes 8..11   format version, uint32
    bytes 12..19  header length in bytes, uint64
    next          UTF-8 JSON header
    rest          parameter payload: raw float64 arrays, little-endian,
                  C order, concatenated in the header's "params" order

The header records both model configs, the vocabulary, the label inventory,
the construction seed, and for every parameter its name and shape, so a
checkpoint is self-describing: loading rebuilds the model from the header
and then overwrites its parameters from the payload.
"""

from __future__ import annotations

import dataclasses
import json
import struct

import numpy as np

from .encoder import EncoderConfig
from .lexical import LexicalConfig
from .model import SpanParser
from .vocab import LabelInventory, Vocabulary

MAGIC = b"SPANCKPT"
FORMAT_VERSION = 1


def save_checkpoint(model: SpanParser, path) -> None:
    params = [{"name": name, "shape": list(p.data.shape)}
              for name, p in model.store.items()]
    header = {
        "format": "span-parser-checkpoint",
        "encoder_config": dataclasses.asdict(model.encoder_config),
        "lexical_config": dataclasses.asdict(model.lexical_config),
        "vocab": model.vocab.to_dict(),
        "labels": model.labels.to_dict(),
        "seed": model.seed,
        "params": params,
    }
    blob = json.dumps(header, ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, p in model.store.items():
            fh.write(np.ascontiguousarray(p.data, dtype="<f8").tobytes())


def load_checkpoint(path) -> SpanParser:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:8] != MAGIC:
        raise ValueError("%s is not a checkpoint file (bad magic)" % path)
    (version,) = struct.unpack_from("<I", raw, 8)
    if version != FORMAT_VERSION:
        raise ValueError("checkpoint format version %d is not supported "
                         "(expected %d)" % (version, FORMAT_VERSION))
    (header_len,) = struct.unpack_from("<Q", raw, 12)
    header_end = 20 + header_len
    header = json.loads(raw[20:header_end].decode("utf-8"))

    model = SpanParser(
        EncoderConfig(**header["encoder_config"]),
        LexicalConfig(**header["lexical_config"]),
        Vocabulary.from_dict(header["vocab"]),
        LabelInventory.from_dict(header["labels"]),
        seed=header.get("seed", 0),
    )
    recorded = header["params"]
    if len(recorded) != len(model.store):
        raise ValueError("checkpoint lists %d parameters but the model has "
                         "%d" % (len(recorded), len(model.store)))
    offset = header_end
    for entry in recorded:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in model.store:
            raise ValueError("checkpoint parameter %r does not exist in the "
                             "rebuilt model" % name)
        param = model.store[name]
        if param.data.shape != shape:
            raise ValueError("checkpoint parameter %r has shape %s but the "
                             "model expects %s"
                             % (name, shape, param.data.shape))
        count = int(np.prod(shape, dtype=np.int64)) if shape else 1
        end = offset + 8 * count
        if end > len(raw):
            raise ValueError("checkpoint payload is truncated at %r" % name)
        param.tensor.data = np.frombuffer(
            raw[offset:end], dtype="<f8").reshape(shape).astype(np.float64)
        offset = end
    if offset != len(raw):
        raise ValueError("checkpoint has %d trailing bytes"
                         % (len(raw) - offset))
    return model
