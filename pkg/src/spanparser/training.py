"""Margin training loop: Adam with linear warmup, periodic dev evaluation,
patience-triggered learning-rate halving, and best-iterate selection."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import backward
from .evaluation import score
from .optim import adam_step


@dataclass
class TrainConfig:
    batch_size: int = 250
    base_lr: float = 0.0008
    warmup_batches: int = 160
    evals_per_epoch: int = 4
    patience_epochs: int = 5
    halving_factor: float = 0.5
    max_epochs: int = 10
    seed: int = 0

    def validate(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.evals_per_epoch < 1:
            raise ValueError("evals_per_epoch must be >= 1")
        if not 0.0 < self.halving_factor < 1.0:
            raise ValueError("halving_factor must be in (0, 1)")
        if self.base_lr <= 0.0:
            raise ValueError("base_lr must be positive")
        return self


@dataclass
class TrainState:
    lr: float = 0.0
    batches_seen: int = 0
    best_f1: float = -1.0
    best_params: dict = None
    epochs_since_improvement: int = 0
    num_halvings: int = 0


@dataclass
class TrainResult:
    best_f1: float
    log_rows: list
    state: TrainState


def lr_schedule(batches_seen: int, state: TrainState,
                config: TrainConfig) -> float:
    """Linear warmup to base_lr over warmup_batches, then flat, scaled down
    by the halving factor once per triggered halving."""
    if batches_seen < 0:
        raise ValueError("batches_seen must be >= 0")
    if config.warmup_batches > 0:
        lr = min(config.base_lr * batches_seen / config.warmup_batches,
                 config.base_lr)
    else:
        lr = config.base_lr
    return lr * config.halving_factor ** state.num_halvings


def default_eval_fn(model, dev_trees, dev_external=None):
    """Parse the dev set and return labeled F1 against it."""
    preds = []
    for k, tree in enumerate(dev_trees):
        ext = dev_external[k] if dev_external is not None else None
        preds.append(model.parse(tree.sentence(), external=ext))
    return score(preds, dev_trees).f1


def train(model, treebank, dev, config: TrainConfig, eval_fn=None,
          log_fn=None, train_external=None, dev_external=None) -> TrainResult:
    """Train ``model`` in place and leave it at the best dev iterate.

    ``eval_fn(model, dev)``, when given, replaces dev parsing (used by tests
    to script the F1 trajectory).  ``log_fn``, when given, receives one
    tab-separated line per evaluation: batches, lr, mean train loss since
    the previous evaluation, dev F1.
    """
    config.validate()
    if not treebank:
        raise ValueError("training set is empty")
    data = []
    for k, tree in enumerate(treebank):
        ext = train_external[k] if train_external is not None else None
        data.append((tree.sentence(), model.gold_binary(tree), ext))
    if eval_fn is None:
        eval_fn = lambda m, d: default_eval_fn(m, d, dev_external)

    rng = np.random.default_rng(config.seed)
    state = TrainState()
    log_rows = []
    total = len(data)
    eval_points = sorted({math.ceil(total * k / config.evals_per_epoch)
                          for k in range(1, config.evals_per_epoch + 1)})
    loss_sum, loss_sentences = 0.0, 0

    def run_eval():
        nonlocal loss_sum, loss_sentences
        f1 = eval_fn(model, dev)
        mean_loss = loss_sum / loss_sentences if loss_sentences else 0.0
        row = (state.batches_seen, state.lr, mean_loss, f1)
        log_rows.append(row)
        if log_fn is not None:
            log_fn("%d\t%.8f\t%.6f\t%.4f" % row)
        loss_sum, loss_sentences = 0.0, 0
        if f1 > state.best_f1:
            state.best_f1 = f1
            state.best_params = model.store.snapshot()
            return True
        return False

    for epoch in range(config.max_epochs):
        order = rng.permutation(total)
        improved = False
        processed = 0
        next_eval = 0
        for start in range(0, total, config.batch_size):
            batch = order[start:start + config.batch_size]
            batch_tensors = []
            batch_value = 0.0
            for idx in batch:
                sentence, gold, ext = data[idx]
                result = model.sentence_loss(sentence, gold, train=True,
                                             rng=rng, external=ext)
                batch_value += result.value
                if result.violator is not None:
                    batch_tensors.append(result.loss)
            if not np.isfinite(batch_value):
                raise RuntimeError(
                    "non-finite training loss (epoch %d, batch at sentence "
                    "%d, lr %g)" % (epoch, start, state.lr))
            if batch_tensors:
                total_loss = batch_tensors[0]
                for extra in batch_tensors[1:]:
                    total_loss = total_loss + extra
                backward(total_loss)
            state.batches_seen += 1
            state.lr = lr_schedule(state.batches_seen, state, config)
            adam_step(model.store, state.lr)
            loss_sum += batch_value
            loss_sentences += len(batch)
            processed += len(batch)
            while next_eval < len(eval_points) and processed >= eval_points[next_eval]:
                improved = run_eval() or improved
                next_eval += 1
        if improved:
            state.epochs_since_improvement = 0
        else:
            state.epochs_since_improvement += 1
            if state.epochs_since_improvement >= config.patience_epochs:
                state.num_halvings += 1
                state.epochs_since_improvement = 0
    if state.best_params is not None:
        model.store.restore(state.best_params)
    return TrainResult(best_f1=state.best_f1, log_rows=log_rows, state=state)
