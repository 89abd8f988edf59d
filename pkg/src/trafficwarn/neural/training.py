"""Adam with decoupled weight decay, and the mini-batch training loop."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, TrainingError
from .model import SequenceClassifier, loss_and_gradients, loss_only

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 300
    batch_size: int = 64
    learning_rate: float = 1e-3
    weight_decay: float = 1e-5
    early_stop_patience: int = 10  # 0 disables early stopping
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1 or not self.learning_rate > 0:
            raise ConfigError("epochs, batch_size and learning_rate must be positive")
        if self.weight_decay < 0 or self.early_stop_patience < 0:
            raise ConfigError("weight_decay and early_stop_patience must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def is_decayed(name: str) -> bool:
    """Weight decay applies to weight matrices/vectors, not biases."""
    leaf = name.split(".")[-1]
    return not (leaf.startswith("b") or leaf == "c")


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray], state: AdamState, cfg: TrainConfig) -> AdamState:
    """In-place Adam update with decoupled weight decay (weights only)."""
    state.step += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    for name, p in params.items():
        g = grads[name]
        m = state.m.setdefault(name, np.zeros_like(p))
        v = state.v.setdefault(name, np.zeros_like(p))
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = (m / c1) / (np.sqrt(v / c2) + cfg.eps)
        if cfg.weight_decay and is_decayed(name):
            update = update + cfg.weight_decay * p
        p -= cfg.learning_rate * update
    return state


def train(model: SequenceClassifier, X_train, y_train, X_val, y_val, cfg: TrainConfig = TrainConfig()):
    """Mini-batch training with early stopping on validation loss.

    Returns (best model, log) where the best model has the lowest validation
    loss seen and ``log`` is a list of per-epoch dicts.
    """
    X_train, y_train = np.asarray(X_train, dtype=float), np.asarray(y_train, dtype=float)
    X_val, y_val = np.asarray(X_val, dtype=float), np.asarray(y_val, dtype=float)
    if len(X_train) == 0 or len(X_val) == 0:
        raise DataError("training and validation sets must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    model = model.copy()
    params = model.tensors()
    state = AdamState()
    best, best_loss, best_epoch = model.copy(), np.inf, 0
    since_best = 0
    history = []
    n = len(X_train)
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, cfg.batch_size):
            idx = order[s : s + cfg.batch_size]
            loss, grads = loss_and_gradients(model, X_train[idx], y_train[idx])
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite training loss at epoch {epoch}, batch starting {s}; "
                    f"max |param| = {max(float(np.abs(p).max()) for p in params.values()):.3e}"
                )
            adam_step(params, grads, state, cfg)
            total += loss * len(idx)
        val_loss = loss_only(model, X_val, y_val)
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        history.append({"epoch": epoch, "train_loss": total / n, "val_loss": val_loss})
        if val_loss < best_loss:
            best, best_loss, best_epoch = model.copy(), val_loss, epoch
            since_best = 0
        else:
            since_best += 1
            if cfg.early_stop_patience and since_best >= cfg.early_stop_patience:
                log.info("early stop at epoch %d (best epoch %d)", epoch, best_epoch)
                break
    return best, {"epochs_run": len(history), "best_epoch": best_epoch, "best_val_loss": best_loss,
                  "history": history}
