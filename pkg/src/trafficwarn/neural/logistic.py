"""Logistic-regression congestion baseline fitted by maximum likelihood."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .model import sigmoid


@dataclass
class LogisticParams:
    beta0: float
    beta: np.ndarray

    def to_dict(self) -> dict:
        return {"beta0": self.beta0, "beta": np.asarray(self.beta).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "LogisticParams":
        return cls(float(d["beta0"]), np.array(d["beta"], dtype=float))


def logistic_predict(params: LogisticParams, x) -> np.ndarray:
    """P(Y=1 | x) for an (n, p) feature matrix (or one (p,) row)."""
    x = np.asarray(x, dtype=float)
    return sigmoid(params.beta0 + x @ params.beta)


def log_likelihood(params: LogisticParams, x, y) -> float:
    a = params.beta0 + np.asarray(x, dtype=float) @ params.beta
    return float(np.sum(np.asarray(y) * a - np.logaddexp(0.0, a)))


def logistic_fit(x, y, lr: float = 1.0, max_iter: int = 20000, tol: float = 1e-7) -> LogisticParams:
    """Gradient ascent on the mean log-likelihood.

    Stops when the gradient's max-norm falls below ``tol``. Features should be
    on comparable scales (normalised) for the fixed step size to behave.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if len(np.unique(y)) < 2:
        raise DataError("logistic fit needs both classes in the training data")
    n, p = x.shape
    b0, b = 0.0, np.zeros(p)
    for _ in range(max_iter):
        resid = y - sigmoid(b0 + x @ b)
        g0 = resid.mean()
        g = x.T @ resid / n
        b0 += lr * g0
        b += lr * g
        if max(abs(g0), float(np.abs(g).max())) < tol:
            break
    return LogisticParams(float(b0), b)


def logistic_gradients(params: LogisticParams, x, y) -> tuple[float, np.ndarray]:
    """Gradient of the mean negative log-likelihood w.r.t. (beta0, beta)."""
    x = np.asarray(x, dtype=float)
    resid = sigmoid(params.beta0 + x @ params.beta) - np.asarray(y, dtype=float)
    return float(resid.mean()), x.T @ resid / len(x)
