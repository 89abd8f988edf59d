"""
GRU and GRU-with-additive-attention binary sequence classifiers in numpy.

Shapes: batch B, steps T, input features D, hidden units H, attention
score dimension S. Gate matrices act on the concatenation [h, x].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError, DataError

KINDS = ("gru", "gru_attention")


def sigmoid(a):
    # split by sign so exp never overflows
    out = np.empty_like(np.asarray(a, dtype=float))
    a = np.asarray(a, dtype=float)
    pos = a >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    e = np.exp(a[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass
class GruParams:
    W_r: np.ndarray
    W_z: np.ndarray
    W: np.ndarray
    b_r: np.ndarray
    b_z: np.ndarray
    b: np.ndarray

    @property
    def hidden_dim(self) -> int:
        return self.b.shape[0]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1] - self.b.shape[0]

    def check(self):
        H = self.hidden_dim
        for name in ("W_r", "W_z", "W"):
            if getattr(self, name).shape != (H, H + self.input_dim):
                raise ConfigError(f"{name} has shape {getattr(self, name).shape}, expected {(H, H + self.input_dim)}")
        for name in ("b_r", "b_z"):
            if getattr(self, name).shape != (H,):
                raise ConfigError(f"{name} has shape {getattr(self, name).shape}, expected {(H,)}")

    @classmethod
    def zeros(cls, hidden_dim: int, input_dim: int = 3) -> "GruParams":
        H, D = hidden_dim, input_dim
        return cls(*(np.zeros((H, H + D)) for _ in range(3)), *(np.zeros(H) for _ in range(3)))


@dataclass
class AttentionParams:
    v: np.ndarray
    W_h: np.ndarray
    W_x: np.ndarray
    b: np.ndarray

    @classmethod
    def zeros(cls, score_dim: int, hidden_dim: int, input_dim: int = 3) -> "AttentionParams":
        return cls(np.zeros(score_dim), np.zeros((score_dim, hidden_dim)), np.zeros((score_dim, input_dim)),
                   np.zeros(score_dim))


@dataclass
class SequenceClassifier:
    kind: str
    gru: GruParams
    head_w: np.ndarray
    head_c: np.ndarray  # shape (1,)
    attention: Optional[AttentionParams] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"model kind must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "gru_attention" and self.attention is None:
            raise ConfigError("gru_attention model needs attention parameters")
        self.gru.check()

    @property
    def hidden_dim(self) -> int:
        return self.gru.hidden_dim

    @property
    def input_dim(self) -> int:
        return self.gru.input_dim

    def tensors(self) -> dict[str, np.ndarray]:
        """Name -> array (references, so in-place updates modify the model)."""
        out = {f"gru.{k}": getattr(self.gru, k) for k in ("W_r", "W_z", "W", "b_r", "b_z", "b")}
        if self.attention is not None:
            out.update({f"att.{k}": getattr(self.attention, k) for k in ("v", "W_h", "W_x", "b")})
        out["head.w"] = self.head_w
        out["head.c"] = self.head_c
        return out

    def copy(self) -> "SequenceClassifier":
        g = GruParams(*(a.copy() for a in (self.gru.W_r, self.gru.W_z, self.gru.W, self.gru.b_r, self.gru.b_z, self.gru.b)))
        att = None
        if self.attention is not None:
            a = self.attention
            att = AttentionParams(a.v.copy(), a.W_h.copy(), a.W_x.copy(), a.b.copy())
        return SequenceClassifier(self.kind, g, self.head_w.copy(), self.head_c.copy(), att)


def init_model(
    kind: str,
    hidden_dim: int = 64,
    input_dim: int = 3,
    score_dim: int | None = None,
    rng: np.random.Generator | int | None = 0,
) -> SequenceClassifier:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialisation."""
    rng = np.random.default_rng(rng)
    H, D = hidden_dim, input_dim
    S = score_dim or hidden_dim

    def u(shape, fan_in):
        a = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-a, a, size=shape)

    gru = GruParams(u((H, H + D), H + D), u((H, H + D), H + D), u((H, H + D), H + D),
                    u(H, H + D), u(H, H + D), u(H, H + D))
    att = None
    if kind == "gru_attention":
        att = AttentionParams(u(S, S), u((S, H), H + D), u((S, D), H + D), u(S, H + D))
    return SequenceClassifier(kind, gru, u(H, H), u(1, H), att)


# --- forward ---------------------------------------------------------------


def gru_cell(h_prev, x, p: GruParams):
    """One GRU step; works on vectors (H,) / (D,) or batches (B, H) / (B, D)."""
    h_prev = np.asarray(h_prev, dtype=float)
    x = np.asarray(x, dtype=float)
    if h_prev.shape[-1] != p.hidden_dim or x.shape[-1] != p.input_dim:
        raise ConfigError(f"gru_cell got h {h_prev.shape}, x {x.shape} for H={p.hidden_dim}, D={p.input_dim}")
    hx = np.concatenate([h_prev, x], axis=-1)
    r = sigmoid(hx @ p.W_r.T + p.b_r)
    z = sigmoid(hx @ p.W_z.T + p.b_z)
    c = np.tanh(np.concatenate([r * h_prev, x], axis=-1) @ p.W.T + p.b)
    return (1.0 - z) * h_prev + z * c


def gru_forward(sequence, p: GruParams, h0=None) -> np.ndarray:
    """Hidden states for every step: (T, H) for one sequence, (B, T, H) for a batch."""
    seq = np.asarray(sequence, dtype=float)
    if seq.shape[-2] == 0:
        raise DataError("empty sequence")
    single = seq.ndim == 2
    if single:
        seq = seq[None]
    B, T, _ = seq.shape
    h = np.zeros((B, p.hidden_dim)) if h0 is None else np.broadcast_to(np.asarray(h0, dtype=float), (B, p.hidden_dim))
    out = np.empty((B, T, p.hidden_dim))
    for t in range(T):
        h = gru_cell(h, seq[:, t], p)
        out[:, t] = h
    return out[0] if single else out


def softmax(e, axis=-1):
    e = np.asarray(e, dtype=float)
    z = np.exp(e - e.max(axis=axis, keepdims=True))
    return z / z.sum(axis=axis, keepdims=True)


def attention(hidden_states, inputs, p: AttentionParams):
    """Additive attention: e_t = v . tanh(W_h H_t + W_x x_t + b), alpha = softmax(e).

    Returns (alpha, context); accepts (T, .) or (B, T, .) arrays.
    """
    Hs = np.asarray(hidden_states, dtype=float)
    X = np.asarray(inputs, dtype=float)
    u = np.tanh(Hs @ p.W_h.T + X @ p.W_x.T + p.b)
    e = u @ p.v
    alpha = softmax(e, axis=-1)
    context = np.einsum("...t,...th->...h", alpha, Hs)
    return alpha, context


def _logits(model: SequenceClassifier, X: np.ndarray) -> np.ndarray:
    Hs = gru_forward(X, model.gru)
    if model.kind == "gru":
        feat = Hs[:, -1]
    else:
        _, feat = attention(Hs, X, model.attention)
    return feat @ model.head_w + model.head_c[0]


def model_forward(model: SequenceClassifier, X) -> np.ndarray:
    """Congestion probability for a (T, D) sequence or a (B, T, D) batch."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    p = sigmoid(_logits(model, X[None] if single else X))
    return p[0] if single else p


# --- loss and exact gradients ----------------------------------------------


def bce_from_logits(logits, y) -> float:
    logits = np.asarray(logits, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.mean(np.logaddexp(0.0, logits) - y * logits))


def loss_and_gradients(model: SequenceClassifier, X, y) -> tuple[float, dict[str, np.ndarray]]:
    """Mean binary cross-entropy and its gradient for every tensor in ``model.tensors()``.

    Backpropagation through time over all gates, the attention scores and
    the classifier head.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 3 or len(X) == 0:
        raise DataError(f"expected a non-empty (B, T, D) batch, got shape {X.shape}")
    g = model.gru
    B, T, D = X.shape
    H = g.hidden_dim

    # forward with cache
    hs = np.zeros((B, T + 1, H))
    rs, zs, cs = (np.empty((B, T, H)) for _ in range(3))
    for t in range(T):
        h = hs[:, t]
        hx = np.concatenate([h, X[:, t]], axis=1)
        r = sigmoid(hx @ g.W_r.T + g.b_r)
        z = sigmoid(hx @ g.W_z.T + g.b_z)
        c = np.tanh(np.concatenate([r * h, X[:, t]], axis=1) @ g.W.T + g.b)
        rs[:, t], zs[:, t], cs[:, t] = r, z, c
        hs[:, t + 1] = (1.0 - z) * h + z * c
    Hs = hs[:, 1:]

    grads = {k: np.zeros_like(v) for k, v in model.tensors().items()}
    if model.kind == "gru":
        feat = Hs[:, -1]
    else:
        a = model.attention
        u = np.tanh(Hs @ a.W_h.T + X @ a.W_x.T + a.b)  # (B, T, S)
        alpha = softmax(u @ a.v, axis=1)
        feat = np.einsum("bt,bth->bh", alpha, Hs)

    logits = feat @ model.head_w + model.head_c[0]
    loss = bce_from_logits(logits, y)
    dlogit = (sigmoid(logits) - y) / B
    grads["head.w"] = feat.T @ dlogit
    grads["head.c"] = np.array([dlogit.sum()])
    dfeat = dlogit[:, None] * model.head_w[None, :]

    dH = np.zeros((B, T, H))
    if model.kind == "gru":
        dH[:, -1] = dfeat
    else:
        dH += alpha[:, :, None] * dfeat[:, None, :]
        dalpha = np.einsum("bth,bh->bt", Hs, dfeat)
        de = alpha * (dalpha - (alpha * dalpha).sum(axis=1, keepdims=True))
        grads["att.v"] = np.einsum("bt,bts->s", de, u)
        da = de[:, :, None] * a.v[None, None, :] * (1.0 - u * u)  # (B, T, S)
        grads["att.W_h"] = np.einsum("bts,bth->sh", da, Hs)
        grads["att.W_x"] = np.einsum("bts,btd->sd", da, X)
        grads["att.b"] = da.sum(axis=(0, 1))
        dH += da @ a.W_h

    dWr, dWz, dW = (np.zeros_like(g.W) for _ in range(3))
    dbr, dbz, db = (np.zeros(H) for _ in range(3))
    dh_next = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        h = hs[:, t]
        r, z, c = rs[:, t], zs[:, t], cs[:, t]
        dh = dH[:, t] + dh_next
        dz = dh * (c - h)
        dc = dh * z
        dac = dc * (1.0 - c * c)
        rhx = np.concatenate([r * h, X[:, t]], axis=1)
        dW += dac.T @ rhx
        db += dac.sum(axis=0)
        drh = (dac @ g.W)[:, :H]
        dr = drh * h
        dar = dr * r * (1.0 - r)
        daz = dz * z * (1.0 - z)
        hx = np.concatenate([h, X[:, t]], axis=1)
        dWr += dar.T @ hx
        dbr += dar.sum(axis=0)
        dWz += daz.T @ hx
        dbz += daz.sum(axis=0)
        dh_next = dh * (1.0 - z) + drh * r + (dar @ g.W_r)[:, :H] + (daz @ g.W_z)[:, :H]
    grads.update({"gru.W_r": dWr, "gru.W_z": dWz, "gru.W": dW, "gru.b_r": dbr, "gru.b_z": dbz, "gru.b": db})
    return loss, grads


def loss_only(model: SequenceClassifier, X, y) -> float:
    return bce_from_logits(_logits(model, np.asarray(X, dtype=float)), y)
