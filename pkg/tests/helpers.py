"""Fixture builders shared by several test modules."""

import numpy as np

from trafficwarn.neural import init_model, loss_and_gradients
from trafficwarn.neural.model import loss_only

from oracles import central_difference, relative_error

FD_STEP = 1e-5
FD_FLOOR = 1e-6


def inject_outliers(x, fraction, rng):
    """Replace ``fraction`` of the cells of each feature by mean +- U[5, 10] sigma."""
    x = x.copy()
    mask = np.zeros_like(x, dtype=bool)
    for f in range(x.shape[1]):
        mu, sd = x[:, f].mean(), x[:, f].std()
        idx = rng.choice(len(x), int(round(fraction * len(x))), replace=False)
        x[idx, f] = mu + rng.choice([-1, 1], idx.size) * rng.uniform(5, 10, idx.size) * sd
        mask[idx, f] = True
    return x, mask


def gradient_check(kind, seed, H=8, T=10, B=4):
    """Relative error between backprop and central differences, per tensor."""
    rng = np.random.default_rng(seed)
    m = init_model(kind, hidden_dim=H, rng=rng)
    X = rng.normal(size=(B, T, 3))
    y = rng.integers(0, 2, B).astype(float)
    _, grads = loss_and_gradients(m, X, y)
    errs = {}
    for name, p in m.tensors().items():
        num = central_difference(lambda: loss_only(m, X, y), p, FD_STEP)
        errs[name] = relative_error(grads[name], num, FD_FLOOR)
    return errs
