"""Linear Kalman filter primitives and the box-state motion model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericalError

# 0.95 quantile of the chi-square distribution, indexed by degrees of freedom.
CHI2_95 = {1: 3.8415, 2: 5.9915, 3: 7.8147, 4: 9.4877, 5: 11.070, 6: 12.592, 7: 14.067, 8: 15.507, 9: 16.919}


@dataclass
class KalmanModel:
    F: np.ndarray
    H: np.ndarray
    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        self.F = np.atleast_2d(np.asarray(self.F, dtype=float))
        self.H = np.atleast_2d(np.asarray(self.H, dtype=float))
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        d = self.F.shape[0]
        m = self.H.shape[0]
        if self.F.shape != (d, d):
            raise ConfigError(f"F must be square, got {self.F.shape}")
        if self.H.shape != (m, d):
            raise ConfigError(f"H must be {m}x{d}, got {self.H.shape}")
        if self.Q.shape != (d, d):
            raise ConfigError(f"Q must be {d}x{d}, got {self.Q.shape}")
        if self.R.shape != (m, m):
            raise ConfigError(f"R must be {m}x{m}, got {self.R.shape}")
        for name in ("Q", "R"):
            M = getattr(self, name)
            if not np.allclose(M, M.T):
                raise ConfigError(f"{name} must be symmetric")

    @property
    def dim_x(self) -> int:
        return self.F.shape[0]

    @property
    def dim_z(self) -> int:
        return self.H.shape[0]


@dataclass
class TrackState:
    x: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).reshape(-1)
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        if self.P.shape != (self.x.size, self.x.size):
            raise ConfigError(f"P must be {self.x.size}x{self.x.size}, got {self.P.shape}")

    def copy(self) -> "TrackState":
        return TrackState(self.x.copy(), self.P.copy())


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def _check_dims(state: TrackState, model: KalmanModel):
    if state.x.size != model.dim_x:
        raise ConfigError(f"state has dimension {state.x.size}, model expects {model.dim_x}")


def kalman_predict(state: TrackState, model: KalmanModel) -> TrackState:
    """x <- F x, P <- F P F^T + Q."""
    _check_dims(state, model)
    F = model.F
    return TrackState(F @ state.x, _symmetrize(F @ state.P @ F.T + model.Q))


def innovation(state: TrackState, z, model: KalmanModel) -> tuple[np.ndarray, np.ndarray]:
    """Residual z - Hx and its covariance S = H P H^T + R."""
    _check_dims(state, model)
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.size != model.dim_z:
        raise ConfigError(f"measurement has dimension {z.size}, model expects {model.dim_z}")
    S = _symmetrize(model.H @ state.P @ model.H.T + model.R)
    return z - model.H @ state.x, S


def _solve_spd(S: np.ndarray, B: np.ndarray) -> np.ndarray:
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > 1e14:
        raise NumericalError(f"innovation covariance is singular (condition number {cond:.3e})")
    return np.linalg.solve(S, B)


def kalman_update(state: TrackState, z, model: KalmanModel) -> TrackState:
    """Correct a predicted state with measurement ``z``.

    K = P H^T S^-1, x <- x + K (z - Hx), P <- (I - K H) P (re-symmetrized).
    """
    y, S = innovation(state, z, model)
    PHt = state.P @ model.H.T
    K = _solve_spd(S, PHt.T).T
    x = state.x + K @ y
    P = (np.eye(model.dim_x) - K @ model.H) @ state.P
    return TrackState(x, _symmetrize(P))


def mahalanobis_sq(state: TrackState, z, model: KalmanModel) -> float:
    """Squared Mahalanobis distance d^T S^-1 d of a measurement."""
    y, S = innovation(state, z, model)
    return float(y @ _solve_spd(S, y))


# --- box motion model -------------------------------------------------------
# state: (cx, cy, area, aspect, vcx, vcy, varea, vaspect); measurement: first four.


def box_to_measurement(box) -> np.ndarray:
    return np.array([box.cx, box.cy, box.w * box.h, box.w / box.h])


def measurement_to_wh(z) -> tuple[float, float]:
    area, aspect = max(float(z[2]), 1e-6), max(float(z[3]), 1e-6)
    return float(np.sqrt(area * aspect)), float(np.sqrt(area / aspect))


@dataclass(frozen=True)
class BoxNoise:
    """Standard deviations relative to the current box.

    Positions scale with box height, area terms with box area and aspect
    terms with the aspect ratio.
    """

    std_position: float = 1.0 / 20
    std_velocity: float = 1.0 / 160
    std_area: float = 1.0 / 10
    std_area_velocity: float = 1.0 / 80
    std_aspect: float = 1.0 / 20
    std_aspect_velocity: float = 1.0 / 160
    init_velocity_scale: float = 10.0


class BoxKalman:
    """Constant-velocity filter over (cx, cy, area, aspect) with height-scaled noise."""

    ndim = 4

    def __init__(self, noise: BoxNoise | None = None):
        self.noise = noise or BoxNoise()
        F = np.eye(2 * self.ndim)
        F[: self.ndim, self.ndim:] = np.eye(self.ndim)
        self.F = F
        self.H = np.eye(self.ndim, 2 * self.ndim)

    def _pos_std(self, x) -> np.ndarray:
        n = self.noise
        _, h = measurement_to_wh(x)
        area, aspect = max(float(x[2]), 1e-6), max(float(x[3]), 1e-6)
        return np.array([n.std_position * h, n.std_position * h, n.std_area * area, n.std_aspect * aspect])

    def _vel_std(self, x) -> np.ndarray:
        n = self.noise
        _, h = measurement_to_wh(x)
        area, aspect = max(float(x[2]), 1e-6), max(float(x[3]), 1e-6)
        return np.array([n.std_velocity * h, n.std_velocity * h, n.std_area_velocity * area,
                         n.std_aspect_velocity * aspect])

    def model(self, state: TrackState) -> KalmanModel:
        q = np.concatenate([self._pos_std(state.x), self._vel_std(state.x)]) ** 2
        r = self._pos_std(state.x) ** 2
        return KalmanModel(self.F, self.H, np.diag(q), np.diag(r))

    def initiate(self, z) -> TrackState:
        z = np.asarray(z, dtype=float)
        x = np.concatenate([z, np.zeros(self.ndim)])
        std = np.concatenate([2.0 * self._pos_std(x), self.noise.init_velocity_scale * self._vel_std(x)])
        return TrackState(x, np.diag(std**2))

    def predict(self, state: TrackState) -> TrackState:
        x = state.x
        if x[2] + x[6] <= 0:
            # area would collapse; drop the shrink velocity
            x = x.copy()
            x[6] = 0.0
            state = TrackState(x, state.P)
        return kalman_predict(state, self.model(state))

    def update(self, state: TrackState, z) -> TrackState:
        return kalman_update(state, z, self.model(state))

    def gating_distance(self, state: TrackState, z) -> np.ndarray:
        """Squared Mahalanobis distances of one or many (rows of ``z``) measurements."""
        model = self.model(state)
        Z = np.atleast_2d(np.asarray(z, dtype=float))
        S = _symmetrize(model.H @ state.P @ model.H.T + model.R)
        Y = Z - model.H @ state.x
        return np.einsum("ij,ji->i", Y, _solve_spd(S, Y.T))
