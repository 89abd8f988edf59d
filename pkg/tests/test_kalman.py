import numpy as np
import pytest
from hypothesis import given, strategies as st

from trafficwarn.errors import ConfigError, NumericalError
from trafficwarn.geometry import BoundingBox
from trafficwarn.tracking.kalman import (
    BoxKalman,
    KalmanModel,
    TrackState,
    box_to_measurement,
    kalman_predict,
    kalman_update,
    mahalanobis_sq,
    measurement_to_wh,
)


def cv_model(q=0.0, r=1.0, dim=1):
    """Constant-velocity model over ``dim`` positions."""
    F = np.eye(2 * dim)
    F[:dim, dim:] = np.eye(dim)
    H = np.eye(dim, 2 * dim)
    return KalmanModel(F, H, q * np.eye(2 * dim), r * np.eye(dim))


def is_psd(P, rel=1e-9):
    return np.allclose(P, P.T) and np.linalg.eigvalsh(P).min() >= -rel * max(np.trace(P), 1e-300)


class TestModel:
    def test_shape_validation(self):
        with pytest.raises(ConfigError):
            KalmanModel(np.eye(2), np.eye(3), np.eye(2), np.eye(1))
        with pytest.raises(ConfigError):
            KalmanModel(np.eye(2), np.eye(1, 2), np.eye(3), np.eye(1))
        with pytest.raises(ConfigError):
            KalmanModel(np.eye(2), np.eye(1, 2), np.eye(2), np.eye(2))

    def test_asymmetric_noise_rejected(self):
        with pytest.raises(ConfigError):
            KalmanModel(np.eye(2), np.eye(1, 2), np.array([[1.0, 0.5], [0.0, 1.0]]), np.eye(1))

    def test_state_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            kalman_predict(TrackState(np.zeros(3), np.eye(3)), cv_model())


class TestPredict:
    def test_identity_transition_without_noise(self):
        m = KalmanModel(np.eye(2), np.eye(1, 2), np.zeros((2, 2)), np.eye(1))
        s = kalman_predict(TrackState([3.0, 4.0], np.eye(2)), m)
        assert np.array_equal(s.x, [3.0, 4.0])

    def test_constant_velocity_step(self):
        s = kalman_predict(TrackState([0.0, 2.0], np.eye(2)), cv_model())
        assert s.x[0] == 2.0

    def test_additive_covariance(self):
        m = KalmanModel(np.eye(2), np.eye(1, 2), np.eye(2), np.eye(1))
        assert np.array_equal(kalman_predict(TrackState([0, 0], np.eye(2)), m).P, 2 * np.eye(2))


class TestUpdate:
    def test_zero_innovation_keeps_state(self):
        s = TrackState([5.0, 1.0], np.diag([4.0, 1.0]))
        u = kalman_update(s, [5.0], cv_model())
        assert np.array_equal(u.x, s.x)

    def test_perfect_measurement_limit(self):
        m = KalmanModel(np.eye(2), np.eye(2), np.zeros((2, 2)), 1e-12 * np.eye(2))
        u = kalman_update(TrackState([0.0, 0.0], np.eye(2)), [3.0, -7.0], m)
        assert np.allclose(u.x, [3.0, -7.0], atol=1e-6)

    def test_scalar_worked_example(self):
        # K = P/(P+R) = 0.5, posterior P = (1-K) P = 0.5
        m = KalmanModel(np.eye(1), np.eye(1), np.zeros((1, 1)), np.eye(1))
        u = kalman_update(TrackState([0.0], np.eye(1)), [2.0], m)
        assert u.x[0] == pytest.approx(1.0, abs=1e-15)
        assert u.P[0, 0] == pytest.approx(0.5, abs=1e-15)

    def test_singular_innovation_covariance(self):
        m = KalmanModel(np.eye(2), np.eye(2), np.zeros((2, 2)), np.zeros((2, 2)))
        with pytest.raises(NumericalError, match="condition number"):
            kalman_update(TrackState([0.0, 0.0], np.zeros((2, 2))), [1.0, 1.0], m)

    def test_measurement_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            kalman_update(TrackState([0.0, 0.0], np.eye(2)), [1.0, 2.0], cv_model())

    @given(st.integers(0, 2**32 - 1))
    def test_predict_then_consistent_update(self, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(4, 4))
        s = TrackState(rng.normal(size=4), A @ A.T + 0.1 * np.eye(4))
        m = cv_model(q=0.01, r=0.5, dim=2)
        pred = kalman_predict(s, m)
        upd = kalman_update(pred, m.H @ pred.x, m)
        assert np.allclose(upd.x, pred.x, atol=1e-12)
        assert np.trace(upd.P) <= np.trace(pred.P) + 1e-12


class TestMahalanobis:
    def test_zero_residual(self):
        s = TrackState([1.0, 0.0], np.eye(2))
        assert mahalanobis_sq(s, [1.0], cv_model()) == 0.0

    def test_scalar_worked_example(self):
        # S = P + R = 4, residual 2: 2 * (1/4) * 2
        m = KalmanModel(np.eye(1), np.eye(1), np.zeros((1, 1)), np.eye(1))
        assert mahalanobis_sq(TrackState([0.0], [[3.0]]), [2.0], m) == pytest.approx(1.0, abs=1e-15)

    @given(st.floats(0.1, 10), st.integers(0, 1000))
    def test_joint_rescaling_invariance(self, c, seed):
        rng = np.random.default_rng(seed)
        A = rng.normal(size=(2, 2))
        P = A @ A.T + 0.5 * np.eye(2)
        z = rng.normal(size=2)
        m1 = KalmanModel(np.eye(2), np.eye(2), np.zeros((2, 2)), np.eye(2))
        m2 = KalmanModel(np.eye(2), np.eye(2), np.zeros((2, 2)), c * c * np.eye(2))
        d1 = mahalanobis_sq(TrackState(np.zeros(2), P), z, m1)
        d2 = mahalanobis_sq(TrackState(np.zeros(2), c * c * P), c * z, m2)
        assert d2 == pytest.approx(d1, rel=1e-9)


class TestBoxKalman:
    def test_measurement_roundtrip(self):
        b = BoundingBox(10, 20, 90, 50)
        z = box_to_measurement(b)
        assert z[2] == 4500 and z[3] == pytest.approx(1.8)
        assert measurement_to_wh(z) == pytest.approx((90, 50))

    def test_noise_scales_with_box(self):
        kf = BoxKalman()
        small = kf.initiate(box_to_measurement(BoundingBox(0, 0, 10, 10)))
        big = kf.initiate(box_to_measurement(BoundingBox(0, 0, 100, 100)))
        assert big.P[0, 0] == pytest.approx(100 * small.P[0, 0])

    def test_gating_distance_vectorized(self):
        kf = BoxKalman()
        s = kf.predict(kf.initiate(box_to_measurement(BoundingBox(100, 100, 40, 20))))
        Z = np.array([box_to_measurement(BoundingBox(100 + d, 100, 40, 20)) for d in (0, 2, 5)])
        d = kf.gating_distance(s, Z)
        assert d[0] == pytest.approx(0.0, abs=1e-12)
        assert d[0] < d[1] < d[2]
        assert d[2] == pytest.approx(mahalanobis_sq(s, Z[2], kf.model(s)), rel=1e-12)

    def test_tracks_moving_box(self):
        kf = BoxKalman()
        s = kf.initiate(box_to_measurement(BoundingBox(0, 50, 40, 20)))
        for t in range(1, 60):
            s = kf.predict(s)
            s = kf.update(s, box_to_measurement(BoundingBox(3.0 * t, 50, 40, 20)))
        assert s.x[4] == pytest.approx(3.0, abs=1e-3)
        assert is_psd(s.P)

    def test_area_never_predicted_negative(self):
        kf = BoxKalman()
        x = np.array([0, 0, 5.0, 1.0, 0, 0, -10.0, 0])
        s = kf.predict(TrackState(x, np.eye(8)))
        assert s.x[2] > 0
