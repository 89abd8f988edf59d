from .assignment import hungarian_assign
from .evaluation import evaluate_tracking, records_to_trajectories
from .kalman import (
    BoxKalman,
    BoxNoise,
    KalmanModel,
    TrackState,
    kalman_predict,
    kalman_update,
    mahalanobis_sq,
)
from .tracker import (
    Detection,
    Track,
    Tracker,
    TrackerConfig,
    TrackRecord,
    TrackStatus,
    cosine_distance,
    fused_cost,
    run_tracker,
    squash_mahalanobis,
    track_step,
)
