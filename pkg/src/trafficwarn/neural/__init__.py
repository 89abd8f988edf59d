from .checkpoint import load_checkpoint, save_checkpoint
from .logistic import LogisticParams, logistic_fit, logistic_predict
from .metrics import classification_metrics
from .model import (
    AttentionParams,
    GruParams,
    SequenceClassifier,
    attention,
    gru_cell,
    gru_forward,
    init_model,
    loss_and_gradients,
    model_forward,
)
from .training import AdamState, TrainConfig, adam_step, train
