"""Versioned JSON checkpoints for sequence classifiers."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from .model import AttentionParams, GruParams, SequenceClassifier

FORMAT = "trafficwarn.checkpoint"
VERSION = 1


def model_to_dict(model: SequenceClassifier) -> dict:
    return {
        "kind": model.kind,
        "hidden_dim": model.hidden_dim,
        "input_dim": model.input_dim,
        "tensors": {k: {"shape": list(v.shape), "data": v.ravel().tolist()} for k, v in model.tensors().items()},
    }


def model_from_dict(d: dict) -> SequenceClassifier:
    t = {k: np.array(v["data"], dtype=float).reshape(v["shape"]) for k, v in d["tensors"].items()}
    gru = GruParams(t["gru.W_r"], t["gru.W_z"], t["gru.W"], t["gru.b_r"], t["gru.b_z"], t["gru.b"])
    att = None
    if d["kind"] == "gru_attention":
        att = AttentionParams(t["att.v"], t["att.W_h"], t["att.W_x"], t["att.b"])
    return SequenceClassifier(d["kind"], gru, t["head.w"], t["head.c"], att)


def save_checkpoint(path, model: SequenceClassifier, config: dict | None = None, normalizer: str | None = None,
                    training_log: dict | None = None):
    doc = {
        "format": FORMAT,
        "version": VERSION,
        "config": config or {},
        "normalizer": normalizer,
        "model": model_to_dict(model),
        "training_log": training_log or {},
    }
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_checkpoint(path) -> tuple[SequenceClassifier, dict]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT:
        raise ConfigError(f"{path}: not a model checkpoint")
    if doc.get("version") != VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    return model_from_dict(doc["model"]), doc
