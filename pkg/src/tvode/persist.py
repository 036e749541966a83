"""Saving and loading fitted pipelines.

A model bundle carries everything a later forecast needs: the run
configuration that materializes the dataset, the training split, the
scaling, the split model and the coefficient predictor. Floats go
through JSON's shortest round-trip representation, so save/load/save
produces identical bytes.
"""

import json

import numpy as np

from .discovery import model_from_json, model_to_json
from .predictor import predictor_from_json, predictor_to_json
from .preprocess import ScalingSpec


def scaling_to_json(spec):
    if spec is None:
        return None
    return {
        "names": list(spec.names),
        "mins": spec.mins.tolist(),
        "maxs": spec.maxs.tolist(),
        "degenerate": [bool(v) for v in spec.degenerate],
    }


def scaling_from_json(payload):
    if payload is None:
        return None
    return ScalingSpec(
        names=tuple(payload["names"]),
        mins=np.asarray(payload["mins"], dtype=float),
        maxs=np.asarray(payload["maxs"], dtype=float),
        degenerate=np.asarray(payload["degenerate"], dtype=bool),
    )


def bundle_to_json(cfg, prep, model, predictor):
    return {
        "format": "tvode-model-bundle",
        "config": cfg,
        "train_end": prep.train_end,
        "scaling": scaling_to_json(prep.scaling),
        "model": model_to_json(model),
        "predictor": None if predictor is None else predictor_to_json(predictor),
    }


def bundle_from_json(payload):
    if payload.get("format") != "tvode-model-bundle":
        raise ValueError("not a model bundle")
    model = model_from_json(payload["model"])
    predictor = (
        None if payload["predictor"] is None else predictor_from_json(payload["predictor"])
    )
    return {
        "config": payload["config"],
        "train_end": payload["train_end"],
        "scaling": scaling_from_json(payload["scaling"]),
        "model": model,
        "predictor": predictor,
    }


def save_json(payload, path):
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=1)
        handle.write("\n")


def load_json(path):
    with open(path) as handle:
        return json.load(handle)
