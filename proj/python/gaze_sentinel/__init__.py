"""Gaze-based robot failure detection."""

from ._core import (
    GazeSentinelError,
    Model,
    Session,
    __version__,
    entropies,
    feature_names,
    load_model,
    load_session,
    loo_cv,
    save_model,
    save_session,
    simulate,
    sliding_window_count,
    stream_detect,
    task_dataset,
    train,
)

__all__ = [
    "GazeSentinelError",
    "Model",
    "Session",
    "entropies",
    "feature_names",
    "load_model",
    "load_session",
    "loo_cv",
    "save_model",
    "save_session",
    "simulate",
    "sliding_window_count",
    "stream_detect",
    "task_dataset",
    "train",
]
