"""Multimodal pose regression: scenes, training, evaluation and the CLI."""

from ._core import (
    Dataset,
    Error,
    PoseRegressor,
    SceneSpec,
    TrainConfig,
    ValidationError,
    builtin_scene,
    builtin_scene_names,
    chordal_distance,
    evaluate,
    generate_dataset,
    geodesic_angle,
    load_regressor,
    oracle_modes,
    read_dataset,
    rotation_from_6d,
    run_cli,
    train,
)

__all__ = [
    "Dataset",
    "Error",
    "PoseRegressor",
    "SceneSpec",
    "TrainConfig",
    "ValidationError",
    "builtin_scene",
    "builtin_scene_names",
    "chordal_distance",
    "evaluate",
    "generate_dataset",
    "geodesic_angle",
    "load_regressor",
    "oracle_modes",
    "read_dataset",
    "rotation_from_6d",
    "run_cli",
    "train",
]
