"""Detect approximate symmetries of trajectory datasets with recurrent
discriminators."""

from .envs import Box2DConfig, Grav3DConfig, gen_box2d, gen_grav3d
from .gru import AdamState, Batch, NetParams, TrainConfig, init_params
from .pipeline import ExperimentConfig, ExperimentResult, run_experiment, verdict
from .transforms import CandidateTransform, TransformDraw, transform_dataset
from .trajectory import (
    ChannelGroup,
    Dataset,
    StateSchema,
    Trajectory,
    load_dataset,
    save_dataset,
)

__version__ = "0.1.0"
