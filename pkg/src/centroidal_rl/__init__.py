"""Reinforcement learning for quadruped locomotion on a centroidal rigid-body model.

The policy outputs desired body accelerations; a batched interior-point QP
turns them into ground reaction forces that drive a single-rigid-body
simulation with Raibert-style foot placement.
"""
from .dynamics import CentroidalState, RobotParams, a1_params, laikago_params, robot_preset
from .env import LocomotionEnv, TaskConfig, make_env
from .gait import GaitConfig, gait_preset
from .grf import QpWeights, transcribe
from .policy import MlpPolicy
from .ppo import PpoConfig, train

__version__ = "0.1.0"

__all__ = [
    "CentroidalState", "GaitConfig", "LocomotionEnv", "MlpPolicy", "PpoConfig", "QpWeights",
    "RobotParams", "TaskConfig", "a1_params", "gait_preset", "laikago_params", "make_env",
    "robot_preset", "train", "transcribe",
]
