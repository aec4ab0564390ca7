"""Suction-gripper box picking in simulation.

Proprioceptive, depth-image and voxel-grid policies trained with
demo-bootstrapped soft actor-critic, plus scripted baselines and a seeded
evaluation harness.
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
