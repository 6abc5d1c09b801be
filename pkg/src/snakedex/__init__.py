"""Dexterity-driven design of snake-like manipulators in voxelized task spaces.

Typical use::

    from snakedex import voxels, dexterity, evolution
    grid = voxels.preprocess(voxels.gen_synthetic_scene(voxels.default_scene_spec()), 2.0)
    report = dexterity.evaluate_fitness(design, grid, dexterity.EvalSettings())
"""
__version__ = "0.1.0"

from .dexterity import EvalSettings, FitnessReport, evaluate_fitness  # noqa: E402
from .kinematics import DesignParams, SegmentSpec, forward_kinematics, joint_limits  # noqa: E402
from .voxels import VoxelGrid, load_grid, save_grid  # noqa: E402
