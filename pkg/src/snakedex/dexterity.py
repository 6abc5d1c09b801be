"""Service-sphere dexterity of a design over the region of interest.

Each ROI voxel owns a boolean ``n_theta x n_h`` patch matrix on the unit
sphere (equal longitude steps, equal height steps, hence equal areas).
Random configurations whose tool tip lands in an ROI voxel without the
centre-line touching an obstacle mark the patch hit by the tool axis.
A voxel's dexterity is its covered fraction; the fitness is minus the mean
over the ROI.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels
from .kinematics import DesignParams, forward_kinematics, joint_limits, sample_config
from .rng import stream_key
from .voxels import OBSTACLE, ROI, VoxelGrid, points_to_voxels

__all__ = [
    "EvalSettings",
    "DexterityField",
    "FitnessReport",
    "nearest_patch",
    "nearest_patches",
    "patch_bounds",
    "aggregate_dexterity",
    "reachable_path_plan",
    "home_config",
    "insertion_depth",
    "evaluate_fitness",
]

_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class EvalSettings:
    sample_size: int = 100_000
    n_theta: int = 18
    n_h: int = 9
    seed: int = 1
    dilation_radius: float = 2.0

    def __post_init__(self):
        if int(self.sample_size) < 1:
            raise ValueError(f"sample_size must be >= 1, got {self.sample_size}")
        if int(self.n_theta) < 1 or int(self.n_h) < 1:
            raise ValueError("n_theta and n_h must be >= 1")
        if self.dilation_radius < 0:
            raise ValueError("dilation_radius must be >= 0")

    @property
    def n_patches(self):
        return int(self.n_theta) * int(self.n_h)


def nearest_patch(pz, n_theta=18, n_h=9):
    """(theta index, height index) of the patch containing unit vector ``pz``."""
    x, y, z = (float(v) for v in pz)
    norm = math.sqrt(x * x + y * y + z * z)
    if abs(norm - 1.0) > _UNIT_TOL:
        raise ValueError(f"expected a unit vector, got norm {norm}")
    return _kernels.patch_of(x, y, z, int(n_theta), int(n_h))


def nearest_patches(v, n_theta=18, n_h=9):
    """Vectorized :func:`nearest_patch` for an ``(k, 3)`` array."""
    v = np.atleast_2d(np.asarray(v, dtype=np.float64))
    norm = np.linalg.norm(v, axis=1)
    if np.any(np.abs(norm - 1.0) > _UNIT_TOL):
        raise ValueError("expected unit vectors")
    t = np.floor((np.arctan2(v[:, 1], v[:, 0]) + np.pi) * n_theta / (2 * np.pi)).astype(np.int64) % n_theta
    h = np.clip(np.floor((v[:, 2] + 1.0) * n_h / 2.0).astype(np.int64), 0, n_h - 1)
    return t, h


def patch_bounds(t, h, n_theta=18, n_h=9):
    """Longitude range (rad, within [-pi, pi]) and height range of a patch."""
    dth = 2 * math.pi / n_theta
    dh = 2.0 / n_h
    return (-math.pi + t * dth, -math.pi + (t + 1) * dth), (-1.0 + h * dh, -1.0 + (h + 1) * dh)


@dataclass
class DexterityField:
    """Per-ROI-voxel dexterity; ``indices`` rows are voxel indices."""

    indices: np.ndarray
    values: np.ndarray

    def as_dict(self):
        return {tuple(int(i) for i in idx): float(v) for idx, v in zip(self.indices, self.values)}

    def to_csv(self, path, grid):
        centers = (grid.origin + (self.indices + 0.5) * grid.edge).tolist()
        with open(path, "w", encoding="ascii") as fh:
            fh.write("ix,iy,iz,cx_mm,cy_mm,cz_mm,dex\n")
            for idx, c, v in zip(self.indices, centers, self.values):
                fh.write("%d,%d,%d,%r,%r,%r,%r\n" % (idx[0], idx[1], idx[2], c[0], c[1], c[2], float(v)))

    def to_ply(self, path, grid):
        centers = (grid.origin + (self.indices + 0.5) * grid.edge).tolist()
        with open(path, "w", encoding="ascii") as fh:
            fh.write("ply\nformat ascii 1.0\n")
            fh.write(f"element vertex {len(self.values)}\n")
            fh.write("property float x\nproperty float y\nproperty float z\nproperty float dex\n")
            fh.write("end_header\n")
            for c, v in zip(centers, self.values):
                fh.write(f"{c[0]!r} {c[1]!r} {c[2]!r} {float(v)!r}\n")


@dataclass
class FitnessReport:
    fitness: float
    mean_dexterity: float
    max_dexterity: float
    field: DexterityField
    samples_accepted: int
    samples_tip_in_roi: int
    samples_total: int
    n_theta: int
    n_h: int
    seed: int
    patches_covered: np.ndarray = None  # per-voxel N_O
    wall_time: float = 0.0

    def to_dict(self):
        # wall_time excluded: reports must be byte-identical across reruns
        return {
            "fitness": self.fitness,
            "mean_dexterity": self.mean_dexterity,
            "max_dexterity": self.max_dexterity,
            "samples_total": self.samples_total,
            "samples_tip_in_roi": self.samples_tip_in_roi,
            "samples_accepted": self.samples_accepted,
            "n_theta": self.n_theta,
            "n_h": self.n_h,
            "seed": self.seed,
            "field": [
                [int(i[0]), int(i[1]), int(i[2]), int(n), float(v)]
                for i, n, v in zip(self.field.indices, self.patches_covered, self.field.values)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        rows = d["field"]
        idx = np.array([r[:3] for r in rows], dtype=np.int64).reshape(-1, 3)
        covered = np.array([r[3] for r in rows], dtype=np.int64)
        vals = np.array([r[4] for r in rows], dtype=np.float64)
        return cls(
            fitness=d["fitness"],
            mean_dexterity=d["mean_dexterity"],
            max_dexterity=d["max_dexterity"],
            field=DexterityField(idx, vals),
            samples_accepted=d["samples_accepted"],
            samples_tip_in_roi=d["samples_tip_in_roi"],
            samples_total=d["samples_total"],
            n_theta=d["n_theta"],
            n_h=d["n_h"],
            seed=d["seed"],
            patches_covered=covered,
        )


def aggregate_dexterity(spheres, n_theta=None, n_h=None):
    """Mean, max and per-voxel dexterity from stacked service spheres.

    ``spheres`` is a boolean array ``(n_roi, n_theta, n_h)`` (or flattened
    patches on the last axis, in which case ``n_theta`` and ``n_h`` are
    required).
    """
    s = np.asarray(spheres, dtype=bool)
    if s.ndim == 3:
        n_theta, n_h = s.shape[1], s.shape[2]
        s = s.reshape(s.shape[0], -1)
    elif n_theta is None or n_h is None or s.shape[-1] != n_theta * n_h:
        raise ValueError("flattened spheres need matching n_theta and n_h")
    if s.shape[0] == 0:
        raise ValueError("empty region of interest")
    covered = s.sum(axis=1)
    total = n_theta * n_h
    per_voxel = covered / total
    mean = float(covered.sum()) / (s.shape[0] * total)
    return mean, float(per_voxel.max()), per_voxel


def reachable_path_plan(q0, qi, skeleton, grid):
    """Tubular path-plan policy: the final centre-line shape must be clear.

    For tube-like snakes the insertion path sweeps roughly the same cells as
    the final shape, so ``q0`` is not consulted. Replace this callable to
    plug in a real planner.
    """
    idx, inside = points_to_voxels(skeleton, grid)
    if not inside.all():
        return False
    return not np.any(grid.labels[idx[:, 0], idx[:, 1], idx[:, 2]] == OBSTACLE)


def insertion_depth(grid):
    """Room along the port (+z) axis from the port to the top of the grid."""
    return float(max(grid.upper[2], 0.0))


def home_config(limits):
    return np.clip(np.zeros(limits.n_dof), limits.lower, limits.upper)


def _kernel_design_args(p, limits):
    names = list(limits.names)
    seg_n = np.array([s.n for s in p.segments], dtype=np.int64)
    seg_d = np.array([s.d for s in p.segments], dtype=np.float64)
    pan_j = np.array([names.index(f"seg{k}_pan") for k in range(1, p.n_segments + 1)], dtype=np.int64)
    tilt_j = np.array(
        [names.index(f"seg{k}_tilt") if f"seg{k}_tilt" in names else -1 for k in range(1, p.n_segments + 1)],
        dtype=np.int64,
    )
    return seg_n, seg_d, pan_j, tilt_j, float(p.transition_angle), float(p.shaft_clearance), float(p.tool_length)


def _chunks(start, stop, k):
    edges = np.linspace(start, stop, max(1, k) + 1).round().astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def evaluate_fitness(p, grid, settings, workers=1, planner: Optional[Callable] = None):
    """Monte-Carlo dexterity of design ``p`` in a preprocessed ``grid``.

    Sample ``i`` is a pure function of ``(settings.seed, i)``; each worker
    fills private service spheres over a contiguous block of samples and the
    blocks are merged by union, so the report does not depend on
    ``workers``.

    ``planner(q0, qi, skeleton, grid) -> bool`` replaces the built-in
    tubular check; it is only consulted for samples that already pass the
    tip and collision tests.
    """
    t0 = time.perf_counter()
    roi_idx = grid.roi_indices()
    n_roi = len(roi_idx)
    if n_roi == 0:
        raise ValueError("grid has no region-of-interest voxels")
    roi_id = np.full(grid.dims, -1, dtype=np.int64)
    roi_id[roi_idx[:, 0], roi_idx[:, 1], roi_idx[:, 2]] = np.arange(n_roi)

    limits = joint_limits(p, insertion_depth(grid))
    design = _kernel_design_args(p, limits)
    n_theta, n_h = int(settings.n_theta), int(settings.n_h)
    key = np.uint64(stream_key(settings.seed))
    N = int(settings.sample_size)
    collect = planner is not None

    def run(block):
        a, b = block
        spheres = np.zeros((n_roi, n_theta * n_h), dtype=np.bool_)
        cand = np.zeros((b - a if collect else 1, 4), dtype=np.int64)
        n_tip, n_ok = _kernels.sample_chunk(
            key, a, b, limits.lower, limits.upper, *design,
            grid.labels, roi_id, grid.origin, grid.edge, n_theta, n_h,
            spheres, collect, cand,
        )
        return spheres, n_tip, n_ok, cand[:n_ok] if collect else None

    blocks = _chunks(0, N, workers)
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]

    spheres = np.zeros((n_roi, n_theta * n_h), dtype=np.bool_)
    n_tip = 0
    n_ok = 0
    for sph, tip, ok, cand in parts:
        n_tip += tip
        if collect:
            q0 = home_config(limits)
            for i, r, t, h in cand:
                qi = sample_config(limits, settings.seed, i)
                _, skel = forward_kinematics(qi, p, grid.edge, limits)
                if planner(q0, qi, skel, grid):
                    spheres[r, t * n_h + h] = True
                    n_ok += 1
        else:
            spheres |= sph
            n_ok += ok

    mean, mx, per_voxel = aggregate_dexterity(spheres, n_theta, n_h)
    return FitnessReport(
        fitness=-mean if mean > 0 else 0.0,
        mean_dexterity=mean,
        max_dexterity=mx,
        field=DexterityField(roi_idx, per_voxel),
        samples_accepted=int(n_ok),
        samples_tip_in_roi=int(n_tip),
        samples_total=N,
        n_theta=n_theta,
        n_h=n_h,
        seed=int(settings.seed),
        patches_covered=spheres.sum(axis=1).astype(np.int64),
        wall_time=time.perf_counter() - t0,
    )
