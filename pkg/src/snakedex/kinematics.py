"""Variable neutral-line snake: design parameters, joint limits and FK.

Joint vector layout (``JointLimits.names`` gives the labels)::

    [base_pan, base_tilt, insertion, seg1_pan, (seg1_tilt), seg2_pan, ...]

A segment with ``n`` disks alternates pan (x) and tilt (y) rolling joints
starting with pan, so it has ``ceil(n/2)`` pan and ``floor(n/2)`` tilt disks.
A one-disk segment therefore only bends in pan and has a single DOF.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .rng import stream_key, uniform

__all__ = [
    "SegmentSpec",
    "DesignParams",
    "JointLimits",
    "RigidTransform",
    "rot_x",
    "rot_y",
    "rot_z",
    "rolling_joint_transform",
    "joint_limits",
    "sample_config",
    "sample_configs",
    "forward_kinematics",
    "skeleton_length",
]

WIDTH_MM = 4.0
TOOL_LENGTH_MM = 5.0
PIVOT_LIMIT = math.pi / 3
SEGMENT_BEND_CAP = math.pi


@dataclass(frozen=True)
class SegmentSpec:
    alpha: float  # half the rolling angle of one disk, rad
    d: float  # disk joint height, mm
    n: int  # number of disks

    def __post_init__(self):
        if not (0 < self.alpha <= math.pi / 2):
            raise ValueError(f"alpha must be in (0, pi/2], got {self.alpha}")
        if not (self.d > 0 and math.isfinite(self.d)):
            raise ValueError(f"d must be positive, got {self.d}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def n_pan(self):
        return (self.n + 1) // 2

    @property
    def n_tilt(self):
        return self.n // 2

    @property
    def dof(self):
        return 2 if self.n >= 2 else 1


@dataclass(frozen=True)
class DesignParams:
    """Snake design. Zero segments is the rigid tool."""

    segments: tuple = ()
    w: float = WIDTH_MM
    tool_length: float = TOOL_LENGTH_MM
    shaft_clearance: float = 0.0
    pivot_limit: float = PIVOT_LIMIT

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))
        for s in self.segments:
            if not isinstance(s, SegmentSpec):
                raise TypeError("segments must be SegmentSpec instances")
        if self.w <= 0 or self.tool_length < 0 or self.shaft_clearance < 0:
            raise ValueError("w must be > 0; tool_length and shaft_clearance must be >= 0")
        if not (0 <= self.pivot_limit <= math.pi / 2):
            raise ValueError(f"pivot_limit must be in [0, pi/2], got {self.pivot_limit}")

    @property
    def n_segments(self):
        return len(self.segments)

    @property
    def n_params(self):
        return 3 * len(self.segments)

    @property
    def n_dof(self):
        return 3 + sum(s.dof for s in self.segments)

    @property
    def transition_angle(self):
        """Twist applied between consecutive segments."""
        return -math.pi / len(self.segments) if self.segments else 0.0

    def genome(self):
        out = []
        for s in self.segments:
            out.extend((s.alpha, s.d, float(s.n)))
        return np.array(out, dtype=np.float64)


@dataclass(frozen=True)
class JointLimits:
    names: tuple
    lower: np.ndarray
    upper: np.ndarray

    @property
    def n_dof(self):
        return len(self.names)

    def contains(self, q, tol=1e-12):
        q = np.asarray(q, dtype=np.float64)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))


@dataclass(frozen=True)
class RigidTransform:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __matmul__(self, other):
        return RigidTransform(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    @property
    def matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    @property
    def z_axis(self):
        return self.rotation[:, 2].copy()

    @classmethod
    def rot(cls, r):
        return cls(np.asarray(r, dtype=np.float64), np.zeros(3))

    @classmethod
    def trans_z(cls, dz):
        return cls(np.eye(3), np.array([0.0, 0.0, float(dz)]))


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


_AXES = {"pan": rot_x, "tilt": rot_y}


def rolling_joint_transform(axis, theta, d):
    """Rolling contact disk: half rotation, translate ``d`` along z, half rotation."""
    half = RigidTransform.rot(_AXES[axis](theta / 2.0))
    return half @ RigidTransform.trans_z(d) @ half


def joint_limits(p, insertion_max):
    """Per-DOF bounds for design ``p``.

    ``insertion_max`` is the depth available along the port axis in mm.
    """
    names = ["base_pan", "base_tilt", "insertion"]
    lo = [-p.pivot_limit, -p.pivot_limit, 0.0]
    hi = [p.pivot_limit, p.pivot_limit, float(insertion_max)]
    for k, s in enumerate(p.segments, start=1):
        pan = min(2.0 * s.alpha * s.n_pan, SEGMENT_BEND_CAP)
        names.append(f"seg{k}_pan")
        lo.append(-pan)
        hi.append(pan)
        if s.n_tilt:
            tilt = min(2.0 * s.alpha * s.n_tilt, SEGMENT_BEND_CAP)
            names.append(f"seg{k}_tilt")
            lo.append(-tilt)
            hi.append(tilt)
    return JointLimits(tuple(names), np.array(lo), np.array(hi))


def sample_configs(limits, seed, start, count):
    """Configurations ``start .. start+count-1`` of the stream for ``seed``.

    Draw ``j`` of sample ``i`` uses counter ``i * n_dof + j``, so any slice of
    the stream can be generated independently.
    """
    ndof = limits.n_dof
    idx = np.arange(int(start), int(start) + int(count), dtype=np.uint64)
    counters = idx[:, None] * np.uint64(ndof) + np.arange(ndof, dtype=np.uint64)[None, :]
    u = uniform(stream_key(seed), counters)
    return limits.lower + (limits.upper - limits.lower) * u


def sample_config(limits, seed, index):
    """Single configuration ``index`` of the stream for ``seed``."""
    return sample_configs(limits, seed, index, 1)[0]


def _segment_angles(q, p):
    """Per-segment (pan_total, tilt_total) from a joint vector."""
    out = []
    j = 3
    for s in p.segments:
        pan = q[j]
        j += 1
        tilt = 0.0
        if s.n_tilt:
            tilt = q[j]
            j += 1
        out.append((pan, tilt))
    return out


def _densify(points, spacing):
    dense = [points[0]]
    for a, b in zip(points[:-1], points[1:]):
        length = float(np.linalg.norm(b - a))
        m = max(1, int(math.ceil(length / spacing - 1e-12)))
        for k in range(1, m + 1):
            dense.append(a + (b - a) * (k / m))
    return np.array(dense)


def forward_kinematics(q, p, grid_edge=2.0, limits=None):
    """Tool-tip pose and centre-line skeleton for configuration ``q``.

    The chain is composed transform by transform, which makes this the slow
    reference path; the sampling kernel in :mod:`snakedex._kernels` is
    checked against it.

    Returns
    -------
    tip : RigidTransform
        Port frame to tool tip.
    skeleton : ndarray, shape (k, 3)
        Port-to-tip centre-line points, spaced at most ``grid_edge / 2``.
    """
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (p.n_dof,):
        raise ValueError(f"expected {p.n_dof} joint values, got shape {q.shape}")
    if limits is None:
        limits = joint_limits(p, math.inf)
    if not limits.contains(q):
        raise ValueError("configuration outside joint limits")

    T = RigidTransform.rot(rot_x(q[0]) @ rot_y(q[1]))
    origins = [T.translation]
    T = T @ RigidTransform.trans_z(q[2] + p.shaft_clearance)
    origins.append(T.translation)
    zeta = p.transition_angle
    for k, (s, (pan, tilt)) in enumerate(zip(p.segments, _segment_angles(q, p))):
        if k > 0:
            T = T @ RigidTransform.rot(rot_z(zeta))
        for disk in range(s.n):
            if disk % 2 == 0:
                T = T @ rolling_joint_transform("pan", pan / s.n_pan, s.d)
            else:
                T = T @ rolling_joint_transform("tilt", tilt / s.n_tilt, s.d)
            origins.append(T.translation)
    T = T @ RigidTransform.trans_z(p.tool_length)
    origins.append(T.translation)
    skeleton = _densify([np.asarray(o, dtype=np.float64) for o in origins], grid_edge / 2.0)
    return T, skeleton


def skeleton_length(skeleton):
    return float(np.sum(np.linalg.norm(np.diff(skeleton, axis=0), axis=1)))
