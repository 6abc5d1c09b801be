"""Labeled voxel task space: preprocessing, point lookup and grid files.

A :class:`VoxelGrid` stores one label per cubic cell. Labels live in a
``(nx, ny, nz)`` uint8 array indexed ``labels[ix, iy, iz]``; the file format
serializes them x-fastest. The kinematic base (the port) is the origin of the
coordinate frame the grid's ``origin`` is expressed in.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage

__all__ = [
    "VoxelLabel",
    "FREE",
    "OBSTACLE",
    "ROI",
    "OUT_OF_BOUNDS",
    "VoxelGrid",
    "GridFormatError",
    "Box",
    "SceneSpec",
    "point_to_voxel",
    "dilate_obstacles",
    "fill_unreachable_voids",
    "preprocess",
    "save_grid",
    "load_grid",
    "dumps_grid",
    "loads_grid",
    "gen_synthetic_scene",
    "default_scene_spec",
    "random_scene_spec",
]


class VoxelLabel(IntEnum):
    FREE = 0
    OBSTACLE = 1
    ROI = 2


FREE = int(VoxelLabel.FREE)
OBSTACLE = int(VoxelLabel.OBSTACLE)
ROI = int(VoxelLabel.ROI)

#: returned by :func:`point_to_voxel` for points outside the grid
OUT_OF_BOUNDS = None

_CHARS = {FREE: ".", OBSTACLE: "#", ROI: "R"}
_CODES = {c: k for k, c in _CHARS.items()}
_MAGIC = "VOXGRID 1"

_FACE6 = ndimage.generate_binary_structure(3, 1)
_CUBE26 = np.ones((3, 3, 3), dtype=bool)


class GridFormatError(ValueError):
    """Malformed grid file; ``lineno`` is 1-based."""

    def __init__(self, msg, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)


@dataclass(eq=False)
class VoxelGrid:
    """Axis-aligned labeled occupancy grid.

    Parameters
    ----------
    labels : ndarray of uint8, shape (nx, ny, nz)
        Per-cell :class:`VoxelLabel` codes.
    origin : array_like, shape (3,)
        Minimum corner of cell (0, 0, 0) in millimetres, port frame.
    edge : float
        Cube side in millimetres.
    port : tuple of int
        Index of the insertion voxel.
    """

    labels: np.ndarray
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))
    edge: float = 2.0
    port: tuple = (0, 0, 0)

    def __post_init__(self):
        self.labels = np.ascontiguousarray(self.labels, dtype=np.uint8)
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.edge = float(self.edge)
        self.port = tuple(int(i) for i in self.port)
        if self.labels.ndim != 3 or min(self.labels.shape) < 1:
            raise ValueError(f"labels must be a non-empty 3-d array, got shape {self.labels.shape}")
        if not self.edge > 0 or not math.isfinite(self.edge):
            raise ValueError(f"edge must be positive, got {self.edge}")
        if not np.all(np.isfinite(self.origin)):
            raise ValueError("origin must be finite")
        if self.labels.max(initial=0) > ROI:
            raise ValueError("unknown label code in labels")
        if len(self.port) != 3 or not self.in_bounds(self.port):
            raise ValueError(f"port voxel {self.port} outside dims {self.dims}")

    @property
    def dims(self):
        return tuple(int(n) for n in self.labels.shape)

    @property
    def size(self):
        return int(self.labels.size)

    def in_bounds(self, idx):
        return all(0 <= int(i) < n for i, n in zip(idx, self.labels.shape))

    def count(self, label):
        return int(np.count_nonzero(self.labels == int(label)))

    def roi_indices(self):
        """ROI voxel indices, shape (k, 3), in x-fastest order."""
        ix, iy, iz = np.nonzero(self.labels == ROI)
        idx = np.stack([ix, iy, iz], axis=1)
        order = np.lexsort((idx[:, 0], idx[:, 1], idx[:, 2]))
        return idx[order]

    def voxel_center(self, idx):
        return self.origin + (np.asarray(idx, dtype=np.float64) + 0.5) * self.edge

    @property
    def upper(self):
        """Maximum corner in millimetres."""
        return self.origin + np.asarray(self.dims) * self.edge

    def copy(self):
        return VoxelGrid(self.labels.copy(), self.origin.copy(), self.edge, self.port)

    def fingerprint(self):
        """SHA-256 of the canonical file serialization."""
        return hashlib.sha256(dumps_grid(self).encode("ascii")).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return (
            self.port == other.port
            and self.edge == other.edge
            and np.array_equal(self.origin, other.origin)
            and self.labels.shape == other.labels.shape
            and np.array_equal(self.labels, other.labels)
        )


def point_to_voxel(p, grid):
    """Index of the cell containing ``p`` (mm) or ``None`` when outside.

    Points on a shared face belong to the higher-index cell.
    """
    idx = np.floor((np.asarray(p, dtype=np.float64) - grid.origin) / grid.edge)
    if not np.all(np.isfinite(idx)):
        return OUT_OF_BOUNDS
    idx = tuple(int(i) for i in idx)
    return idx if grid.in_bounds(idx) else OUT_OF_BOUNDS


def points_to_voxels(points, grid):
    """Vectorized lookup; returns (indices (k, 3), inside mask (k,))."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    idx = np.floor((pts - grid.origin) / grid.edge)
    inside = np.all((idx >= 0) & (idx < np.asarray(grid.dims)), axis=1)
    idx = np.where(inside[:, None], idx, 0).astype(np.int64)
    return idx, inside


def dilate_obstacles(grid, radius):
    """Grow obstacles by ``ceil(radius / edge)`` 26-neighborhood steps.

    Only Free cells are converted; ROI cells and the port voxel are kept.
    """
    radius = float(radius)
    if radius < 0 or not math.isfinite(radius):
        raise ValueError(f"dilation radius must be >= 0, got {radius}")
    out = grid.copy()
    k = int(math.ceil(radius / grid.edge - 1e-12)) if radius > 0 else 0
    if k == 0:
        return out
    obstacle = out.labels == OBSTACLE
    if not obstacle.any():
        return out
    writable = out.labels == FREE
    writable[out.port] = False
    grown = ndimage.binary_dilation(obstacle, structure=_CUBE26, iterations=k, mask=writable | obstacle)
    out.labels[grown & writable] = OBSTACLE
    return out


def fill_unreachable_voids(grid):
    """Relabel Free cells not 6-connected to the port (through Free) as Obstacle."""
    if grid.labels[grid.port] != FREE:
        raise ValueError(f"port voxel {grid.port} is not Free")
    out = grid.copy()
    free = out.labels == FREE
    components, _ = ndimage.label(free, structure=_FACE6)
    keep = components == components[out.port]
    out.labels[free & ~keep] = OBSTACLE
    return out


def preprocess(grid, radius):
    """Dilation followed by void filling."""
    return fill_unreachable_voids(dilate_obstacles(grid, radius))


# -- grid files -------------------------------------------------------------


def _run_length(flat):
    runs = []
    n = len(flat)
    i = 0
    while i < n:
        j = i
        while j < n and flat[j] == flat[i]:
            j += 1
        runs.append((j - i, _CHARS[int(flat[i])]))
        i = j
    return runs


def dumps_grid(grid):
    nx, ny, nz = grid.dims
    lines = [
        _MAGIC,
        f"dims {nx} {ny} {nz}",
        "origin {} {} {}".format(*(repr(float(v)) for v in grid.origin)),
        f"edge {grid.edge!r}",
        "port {} {} {}".format(*grid.port),
    ]
    flat = grid.labels.ravel(order="F")
    for count, ch in _run_length(flat):
        lines.append(ch if count == 1 else f"{count}{ch}")
    return "\n".join(lines) + "\n"


def save_grid(grid, path):
    Path(path).write_text(dumps_grid(grid), encoding="ascii")


def _header(line, lineno, key, n, cast):
    parts = line.split()
    if len(parts) != n + 1 or parts[0] != key:
        raise GridFormatError(f"expected '{key}' followed by {n} value(s), got {line!r}", lineno)
    try:
        return [cast(v) for v in parts[1:]]
    except ValueError:
        raise GridFormatError(f"non-numeric value in {line!r}", lineno) from None


def loads_grid(text):
    lines = text.splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise GridFormatError(f"missing '{_MAGIC}' magic", 1)
    if len(lines) < 5:
        raise GridFormatError("truncated header", len(lines) + 1)
    dims = _header(lines[1], 2, "dims", 3, int)
    if min(dims) < 1:
        raise GridFormatError(f"dims must be positive, got {dims}", 2)
    origin = _header(lines[2], 3, "origin", 3, float)
    if not all(math.isfinite(v) for v in origin):
        raise GridFormatError("origin must be finite", 3)
    (edge,) = _header(lines[3], 4, "edge", 1, float)
    if not (edge > 0 and math.isfinite(edge)):
        raise GridFormatError(f"edge must be positive, got {edge}", 4)
    port = _header(lines[4], 5, "port", 3, int)
    if not all(0 <= p < n for p, n in zip(port, dims)):
        raise GridFormatError(f"port {port} outside dims {dims}", 5)

    total = dims[0] * dims[1] * dims[2]
    flat = np.empty(total, dtype=np.uint8)
    pos = 0
    for lineno, raw in enumerate(lines[5:], start=6):
        line = raw.strip()
        if not line:
            continue
        ch = line[-1]
        if ch not in _CODES:
            raise GridFormatError(f"unknown label code {ch!r}", lineno)
        count = 1
        if len(line) > 1:
            if not line[:-1].isdigit():
                raise GridFormatError(f"bad run-length entry {line!r}", lineno)
            count = int(line[:-1])
            if count < 1:
                raise GridFormatError(f"run length must be >= 1 in {line!r}", lineno)
        if pos + count > total:
            raise GridFormatError(f"label count exceeds dims product {total}", lineno)
        flat[pos:pos + count] = _CODES[ch]
        pos += count
    if pos != total:
        raise GridFormatError(f"label count mismatch: got {pos}, expected {total}", len(lines))
    labels = flat.reshape(dims, order="F")
    return VoxelGrid(labels, np.array(origin), edge, tuple(port))


def load_grid(path):
    return loads_grid(Path(path).read_text(encoding="ascii"))


# -- synthetic scenes -------------------------------------------------------


@dataclass(frozen=True)
class Box:
    """Half-open index box ``[lo, hi)`` painted with ``label``."""

    lo: tuple
    hi: tuple
    label: int = OBSTACLE


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for a synthetic task space.

    ``boxes`` are painted in order over an all-Free grid (later boxes win).
    ``clutter`` random obstacle boxes with sides in ``clutter_size`` are then
    drawn from the seed; they never overwrite ROI. The port goes at the
    bottom-center cell unless ``port`` is given and is always left Free.
    """

    dims: tuple = (20, 20, 20)
    boxes: tuple = ()
    edge: float = 2.0
    port: Optional[tuple] = None
    clutter: int = 0
    clutter_size: tuple = (1, 4)
    name: str = "custom"

    def port_voxel(self):
        if self.port is not None:
            return tuple(int(i) for i in self.port)
        return (self.dims[0] // 2, self.dims[1] // 2, 0)


def default_scene_spec():
    """The "cavity-wall-shelf" scene: 20x20x20 cells of 2 mm.

    A Free cavity with the port at the bottom-center. A wall above the port
    leaves a single gap on the +y side, and a slab of tissue further up
    exposes a shelf of ROI on its underside, reaching back over the wall.
    A straight tool only grazes the far end of the shelf through the gap;
    reaching the part above the wall takes a bend after the gap, and
    facing it from many directions takes a second one.
    """
    boxes = (
        # wall with a gap at y >= 11
        Box((0, 0, 6), (20, 11, 8), OBSTACLE),
        # tissue slab
        Box((0, 0, 14), (20, 17, 18), OBSTACLE),
        # ROI: exposed underside of the slab
        Box((7, 5, 13), (11, 17, 14), ROI),
    )
    return SceneSpec(dims=(20, 20, 20), boxes=boxes, edge=2.0, name="cavity-wall-shelf")


def random_scene_spec(seed, dims=(12, 12, 12), clutter=25):
    """Cluttered random scene used by property tests."""
    rng = np.random.default_rng(seed)
    nx, ny, nz = dims
    lo = (int(rng.integers(0, nx - 2)), int(rng.integers(0, ny - 2)), int(rng.integers(nz // 2, nz - 1)))
    hi = tuple(min(l + int(rng.integers(1, 4)), n) for l, n in zip(lo, dims))
    return SceneSpec(dims=tuple(dims), boxes=(Box(lo, hi, ROI),), clutter=clutter, name=f"random-{seed}")


def _clip_box(box, dims):
    lo = [max(0, min(int(l), n)) for l, n in zip(box.lo, dims)]
    hi = [max(0, min(int(h), n)) for h, n in zip(box.hi, dims)]
    return tuple(slice(l, h) for l, h in zip(lo, hi))


def gen_synthetic_scene(spec, seed=0):
    """Build a :class:`VoxelGrid` from ``spec``; deterministic in ``seed``."""
    dims = tuple(int(n) for n in spec.dims)
    if len(dims) != 3 or min(dims) < 1:
        raise ValueError(f"scene dims must be 3 positive integers, got {spec.dims}")
    labels = np.zeros(dims, dtype=np.uint8)
    for box in spec.boxes:
        if int(box.label) not in _CHARS:
            raise ValueError(f"unknown label {box.label!r} in scene box")
        labels[_clip_box(box, dims)] = int(box.label)

    rng = np.random.default_rng(seed)
    smin, smax = spec.clutter_size
    for _ in range(int(spec.clutter)):
        size = rng.integers(smin, smax + 1, size=3)
        lo = [int(rng.integers(0, max(n - s, 0) + 1)) for n, s in zip(dims, size)]
        sl = tuple(slice(l, l + int(s)) for l, s in zip(lo, size))
        region = labels[sl]
        region[region != ROI] = OBSTACLE

    port = spec.port_voxel()
    if not all(0 <= p < n for p, n in zip(port, dims)):
        raise ValueError(f"port {port} outside scene dims {dims}")
    labels[port] = FREE
    if not np.any(labels == ROI):
        raise ValueError("scene has an empty region of interest after clipping")
    edge = float(spec.edge)
    # port cell center sits at the frame origin
    origin = -(np.asarray(port, dtype=np.float64) + 0.5) * edge
    return VoxelGrid(labels, origin, edge, port)
