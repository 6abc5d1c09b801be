"""
Building a task space
=====================

A task space is a voxel grid of Free, Obstacle and ROI cells. The snake
enters through a port at the bottom; before any sampling the obstacles are
grown by the robot radius and Free pockets the robot cannot reach are sealed.
"""

import tempfile
from pathlib import Path

import numpy as np

from snakedex.voxels import (
    FREE, OBSTACLE, ROI, default_scene_spec, dilate_obstacles, fill_unreachable_voids,
    gen_synthetic_scene, load_grid, save_grid,
)

# %%
# The shipped scene: a wall with a gap, and an ROI shelf beyond it.
grid = gen_synthetic_scene(default_scene_spec())
print("dims", grid.dims, "edge", grid.edge, "mm, port voxel", grid.port)
for name, lab in (("free", FREE), ("obstacle", OBSTACLE), ("roi", ROI)):
    print(f"{name:>9}: {grid.count(lab)}")

# The port voxel center is the kinematic origin.
print("port center", grid.voxel_center(grid.port))

# %%
# Dilation by 2 mm is one 26-neighbour step at this resolution.
dilated = dilate_obstacles(grid, 2.0)
print("obstacle cells after dilation", dilated.count(OBSTACLE))

# A Free pocket inside the slab is not reachable from the port, so it is sealed.
pocket = grid.copy()
pocket.labels[9, 4, 15] = FREE
sealed = fill_unreachable_voids(dilate_obstacles(pocket, 2.0))
print("pocket sealed:", sealed.labels[9, 4, 15] == OBSTACLE)

# %%
# Grids round-trip through the run-length "VOXGRID 1" text format.
path = Path(tempfile.mkdtemp()) / "scene.vox"
save_grid(grid, path)
print(path.read_text().splitlines()[:6])
print("round trip equal:", load_grid(path) == grid)

# A z-slice through the ROI shelf, y running down the page.
z = 13
chars = np.array([".", "#", "R"])
print("\n".join("".join(row) for row in chars[grid.labels[:, :, z].T]))
