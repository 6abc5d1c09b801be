"""Compiled inner loop of the Monte-Carlo dexterity sampler.

Kept free of Python objects so chunks can run on threads with the GIL
released. The FK here is an unrolled version of
:func:`snakedex.kinematics.forward_kinematics` and is tested against it.
"""
import math

import numpy as np
from numba import njit

from .rng import uniform_at

OBSTACLE = 1


@njit(cache=True, nogil=True)
def _post_rot(R, axis, c, s):
    # R <- R @ Rot_axis, for axis 0=x, 1=y, 2=z
    if axis == 0:
        a, b = 1, 2
        for r in range(3):
            u = R[r, a]
            v = R[r, b]
            R[r, a] = u * c + v * s
            R[r, b] = -u * s + v * c
    elif axis == 1:
        for r in range(3):
            u = R[r, 0]
            v = R[r, 2]
            R[r, 0] = u * c - v * s
            R[r, 2] = u * s + v * c
    else:
        for r in range(3):
            u = R[r, 0]
            v = R[r, 1]
            R[r, 0] = u * c + v * s
            R[r, 1] = -u * s + v * c


@njit(cache=True, nogil=True)
def chain(q, seg_n, seg_d, seg_pan_j, seg_tilt_j, zeta, shaft, tool, R, pts):
    """Fill ``R`` with the tip rotation and ``pts`` with frame origins.

    Returns the number of origins written (base, shaft end, one per disk, tip).
    """
    for r in range(3):
        for c in range(3):
            R[r, c] = 1.0 if r == c else 0.0
    _post_rot(R, 0, math.cos(q[0]), math.sin(q[0]))
    _post_rot(R, 1, math.cos(q[1]), math.sin(q[1]))
    px = 0.0
    py = 0.0
    pz = 0.0
    pts[0, 0] = px
    pts[0, 1] = py
    pts[0, 2] = pz
    L = q[2] + shaft
    px += L * R[0, 2]
    py += L * R[1, 2]
    pz += L * R[2, 2]
    pts[1, 0] = px
    pts[1, 1] = py
    pts[1, 2] = pz
    k = 2
    cz = math.cos(zeta)
    sz = math.sin(zeta)
    for s in range(seg_n.shape[0]):
        if s > 0:
            _post_rot(R, 2, cz, sz)
        n = seg_n[s]
        d = seg_d[s]
        n_pan = (n + 1) // 2
        n_tilt = n // 2
        hp = 0.5 * q[seg_pan_j[s]] / n_pan
        cp = math.cos(hp)
        sp = math.sin(hp)
        ct = 1.0
        st = 0.0
        if n_tilt > 0:
            ht = 0.5 * q[seg_tilt_j[s]] / n_tilt
            ct = math.cos(ht)
            st = math.sin(ht)
        for disk in range(n):
            if disk % 2 == 0:
                _post_rot(R, 0, cp, sp)
                px += d * R[0, 2]
                py += d * R[1, 2]
                pz += d * R[2, 2]
                _post_rot(R, 0, cp, sp)
            else:
                _post_rot(R, 1, ct, st)
                px += d * R[0, 2]
                py += d * R[1, 2]
                pz += d * R[2, 2]
                _post_rot(R, 1, ct, st)
            pts[k, 0] = px
            pts[k, 1] = py
            pts[k, 2] = pz
            k += 1
    px += tool * R[0, 2]
    py += tool * R[1, 2]
    pz += tool * R[2, 2]
    pts[k, 0] = px
    pts[k, 1] = py
    pts[k, 2] = pz
    return k + 1


@njit(cache=True, nogil=True)
def _label_at(x, y, z, labels, origin, edge):
    # -1 when out of bounds
    fx = math.floor((x - origin[0]) / edge)
    fy = math.floor((y - origin[1]) / edge)
    fz = math.floor((z - origin[2]) / edge)
    if fx < 0 or fy < 0 or fz < 0:
        return -1, 0, 0, 0
    ix = int(fx)
    iy = int(fy)
    iz = int(fz)
    if ix >= labels.shape[0] or iy >= labels.shape[1] or iz >= labels.shape[2]:
        return -1, 0, 0, 0
    return np.int64(labels[ix, iy, iz]), ix, iy, iz


@njit(cache=True, nogil=True)
def polyline_clear(pts, npts, labels, origin, edge, spacing):
    """True iff every densified polyline point is in bounds and not Obstacle."""
    lab, _, _, _ = _label_at(pts[0, 0], pts[0, 1], pts[0, 2], labels, origin, edge)
    if lab < 0 or lab == OBSTACLE:
        return False
    for i in range(npts - 1):
        ax = pts[i, 0]
        ay = pts[i, 1]
        az = pts[i, 2]
        dx = pts[i + 1, 0] - ax
        dy = pts[i + 1, 1] - ay
        dz = pts[i + 1, 2] - az
        length = math.sqrt(dx * dx + dy * dy + dz * dz)
        m = max(1, int(math.ceil(length / spacing - 1e-12)))
        for k in range(1, m + 1):
            t = k / m
            lab, _, _, _ = _label_at(ax + dx * t, ay + dy * t, az + dz * t, labels, origin, edge)
            if lab < 0 or lab == OBSTACLE:
                return False
    return True


@njit(cache=True, nogil=True)
def patch_of(x, y, z, n_theta, n_h):
    t = int(math.floor((math.atan2(y, x) + math.pi) * n_theta / (2.0 * math.pi))) % n_theta
    h = int(math.floor((z + 1.0) * n_h / 2.0))
    if h > n_h - 1:
        h = n_h - 1
    if h < 0:
        h = 0
    return t, h


@njit(cache=True, nogil=True)
def sample_chunk(key, start, stop, lower, upper, seg_n, seg_d, seg_pan_j, seg_tilt_j,
                 zeta, shaft, tool, labels, roi_id, origin, edge, n_theta, n_h,
                 spheres, collect, cand):
    """Run samples ``start .. stop-1``.

    With ``collect`` false, accepted samples mark ``spheres[roi, t * n_h + h]``.
    With ``collect`` true, samples passing the tip and collision tests are
    written to ``cand`` rows as (sample, roi, t, h) and nothing is marked.
    Returns (tip-in-ROI count, accepted-or-candidate count).
    """
    ndof = lower.shape[0]
    q = np.empty(ndof)
    R = np.empty((3, 3))
    total_disks = 0
    for s in range(seg_n.shape[0]):
        total_disks += seg_n[s]
    pts = np.empty((total_disks + 3, 3))
    spacing = 0.5 * edge
    n_tip = 0
    n_ok = 0
    for i in range(start, stop):
        base = np.uint64(i) * np.uint64(ndof)
        for j in range(ndof):
            q[j] = lower[j] + (upper[j] - lower[j]) * uniform_at(key, base + np.uint64(j))
        npts = chain(q, seg_n, seg_d, seg_pan_j, seg_tilt_j, zeta, shaft, tool, R, pts)
        tx = pts[npts - 1, 0]
        ty = pts[npts - 1, 1]
        tz = pts[npts - 1, 2]
        lab, ix, iy, iz = _label_at(tx, ty, tz, labels, origin, edge)
        if lab < 0:
            continue
        r = roi_id[ix, iy, iz]
        if r < 0:
            continue
        n_tip += 1
        if not polyline_clear(pts, npts, labels, origin, edge, spacing):
            continue
        t, h = patch_of(R[0, 2], R[1, 2], R[2, 2], n_theta, n_h)
        if collect:
            cand[n_ok, 0] = i
            cand[n_ok, 1] = r
            cand[n_ok, 2] = t
            cand[n_ok, 3] = h
        else:
            spheres[r, t * n_h + h] = True
        n_ok += 1
    return n_tip, n_ok
