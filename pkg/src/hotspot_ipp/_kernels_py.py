"""Pure-Python reference versions of the compiled kernels in ``_kernels.pyx``.

Both backends consume identical pre-drawn random indices, so they produce
bit-for-bit identical outputs.
"""
import math

import numpy as np

MAX_ATTEMPTS = 6  # first draw plus five resamples


def wrap_angle(a):
    """Map an angle to (-pi, pi]."""
    a = math.fmod(a + math.pi, 2.0 * math.pi)
    if a <= 0.0:
        a += 2.0 * math.pi
    return a - math.pi


def in_cell(x, y, generators, own):
    if own < 0:
        return True
    best = 0
    bx = generators[0, 0] - x
    by = generators[0, 1] - y
    best_d = bx * bx + by * by
    for k in range(1, generators.shape[0]):
        dx = generators[k, 0] - x
        dy = generators[k, 1] - y
        d = dx * dx + dy * dy
        if d < best_d:
            best_d = d
            best = k
    return best == own


def inside(x, y, bounds):
    eps = 1e-9
    return (bounds[0] - eps <= x <= bounds[1] + eps) and (bounds[2] - eps <= y <= bounds[3] + eps)


def rollout_path(x, y, heading, depth, step, offsets, bounds, generators, own, draws):
    """Random-policy walk of up to ``depth`` primitive steps.

    ``draws[s, a]`` is the primitive index tried on attempt ``a`` of step
    ``s``.  A step whose attempts all leave the region (or the cell
    ``own`` of ``generators``) ends the walk early.  Returns an (k, 2)
    array of visited positions, k <= depth.
    """
    out = np.empty((depth, 2))
    count = 0
    for s in range(depth):
        moved = False
        for a in range(MAX_ATTEMPTS):
            h = wrap_angle(heading + offsets[draws[s, a]])
            nx = x + step * math.cos(h)
            ny = y + step * math.sin(h)
            if inside(nx, ny, bounds) and in_cell(nx, ny, generators, own):
                x, y, heading = nx, ny, h
                out[count, 0] = x
                out[count, 1] = y
                count += 1
                moved = True
                break
        if not moved:
            break
    return out[:count]


def nearest_generator(points, generators):
    """Index of the nearest generator per point, lowest index on ties."""
    n = points.shape[0]
    out = np.empty(n, dtype=np.intp)
    for i in range(n):
        x, y = points[i, 0], points[i, 1]
        best = 0
        bx = generators[0, 0] - x
        by = generators[0, 1] - y
        best_d = bx * bx + by * by
        for k in range(1, generators.shape[0]):
            dx = generators[k, 0] - x
            dy = generators[k, 1] - y
            d = dx * dx + dy * dy
            if d < best_d:
                best_d = d
                best = k
        out[i] = best
    return out
