# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: MCTS random rollouts and nearest-generator assignment.

Must stay numerically identical to ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, fmod, M_PI

cnp.import_array()

DEF MAX_ATTEMPTS = 6


cdef inline double wrap_angle(double a) nogil:
    a = fmod(a + M_PI, 2.0 * M_PI)
    if a <= 0.0:
        a += 2.0 * M_PI
    return a - M_PI


cdef inline bint in_cell(double x, double y, const double[:, ::1] gen, Py_ssize_t own) nogil:
    cdef Py_ssize_t k, best = 0
    cdef double dx, dy, d, best_d
    if own < 0:
        return True
    dx = gen[0, 0] - x
    dy = gen[0, 1] - y
    best_d = dx * dx + dy * dy
    for k in range(1, gen.shape[0]):
        dx = gen[k, 0] - x
        dy = gen[k, 1] - y
        d = dx * dx + dy * dy
        if d < best_d:
            best_d = d
            best = k
    return best == own


cdef inline bint inside(double x, double y, const double[::1] b) nogil:
    cdef double eps = 1e-9
    return (b[0] - eps <= x <= b[1] + eps) and (b[2] - eps <= y <= b[3] + eps)


def rollout_path(double x, double y, double heading, Py_ssize_t depth, double step,
                 const double[::1] offsets, const double[::1] bounds,
                 const double[:, ::1] generators, Py_ssize_t own,
                 const cnp.int64_t[:, ::1] draws):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] arr = np.empty((depth, 2))
    cdef double[:, ::1] out = arr
    cdef Py_ssize_t s, a, count = 0
    cdef double h, nx, ny
    cdef bint moved
    with nogil:
        for s in range(depth):
            moved = False
            for a in range(MAX_ATTEMPTS):
                h = wrap_angle(heading + offsets[draws[s, a]])
                nx = x + step * cos(h)
                ny = y + step * sin(h)
                if inside(nx, ny, bounds) and in_cell(nx, ny, generators, own):
                    x = nx
                    y = ny
                    heading = h
                    out[count, 0] = x
                    out[count, 1] = y
                    count += 1
                    moved = True
                    break
            if not moved:
                break
    return arr[:count]


def nearest_generator(const double[:, ::1] points, const double[:, ::1] generators):
    cdef Py_ssize_t n = points.shape[0], i, k, best
    cdef cnp.ndarray[cnp.intp_t, ndim=1] arr = np.empty(n, dtype=np.intp)
    cdef cnp.intp_t[::1] out = arr
    cdef double x, y, dx, dy, d, best_d
    with nogil:
        for i in range(n):
            x = points[i, 0]
            y = points[i, 1]
            best = 0
            dx = generators[0, 0] - x
            dy = generators[0, 1] - y
            best_d = dx * dx + dy * dy
            for k in range(1, generators.shape[0]):
                dx = generators[k, 0] - x
                dy = generators[k, 1] - y
                d = dx * dx + dy * dy
                if d < best_d:
                    best_d = d
                    best = k
            out[i] = best
    return arr
