"""Spatial operators over quasi-discrete closure spaces.

Closure (``near``), may-reach, surrounded, Euclidean distance and the derived
``touch``/``grow``/``flt`` forms. Paths use the same adjacency as ``near``.
"""

from functools import lru_cache

import numba
import numpy as np
from scipy import ndimage

from .grid import ORTHOGONAL, BoolField, NumField, check_same_geometry


@lru_cache(maxsize=None)
def _structure_for(ndim, adjacency):
    s = ndimage.generate_binary_structure(ndim, 1 if adjacency == ORTHOGONAL else ndim)
    s.flags.writeable = False
    return s


def _structure(g):
    return _structure_for(g.ndim, g.adjacency)


@lru_cache(maxsize=256)
def _shift_slices(shape, axis):
    n = shape[axis]
    lo = [slice(None)] * len(shape)
    hi = [slice(None)] * len(shape)
    lo[axis], hi[axis] = slice(0, n - 1), slice(1, n)
    return tuple(lo), tuple(hi)


def _dilate(mask, adjacency):
    out = mask.copy()
    src = mask
    for axis, n in enumerate(mask.shape):
        if n < 2:
            continue
        if adjacency != ORTHOGONAL:
            # the full 3^d cube is separable into one step per axis
            src = out.copy()
        lo, hi = _shift_slices(mask.shape, axis)
        out[hi] |= src[lo]
        out[lo] |= src[hi]
    return out


def near(phi):
    """Voxels that are in ``phi`` or adjacent to a voxel of ``phi``."""
    g = phi.geometry
    return BoolField(g, _dilate(phi.data, g.adjacency))


def _label(mask, g):
    # Labelling the transposed view makes first-encounter order run x fastest.
    labels, n = ndimage.label(mask.T, structure=_structure(g))
    return labels.T, n


def connected_components(phi):
    """Label the components of ``phi``: 0 is background, ids 1..n in scan order.

    Returns ``(labels, n)`` with ``labels`` an int array shaped like the grid.
    """
    labels, n = _label(phi.data, phi.geometry)
    labels = np.ascontiguousarray(labels)
    labels.flags.writeable = False
    return labels, n


@numba.njit(cache=True, nogil=True)
def _dilate3(m, diag):
    X, Y, Z = m.shape
    if not diag:
        out = m.copy()
        for x in range(X):
            for y in range(Y):
                for z in range(Z):
                    if m[x, y, z]:
                        if x > 0:
                            out[x - 1, y, z] = True
                        if x < X - 1:
                            out[x + 1, y, z] = True
                        if y > 0:
                            out[x, y - 1, z] = True
                        if y < Y - 1:
                            out[x, y + 1, z] = True
                        if z > 0:
                            out[x, y, z - 1] = True
                        if z < Z - 1:
                            out[x, y, z + 1] = True
        return out
    # the full cube is one +-1 step per axis, applied in turn
    src = m
    for axis in range(3):
        tmp = src.copy()
        for x in range(X):
            for y in range(Y):
                for z in range(Z):
                    if src[x, y, z]:
                        if axis == 0:
                            if x > 0:
                                tmp[x - 1, y, z] = True
                            if x < X - 1:
                                tmp[x + 1, y, z] = True
                        elif axis == 1:
                            if y > 0:
                                tmp[x, y - 1, z] = True
                            if y < Y - 1:
                                tmp[x, y + 1, z] = True
                        else:
                            if z > 0:
                                tmp[x, y, z - 1] = True
                            if z < Z - 1:
                                tmp[x, y, z + 1] = True
        src = tmp
    return src


@numba.njit(cache=True, nogil=True)
def _reach3(m1, m2, diag):
    """near(m1) | near(psi), psi being the m2 voxels m2-connected to near(m1) & m2."""
    X, Y, Z = m1.shape
    seeds = _dilate3(m1, diag)
    psi = np.zeros_like(m2)
    stack = np.empty(X * Y * Z, np.int64)
    top = 0
    for x in range(X):
        for y in range(Y):
            for z in range(Z):
                if seeds[x, y, z] and m2[x, y, z]:
                    psi[x, y, z] = True
                    stack[top] = (x * Y + y) * Z + z
                    top += 1
    while top > 0:
        top -= 1
        i = stack[top]
        z = i % Z
        y = (i // Z) % Y
        x = i // (Y * Z)
        for dx in range(-1, 2):
            nx = x + dx
            if nx < 0 or nx >= X:
                continue
            for dy in range(-1, 2):
                ny = y + dy
                if ny < 0 or ny >= Y:
                    continue
                for dz in range(-1, 2):
                    nz = z + dz
                    if nz < 0 or nz >= Z:
                        continue
                    if not diag and abs(dx) + abs(dy) + abs(dz) != 1:
                        continue
                    if m2[nx, ny, nz] and not psi[nx, ny, nz]:
                        psi[nx, ny, nz] = True
                        stack[top] = (nx * Y + ny) * Z + nz
                        top += 1
    out = _dilate3(psi, diag)
    for x in range(X):
        for y in range(Y):
            for z in range(Z):
                if seeds[x, y, z]:
                    out[x, y, z] = True
    return out


def _reach(m1, m2, adjacency):
    shape = m1.shape
    as3 = shape + (1,) * (3 - len(shape))
    out = _reach3(np.ascontiguousarray(m1).reshape(as3), np.ascontiguousarray(m2).reshape(as3),
                  adjacency != ORTHOGONAL)
    return out.reshape(shape)


def may_reach(phi1, phi2):
    """Voxels from which a path reaches ``phi1`` through ``phi2``-only intermediates.

    Computed as ``near(phi1) | near(psi)`` where ``psi`` collects the connected
    components of ``phi2`` meeting ``near(phi1)``.
    """
    g = check_same_geometry(phi1, phi2)
    return BoolField(g, _reach(phi1.data, phi2.data, phi1.geometry.adjacency))


def surrounded(phi1, phi2):
    """``phi1`` voxels from which no path leaves ``phi1`` without crossing ``phi2``."""
    g = check_same_geometry(phi1, phi2)
    a, b = phi1.data, phi2.data
    return BoolField(g, a & ~_reach(~(a | b), ~b, phi1.geometry.adjacency))


def touch(phi1, phi2):
    """``phi1`` voxels on a ``phi1``-path reaching ``phi2``."""
    g = check_same_geometry(phi1, phi2)
    return BoolField(g, phi1.data & _reach(phi2.data, phi1.data, phi1.geometry.adjacency))


def grow(phi1, phi2):
    """``phi1`` extended by the ``phi2`` voxels touching it."""
    g = check_same_geometry(phi1, phi2)
    a, b = phi1.data, phi2.data
    return BoolField(g, a | (b & _reach(a, b, phi1.geometry.adjacency)))


@numba.njit(cache=True, nogil=True)
def _envelope_lines(lines, step):
    """In-place 1D squared-distance transform of each row of ``lines``.

    Each row holds squared distances (``inf`` where unknown). Sample ``q`` sits
    at physical position ``q * step``; the lower envelope of the parabolas
    ``(step*(x - p))**2 + f[p]`` is evaluated at every sample.
    """
    nlines, n = lines.shape
    f = np.empty(n)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1)
    s2 = step * step
    for li in range(nlines):
        for q in range(n):
            f[q] = lines[li, q]
        k = -1
        for q in range(n):
            fq = f[q]
            if fq == np.inf:
                continue
            s = 0.0
            while k >= 0:
                p = v[k]
                s = ((fq + s2 * q * q) - (f[p] + s2 * p * p)) / (2.0 * s2 * (q - p))
                if s <= z[k]:
                    k -= 1
                else:
                    break
            k += 1
            v[k] = q
            z[k] = -np.inf if k == 0 else s
            z[k + 1] = np.inf
        if k < 0:
            continue
        j = 0
        for q in range(n):
            while z[j + 1] < q:
                j += 1
            d = step * (q - v[j])
            lines[li, q] = d * d + f[v[j]]


def distance_transform(phi):
    """Exact Euclidean distance (mm) from each voxel centre to the nearest ``phi`` voxel.

    Zero on ``phi``, ``inf`` everywhere when ``phi`` is empty. Separable: one
    lower-envelope pass per axis over squared distances, honouring the
    per-axis spacing.
    """
    g = phi.geometry
    if not phi.data.any():
        return NumField(g, np.full(g.dims, np.inf))
    sq = np.where(phi.data, 0.0, np.inf)
    for axis, step in enumerate(g.spacing):
        moved = np.moveaxis(sq, axis, -1)
        lines = np.ascontiguousarray(moved).reshape(-1, g.dims[axis])
        _envelope_lines(lines, step)
        sq = np.moveaxis(lines.reshape(moved.shape), -1, axis)
    return NumField(g, np.sqrt(np.ascontiguousarray(sq)))


_DIST_CMP = {
    "distlt": np.less,
    "distleq": np.less_equal,
    "distgt": np.greater,
    "distgeq": np.greater_equal,
}


def dist_compare(kind, r, phi):
    """Threshold the distance from ``phi``; e.g. ``distlt`` keeps distances ``< r``."""
    r = float(r)
    if not np.isfinite(r):
        raise ValueError("distance threshold must be finite")
    dt = distance_transform(phi)
    return BoolField(phi.geometry, _DIST_CMP[kind](dt.data, r))


def distlt(r, phi):
    return dist_compare("distlt", r, phi)


def distleq(r, phi):
    return dist_compare("distleq", r, phi)


def distgt(r, phi):
    return dist_compare("distgt", r, phi)


def distgeq(r, phi):
    return dist_compare("distgeq", r, phi)


def flt(r, phi, inclusive=False):
    """Keep the parts of ``phi`` wide enough to contain a ball of radius ``r``.

    ``distlt(r, distgeq(r, !phi))``; with ``inclusive=True`` the outer test is
    non-strict, ``distleq(r, distgeq(r, !phi))``.
    """
    if r <= 0:
        raise ValueError("flt radius must be > 0")
    core = distgeq(r, ~phi)
    return distleq(r, core) if inclusive else distlt(r, core)
