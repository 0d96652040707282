"""Histograms, histogram cross-correlation and percentile ranks.

The per-voxel texture similarity map slides an axis-aligned window through
each partition of the grid along a serpentine (Hamiltonian) path. Moving the
window one voxel only touches two hyperfaces, so the window histogram is
updated as ``h2 = h1 - h(P1 \\ P2) + h(P2 \\ P1)`` instead of being rebuilt.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
import math

import numba
import numpy as np

from .errors import EvaluationError
from .grid import NumField, check_same_geometry


@dataclass(frozen=True, eq=False)
class Histogram:
    """``k`` bins of width ``(M - m) / k`` starting at ``m``."""

    m: float
    M: float
    k: int
    counts: np.ndarray

    @property
    def delta(self):
        return (self.M - self.m) / self.k

    @property
    def total(self):
        return int(self.counts.sum())


def _check_params(m, M, k):
    if not (math.isfinite(m) and math.isfinite(M)) or not m < M:
        raise ValueError(f"histogram range needs finite m < M, got [{m}, {M}]")
    if k != int(k) or k < 1:
        raise ValueError(f"bin count must be a positive integer, got {k}")
    return float(m), float(M), int(k)


def bin_indices(values, m, M, k):
    """0-based bin of every value, ``-1`` for values outside ``[m, M]``.

    Bin ``i`` holds ``i*delta <= v - m < (i+1)*delta``; ``v == M`` lands in the
    last bin.
    """
    m, M, k = _check_params(m, M, k)
    values = np.asarray(values, dtype=np.float64)
    delta = (M - m) / k
    inside = (values >= m) & (values <= M)
    rel = np.where(inside, values - m, 0.0)
    idx = np.floor(rel / delta)
    # floor of a rounded quotient can be off by one at bin edges
    idx -= idx * delta > rel
    idx += (idx + 1) * delta <= rel
    idx = np.minimum(idx, k - 1)
    out = idx.astype(np.int32)
    out[~inside] = -1
    return out


def histogram(values, region, m, M, k):
    """Histogram of ``values`` over the voxels where ``region`` holds."""
    check_same_geometry(values, region)
    m, M, k = _check_params(m, M, k)
    idx = bin_indices(values.data[region.data], m, M, k)
    counts = np.bincount(idx[idx >= 0], minlength=k).astype(np.int64)
    return Histogram(m, M, k, counts)


def cross_correlation(h1, h2):
    """Pearson correlation of two bin-count vectors; 0 when either is constant."""
    if h1.k != h2.k:
        raise ValueError(f"histograms have {h1.k} and {h2.k} bins")
    a = np.asarray(h1.counts, dtype=np.float64)
    b = np.asarray(h2.counts, dtype=np.float64)
    da = a - a.mean()
    db = b - b.mean()
    den = math.sqrt(float(np.sum(da * da)) * float(np.sum(db * db)))
    if den == 0.0:
        return 0.0
    return float(np.sum(da * db)) / den


def window_half_widths(spacing, r):
    """Voxels on each side of the centre covered by a radius of ``r`` mm."""
    return tuple(int(math.floor(r / s + 1e-9)) for s in spacing)


@lru_cache(maxsize=16)
def serpentine_path(dims, z0, z1):
    """Linear indexes (x fastest) of a boustrophedon walk through slab ``z0 <= z < z1``.

    Consecutive entries differ by one step along exactly one axis.
    """
    nx, ny, _ = dims
    t = np.arange(z1 - z0)[:, None]
    ys = np.where(t % 2 == 0, np.arange(ny)[None, :], np.arange(ny)[::-1][None, :])
    row = t * ny + np.arange(ny)[None, :]
    xs = np.where((row % 2 == 0)[..., None], np.arange(nx), np.arange(nx)[::-1])
    zs = (z0 + t)[..., None]
    flat = xs + nx * (ys[..., None] + ny * zs)
    dtype = np.int32 if nx * ny * dims[2] < 2**31 else np.int64
    path = flat.ravel().astype(dtype)
    path.flags.writeable = False
    return path


@numba.njit(cache=True, nogil=True)
def _walk(bins, hb, w, path, out):
    nx, ny, nz = bins.shape
    k = hb.shape[0]
    ha = np.zeros(k, dtype=np.int64)
    tb = 0
    s2b = 0
    for i in range(k):
        tb += hb[i]
        s2b += hb[i] * hb[i]
    var_b = float(k * s2b - tb * tb)

    p0 = path[0]
    cx = p0 % nx
    cy = (p0 // nx) % ny
    cz = p0 // (nx * ny)
    lo = np.empty(3, dtype=np.int64)
    hi = np.empty(3, dtype=np.int64)
    c = np.array([cx, cy, cz], dtype=np.int64)
    n = np.array([nx, ny, nz], dtype=np.int64)
    for a in range(3):
        lo[a] = max(c[a] - w[a], 0)
        hi[a] = min(c[a] + w[a], n[a] - 1)

    ta = 0
    s2a = 0
    dot = 0
    for z in range(lo[2], hi[2] + 1):
        for y in range(lo[1], hi[1] + 1):
            for x in range(lo[0], hi[0] + 1):
                i = bins[x, y, z]
                if i >= 0:
                    s2a += 2 * ha[i] + 1
                    dot += hb[i]
                    ha[i] += 1
                    ta += 1

    face_lo = np.empty(3, dtype=np.int64)
    face_hi = np.empty(3, dtype=np.int64)
    for step in range(path.shape[0]):
        if step > 0:
            p = path[step]
            nc0 = p % nx
            nc1 = (p // nx) % ny
            nc2 = p // (nx * ny)
            if nc0 != c[0]:
                axis = 0
                d = nc0 - c[0]
            elif nc1 != c[1]:
                axis = 1
                d = nc1 - c[1]
            else:
                axis = 2
                d = nc2 - c[2]
            newc = c[axis] + d
            # slice leaving the window, then slice entering it
            old = c[axis] - w[axis] if d > 0 else c[axis] + w[axis]
            new = newc + w[axis] if d > 0 else newc - w[axis]
            for sign in range(2):
                coord = old if sign == 0 else new
                if coord < 0 or coord >= n[axis]:
                    continue
                for a in range(3):
                    face_lo[a] = lo[a]
                    face_hi[a] = hi[a]
                face_lo[axis] = coord
                face_hi[axis] = coord
                for z in range(face_lo[2], face_hi[2] + 1):
                    for y in range(face_lo[1], face_hi[1] + 1):
                        for x in range(face_lo[0], face_hi[0] + 1):
                            i = bins[x, y, z]
                            if i < 0:
                                continue
                            if sign == 0:
                                ha[i] -= 1
                                s2a -= 2 * ha[i] + 1
                                dot -= hb[i]
                                ta -= 1
                            else:
                                s2a += 2 * ha[i] + 1
                                dot += hb[i]
                                ha[i] += 1
                                ta += 1
            c[axis] = newc
            lo[axis] = max(newc - w[axis], 0)
            hi[axis] = min(newc + w[axis], n[axis] - 1)
        var_a = k * s2a - ta * ta
        if var_a == 0 or var_b == 0:
            r = 0.0
        else:
            r = float(k * dot - ta * tb) / math.sqrt(float(var_a) * var_b)
        out[c[0], c[1], c[2]] = r


def _as3d(arr):
    return arr[:, None, :] if arr.ndim == 2 else arr


def cross_correlation_map(r, a, b, phi, m, M, k, workers=1):
    """Per-voxel correlation between the local histogram of ``a`` and that of ``b`` over ``phi``.

    The local window around a voxel spans ``floor(r / spacing)`` voxels on
    each side along every axis, clipped at the image bounds. The grid is cut
    into ``workers`` slabs along its slowest axis, each walked concurrently.
    """
    g = check_same_geometry(a, b, phi)
    m, M, k = _check_params(m, M, k)
    if not r > 0:
        raise ValueError("window radius must be > 0")
    hb = histogram(b, phi, m, M, k).counts
    bins = np.ascontiguousarray(_as3d(bin_indices(a.data, m, M, k)))
    w = window_half_widths(g.spacing, r)
    w = np.array((w[0], 0, w[1]) if g.ndim == 2 else w, dtype=np.int64)
    out = np.empty(bins.shape)
    dims = bins.shape
    chunks = [c for c in np.array_split(np.arange(dims[2]), max(1, int(workers))) if len(c)]
    jobs = [(int(c[0]), int(c[-1]) + 1) for c in chunks]

    def run(job):
        _walk(bins, hb, w, serpentine_path(dims, *job), out)

    if len(jobs) == 1:
        run(jobs[0])
    else:
        with ThreadPoolExecutor(max_workers=len(jobs)) as pool:
            list(pool.map(run, jobs))
    return NumField(g, out[:, 0, :] if g.ndim == 2 else out)


def percentiles(f, mask):
    """Percentile rank in ``[0, 1]`` of each masked value within the masked population.

    ``(below + 0.5 * equal) / N``; voxels outside the mask get 0.
    """
    check_same_geometry(f, mask)
    population = np.sort(f.data[mask.data])
    n = population.size
    if n == 0:
        raise EvaluationError("percentiles: the mask is empty")
    vals = f.data[mask.data]
    below = np.searchsorted(population, vals, side="left")
    equal = np.searchsorted(population, vals, side="right") - below
    out = np.zeros(f.geometry.dims)
    out[mask.data] = (below + 0.5 * equal) / n
    return NumField(f.geometry, out)
