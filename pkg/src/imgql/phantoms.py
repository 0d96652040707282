"""Synthetic test images.

``brain_phantom`` builds a FLAIR-like volume (or slice) with a known tumour
mask, for exercising the segmentation script without clinical data. The
``*_scene`` functions build small two-colour bitmaps (red, blue, black) on
100x100 grids, used to illustrate the spatial operators.
"""

from dataclasses import dataclass
import os

import numpy as np

from .grid import BoolField, GridGeometry, NumField
from .imgio import save_field

BACKGROUND_SD = 0.015
TISSUE_SD = 0.05
HEALTHY, OEDEMA, CORE, SPECK = 0.4, 0.7, 0.9, 0.9


@dataclass
class Phantom:
    flair: np.ndarray  # float64, indexed [x, y(, z)]
    truth: np.ndarray  # whole tumour: core plus oedema
    core: np.ndarray
    specks: np.ndarray
    spacing: tuple

    @property
    def geometry(self):
        return GridGeometry(self.flair.shape, self.spacing)

    def flair_field(self):
        return NumField(self.geometry, self.flair)

    def truth_field(self):
        return BoolField(self.geometry, self.truth)

    def write(self, directory, flair_name="Brats17_2013_2_1_flair.nii.gz",
              seg_name="Brats17_2013_2_1_seg.nii.gz"):
        """Save the FLAIR image and the reference mask under the names the bundled script loads."""
        flair_path = os.path.join(directory, flair_name)
        seg_path = os.path.join(directory, seg_name)
        save_field(flair_path, self.flair_field())
        save_field(seg_path, self.truth_field())
        return flair_path, seg_path


def ellipsoid(shape, center, radii):
    grids = np.ogrid[tuple(slice(0, n) for n in shape)]
    acc = 0.0
    for g, c, r in zip(grids, center, radii):
        acc = acc + ((g - c) / r) ** 2
    return acc <= 1.0


def _scaled(dims, fractions):
    return tuple(f * d for f, d in zip(fractions, dims))


def brain_phantom(dims=(240, 240, 155), seed=0, n_specks=40, spacing=None):
    """A head-like image: dark background, brain ellipsoid, a bright tumour core
    inside a moderately bright oedema shell, and small bright decoy specks.

    Core and oedema are sized at roughly 4% and 7% of the brain so that the
    0.95 and 0.86 percentile thresholds of the segmentation script fall on
    the core and on the whole tumour respectively.
    """
    dims = tuple(int(d) for d in dims)
    nd = len(dims)
    rng = np.random.default_rng(seed)
    center = _scaled(dims, (0.5,) * nd)
    brain_r = _scaled(dims, (0.375, 0.44, 0.40)[:nd])
    brain = ellipsoid(dims, center, brain_r)

    # whole tumour and core volumes relative to the brain, per dimensionality
    whole_frac, core_frac = 0.11, 0.04
    shape = (1.0, 0.95, 0.9)[:nd]
    tum_center = _scaled(dims, (0.58, 0.45, 0.52)[:nd])

    def radii_for(frac):
        k = (frac * np.prod(brain_r) / np.prod(shape)) ** (1.0 / nd)
        return tuple(k * s for s in shape)

    whole = ellipsoid(dims, tum_center, radii_for(whole_frac)) & brain
    core_center = tuple(c + 0.08 * r for c, r in zip(tum_center, radii_for(whole_frac)))
    core = ellipsoid(dims, core_center, radii_for(core_frac)) & whole

    # decoys: radius-1 blobs in healthy tissue well away from the tumour
    allowed = brain & ~ellipsoid(dims, tum_center, tuple(r + 12 for r in radii_for(whole_frac)))
    allowed &= ellipsoid(dims, center, tuple(r - 6 for r in brain_r))
    candidates = np.flatnonzero(allowed.ravel())
    specks = np.zeros(dims, dtype=bool)
    centers = rng.choice(candidates, size=min(n_specks, candidates.size), replace=False)
    offsets = np.array([o for o in np.ndindex(*(3,) * nd) if sum(abs(v - 1) for v in o) <= 1]) - 1
    for c in np.array(np.unravel_index(centers, dims)).T:
        pts = np.clip(c + offsets, 0, np.array(dims) - 1)
        specks[tuple(pts.T)] = True

    flair = np.abs(rng.normal(0.0, BACKGROUND_SD, dims))
    tissue = rng.normal(0.0, TISSUE_SD, dims)
    flair[brain] = HEALTHY + tissue[brain]
    oedema = whole & ~core
    flair[oedema] = OEDEMA + tissue[oedema]
    flair[core] = CORE + tissue[core]
    flair[specks] = SPECK + tissue[specks]
    np.clip(flair, 0.0, None, out=flair)
    spacing = tuple(spacing) if spacing is not None else (1.0,) * nd
    return Phantom(flair, whole, core, specks, spacing)


def brain_slice(size=512, seed=0, n_specks=30):
    """2D variant of :func:`brain_phantom`."""
    return brain_phantom((size, size), seed=seed, n_specks=n_specks)


# -- 100x100 two-colour scenes ---------------------------------------------

SCENE = (100, 100)


@dataclass
class Scene:
    red: np.ndarray
    blue: np.ndarray

    def fields(self, adjacency="orthodiagonal"):
        g = GridGeometry(self.red.shape, adjacency=adjacency)
        return BoolField(g, self.red), BoolField(g, self.blue)


def _rect(mask, x0, y0, x1, y1):
    mask[x0:x1, y0:y1] = True


def _ring(mask, x0, y0, x1, y1, width):
    _rect(mask, x0, y0, x1, y1)
    mask[x0 + width:x1 - width, y0 + width:y1 - width] = False


def surround_scene():
    """Blue regions filling the inside of red enclosures.

    From top to bottom: a closed square ring; a ring with a gap; a diamond
    drawn with diagonal steps, which only blocks orthogonal paths; a red U
    whose open side is the image border.
    """
    red = np.zeros(SCENE, dtype=bool)
    blue = np.zeros(SCENE, dtype=bool)
    _ring(red, 5, 5, 35, 35, 3)
    _rect(blue, 8, 8, 32, 32)
    _ring(red, 50, 5, 80, 35, 3)
    red[64:67, 5:8] = False
    _rect(blue, 53, 8, 77, 32)
    xs, ys = np.indices(SCENE)
    diamond = np.abs(xs - 25) + np.abs(ys - 62)
    red |= diamond == 12
    blue |= diamond < 12
    _rect(red, 60, 52, 100, 55)
    _rect(red, 60, 55, 63, 92)
    _rect(red, 60, 92, 100, 95)
    _rect(blue, 63, 55, 100, 92)
    return Scene(red, blue)


def touch_scene():
    """Thin (3-pixel) red strokes; some reach a blue square, others do not."""
    red = np.zeros(SCENE, dtype=bool)
    blue = np.zeros(SCENE, dtype=bool)
    _rect(blue, 40, 40, 60, 60)
    _rect(red, 10, 48, 40, 51)       # horizontal stroke ending at blue
    _rect(red, 10, 20, 13, 51)       # joined vertical stroke
    _rect(red, 60, 30, 63, 70)       # adjacent to blue's right side
    _rect(red, 75, 10, 78, 90)       # detached stroke
    _rect(red, 20, 80, 50, 83)       # detached stroke
    return Scene(red, blue)


def grow_scene():
    """Red seeds and blue regions: some blue regions touch a seed, others do not."""
    red = np.zeros(SCENE, dtype=bool)
    blue = np.zeros(SCENE, dtype=bool)
    _rect(red, 20, 20, 30, 30)
    _ring(blue, 12, 12, 38, 38, 4)      # ring around red, with a gap
    blue[12:16, 24:27] = False
    _rect(blue, 30, 24, 34, 27)         # bridge connecting the red to the ring
    _rect(blue, 60, 60, 90, 90)         # far away blob
    _rect(red, 70, 10, 80, 20)
    _rect(blue, 80, 12, 95, 18)         # touching the second seed
    _rect(blue, 50, 40, 55, 45)         # isolated
    return Scene(red, blue)


def distance_scene():
    """A 30x30 red square, a 10-pixel black gap, then a blue ring; and a copy
    whose blue ring is open on one side."""
    red = np.zeros(SCENE, dtype=bool)
    blue = np.zeros(SCENE, dtype=bool)
    _rect(red, 15, 15, 45, 45)
    _ring(blue, 2, 2, 58, 58, 3)
    _rect(red, 65, 62, 95, 92)
    _rect(blue, 62, 59, 98, 60)          # only a top bar, the rest is open
    return Scene(red, blue)
