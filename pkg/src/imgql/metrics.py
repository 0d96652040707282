"""Overlap indexes between a computed segmentation and a reference mask."""

from dataclasses import dataclass

import numpy as np

from .grid import check_same_geometry


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self):
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class Indexes:
    """Sensitivity, specificity and Dice; ``None`` where the denominator is zero."""

    sensitivity: float | None
    specificity: float | None
    dice: float | None


def confusion(seg, truth):
    check_same_geometry(seg, truth)
    s, t = seg.data, truth.data
    return ConfusionCounts(
        tp=int(np.count_nonzero(s & t)),
        tn=int(np.count_nonzero(~s & ~t)),
        fp=int(np.count_nonzero(s & ~t)),
        fn=int(np.count_nonzero(~s & t)),
    )


def _ratio(num, den):
    return None if den == 0 else num / den


def indexes(c):
    # float arithmetic in the same order an ImgQL script would use
    tp, tn, fp, fn = (float(v) for v in (c.tp, c.tn, c.fp, c.fn))
    return Indexes(
        sensitivity=_ratio(tp, tp + fn),
        specificity=_ratio(tn, tn + fp),
        dice=_ratio(2 * tp, 2 * tp + fn + fp),
    )
