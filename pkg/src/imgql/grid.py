"""Voxel grids, per-voxel fields and pointwise algebra.

A field stores one value per voxel in a numpy array whose shape equals the
grid extents, indexed ``data[x, y]`` or ``data[x, y, z]``. The linear voxel
index used by :func:`neighbors` runs with ``x`` fastest (Fortran order), the
same layout NIfTI-1 uses on disk.
"""

from dataclasses import dataclass
import itertools
import math
import operator

import numpy as np

from .errors import EvaluationError, GeometryMismatchError

ORTHOGONAL = "orthogonal"
ORTHODIAGONAL = "orthodiagonal"
ADJACENCIES = (ORTHOGONAL, ORTHODIAGONAL)
DEFAULT_ADJACENCY = ORTHODIAGONAL


@dataclass(frozen=True)
class GridGeometry:
    """Extents, physical voxel size (mm) and adjacency convention of a grid."""

    dims: tuple
    spacing: tuple = None
    adjacency: str = DEFAULT_ADJACENCY

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) not in (2, 3):
            raise ValueError(f"grids must have 2 or 3 axes, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise ValueError(f"every extent must be >= 1, got {dims}")
        spacing = (1.0,) * len(dims) if self.spacing is None else tuple(float(s) for s in self.spacing)
        if len(spacing) != len(dims):
            raise ValueError("spacing must have one entry per axis")
        if not all(s > 0 and math.isfinite(s) for s in spacing):
            raise ValueError(f"spacing components must be finite and > 0, got {spacing}")
        if self.adjacency not in ADJACENCIES:
            raise ValueError(f"adjacency must be one of {ADJACENCIES}, got {self.adjacency!r}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "spacing", spacing)

    @property
    def ndim(self):
        return len(self.dims)

    @property
    def size(self):
        return math.prod(self.dims)

    def with_adjacency(self, adjacency):
        return GridGeometry(self.dims, self.spacing, adjacency)

    def offsets(self):
        """Neighbour offsets under the adjacency, the zero offset included."""
        offs = []
        for d in itertools.product((-1, 0, 1), repeat=self.ndim):
            nonzero = sum(1 for c in d if c)
            if self.adjacency == ORTHOGONAL and nonzero > 1:
                continue
            offs.append(d)
        return offs

    def same_grid(self, other):
        """Equal extents and spacing; the adjacency is allowed to differ."""
        return self.dims == other.dims and self.spacing == other.spacing


def neighbors(g, v):
    """Linear indexes of ``v`` and of every in-bounds voxel adjacent to it."""
    if not 0 <= v < g.size:
        raise ValueError(f"voxel index {v} out of range for dims {g.dims}")
    coord = np.unravel_index(v, g.dims, order="F")
    out = []
    for off in g.offsets():
        c = tuple(int(a) + b for a, b in zip(coord, off))
        if all(0 <= ci < di for ci, di in zip(c, g.dims)):
            out.append(int(np.ravel_multi_index(c, g.dims, order="F")))
    return sorted(out)


class Field:
    """Immutable per-voxel values over one geometry."""

    dtype = None

    __slots__ = ("geometry", "data")

    def __init__(self, geometry, data):
        data = np.asarray(data)
        if data.dtype != self.dtype:
            raise TypeError(f"{type(self).__name__} needs {self.dtype} data, got {data.dtype}")
        if data.shape != geometry.dims:
            raise ValueError(f"data shape {data.shape} does not match dims {geometry.dims}")
        data.flags.writeable = False
        self.geometry = geometry
        self.data = data

    @classmethod
    def from_array(cls, array, spacing=None, adjacency=DEFAULT_ADJACENCY):
        arr = np.array(array, dtype=cls.dtype)
        return cls(GridGeometry(arr.shape, spacing, adjacency), arr)

    def flat(self):
        """Values in linear voxel order (x fastest)."""
        return self.data.ravel(order="F")

    def same_values(self, other):
        return (type(self) is type(other) and self.geometry.same_grid(other.geometry)
                and np.array_equal(self.data, other.data))

    def __repr__(self):
        return f"{type(self).__name__}(dims={self.geometry.dims}, spacing={self.geometry.spacing})"


class BoolField(Field):
    __slots__ = ()
    dtype = np.dtype(bool)

    def __and__(self, other):
        return pointwise_bool("and", self, other)

    def __or__(self, other):
        return pointwise_bool("or", self, other)

    def __invert__(self):
        return pointwise_bool("not", self)

    def count(self):
        return int(np.count_nonzero(self.data))


class NumField(Field):
    __slots__ = ()
    dtype = np.dtype(np.float64)

    def __init__(self, geometry, data):
        super().__init__(geometry, data)
        if np.isnan(self.data).any():
            raise EvaluationError("operation produced NaN values")

    def __add__(self, other):
        return pointwise_arith("+", self, other)

    def __radd__(self, other):
        return pointwise_arith("+", other, self)

    def __sub__(self, other):
        return pointwise_arith("-", self, other)

    def __rsub__(self, other):
        return pointwise_arith("-", other, self)

    def __mul__(self, other):
        return pointwise_arith("*", self, other)

    def __rmul__(self, other):
        return pointwise_arith("*", other, self)

    def __truediv__(self, other):
        return pointwise_arith("/", self, other)

    def __rtruediv__(self, other):
        return pointwise_arith("/", other, self)

    def __gt__(self, other):
        return pointwise_compare(">", self, other)

    def __lt__(self, other):
        return pointwise_compare("<", self, other)

    def __ge__(self, other):
        return pointwise_compare(">=", self, other)

    def __le__(self, other):
        return pointwise_compare("<=", self, other)


def bool_field(geometry, data):
    return BoolField(geometry, np.asarray(data, dtype=bool))


def num_field(geometry, data):
    return NumField(geometry, np.asarray(data, dtype=np.float64))


def check_same_geometry(*fields):
    first = fields[0].geometry
    for f in fields[1:]:
        if not first.same_grid(f.geometry):
            raise GeometryMismatchError(
                f"geometry mismatch: dims {first.dims} spacing {first.spacing} vs "
                f"dims {f.geometry.dims} spacing {f.geometry.spacing}")
    return first


_ARITH = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide}
_COMPARE = {">": operator.gt, "<": operator.lt, ">=": operator.ge, "<=": operator.le, "=": operator.eq}


def _operand(x):
    return x.data if isinstance(x, Field) else np.float64(x)


def pointwise_arith(op, a, b):
    """Elementwise ``a op b`` for any mix of NumFields and numbers.

    Division of a nonzero value by zero gives a signed infinity; ``0/0`` (and
    any other NaN-producing combination such as ``inf - inf``) is an error.
    """
    fields = [x for x in (a, b) if isinstance(x, Field)]
    geometry = check_same_geometry(*fields) if fields else None
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        result = _ARITH[op](_operand(a), _operand(b))
    if np.isnan(result).any():
        raise EvaluationError(f"undefined arithmetic result in '{op}' (e.g. 0/0 or inf-inf)")
    if geometry is None:
        return float(result)
    return NumField(geometry, np.asarray(result, dtype=np.float64))


def pointwise_compare(op, a, b):
    """Per-voxel comparison; exact on reals. Numbers compared to numbers give a bool."""
    fields = [x for x in (a, b) if isinstance(x, Field)]
    if not fields:
        return bool(_COMPARE[op](float(a), float(b)))
    geometry = check_same_geometry(*fields)
    return BoolField(geometry, np.asarray(_COMPARE[op](_operand(a), _operand(b))))


def pointwise_bool(op, a, b=None):
    if op == "not":
        if isinstance(a, Field):
            return BoolField(a.geometry, ~a.data)
        return not a
    if not isinstance(a, Field) and not isinstance(b, Field):
        return (a and b) if op == "and" else (a or b)
    geometry = check_same_geometry(a, b)
    fn = np.logical_and if op == "and" else np.logical_or
    return BoolField(geometry, fn(a.data, b.data))


def aggregate(kind, f):
    """``min``/``max`` of a NumField, or ``volume`` (true-voxel count) of a BoolField."""
    if kind == "volume":
        if not isinstance(f, BoolField):
            raise TypeError("volume takes a BoolField")
        return float(np.count_nonzero(f.data))
    if not isinstance(f, NumField):
        raise TypeError(f"{kind} takes a NumField")
    if kind == "min":
        return float(f.data.min())
    if kind == "max":
        return float(f.data.max())
    raise ValueError(f"unknown aggregate {kind!r}")


def border(g):
    """True on every voxel having some coordinate at 0 or at the last index."""
    out = np.zeros(g.dims, dtype=bool)
    for axis, n in enumerate(g.dims):
        lo = [slice(None)] * g.ndim
        hi = [slice(None)] * g.ndim
        lo[axis] = 0
        hi[axis] = n - 1
        out[tuple(lo)] = True
        out[tuple(hi)] = True
    return BoolField(g, out)


def constant(g, value):
    """A field holding ``value`` everywhere (bool gives a BoolField)."""
    if isinstance(value, (bool, np.bool_)):
        return BoolField(g, np.full(g.dims, bool(value)))
    return NumField(g, np.full(g.dims, float(value)))
