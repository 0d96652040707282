"""Value types and the table of built-in operators with their signatures."""

from dataclasses import dataclass

from . import grid, imgio, metrics, spatial, stats
from .errors import EvaluationError


@dataclass(frozen=True)
class Basic:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Valuation:
    """An image whose voxels hold values of type ``inner``."""

    inner: object

    def __str__(self):
        return f"Valuation({self.inner})"


NUMBER = Basic("Number")
BOOL = Basic("Bool")
STRING = Basic("String")
MODEL = Basic("Model")
VNUM = Valuation(NUMBER)
VBOOL = Valuation(BOOL)


@dataclass(frozen=True)
class Signature:
    params: tuple
    result: object
    fn: object

    def __str__(self):
        return f"({', '.join(map(str, self.params))}) -> {self.result}"


@dataclass(frozen=True)
class EvalContext:
    workers: int = 1
    adjacency: str = grid.DEFAULT_ADJACENCY


OPERATORS = {}
# Built-ins written without arguments in scripts; they receive the grid of
# the first loaded image as a hidden Model argument.
IMPLICIT_MODEL = set()


def _define(name, params, result, fn):
    OPERATORS.setdefault(name, []).append(Signature(tuple(params), result, fn))


def _arith(op):
    def fn(ctx, a, b):
        return grid.pointwise_arith(op, a, b)
    return fn


def _compare(op):
    def fn(ctx, a, b):
        return grid.pointwise_compare(op, a, b)
    return fn


for _op in ("+", "-", "*", "/"):
    for _sig in ((NUMBER, NUMBER, NUMBER), (VNUM, VNUM, VNUM), (VNUM, NUMBER, VNUM), (NUMBER, VNUM, VNUM)):
        _define(_op, _sig[:2], _sig[2], _arith(_op))

for _op in (">", "<", ">=", "<=", "="):
    for _sig in ((NUMBER, NUMBER, BOOL), (VNUM, NUMBER, VBOOL), (NUMBER, VNUM, VBOOL), (VNUM, VNUM, VBOOL)):
        _define(_op, _sig[:2], _sig[2], _compare(_op))

for _op, _name in (("&", "and"), ("|", "or")):
    def _bool(ctx, a, b, _name=_name):
        return grid.pointwise_bool(_name, a, b)
    _define(_op, (BOOL, BOOL), BOOL, _bool)
    _define(_op, (VBOOL, VBOOL), VBOOL, _bool)

_define("!", (BOOL,), BOOL, lambda ctx, a: grid.pointwise_bool("not", a))
_define("!", (VBOOL,), VBOOL, lambda ctx, a: grid.pointwise_bool("not", a))

_define("near", (VBOOL,), VBOOL, lambda ctx, a: spatial.near(a))
_define("mayReach", (VBOOL, VBOOL), VBOOL, lambda ctx, a, b: spatial.may_reach(a, b))
_define("surrounded", (VBOOL, VBOOL), VBOOL, lambda ctx, a, b: spatial.surrounded(a, b))
_define("distance", (VBOOL,), VNUM, lambda ctx, a: spatial.distance_transform(a))
for _kind in ("distlt", "distleq", "distgt", "distgeq"):
    _define(_kind, (NUMBER, VBOOL), VBOOL,
            lambda ctx, r, a, _kind=_kind: spatial.dist_compare(_kind, r, a))


def _geometry(model, ctx):
    return model.geometry.with_adjacency(ctx.adjacency)


_define("border", (MODEL,), VBOOL, lambda ctx, m: grid.border(_geometry(m, ctx)))
_define("tt", (MODEL,), VBOOL, lambda ctx, m: grid.constant(_geometry(m, ctx), True))
_define("ff", (MODEL,), VBOOL, lambda ctx, m: grid.constant(_geometry(m, ctx), False))
IMPLICIT_MODEL.update(("border", "tt", "ff"))

for _kind in ("intensity", "red", "green", "blue"):
    _define(_kind, (MODEL,), VNUM, lambda ctx, m, _kind=_kind: imgio.channel(_kind, m))

_define("min", (VNUM,), NUMBER, lambda ctx, a: grid.aggregate("min", a))
_define("max", (VNUM,), NUMBER, lambda ctx, a: grid.aggregate("max", a))
_define("volume", (VBOOL,), NUMBER, lambda ctx, a: grid.aggregate("volume", a))


def _cross_correlation(ctx, r, a, b, phi, m, M, k):
    return stats.cross_correlation_map(r, a, b, phi, m, M, k, workers=ctx.workers)


_define("crossCorrelation", (NUMBER, VNUM, VNUM, VBOOL, NUMBER, NUMBER, NUMBER), VNUM, _cross_correlation)
_define("percentiles", (VNUM, VBOOL), VNUM, lambda ctx, f, mask: stats.percentiles(f, mask))


def _index(name):
    def fn(ctx, seg, truth):
        value = getattr(metrics.indexes(metrics.confusion(seg, truth)), name)
        if value is None:
            raise EvaluationError(f"{name} is undefined (zero denominator)")
        return value
    return fn


for _name in ("sensitivity", "specificity", "dice"):
    _define(_name, (VBOOL, VBOOL), NUMBER, _index(_name))


def arity(name):
    n = len(OPERATORS[name][0].params)
    return n - 1 if name in IMPLICIT_MODEL else n


def resolve(name, arg_types):
    """The signature of ``name`` accepting ``arg_types``, or ``None``."""
    for sig in OPERATORS.get(name, ()):
        if sig.params == tuple(arg_types):
            return sig
    return None


def describe_operators():
    lines = []
    for name in sorted(OPERATORS):
        for sig in OPERATORS[name]:
            params = sig.params[1:] if name in IMPLICIT_MODEL else sig.params
            lines.append(f"{name} : ({', '.join(map(str, params))}) -> {sig.result}")
    return lines
