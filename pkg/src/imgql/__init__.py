"""Spatial model checking of 2D/3D images with the ImgQL query language."""

from .engine import Program, RunResult
from .errors import (ElaborationError, EvaluationError, GeometryMismatchError, ImageIOError,
                     ImgQLError, ImportFailure, LexError, ParseError, TypeCheckError)
from .grid import BoolField, GridGeometry, NumField
from .imgio import load_model, save_field
from .metrics import confusion, indexes
from .spatial import (connected_components, dist_compare, distance_transform, flt, grow,
                      may_reach, near, surrounded, touch)
from .stats import cross_correlation, cross_correlation_map, histogram, percentiles

__version__ = "0.1.0"

__all__ = [
    "BoolField", "ElaborationError", "EvaluationError", "GeometryMismatchError", "GridGeometry",
    "ImageIOError", "ImgQLError", "ImportFailure", "LexError", "NumField", "ParseError",
    "Program", "RunResult", "TypeCheckError", "confusion", "connected_components",
    "cross_correlation", "cross_correlation_map", "dist_compare", "distance_transform", "flt",
    "grow", "histogram", "indexes", "load_model", "may_reach", "near", "percentiles",
    "save_field", "surrounded", "touch",
]
