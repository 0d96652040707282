"""Batch front-end: ``imgql SCRIPT [options]``.

Each ``print`` is logged as ``[<elapsed-ms>] <label>=<value>`` and each
completed ``save`` as ``[<elapsed-ms>] save=<path>``; ``--json-log`` emits one
JSON object per event instead.
"""

import argparse
import json
import os
import sys
import time

from . import __version__, lang
from .engine import Program
from .errors import (ElaborationError, EvaluationError, ImageIOError, ImgQLError, ImportFailure,
                     LexError, ParseError, TypeCheckError)
from .grid import ADJACENCIES, DEFAULT_ADJACENCY
from .operators import describe_operators

EXIT_OK = 0
EXIT_SYNTAX = 3
EXIT_IMPORT = 4
EXIT_TYPE = 5
EXIT_EVAL = 6
EXIT_IO = 7


def _exit_code(exc):
    if isinstance(exc, (LexError, ParseError)):
        return EXIT_SYNTAX, "syntax"
    if isinstance(exc, ImportFailure):
        return EXIT_IMPORT, "import"
    if isinstance(exc, (ElaborationError, TypeCheckError)):
        return EXIT_TYPE, "type"
    if isinstance(exc, ImageIOError):
        return EXIT_IO, "io"
    if isinstance(exc, EvaluationError):
        return EXIT_EVAL, "evaluation"
    return EXIT_EVAL, "evaluation"


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return lang.format_number(v) if v.is_integer() else repr(v)
    return str(v)


def build_parser():
    p = argparse.ArgumentParser(prog="imgql", description="Run an ImgQL image analysis script.")
    p.add_argument("script", nargs="?", help="ImgQL script to run")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="number of parallel workers (default: logical cores)")
    p.add_argument("--adjacency", choices=ADJACENCIES, default=DEFAULT_ADJACENCY,
                   help="voxel adjacency used by spatial operators")
    p.add_argument("-I", dest="include", action="append", default=[], metavar="PATH",
                   help="extra directory searched by import (repeatable)")
    p.add_argument("--json-log", action="store_true", help="one JSON object per log event")
    p.add_argument("--keep-results", action="store_true",
                   help="keep every intermediate result in memory until the run ends")
    p.add_argument("--version", action="version", version=f"imgql {__version__}")
    p.add_argument("--list-ops", action="store_true", help="list built-in operators and exit")
    return p


def run(args, out=None, err=None):
    out = out or sys.stdout
    err = err or sys.stderr
    start = time.perf_counter()

    def emit(phase, label, value, elapsed_ms):
        if args.json_log:
            print(json.dumps({"phase": phase, "label": label, "value": value,
                              "elapsed_ms": round(elapsed_ms, 3)}), file=out, flush=True)
        elif phase == "save":
            print(f"[{elapsed_ms:.0f}] save={label}", file=out, flush=True)
        else:
            print(f"[{elapsed_ms:.0f}] {label}={_format_value(value)}", file=out, flush=True)

    try:
        try:
            program = Program.from_file(args.script, args.include, args.adjacency)
        except OSError as exc:
            raise ImageIOError(f"cannot read script: {exc}") from exc
        prep_ms = (time.perf_counter() - start) * 1000.0
        if args.json_log:
            emit("prepare", "tasks", len(program.graph), prep_ms)
        program.run(workers=args.workers, free_results=not args.keep_results,
                    on_event=lambda kind, target, value, ms: emit(kind, target, value, ms + prep_ms))
    except ImgQLError as exc:
        code, phase = _exit_code(exc)
        if args.json_log:
            print(json.dumps({"phase": "error", "label": phase, "value": str(exc),
                              "elapsed_ms": round((time.perf_counter() - start) * 1000.0, 3)}),
                  file=out, flush=True)
        print(f"imgql: {phase} error: {exc}", file=err)
        return code
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list_ops:
        print("\n".join(describe_operators()))
        return EXIT_OK
    if not args.script:
        parser.error("a script is required")
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    return run(args)
