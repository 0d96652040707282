"""Two-phase execution of ImgQL programs.

Phase one turns the commands into a graph of closed formulas. Names are
resolved and function bodies substituted while every sub-expression is
hash-consed, so structurally equal sub-expressions share one formula and one
UID. Only what ``save`` and ``print`` need is ever built. The graph is then
type checked.

Phase two evaluates each formula exactly once, on a pool of workers, starting
a task as soon as the results of its arguments exist.
"""

from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
import os
import time

from . import imgio, lang, operators
from .errors import (ElaborationError, EvaluationError, ImageIOError, ImgQLError,
                     TypeCheckError)
from .grid import DEFAULT_ADJACENCY
from .operators import BOOL, MODEL, NUMBER, STRING, VBOOL, VNUM, EvalContext

CONST = "const"
LOAD = "load"


@dataclass(frozen=True)
class Formula:
    uid: int
    op: str
    args: tuple
    value: object = None


@dataclass(frozen=True)
class Goal:
    kind: str  # "save" or "print"
    target: str  # output path or label
    uid: int
    pos: object = None


class FormulaFactory:
    """Hands out one node per distinct ``(operator, arguments, literal)``."""

    def __init__(self):
        self._index = {}
        self.nodes = []
        self.positions = []

    def create(self, op, args=(), value=None, pos=None):
        key = (op, tuple(args), value)
        idx = self._index.get(key)
        if idx is None:
            idx = len(self.nodes)
            self._index[key] = idx
            self.nodes.append(key)
            self.positions.append(pos)
        return idx

    def __len__(self):
        return len(self.nodes)


class _Thunk:
    """A closed expression elaborated at most once, on first use."""

    __slots__ = ("expr", "env", "node")

    def __init__(self, expr, env):
        self.expr = expr
        self.env = env
        self.node = None


class _Load:
    __slots__ = ("path", "pos")

    def __init__(self, path, pos):
        self.path = path
        self.pos = pos


class _Function:
    __slots__ = ("name", "params", "body", "env", "used", "memo")

    def __init__(self, cmd, env):
        self.name = cmd.name
        self.params = cmd.params
        self.body = cmd.body
        self.env = env
        names = _names(cmd.body)
        self.used = tuple(i for i, p in enumerate(cmd.params) if p in names)
        self.memo = {}


def _names(e, acc=None):
    acc = set() if acc is None else acc
    if isinstance(e, lang.Identifier):
        acc.add(e.name)
    elif isinstance(e, lang.Application):
        acc.add(e.name)
        for a in e.args:
            _names(a, acc)
    elif isinstance(e, lang.InfixApplication):
        acc.add(e.op)
        _names(e.left, acc)
        _names(e.right, acc)
    return acc


class Elaborator:
    def __init__(self, base_dir="."):
        self.base_dir = base_dir
        self.factory = FormulaFactory()
        self.base_model = None

    def _path(self, p):
        return os.path.normpath(os.path.join(self.base_dir, p))

    def force(self, binding):
        if isinstance(binding, _Load):
            return self.factory.create(LOAD, (), self._path(binding.path), binding.pos)
        if binding.node is None:
            binding.node = self.expr(binding.expr, binding.env)
        return binding.node

    def expr(self, e, env):
        if isinstance(e, lang.Number):
            return self.factory.create(CONST, (), float(e.value), e.pos)
        if isinstance(e, lang.Identifier):
            b = env.get(e.name)
            if isinstance(b, _Function):
                raise ElaborationError(
                    f"function '{e.name}' expects {len(b.params)} argument(s), got 0", e.pos)
            if b is not None:
                return self.force(b)
            return self.builtin(e.name, (), env, e.pos)
        if isinstance(e, lang.InfixApplication):
            return self.call(e.op, (e.left, e.right), env, e.pos)
        if isinstance(e, lang.Application):
            return self.call(e.name, e.args, env, e.pos)
        raise TypeError(f"not an expression: {e!r}")

    def call(self, name, args, env, pos):
        b = env.get(name)
        if b is None:
            return self.builtin(name, args, env, pos)
        if not isinstance(b, _Function):
            raise ElaborationError(f"'{name}' is not a function", pos)
        if len(args) != len(b.params):
            raise ElaborationError(
                f"function '{name}' expects {len(b.params)} argument(s), got {len(args)}", pos)
        thunks = [_Thunk(a, env) for a in args]
        key = tuple(self.force(thunks[i]) for i in b.used)
        node = b.memo.get(key)
        if node is None:
            inner = dict(b.env)
            inner.update(zip(b.params, thunks))
            node = b.memo[key] = self.expr(b.body, inner)
        return node

    def builtin(self, name, args, env, pos):
        if name not in operators.OPERATORS:
            raise ElaborationError(f"unbound name '{name}'", pos)
        want = operators.arity(name)
        if len(args) != want:
            raise ElaborationError(
                f"operator '{name}' expects {want} argument(s), got {len(args)}", pos)
        nodes = [self.expr(a, env) for a in args]
        if name in operators.IMPLICIT_MODEL:
            if self.base_model is None:
                raise ElaborationError(f"'{name}' needs a loaded image to take its grid from", pos)
            nodes.insert(0, self.force(self.base_model))
        return self.factory.create(name, nodes, None, pos)


@dataclass
class TaskGraph:
    """Formulas indexed by UID; an argument's UID is always larger than its user's."""

    formulas: list
    types: list
    impls: list
    positions: list
    goals: list

    def __len__(self):
        return len(self.formulas)

    def describe(self, uid, depth=3):
        f = self.formulas[uid]
        if f.op == CONST:
            return lang.format_number(f.value)
        if f.op == LOAD:
            return f'load("{f.value}")'
        if depth == 0:
            return "..."
        args = [self.describe(a, depth - 1) for a in f.args]
        if f.op in operators.IMPLICIT_MODEL:
            return f.op
        if f.op in lang.INFIX_OPS and len(args) == 2:
            return f"({args[0]} {f.op} {args[1]})"
        if f.op in lang.PREFIX_OPS:
            return f"{f.op}{args[0]}"
        return f"{f.op}({', '.join(args)})"


def elaborate(commands, base_dir="."):
    """Resolve names and hash-cons the expressions needed by ``save``/``print``.

    Returns ``(factory, goals)`` where goal nodes are creation indexes; UIDs
    are assigned by :func:`type_check`.
    """
    el = Elaborator(base_dir)
    env = {}
    pending = []
    for c in commands:
        if isinstance(c, lang.LetConstant):
            env = {**env, c.name: _Thunk(c.body, env)}
        elif isinstance(c, lang.LetFunction):
            env = {**env, c.name: _Function(c, env)}
        elif isinstance(c, lang.Load):
            load = _Load(c.path, c.pos)
            if el.base_model is None:
                el.base_model = load
            env = {**env, c.name: load}
        elif isinstance(c, (lang.Save, lang.Print)):
            pending.append((c, env))
        elif isinstance(c, lang.Import):
            raise ElaborationError("unresolved import; run resolve_imports first", c.pos)
    goals = []
    for c, genv in pending:
        node = el.expr(c.expr, genv)
        if isinstance(c, lang.Save):
            goals.append(Goal("save", el._path(c.path), node, c.pos))
        else:
            goals.append(Goal("print", c.label, node, c.pos))
    return el.factory, goals


_CONST_SIG = operators.Signature((), NUMBER, lambda ctx, value: value)


def _load_impl(ctx, path):
    return imgio.load_model(path, ctx.adjacency)


_LOAD_SIG = operators.Signature((), MODEL, _load_impl)


def type_check(factory, goals):
    """Assign each formula its type and implementation, and number it.

    UIDs are contiguous from 0 and every argument's UID exceeds that of the
    formula using it, so counting down from the largest UID respects all
    dependencies.
    """
    n = len(factory)
    types = [None] * n
    impls = [None] * n
    for idx, (op, args, value) in enumerate(factory.nodes):
        if op == CONST:
            types[idx], impls[idx] = NUMBER, _CONST_SIG.fn
            continue
        if op == LOAD:
            types[idx], impls[idx] = MODEL, _LOAD_SIG.fn
            continue
        arg_types = [types[a] for a in args]
        sig = operators.resolve(op, arg_types)
        if sig is None:
            shown = arg_types[1:] if op in operators.IMPLICIT_MODEL else arg_types
            expected = "; ".join(
                "(" + ", ".join(map(str, s.params[1:] if op in operators.IMPLICIT_MODEL else s.params)) + ")"
                for s in operators.OPERATORS[op])
            raise TypeCheckError(
                f"operator '{op}' cannot be applied to ({', '.join(map(str, shown))}); "
                f"expected one of {expected}", factory.positions[idx])
        types[idx], impls[idx] = sig.result, sig.fn

    for g in goals:
        t = types[g.uid]
        if g.kind == "save" and t not in (VBOOL, VNUM):
            raise TypeCheckError(f"save needs an image (Valuation) value, got {t}", g.pos)
        if g.kind == "print" and t not in (NUMBER, BOOL, STRING):
            raise TypeCheckError(f"print needs a Number, Bool or String, got {t}", g.pos)

    def uid(idx):
        return n - 1 - idx

    formulas = [None] * n
    out_types = [None] * n
    out_impls = [None] * n
    positions = [None] * n
    for idx, (op, args, value) in enumerate(factory.nodes):
        u = uid(idx)
        formulas[u] = Formula(u, op, tuple(uid(a) for a in args), value)
        out_types[u] = types[idx]
        out_impls[u] = impls[idx]
        positions[u] = factory.positions[idx]
    new_goals = [Goal(g.kind, g.target, uid(g.uid), g.pos) for g in goals]
    return TaskGraph(formulas, out_types, out_impls, positions, new_goals)


@dataclass
class RunResult:
    prints: list = field(default_factory=list)  # (label, value) in completion order
    saved: list = field(default_factory=list)
    values: dict = field(default_factory=dict)  # goal index -> value, when kept
    evaluations: list = field(default_factory=list)  # per-UID evaluation counts
    elapsed: float = 0.0


def _run_task(graph, ctx, results, counts, u):
    counts[u] += 1
    f = graph.formulas[u]
    args = [results[a] for a in f.args]
    if f.op in (CONST, LOAD):
        args = [f.value]
    return graph.impls[u](ctx, *args)


def _wrap(graph, u, exc):
    where = graph.describe(u)
    pos = graph.positions[u]
    suffix = f" (in {where}" + (f" at {pos})" if pos else ")")
    if isinstance(exc, ImageIOError):
        return ImageIOError(f"{exc}{suffix}")
    if isinstance(exc, ImgQLError):
        msg = exc.message if hasattr(exc, "message") else str(exc)
        return EvaluationError(f"{msg}{suffix}")
    return EvaluationError(f"{type(exc).__name__}: {exc}{suffix}")


def execute(graph, workers=1, ctx=None, on_goal=None, free_results=True):
    """Evaluate every formula once, in dependency order, on ``workers`` threads.

    ``on_goal(goal, value)`` runs on the calling thread as soon as a goal's
    value exists. Results no longer needed by any pending task or goal are
    dropped unless ``free_results`` is false. Returns ``(results, counts)``.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    ctx = ctx or EvalContext(workers=workers)
    n = len(graph)
    needed = [False] * n
    stack = [g.uid for g in graph.goals]
    while stack:
        u = stack.pop()
        if not needed[u]:
            needed[u] = True
            stack.extend(graph.formulas[u].args)

    remaining = [0] * n
    uses = [0] * n
    dependents = [[] for _ in range(n)]
    for f in graph.formulas:
        if not needed[f.uid]:
            continue
        distinct = set(f.args)
        remaining[f.uid] = len(distinct)
        for a in distinct:
            dependents[a].append(f.uid)
            uses[a] += 1
    goals_by_uid = {}
    for g in graph.goals:
        goals_by_uid.setdefault(g.uid, []).append(g)
        uses[g.uid] += 1

    results = [None] * n
    counts = [0] * n
    error = None
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending = {}

        def submit(u):
            pending[pool.submit(_run_task, graph, ctx, results, counts, u)] = u

        for u in range(n - 1, -1, -1):
            if needed[u] and remaining[u] == 0:
                submit(u)
        while pending:
            done, _ = wait(list(pending), return_when=FIRST_COMPLETED)
            for fut in sorted(done, key=lambda d: -pending[d]):
                u = pending.pop(fut)
                exc = fut.exception()
                if error is not None:
                    continue
                if exc is not None:
                    error = _wrap(graph, u, exc)
                    continue
                results[u] = fut.result()
                for g in goals_by_uid.get(u, ()):
                    if on_goal is not None:
                        try:
                            on_goal(g, results[u])
                        except ImgQLError as goal_exc:
                            error = goal_exc
                    uses[u] -= 1
                if error is not None:
                    continue
                for d in sorted(dependents[u], reverse=True):
                    remaining[d] -= 1
                    if remaining[d] == 0:
                        submit(d)
                if free_results:
                    for a in set(graph.formulas[u].args):
                        uses[a] -= 1
                        if uses[a] == 0:
                            results[a] = None
                    if uses[u] == 0:
                        results[u] = None
    if error is not None:
        raise error
    return results, counts


class Program:
    """A parsed, elaborated and type-checked script, ready to run."""

    def __init__(self, commands, base_dir=".", adjacency=DEFAULT_ADJACENCY):
        self.commands = commands
        self.base_dir = base_dir
        self.adjacency = adjacency
        factory, goals = elaborate(commands, base_dir)
        self.graph = type_check(factory, goals)

    @classmethod
    def from_file(cls, path, search_paths=(), adjacency=DEFAULT_ADJACENCY):
        commands = lang.load_script(path, search_paths)
        return cls(commands, os.path.dirname(os.path.abspath(path)), adjacency)

    @classmethod
    def from_source(cls, source, base_dir=".", search_paths=(), adjacency=DEFAULT_ADJACENCY,
                    file="<string>"):
        commands = lang.resolve_imports(lang.parse_program(source, file), search_paths, base_dir)
        return cls(commands, base_dir, adjacency)

    @property
    def goals(self):
        return self.graph.goals

    def run(self, workers=1, on_event=None, keep_values=False, free_results=True, save=True):
        """Evaluate the program, writing ``save`` goals and collecting ``print`` values.

        ``on_event(kind, target, value, elapsed_ms)`` is called for every goal
        as it completes.
        """
        ctx = EvalContext(workers=workers, adjacency=self.adjacency)
        out = RunResult()
        index = {id(g): i for i, g in enumerate(self.graph.goals)}
        start = time.perf_counter()

        def on_goal(goal, value):
            if goal.kind == "save":
                if save:
                    imgio.save_field(goal.target, value)
                    out.saved.append(goal.target)
            else:
                value = value.item() if hasattr(value, "item") else value
                out.prints.append((goal.target, value))
            if keep_values or goal.kind == "print":
                out.values[index[id(goal)]] = value
            if on_event is not None:
                elapsed = (time.perf_counter() - start) * 1000.0
                on_event(goal.kind, goal.target, None if goal.kind == "save" else value, elapsed)

        _, counts = execute(self.graph, workers, ctx, on_goal, free_results)
        out.evaluations = counts
        out.elapsed = time.perf_counter() - start
        return out

    def goal_value(self, result, target):
        """The kept value of the first goal whose label or path is ``target``."""
        for i, g in enumerate(self.graph.goals):
            if g.target == target or os.path.basename(g.target) == target:
                return result.values[i]
        raise KeyError(target)
