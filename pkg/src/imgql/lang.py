"""ImgQL lexing, parsing, pretty-printing and import resolution.

A script is a sequence of commands::

    import "stdlib.imgql"
    let grow(a, b) = (a | touch(b, a))
    load img = "scan.nii.gz"
    let flair = intensity(img)
    print "max" max(flair)
    save "out.nii" flair > 0.5

Binary operators, weakest first: ``|``; ``&``; ``> < >= <= =``; ``+ -``;
``* /``. All are left-associative. Prefix ``!`` binds tighter than any
binary operator.
"""

from dataclasses import dataclass
import os
import re

from .errors import ImportFailure, LexError, ParseError, Pos

KEYWORDS = ("let", "load", "save", "print", "import")
INFIX_LEVELS = (
    ("|",),
    ("&",),
    (">", "<", ">=", "<=", "="),
    ("+", "-"),
    ("*", "/"),
)
INFIX_OPS = tuple(op for level in INFIX_LEVELS for op in level)
PREFIX_OPS = ("!",)
OPERATOR_NAMES = INFIX_OPS + PREFIX_OPS


@dataclass(frozen=True)
class Token:
    kind: str  # ident, number, string, op, eof
    text: str
    pos: Pos


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*)
  | (?P<number>[0-9]+(?:\.[0-9]+)?)
  | (?P<ident>[A-Za-z][A-Za-z0-9]*)
  | (?P<string>"[^"\n]*")
  | (?P<op>>=|<=|[|&!+\-*/><=,()])
""", re.VERBOSE)


def tokenize(source, file="<string>"):
    """Split ``source`` into tokens, ending with an ``eof`` token."""
    tokens = []
    line, line_start, i = 1, 0, 0
    n = len(source)
    while i < n:
        mo = _TOKEN_RE.match(source, i)
        pos = Pos(file, line, i - line_start + 1)
        if mo is None:
            if source[i] == '"':
                raise LexError("unterminated string literal", pos)
            raise LexError(f"illegal character {source[i]!r}", pos)
        kind = mo.lastgroup
        text = mo.group()
        if kind == "string":
            tokens.append(Token("string", text[1:-1], pos))
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, text, pos))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            line_start = i + text.rindex("\n") + 1
        i = mo.end()
    tokens.append(Token("eof", "", Pos(file, line, i - line_start + 1)))
    return tokens


# -- syntax tree ---------------------------------------------------------

@dataclass(frozen=True)
class Number:
    value: float
    pos: Pos = None


@dataclass(frozen=True)
class Identifier:
    name: str
    pos: Pos = None


@dataclass(frozen=True)
class Application:
    """``name(args...)``; prefix ``!e`` is ``Application("!", (e,))``."""

    name: str
    args: tuple
    pos: Pos = None


@dataclass(frozen=True)
class InfixApplication:
    op: str
    left: object
    right: object
    pos: Pos = None


@dataclass(frozen=True)
class LetFunction:
    name: str
    params: tuple
    body: object
    pos: Pos = None


@dataclass(frozen=True)
class LetConstant:
    name: str
    body: object
    pos: Pos = None


@dataclass(frozen=True)
class Load:
    name: str
    path: str
    pos: Pos = None


@dataclass(frozen=True)
class Save:
    path: str
    expr: object
    pos: Pos = None


@dataclass(frozen=True)
class Print:
    label: str
    expr: object
    pos: Pos = None


@dataclass(frozen=True)
class Import:
    path: str
    pos: Pos = None


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, kind, text=None):
        tok = self.tok
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind, text=None, hint=None):
        if not self.at(kind, text):
            want = hint or (repr(text) if text else kind)
            got = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise ParseError(f"expected {want}, found {got}", self.tok.pos)
        return self.advance()

    def name(self, hint):
        tok = self.expect("ident", hint=hint)
        if tok.text in KEYWORDS:
            raise ParseError(f"keyword {tok.text!r} cannot be used as a name", tok.pos)
        return tok

    def program(self):
        commands = []
        while not self.at("eof"):
            commands.append(self.command())
        return commands

    def command(self):
        tok = self.tok
        if tok.kind != "ident" or tok.text not in KEYWORDS:
            raise ParseError(f"expected a command ({', '.join(KEYWORDS)}), found {tok.text!r}", tok.pos)
        self.advance()
        if tok.text == "let":
            if self.at("op") and self.tok.text in OPERATOR_NAMES:
                name = self.advance().text
            else:
                name = self.name("a name after 'let'").text
            if self.at("op", "("):
                params = self.params()
                self.expect("op", "=")
                return LetFunction(name, params, self.expr(), tok.pos)
            if name in OPERATOR_NAMES:
                raise ParseError(f"operator {name!r} must be defined with parameters", tok.pos)
            self.expect("op", "=")
            return LetConstant(name, self.expr(), tok.pos)
        if tok.text == "load":
            name = self.name("a name after 'load'").text
            self.expect("op", "=")
            return Load(name, self.expect("string", hint="a file name string").text, tok.pos)
        if tok.text == "save":
            path = self.expect("string", hint="a file name string").text
            return Save(path, self.expr(), tok.pos)
        if tok.text == "print":
            label = self.expect("string", hint="a label string").text
            return Print(label, self.expr(), tok.pos)
        return Import(self.expect("string", hint="a file name string").text, tok.pos)

    def params(self):
        self.expect("op", "(")
        names = [self.name("a parameter name")]
        while self.at("op", ","):
            self.advance()
            names.append(self.name("a parameter name"))
        self.expect("op", ")", hint="')' or ','")
        seen = set()
        for t in names:
            if t.text in seen:
                raise ParseError(f"duplicate parameter {t.text!r}", t.pos)
            seen.add(t.text)
        return tuple(t.text for t in names)

    def expr(self, level=0):
        if level == len(INFIX_LEVELS):
            return self.prefix()
        left = self.expr(level + 1)
        while self.tok.kind == "op" and self.tok.text in INFIX_LEVELS[level]:
            op = self.advance()
            right = self.expr(level + 1)
            left = InfixApplication(op.text, left, right, op.pos)
        return left

    def prefix(self):
        if self.at("op", "!"):
            tok = self.advance()
            return Application("!", (self.prefix(),), tok.pos)
        return self.atom()

    def atom(self):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Number(float(tok.text), tok.pos)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect("op", ")")
            return inner
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.advance()
            if not self.at("op", "("):
                return Identifier(tok.text, tok.pos)
            self.advance()
            args = [self.expr()]
            while self.at("op", ","):
                self.advance()
                args.append(self.expr())
            self.expect("op", ")", hint="')' or ','")
            return Application(tok.text, tuple(args), tok.pos)
        got = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise ParseError(f"expected an expression, found {got}", tok.pos)


def parse_program(source, file="<string>"):
    """Parse a whole script into its list of commands."""
    if isinstance(source, str):
        source = tokenize(source, file)
    return _Parser(source).program()


def parse_expr(source, file="<string>"):
    p = _Parser(tokenize(source, file))
    e = p.expr()
    p.expect("eof", hint="end of input")
    return e


# -- printing ------------------------------------------------------------

def format_number(v):
    return str(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(float(v))


def pretty_expr(e):
    """Source text for ``e``; every infix application is parenthesised."""
    if isinstance(e, Number):
        return format_number(e.value)
    if isinstance(e, Identifier):
        return e.name
    if isinstance(e, InfixApplication):
        return f"({pretty_expr(e.left)} {e.op} {pretty_expr(e.right)})"
    if isinstance(e, Application):
        if e.name in PREFIX_OPS:
            return f"{e.name}{pretty_expr(e.args[0])}"
        return f"{e.name}({', '.join(pretty_expr(a) for a in e.args)})"
    raise TypeError(f"not an expression: {e!r}")


def pretty_command(c):
    if isinstance(c, LetFunction):
        return f"let {c.name}({', '.join(c.params)}) = {pretty_expr(c.body)}"
    if isinstance(c, LetConstant):
        return f"let {c.name} = {pretty_expr(c.body)}"
    if isinstance(c, Load):
        return f'load {c.name} = "{c.path}"'
    if isinstance(c, Save):
        return f'save "{c.path}" {pretty_expr(c.expr)}'
    if isinstance(c, Print):
        return f'print "{c.label}" {pretty_expr(c.expr)}'
    if isinstance(c, Import):
        return f'import "{c.path}"'
    raise TypeError(f"not a command: {c!r}")


def pretty_program(commands):
    return "".join(pretty_command(c) + "\n" for c in commands)


# -- imports -------------------------------------------------------------

LIBRARY_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "library")


def _find(path, base_dir, search_paths):
    if os.path.isabs(path):
        return path if os.path.isfile(path) else None
    for d in (base_dir, *search_paths, LIBRARY_DIR):
        candidate = os.path.join(d, path)
        if os.path.isfile(candidate):
            return candidate
    return None


def resolve_imports(commands, search_paths=(), base_dir=".", seen=None):
    """Inline imported libraries depth-first, each canonical file at most once.

    Imports are looked up in the importing file's directory, then in
    ``search_paths``, then in the bundled library directory. Imported files
    may only contain ``let`` and ``import`` commands.
    """
    seen = set() if seen is None else seen
    out = []
    for c in commands:
        if not isinstance(c, Import):
            out.append(c)
            continue
        found = _find(c.path, base_dir, search_paths)
        if found is None:
            raise ImportFailure(f"cannot find imported file {c.path!r}", c.pos)
        canonical = os.path.realpath(found)
        if canonical in seen:
            continue
        seen.add(canonical)
        try:
            with open(canonical, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ImportFailure(f"cannot read {c.path!r}: {exc}", c.pos) from exc
        library = parse_program(text, canonical)
        for lc in library:
            if not isinstance(lc, (LetFunction, LetConstant, Import)):
                kind = type(lc).__name__.lower()
                raise ImportFailure(
                    f"imported file {c.path!r} may only contain let or import commands, "
                    f"found '{kind}' at {lc.pos}", c.pos)
        out.extend(resolve_imports(library, search_paths, os.path.dirname(canonical), seen))
    return out


def load_script(path, search_paths=()):
    """Read, parse and import-resolve the script at ``path``."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    commands = parse_program(text, path)
    return resolve_imports(commands, search_paths, os.path.dirname(os.path.abspath(path)),
                           {os.path.realpath(path)})
