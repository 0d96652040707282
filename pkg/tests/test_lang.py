import os

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imgql import lang
from imgql.errors import ImportFailure, LexError, ParseError
from imgql.lang import (Application, Identifier, Import, InfixApplication, LetConstant, LetFunction,
                        Load, Number, Print, Save)

SEGMENTATION = os.path.join(lang.LIBRARY_DIR, "tumour_flair.imgql")


def kinds(src):
    return [(t.kind, t.text) for t in lang.tokenize(src)][:-1]


class TestTokenize:
    def test_let(self):
        assert kinds("let x = 0.1") == [("ident", "let"), ("ident", "x"), ("op", "="), ("number", "0.1")]

    def test_maximal_munch(self):
        assert kinds("a>=b") == [("ident", "a"), ("op", ">="), ("ident", "b")]
        assert kinds("a<=b<c") == [("ident", "a"), ("op", "<="), ("ident", "b"), ("op", "<"), ("ident", "c")]

    def test_comment_and_string(self):
        assert kinds('save "out.nii" x // done') == [("ident", "save"), ("string", "out.nii"), ("ident", "x")]

    def test_unterminated_string(self):
        with pytest.raises(LexError) as err:
            lang.tokenize('let a = 1\nprint "oops')
        assert (err.value.pos.line, err.value.pos.col) == (2, 7)

    def test_illegal_character(self):
        with pytest.raises(LexError) as err:
            lang.tokenize("let a = b $ c")
        assert err.value.pos.col == 11
        assert "1:11" in str(err.value)

    def test_positions(self):
        toks = lang.tokenize("let a =\n  b")
        assert (toks[3].pos.line, toks[3].pos.col) == (2, 3)


class TestParse:
    def test_let_function(self):
        (c,) = lang.parse_program("let f(x) = x + 1")
        assert isinstance(c, LetFunction) and c.name == "f" and c.params == ("x",)
        assert isinstance(c.body, InfixApplication) and c.body.op == "+"
        assert c.body.left == Identifier("x", c.body.left.pos)
        assert c.body.right.value == 1.0

    def test_all_command_forms(self):
        cmds = lang.parse_program('import "lib.imgql"\nload m = "a.png"\nlet c = 2\n'
                                  'print "v" c\nsave "o.png" c > 1')
        assert [type(c) for c in cmds] == [Import, Load, LetConstant, Print, Save]
        assert cmds[1].path == "a.png" and cmds[3].label == "v" and cmds[4].path == "o.png"

    @pytest.mark.parametrize("src, expected", [
        ("a | b & c", "(a | (b & c))"),
        ("a & b | c", "((a & b) | c)"),
        ("a + b * c > d - e", "((a + (b * c)) > (d - e))"),
        ("a - b - c", "((a - b) - c)"),
        ("a / b * c", "((a / b) * c)"),
        ("!a & b", "(!a & b)"),
        ("!(a & b)", "!(a & b)"),
        ("f(a, g(b) + 1) <= 2", "(f(a, (g(b) + 1)) <= 2)"),
        ("a = b = c", "((a = b) = c)"),
    ])
    def test_precedence(self, src, expected):
        assert lang.pretty_expr(lang.parse_expr(src)) == expected

    def test_bang_is_an_application(self):
        e = lang.parse_expr("!a")
        assert isinstance(e, Application) and e.name == "!" and len(e.args) == 1

    def test_operator_let(self):
        (c,) = lang.parse_program("let &(a, b) = a")
        assert c.name == "&" and c.params == ("a", "b")

    @pytest.mark.parametrize("src", [
        "let f(x, x) = x", "let = 3", "print x", "save x", "let f() = 1", "let a = (b",
        "let a = b c", "load x = y", "let a = f(b,)", "let let = 1",
    ])
    def test_syntax_errors(self, src):
        with pytest.raises(ParseError):
            lang.parse_program(src)

    def test_error_mentions_expectation(self):
        with pytest.raises(ParseError) as err:
            lang.parse_program("let a = (b")
        assert "expected" in str(err.value)

    def test_segmentation_script_parses(self):
        with open(SEGMENTATION) as fh:
            cmds = lang.parse_program(fh.read())
        assert len(cmds) >= 20
        grow = next(c for c in cmds if isinstance(c, LetFunction) and c.name == "grow")
        assert lang.pretty_expr(grow.body) == "(a | touch(b, a))"

    def test_deterministic(self):
        with open(SEGMENTATION) as fh:
            text = fh.read()
        assert lang.pretty_program(lang.parse_program(text)) == lang.pretty_program(lang.parse_program(text))


names = st.sampled_from(["a", "b", "flair", "x1"])
exprs = st.recursive(
    st.one_of(names.map(Identifier), st.integers(0, 999).map(lambda v: Number(float(v))),
              st.sampled_from([0.5, 2.25, 0.1]).map(Number)),
    lambda inner: st.one_of(
        st.tuples(st.sampled_from(lang.INFIX_OPS), inner, inner).map(lambda t: InfixApplication(*t)),
        inner.map(lambda e: Application("!", (e,))),
        st.tuples(st.sampled_from(["f", "near", "max"]), st.lists(inner, min_size=1, max_size=3))
          .map(lambda t: Application(t[0], tuple(t[1]))),
    ),
    max_leaves=12,
)


@settings(max_examples=200)
@given(exprs)
def test_pretty_parse_fixed_point(e):
    printed = lang.pretty_expr(e)
    again = lang.pretty_expr(lang.parse_expr(printed))
    assert again == printed


def test_program_round_trip():
    with open(SEGMENTATION) as fh:
        once = lang.pretty_program(lang.parse_program(fh.read()))
    assert lang.pretty_program(lang.parse_program(once)) == once


class TestImports:
    def write(self, d, name, text):
        p = d / name
        p.write_text(text)
        return str(p)

    def test_duplicate_import_expanded_once(self, tmp_path):
        self.write(tmp_path, "lib.imgql", "let k = 1\n")
        main = self.write(tmp_path, "main.imgql", 'import "lib.imgql"\nimport "lib.imgql"\nprint "k" k\n')
        cmds = lang.load_script(main)
        assert sum(isinstance(c, LetConstant) and c.name == "k" for c in cmds) == 1

    def test_stdlib_found_in_library(self, tmp_path):
        main = self.write(tmp_path, "main.imgql", 'import "stdlib.imgql"\nimport "stdlib.imgql"\n')
        cmds = lang.load_script(main)
        names = [c.name for c in cmds if isinstance(c, LetFunction)]
        assert names.count("touch") == 1 and "grow" in names and "flt" in names

    def test_self_import_and_cycles_terminate(self, tmp_path):
        self.write(tmp_path, "a.imgql", 'import "b.imgql"\nimport "a.imgql"\nlet a = 1\n')
        self.write(tmp_path, "b.imgql", 'import "a.imgql"\nlet b = 2\n')
        main = self.write(tmp_path, "main.imgql", 'import "a.imgql"\n')
        cmds = lang.load_script(main)
        assert sorted(c.name for c in cmds) == ["a", "b"]

    @pytest.mark.parametrize("bad", ['save "x.nii" k', 'print "k" k', 'load m = "x.png"'])
    def test_library_with_effects_rejected(self, tmp_path, bad):
        self.write(tmp_path, "lib.imgql", f"let k = 1\n{bad}\n")
        main = self.write(tmp_path, "main.imgql", 'import "lib.imgql"\n')
        with pytest.raises(ImportFailure) as err:
            lang.load_script(main)
        assert bad.split()[0] in str(err.value)

    def test_missing(self, tmp_path):
        main = self.write(tmp_path, "main.imgql", 'import "nowhere.imgql"\n')
        with pytest.raises(ImportFailure):
            lang.load_script(main)

    def test_search_paths(self, tmp_path):
        inc = tmp_path / "inc"
        inc.mkdir()
        self.write(inc, "extra.imgql", "let e = 3\n")
        main = self.write(tmp_path, "main.imgql", 'import "extra.imgql"\n')
        with pytest.raises(ImportFailure):
            lang.load_script(main)
        assert lang.load_script(main, [str(inc)])[0].name == "e"

    def test_importing_directory_searched_first(self, tmp_path):
        sub = tmp_path / "sub"
        sub.mkdir()
        self.write(sub, "lib.imgql", 'import "dep.imgql"\n')
        self.write(sub, "dep.imgql", "let which = 1\n")
        self.write(tmp_path, "dep.imgql", "let which = 2\n")
        main = self.write(tmp_path, "main.imgql", 'import "sub/lib.imgql"\n')
        (c,) = lang.load_script(main)
        assert c.body.value == 1.0
