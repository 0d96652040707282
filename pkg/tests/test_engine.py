import numpy as np
import pytest

from conftest import bools, nums
from imgql import engine
from imgql.engine import Program
from imgql.errors import ElaborationError, EvaluationError, ImageIOError, TypeCheckError
from imgql.imgio import save_field
from imgql.operators import BOOL, MODEL, NUMBER, VBOOL, VNUM


@pytest.fixture
def scan(tmp_path, rng):
    data = rng.random((12, 10))
    data[0, 0] = 0.0
    save_field(str(tmp_path / "scan.nii"), nums(data))
    return tmp_path, data


def program(tmp_path, body, header='load img = "scan.nii"\nlet f = intensity(img)\n'):
    return Program.from_source(header + body, base_dir=str(tmp_path))


def ops(prog):
    return [f.op for f in prog.graph.formulas]


class TestElaboration:
    def test_shared_subexpression_gets_one_uid(self, scan):
        tmp, _ = scan
        prog = program(tmp, 'let g(x) = x + x\nprint "y" max(g(f))\n')
        plus = [f for f in prog.graph.formulas if f.op == "+"]
        assert len(plus) == 1
        (arg,) = set(plus[0].args)
        assert prog.graph.formulas[arg].op == "intensity"

    def test_unused_lets_create_nothing(self, scan):
        tmp, _ = scan
        prog = program(tmp, 'let unused = near(f > 0.3)\nprint "m" max(f)\n')
        assert "near" not in ops(prog)
        assert sorted(ops(prog)) == sorted(["max", "intensity", "load"])

    def test_unbound_name(self, scan):
        tmp, _ = scan
        with pytest.raises(ElaborationError) as err:
            program(tmp, 'print "m" max(nothere)\n')
        assert err.value.pos.line == 3

    def test_arity(self, scan):
        tmp, _ = scan
        for src in ('let g(a) = a\nprint "m" max(g(f, f))\n', 'print "m" max(f, f)\n',
                    'let g(a) = a\nprint "m" max(g)\n'):
            with pytest.raises(ElaborationError):
                program(tmp, src)

    def test_unused_unbound_name_is_ignored(self, scan):
        tmp, _ = scan
        program(tmp, 'let broken = nothere\nprint "m" max(f)\n')

    def test_let_shadows_builtin_and_scopes_are_lexical(self, scan):
        tmp, data = scan
        prog = program(tmp, 'let k = 2\nlet h(x) = x * k\nlet k = 100\nlet max(a) = 7\nprint "v" h(3)\nprint "w" max(f)\n')
        res = prog.run()
        assert dict(res.prints) == {"v": 6.0, "w": 7.0}

    def test_idempotent_uids(self, scan):
        tmp, _ = scan
        src = 'let g(x) = near(x) & x\nprint "v" volume(g(f > 0.5) | g(f < 0.2))\n'
        a, b = program(tmp, src), program(tmp, src)
        assert a.graph.formulas == b.graph.formulas

    def test_argument_uids_exceed_parent(self, scan):
        tmp, _ = scan
        prog = program(tmp, 'import "stdlib.imgql"\nprint "v" volume(grow(f > 0.5, touch(f > 0.3, border)))\n')
        uids = [f.uid for f in prog.graph.formulas]
        assert uids == list(range(len(uids)))
        for f in prog.graph.formulas:
            assert all(a > f.uid for a in f.args)

    def test_implicit_model_needs_a_load(self, tmp_path):
        with pytest.raises(ElaborationError):
            Program.from_source('print "b" volume(border)\n', base_dir=str(tmp_path))

    def test_deep_substitution_stays_small(self, scan):
        tmp, _ = scan
        lines = ["let s0 = f > 0.5"]
        for i in range(1, 40):
            lines.append(f"let s{i} = (s{i-1} | s{i-1}) & (s{i-1} | s{i-1})")
        prog = program(tmp, "\n".join(lines) + '\nprint "v" volume(s39)\n')
        assert len(prog.graph) < 100


class TestTypes:
    def test_types(self, scan):
        tmp, _ = scan
        prog = program(tmp, 'print "v" volume(f > 0.1)\n')
        by_op = {f.op: prog.graph.types[f.uid] for f in prog.graph.formulas}
        assert by_op == {"load": MODEL, "intensity": VNUM, "const": NUMBER, ">": VBOOL, "volume": NUMBER}

    def test_mismatch_before_evaluation(self, scan):
        tmp, _ = scan
        with pytest.raises(TypeCheckError) as err:
            program(tmp, 'save "never.nii" f & border\n')
        assert "&" in str(err.value) and "Valuation(Number)" in str(err.value)
        assert not (tmp / "never.nii").exists()

    def test_goal_types(self, scan):
        tmp, _ = scan
        with pytest.raises(TypeCheckError):
            program(tmp, 'save "x.nii" max(f)\n')
        with pytest.raises(TypeCheckError):
            program(tmp, 'print "x" f\n')
        prog = program(tmp, 'print "b" max(f) > 0\n')
        assert prog.graph.types[prog.goals[0].uid] == BOOL


class TestExecute:
    def test_exactly_once(self, scan):
        tmp, _ = scan
        prog = program(tmp, 'let g(x) = x + x\nprint "a" max(g(f) * g(f))\nprint "b" min(g(f))\n')
        for workers in (1, 4):
            res = prog.run(workers=workers)
            assert res.evaluations == [1] * len(prog.graph)

    def test_values(self, scan):
        tmp, data = scan
        prog = program(tmp, 'print "max" max(f)\nprint "vol" volume(f > 0.5)\nprint "t" 1 < 2\n')
        res = prog.run()
        assert dict(res.prints) == {"max": float(data.astype(np.float32).max()), "vol": float((data > 0.5).sum()), "t": True}

    def test_dependency_order(self, scan):
        tmp, _ = scan
        prog = program(tmp, 'print "v" volume(near(near(f > 0.5)))\n')
        order = []
        original = prog.graph.impls[:]

        def tracer(u, fn):
            def run(ctx, *args):
                order.append(u)
                return fn(ctx, *args)
            return run

        prog.graph.impls = [tracer(u, fn) for u, fn in enumerate(original)]
        prog.run(workers=4)
        pos = {u: i for i, u in enumerate(order)}
        for f in prog.graph.formulas:
            for a in f.args:
                assert pos[a] < pos[f.uid]

    def test_saves_and_worker_invariance(self, scan):
        tmp, _ = scan
        src = ('import "stdlib.imgql"\nsave "o/a.nii" grow(f > 0.8, f > 0.4)\n'
               'save "o/b.nii.gz" crossCorrelation(2, f, f, f > 0.5, 0, 1, 8)\n'
               'save "o/c.png" distance(f > 0.9)\n')
        outputs = []
        for workers in (1, 3, 8):
            prog = program(tmp, src)
            res = prog.run(workers=workers)
            assert len(res.saved) == 3
            outputs.append([open(p, "rb").read() for p in sorted(res.saved)])
        assert outputs[0] == outputs[1] == outputs[2]

    def test_free_results_does_not_change_output(self, scan):
        tmp, _ = scan
        src = 'let a = f > 0.3\nprint "x" volume(near(a) & a)\nprint "y" volume(a)\n'
        assert program(tmp, src).run(free_results=True).prints == program(tmp, src).run(free_results=False).prints

    def test_keep_values(self, scan):
        tmp, data = scan
        prog = program(tmp, 'save "o.nii" f > 0.5\n')
        res = prog.run(keep_values=True, save=False)
        assert np.array_equal(prog.goal_value(res, "o.nii").data, data > 0.5)
        assert not (tmp / "o.nii").exists()

    def test_runtime_error_names_expression(self, scan):
        tmp, _ = scan
        prog = program(tmp, 'print "p" max(percentiles(f, f > 5))\n')
        with pytest.raises(EvaluationError) as err:
            prog.run()
        assert "percentiles" in str(err.value) and "empty" in str(err.value)

    def test_zero_over_zero(self, scan):
        tmp, _ = scan
        with pytest.raises(EvaluationError):
            program(tmp, 'print "z" 0 / 0\n').run()

    def test_missing_image(self, tmp_path):
        prog = Program.from_source('load img = "absent.png"\nprint "m" max(intensity(img))\n',
                                   base_dir=str(tmp_path))
        with pytest.raises(ImageIOError):
            prog.run()

    def test_geometry_mismatch(self, scan):
        tmp, _ = scan
        save_field(str(tmp / "other.nii"), nums(np.zeros((3, 3))))
        prog = program(tmp, 'load o = "other.nii"\nprint "v" volume(f > intensity(o))\n')
        with pytest.raises(EvaluationError) as err:
            prog.run()
        assert "geometry" in str(err.value)

    def test_events(self, scan):
        tmp, _ = scan
        seen = []
        program(tmp, 'print "m" max(f)\nsave "s.nii" f > 0\n').run(on_event=lambda *e: seen.append(e))
        kinds = sorted(e[0] for e in seen)
        assert kinds == ["print", "save"] and all(e[3] >= 0 for e in seen)

    def test_implicit_model_builtins(self, scan):
        tmp, data = scan
        res = program(tmp, 'print "b" volume(border)\nprint "t" volume(tt)\nprint "f" volume(ff)\n').run()
        assert dict(res.prints) == {"b": 2.0 * 12 + 2 * 8, "t": 120.0, "f": 0.0}

    def test_adjacency_setting(self, scan):
        tmp, _ = scan
        diag = np.zeros((12, 10))
        diag[3, 3] = diag[4, 4] = 1
        save_field(str(tmp / "scan.nii"), nums(diag))
        src = 'let a = f > 0.5\nprint "v" volume(near(a))\n'
        ortho = Program.from_source('load img = "scan.nii"\nlet f = intensity(img)\n' + src,
                                    base_dir=str(tmp), adjacency="orthogonal").run()
        full = program(tmp, src).run()
        assert dict(ortho.prints)["v"] == 8.0 and dict(full.prints)["v"] == 14.0


def test_execute_rejects_bad_workers(scan):
    tmp, _ = scan
    with pytest.raises(ValueError):
        engine.execute(program(tmp, 'print "m" max(f)\n').graph, workers=0)


def test_bool_field_helpers_roundtrip():
    # fields compare by value, independent of adjacency
    a = bools([[1, 0]])
    b = bools([[1, 0]], adjacency="orthogonal")
    assert a.same_values(b)
