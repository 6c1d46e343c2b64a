import pytest

from numplan.cli import run_cli
from numplan.generators import gen_instance

COUNTER = """
(define (domain counter)
  (:requirements :fluents)
  (:predicates (done) (never))
  (:functions (v))
  (:action inc :parameters () :precondition (and) :effect (increase (v) 1))
  (:action dec :parameters () :precondition (and) :effect (decrease (v) 1))
  (:action finish :parameters () :precondition (>= (v) 2) :effect (done)))
"""


def _problem(goal, init_v=0):
    return f"""
(define (problem p) (:domain counter)
  (:init (= (v) {init_v}))
  (:goal {goal}))
"""


@pytest.fixture
def files(tmp_path):
    def write(**texts):
        paths = {}
        for name, text in texts.items():
            p = tmp_path / name
            p.write_text(text)
            paths[name] = str(p)
        return paths
    return write


def test_solve_trivial(files, capsys):
    f = files(d=COUNTER, p=_problem("(>= (v) 0)"))
    assert run_cli(["solve", f["d"], f["p"]]) == 0
    out, err = capsys.readouterr()
    assert "; length=0" in out
    assert "stage=" in err


def test_solve_and_validate(files, capsys):
    f = files(d=COUNTER, p=_problem("(done)"))
    assert run_cli(["solve", f["d"], f["p"]]) == 0
    plan = capsys.readouterr().out
    assert "; length=3" in plan
    g = files(plan=plan)
    assert run_cli(["validate", f["d"], f["p"], g["plan"]]) == 0
    assert "plan valid" in capsys.readouterr().err


def test_validate_corrupted_plan(files, capsys):
    f = files(d=COUNTER, p=_problem("(done)"), bad="0: (inc)\n1: (finish)\n", junk="(fly)\n")
    assert run_cli(["validate", f["d"], f["p"], f["bad"]]) == 1
    assert "step 1" in capsys.readouterr().err
    assert run_cli(["validate", f["d"], f["p"], f["junk"]]) == 1


def test_decide(files, capsys):
    f = files(d=COUNTER, p=_problem("(>= (v) 5)"), q=_problem("(never)"))
    assert run_cli(["decide", f["d"], f["p"]]) == 0
    assert capsys.readouterr().out.startswith("solvable")
    assert run_cli(["decide", f["d"], f["q"]]) == 1
    assert capsys.readouterr().out.startswith("unsolvable")


def test_unsolved_exits_one(files, capsys):
    f = files(d=COUNTER, p=_problem("(never)"), q=_problem("(and (< (v) 0) (> (v) 0))"))
    assert run_cli(["solve", f["d"], f["p"]]) == 1
    # relaxed-solvable but impossible: only the expansion cap stops the search
    assert run_cli(["solve", "--max-expansions", "200", f["d"], f["q"]]) == 1
    assert "unsolved" in capsys.readouterr().err


def test_analyze_reports_inversion(files, capsys):
    f = files(d=COUNTER, p=_problem("(< (v) -1)"))
    assert run_cli(["analyze", f["d"], f["p"]]) == 0
    out = capsys.readouterr().out
    assert "lnf: ok" in out and "acyclic: yes" in out
    assert "(v)<->-(v)" in out


def test_dump_rpg(files, capsys):
    f = files(d=COUNTER, p=_problem("(done)"))
    assert run_cli(["solve", "--dump-rpg", f["d"], f["p"]]) == 0
    err = capsys.readouterr().err
    assert "finallayer=3" in err and "; relaxed plan:" in err


def test_input_errors(files, capsys):
    f = files(d=COUNTER, p=_problem("(done)"), broken="(define (problem")
    assert run_cli(["solve", f["d"], f["broken"]]) == 2
    assert run_cli(["solve", f["d"], "/nonexistent/p.pddl"]) == 2
    assert run_cli(["solve", "--wg", "x", f["d"], f["p"]]) == 2
    assert run_cli(["gen", "no-such-family", "1", "0"]) == 2
    assert run_cli([]) == 2


def test_gen_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_cli(["gen", "depot-lite", "2", "7", "--out", str(a)]) == 0
    assert run_cli(["gen", "depot-lite", "2", "7", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir()) and len(names) == 3
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    inst = gen_instance("depot-lite", 2, 7)
    assert (a / "depot-lite-2-7-problem.pddl").read_text() == inst.problem
    stem = str(a / "depot-lite-2-7")
    assert run_cli(["validate", stem + "-domain.pddl", stem + "-problem.pddl", stem + ".plan"]) == 0


def test_bench_small(capsys):
    assert run_cli(["bench", "zeno-lite", "--max-size", "1", "--seeds", "1"]) == 0
    assert "solved 1/1" in capsys.readouterr().out
