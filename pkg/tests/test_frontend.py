from fractions import Fraction

import pytest

from numplan.frontend import (
    ParseError,
    UninitializedFluent,
    UnsupportedFeature,
    find_statics,
    load_task,
    parse_domain,
)
from numplan.frontend.parser import read_sexpr
from numplan.model import successor

DOMAIN = """
(define (domain trucks)
  (:requirements :typing :fluents)
  (:types city truck)
  (:predicates (at ?t - truck ?c - city) (road ?a - city ?b - city))
  (:functions (fuel ?t - truck) (dist ?a - city ?b - city) (used))
  (:action drive
    :parameters (?t - truck ?a - city ?b - city)
    :precondition (and (at ?t ?a) (road ?a ?b) (>= (fuel ?t) (dist ?a ?b)))
    :effect (and (not (at ?t ?a)) (at ?t ?b)
                 (decrease (fuel ?t) (dist ?a ?b))
                 (increase (used) (dist ?a ?b)))))
"""

PROBLEM = """
(define (problem two)
  (:domain trucks)
  (:objects a b c - city t1 - truck)
  (:init (at t1 a) (road a b) (road b c)
         (= (fuel t1) 5) (= (used) 0)
         (= (dist a b) 2) (= (dist b c) 3/2))
  (:goal (at t1 c))
  (:metric minimize (used)))
"""


def test_grounding_prunes_static_roads():
    t = load_task(DOMAIN, PROBLEM)
    assert [a.name for a in t.actions] == ["(drive t1 a b)", "(drive t1 b c)"]
    # roads and distances are static and vanish from the state
    assert "(road a b)" not in t.props
    assert [v.name for v in t.vars] == ["(fuel t1)", "(used)"]
    assert t.init.vals == (5, 0)


def test_grounded_plan_runs():
    t = load_task(DOMAIN, PROBLEM)
    s = t.init
    for a in t.actions:
        s = successor(s, a)
        assert s is not None
    assert s.vals == (Fraction(3, 2), Fraction(7, 2))
    assert t.goal.props <= {i for i in range(len(t.props)) if s.props >> i & 1}


def test_statics_report():
    rep = find_statics(parse_domain(DOMAIN))
    assert rep.predicates == {"road"}
    assert rep.fluents == {"dist"}


def test_positions_in_errors():
    with pytest.raises(ParseError) as exc:
        read_sexpr("(define\n  (domain x)")
    assert "unbalanced" in str(exc.value) and exc.value.line == 1
    with pytest.raises(ParseError) as exc:
        read_sexpr("(a))")
    assert exc.value.line == 1


def test_unsupported_constructs():
    text = DOMAIN.replace("(at ?t ?a) (road", "(or (at ?t ?a)) (road")
    with pytest.raises(UnsupportedFeature):
        parse_domain(text)
    text = DOMAIN.replace("(and (at ?t ?a)", "(and (not (at ?t ?b)) (at ?t ?a)")
    with pytest.raises(UnsupportedFeature):
        parse_domain(text)


def test_uninitialized_fluents():
    with pytest.raises(UninitializedFluent):
        load_task(DOMAIN, PROBLEM.replace("(= (fuel t1) 5)", ""))
    # a static fluent read by a reachable binding
    with pytest.raises(UninitializedFluent):
        load_task(DOMAIN, PROBLEM.replace("(= (dist b c) 3/2)", ""))


def test_conflicting_assignments_rejected():
    text = DOMAIN.replace("(increase (used) (dist ?a ?b))",
                          "(assign (used) 1) (assign (used) 2)")
    with pytest.raises(ParseError):
        load_task(text, PROBLEM)


def test_same_fluent_updates_merge():
    text = DOMAIN.replace("(increase (used) (dist ?a ?b))",
                          "(increase (used) (dist ?a ?b)) (decrease (used) 1)")
    t = load_task(text, PROBLEM)
    (eff,) = [e for e in t.actions[0].eff.numeffs if t.vars[e.var].name == "(used)"]
    assert eff.op == "+=" and eff.rhs.evaluate(t.init.vals) == 1


def test_unreachable_goal_atom_is_false():
    t = load_task(DOMAIN, PROBLEM.replace("(:goal (at t1 c))", "(:goal (road c a))"))
    assert not t.goal.constraints[0].holds(t.init.vals)


def test_domain_mismatch():
    with pytest.raises(ParseError):
        load_task(DOMAIN, PROBLEM.replace("(:domain trucks)", "(:domain boats)"))
