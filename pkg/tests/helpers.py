"""Task builders, random task generators and brute-force oracles for tests."""

from __future__ import annotations

import random
from collections import deque
from fractions import Fraction

from numplan.model import (
    Action,
    BinOp,
    Condition,
    Const,
    Constraint,
    Effect,
    MetricSpec,
    NumEffect,
    NumericTask,
    NumVar,
    State,
    Var,
    is_goal,
    mask_of,
    successor,
)
from numplan.relaxation import relaxed_successor

COMPS = ("<", "<=", "=", ">=", ">")


def make_task(props, var_names, actions, init_props, init_vals,
              goal_props=(), goal_cons=(), metric=None) -> NumericTask:
    """Build a task from names.

    ``actions`` holds tuples (name, pre_props, constraints, adds, dels,
    numeffs); proposition arguments are names, everything numeric is
    already in Expr form over variable indices.
    """
    pid = {p: i for i, p in enumerate(props)}
    acts = []
    for i, (name, pre, cons, adds, dels, effs) in enumerate(actions):
        acts.append(Action(
            i, name,
            Condition(frozenset(pid[p] for p in pre), tuple(cons)),
            Effect(frozenset(pid[p] for p in adds), frozenset(pid[p] for p in dels), tuple(effs)),
        ))
    return NumericTask(
        list(props), [NumVar(i, n) for i, n in enumerate(var_names)], acts,
        State(mask_of(pid[p] for p in init_props), tuple(init_vals)),
        Condition(frozenset(pid[p] for p in goal_props), tuple(goal_cons)),
        metric,
    )


def ge(var: int, c) -> Constraint:
    return Constraint(Var(var), ">=", Const(c))


def naive_eval(e, vals):
    """Reference evaluator on plain Fractions; None on division by zero."""
    if isinstance(e, Const):
        return Fraction(e.value)
    if isinstance(e, Var):
        return Fraction(vals[e.index])
    a, b = naive_eval(e.left, vals), naive_eval(e.right, vals)
    if a is None or b is None:
        return None
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    return None if b == 0 else a / b


# -- random tasks --------------------------------------------------------------


def random_linear(rng: random.Random, n_vars: int, max_terms: int = 2, pool=None):
    pool = range(n_vars) if pool is None else pool
    terms = rng.randint(0, max_terms) if pool else 0
    e = Const(rng.randint(-5, 5))
    for v in rng.sample(pool, min(terms, len(pool))):
        k = rng.choice([c for c in range(-5, 6) if c != 0])
        t = Var(v) if k == 1 else BinOp("*", Const(k), Var(v))
        e = BinOp("+", t, e) if rng.random() < 0.5 else BinOp("+", e, t)
    if rng.random() < 0.1:
        e = BinOp("/", e, Const(rng.choice([2, 3, -2])))
    return e


def random_constraint(rng, n_vars):
    return Constraint(random_linear(rng, n_vars), rng.choice(COMPS), random_linear(rng, n_vars, 1))


def random_task(rng: random.Random, max_props=8, max_vars=4, max_actions=10,
                ops=(":=", "+=", "-="), metric=False, acyclic=True) -> NumericTask:
    """Random linear task; constants in [-5, 5]."""
    n_p = rng.randint(1, max_props)
    n_v = rng.randint(1, max_vars)
    n_a = rng.randint(1, max_actions)
    props = [f"p{i}" for i in range(n_p)]

    def some_props(k):
        return rng.sample(props, rng.randint(0, min(k, n_p)))

    actions = []
    for i in range(n_a):
        effs = []
        for v in rng.sample(range(n_v), rng.randint(0, min(2, n_v))):
            op = rng.choice(ops)
            # := reads lower-indexed variables only, which keeps it acyclic
            pool = range(v) if op == ":=" and acyclic else None
            effs.append(NumEffect(v, op, random_linear(rng, n_v, pool=pool)))
        cons = [random_constraint(rng, n_v) for _ in range(rng.randint(0, 2))]
        actions.append((f"a{i}", some_props(2), cons, some_props(2), some_props(2), effs))
    goal_cons = [random_constraint(rng, n_v) for _ in range(rng.randint(0, 2))]
    goal_props = some_props(2)
    m = None
    if metric:
        m = MetricSpec("minimize", Var(rng.randrange(n_v)))
    return make_task(
        props, [f"x{i}" for i in range(n_v)], actions,
        some_props(n_p), [rng.randint(-5, 5) for _ in range(n_v)],
        goal_props, goal_cons, m,
    )


def random_restricted_task(rng: random.Random, max_props=8, max_vars=4, max_actions=10):
    """Constraints v >=|> c, effects v +=|-= c with c > 0."""
    n_p = rng.randint(1, max_props)
    n_v = rng.randint(1, max_vars)
    props = [f"p{i}" for i in range(n_p)]

    def cons(k):
        return [Constraint(Var(rng.randrange(n_v)), rng.choice((">=", ">")), Const(rng.randint(-5, 5)))
                for _ in range(rng.randint(0, k))]

    def some_props(k):
        return rng.sample(props, rng.randint(0, min(k, n_p)))

    actions = []
    for i in range(rng.randint(1, max_actions)):
        effs = [NumEffect(v, rng.choice(("+=", "-=")), Const(rng.randint(1, 5)))
                for v in rng.sample(range(n_v), rng.randint(0, min(2, n_v)))]
        actions.append((f"a{i}", some_props(2), cons(2), some_props(2), some_props(2), effs))
    return make_task(
        props, [f"x{i}" for i in range(n_v)], actions,
        some_props(n_p), [rng.randint(-5, 5) for _ in range(n_v)],
        some_props(2), cons(2),
    )


def random_walk(rng: random.Random, t, s: State, length: int) -> tuple:
    """(action ids, states) of a random real execution from ``s``."""
    ids, states = [], [s]
    for _ in range(length):
        succ = [(a.id, s2) for a in t.actions if (s2 := successor(s, a)) is not None]
        if not succ:
            break
        a_id, s = rng.choice(succ)
        ids.append(a_id)
        states.append(s)
    return ids, states


# -- brute-force oracles --------------------------------------------------------


def exhaustive_search(t, s: State, step, limit: int):
    """Breadth-first search with exact duplicate detection.

    Returns "solvable", "unsolvable" (space exhausted) or "unknown" when more
    than ``limit`` states were generated.
    """
    if is_goal(s, t):
        return "solvable"
    seen = {s}
    queue = deque([s])
    while queue:
        cur = queue.popleft()
        for a in t.actions:
            nxt = step(cur, a)
            if nxt is None or nxt in seen:
                continue
            if is_goal(nxt, t):
                return "solvable"
            seen.add(nxt)
            if len(seen) > limit:
                return "unknown"
            queue.append(nxt)
    return "unsolvable"


def finite_reachable(t, s: State, limit: int):
    """The whole real reachable set from ``s`` when it has at most ``limit``
    states, else None."""
    seen = {s}
    queue = deque([s])
    while queue:
        cur = queue.popleft()
        for a in t.actions:
            nxt = successor(cur, a)
            if nxt is None or nxt in seen:
                continue
            seen.add(nxt)
            if len(seen) > limit:
                return None
            queue.append(nxt)
    return seen


def real_search(t, s: State, limit: int = 10_000) -> str:
    return exhaustive_search(t, s, successor, limit)


def relaxed_search(t, s: State, limit: int = 10_000) -> str:
    return exhaustive_search(t, s, relaxed_successor, limit)


def dominates(big: State, small: State) -> bool:
    return (small.props & ~big.props) == 0 and all(x >= y for x, y in zip(big.vals, small.vals))


def relaxed_run(t, s: State, ids) -> State | None:
    """Relaxed replay; None as soon as a step is inapplicable."""
    for a_id in ids:
        s = relaxed_successor(s, t.actions[a_id])
        if s is None:
            return None
    return s
