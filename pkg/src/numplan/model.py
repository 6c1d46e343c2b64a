"""Ground numeric planning tasks and their exact execution semantics.

Values are exact rationals. Integral values are kept as ``int`` and
everything else as :class:`fractions.Fraction`; both are exact and mix
freely, the int form just keeps the hot paths cheap.

An undefined value (division by zero) is represented by ``None`` and
propagates: a constraint over an undefined value does not hold, and an
action whose effect right-hand side is undefined is not applicable.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

Rational = Union[int, Fraction]

COMPARATORS = ("<", "<=", "=", ">=", ">")
ASSIGN_OPS = (":=", "+=", "-=")

_COMPARE: dict[str, Callable] = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}


class ExecutionError(Exception):
    """Base class for failures of real action execution."""


class NotApplicable(ExecutionError):
    """The action's precondition does not hold in the state."""


class UndefinedEffect(ExecutionError):
    """An effect right-hand side divides by zero in the state."""


def q(x) -> Rational:
    """Normalize a number to the canonical exact form (int when integral)."""
    if isinstance(x, int):
        return x
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else x
    if isinstance(x, float):
        raise TypeError("floats are not exact; convert explicitly with Fraction(str(x))")
    f = Fraction(x)
    return f.numerator if f.denominator == 1 else f


def qdiv(a: Rational, b: Rational) -> Optional[Rational]:
    if b == 0:
        return None
    return q(Fraction(a) / b)


def format_rational(x) -> str:
    if isinstance(x, float):
        return "inf" if x > 0 else "-inf"
    x = q(x)
    return str(x)


# -- expressions --------------------------------------------------------------


class Expr:
    """Arithmetic expression tree over numeric variables and rationals."""

    __slots__ = ()

    def evaluate(self, vals: Sequence[Rational]) -> Optional[Rational]:
        raise NotImplementedError

    def variables(self) -> frozenset[int]:
        raise NotImplementedError

    def __add__(self, other):
        return BinOp("+", self, _wrap(other))

    def __sub__(self, other):
        return BinOp("-", self, _wrap(other))

    def __mul__(self, other):
        return BinOp("*", self, _wrap(other))

    def __truediv__(self, other):
        return BinOp("/", self, _wrap(other))

    def __radd__(self, other):
        return BinOp("+", _wrap(other), self)

    def __rsub__(self, other):
        return BinOp("-", _wrap(other), self)

    def __rmul__(self, other):
        return BinOp("*", _wrap(other), self)

    def __neg__(self):
        return BinOp("-", Const(0), self)


def _wrap(x) -> Expr:
    return x if isinstance(x, Expr) else Const(q(x))


@dataclass(frozen=True, eq=True)
class Const(Expr):
    value: Rational

    def evaluate(self, vals):
        return self.value

    def variables(self):
        return frozenset()

    def __str__(self):
        return format_rational(self.value)


@dataclass(frozen=True, eq=True)
class Var(Expr):
    index: int

    def evaluate(self, vals):
        return vals[self.index]

    def variables(self):
        return frozenset((self.index,))

    def __str__(self):
        return f"v{self.index}"


@dataclass(frozen=True, eq=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in "+-*/":
            raise ValueError(f"unknown operator {self.op!r}")

    def evaluate(self, vals):
        a = self.left.evaluate(vals)
        if a is None:
            return None
        b = self.right.evaluate(vals)
        if b is None:
            return None
        op = self.op
        if op == "+":
            return q(a + b)
        if op == "-":
            return q(a - b)
        if op == "*":
            return q(a * b)
        return qdiv(a, b)

    def variables(self):
        return self.left.variables() | self.right.variables()

    def __str__(self):
        return f"({self.op} {self.left} {self.right})"


def eval_expr(e: Expr, vals: Sequence[Rational]) -> Optional[Rational]:
    """Value of ``e`` under ``vals``, or None if a division by zero occurs."""
    return e.evaluate(vals)


# -- conditions and effects ---------------------------------------------------


@dataclass(frozen=True)
class Constraint:
    lhs: Expr
    comp: str
    rhs: Expr

    def __post_init__(self):
        if self.comp not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.comp!r}")

    def holds(self, vals: Sequence[Rational]) -> bool:
        a = self.lhs.evaluate(vals)
        if a is None:
            return False
        b = self.rhs.evaluate(vals)
        if b is None:
            return False
        return _COMPARE[self.comp](a, b)

    def variables(self) -> frozenset[int]:
        return self.lhs.variables() | self.rhs.variables()

    def __str__(self):
        return f"({self.comp} {self.lhs} {self.rhs})"


@dataclass(frozen=True)
class NumEffect:
    var: int
    op: str
    rhs: Expr

    def __post_init__(self):
        if self.op not in ASSIGN_OPS:
            raise ValueError(f"unsupported assignment operator {self.op!r}")

    def outcome(self, vals: Sequence[Rational]) -> Optional[Rational]:
        """New value of the affected variable, or None if undefined."""
        r = self.rhs.evaluate(vals)
        if r is None:
            return None
        if self.op == ":=":
            return r
        if self.op == "+=":
            return q(vals[self.var] + r)
        return q(vals[self.var] - r)

    def variables(self) -> frozenset[int]:
        return self.rhs.variables()

    def __str__(self):
        return f"(v{self.var} {self.op} {self.rhs})"


@dataclass(frozen=True)
class Condition:
    props: frozenset = frozenset()
    constraints: tuple = ()


@dataclass(frozen=True)
class Effect:
    adds: frozenset = frozenset()
    dels: frozenset = frozenset()
    numeffs: tuple = ()

    def __post_init__(self):
        seen = set()
        for ne in self.numeffs:
            if ne.var in seen:
                raise ValueError(f"variable v{ne.var} affected twice by one effect")
            seen.add(ne.var)


def mask_of(ids: Iterable[int]) -> int:
    m = 0
    for i in ids:
        m |= 1 << i
    return m


def ids_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(eq=False)
class Action:
    """A ground action. Constraints and numeric effects are duck-typed: any
    object with ``holds(vals)`` / ``outcome(vals)`` and ``var`` works, which
    lets the same execution code run original and normalized tasks."""

    id: int
    name: str
    pre: Condition
    eff: Effect
    cost: Rational = 0
    pre_mask: int = field(init=False, repr=False)
    add_mask: int = field(init=False, repr=False)
    del_mask: int = field(init=False, repr=False)

    def __post_init__(self):
        self.pre_mask = mask_of(self.pre.props)
        self.add_mask = mask_of(self.eff.adds)
        self.del_mask = mask_of(self.eff.dels)

    @property
    def constraints(self):
        return self.pre.constraints

    @property
    def numeffs(self):
        return self.eff.numeffs

    def __repr__(self):
        return f"Action({self.id}, {self.name!r})"


@dataclass(frozen=True, slots=True)
class State:
    props: int
    vals: tuple

    def has(self, p: int) -> bool:
        return bool(self.props >> p & 1)

    def prop_ids(self) -> list[int]:
        return ids_of(self.props)


@dataclass(frozen=True)
class NumVar:
    id: int
    name: str
    inverse_of: Optional[int] = None


@dataclass(frozen=True)
class MetricSpec:
    direction: str  # "minimize" | "maximize"
    expr: Expr

    def __post_init__(self):
        if self.direction not in ("minimize", "maximize"):
            raise ValueError(f"bad metric direction {self.direction!r}")


@dataclass(eq=False)
class NumericTask:
    props: list
    vars: list
    actions: list
    init: State
    goal: Condition
    metric: Optional[MetricSpec] = None
    name: str = "task"
    goal_mask: int = field(init=False, repr=False)

    def __post_init__(self):
        self.goal_mask = mask_of(self.goal.props)
        if len(self.init.vals) != len(self.vars):
            raise ValueError("initial value vector does not match the variable count")
        for i, a in enumerate(self.actions):
            if a.id != i:
                raise ValueError("action ids must be dense and ordered")

    @property
    def n_vars(self) -> int:
        return len(self.vars)

    def action_by_name(self, name: str) -> Optional[Action]:
        index = self.__dict__.get("_by_name")
        if index is None:
            index = {a.name: a for a in self.actions}
            self.__dict__["_by_name"] = index
        return index.get(name)

    def var_index(self, name: str) -> int:
        for v in self.vars:
            if v.name == name:
                return v.id
        raise KeyError(name)


@dataclass
class Plan:
    """Ordered action ids of the task the plan was built for."""

    steps: list = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def names(self, task: NumericTask) -> list[str]:
        return [task.actions[i].name for i in self.steps]


# -- semantics ----------------------------------------------------------------


def holds(c, s: State) -> bool:
    return c.holds(s.vals)


def condition_holds(props_mask: int, constraints, s: State) -> bool:
    if props_mask & ~s.props:
        return False
    vals = s.vals
    for c in constraints:
        if not c.holds(vals):
            return False
    return True


def is_applicable(s: State, a: Action) -> bool:
    return condition_holds(a.pre_mask, a.pre.constraints, s)


def successor(s: State, a: Action) -> Optional[State]:
    """result(s, a), or None when the action is not applicable.

    Every right-hand side reads the incoming state.
    """
    if a.pre_mask & ~s.props:
        return None
    vals = s.vals
    for c in a.pre.constraints:
        if not c.holds(vals):
            return None
    numeffs = a.eff.numeffs
    if numeffs:
        new = list(vals)
        for ne in numeffs:
            v = ne.outcome(vals)
            if v is None:
                return None
            new[ne.var] = v
        vals = tuple(new)
    return State((s.props & ~a.del_mask) | a.add_mask, vals)


def apply_action(s: State, a: Action) -> State:
    """Real execution of ``a`` in ``s``; raises on inapplicability."""
    if not is_applicable(s, a):
        raise NotApplicable(a.name)
    new = list(s.vals)
    for ne in a.eff.numeffs:
        v = ne.outcome(s.vals)
        if v is None:
            raise UndefinedEffect(f"{a.name}: right-hand side of {ne} is undefined")
        new[ne.var] = v
    return State((s.props & ~a.del_mask) | a.add_mask, tuple(new))


def is_goal(s: State, t: NumericTask) -> bool:
    return condition_holds(t.goal_mask, t.goal.constraints, s)


def applicable_actions(t: NumericTask, s: State) -> list[Action]:
    return [a for a in t.actions if is_applicable(s, a)]
