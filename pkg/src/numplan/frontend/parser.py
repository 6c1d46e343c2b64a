"""Reader for the conjunctive numeric subset of PDDL 2.1 (level 2).

Accepted: typed STRIPS with positive conjunctive preconditions and goals,
numeric comparisons, add/delete effects, increase/decrease/assign, and an
optional ``:metric``. Symbols are case-insensitive; ``;`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from ..model import q


class ParseError(Exception):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg = msg
        self.line = line
        self.col = col
        where = f"line {line}, column {col}: " if line else ""
        super().__init__(where + msg)


class UnsupportedFeature(ParseError):
    """Construct outside the accepted subset (quantifiers, disjunction, ...)."""


class UninitializedFluent(ParseError):
    """A fluent is used without an ``(= (f ...) value)`` entry in :init."""


class Sym(str):
    """Token text with its source position."""

    line: int
    col: int

    def __new__(cls, text: str, line: int = 0, col: int = 0):
        s = super().__new__(cls, text)
        s.line = line
        s.col = col
        return s


class SList(list):
    line: int = 0
    col: int = 0


def tokenize(text: str) -> list:
    toks = []
    line, col = 1, 1
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch.isspace():
            i += 1
            col += 1
            continue
        if ch == ";":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if ch in "()":
            toks.append(Sym(ch, line, col))
            i += 1
            col += 1
            continue
        start, scol = i, col
        while i < n and not text[i].isspace() and text[i] not in "();":
            i += 1
            col += 1
        toks.append(Sym(text[start:i].lower(), line, scol))
    return toks


def read_sexpr(text: str):
    toks = tokenize(text)
    if not toks:
        raise ParseError("empty input")
    pos = 0

    def read():
        nonlocal pos
        if pos >= len(toks):
            last = toks[-1]
            raise ParseError("unexpected end of input", last.line, last.col)
        tok = toks[pos]
        pos += 1
        if tok == "(":
            out = SList()
            out.line, out.col = tok.line, tok.col
            while True:
                if pos >= len(toks):
                    raise ParseError("unbalanced '('", tok.line, tok.col)
                if toks[pos] == ")":
                    pos += 1
                    return out
                out.append(read())
        if tok == ")":
            raise ParseError("unexpected ')'", tok.line, tok.col)
        return tok

    expr = read()
    if pos != len(toks):
        t = toks[pos]
        raise ParseError("trailing input after the top-level expression", t.line, t.col)
    return expr


def _pos(x):
    return getattr(x, "line", 0), getattr(x, "col", 0)


def _err(x, msg, cls=ParseError):
    line, col = _pos(x)
    return cls(msg, line, col)


# -- AST ----------------------------------------------------------------------

# Numeric expressions are tuples:
#   ("num", Rational) | ("fluent", name, args) | ("op", op, left, right)
NumExpr = tuple


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple


@dataclass(frozen=True)
class Comparison:
    comp: str
    lhs: NumExpr
    rhs: NumExpr


@dataclass(frozen=True)
class NumericUpdate:
    op: str  # ":=", "+=", "-="
    fluent: tuple  # (name, args)
    rhs: NumExpr


@dataclass
class OperatorSchema:
    name: str
    params: list  # [(var, type)]
    pre_atoms: list
    pre_comparisons: list
    add: list
    delete: list
    updates: list


@dataclass
class Domain:
    name: str
    requirements: list
    types: dict  # type -> parent
    constants: list  # [(name, type)]
    predicates: dict  # name -> [(var, type)]
    functions: dict  # name -> [(var, type)]
    operators: list


@dataclass
class Problem:
    name: str
    domain_name: str
    objects: list
    init_atoms: list
    init_values: dict  # (name, args) -> Rational
    goal_atoms: list
    goal_comparisons: list
    metric: Optional[tuple] = None  # (direction, NumExpr)


@dataclass
class ParsedTask:
    domain: Domain
    problem: Problem


SUPPORTED_REQUIREMENTS = {":strips", ":typing", ":fluents", ":numeric-fluents"}
UNSUPPORTED_KEYWORDS = {
    "forall", "exists", "or", "imply", "when", "either",
    "scale-up", "scale-down",
}
COMPARATORS = {"<", "<=", "=", ">=", ">"}


def _expect_list(x, what):
    if not isinstance(x, list):
        raise _err(x, f"expected a list for {what}, got {x!r}")
    return x


def parse_typed_list(items, default="object", variables=False):
    out = []
    pending = []
    i = 0
    while i < len(items):
        tok = items[i]
        if isinstance(tok, list):
            head = tok[0] if tok else tok
            if head == "either":
                raise _err(tok, "(either ...) types are not supported", UnsupportedFeature)
            raise _err(tok, "unexpected list in typed list")
        if tok == "-":
            if i + 1 >= len(items):
                raise _err(tok, "missing type after '-'")
            typ = items[i + 1]
            if isinstance(typ, list):
                raise _err(typ, "(either ...) types are not supported", UnsupportedFeature)
            out.extend((p, str(typ)) for p in pending)
            pending = []
            i += 2
            continue
        if variables and not tok.startswith("?"):
            raise _err(tok, f"expected a variable, got {tok!r}")
        pending.append(str(tok))
        i += 1
    out.extend((p, default) for p in pending)
    return out


def parse_number(tok) -> Optional[Fraction]:
    try:
        return q(Fraction(str(tok)))
    except (ValueError, ZeroDivisionError):
        return None


def parse_num_expr(x, params: set, functions: dict) -> NumExpr:
    if not isinstance(x, list):
        n = parse_number(x)
        if n is not None:
            return ("num", n)
        if x.startswith("?"):
            raise _err(x, f"object parameter {x} used as a number")
        if x in functions and not functions[x]:
            return ("fluent", str(x), ())
        raise _err(x, f"unknown numeric term {x!r}")
    if not x:
        raise _err(x, "empty numeric expression")
    head = x[0]
    if isinstance(head, list):
        raise _err(x, "malformed numeric expression")
    if head in ("+", "*") and len(x) >= 3:
        acc = parse_num_expr(x[1], params, functions)
        for sub in x[2:]:
            acc = ("op", str(head), acc, parse_num_expr(sub, params, functions))
        return acc
    if head == "-" and len(x) == 2:
        return ("op", "-", ("num", 0), parse_num_expr(x[1], params, functions))
    if head in ("-", "/") and len(x) == 3:
        return ("op", str(head), parse_num_expr(x[1], params, functions),
                parse_num_expr(x[2], params, functions))
    if head in functions:
        args = tuple(str(a) for a in x[1:])
        if len(args) != len(functions[head]):
            raise _err(x, f"function {head} expects {len(functions[head])} arguments")
        for a in x[1:]:
            if isinstance(a, list):
                raise _err(a, "nested terms are not supported as function arguments")
            if a.startswith("?") and a not in params:
                raise _err(a, f"undeclared parameter {a}")
        return ("fluent", str(head), args)
    raise _err(x, f"unknown numeric expression head {head!r}")


def _check_args(x, args, params, arity, what):
    if len(args) != arity:
        raise _err(x, f"{what} expects {arity} arguments, got {len(args)}")
    for a in args:
        if isinstance(a, list):
            raise _err(a, "nested terms are not supported")
        if a.startswith("?") and a not in params:
            raise _err(a, f"undeclared parameter {a}")


def parse_condition(x, params, predicates, functions, atoms, comparisons):
    x = _expect_list(x, "condition")
    if not x:
        return
    head = x[0]
    if isinstance(head, list):
        raise _err(x, "malformed condition")
    if head == "and":
        for sub in x[1:]:
            parse_condition(sub, params, predicates, functions, atoms, comparisons)
        return
    if head in UNSUPPORTED_KEYWORDS:
        raise _err(head, f"'{head}' is outside the supported subset", UnsupportedFeature)
    if head == "not":
        raise _err(head, "negative conditions are outside the supported subset", UnsupportedFeature)
    if head in COMPARATORS:
        if len(x) != 3:
            raise _err(x, f"comparison {head} needs two operands")
        comparisons.append(Comparison(
            str(head),
            parse_num_expr(x[1], params, functions),
            parse_num_expr(x[2], params, functions),
        ))
        return
    if head in predicates:
        args = tuple(str(a) for a in x[1:])
        _check_args(x, x[1:], params, len(predicates[head]), f"predicate {head}")
        atoms.append(Atom(str(head), args))
        return
    raise _err(head, f"unknown predicate {head!r}")


def parse_effect(x, params, predicates, functions, schema: OperatorSchema):
    x = _expect_list(x, "effect")
    if not x:
        return
    head = x[0]
    if head == "and":
        for sub in x[1:]:
            parse_effect(sub, params, predicates, functions, schema)
        return
    if head in UNSUPPORTED_KEYWORDS:
        raise _err(head, f"'{head}' is outside the supported subset", UnsupportedFeature)
    if head == "not":
        if len(x) != 2 or not isinstance(x[1], list) or not x[1]:
            raise _err(x, "malformed delete effect")
        inner = x[1]
        if inner[0] not in predicates:
            raise _err(inner, f"unknown predicate {inner[0]!r}")
        _check_args(inner, inner[1:], params, len(predicates[inner[0]]), f"predicate {inner[0]}")
        schema.delete.append(Atom(str(inner[0]), tuple(str(a) for a in inner[1:])))
        return
    if head in ("increase", "decrease", "assign"):
        if len(x) != 3:
            raise _err(x, f"{head} needs a fluent and an expression")
        target = parse_num_expr(x[1], params, functions)
        if target[0] != "fluent":
            raise _err(x[1], f"{head} target must be a fluent")
        op = {"increase": "+=", "decrease": "-=", "assign": ":="}[head]
        schema.updates.append(NumericUpdate(op, (target[1], target[2]),
                                            parse_num_expr(x[2], params, functions)))
        return
    if head in predicates:
        _check_args(x, x[1:], params, len(predicates[head]), f"predicate {head}")
        schema.add.append(Atom(str(head), tuple(str(a) for a in x[1:])))
        return
    raise _err(head, f"unknown effect {head!r}")


def _section_dict(items):
    """Split ``:key value`` pairs inside an action definition."""
    out = {}
    i = 0
    while i < len(items):
        key = items[i]
        if isinstance(key, list) or not key.startswith(":"):
            raise _err(key, f"expected a keyword, got {key!r}")
        if i + 1 >= len(items):
            raise _err(key, f"missing value for {key}")
        out[str(key)] = items[i + 1]
        i += 2
    return out


def parse_domain(text: str) -> Domain:
    x = read_sexpr(text)
    if not isinstance(x, list) or len(x) < 2 or x[0] != "define":
        raise _err(x, "domain must start with (define ...)")
    header = x[1]
    if not isinstance(header, list) or len(header) != 2 or header[0] != "domain":
        raise _err(header, "expected (domain <name>)")
    dom = Domain(str(header[1]), [], {"object": None}, [], {}, {}, [])
    for sec in x[2:]:
        sec = _expect_list(sec, "domain section")
        key = sec[0] if sec else None
        if key == ":requirements":
            for r in sec[1:]:
                if r not in SUPPORTED_REQUIREMENTS:
                    raise _err(r, f"requirement {r} is not supported", UnsupportedFeature)
                dom.requirements.append(str(r))
        elif key == ":types":
            for name, parent in parse_typed_list(sec[1:]):
                dom.types[name] = parent
                dom.types.setdefault(parent, "object" if parent != "object" else None)
        elif key == ":constants":
            dom.constants.extend(parse_typed_list(sec[1:]))
        elif key == ":predicates":
            for p in sec[1:]:
                p = _expect_list(p, "predicate declaration")
                dom.predicates[str(p[0])] = parse_typed_list(p[1:], variables=True)
        elif key == ":functions":
            items = list(sec[1:])
            i = 0
            while i < len(items):
                f = items[i]
                if f == "-":
                    if i + 1 >= len(items) or items[i + 1] != "number":
                        raise _err(f, "only numeric functions are supported", UnsupportedFeature)
                    i += 2
                    continue
                f = _expect_list(f, "function declaration")
                dom.functions[str(f[0])] = parse_typed_list(f[1:], variables=True)
                i += 1
        elif key == ":action":
            dom.operators.append(_parse_action(sec, dom))
        elif key in (":durative-action", ":derived", ":process", ":event", ":constraints"):
            raise _err(key, f"{key} is outside the supported subset", UnsupportedFeature)
        else:
            raise _err(sec, f"unknown domain section {key!r}")
    return dom


def _parse_action(sec, dom: Domain) -> OperatorSchema:
    if len(sec) < 2:
        raise _err(sec, "action without a name")
    name = str(sec[1])
    parts = _section_dict(sec[2:])
    for k in parts:
        if k not in (":parameters", ":precondition", ":effect"):
            raise _err(k, f"unknown action keyword {k}")
    params = parse_typed_list(_expect_list(parts.get(":parameters", SList()), "parameters"),
                              variables=True)
    pnames = {p for p, _ in params}
    for _, t in params:
        if t not in dom.types:
            raise _err(sec, f"unknown type {t!r} in action {name}")
    schema = OperatorSchema(name, params, [], [], [], [], [])
    if ":precondition" in parts:
        parse_condition(parts[":precondition"], pnames, dom.predicates, dom.functions,
                        schema.pre_atoms, schema.pre_comparisons)
    if ":effect" in parts:
        parse_effect(parts[":effect"], pnames, dom.predicates, dom.functions, schema)
    return schema


def _ground_fluents(e: NumExpr, out: set):
    if e[0] == "fluent":
        out.add((e[1], e[2]))
    elif e[0] == "op":
        _ground_fluents(e[2], out)
        _ground_fluents(e[3], out)


def parse_problem(text: str, dom: Domain) -> Problem:
    x = read_sexpr(text)
    if not isinstance(x, list) or len(x) < 2 or x[0] != "define":
        raise _err(x, "problem must start with (define ...)")
    header = x[1]
    if not isinstance(header, list) or len(header) != 2 or header[0] != "problem":
        raise _err(header, "expected (problem <name>)")
    prob = Problem(str(header[1]), "", [], [], {}, [], [])
    for sec in x[2:]:
        sec = _expect_list(sec, "problem section")
        key = sec[0] if sec else None
        if key == ":domain":
            prob.domain_name = str(sec[1])
            if prob.domain_name != dom.name:
                raise _err(sec[1], f"problem is for domain {prob.domain_name!r}, not {dom.name!r}")
        elif key == ":requirements":
            for r in sec[1:]:
                if r not in SUPPORTED_REQUIREMENTS:
                    raise _err(r, f"requirement {r} is not supported", UnsupportedFeature)
        elif key == ":objects":
            prob.objects.extend(parse_typed_list(sec[1:]))
        elif key == ":init":
            for fact in sec[1:]:
                fact = _expect_list(fact, "init entry")
                if fact and fact[0] == "=":
                    if len(fact) != 3:
                        raise _err(fact, "malformed fluent initialization")
                    f = fact[1] if isinstance(fact[1], list) else SList([fact[1]])
                    if f[0] not in dom.functions:
                        raise _err(f, f"unknown function {f[0]!r}")
                    val = parse_number(fact[2])
                    if val is None:
                        raise _err(fact[2], "fluent initial value must be a number")
                    prob.init_values[(str(f[0]), tuple(str(a) for a in f[1:]))] = val
                elif fact and (fact[0] == "not" or fact[0] == "at" and "at" not in dom.predicates):
                    raise _err(fact[0], f"'{fact[0]}' in :init is not supported", UnsupportedFeature)
                else:
                    if not fact or fact[0] not in dom.predicates:
                        raise _err(fact, f"unknown predicate in :init: {fact!r}")
                    prob.init_atoms.append(Atom(str(fact[0]), tuple(str(a) for a in fact[1:])))
        elif key == ":goal":
            parse_condition(sec[1], set(), dom.predicates, dom.functions,
                            prob.goal_atoms, prob.goal_comparisons)
        elif key == ":metric":
            if len(sec) != 3 or sec[1] not in ("minimize", "maximize"):
                raise _err(sec, "expected (:metric minimize|maximize <expr>)")
            prob.metric = (str(sec[1]), parse_num_expr(sec[2], set(), dom.functions))
        else:
            raise _err(sec, f"unknown problem section {key!r}")
    used: set = set()
    for c in prob.goal_comparisons:
        _ground_fluents(c.lhs, used)
        _ground_fluents(c.rhs, used)
    if prob.metric:
        _ground_fluents(prob.metric[1], used)
    for f in sorted(used):
        if f not in prob.init_values:
            raise UninitializedFluent(f"fluent ({' '.join((f[0],) + f[1])}) has no initial value")
    return prob


def parse_task(domain_text: str, problem_text: str) -> ParsedTask:
    dom = parse_domain(domain_text)
    return ParsedTask(dom, parse_problem(problem_text, dom))
