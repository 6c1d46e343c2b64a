"""Deterministic benchmark instances with witness plans.

``zeno-lite``: planes with fuel carry persons between cities; refueling
assigns the tank capacity, zooming burns more fuel and is only allowed with
few passengers on board. ``depot-lite``: hoists move crates between pallets
and trucks whose load may not exceed a weight limit; hoists have finite fuel.
Both minimize a fuel counter. Each instance comes with a plan that solves it,
built alongside the instance.
"""

from __future__ import annotations

import random
from collections import deque
from decimal import Decimal
from fractions import Fraction
from dataclasses import dataclass

FAMILIES = ("zeno-lite", "depot-lite")


@dataclass
class Instance:
    family: str
    size: int
    seed: int
    domain: str
    problem: str
    witness: list  # action names, e.g. "(fly pl0 c0 c1)"

    def witness_text(self) -> str:
        lines = [f"{i}: {a}" for i, a in enumerate(self.witness)]
        lines.append(f"; length={len(self.witness)}")
        return "\n".join(lines) + "\n"


def gen_instance(family: str, size: int, seed: int) -> Instance:
    if size < 1:
        raise ValueError("size must be at least 1")
    rng = random.Random(f"{family}:{size}:{seed}")
    if family == "zeno-lite":
        return _zeno(rng, size, seed)
    if family == "depot-lite":
        return _depot(rng, size, seed)
    raise ValueError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")


def _num(x: Fraction) -> str:
    """Decimal literal for a rational with a power-of-ten-friendly denominator."""
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    return str(Decimal(x.numerator) / Decimal(x.denominator))


# -- zeno-lite ------------------------------------------------------------------------

ZENO_DOMAIN = """\
(define (domain zeno-lite)
  (:requirements :strips :typing :fluents)
  (:types plane person city - object)
  (:predicates (at ?p - plane ?c - city)
               (person-at ?x - person ?c - city)
               (in ?x - person ?p - plane)
               (connected ?a ?b - city))
  (:functions (fuel ?p - plane) (capacity ?p - plane)
              (slow-burn ?p - plane) (fast-burn ?p - plane)
              (distance ?a ?b - city) (onboard ?p - plane)
              (zoom-limit ?p - plane) (total-fuel-used))
  (:action board
    :parameters (?x - person ?p - plane ?c - city)
    :precondition (and (person-at ?x ?c) (at ?p ?c))
    :effect (and (in ?x ?p) (not (person-at ?x ?c))
                 (increase (onboard ?p) 1)))
  (:action debark
    :parameters (?x - person ?p - plane ?c - city)
    :precondition (and (in ?x ?p) (at ?p ?c))
    :effect (and (person-at ?x ?c) (not (in ?x ?p))
                 (decrease (onboard ?p) 1)))
  (:action fly
    :parameters (?p - plane ?a ?b - city)
    :precondition (and (at ?p ?a) (connected ?a ?b)
                       (>= (fuel ?p) (* (distance ?a ?b) (slow-burn ?p))))
    :effect (and (at ?p ?b) (not (at ?p ?a))
                 (decrease (fuel ?p) (* (distance ?a ?b) (slow-burn ?p)))
                 (increase (total-fuel-used) (* (distance ?a ?b) (slow-burn ?p)))))
  (:action zoom
    :parameters (?p - plane ?a ?b - city)
    :precondition (and (at ?p ?a) (connected ?a ?b)
                       (<= (onboard ?p) (zoom-limit ?p))
                       (>= (fuel ?p) (* (distance ?a ?b) (fast-burn ?p))))
    :effect (and (at ?p ?b) (not (at ?p ?a))
                 (decrease (fuel ?p) (* (distance ?a ?b) (fast-burn ?p)))
                 (increase (total-fuel-used) (* (distance ?a ?b) (fast-burn ?p)))))
  (:action refuel
    :parameters (?p - plane ?c - city)
    :precondition (and (at ?p ?c) (< (fuel ?p) (capacity ?p)))
    :effect (and (assign (fuel ?p) (capacity ?p)))))
"""


def _connected_graph(rng, n_cities):
    """Random connected undirected graph: a shuffled path plus extra edges."""
    order = list(range(n_cities))
    rng.shuffle(order)
    edges = set()
    for a, b in zip(order, order[1:]):
        edges.add((min(a, b), max(a, b)))
    extra = rng.randint(0, n_cities)
    for _ in range(extra):
        a, b = rng.sample(range(n_cities), 2) if n_cities > 1 else (0, 0)
        if a != b:
            edges.add((min(a, b), max(a, b)))
    return sorted(edges)


def _shortest_path(adj, src, dst):
    prev = {src: None}
    queue = deque([src])
    while queue:
        x = queue.popleft()
        if x == dst:
            break
        for y in adj[x]:
            if y not in prev:
                prev[y] = x
                queue.append(y)
    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    path.reverse()
    return path


def _zeno(rng, size, seed) -> Instance:
    n_cities = 2 + size // 2
    n_planes = 1 + size // 3
    n_persons = size
    cities = [f"c{i}" for i in range(n_cities)]
    planes = [f"pl{i}" for i in range(n_planes)]
    persons = [f"x{i}" for i in range(n_persons)]
    edges = _connected_graph(rng, n_cities)
    adj = {i: [] for i in range(n_cities)}
    dist = {}
    for a, b in edges:
        d = rng.randint(1, 4)
        dist[a, b] = dist[b, a] = d
        adj[a].append(b)
        adj[b].append(a)
    for lst in adj.values():
        lst.sort()
    max_d = max(dist.values())
    slow = {p: rng.choice((1, 1, 2)) for p in planes}
    fast = {p: slow[p] * rng.choice((2, 3)) for p in planes}
    cap = {p: max_d * slow[p] + rng.randint(0, 6) for p in planes}
    fuel = {p: rng.randint(0, cap[p]) for p in planes}
    zlim = {p: rng.randint(0, 2) for p in planes}
    ploc = {p: rng.randrange(n_cities) for p in planes}
    xloc = {x: rng.randrange(n_cities) for x in persons}
    xdst = {}
    for x in persons:
        choices = [c for c in range(n_cities) if c != xloc[x]]
        xdst[x] = rng.choice(choices)

    init = []
    for p in planes:
        init.append(f"(at {p} {cities[ploc[p]]})")
    for x in persons:
        init.append(f"(person-at {x} {cities[xloc[x]]})")
    for (a, b), d in sorted(dist.items()):
        init.append(f"(connected {cities[a]} {cities[b]})")
        init.append(f"(= (distance {cities[a]} {cities[b]}) {d})")
    for p in planes:
        init += [
            f"(= (fuel {p}) {fuel[p]})", f"(= (capacity {p}) {cap[p]})",
            f"(= (slow-burn {p}) {slow[p]})", f"(= (fast-burn {p}) {fast[p]})",
            f"(= (onboard {p}) 0)", f"(= (zoom-limit {p}) {zlim[p]})",
        ]
    init.append("(= (total-fuel-used) 0)")
    goal = [f"(person-at {x} {cities[xdst[x]]})" for x in persons]

    # witness: one person at a time, each with a fixed plane
    witness = []
    cur = dict(ploc)
    tank = dict(fuel)

    def travel(p, dst):
        path = _shortest_path(adj, cur[p], dst)
        for a, b in zip(path, path[1:]):
            need = dist[a, b] * slow[p]
            if tank[p] < need:
                witness.append(f"(refuel {p} {cities[a]})")
                tank[p] = cap[p]
            witness.append(f"(fly {p} {cities[a]} {cities[b]})")
            tank[p] -= need
            cur[p] = b

    for i, x in enumerate(persons):
        p = planes[i % n_planes]
        travel(p, xloc[x])
        witness.append(f"(board {x} {p} {cities[xloc[x]]})")
        travel(p, xdst[x])
        witness.append(f"(debark {x} {p} {cities[xdst[x]]})")

    problem = _problem_text(
        f"zeno-lite-{size}-{seed}", "zeno-lite",
        [(planes, "plane"), (persons, "person"), (cities, "city")],
        init, goal, "minimize (total-fuel-used)",
    )
    return Instance("zeno-lite", size, seed, ZENO_DOMAIN, problem, witness)


# -- depot-lite -----------------------------------------------------------------------

DEPOT_DOMAIN = """\
(define (domain depot-lite)
  (:requirements :strips :typing :fluents)
  (:types place truck hoist crate pallet - object)
  (:predicates (truck-at ?t - truck ?p - place)
               (hoist-at ?h - hoist ?p - place)
               (pallet-at ?s - pallet ?p - place)
               (on ?c - crate ?s - pallet)
               (clear ?s - pallet)
               (in ?c - crate ?t - truck)
               (lifting ?h - hoist ?c - crate)
               (available ?h - hoist)
               (road ?a ?b - place))
  (:functions (load-limit ?t - truck) (current-load ?t - truck)
              (weight ?c - crate) (hoist-fuel ?h - hoist)
              (distance ?a ?b - place) (fuel-cost))
  (:action drive
    :parameters (?t - truck ?a ?b - place)
    :precondition (and (truck-at ?t ?a) (road ?a ?b))
    :effect (and (truck-at ?t ?b) (not (truck-at ?t ?a))
                 (increase (fuel-cost) (distance ?a ?b))))
  (:action lift
    :parameters (?h - hoist ?c - crate ?s - pallet ?p - place)
    :precondition (and (hoist-at ?h ?p) (pallet-at ?s ?p) (available ?h)
                       (on ?c ?s) (>= (hoist-fuel ?h) 1))
    :effect (and (lifting ?h ?c) (clear ?s) (not (on ?c ?s)) (not (available ?h))
                 (decrease (hoist-fuel ?h) 1) (increase (fuel-cost) 1)))
  (:action drop
    :parameters (?h - hoist ?c - crate ?s - pallet ?p - place)
    :precondition (and (hoist-at ?h ?p) (pallet-at ?s ?p) (lifting ?h ?c) (clear ?s))
    :effect (and (on ?c ?s) (available ?h) (not (lifting ?h ?c)) (not (clear ?s))))
  (:action load
    :parameters (?h - hoist ?c - crate ?t - truck ?p - place)
    :precondition (and (hoist-at ?h ?p) (truck-at ?t ?p) (lifting ?h ?c)
                       (<= (+ (current-load ?t) (weight ?c)) (load-limit ?t)))
    :effect (and (in ?c ?t) (available ?h) (not (lifting ?h ?c))
                 (increase (current-load ?t) (weight ?c))))
  (:action unload
    :parameters (?h - hoist ?c - crate ?t - truck ?p - place)
    :precondition (and (hoist-at ?h ?p) (truck-at ?t ?p) (available ?h) (in ?c ?t)
                       (>= (hoist-fuel ?h) 1))
    :effect (and (lifting ?h ?c) (not (in ?c ?t)) (not (available ?h))
                 (decrease (current-load ?t) (weight ?c))
                 (decrease (hoist-fuel ?h) 1) (increase (fuel-cost) 1))))
"""


def _depot(rng, size, seed) -> Instance:
    n_places = 2 + size // 4
    n_trucks = 1 + size // 5
    n_crates = size
    places = [f"p{i}" for i in range(n_places)]
    hoists = [f"h{i}" for i in range(n_places)]
    trucks = [f"t{i}" for i in range(n_trucks)]
    crates = [f"cr{i}" for i in range(n_crates)]
    pallets = [f"s{i}" for i in range(2 * n_crates)]
    # every place gets at least one pallet; the rest are spread at random
    spal = {}
    for i, s in enumerate(pallets):
        spal[s] = i if i < n_places else rng.randrange(n_places)
    order = list(pallets)
    rng.shuffle(order)
    start = dict(zip(crates, order[:n_crates]))
    target = dict(zip(crates, order[n_crates:]))
    weight = {c: rng.choice((1, 2, 3, 4, 5, Fraction(5, 2), Fraction(3, 2))) for c in crates}
    max_w = max(weight.values())
    limit = {t: max_w + rng.randint(0, 6) for t in trucks}
    tloc = {t: rng.randrange(n_places) for t in trucks}
    dist = {}
    for a in range(n_places):
        for b in range(a + 1, n_places):
            dist[a, b] = dist[b, a] = rng.randint(1, 5)

    init = []
    for i, h in enumerate(hoists):
        init += [f"(hoist-at {h} {places[i]})", f"(available {h})",
                 f"(= (hoist-fuel {h}) {2 * n_crates + 2})"]
    for s in pallets:
        init.append(f"(pallet-at {s} {places[spal[s]]})")
    used = set(start.values())
    for s in pallets:
        if s not in used:
            init.append(f"(clear {s})")
    for c in crates:
        init += [f"(on {c} {start[c]})", f"(= (weight {c}) {_num(weight[c])})"]
    for t in trucks:
        init += [f"(truck-at {t} {places[tloc[t]]})", f"(= (current-load {t}) 0)",
                 f"(= (load-limit {t}) {_num(limit[t])})"]
    for (a, b), d in sorted(dist.items()):
        init += [f"(road {places[a]} {places[b]})", f"(= (distance {places[a]} {places[b]}) {d})"]
    init.append("(= (fuel-cost) 0)")
    goal = [f"(on {c} {target[c]})" for c in crates]

    witness = []
    cur = dict(tloc)
    for i, c in enumerate(crates):
        po, pd = spal[start[c]], spal[target[c]]
        ho, hd = hoists[po], hoists[pd]
        witness.append(f"(lift {ho} {c} {start[c]} {places[po]})")
        if po != pd:
            t = trucks[i % n_trucks]
            if cur[t] != po:
                witness.append(f"(drive {t} {places[cur[t]]} {places[po]})")
            witness.append(f"(load {ho} {c} {t} {places[po]})")
            witness.append(f"(drive {t} {places[po]} {places[pd]})")
            witness.append(f"(unload {hd} {c} {t} {places[pd]})")
            cur[t] = pd
        witness.append(f"(drop {hd} {c} {target[c]} {places[pd]})")

    problem = _problem_text(
        f"depot-lite-{size}-{seed}", "depot-lite",
        [(places, "place"), (trucks, "truck"), (hoists, "hoist"),
         (crates, "crate"), (pallets, "pallet")],
        init, goal, "minimize (fuel-cost)",
    )
    return Instance("depot-lite", size, seed, DEPOT_DOMAIN, problem, witness)


def _problem_text(name, domain, objects, init, goal, metric) -> str:
    obj_lines = "\n".join(f"    {' '.join(names)} - {typ}" for names, typ in objects)
    init_lines = "\n".join(f"    {x}" for x in init)
    goal_lines = "\n".join(f"    {x}" for x in goal)
    return (
        f"(define (problem {name})\n"
        f"  (:domain {domain})\n"
        f"  (:objects\n{obj_lines})\n"
        f"  (:init\n{init_lines})\n"
        f"  (:goal (and\n{goal_lines}))\n"
        f"  (:metric {metric}))\n"
    )
