"""Shared builders for the test suite: a small layered example model and a
seeded random-model generator used by the property suites."""

from __future__ import annotations

import random

from scmc import expr as E
from scmc.expr import (
    Binary,
    BoolDomain,
    CaseList,
    IfThenElse,
    IntDomain,
    Ref,
    VarRef,
    band,
    bconst,
    bnot,
    iconst,
)
from scmc.partition import Partition
from scmc.scm import (
    EndoVar,
    ExoVar,
    InterventionSet,
    InterventionSpace,
    Scm,
    UniformFinite,
)

A, B, C, D = VarRef("A"), VarRef("B"), VarRef("C"), VarRef("D")
Ev, F, G, H = VarRef("E"), VarRef("F"), VarRef("G"), VarRef("H")
U = VarRef("U")


def three_layer_example() -> tuple[Scm, Partition]:
    """One root feeding two middles feeding two sinks; the bundled partition
    groups them layer by layer, so the quotient is a three-node chain."""
    scm = Scm(
        name="three-layer",
        endogenous=(
            EndoVar(A, BoolDomain(), Ref(U)),
            EndoVar(B, BoolDomain(), Ref(A)),
            EndoVar(D, BoolDomain(), bnot(Ref(A))),
            EndoVar(C, BoolDomain(), Ref(B)),
            EndoVar(Ev, BoolDomain(), band(Ref(B), Ref(D))),
        ),
        exogenous=(ExoVar(U, BoolDomain(), UniformFinite((E.VBool(False), E.VBool(True)))),),
        interventions=InterventionSpace.singletons(
            [(B, [E.VBool(False)]), (D, [E.VBool(True)])]
        ),
    )
    return scm, Partition.of([[A], [B, D], [C, Ev]])


def exit_reenter_example() -> tuple[Scm, Partition]:
    """A path leaves the first cluster and comes back: invalid partition."""
    scm = Scm(
        name="exit-reenter",
        endogenous=(
            EndoVar(A, BoolDomain(), Ref(U)),
            EndoVar(B, BoolDomain(), Ref(A)),
            EndoVar(C, BoolDomain(), Ref(B)),
        ),
        exogenous=(ExoVar(U, BoolDomain(), UniformFinite((E.VBool(False), E.VBool(True)))),),
        interventions=InterventionSpace.power_set([]),
    )
    return scm, Partition.of([[A, C], [B]])


# ---------------------------------------------------------------------------
# Random models
# ---------------------------------------------------------------------------


def _rand_int_expr(rng: random.Random, vars_by_kind, depth: int) -> E.Expr:
    ints = vars_by_kind["int"]
    if depth <= 0 or (not ints and rng.random() < 0.5):
        if ints and rng.random() < 0.6:
            return Ref(rng.choice(ints)[0])
        return iconst(rng.randint(0, 3))
    op = rng.choice(["add", "sub", "mul", "min", "max", "mod", "ite"])
    if op == "ite":
        return IfThenElse(
            _rand_bool_expr(rng, vars_by_kind, depth - 1),
            _rand_int_expr(rng, vars_by_kind, depth - 1),
            _rand_int_expr(rng, vars_by_kind, depth - 1),
        )
    if op == "mod":
        return Binary("mod", _rand_int_expr(rng, vars_by_kind, depth - 1), iconst(rng.randint(1, 4)))
    return Binary(op, _rand_int_expr(rng, vars_by_kind, depth - 1), _rand_int_expr(rng, vars_by_kind, depth - 1))


def _rand_bool_expr(rng: random.Random, vars_by_kind, depth: int) -> E.Expr:
    bools = vars_by_kind["bool"]
    if depth <= 0 or (not bools and rng.random() < 0.3):
        if bools and rng.random() < 0.6:
            return Ref(rng.choice(bools)[0])
        if vars_by_kind["int"] and rng.random() < 0.5:
            return Binary(
                rng.choice(["lt", "le", "eq"]),
                Ref(rng.choice(vars_by_kind["int"])[0]),
                iconst(rng.randint(0, 3)),
            )
        return bconst(rng.random() < 0.5)
    op = rng.choice(["and", "or", "not", "cases"])
    if op == "not":
        return bnot(_rand_bool_expr(rng, vars_by_kind, depth - 1))
    if op == "cases":
        return CaseList(
            (
                (
                    _rand_bool_expr(rng, vars_by_kind, depth - 1),
                    _rand_bool_expr(rng, vars_by_kind, depth - 1),
                ),
            ),
            _rand_bool_expr(rng, vars_by_kind, depth - 1),
        )
    return Binary(op, _rand_bool_expr(rng, vars_by_kind, depth - 1), _rand_bool_expr(rng, vars_by_kind, depth - 1))


def _clamp(e: E.Expr, dom: IntDomain) -> E.Expr:
    return Binary("min", Binary("max", e, iconst(dom.lo)), iconst(dom.hi))


def random_model(seed: int, max_endo: int = 12, max_domain: int = 4) -> Scm:
    """A random finite-domain model with a random intervention space."""
    rng = random.Random(seed)
    n_endo = rng.randint(2, max_endo)
    n_exo = rng.randint(1, 2)
    rows_exo = []
    vars_by_kind = {"bool": [], "int": []}
    for i in range(n_exo):
        var = VarRef("u", i + 1)
        if rng.random() < 0.5:
            dom = BoolDomain()
            dist = UniformFinite((E.VBool(False), E.VBool(True)))
            vars_by_kind["bool"].append((var, dom))
        else:
            hi = rng.randint(1, max_domain - 1)
            dom = IntDomain(0, hi)
            dist = UniformFinite(tuple(E.VInt(k) for k in range(hi + 1)))
            vars_by_kind["int"].append((var, dom))
        rows_exo.append(ExoVar(var, dom, dist))
    rows_endo = []
    for i in range(n_endo):
        var = VarRef("x", i + 1)
        if rng.random() < 0.5:
            dom = BoolDomain()
            eq = _rand_bool_expr(rng, vars_by_kind, rng.randint(1, 3))
            vars_by_kind["bool"].append((var, dom))
        else:
            hi = rng.randint(1, max_domain - 1)
            dom = IntDomain(0, hi)
            eq = _clamp(_rand_int_expr(rng, vars_by_kind, rng.randint(1, 3)), dom)
            vars_by_kind["int"].append((var, dom))
        rows_endo.append(EndoVar(var, dom, eq))
    atoms = []
    for row in rows_endo:
        if rng.random() < 0.5:
            vals = E.domain_values(row.domain)
            picked = rng.sample(vals, k=rng.randint(1, min(2, len(vals))))
            atoms.append((row.var, picked))
    mode = rng.choice(["power_set", "singleton", "explicit"])
    if mode == "power_set":
        space = InterventionSpace.power_set(atoms)
    elif mode == "singleton":
        space = InterventionSpace.singletons(atoms)
    else:
        base = InterventionSpace.singletons(atoms)
        space = InterventionSpace.explicit(base.enumerate(budget=10**6))
    return Scm(
        name=f"random-{seed}",
        endogenous=tuple(rows_endo),
        exogenous=tuple(rows_exo),
        interventions=space,
    )


def random_partition(scm: Scm, seed: int) -> Partition:
    """Consecutive blocks of a random linear extension: always valid."""
    rng = random.Random(seed)
    order = _random_linear_extension(scm, rng)
    blocks = []
    i = 0
    while i < len(order):
        size = rng.randint(1, min(4, len(order) - i))
        blocks.append(order[i : i + size])
        i += size
    return Partition.of(blocks)


def _random_linear_extension(scm: Scm, rng: random.Random):
    from scmc.scm import derive_graph_unchecked

    graph = derive_graph_unchecked(scm)
    endo = set(scm.endo_vars())
    indeg = {v: sum(1 for p in graph.parents[v] if p in endo) for v in endo}
    ready = sorted([v for v, d in indeg.items() if d == 0], key=str)
    out = []
    while ready:
        v = ready.pop(rng.randrange(len(ready)))
        out.append(v)
        for c in sorted(graph.children.get(v, ()), key=str):
            if c in endo:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
    return out


def random_u(scm: Scm, seed: int):
    rng = random.Random(seed)
    u = {}
    for row in scm.exogenous:
        vals = E.domain_values(row.domain)
        u[row.var] = vals[rng.randrange(len(vals))]
    return u


def random_intervention(scm: Scm, seed: int) -> InterventionSet:
    from scmc.evaluation import make_rng

    return scm.interventions.sample(make_rng(seed))
