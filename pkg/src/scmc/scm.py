"""Structural causal models: variables, equations, allowed interventions.

A model couples an ordered table of endogenous variables (each with a
deterministic equation), a table of exogenous inputs (each with a sampling
distribution), and a family of allowed intervention sets.  The family is
closed under subsets and never contains two atoms on the same variable
within one set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Union

from . import expr as E
from .errors import (
    DomainError,
    EnumerationTooLargeError,
    UnknownVariableError,
)
from .expr import Domain, Expr, Value, VarRef, domain_kind, ref_sort_key

# ---------------------------------------------------------------------------
# Exogenous distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointMass:
    value: Value


@dataclass(frozen=True)
class UniformFinite:
    values: tuple[Value, ...]


@dataclass(frozen=True)
class NormalDist:
    mean: float
    variance: float


@dataclass(frozen=True)
class UniformReal:
    lo: float
    hi: float


@dataclass(frozen=True)
class BernoulliDist:
    """Only legitimate before reparameterization; strict sampling rejects it."""

    p: float


ExoDistribution = Union[PointMass, UniformFinite, NormalDist, UniformReal, BernoulliDist]


def dist_support(dist: ExoDistribution) -> Optional[list[Value]]:
    """Finite support of a distribution, or None when it is continuous."""
    match dist:
        case PointMass(v):
            return [v]
        case UniformFinite(values):
            return list(values)
        case BernoulliDist():
            return [E.VBool(False), E.VBool(True)]
        case NormalDist() | UniformReal():
            return None
    raise TypeError(f"not a distribution: {dist!r}")


# ---------------------------------------------------------------------------
# Intervention sets and spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InterventionSet:
    """One concrete set of perfect interventions, at most one per variable."""

    assignments: tuple[tuple[VarRef, Value], ...]

    @staticmethod
    def of(mapping: dict[VarRef, Value] | Iterable[tuple[VarRef, Value]]) -> "InterventionSet":
        pairs = list(mapping.items()) if isinstance(mapping, dict) else list(mapping)
        seen = set()
        for var, _ in pairs:
            if var in seen:
                raise DomainError(f"two interventions on {var} in one set")
            seen.add(var)
        return InterventionSet(tuple(sorted(pairs, key=lambda p: ref_sort_key(p[0]))))

    @staticmethod
    def empty() -> "InterventionSet":
        return _EMPTY_INTERVENTIONS

    def has(self, var: VarRef) -> bool:
        return any(v == var for v, _ in self.assignments)

    def get(self, var: VarRef) -> Optional[Value]:
        for v, val in self.assignments:
            if v == var:
                return val
        return None

    def restrict(self, cluster: Iterable[VarRef]) -> "InterventionSet":
        keep = set(cluster)
        return InterventionSet(tuple(p for p in self.assignments if p[0] in keep))

    def drop(self, vars_out: Iterable[VarRef]) -> "InterventionSet":
        gone = set(vars_out)
        return InterventionSet(tuple(p for p in self.assignments if p[0] not in gone))

    def vars(self) -> tuple[VarRef, ...]:
        return tuple(v for v, _ in self.assignments)

    def __len__(self):
        return len(self.assignments)

    def __str__(self):
        if not self.assignments:
            return "{}"
        inner = ", ".join(f"do({v}={_fmt_value(val)})" for v, val in self.assignments)
        return "{" + inner + "}"


_EMPTY_INTERVENTIONS = InterventionSet(())


def _fmt_value(v: Value) -> str:
    match v:
        case E.VBool(b):
            return "true" if b else "false"
        case E.VInt(i):
            return str(i)
        case E.VReal(r):
            return repr(r)
        case E.VSym(name):
            return name
    return repr(v)


POWER_SET = "power_set"
EXPLICIT = "explicit"
SINGLETON = "singleton"


@dataclass(frozen=True)
class InterventionSpace:
    """The family of allowed intervention sets.

    Stored intensionally: `power_set` admits any value-consistent subset of
    the atom table, `singleton` admits the empty set and one-atom sets, and
    `explicit` lists every member outright.  The two generator modes are
    closed under subsets by construction.
    """

    mode: str
    atoms: tuple[tuple[VarRef, tuple[Value, ...]], ...] = ()
    sets: tuple[InterventionSet, ...] = ()

    @staticmethod
    def power_set(atoms: Iterable[tuple[VarRef, Iterable[Value]]]) -> "InterventionSpace":
        return InterventionSpace(POWER_SET, _norm_atoms(atoms))

    @staticmethod
    def singletons(atoms: Iterable[tuple[VarRef, Iterable[Value]]]) -> "InterventionSpace":
        return InterventionSpace(SINGLETON, _norm_atoms(atoms))

    @staticmethod
    def explicit(sets: Iterable[InterventionSet]) -> "InterventionSpace":
        seen: list[InterventionSet] = []
        for s in sets:
            if s not in seen:
                seen.append(s)
        atoms: dict[VarRef, list[Value]] = {}
        for s in seen:
            for var, val in s.assignments:
                atoms.setdefault(var, [])
                if val not in atoms[var]:
                    atoms[var].append(val)
        normed = tuple(
            (var, tuple(vals)) for var, vals in sorted(atoms.items(), key=lambda p: ref_sort_key(p[0]))
        )
        ordered = tuple(sorted(seen, key=lambda s: [(ref_sort_key(v), repr(val)) for v, val in s.assignments]))
        return InterventionSpace(EXPLICIT, normed, ordered)

    def atom_values(self, var: VarRef) -> tuple[Value, ...]:
        for v, vals in self.atoms:
            if v == var:
                return vals
        return ()

    def intervenable_vars(self) -> list[VarRef]:
        return [v for v, vals in self.atoms if vals]

    def family_atoms(self, family: str) -> list[tuple[VarRef, tuple[Value, ...]]]:
        return [(v, vals) for v, vals in self.atoms if v.name == family and v.index is not None]

    def contains(self, iset: InterventionSet) -> bool:
        if self.mode == EXPLICIT:
            return iset in self.sets
        for var, val in iset.assignments:
            if val not in self.atom_values(var):
                return False
        if self.mode == SINGLETON:
            return len(iset) <= 1
        return True

    def size(self) -> int:
        if self.mode == EXPLICIT:
            return len(self.sets)
        if self.mode == SINGLETON:
            return 1 + sum(len(vals) for _, vals in self.atoms)
        if self.mode == POWER_SET:
            n = 1
            for _, vals in self.atoms:
                n *= 1 + len(vals)
            return n
        raise DomainError(f"unknown intervention-space mode {self.mode!r}")

    def enumerate(self, budget: int = 4096) -> list[InterventionSet]:
        """All members in canonical order; refuses to materialize past `budget`."""
        total = self.size()
        if total > budget:
            raise EnumerationTooLargeError(
                f"intervention space has {total} sets, budget is {budget}"
            )
        if self.mode == EXPLICIT:
            return list(self.sets)
        if self.mode == SINGLETON:
            out = [InterventionSet.empty()]
            for var, vals in self.atoms:
                for val in vals:
                    out.append(InterventionSet.of({var: val}))
            return out
        options = [[None] + list(vals) for _, vals in self.atoms]
        out = []
        for combo in itertools.product(*options):
            pairs = [
                (var, val)
                for (var, _), val in zip(self.atoms, combo)
                if val is not None
            ]
            out.append(InterventionSet.of(pairs))
        return out

    def sample(self, rng) -> InterventionSet:
        """One member drawn with the package RNG; uniform over the enumeration
        for explicit/singleton modes, independent per-atom for power sets."""
        if self.mode == EXPLICIT:
            return self.sets[int(rng.integers(len(self.sets)))]
        if self.mode == SINGLETON:
            n = self.size()
            k = int(rng.integers(n))
            if k == 0:
                return InterventionSet.empty()
            k -= 1
            for var, vals in self.atoms:
                if k < len(vals):
                    return InterventionSet.of({var: vals[k]})
                k -= len(vals)
            raise AssertionError("unreachable")
        pairs = []
        for var, vals in self.atoms:
            k = int(rng.integers(1 + len(vals)))
            if k > 0:
                pairs.append((var, vals[k - 1]))
        return InterventionSet.of(pairs)

    def restrict(self, cluster: Iterable[VarRef]) -> "InterventionSpace":
        """Image of the space under the projection onto `cluster`."""
        keep = set(cluster)
        atoms = tuple((v, vals) for v, vals in self.atoms if v in keep)
        if self.mode == EXPLICIT:
            return InterventionSpace.explicit([s.restrict(keep) for s in self.sets])
        return InterventionSpace(self.mode, atoms)

    def drop_atoms(self, vars_out: Iterable[VarRef]) -> "InterventionSpace":
        """Remove every atom on the given variables, mapping each member set
        to its projection; the result stays closed under subsets."""
        gone = set(vars_out)
        atoms = tuple((v, vals) for v, vals in self.atoms if v not in gone)
        if self.mode == EXPLICIT:
            return InterventionSpace.explicit([s.drop(gone) for s in self.sets])
        return InterventionSpace(self.mode, atoms)


def _norm_atoms(atoms) -> tuple[tuple[VarRef, tuple[Value, ...]], ...]:
    grouped: dict[VarRef, list[Value]] = {}
    for var, vals in atoms:
        bucket = grouped.setdefault(var, [])
        for v in vals:
            if v not in bucket:
                bucket.append(v)
    return tuple(
        (var, tuple(vals)) for var, vals in sorted(grouped.items(), key=lambda p: ref_sort_key(p[0]))
    )


# ---------------------------------------------------------------------------
# The model itself
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EndoVar:
    var: VarRef
    domain: Domain
    equation: Expr


@dataclass(frozen=True)
class ExoVar:
    var: VarRef
    domain: Domain
    dist: ExoDistribution


@dataclass(frozen=True)
class Scm:
    name: str
    endogenous: tuple[EndoVar, ...]
    exogenous: tuple[ExoVar, ...]
    interventions: InterventionSpace
    inverse_pairs: tuple[tuple[VarRef, VarRef], ...] = ()

    def endo_vars(self) -> list[VarRef]:
        return [v.var for v in self.endogenous]

    def exo_vars(self) -> list[VarRef]:
        return [v.var for v in self.exogenous]

    def domain_of(self, var: VarRef) -> Domain:
        for row in self.endogenous:
            if row.var == var:
                return row.domain
        for row in self.exogenous:
            if row.var == var:
                return row.domain
        raise UnknownVariableError(var)

    def equation_of(self, var: VarRef) -> Expr:
        for row in self.endogenous:
            if row.var == var:
                return row.equation
        raise UnknownVariableError(var)

    def dist_of(self, var: VarRef) -> ExoDistribution:
        for row in self.exogenous:
            if row.var == var:
                return row.dist
        raise UnknownVariableError(var)

    def var_kinds(self) -> dict[VarRef, str]:
        kinds: dict[VarRef, str] = {}
        for row in self.exogenous:
            kinds[row.var] = domain_kind(row.domain)
        for row in self.endogenous:
            kinds[row.var] = domain_kind(row.domain)
        return kinds

    def has_var(self, var: VarRef) -> bool:
        return any(r.var == var for r in self.endogenous) or any(
            r.var == var for r in self.exogenous
        )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Finding:
    kind: str
    message: str
    subject: tuple = ()

    def __str__(self):
        return f"[{self.kind}] {self.message}"


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.findings

    def add(self, kind: str, message: str, subject: tuple = ()):
        self.findings.append(Finding(kind, message, subject))

    def kinds(self) -> set[str]:
        return {f.kind for f in self.findings}

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(f) for f in self.findings)


_CLOSURE_CHECK_LIMIT = 4096


def validate(scm: Scm) -> ValidationReport:
    """Structural validation; every violated invariant becomes one finding."""
    report = ValidationReport()

    endo = scm.endo_vars()
    exo = scm.exo_vars()
    seen: set[VarRef] = set()
    for v in endo + exo:
        if v in seen:
            report.add("DuplicateVariable", f"{v} declared twice", (v,))
        seen.add(v)
    overlap = set(endo) & set(exo)
    for v in sorted(overlap, key=ref_sort_key):
        report.add("NameClash", f"{v} is both endogenous and exogenous", (v,))

    known = set(endo) | set(exo)
    position = {v: i for i, v in enumerate(endo)}
    kinds = scm.var_kinds()

    for row in scm.endogenous:
        for r in sorted(E.free_refs(row.equation), key=ref_sort_key):
            if r not in known:
                report.add("UnresolvedRef", f"equation of {row.var} references unknown {r}", (row.var, r))
            elif r in position and position[r] >= position[row.var]:
                if r == row.var:
                    report.add("Cycle", f"cycle: {row.var} -> {row.var}", (row.var, row.var))
                else:
                    report.add(
                        "OrderViolation",
                        f"equation of {row.var} references {r}, declared later",
                        (row.var, r),
                    )
        try:
            got = E.check_expr(row.equation, kinds)
            want = domain_kind(row.domain)
            if got != want and not (want == "real" and got == "int"):
                report.add("TypeError", f"equation of {row.var} yields {got}, domain is {want}", (row.var,))
        except Exception as exc:  # noqa: BLE001 - reported, not raised
            report.add("TypeError", f"equation of {row.var}: {exc}", (row.var,))

    for row in scm.exogenous:
        _check_dist(row, report)

    graph = derive_graph_unchecked(scm)
    cycle = _find_cycle(graph.children, endo)
    if cycle and not any(f.kind == "Cycle" for f in report.findings):
        path = " -> ".join(str(v) for v in cycle)
        report.add("Cycle", f"cycle: {path}", tuple(cycle))

    _check_space(scm, report)
    return report


def _check_dist(row: ExoVar, report: ValidationReport):
    kind = domain_kind(row.domain)
    match row.dist:
        case PointMass(v):
            if not E.value_in_domain(v, row.domain):
                report.add("DistError", f"{row.var}: point mass outside its domain", (row.var,))
        case UniformFinite(values):
            if not values:
                report.add("DistError", f"{row.var}: empty uniform support", (row.var,))
            for v in values:
                if not E.value_in_domain(v, row.domain):
                    report.add("DistError", f"{row.var}: support value {v} outside domain", (row.var,))
        case NormalDist(_, variance):
            if variance < 0:
                report.add("DistError", f"{row.var}: negative variance", (row.var,))
            if kind != "real":
                report.add("DistError", f"{row.var}: normal draw into a {kind} domain", (row.var,))
        case UniformReal(lo, hi):
            if lo > hi:
                report.add("DistError", f"{row.var}: empty uniform interval", (row.var,))
            if kind != "real":
                report.add("DistError", f"{row.var}: real draw into a {kind} domain", (row.var,))
        case BernoulliDist(p):
            if not (0.0 <= p <= 1.0):
                report.add("DistError", f"{row.var}: bernoulli parameter {p} outside [0, 1]", (row.var,))
            if kind != "bool":
                report.add("DistError", f"{row.var}: bernoulli draw into a {kind} domain", (row.var,))


def _check_space(scm: Scm, report: ValidationReport):
    space = scm.interventions
    endo = set(scm.endo_vars())
    exo = set(scm.exo_vars())
    for var, vals in space.atoms:
        if var in exo:
            report.add("AtomOnExogenous", f"intervention atom on exogenous {var}", (var,))
            continue
        if var not in endo:
            report.add("AtomOnUnknown", f"intervention atom on unknown {var}", (var,))
            continue
        dom = scm.domain_of(var)
        for v in vals:
            if not E.value_in_domain(v, dom):
                report.add(
                    "AtomValueOutsideDomain",
                    f"do({var}={_fmt_value(v)}) falls outside the domain of {var}",
                    (var, v),
                )
    if space.mode == EXPLICIT:
        listed = set(space.sets)
        for s in space.sets:
            n = len(s)
            if 2**n > _CLOSURE_CHECK_LIMIT:
                report.add(
                    "ClosureUnchecked",
                    f"set {s} too large to check closure under subsets",
                    (s,),
                )
                continue
            for r in range(n):
                for combo in itertools.combinations(s.assignments, r):
                    sub = InterventionSet(tuple(combo))
                    if sub not in listed:
                        report.add(
                            "ClosureViolation",
                            f"{s} is allowed but its subset {sub} is not",
                            (s, sub),
                        )
    elif space.mode not in (POWER_SET, SINGLETON):
        report.add("SpaceMode", f"unknown intervention-space mode {space.mode!r}", ())


def _find_cycle(children: dict[VarRef, set[VarRef]], nodes: list[VarRef]) -> list[VarRef]:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {v: WHITE for v in nodes}
    parent: dict[VarRef, VarRef] = {}

    def visit(start: VarRef):
        stack = [(start, iter(sorted(children.get(start, ()), key=ref_sort_key)))]
        color[start] = GREY
        while stack:
            node, it = stack[-1]
            advanced = False
            for nxt in it:
                if nxt not in color:
                    continue
                if color[nxt] == GREY:
                    path = [nxt, node]
                    cur = node
                    while cur != nxt and cur in parent:
                        cur = parent[cur]
                        path.append(cur)
                    path.reverse()
                    return path
                if color[nxt] == WHITE:
                    parent[nxt] = node
                    color[nxt] = GREY
                    stack.append((nxt, iter(sorted(children.get(nxt, ()), key=ref_sort_key))))
                    advanced = True
                    break
            if not advanced:
                color[node] = BLACK
                stack.pop()
        return None

    for v in nodes:
        if color[v] == WHITE:
            found = visit(v)
            if found:
                return found
    return None


# ---------------------------------------------------------------------------
# Graph derivation and kin queries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    vertices: tuple[VarRef, ...]
    parents: dict[VarRef, frozenset[VarRef]]
    children: dict[VarRef, set[VarRef]]

    def has(self, var: VarRef) -> bool:
        return var in self.parents


def _graph_from_parent_map(vertices: list[VarRef], pmap: dict[VarRef, set[VarRef]]) -> Graph:
    children: dict[VarRef, set[VarRef]] = {v: set() for v in vertices}
    for child, parents in pmap.items():
        for p in parents:
            children.setdefault(p, set()).add(child)
    return Graph(
        tuple(vertices),
        {v: frozenset(pmap.get(v, set())) for v in vertices},
        children,
    )


def derive_graph_unchecked(scm: Scm) -> Graph:
    vertices = scm.exo_vars() + scm.endo_vars()
    known = set(vertices)
    pmap = {
        row.var: {r for r in E.free_refs(row.equation) if r in known}
        for row in scm.endogenous
    }
    return _graph_from_parent_map(vertices, pmap)


_SEMANTIC_BUDGET = 10**6


def derive_graph(scm: Scm, mode: str = "syntactic") -> Graph:
    """Parent structure of the model.

    Syntactic mode records an edge wherever an equation textually references
    a variable; semantic mode keeps only edges along which the equation can
    actually change value, established by enumerating the parents' finite
    domains.  Semantic edges are always a subset of syntactic ones.
    """
    g = derive_graph_unchecked(scm)
    if mode == "syntactic":
        return g
    if mode != "semantic":
        raise DomainError(f"unknown graph mode {mode!r}")

    pmap: dict[VarRef, set[VarRef]] = {}
    for row in scm.endogenous:
        parents = sorted(g.parents[row.var], key=ref_sort_key)
        doms = []
        joint = 1
        for p in parents:
            d = scm.domain_of(p)
            if not E.domain_is_finite(d):
                raise EnumerationTooLargeError(f"domain of {p} is not finite")
            vals = E.domain_values(d)
            joint *= len(vals)
            doms.append(vals)
        if joint > _SEMANTIC_BUDGET:
            raise EnumerationTooLargeError(
                f"joint parent domain of {row.var} has {joint} states"
            )
        keep: set[VarRef] = set()
        for i, p in enumerate(parents):
            others = doms[:i] + doms[i + 1 :]
            names = parents[:i] + parents[i + 1 :]
            found = False
            for rest in itertools.product(*others):
                env = dict(zip(names, rest))
                seen_vals = set()
                for v in doms[i]:
                    env[p] = v
                    out = E.eval_expr(row.equation, env, InterventionSet.empty())
                    seen_vals.add(out)
                    if len(seen_vals) > 1:
                        found = True
                        break
                if found:
                    break
            if found:
                keep.add(p)
        pmap[row.var] = keep
    return _graph_from_parent_map(list(g.vertices), pmap)


def relatives(graph: Graph, vars: Iterable[VarRef], kind: str) -> set[VarRef]:
    """Union of parents/children/ancestors over a set of query variables."""
    vs = list(vars)
    for v in vs:
        if not graph.has(v):
            raise UnknownVariableError(v)
    if kind == "parents":
        out: set[VarRef] = set()
        for v in vs:
            out |= graph.parents[v]
        return out
    if kind == "children":
        out = set()
        for v in vs:
            out |= graph.children.get(v, set())
        return out
    if kind == "ancestors":
        out = set()
        frontier = list(vs)
        while frontier:
            v = frontier.pop()
            for p in graph.parents.get(v, frozenset()):
                if p not in out:
                    out.add(p)
                    frontier.append(p)
        return out
    raise DomainError(f"unknown relative kind {kind!r}")


# ---------------------------------------------------------------------------
# Reparameterization of non-deterministic equations
# ---------------------------------------------------------------------------


def reparameterize(scm: Scm) -> Scm:
    """Replace every draw node with a comparison against a fresh uniform input.

    ``Bernoulli(e)`` becomes ``e < R`` with R uniform on [0, 1), matching the
    evaluation convention of the draw node itself, so the observational
    distribution is unchanged while every equation becomes deterministic.
    Models without draw nodes come back structurally identical.
    """
    taken = {v.name for v in scm.endo_vars() + scm.exo_vars()}
    fresh_rows: list[ExoVar] = []

    def fresh_name() -> VarRef:
        base = "R"
        k = 1
        name = base
        while name in taken:
            k += 1
            name = f"{base}{k}"
        taken.add(name)
        return VarRef(name)

    def rewrite(e: Expr) -> Expr:
        match e:
            case E.RandomBernoulli(p):
                r = fresh_name()
                fresh_rows.append(ExoVar(r, E.RealDomain(0.0, 1.0), UniformReal(0.0, 1.0)))
                return E.Binary("lt", rewrite(p), E.Ref(r))
            case E.Const() | E.Ref() | E.IsIntervened() | E.ExistsIntervention():
                return e
            case E.Unary(op, a):
                return E.Unary(op, rewrite(a))
            case E.Binary(op, l, r):
                return E.Binary(op, rewrite(l), rewrite(r))
            case E.IfThenElse(c, t, o):
                return E.IfThenElse(rewrite(c), rewrite(t), rewrite(o))
            case E.CaseList(cases, default):
                return E.CaseList(tuple((rewrite(g), rewrite(b)) for g, b in cases), rewrite(default))
            case E.InterventionValue(v, fb):
                return E.InterventionValue(v, rewrite(fb) if fb is not None else None)
            case E.MaxIntervenedIndex(f, u, d):
                return E.MaxIntervenedIndex(f, rewrite(u), rewrite(d))
        raise TypeError(f"not an Expr: {e!r}")

    new_endo = []
    changed = False
    for row in scm.endogenous:
        if E.contains_draw(row.equation):
            new_endo.append(EndoVar(row.var, row.domain, rewrite(row.equation)))
            changed = True
        else:
            new_endo.append(row)
    if not changed:
        return scm
    return replace(
        scm,
        endogenous=tuple(new_endo),
        exogenous=scm.exogenous + tuple(fresh_rows),
    )


def topological_order(scm: Scm) -> list[VarRef]:
    """Declared endogenous order; validation guarantees it is topological."""
    return scm.endo_vars()
