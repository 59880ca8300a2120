"""Typed expression trees for structural equations and consolidated equations.

Every structural equation, every consolidation function and every rewrite
pass operates on the node types defined here.  Trees are immutable; sharing
a subtree between two expressions is allowed but rewrites always build fresh
nodes, so one expression never observes mutation through another.

Besides the usual arithmetic/boolean operators the IR carries four
intervention primitives (`IsIntervened`, `InterventionValue`,
`ExistsIntervention`, `MaxIntervenedIndex`).  These query the intervention
set an expression is evaluated under, which is what lets a consolidated
equation stay correct when individual variables it no longer computes are
forced to a value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Union

from .errors import DivisionByZeroError, DomainError, NonDeterministicModelError, UnboundRefError

# ---------------------------------------------------------------------------
# Values and domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VBool:
    b: bool


@dataclass(frozen=True)
class VInt:
    i: int


@dataclass(frozen=True)
class VSym:
    name: str


@dataclass(frozen=True)
class VReal:
    r: float


Value = Union[VBool, VInt, VSym, VReal]

#: Absolute tolerance used when tests compare real-valued results.
EPS_VAL = 1e-9


def value_kind(v: Value) -> str:
    match v:
        case VBool():
            return "bool"
        case VInt():
            return "int"
        case VSym():
            return "sym"
        case VReal():
            return "real"
    raise TypeError(f"not a Value: {v!r}")


def values_close(a: Value, b: Value, eps: float = EPS_VAL) -> bool:
    """Exact equality, except reals compare within an absolute tolerance."""
    if isinstance(a, VReal) and isinstance(b, VReal):
        return abs(a.r - b.r) <= eps
    if isinstance(a, VReal) or isinstance(b, VReal):
        an = _numeric(a) if isinstance(a, (VInt, VReal)) else None
        bn = _numeric(b) if isinstance(b, (VInt, VReal)) else None
        if an is None or bn is None:
            return False
        return abs(an - bn) <= eps
    return a == b


@dataclass(frozen=True)
class BoolDomain:
    pass


@dataclass(frozen=True)
class IntDomain:
    """Finite integer range, both ends inclusive."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise DomainError(f"empty integer domain {self.lo}..{self.hi}")


@dataclass(frozen=True)
class SymDomain:
    symbols: tuple[str, ...]

    def __post_init__(self):
        if not self.symbols:
            raise DomainError("symbolic domain needs at least one symbol")
        if len(set(self.symbols)) != len(self.symbols):
            raise DomainError("duplicate symbols in domain")


@dataclass(frozen=True)
class RealDomain:
    """Real domain, optionally restricted to a closed interval."""

    lo: Optional[float] = None
    hi: Optional[float] = None

    def __post_init__(self):
        if self.lo is not None and self.hi is not None and self.lo > self.hi:
            raise DomainError(f"empty real interval [{self.lo}, {self.hi}]")


Domain = Union[BoolDomain, IntDomain, SymDomain, RealDomain]


def domain_kind(d: Domain) -> str:
    match d:
        case BoolDomain():
            return "bool"
        case IntDomain():
            return "int"
        case SymDomain():
            return "sym"
        case RealDomain():
            return "real"
    raise TypeError(f"not a Domain: {d!r}")


def value_in_domain(v: Value, d: Domain) -> bool:
    match d, v:
        case BoolDomain(), VBool():
            return True
        case IntDomain(lo, hi), VInt(i):
            return lo <= i <= hi
        case SymDomain(symbols), VSym(name):
            return name in symbols
        case RealDomain(lo, hi), VReal(r):
            if lo is not None and r < lo:
                return False
            if hi is not None and r > hi:
                return False
            return True
        case RealDomain(lo, hi), VInt(i):
            # integers are acceptable carriers for real-valued variables
            return value_in_domain(VReal(float(i)), d)
    return False


def domain_values(d: Domain) -> list[Value]:
    """All members of a finite domain, in canonical order."""
    match d:
        case BoolDomain():
            return [VBool(False), VBool(True)]
        case IntDomain(lo, hi):
            return [VInt(i) for i in range(lo, hi + 1)]
        case SymDomain(symbols):
            return [VSym(s) for s in symbols]
        case RealDomain():
            raise DomainError("real domains are not enumerable")
    raise TypeError(f"not a Domain: {d!r}")


def domain_is_finite(d: Domain) -> bool:
    return not isinstance(d, RealDomain)


# ---------------------------------------------------------------------------
# Variable references
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarRef:
    """Reference to a model variable.

    `index` is set for members of indexed families (S_3 is
    ``VarRef("S", 3)``) and None for scalar variables.
    """

    name: str
    index: Optional[int] = None

    def __str__(self):
        return self.name if self.index is None else f"{self.name}_{self.index}"


def ref_sort_key(v: VarRef) -> tuple:
    return (v.name, v.index if v.index is not None else -(10**9))


def parse_var_name(text: str) -> VarRef:
    """Parse ``S_3`` into an indexed ref; a trailing ``_<int>`` is the index."""
    if "_" in text:
        stem, _, tail = text.rpartition("_")
        if stem and tail.lstrip("-").isdigit():
            return VarRef(stem, int(tail))
    return VarRef(text)


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Ref:
    var: VarRef


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" | "not"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # add sub mul div pow mod min max lt le eq and or
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class IfThenElse:
    cond: "Expr"
    then: "Expr"
    orelse: "Expr"


@dataclass(frozen=True)
class CaseList:
    """Ordered guard->expression pairs with first-match semantics.

    Guards may overlap; the first guard that evaluates to true selects the
    arm, and `default` fires when none does.
    """

    cases: tuple[tuple["Expr", "Expr"], ...]
    default: "Expr"


@dataclass(frozen=True)
class IsIntervened:
    """True iff the active intervention set contains an atom on `var`."""

    var: VarRef


@dataclass(frozen=True)
class InterventionValue:
    """The value forced onto `var`, else the fallback when not intervened.

    The fallback may be omitted when the node is guarded by an
    `IsIntervened` check; evaluating a fallback-less node on an
    unintervened variable is an error.
    """

    var: VarRef
    fallback: Optional["Expr"] = None


@dataclass(frozen=True)
class ExistsIntervention:
    """True iff some atom on the named family matches index range and value."""

    family: str
    lo: Optional[int] = None
    hi: Optional[int] = None
    value: Optional[Value] = None


@dataclass(frozen=True)
class MaxIntervenedIndex:
    """Largest intervened index of the family that is <= `upper`, else `default`."""

    family: str
    upper: "Expr"
    default: "Expr"


@dataclass(frozen=True)
class RandomBernoulli:
    """Non-deterministic draw; true with probability 1 - p under the
    evaluation convention ``draw = (p < r)`` with r uniform on [0, 1).

    Only valid in models that have not been reparameterized yet.  Evaluation
    requires an explicit random source; without one it is an error, which is
    what forces callers through the reparameterization step.
    """

    p: "Expr"


Expr = Union[
    Const,
    Ref,
    Unary,
    Binary,
    IfThenElse,
    CaseList,
    IsIntervened,
    InterventionValue,
    ExistsIntervention,
    MaxIntervenedIndex,
    RandomBernoulli,
]

_NUMERIC_BINOPS = {"add", "sub", "mul", "div", "pow", "mod", "min", "max"}
_COMPARE_BINOPS = {"lt", "le"}
_BOOL_BINOPS = {"and", "or"}
BINARY_OPS = _NUMERIC_BINOPS | _COMPARE_BINOPS | _BOOL_BINOPS | {"eq"}
UNARY_OPS = {"neg", "not"}


def children(e: Expr) -> tuple[Expr, ...]:
    """Expression children only; variable/family slots are not children."""
    match e:
        case Const() | Ref() | IsIntervened() | ExistsIntervention():
            return ()
        case Unary(_, x):
            return (x,)
        case Binary(_, l, r):
            return (l, r)
        case IfThenElse(c, t, o):
            return (c, t, o)
        case CaseList(cases, default):
            out: list[Expr] = []
            for g, x in cases:
                out.append(g)
                out.append(x)
            out.append(default)
            return tuple(out)
        case InterventionValue(_, fb):
            return (fb,) if fb is not None else ()
        case MaxIntervenedIndex(_, upper, default):
            return (upper, default)
        case RandomBernoulli(p):
            return (p,)
    raise TypeError(f"not an Expr: {e!r}")


def node_count(e: Expr) -> int:
    """Size of the tree under the cost model used by the rewrite pipeline.

    Constants and references count one.  Composite nodes count one plus their
    children.  The intervention primitives additionally count their variable
    or family slot as one leaf, so ``IsIntervened(V)`` weighs the same as a
    negated reference would.
    """
    match e:
        case Const() | Ref():
            return 1
        case IsIntervened() | InterventionValue() | ExistsIntervention() | MaxIntervenedIndex():
            return 2 + sum(node_count(c) for c in children(e))
        case _:
            return 1 + sum(node_count(c) for c in children(e))


def free_refs(e: Expr) -> set[VarRef]:
    """Variables whose *values* the expression reads.

    Intervention primitives query the intervention set, not the variable's
    value, so their variable slots do not appear here.
    """
    out: set[VarRef] = set()

    def walk(x: Expr):
        if isinstance(x, Ref):
            out.add(x.var)
        for c in children(x):
            walk(c)

    walk(e)
    return out


def intervention_queries(e: Expr) -> set[VarRef]:
    """Variables and families whose intervention state the expression inspects.

    Family queries are reported as index-less refs.
    """
    out: set[VarRef] = set()

    def walk(x: Expr):
        match x:
            case IsIntervened(v) | InterventionValue(v, _):
                out.add(v)
            case ExistsIntervention(family=f) | MaxIntervenedIndex(family=f):
                out.add(VarRef(f))
        for c in children(x):
            walk(c)

    walk(e)
    return out


def contains_draw(e: Expr) -> bool:
    if isinstance(e, RandomBernoulli):
        return True
    return any(contains_draw(c) for c in children(e))


def substitute(e: Expr, bindings: Mapping[VarRef, Expr]) -> Expr:
    """Replace every `Ref` whose variable is bound with a copy of its binding.

    Variable slots of intervention primitives are identities, not value
    reads, and are left alone; the fallback of `InterventionValue` is an
    ordinary child and is rewritten.
    """
    if not bindings:
        return e

    def walk(x: Expr) -> Expr:
        match x:
            case Ref(v):
                return bindings.get(v, x)
            case Const() | IsIntervened() | ExistsIntervention():
                return x
            case Unary(op, a):
                return Unary(op, walk(a))
            case Binary(op, l, r):
                return Binary(op, walk(l), walk(r))
            case IfThenElse(c, t, o):
                return IfThenElse(walk(c), walk(t), walk(o))
            case CaseList(cases, default):
                return CaseList(tuple((walk(g), walk(b)) for g, b in cases), walk(default))
            case InterventionValue(v, fb):
                return InterventionValue(v, walk(fb) if fb is not None else None)
            case MaxIntervenedIndex(f, u, d):
                return MaxIntervenedIndex(f, walk(u), walk(d))
            case RandomBernoulli(p):
                return RandomBernoulli(walk(p))
        raise TypeError(f"not an Expr: {x!r}")

    return walk(e)


# ---------------------------------------------------------------------------
# Kind checking
# ---------------------------------------------------------------------------


def check_expr(e: Expr, var_kinds: Mapping[VarRef, str]) -> str:
    """Infer the result kind of an expression, raising DomainError on misuse.

    `var_kinds` maps every referencable variable to one of
    bool/int/sym/real.  Mixed int/real arithmetic widens to real.
    """

    def kind(x: Expr) -> str:
        match x:
            case Const(v):
                return value_kind(v)
            case Ref(v):
                if v not in var_kinds:
                    raise UnboundRefError(v)
                return var_kinds[v]
            case Unary("neg", a):
                k = kind(a)
                if k not in ("int", "real"):
                    raise DomainError(f"neg needs a numeric operand, got {k}")
                return k
            case Unary("not", a):
                if kind(a) != "bool":
                    raise DomainError("not needs a boolean operand")
                return "bool"
            case Unary(op, _):
                raise DomainError(f"unknown unary operator {op!r}")
            case Binary(op, l, r):
                kl, kr = kind(l), kind(r)
                if op in _NUMERIC_BINOPS:
                    if kl not in ("int", "real") or kr not in ("int", "real"):
                        raise DomainError(f"{op} needs numeric operands, got {kl}/{kr}")
                    if op == "mod" and (kl != "int" or kr != "int"):
                        raise DomainError("mod is defined on integers only")
                    if op == "div" and kl == "int" and kr == "int":
                        return "int"
                    if op == "pow":
                        return "int" if kl == kr == "int" else "real"
                    return "real" if "real" in (kl, kr) else "int"
                if op in _COMPARE_BINOPS:
                    if kl not in ("int", "real") or kr not in ("int", "real"):
                        raise DomainError(f"{op} compares numbers, got {kl}/{kr}")
                    return "bool"
                if op == "eq":
                    numeric = {"int", "real"}
                    if kl != kr and not (kl in numeric and kr in numeric):
                        raise DomainError(f"eq needs comparable operands, got {kl}/{kr}")
                    return "bool"
                if op in _BOOL_BINOPS:
                    if kl != "bool" or kr != "bool":
                        raise DomainError(f"{op} needs boolean operands")
                    return "bool"
                raise DomainError(f"unknown binary operator {op!r}")
            case IfThenElse(c, t, o):
                if kind(c) != "bool":
                    raise DomainError("if-guard must be boolean")
                kt, ko = kind(t), kind(o)
                if kt != ko:
                    raise DomainError(f"branches disagree: {kt} vs {ko}")
                return kt
            case CaseList(cases, default):
                kd = kind(default)
                for g, b in cases:
                    if kind(g) != "bool":
                        raise DomainError("case guard must be boolean")
                    if kind(b) != kd:
                        raise DomainError("case arms disagree on kind")
                return kd
            case IsIntervened() | ExistsIntervention():
                return "bool"
            case InterventionValue(v, fb):
                if v not in var_kinds:
                    raise UnboundRefError(v)
                k = var_kinds[v]
                if fb is not None and kind(fb) != k:
                    raise DomainError(f"fallback kind differs from {v}'s kind")
                return k
            case MaxIntervenedIndex(_, u, d):
                if kind(u) != "int" or kind(d) != "int":
                    raise DomainError("max_intervened_index bounds must be integers")
                return "int"
            case RandomBernoulli(p):
                if kind(p) not in ("int", "real"):
                    raise DomainError("bernoulli parameter must be numeric")
                return "bool"
        raise TypeError(f"not an Expr: {x!r}")

    return kind(e)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _numeric(v: Value) -> float | int:
    match v:
        case VInt(i):
            return i
        case VReal(r):
            return r
    raise DomainError(f"expected a number, got {v}")


def _as_bool(v: Value) -> bool:
    if isinstance(v, VBool):
        return v.b
    raise DomainError(f"expected a boolean, got {v}")


def _wrap_number(x) -> Value:
    return VInt(x) if isinstance(x, int) else VReal(float(x))


def _apply_binary(op: str, a: Value, b: Value) -> Value:
    if op == "and":
        return VBool(_as_bool(a) and _as_bool(b))
    if op == "or":
        return VBool(_as_bool(a) or _as_bool(b))
    if op == "eq":
        if isinstance(a, (VInt, VReal)) and isinstance(b, (VInt, VReal)):
            return VBool(_numeric(a) == _numeric(b))
        if value_kind(a) != value_kind(b):
            raise DomainError(f"cannot compare {a} with {b}")
        return VBool(a == b)

    x, y = _numeric(a), _numeric(b)
    if op == "add":
        return _wrap_number(x + y)
    if op == "sub":
        return _wrap_number(x - y)
    if op == "mul":
        return _wrap_number(x * y)
    if op == "div":
        if y == 0:
            raise DivisionByZeroError("division by zero")
        if isinstance(x, int) and isinstance(y, int):
            return VInt(x // y)
        return VReal(x / y)
    if op == "mod":
        if not (isinstance(x, int) and isinstance(y, int)):
            raise DomainError("mod is defined on integers only")
        if y == 0:
            raise DivisionByZeroError("modulo by zero")
        return VInt(x % y)
    if op == "pow":
        if isinstance(x, int) and isinstance(y, int):
            if y < 0:
                if x == 0:
                    raise DivisionByZeroError("zero to a negative power")
                return VReal(float(x) ** y)
            return VInt(x**y)
        if x == 0 and y < 0:
            raise DivisionByZeroError("zero to a negative power")
        if x < 0 and not float(y).is_integer():
            raise DomainError("negative base with fractional exponent")
        return VReal(float(x) ** float(y))
    if op == "min":
        return a if _numeric(a) <= _numeric(b) else b
    if op == "max":
        return a if _numeric(a) >= _numeric(b) else b
    if op == "lt":
        return VBool(x < y)
    if op == "le":
        return VBool(x <= y)
    raise DomainError(f"unknown binary operator {op!r}")


def eval_expr(
    e: Expr,
    env: Mapping[VarRef, Value],
    interventions: "InterventionSet" = None,
    rng=None,
) -> Value:
    """Evaluate an expression against an environment and an intervention set.

    Deterministic: identical arguments always produce the identical value.
    `rng` is only consulted by `RandomBernoulli` nodes; omitting it makes any
    draw an error, which keeps reparameterized models honest.
    """
    from .scm import InterventionSet  # local import to avoid a module cycle

    iv = interventions if interventions is not None else InterventionSet.empty()

    def ev(x: Expr) -> Value:
        match x:
            case Const(v):
                return v
            case Ref(v):
                if v not in env:
                    raise UnboundRefError(v)
                return env[v]
            case Unary("neg", a):
                return _wrap_number(-_numeric(ev(a)))
            case Unary("not", a):
                return VBool(not _as_bool(ev(a)))
            case Unary(op, _):
                raise DomainError(f"unknown unary operator {op!r}")
            case Binary("and", l, r):
                return VBool(_as_bool(ev(l)) and _as_bool(ev(r)))
            case Binary("or", l, r):
                return VBool(_as_bool(ev(l)) or _as_bool(ev(r)))
            case Binary(op, l, r):
                return _apply_binary(op, ev(l), ev(r))
            case IfThenElse(c, t, o):
                return ev(t) if _as_bool(ev(c)) else ev(o)
            case CaseList(cases, default):
                for g, b in cases:
                    if _as_bool(ev(g)):
                        return ev(b)
                return ev(default)
            case IsIntervened(v):
                return VBool(iv.has(v))
            case InterventionValue(v, fb):
                got = iv.get(v)
                if got is not None:
                    return got
                if fb is None:
                    raise UnboundRefError(v)
                return ev(fb)
            case ExistsIntervention(family, lo, hi, value):
                for var, val in iv.assignments:
                    if var.name != family or var.index is None:
                        continue
                    if lo is not None and var.index < lo:
                        continue
                    if hi is not None and var.index > hi:
                        continue
                    if value is not None and val != value:
                        continue
                    return VBool(True)
                return VBool(False)
            case MaxIntervenedIndex(family, upper, default):
                bound = ev(upper)
                if not isinstance(bound, VInt):
                    raise DomainError("max_intervened_index bound must be an integer")
                best = None
                for var, _val in iv.assignments:
                    if var.name != family or var.index is None or var.index > bound.i:
                        continue
                    if best is None or var.index > best:
                        best = var.index
                return VInt(best) if best is not None else ev(default)
            case RandomBernoulli(p):
                if rng is None:
                    raise NonDeterministicModelError(
                        "model draws at evaluation time; reparameterize it or pass an rng"
                    )
                pv = _numeric(ev(p))
                return VBool(pv < rng.random())
        raise TypeError(f"not an Expr: {x!r}")

    return ev(e)


# ---------------------------------------------------------------------------
# Construction helpers (used heavily by the model zoo and tests)
# ---------------------------------------------------------------------------


def bconst(b: bool) -> Const:
    return Const(VBool(b))


def iconst(i: int) -> Const:
    return Const(VInt(i))


def rconst(r: float) -> Const:
    return Const(VReal(float(r)))


def sconst(name: str) -> Const:
    return Const(VSym(name))


def ref(name: str, index: Optional[int] = None) -> Ref:
    return Ref(VarRef(name, index))


def band(*xs: Expr) -> Expr:
    out = xs[0]
    for x in xs[1:]:
        out = Binary("and", out, x)
    return out


def bor(*xs: Expr) -> Expr:
    out = xs[0]
    for x in xs[1:]:
        out = Binary("or", out, x)
    return out


def bnot(x: Expr) -> Expr:
    return Unary("not", x)
